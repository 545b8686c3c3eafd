"""
Discrete energy, dissipation and Lyapunov functionals.

Both schemes use E = (h/2)(v'^T M v' + v^T A v), which satisfies
dE/dt = -xi |v'_{N+1}|^2 exactly along the semi-discrete flow.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ParameterError
from core.validators import validate_delta
from semidiscrete.params import Scheme

logger = logging.getLogger(__name__)


def _split(model, Y):
    """(V, Vdot) as (n, k) column blocks from a (2n,) or (2n, k) array"""
    Y = np.asarray(Y, dtype=float)
    n = model.order
    return Y[:n], Y[n:]


def _energy_columns(model, V, Vdot):
    kinetic = np.sum(Vdot * model.mass.matvec(Vdot), axis=0)
    potential = np.sum(V * model.stiffness.matvec(V), axis=0)
    return model.h / 2 * (kinetic + potential)


def _fem_energy_from_first_node(model, V, Vdot):
    """FEM energy summed from j = 1, dropping the first cell"""
    h, c = model.h, model.params.c
    cells = Vdot[:-1] + Vdot[1:]
    slopes = (V[1:] - V[:-1]) / h
    total = Vdot[-1] ** 2 + np.sum(2 * Vdot[:-1] ** 2 + cells ** 2 + 6 * c ** 2 * slopes ** 2, axis=0)
    return h / 12 * total


def energy(model, s, skip_first_cell=False):
    """Discrete energy of one state; `skip_first_cell` selects the FEM sum from j = 1"""
    Y = s.as_vector()
    return float(energy_of_vectors(model, Y, skip_first_cell=skip_first_cell))


def energy_of_vectors(model, Y, skip_first_cell=False):
    V, Vdot = _split(model, Y)
    if skip_first_cell:
        if model.scheme is not Scheme.FEM:
            raise ParameterError("the energy variant without the first cell exists for FEM only")
        return _fem_energy_from_first_node(model, V, Vdot)
    return _energy_columns(model, V, Vdot)


def _multiplier_matrix(model):
    """
    Matrix G with F = v'^T G v - beta |v'_{N+1}|^2.

    The interior rows carry x_j (v_{j+1} - v_{j-1})/2 (v_0 = 0). FD closes
    with (L/2)(v_{N+1} - v_N) v'_{N+1}; FEM weights by the mass rows and
    closes with (L/6)(2 v'_{N+1} + v'_N)(v_{N+1} - v_N).
    """
    n, h, L = model.order, model.h, model.params.L
    C = np.zeros((n, n))
    for row in range(n - 1):
        weight = (row + 1) * h / 2
        C[row, row + 1] += weight
        if row > 0:
            C[row, row - 1] -= weight
    closing = L / 2 if model.scheme is Scheme.FD else L
    C[-1, -1] += closing
    C[-1, -2] -= closing
    if model.scheme is Scheme.FD:
        return C
    return model.mass_dense() @ C


def _boundary_penalty(model):
    """beta = L xi h / (4 c^2) for FD, 0 for FEM"""
    if model.scheme is Scheme.FD:
        return model.params.L * model.params.xi * model.h / (4 * model.params.c ** 2)
    return 0.0


def multiplier(model, s):
    """Auxiliary cross term F of the Lyapunov functional"""
    v, vdot = s.v, s.vdot
    h, L = model.h, model.params.L
    padded = np.concatenate([[0.0], v])
    x = np.arange(1, model.order) * h
    central = (padded[2:] - padded[:-2]) / 2
    if model.scheme is Scheme.FD:
        interior = np.sum(x * vdot[:-1] * central)
        closing = L / 2 * (v[-1] - v[-2]) * vdot[-1]
        return float(interior + closing - _boundary_penalty(model) * vdot[-1] ** 2)
    weighted = model.mass.matvec(vdot)
    interior = h * np.sum(weighted[:-1] * (x / h) * central)
    closing = L / 6 * (2 * vdot[-1] + vdot[-2]) * (v[-1] - v[-2])
    return float(interior + closing)


@dataclass(frozen=True)
class LyapunovValue:
    energy: float
    multiplier: float
    value: float

    def __iter__(self):
        return iter((self.energy, self.multiplier, self.value))


def lyapunov(model, s, delta):
    """(E, F, L = E + delta F) for 0 < delta < c/L"""
    validate_delta(delta, model.params.c, model.params.L)
    e = energy(model, s)
    f = multiplier(model, s)
    return LyapunovValue(e, f, e + delta * f)


def lyapunov_matrix(model, delta):
    """Symmetric Q with L(y) = y^T Q y"""
    validate_delta(delta, model.params.c, model.params.L)
    n, h = model.order, model.h
    G = _multiplier_matrix(model)
    Q = np.zeros((2 * n, 2 * n))
    Q[:n, :n] = h / 2 * model.stiffness_dense()
    Q[n:, n:] = h / 2 * model.mass_dense()
    Q[n:, n:][-1, -1] -= delta * _boundary_penalty(model)
    Q[n:, :n] += delta / 2 * G
    Q[:n, n:] += delta / 2 * G.T
    return Q


def lyapunov_rate(model, s, delta, Q=None):
    """Exact dL/dt = 2 (Q y)^T (A y) along the flow through s"""
    Q = lyapunov_matrix(model, delta) if Q is None else Q
    y = s.as_vector()
    return float(2 * (Q @ y) @ model.rhs(y))


@dataclass(frozen=True)
class EnergyTrace:
    """Energy samples with the boundary observation v'_{N+1} and tip displacement v_{N+1}"""
    times: np.ndarray
    E: np.ndarray
    boundary_obs: np.ndarray
    tip: np.ndarray
    lyapunov: np.ndarray = None

    def __len__(self):
        return self.times.size

    @property
    def horizon(self):
        return float(self.times[-1] - self.times[0])

    def rows(self):
        """t, E, v_tip, vdot_tip, L_delta"""
        lyap = self.lyapunov if self.lyapunov is not None else np.full(self.times.size, np.nan)
        return zip(self.times, self.E, self.tip, self.boundary_obs, lyap)


def energy_trace(model, trajectory, delta=None, skip_first_cell=False):
    Y = trajectory.stacked().T
    E = energy_of_vectors(model, Y, skip_first_cell=skip_first_cell)
    values = None
    if delta is not None:
        Q = lyapunov_matrix(model, delta)
        values = np.einsum("ik,ij,jk->k", Y, Q, Y)
    if np.any(E < -1e-14 * max(E.max(), 1.0)):
        logger.warning(f"Negative energy sample {E.min():.3e} in {model}")
    return EnergyTrace(
        times=trajectory.times,
        E=E,
        boundary_obs=trajectory.Vdot[:, -1].copy(),
        tip=trajectory.V[:, -1].copy(),
        lyapunov=values,
    )


def lyapunov_trace(model, trajectory, delta):
    return energy_trace(model, trajectory, delta=delta).lyapunov


def _check_uniform(times):
    steps = np.diff(times)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ParameterError("dissipation residual needs a uniformly sampled trace")
    return float(steps[0])


def dissipation_residual(trace, xi, order=2):
    """
    max |dE/dt + xi |v'_{N+1}|^2| over interior samples, divided by E(0)/T.

    order=2 is the central difference; order=4 the five-point stencil.
    """
    dt = _check_uniform(trace.times)
    E = trace.E
    if order == 2:
        if E.size < 3:
            raise ParameterError("trace too short for a central difference", samples=E.size)
        derivative = (E[2:] - E[:-2]) / (2 * dt)
        obs = trace.boundary_obs[1:-1]
    elif order == 4:
        if E.size < 5:
            raise ParameterError("trace too short for the five-point stencil", samples=E.size)
        derivative = (-E[4:] + 8 * E[3:-1] - 8 * E[1:-3] + E[:-4]) / (12 * dt)
        obs = trace.boundary_obs[2:-2]
    else:
        raise ParameterError("difference order must be 2 or 4", order=order)
    residual = np.abs(derivative + xi * obs ** 2).max()
    scale = E[0] / trace.horizon
    if scale <= 0:
        return float(residual)
    return float(residual / scale)
