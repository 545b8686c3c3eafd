"""Time integration of the semi-discrete systems: classical RK4 and modal-exact propagation."""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConditioningError, ParameterError, SizeError, StepSizeError
from core.utils import get_setting
from core.validators import validate_positive
from filtering.basis import CONDITION_LIMIT
from semidiscrete.params import State
from spectral.oracle import dense_spectrum

from .energy import energy_of_vectors

logger = logging.getLogger(__name__)

METHODS = ("rk4", "modal-exact")
BLOW_UP_FACTOR = 10.0


@dataclass(frozen=True)
class Trajectory:
    """States sampled at multiples of dt; V and Vdot are (samples, N+1)"""
    times: np.ndarray
    V: np.ndarray
    Vdot: np.ndarray
    method: str
    model: object

    def __len__(self):
        return self.times.size

    def state(self, index):
        return State(self.V[index], self.Vdot[index])

    def stacked(self):
        """(samples, 2(N+1)) first-order vectors"""
        return np.hstack([self.V, self.Vdot])

    @property
    def final(self):
        return self.state(-1)


def default_step(model):
    """h / (10 c)"""
    return model.h / (10 * model.params.c)


def sample_times(T, dt):
    validate_positive(T, "T")
    validate_positive(dt, "dt")
    steps = int(np.ceil(T / dt - 1e-9))
    return np.arange(steps + 1) * dt


def _rk4(model, y0, times, dt):
    n = model.order
    samples = np.empty((times.size, 2 * n))
    samples[0] = y0
    y = y0.copy()
    e0 = float(energy_of_vectors(model, y0))
    for step in range(1, times.size):
        k1 = model.rhs(y)
        k2 = model.rhs(y + dt / 2 * k1)
        k3 = model.rhs(y + dt / 2 * k2)
        k4 = model.rhs(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        samples[step] = y
        e = float(energy_of_vectors(model, y))
        if not np.isfinite(e) or (e0 > 0 and e > BLOW_UP_FACTOR * e0):
            limit = model.h / (5 * model.params.c)
            logger.error(f"RK4 blew up at t={times[step]:.4g} with dt={dt:.3e} for {model}")
            raise StepSizeError(f"explicit integration unstable; use dt <= h/(5c) = {limit:.3e}",
                                dt=dt, t=float(times[step]))
    return samples


def modal_coefficients(spectrum, y0, project=None):
    """Expansion of y0 in the eigenbasis, with non-retained modes zeroed"""
    limit = get_setting("WAVESTAB_CONDITION_LIMIT", CONDITION_LIMIT)
    vectors = spectrum.vectors
    condition = float(np.linalg.cond(vectors))
    if condition > limit:
        raise ConditioningError("eigenbasis too ill-conditioned for modal propagation",
                                condition=condition, limit=limit)
    if spectrum.left_vectors is not None:
        coefficients = spectrum.left_vectors.conj().T @ y0
    else:
        coefficients = np.linalg.solve(vectors, y0)
    if project is not None and not project.is_identity:
        coefficients = np.where(project.mask, coefficients, 0.0)
    return coefficients


def _own_spectrum(model, project):
    if project is not None:
        own = project.spectrum
        if own.scheme is model.scheme and own.params == model.params and own.mesh == model.mesh:
            return own
    return dense_spectrum(model)


def _modal_exact(model, y0, times, spectrum, project):
    if spectrum is None:
        spectrum = _own_spectrum(model, project)
    if project is not None and project.spectrum is not spectrum:
        # basis built on another operator: project first, then propagate every mode
        y0 = project.project_array(y0)
        project = None
    if len(spectrum) != y0.size:
        raise SizeError("spectrum does not match the model", expected=y0.size, got=len(spectrum))
    residual = np.nanmax(spectrum.residuals)
    if residual > get_setting("WAVESTAB_RESIDUAL_TOL", 1e-8):
        raise ParameterError("modal-exact needs eigenpairs with residuals <= 1e-8", residual=float(residual))

    values = spectrum.values
    if model.params.xi == 0:
        # the control-free operator is skew in the energy inner product
        values = 1j * values.imag
    coefficients = modal_coefficients(spectrum, y0, project)
    phases = np.exp(np.outer(times, values)) * coefficients
    return np.real(phases @ spectrum.vectors.T)


def integrate(model, s0, T, dt=None, method="rk4", spectrum=None, project=None):
    """
    Sample the trajectory from s0 at t = 0, dt, 2dt, ... up to T.

    `project` (a FilteredBasis) restricts the initial state to the retained
    modes: rk4 starts from the projected state, modal-exact drops the other
    modal coefficients.
    """
    if method not in METHODS:
        raise ParameterError("unknown integrator", method=method, choices=METHODS)
    if s0.order != model.order:
        raise SizeError("initial state does not match the model", expected=model.order, got=s0.order)
    dt = dt or default_step(model)
    times = sample_times(T, dt)
    y0 = s0.as_vector()

    if method == "rk4":
        if project is not None and not project.is_identity:
            y0 = project.project_array(y0)
        samples = _rk4(model, y0, times, dt)
    else:
        samples = _modal_exact(model, y0, times, spectrum, project)

    n = model.order
    logger.info(f"Integrated {model} with {method}: {times.size} samples, dt={dt:.3e}, T={times[-1]:.4g}")
    return Trajectory(times=times, V=samples[:, :n], Vdot=samples[:, n:], method=method, model=model)
