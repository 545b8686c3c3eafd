"""
Assembly of the FD and FEM semi-discrete systems.

Both schemes share the stiffness stencil (c^2/h^2) tridiag(-1, 2, -1) with the
last row (-1, 1), of order N+1. They differ in the mass matrix (identity for
FD, the P1 consistent mass for FEM). The boundary feedback enters only the
last velocity equation:

    M v'' + A v = B v',   B = diag(0, ..., 0, -xi/h).

The control-free system is the xi = 0 special case.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from core.exceptions import ParameterError, SizeError
from core.validators import validate_node_count

from .params import Mesh, PhysicalParams, Scheme, State

logger = logging.getLogger(__name__)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Tridiagonal:
    """Tridiagonal matrix stored as three diagonals"""
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def order(self):
        return self.diag.size

    def matvec(self, x):
        """A @ x for x of shape (n,) or (n, k)"""
        x = np.asarray(x)
        out = self.diag.reshape((-1,) + (1,) * (x.ndim - 1)) * x
        off_up = self.upper.reshape((-1,) + (1,) * (x.ndim - 1))
        off_lo = self.lower.reshape((-1,) + (1,) * (x.ndim - 1))
        out[:-1] += off_up * x[1:]
        out[1:] += off_lo * x[:-1]
        return out

    def banded(self):
        """(3, n) layout expected by scipy.linalg.solve_banded"""
        ab = np.zeros((3, self.order))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        return ab

    def solve(self, rhs):
        return solve_banded((1, 1), self.banded(), rhs)

    def dense(self):
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def scaled(self, factor):
        return Tridiagonal(_frozen(factor * self.lower), _frozen(factor * self.diag),
                           _frozen(factor * self.upper))


def _stiffness_stencil(order):
    """tridiag(-1, 2, -1) with the last diagonal entry 1"""
    diag = np.full(order, 2.0)
    diag[-1] = 1.0
    off = np.full(order - 1, -1.0)
    return Tridiagonal(_frozen(off), _frozen(diag), _frozen(off))


def _fem_mass(order):
    diag = np.full(order, 2.0 / 3.0)
    diag[-1] = 1.0 / 3.0
    off = np.full(order - 1, 1.0 / 6.0)
    return Tridiagonal(_frozen(off), _frozen(diag), _frozen(off))


def _identity(order):
    off = np.zeros(order - 1)
    return Tridiagonal(_frozen(off), _frozen(np.ones(order)), _frozen(off))


@dataclass(frozen=True)
class SemiDiscreteModel:
    """Assembled semi-discrete system; immutable after build_model"""
    scheme: Scheme
    params: PhysicalParams
    mesh: Mesh
    stiffness: Tridiagonal
    mass: Tridiagonal

    @property
    def order(self):
        return self.mesh.order

    @property
    def h(self):
        return self.mesh.h

    @property
    def damping_entry(self):
        """B_{N+1,N+1} = -xi/h, the only non-zero entry of the damping block"""
        return -self.params.xi / self.mesh.h

    @property
    def identity_mass(self):
        return self.scheme is Scheme.FD

    def stiffness_dense(self):
        return self.stiffness.dense()

    def mass_dense(self):
        return self.mass.dense()

    def solve_mass(self, rhs):
        """M^{-1} rhs; a no-op for FD"""
        rhs = np.asarray(rhs)
        if self.identity_mass:
            return np.array(rhs, dtype=np.result_type(rhs, float), copy=True)
        return self.mass.solve(rhs)

    def damping_force(self, vdot):
        """B v' for vdot of shape (n,) or (n, k)"""
        vdot = np.asarray(vdot)
        force = np.zeros_like(vdot, dtype=np.result_type(vdot, float))
        force[-1] = self.damping_entry * vdot[-1]
        return force

    def acceleration(self, v, vdot):
        return self.solve_mass(-self.stiffness.matvec(v) + self.damping_force(vdot))

    def rhs(self, y):
        """First-order right-hand side for stacked vectors y = (v, v')"""
        n = self.order
        if y.shape[0] != 2 * n:
            raise SizeError("state dimension does not match the model", expected=2 * n, got=y.shape[0])
        v, vdot = y[:n], y[n:]
        return np.concatenate([vdot, self.acceleration(v, vdot)], axis=0)

    def with_gain(self, xi):
        return build_model(self.scheme, self.params.with_gain(xi), self.mesh)

    def __str__(self):
        return f"{self.scheme.value} model N={self.mesh.N} c={self.params.c} L={self.params.L} xi={self.params.xi}"


def build_model(scheme, params, mesh):
    """Assemble the order-(N+1) stiffness, mass and damping of one scheme"""
    scheme = Scheme.parse(scheme)
    if not isinstance(params, PhysicalParams):
        raise ParameterError("params must be PhysicalParams")
    validate_node_count(mesh.N)
    if not np.isclose(mesh.L, params.L, rtol=1e-14, atol=0.0):
        raise ParameterError("mesh and params disagree on the domain length", mesh_L=mesh.L, L=params.L)

    order = mesh.order
    scale = params.c ** 2 / mesh.h ** 2
    stiffness = _stiffness_stencil(order).scaled(scale)
    mass = _identity(order) if scheme is Scheme.FD else _fem_mass(order)

    model = SemiDiscreteModel(scheme=scheme, params=params, mesh=mesh, stiffness=stiffness, mass=mass)
    logger.debug(f"Built {model}")
    return model


def control_free_stiffness(params, mesh):
    """The order-N control-free matrix (c^2/h^2) tridiag(-1, 2, -1), last row (-1, 1)"""
    validate_node_count(mesh.N)
    return _stiffness_stencil(mesh.N).scaled(params.c ** 2 / mesh.h ** 2)


def _check_state(model, s):
    if s.order != model.order:
        raise SizeError("state dimension does not match the model", expected=model.order, got=s.order)


def apply_operator(model, s):
    """Matrix-free (v', M^{-1}(-A v + B v')); returns the state derivative"""
    _check_state(model, s)
    return State(s.vdot.copy(), model.acceleration(s.v, s.vdot))


def assemble_dense_operator(model):
    """Explicit first-order operator [[0, I], [-M^{-1}A, M^{-1}B]] of order 2(N+1)"""
    n = model.order
    minv_a = model.solve_mass(model.stiffness_dense())
    damping = np.zeros((n, n))
    damping[-1, -1] = model.damping_entry
    minv_b = model.solve_mass(damping)

    operator = np.zeros((2 * n, 2 * n))
    operator[:n, n:] = np.eye(n)
    operator[n:, :n] = -minv_a
    operator[n:, n:] = minv_b
    return operator
