from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from core.exceptions import ParameterError, SizeError
from core.validators import validate_node_count, validate_non_negative, validate_positive


class Scheme(str, Enum):
    """Spatial discretization"""
    FD = "FD"
    FEM = "FEM"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError("unknown scheme, expected FD or FEM", scheme=value) from None

    @property
    def bound_constant(self):
        """Envelope constant of h^2|lambda|^2 / c^2: 4 for FD, 12 for FEM"""
        return 4.0 if self is Scheme.FD else 12.0


@dataclass(frozen=True)
class PhysicalParams:
    """Wave speed, domain length and boundary feedback gain"""
    c: float = 1.0
    L: float = 1.0
    xi: float = 0.0

    def __post_init__(self):
        validate_positive(self.c, "c")
        validate_positive(self.L, "L")
        validate_non_negative(self.xi, "xi")

    @property
    def sub_characteristic(self):
        return self.xi < self.c

    def with_gain(self, xi):
        return PhysicalParams(c=self.c, L=self.L, xi=xi)


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of [0, L] with N interior nodes and the free node x_{N+1} = L"""
    N: int
    L: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "N", validate_node_count(self.N))
        validate_positive(self.L, "L")

    @classmethod
    def for_params(cls, N, params):
        return cls(N=N, L=params.L)

    @classmethod
    def from_spacing(cls, h, L=1.0):
        """Mesh whose spacing is h; L/h - 1 must be an integer node count"""
        validate_positive(h, "h")
        count = round(L / h) - 1
        if not np.isclose((count + 1) * h, L, rtol=1e-12, atol=0.0):
            raise SizeError("spacing does not divide the domain", h=h, L=L)
        return cls(N=count, L=L)

    @property
    def h(self):
        return self.L / (self.N + 1)

    @property
    def order(self):
        """Unknowns v_1..v_{N+1}"""
        return self.N + 1

    @property
    def nodes(self):
        """x_0..x_{N+1}; x_0 = 0 is clamped and never stored in a State"""
        return np.arange(self.N + 2) * self.h


@dataclass(frozen=True)
class State:
    """Nodal displacement and velocity, entries 1..N+1 (v_0 = 0 is implicit)"""
    v: np.ndarray
    vdot: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        vdot = np.zeros_like(v) if self.vdot is None else np.asarray(self.vdot, dtype=float)
        if v.ndim != 1 or v.shape != vdot.shape:
            raise SizeError("displacement and velocity must be vectors of equal length",
                            v=v.shape, vdot=vdot.shape)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "vdot", vdot)

    @classmethod
    def zeros(cls, order):
        return cls(np.zeros(order), np.zeros(order))

    @classmethod
    def from_vector(cls, y):
        y = np.real_if_close(np.asarray(y))
        if y.ndim != 1 or y.size % 2:
            raise SizeError("first-order vector must have even length", size=y.size)
        half = y.size // 2
        return cls(np.real(y[:half]), np.real(y[half:]))

    @property
    def order(self):
        return self.v.size

    def as_vector(self):
        return np.concatenate([self.v, self.vdot])

    def norm(self):
        return float(np.linalg.norm(self.as_vector()))

    def __add__(self, other):
        return State(self.v + other.v, self.vdot + other.vdot)

    def scaled(self, factor):
        return State(factor * self.v, factor * self.vdot)
