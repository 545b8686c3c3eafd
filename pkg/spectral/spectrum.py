"""Eigenpairs and spectra shared by the closed-form, root and dense routes."""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from core.exceptions import ConsistencyError


class Provenance(str, Enum):
    CLOSED_FORM = "closed-form"
    POLYNOMIAL_ROOT = "polynomial-root"
    DENSE_ORACLE = "dense-oracle"


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with an optional unit eigenvector"""
    value: complex
    vec: np.ndarray = None
    provenance: Provenance = Provenance.DENSE_ORACLE
    residual: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        if self.vec is not None:
            vec = np.asarray(self.vec, dtype=complex)
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
            object.__setattr__(self, "vec", vec)


@dataclass(frozen=True)
class FormulaCheck:
    """Closed-form values against a dense oracle"""
    name: str
    formula: np.ndarray
    oracle: np.ndarray
    tolerance: float = 1e-8

    @property
    def gaps(self):
        return np.abs(self.formula - self.oracle) / np.maximum(np.abs(self.oracle), np.finfo(float).tiny)

    @property
    def max_relative_gap(self):
        return float(self.gaps.max())

    @property
    def valid(self):
        return self.max_relative_gap <= self.tolerance

    def report(self):
        return {
            "name": self.name,
            "max_relative_gap": self.max_relative_gap,
            "formula_valid": self.valid,
            "count": int(self.formula.size),
        }


def _sort_key(pair):
    return (round(pair.value.imag, 12), round(pair.value.real, 12))


@dataclass(frozen=True)
class Spectrum:
    """
    Eigenpairs sorted by imaginary part.

    `left_vectors` holds the matching left eigenvectors (columns) when the
    spectrum came from the dense oracle; `checks` carries formula-validity
    reports for closed forms.
    """
    pairs: tuple
    scheme: object
    params: object
    mesh: object
    left_vectors: np.ndarray = None
    checks: tuple = field(default=())

    @classmethod
    def build(cls, pairs, scheme, params, mesh, left_vectors=None, checks=()):
        order = sorted(range(len(pairs)), key=lambda index: _sort_key(pairs[index]))
        pairs = tuple(pairs[index] for index in order)
        if left_vectors is not None:
            left_vectors = np.asarray(left_vectors)[:, order]
        return cls(pairs, scheme, params, mesh, left_vectors, tuple(checks))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def values(self):
        return np.array([pair.value for pair in self.pairs])

    @property
    def vectors(self):
        """Right eigenvectors as columns"""
        return np.column_stack([pair.vec for pair in self.pairs])

    @property
    def residuals(self):
        return np.array([pair.residual for pair in self.pairs])

    @property
    def provenance(self):
        return {pair.provenance for pair in self.pairs}

    def max_real_part(self):
        return float(self.values.real.max())

    def upper_half(self):
        """Eigenvalues with Im >= 0 sorted by |Im|"""
        values = self.values
        upper = values[values.imag >= 0]
        return upper[np.argsort(upper.imag, kind="stable")]

    def is_conjugate_closed(self, decimals=10):
        values = self.values
        scale = max(np.abs(values).max(), 1.0)
        rounded = np.round(values / scale, decimals)
        return sorted(zip(rounded.real, rounded.imag)) == sorted(zip(rounded.real, -rounded.imag))

    def normalized_moduli(self):
        """h^2 |lambda|^2 / (bound constant c^2), the filtering coordinate"""
        h = self.mesh.h
        normalizer = self.scheme.bound_constant * self.params.c ** 2
        return h ** 2 * np.abs(self.values) ** 2 / normalizer


@dataclass(frozen=True)
class Matching:
    """Index pairs between two eigenvalue lists with their relative gaps"""
    left: np.ndarray
    right: np.ndarray
    gaps: np.ndarray
    method: str

    @property
    def max_gap(self):
        return float(self.gaps.max()) if self.gaps.size else 0.0


def match_eigenvalues(a, b, cap=1e-4):
    """
    Pair two eigenvalue lists one-to-one.

    Greedy nearest-neighbour matching is tried first; if two values claim the
    same partner or a gap exceeds `cap`, the optimal assignment on |a_i - b_j|
    is used instead.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        raise ConsistencyError("eigenvalue lists differ in length", left=a.size, right=b.size)

    distance = np.abs(a[:, None] - b[None, :])
    scale = np.maximum(np.abs(b), 1.0)
    nearest = distance.argmin(axis=1)
    rows = np.arange(a.size)
    gaps = distance[rows, nearest] / scale[nearest]
    method = "greedy"
    if np.unique(nearest).size != a.size or (gaps.size and gaps.max() > cap):
        rows, nearest = linear_sum_assignment(distance)
        gaps = distance[rows, nearest] / scale[nearest]
        method = "assignment"
    return Matching(rows, nearest, gaps, method)
