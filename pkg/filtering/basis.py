"""
Direct Fourier filtering.

A state is projected onto the span of the eigenvectors whose normalized
modulus h^2 |lambda|^2 / (K c^2) is at most gamma (K = 4 for FD, 12 for FEM).
The projection is oblique: P = sum_i v_i w_i^H over the retained modes, with
w_i the left eigenvectors scaled so that w_i^H v_j = delta_ij.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConditioningError, FilterTooAggressive, ParameterError, SizeError
from core.utils import get_setting
from core.validators import validate_gamma
from semidiscrete.params import Scheme, State
from spectral.oracle import dense_spectrum

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
BASES = ("damped", "undamped")


@dataclass(frozen=True)
class FilterSpec:
    """Filtering parameter gamma in (0, 1]; gamma = 1 keeps every mode"""
    gamma: float
    scheme: Scheme
    c: float = 1.0
    basis: str = "damped"

    def __post_init__(self):
        validate_gamma(self.gamma)
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.basis not in BASES:
            raise ParameterError("filter basis must be damped or undamped", basis=self.basis)

    @classmethod
    def for_params(cls, gamma, scheme, params, basis="damped"):
        return cls(gamma=gamma, scheme=scheme, c=params.c, basis=basis)

    @property
    def normalizer(self):
        """4c^2 (FD) or 12c^2 (FEM)"""
        return self.scheme.bound_constant * self.c ** 2

    @property
    def retains_all(self):
        return self.gamma >= 1.0


@dataclass(frozen=True)
class FilteredBasis:
    retained: tuple
    kappa: float
    gamma: float
    gamma_effective: float
    normalizer: float
    projector: np.ndarray
    condition: float
    spectrum: object

    @property
    def retained_count(self):
        return len(self.retained)

    @property
    def filtered_count(self):
        return len(self.spectrum) - self.retained_count

    @property
    def retained_pairs(self):
        """Retained modes with Im >= 0"""
        values = self.spectrum.values[list(self.retained)]
        return int(np.count_nonzero(values.imag >= 0))

    @property
    def is_identity(self):
        return self.filtered_count == 0

    @property
    def mask(self):
        mask = np.zeros(len(self.spectrum), dtype=bool)
        mask[list(self.retained)] = True
        return mask

    def check_conditioning(self):
        limit = get_setting("WAVESTAB_CONDITION_LIMIT", CONDITION_LIMIT)
        if self.condition > limit:
            logger.error(f"Eigenbasis condition {self.condition:.2e} exceeds {limit:.0e}")
            raise ConditioningError("eigenbasis too ill-conditioned for projection",
                                    condition=self.condition, limit=limit)

    def project_array(self, Y):
        """Project stacked first-order vectors (columns)"""
        self.check_conditioning()
        Y = np.asarray(Y, dtype=float)
        if Y.shape[0] != self.projector.shape[0]:
            raise SizeError("vector dimension does not match the basis", expected=self.projector.shape[0],
                            got=Y.shape[0])
        if self.is_identity:
            return Y.copy()
        return self.projector @ Y

    def report(self):
        return {
            "gamma": self.gamma,
            "gamma_effective": self.gamma_effective,
            "kappa": self.kappa,
            "retained": self.retained_count,
            "retained_pairs": self.retained_pairs,
            "filtered": self.filtered_count,
            "eigenvalues": len(self.spectrum),
            "condition": self.condition,
        }


def _dual_basis(spectrum):
    """Rows w_i^H with w_i^H v_j = delta_ij"""
    if spectrum.left_vectors is not None:
        return spectrum.left_vectors.conj().T
    return np.linalg.inv(spectrum.vectors)


def _close_under_conjugation(values, mask):
    closed = mask.copy()
    for index in np.flatnonzero(mask):
        partner = np.abs(values - np.conj(values[index])).argmin()
        closed[partner] = True
    return closed


def select_modes(spectrum, spec, mesh=None):
    """Retain the conjugate pairs with h^2|lambda|^2 / normalizer <= gamma"""
    mesh = mesh or spectrum.mesh
    if len(spectrum) != 2 * mesh.order:
        raise SizeError("filtering needs the complete spectrum", expected=2 * mesh.order, got=len(spectrum))

    values = spectrum.values
    raw = mesh.h ** 2 * np.abs(values) ** 2
    normalized = raw / spec.normalizer
    if spec.retains_all:
        mask = np.ones(values.size, dtype=bool)
    else:
        mask = _close_under_conjugation(values, normalized <= spec.gamma)
    if not mask.any():
        raise FilterTooAggressive("no mode lies below the filtering threshold", gamma=spec.gamma,
                                  smallest=float(normalized.min()))

    vectors = spectrum.vectors
    retained = tuple(int(index) for index in np.flatnonzero(mask))
    if mask.all():
        projector = np.eye(values.size)
    else:
        dual = _dual_basis(spectrum)
        projector = vectors[:, mask] @ dual[mask, :]
        imaginary = np.abs(projector.imag).max()
        if imaginary > 1e-8 * max(np.abs(projector.real).max(), 1.0):
            logger.warning(f"Projector has an imaginary part of {imaginary:.2e}")
        projector = np.ascontiguousarray(projector.real)

    kappa = float(raw[mask].max())
    basis = FilteredBasis(
        retained=retained,
        kappa=kappa,
        gamma=spec.gamma,
        gamma_effective=kappa / spec.normalizer,
        normalizer=spec.normalizer,
        projector=projector,
        condition=float(np.linalg.cond(vectors)),
        spectrum=spectrum,
    )
    logger.info(f"Filter gamma={spec.gamma:.6g}: retained {basis.retained_count} of {len(spectrum)} modes, "
                f"gamma_effective={basis.gamma_effective:.6g}")
    return basis


def project_state(basis, s):
    """Component of s in the retained eigenvector span"""
    if 2 * s.order != basis.projector.shape[0]:
        raise SizeError("state dimension does not match the basis", expected=basis.projector.shape[0] // 2,
                        got=s.order)
    return State.from_vector(basis.project_array(s.as_vector()))


def _pair_moduli(spectrum, normalizer):
    """Normalized moduli of the modes with Im >= 0, ascending"""
    values = spectrum.values
    upper = values[values.imag >= 0]
    return np.sort(spectrum.mesh.h ** 2 * np.abs(upper) ** 2 / normalizer)


def gamma_for_pair_count(spectrum, m, spec=None):
    """
    Threshold that retains exactly m conjugate pairs: the midpoint between the
    m-th and (m+1)-th normalized moduli, or 1 when every pair is kept.
    """
    normalizer = spec.normalizer if spec is not None else spectrum.scheme.bound_constant * spectrum.params.c ** 2
    moduli = _pair_moduli(spectrum, normalizer)
    if int(m) != m or not 1 <= m <= moduli.size:
        raise SizeError("pair count out of range", m=m, pairs=moduli.size)
    m = int(m)
    if m == moduli.size:
        return 1.0
    return float(0.5 * (moduli[m - 1] + moduli[m]))


def filter_for_model(model, spec, spectrum=None):
    """
    Build the filter of `model`: on its own damped eigenvectors, or on the
    xi = 0 eigenvectors of the same scheme when spec.basis is "undamped".
    """
    if spec.basis == "undamped":
        spectrum = dense_spectrum(model.with_gain(0.0))
    elif spectrum is None:
        spectrum = dense_spectrum(model)
    return select_modes(spectrum, spec, model.mesh)
