"""
Modulus envelopes of the damped spectra.

h^2 |lambda_j|^2 <= K c^2 sin^2(2 j pi/(4N+5)) + O(h), K = 4 (FD) or 12 (FEM),
and h |Re lambda_j| = O(h). The O(h) constant is fitted across resolutions.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from semidiscrete.params import Scheme

logger = logging.getLogger(__name__)

CONSISTENCY_SPREAD = 2.0


def _envelope(spectrum, scheme):
    """Upper-half eigenvalues sorted by |Im| with their envelope values"""
    mesh, c = spectrum.mesh, spectrum.params.c
    upper = spectrum.upper_half()
    j = np.arange(upper.size)
    envelope = Scheme.parse(scheme).bound_constant * c ** 2 * np.sin(2 * j * np.pi / (4 * mesh.N + 5)) ** 2
    return upper, envelope


def envelope_excess(spectrum, scheme):
    """h^2 |lambda_j|^2 - K c^2 sin^2(2 j pi/(4N+5)) for the upper half"""
    upper, envelope = _envelope(spectrum, scheme)
    return spectrum.mesh.h ** 2 * np.abs(upper) ** 2 - envelope


@dataclass(frozen=True)
class EnvelopeFit:
    """O(h) constant of the modulus envelope across meshes"""
    constant: float
    per_mesh: dict = field(default_factory=dict)

    @property
    def spread(self):
        positive = [value for value in self.per_mesh.values() if value > 0]
        if len(positive) < 2:
            return 1.0
        return max(positive) / min(positive)

    @property
    def consistent(self):
        return self.spread <= CONSISTENCY_SPREAD


def fit_envelope_constant(spectra, scheme):
    """C_N = max_j excess_j / h per mesh; C is the largest C_N"""
    per_mesh = {}
    for spectrum in spectra:
        excess = envelope_excess(spectrum, scheme)
        per_mesh[spectrum.mesh.N] = float(max(excess.max(), 0.0) / spectrum.mesh.h)
    fit = EnvelopeFit(constant=max(per_mesh.values()), per_mesh=dict(sorted(per_mesh.items())))
    if not fit.consistent:
        logger.warning(f"Envelope constant varies by {fit.spread:.2f}x across meshes {list(per_mesh)}; "
                       f"the excess may not be O(h)")
    return fit


@dataclass(frozen=True)
class BoundReport:
    N: int
    scheme: str
    constant: float
    min_slack: float
    violations: int
    max_h_real: float
    max_normalized_modulus: float

    @property
    def holds(self):
        return self.violations == 0

    def as_dict(self):
        return {
            "N": self.N,
            "scheme": self.scheme,
            "constant": self.constant,
            "min_slack": self.min_slack,
            "violations": self.violations,
            "max_h_real": self.max_h_real,
            "max_normalized_modulus": self.max_normalized_modulus,
        }


def check_modulus_bounds(spectrum, scheme, constant=None, tolerance=1e-10):
    """
    slack_j = K c^2 sin^2(2 j pi/(4N+5)) + C h - h^2 |lambda_j|^2.

    A negative slack is reported as a violation; it never raises. Without an
    explicit constant the spectrum's own C_N is used.
    """
    scheme = Scheme.parse(scheme)
    h = spectrum.mesh.h
    if constant is None:
        constant = fit_envelope_constant([spectrum], scheme).constant
    excess = envelope_excess(spectrum, scheme)
    slack = constant * h - excess
    violations = int(np.count_nonzero(slack < -tolerance))
    report = BoundReport(
        N=spectrum.mesh.N,
        scheme=scheme.value,
        constant=float(constant),
        min_slack=float(slack.min()),
        violations=violations,
        max_h_real=float(h * np.abs(spectrum.values.real).max()),
        max_normalized_modulus=float(spectrum.normalized_moduli().max()),
    )
    if violations:
        logger.warning(f"{violations} eigenvalues exceed the {scheme.value} modulus envelope at N={report.N}")
    return report


def real_part_formula(model, value, vec):
    """
    Re(lambda) from the eigenpair's energy balance.

    For (u, lambda u): lambda^2 u^H M u + lambda (xi/h)|u_{N+1}|^2 + u^H A u = 0,
    so Re(lambda) = -(xi/h)|u_{N+1}|^2 / (2 u^H M u). The closed quotient
    written with an unconjugated u^T A u is returned alongside for comparison.
    """
    n = model.order
    u = np.asarray(vec)[:n]
    tip = abs(u[-1]) ** 2
    mass_norm = np.real(np.vdot(u, model.mass.matvec(u)))
    balance = -(model.params.xi / model.h) * tip / (2 * mass_norm)

    stiffness_form = u @ model.stiffness.matvec(u)
    denominator = model.h * model.params.c * (abs(value) ** 2 * np.vdot(u, u).real - stiffness_form)
    quotient = -model.params.L * model.params.xi * abs(value) ** 2 * tip / denominator
    logger.debug(f"Re lambda = {value.real:.6e}, energy balance {balance:.6e}, quotient {quotient:.6e}")
    return {"value": float(value.real), "balance": float(balance), "quotient": complex(quotient)}
