"""
Decay-rate predictions and their empirical counterparts.

Discrete scheme, filtered to Gamma:
    delta = (c/2L) min(1, 2 xi c/(c^2 + xi^2)),
    sigma = delta (1 - L delta/c)(1 - Gamma),
    E(t) <= (c + delta L)/(c - delta L) E(0) exp(-sigma t).
Continuous problem:
    delta = (1/2) min(c/2L, xi c^2/(L(c^2 + xi^2))),
    sigma = 2 delta (1 - 2 L delta/c), M = (c + 2 L delta)/(c - 2 L delta).
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import DomainError, ParameterError
from core.validators import validate_sub_characteristic
from semidiscrete.params import Scheme

logger = logging.getLogger(__name__)

FIT_WINDOW = (0.1, 0.9)
MIN_ENVELOPE_POINTS = 3

# published reference values for the N = 30, xi = 0.9 desk runs
REFERENCE_DESK_VALUES = {
    Scheme.FEM: {"gamma": 1.4133, "sigma_max": 0.2205},
    Scheme.FD: {"gamma": 1.017, "sigma_max": 0.1864},
}


@dataclass(frozen=True)
class PdeDecay:
    delta: float
    sigma: float
    overshoot: float


@dataclass(frozen=True)
class DecayPrediction:
    """(delta, sigma, M) for one gain and filtering level"""
    delta: float
    sigma: float
    overshoot: float
    gamma: float
    kappa: float
    scheme: Scheme
    pde: PdeDecay = None

    @property
    def degenerate(self):
        """Gamma >= 1 leaves no guaranteed decay"""
        return self.sigma <= 0

    def envelope(self, times, e0):
        return self.overshoot * e0 * np.exp(-self.sigma * np.asarray(times))

    def as_dict(self):
        payload = {
            "delta": self.delta,
            "sigma": self.sigma,
            "overshoot": self.overshoot,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "degenerate": self.degenerate,
        }
        if self.pde is not None:
            payload["pde"] = {"delta": self.pde.delta, "sigma": self.pde.sigma, "overshoot": self.pde.overshoot}
        return payload


def discrete_delta(params):
    c, L, xi = params.c, params.L, params.xi
    return c / (2 * L) * min(1.0, 2 * xi * c / (c ** 2 + xi ** 2))


def pde_decay_prediction(params):
    """Decay constants of the continuous problem, 0 < xi <= c"""
    validate_sub_characteristic(params.xi, params.c, allow_equal=True)
    c, L, xi = params.c, params.L, params.xi
    delta = 0.5 * min(c / (2 * L), xi * c ** 2 / (L * (c ** 2 + xi ** 2)))
    sigma = 2 * delta * (1 - 2 * L * delta / c)
    overshoot = (c + 2 * L * delta) / (c - 2 * L * delta)
    return PdeDecay(delta, sigma, overshoot)


def decay_prediction(params, gamma, scheme, kappa=None):
    """
    Discrete (delta, sigma, M) for 0 < xi <= c, plus the continuous triple.

    Gamma >= 1 is accepted and flagged as degenerate (sigma <= 0).
    """
    scheme = Scheme.parse(scheme)
    validate_sub_characteristic(params.xi, params.c, allow_equal=True)
    if not np.isfinite(gamma) or gamma <= 0:
        raise ParameterError("filtering parameter must be positive", gamma=gamma)
    c, L = params.c, params.L
    delta = discrete_delta(params)
    sigma = delta * (1 - L * delta / c) * (1 - gamma)
    overshoot = (c + delta * L) / (c - delta * L)
    if kappa is None:
        kappa = gamma * scheme.bound_constant * c ** 2
    prediction = DecayPrediction(
        delta=delta,
        sigma=sigma,
        overshoot=overshoot,
        gamma=float(gamma),
        kappa=float(kappa),
        scheme=scheme,
        pde=pde_decay_prediction(params),
    )
    if prediction.degenerate:
        logger.warning(f"Gamma={gamma:.4g} >= 1: no guaranteed decay for {scheme.value} (sigma={sigma:.4g})")
    return prediction


def optimal_gain(params, gamma=0.0):
    """delta is maximal at xi = c, where sigma_max = (c/4L)(1 - Gamma)"""
    best = params.with_gain(params.c)
    delta = discrete_delta(best)
    return {
        "xi": best.xi,
        "delta": delta,
        "sigma_max": delta * (1 - params.L * delta / params.c) * (1 - gamma),
    }


def reference_comparison(scheme, sigma, gamma):
    """Recomputed sigma and Gamma next to the published desk values"""
    reference = REFERENCE_DESK_VALUES[Scheme.parse(scheme)]
    row = {
        "scheme": Scheme.parse(scheme).value,
        "gamma": gamma,
        "gamma_reference": reference["gamma"],
        "gamma_gap": gamma - reference["gamma"],
        "sigma": sigma,
        "sigma_reference": reference["sigma_max"],
        "sigma_gap": sigma - reference["sigma_max"],
    }
    if reference["gamma"] >= 1:
        logger.warning(f"Published {row['scheme']} Gamma={reference['gamma']} is outside (0, 1); "
                       f"recomputed Gamma={gamma:.4g}, sigma={sigma:.4g} vs published {reference['sigma_max']}")
    return row


@dataclass(frozen=True)
class DecayFit:
    sigma: float
    residual: float
    points: int
    method: str


def _envelope_points(E):
    """Indices of local maxima of E; for a non-increasing E the plateau points"""
    interior = np.arange(1, E.size - 1)
    maxima = interior[(E[1:-1] >= E[:-2]) & (E[1:-1] > E[2:])]
    if maxima.size >= MIN_ENVELOPE_POINTS:
        return maxima, "maxima"
    drop = E[:-1] - E[1:]
    inner = np.arange(1, drop.size - 1)
    plateaus = inner[(drop[1:-1] < drop[:-2]) & (drop[1:-1] <= drop[2:])]
    if plateaus.size >= MIN_ENVELOPE_POINTS:
        return plateaus, "plateaus"
    return np.arange(E.size), "all"


def fit_decay_rate(trace, window=FIT_WINDOW):
    """Least-squares rate of log E over the window [0.1T, 0.9T], fitted on the upper envelope"""
    times, E = trace.times, trace.E
    start = times[0] + window[0] * (times[-1] - times[0])
    stop = times[0] + window[1] * (times[-1] - times[0])
    inside = (times >= start - 1e-12) & (times <= stop + 1e-12)
    t, e = times[inside], E[inside]
    if t.size < 2:
        raise ParameterError("fit window holds fewer than two samples", samples=int(t.size))
    if np.any(e <= 0):
        raise DomainError("energy must be positive on the fit window", min_energy=float(e.min()))

    indices, method = _envelope_points(e)
    if indices.size < 2:
        indices, method = np.arange(e.size), "all"
    slope, intercept = np.polyfit(t[indices], np.log(e[indices]), 1)
    residual = float(np.sqrt(np.mean((np.log(e[indices]) - (slope * t[indices] + intercept)) ** 2)))
    return DecayFit(sigma=float(-slope), residual=residual, points=int(indices.size), method=method)


def envelope_ratio(trace, prediction):
    """max_t E(t) / (M E(0) exp(-sigma t)); at most 1 when the decay envelope holds"""
    bound = prediction.envelope(trace.times, trace.E[0])
    if trace.E[0] == 0:
        return 0.0
    return float(np.max(trace.E / bound))
