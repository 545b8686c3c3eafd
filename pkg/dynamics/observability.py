"""Boundary observability of the control-free systems."""
import logging

import numpy as np
from scipy.integrate import trapezoid

from core.exceptions import HorizonError, ParameterError
from semidiscrete.assembly import build_model
from semidiscrete.params import State
from spectral.closed_form import undamped_mode_shape

from .energy import energy
from .integrators import integrate

logger = logging.getLogger(__name__)

OBSERVATIONS = ("boundary", "interior")


def top_mode_state(scheme, params, mesh):
    """Highest-frequency undamped mode shape at rest"""
    return State(undamped_mode_shape(scheme, params, mesh, mesh.order))


def observation(trajectory, kind="boundary"):
    """v'_{N+1}(t), or v'_N(t)/h for kind="interior" """
    if kind == "boundary":
        return trajectory.Vdot[:, -1]
    if kind == "interior":
        return trajectory.Vdot[:, -2] / trajectory.model.h
    raise ParameterError("observation must be boundary or interior", obs=kind)


def observability_ratio(params, mesh, scheme, T, s0=None, obs="boundary", dt=None, method="modal-exact"):
    """E(0) / int_0^T |obs(t)|^2 dt for the control-free system, T > 2L/c"""
    if params.xi != 0:
        logger.warning(f"Observability is measured without feedback; ignoring xi={params.xi}")
        params = params.with_gain(0.0)
    if T <= 2 * params.L / params.c:
        raise HorizonError("observation time must exceed 2L/c", T=T, minimum=2 * params.L / params.c)
    if obs not in OBSERVATIONS:
        raise ParameterError("observation must be boundary or interior", obs=obs)

    model = build_model(scheme, params, mesh)
    s0 = s0 if s0 is not None else top_mode_state(model.scheme, params, mesh)
    dt = dt or mesh.h / (20 * params.c)
    trajectory = integrate(model, s0, T, dt=dt, method=method)
    observed = trapezoid(observation(trajectory, obs) ** 2, trajectory.times)
    e0 = energy(model, s0)
    if observed == 0:
        return float("inf")
    ratio = e0 / observed
    logger.info(f"Observability ratio {model.scheme.value} N={mesh.N} T={T}: {ratio:.6e} ({obs})")
    return float(ratio)
