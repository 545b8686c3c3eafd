"""
One Celery task per grid point. Each task owns its result row; the command
merges rows single-threaded.
"""
import logging

from celery import shared_task

from dynamics.decay import decay_prediction, envelope_ratio, fit_decay_rate
from dynamics.energy import energy_trace
from dynamics.integrators import integrate
from dynamics.observability import observability_ratio
from filtering.basis import FilterSpec, select_modes
from semidiscrete.assembly import build_model
from spectral.closed_form import top_mode_ratio
from spectral.oracle import dense_spectrum

from .config import ExperimentConfig
from .initial_conditions import build_initial_state

logger = logging.getLogger(__name__)


@shared_task
def observability_point(command, data, N):
    """Observability ratio and top-mode modulus for one mesh"""
    config = ExperimentConfig(command=command, data=data)
    params, mesh = config.params.with_gain(0.0), config.mesh_for(N)
    s0 = build_initial_state(config["ic"], config.scheme, params, mesh, seed=config["seed"])
    ratio = observability_ratio(params, mesh, config.scheme, config["T"], s0=s0, obs=config["obs"],
                                dt=config["dt"], method=config["integrator"])
    row = {
        "N": N,
        "h": mesh.h,
        "ratio": ratio,
        "top_mode_ratio": top_mode_ratio(config.scheme, params, mesh),
        "limit": float(config.scheme.bound_constant),
    }
    logger.info(f"Observability point N={N}: ratio={ratio:.6e}")
    return row


@shared_task
def decay_point(command, data, xi, gamma):
    """Predicted and fitted decay for one (xi, Gamma) on a filtered run"""
    config = ExperimentConfig(command=command, data=data)
    params, mesh, scheme = config.params.with_gain(xi), config.mesh, config.scheme
    model = build_model(scheme, params, mesh)
    spectrum = dense_spectrum(model)
    basis = select_modes(spectrum, FilterSpec.for_params(gamma, scheme, params))
    prediction = decay_prediction(params, gamma, scheme)

    s0 = build_initial_state(config["ic"], scheme, params, mesh, seed=config["seed"])
    trajectory = integrate(model, s0, config["T"], dt=config["dt"], method="modal-exact", spectrum=spectrum,
                           project=basis)
    trace = energy_trace(model, trajectory)
    fit = fit_decay_rate(trace)
    row = {
        "kind": "discrete",
        "scheme": scheme.value,
        "xi": xi,
        "gamma": gamma,
        "gamma_effective": basis.gamma_effective,
        "delta": prediction.delta,
        "sigma_pred": prediction.sigma,
        "sigma_fit": fit.sigma,
        "overshoot": prediction.overshoot,
        "envelope_ratio": envelope_ratio(trace, prediction),
    }
    if fit.sigma < prediction.sigma:
        logger.warning(f"Fitted rate {fit.sigma:.4g} below prediction {prediction.sigma:.4g} at xi={xi}, gamma={gamma}")
    return row
