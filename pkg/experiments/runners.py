"""
The four experiment verbs. Each runner computes its results, hands tables and
figures to an ArtifactWriter and returns a RunSummary.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import DomainError
from core.utils import format_float, to_builtin
from dynamics.decay import (
    decay_prediction,
    discrete_delta,
    envelope_ratio,
    fit_decay_rate,
    optimal_gain,
    pde_decay_prediction,
    reference_comparison,
)
from dynamics.energy import dissipation_residual, energy_trace
from dynamics.integrators import default_step, integrate
from filtering.basis import select_modes
from semidiscrete.assembly import build_model
from semidiscrete.params import Scheme
from spectral.closed_form import undamped_spectrum
from spectral.export import PDE_HEADER, SPECTRUM_HEADER, pde_overlay, pde_rows, spectrum_rows
from spectral.oracle import dense_spectrum
from spectral.roots import roots_to_eigenvalues, sector_roots

from .artifacts import staged_output, validate_summary
from .figures import energy_figure, spectrum_figure
from .initial_conditions import build_initial_state
from .tasks import decay_point, observability_point

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.json"
ENERGY_HEADER = ["t", "E", "v_tip", "vdot_tip", "lyapunov"]
OBSERVABILITY_HEADER = ["N", "h", "ratio", "top_mode_ratio", "limit"]
DECAY_HEADER = [
    "kind", "scheme", "xi", "gamma", "gamma_effective", "delta", "sigma_pred", "sigma_fit", "overshoot",
    "envelope_ratio", "reference_gamma", "reference_sigma", "sigma_gap",
]


@dataclass
class RunSummary:
    command: str
    config: dict
    results: dict
    artifacts: list = field(default_factory=list)
    wall_time: float = None

    def as_dict(self):
        payload = {
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "artifacts": self.artifacts,
        }
        if self.wall_time is not None:
            payload["wall_time"] = self.wall_time
        return to_builtin(payload)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    return "" if np.isnan(value) else format_float(value)


def _rows(records, header):
    return [[_cell(record.get(key)) for key in header] for record in records]


def _filter_basis(config, model, spectrum):
    """(basis, basis spectrum) for the configured filter, or (None, None)"""
    if config["filter"] is None:
        return None, None
    if config["filter"]["basis"] == "undamped":
        spectrum = dense_spectrum(model.with_gain(0.0))
    spec = config.filter_spec(spectrum)
    return select_modes(spectrum, spec, model.mesh), spectrum


def _second_provenance(model, dense):
    """Closed forms at xi = 0, sector roots for damped FD, otherwise nothing"""
    params, mesh = model.params, model.mesh
    if params.xi == 0:
        return undamped_spectrum(model.scheme, params, mesh), None
    if model.scheme is Scheme.FD and params.xi < params.c:
        report = sector_roots(params, mesh)
        return roots_to_eigenvalues(report, params, mesh, oracle=dense), report
    logger.info(f"No second provenance for {model.scheme.value} at xi={params.xi}; dense oracle only")
    return None, None


def run_spectrum(config, writer):
    scheme, params, mesh = config.scheme, config.params, config.mesh
    model = build_model(scheme, params, mesh)
    dense = dense_spectrum(model)
    second, report = _second_provenance(model, dense)
    basis, basis_spectrum = _filter_basis(config, model, dense)
    mask = basis.mask if basis is not None and basis_spectrum is dense else None

    values = dense.values
    upper_imag = float(values.imag.max())
    pde = pde_overlay(params, upper_imag) if params.xi < params.c else np.array([], dtype=complex)

    results = {
        "eigenvalues": len(dense),
        "interior_eigenvalues": 2 * mesh.N,
        "pairs": int(np.count_nonzero(values.imag >= 0)),
        "max_real_part": dense.max_real_part(),
        "conjugate_closed": dense.is_conjugate_closed(),
        "max_residual": float(np.nanmax(dense.residuals)),
    }
    if basis is not None:
        results["filter"] = basis.report()
        results["filter"]["basis"] = config["filter"]["basis"]
    if second is not None:
        results["second_provenance"] = sorted(p.value for p in second.provenance)[0]
        results["formula_checks"] = [check.report() for check in second.checks]
    if report is not None:
        results["roots"] = report.summary()

    outputs = config.outputs
    if outputs["csv"]:
        writer.table("spectrum", SPECTRUM_HEADER, spectrum_rows(dense, mask))
        if second is not None:
            writer.table(f"spectrum-{results['second_provenance']}", SPECTRUM_HEADER, spectrum_rows(second))
        if pde.size:
            writer.table("pde", PDE_HEADER, pde_rows(pde))
    if outputs["svg"]:
        retained = values if mask is None else values[mask]
        filtered = values[:0] if mask is None else values[~mask]
        roots = second.values if report is not None else ()
        title = f"{scheme.value} N={mesh.N} xi={params.xi:g}"
        writer.svg("spectrum.svg", "svg/spectrum.svg", spectrum_figure(title, retained, filtered, pde, roots))
    logger.info(f"Spectrum {scheme.value} N={mesh.N}: {len(dense)} eigenvalues, {2 * mesh.N} interior"
                + (f", {basis.filtered_count} filtered" if basis is not None else ""))
    return results


def run_simulate(config, writer):
    scheme, params, mesh = config.scheme, config.params, config.mesh
    model = build_model(scheme, params, mesh)
    s0 = build_initial_state(config["ic"], scheme, params, mesh, seed=config["seed"])
    method = config["integrator"]
    spectrum = dense_spectrum(model) if method == "modal-exact" or config["filter"] else None
    basis, _ = _filter_basis(config, model, spectrum)
    dt = config["dt"] or default_step(model)

    trajectory = integrate(model, s0, config["T"], dt=dt, method=method, spectrum=spectrum, project=basis)
    damped = 0 < params.xi <= params.c
    trace = energy_trace(model, trajectory, delta=discrete_delta(params) if damped else None)

    prediction = None
    if damped and basis is not None:
        prediction = decay_prediction(params, basis.gamma_effective, scheme, kappa=basis.kappa)
    try:
        fit = fit_decay_rate(trace)
    except DomainError as e:
        logger.warning(f"No decay fit: {e}")
        fit = None

    results = {
        "sigma_fit": fit.sigma if fit else None,
        "fit_method": fit.method if fit else None,
        "prediction": prediction.as_dict() if prediction else None,
        "kappa": basis.kappa if basis else None,
        "gamma_effective": basis.gamma_effective if basis else None,
        "retained_modes": basis.retained_count if basis else 2 * mesh.order,
        "dissipation_residual": dissipation_residual(trace, params.xi, order=4 if len(trace) >= 5 else 2),
        "initial_energy": float(trace.E[0]),
        "final_energy": float(trace.E[-1]),
        "dt": dt,
        "samples": len(trace),
    }
    if prediction is not None:
        results["envelope_ratio"] = envelope_ratio(trace, prediction)
        results["envelope_holds"] = results["envelope_ratio"] <= 1.0
        if fit is not None and fit.sigma < prediction.sigma:
            logger.warning(f"Fitted rate {fit.sigma:.4g} below the prediction {prediction.sigma:.4g}")

    outputs = config.outputs
    if outputs["csv"]:
        writer.table("energy", ENERGY_HEADER, [[_cell(value) for value in row] for row in trace.rows()])
    if outputs["svg"]:
        envelope = None
        if prediction is not None and not prediction.degenerate:
            envelope = prediction.envelope(trace.times, trace.E[0])
        title = f"{scheme.value} N={mesh.N} xi={params.xi:g} {method}"
        writer.svg("energy.svg", "svg/energy.svg", energy_figure(title, trace, envelope))
    return results


def run_observability(config, writer):
    N_list = sorted(set(config["N_list"]))
    pending = [observability_point.delay(config.command, config.data, N) for N in N_list]
    records = [result.get() for result in pending]
    ratios = [record["ratio"] for record in records]
    increasing = all(a < b for a, b in zip(ratios, ratios[1:]))
    if not increasing:
        logger.warning(f"Observability ratios are not increasing in N: {ratios}")
    results = {"rows": records, "increasing": increasing}
    if config.outputs["csv"]:
        writer.table("observability", OBSERVABILITY_HEADER, _rows(records, OBSERVABILITY_HEADER))
    return results


def _reference_rows(config):
    """Recomputed Gamma and sigma for both schemes next to the published desk values"""
    rows = []
    params = config.params
    for scheme in Scheme:
        model = build_model(scheme, params, config.mesh)
        spectrum = dense_spectrum(model)
        basis = select_modes(spectrum, config.filter_spec(spectrum, scheme=scheme), config.mesh)
        sigma = decay_prediction(params, basis.gamma_effective, scheme, kappa=basis.kappa).sigma
        comparison = reference_comparison(scheme, sigma, basis.gamma_effective)
        rows.append({
            "kind": "reference",
            "scheme": scheme.value,
            "xi": params.xi,
            "gamma": basis.gamma_effective,
            "gamma_effective": basis.gamma_effective,
            "sigma_pred": sigma,
            "reference_gamma": comparison["gamma_reference"],
            "reference_sigma": comparison["sigma_reference"],
            "sigma_gap": comparison["sigma_gap"],
        })
    return rows


def run_decay_report(config, writer):
    xi_grid, gamma_grid = config["xi_grid"], config["gamma_grid"]
    pending = [decay_point.delay(config.command, config.data, xi, gamma) for xi in xi_grid for gamma in gamma_grid]
    records = [result.get() for result in pending]

    base = config.params
    for xi in xi_grid:
        pde = pde_decay_prediction(base.with_gain(xi))
        records.append({"kind": "pde", "xi": xi, "delta": pde.delta, "sigma_pred": pde.sigma,
                        "overshoot": pde.overshoot})
    for gamma in gamma_grid:
        best = optimal_gain(base, gamma)
        records.append({"kind": "optimal", "xi": best["xi"], "gamma": gamma, "delta": best["delta"],
                        "sigma_pred": best["sigma_max"]})
    if config["filter"] is not None and 0 < base.xi < base.c:
        records.extend(_reference_rows(config))

    discrete = [record for record in records if record["kind"] == "discrete"]
    results = {
        "rows": len(records),
        "envelope_holds": all(record["envelope_ratio"] <= 1.0 for record in discrete),
        "fit_above_prediction": all(record["sigma_fit"] >= record["sigma_pred"] for record in discrete),
        "references": [record for record in records if record["kind"] == "reference"],
    }
    if config.outputs["csv"]:
        writer.table("decay-report", DECAY_HEADER, _rows(records, DECAY_HEADER))
    return results


RUNNERS = {
    "spectrum": run_spectrum,
    "simulate": run_simulate,
    "observability": run_observability,
    "decay-report": run_decay_report,
}


def execute(config, out_dir, table_format="csv"):
    """Run one verb fail-closed; returns the RunSummary"""
    runner = RUNNERS[config.command]
    started = time.perf_counter()
    with staged_output(out_dir, table_format) as writer:
        results = runner(config, writer)
        wall_time = time.perf_counter() - started
        summary = RunSummary(
            command=config.command,
            config=config.data,
            results=results,
            artifacts=list(writer.written),
            wall_time=wall_time if config.outputs["timing"] else None,
        )
        if config.outputs["json"]:
            summary.artifacts.append(SUMMARY_NAME)
            writer.json(SUMMARY_NAME, validate_summary(summary.as_dict()))
    logger.info(f"{config.command} finished in {wall_time:.2f}s")
    return summary
