import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DomainError, HorizonError, ParameterError, StepSizeError
from experiments.initial_conditions import mode_state, packet_state, random_state, sine_band
from filtering.basis import FilterSpec, gamma_for_pair_count, select_modes
from semidiscrete.assembly import build_model
from semidiscrete.params import Mesh, PhysicalParams, Scheme, State
from spectral.oracle import dense_spectrum

from .decay import (
    REFERENCE_DESK_VALUES,
    decay_prediction,
    envelope_ratio,
    fit_decay_rate,
    optimal_gain,
    pde_decay_prediction,
    reference_comparison,
)
from .energy import (
    EnergyTrace,
    dissipation_residual,
    energy,
    energy_trace,
    lyapunov,
    lyapunov_matrix,
    lyapunov_rate,
    lyapunov_trace,
)
from .integrators import integrate
from .observability import observability_ratio

DESK = PhysicalParams(c=1.0, L=1.0, xi=0.9)


def _max_gap(first, second):
    return np.abs(first.stacked() - second.stacked()).max()


class EnergyTests(SimpleTestCase):
    def test_zero_state(self):
        model = build_model(Scheme.FEM, DESK, Mesh(N=5))
        self.assertEqual(energy(model, State.zeros(model.order)), 0.0)

    def test_kinetic_energy_example(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=2))
        self.assertAlmostEqual(energy(model, State(np.zeros(3), np.ones(3))), 0.5, places=14)

    def test_fd_energy_matches_nodal_sum(self):
        params, mesh = PhysicalParams(c=1.7, L=2.0), Mesh(N=9, L=2.0)
        model = build_model(Scheme.FD, params, mesh)
        s = random_state(model.order, 4)
        v = np.concatenate([[0.0], s.v])
        expected = mesh.h / 2 * (np.sum(s.vdot ** 2) + params.c ** 2 * np.sum((np.diff(v) / mesh.h) ** 2))
        self.assertAlmostEqual(energy(model, s), expected, delta=1e-12 * expected)

    def test_fem_variant_without_first_cell(self):
        model = build_model(Scheme.FEM, PhysicalParams(), Mesh(N=6))
        s = random_state(model.order, 8)
        h = model.h
        gap = energy(model, s) - energy(model, s, skip_first_cell=True)
        self.assertAlmostEqual(gap, h / 12 * s.vdot[0] ** 2 + h / 2 * (s.v[0] / h) ** 2, delta=1e-12)

    def test_first_cell_variant_is_fem_only(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=3))
        with self.assertRaises(ParameterError):
            energy(model, State.zeros(4), skip_first_cell=True)


class IntegrateTests(SimpleTestCase):
    def test_zero_initial_data_stays_zero(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=6))
        for method in ("rk4", "modal-exact"):
            trajectory = integrate(model, State.zeros(model.order), 1.0, method=method)
            self.assertEqual(np.abs(trajectory.stacked()).max(), 0.0)

    def test_control_free_modal_energy_is_conserved(self):
        mesh = Mesh(N=10)
        model = build_model(Scheme.FD, PhysicalParams(), mesh)
        trajectory = integrate(model, mode_state(Scheme.FD, PhysicalParams(), mesh, 3), 10.0, dt=0.01,
                               method="modal-exact")
        trace = energy_trace(model, trajectory)
        self.assertLess(np.abs(trace.E - trace.E[0]).max(), 1e-12 * trace.E[0])

    def test_rk4_converges_at_fourth_order(self):
        params, mesh = PhysicalParams(xi=0.5), Mesh(N=10)
        model = build_model(Scheme.FD, params, mesh)
        spectrum = dense_spectrum(model)
        s0 = random_state(model.order, 17)
        gaps = []
        for divisor in (10, 20, 40):
            dt = mesh.h / divisor
            rk4 = integrate(model, s0, 5.0, dt=dt, method="rk4")
            exact = integrate(model, s0, 5.0, dt=dt, method="modal-exact", spectrum=spectrum)
            gaps.append(_max_gap(rk4, exact))
        for coarse, fine in zip(gaps, gaps[1:]):
            self.assertTrue(10.0 <= coarse / fine <= 22.0, gaps)

    def test_rk4_step_size_error(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=20))
        with self.assertRaises(StepSizeError):
            integrate(model, random_state(model.order, 1), 2.0, dt=3 * model.h, method="rk4")

    def test_unknown_method(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=4))
        with self.assertRaises(ParameterError):
            integrate(model, State.zeros(5), 1.0, method="euler")

    def test_energy_is_non_increasing(self):
        for scheme in Scheme:
            model = build_model(scheme, DESK, Mesh(N=20))
            s0 = random_state(model.order, 9)
            trace = energy_trace(model, integrate(model, s0, 5.0, method="modal-exact"))
            self.assertTrue(np.all(trace.E >= 0))
            self.assertLessEqual(np.diff(trace.E).max(), 1e-10 * trace.E[0], scheme)
            explicit = energy_trace(model, integrate(model, s0, 5.0, method="rk4"))
            self.assertLessEqual(explicit.E.max(), trace.E[0] * (1 + 1e-8))
            self.assertLess(explicit.E[-1], explicit.E[0])


class DissipationTests(SimpleTestCase):
    def test_identity_holds_on_modal_exact_trajectories(self):
        mesh = Mesh(N=30)
        for scheme in Scheme:
            model = build_model(scheme, DESK, mesh)
            trajectory = integrate(model, mode_state(scheme, DESK, mesh, 2), 10.0, dt=1e-3, method="modal-exact")
            trace = energy_trace(model, trajectory)
            self.assertLess(dissipation_residual(trace, DESK.xi, order=4), 1e-5, scheme)

    def test_energy_without_first_cell_breaks_the_identity(self):
        mesh = Mesh(N=30)
        model = build_model(Scheme.FEM, DESK, mesh)
        trajectory = integrate(model, mode_state(Scheme.FEM, DESK, mesh, 2), 2.0, dt=1e-3, method="modal-exact")
        consistent = dissipation_residual(energy_trace(model, trajectory), DESK.xi, order=4)
        truncated = dissipation_residual(energy_trace(model, trajectory, skip_first_cell=True), DESK.xi, order=4)
        self.assertGreater(truncated, 10 * consistent)

    def test_central_difference_is_second_order(self):
        params, mesh = PhysicalParams(xi=0.5), Mesh(N=10)
        model = build_model(Scheme.FD, params, mesh)
        s0 = mode_state(Scheme.FD, params, mesh, 1)
        residuals = []
        for dt in (0.01, 0.005):
            trace = energy_trace(model, integrate(model, s0, 5.0, dt=dt, method="rk4"))
            residuals.append(dissipation_residual(trace, params.xi))
        self.assertTrue(3.0 <= residuals[0] / residuals[1] <= 5.0, residuals)

    def test_conservative_case_measures_bare_derivative(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=8))
        trace = energy_trace(model, integrate(model, random_state(model.order, 3), 2.0, dt=1e-3,
                                              method="modal-exact"))
        self.assertLess(dissipation_residual(trace, 0.0), 1e-8)

    def test_non_uniform_trace_rejected(self):
        trace = EnergyTrace(np.array([0.0, 0.1, 0.3, 0.4]), np.ones(4), np.zeros(4), np.zeros(4))
        with self.assertRaises(ParameterError):
            dissipation_residual(trace, 0.5)


class LyapunovTests(SimpleTestCase):
    def test_zero_state(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=4))
        self.assertEqual(tuple(lyapunov(model, State.zeros(5), 0.5)), (0.0, 0.0, 0.0))

    def test_delta_range(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=4))
        for delta in (0.0, 1.0, 1.5):
            with self.assertRaises(ParameterError):
                lyapunov(model, State.zeros(5), delta)

    def test_sandwich_on_random_states(self):
        rng = np.random.default_rng(42)
        for scheme in Scheme:
            params = PhysicalParams(c=1.3, L=0.8, xi=0.7)
            model = build_model(scheme, params, Mesh(N=25, L=0.8))
            for _ in range(100):
                s = State(rng.standard_normal(model.order), rng.standard_normal(model.order))
                for fraction in (0.1, 0.3, 0.9):
                    delta = fraction * params.c / params.L
                    e, _, value = lyapunov(model, s, delta)
                    self.assertLessEqual((1 - fraction) * e, value + 1e-12 * e)
                    self.assertLessEqual(value, (1 + fraction) * e + 1e-12 * e)

    def test_quadratic_form_matches_formula(self):
        rng = np.random.default_rng(6)
        for scheme in Scheme:
            model = build_model(scheme, DESK, Mesh(N=12))
            Q = lyapunov_matrix(model, 0.4)
            np.testing.assert_allclose(Q, Q.T)
            for _ in range(10):
                s = State(rng.standard_normal(model.order), rng.standard_normal(model.order))
                y = s.as_vector()
                self.assertAlmostEqual(y @ Q @ y, lyapunov(model, s, 0.4).value, delta=1e-10 * abs(y @ Q @ y))

    def test_rate_matches_finite_difference(self):
        mesh = Mesh(N=10)
        model = build_model(Scheme.FEM, DESK, mesh)
        trajectory = integrate(model, mode_state(Scheme.FEM, DESK, mesh, 1), 2e-5, dt=1e-5, method="modal-exact")
        trace = energy_trace(model, trajectory, delta=0.3)
        finite = (trace.lyapunov[2] - trace.lyapunov[0]) / 2e-5
        exact = lyapunov_rate(model, trajectory.state(1), 0.3)
        self.assertAlmostEqual(finite, exact, delta=1e-5 * trace.lyapunov[1])

    def test_trace_matches_pointwise_values(self):
        mesh = Mesh(N=8)
        model = build_model(Scheme.FD, DESK, mesh)
        trajectory = integrate(model, sine_band(mesh, 1, 4), 0.5, dt=0.05, method="modal-exact")
        values = lyapunov_trace(model, trajectory, 0.3)
        self.assertEqual(values.shape, (len(trajectory),))
        for index in (0, 5, len(trajectory) - 1):
            expected = lyapunov(model, trajectory.state(index), 0.3).value
            self.assertAlmostEqual(values[index], expected, delta=1e-12 * abs(expected))


class DecayPredictionTests(SimpleTestCase):
    def test_desk_delta(self):
        prediction = decay_prediction(DESK, 0.5, Scheme.FD)
        self.assertAlmostEqual(prediction.delta, 0.5 * 1.8 / 1.81, places=12)
        self.assertAlmostEqual(prediction.delta, 0.49724, places=5)
        self.assertGreater(prediction.overshoot, 1.0)
        self.assertAlmostEqual(prediction.kappa, 2.0)

    def test_maximal_rate_at_characteristic_gain(self):
        params = PhysicalParams(xi=1.0)
        self.assertAlmostEqual(decay_prediction(params, 1e-12, Scheme.FD).sigma, 0.25, places=10)
        self.assertAlmostEqual(optimal_gain(DESK)["sigma_max"], 0.25, places=14)
        self.assertAlmostEqual(optimal_gain(DESK, 0.4)["sigma_max"], 0.15, places=14)
        self.assertAlmostEqual(pde_decay_prediction(params).sigma, 0.25, places=14)

    def test_pde_constants(self):
        pde = pde_decay_prediction(DESK)
        self.assertAlmostEqual(pde.delta, 0.5 * 0.9 / 1.81, places=12)
        self.assertAlmostEqual(pde.sigma, 2 * pde.delta * (1 - 2 * pde.delta), places=14)
        self.assertAlmostEqual(pde.sigma, 0.24999, places=5)

    def test_sigma_decreases_with_gamma(self):
        sigmas = [decay_prediction(DESK, gamma, Scheme.FEM).sigma for gamma in (0.1, 0.3, 0.5, 0.9)]
        self.assertTrue(all(a > b for a, b in zip(sigmas, sigmas[1:])))

    def test_degenerate_gamma_is_flagged(self):
        prediction = decay_prediction(DESK, 1.017, Scheme.FD)
        self.assertTrue(prediction.degenerate)
        self.assertLess(prediction.sigma, 0.0)

    def test_gain_range(self):
        for xi in (0.0, 1.2):
            with self.assertRaises(DomainError):
                decay_prediction(PhysicalParams(xi=xi), 0.5, Scheme.FD)

    def test_reference_comparison(self):
        row = reference_comparison(Scheme.FEM, 0.19, 0.23)
        self.assertEqual(row["sigma_reference"], REFERENCE_DESK_VALUES[Scheme.FEM]["sigma_max"])
        self.assertAlmostEqual(row["sigma_gap"], 0.19 - 0.2205)


class DecayFitTests(SimpleTestCase):
    def test_exact_exponential(self):
        times = np.linspace(0.0, 10.0, 1001)
        trace = EnergyTrace(times, 3 * np.exp(-0.3 * times), np.zeros_like(times), np.zeros_like(times))
        fit = fit_decay_rate(trace)
        self.assertAlmostEqual(fit.sigma, 0.3, delta=1e-6)

    def test_staircase_uses_plateaus(self):
        times = np.linspace(0.0, 10.0, 2001)
        E = np.exp(-0.5 * (times - np.sin(4 * times) / 4))
        trace = EnergyTrace(times, E, np.zeros_like(times), np.zeros_like(times))
        fit = fit_decay_rate(trace)
        self.assertEqual(fit.method, "plateaus")
        self.assertAlmostEqual(fit.sigma, 0.5, delta=0.01)

    def test_non_positive_energy(self):
        times = np.linspace(0.0, 1.0, 11)
        trace = EnergyTrace(times, np.zeros(11), np.zeros(11), np.zeros(11))
        with self.assertRaises(DomainError):
            fit_decay_rate(trace)


class DecayEnvelopeTests(SimpleTestCase):
    def _filtered_run(self, scheme, N, basis_gamma=None, pairs=None, T=20.0, dt=0.01):
        mesh = Mesh(N=N)
        model = build_model(scheme, DESK, mesh)
        spectrum = dense_spectrum(model)
        spec = FilterSpec.for_params(1.0, scheme, DESK)
        gamma = basis_gamma if basis_gamma is not None else gamma_for_pair_count(spectrum, pairs, spec)
        basis = select_modes(spectrum, FilterSpec.for_params(gamma, scheme, DESK))
        s0 = sine_band(mesh, scale_to_mesh=True)
        trajectory = integrate(model, s0, T, dt=dt, method="modal-exact", spectrum=spectrum, project=basis)
        prediction = decay_prediction(DESK, basis.gamma_effective, scheme, kappa=basis.kappa)
        return model, basis, trajectory, prediction

    def test_desk_filtered_run(self):
        for scheme in Scheme:
            model, basis, trajectory, prediction = self._filtered_run(scheme, 30, pairs=10)
            self.assertEqual(basis.retained_pairs, 10)
            self.assertEqual(basis.filtered_count, 42)
            trace = energy_trace(model, trajectory, delta=prediction.delta)
            self.assertLessEqual(envelope_ratio(trace, prediction), 1.0)
            self.assertGreaterEqual(fit_decay_rate(trace).sigma, prediction.sigma)
            lyap = trace.lyapunov
            self.assertTrue(np.all(lyap <= lyap[0] * np.exp(-prediction.sigma * trace.times) + 1e-12 * lyap[0]))

    def test_envelope_across_meshes_and_thresholds(self):
        for scheme in Scheme:
            for N in (20, 30, 50):
                for gamma in (0.25, 0.5):
                    model, basis, trajectory, prediction = self._filtered_run(scheme, N, basis_gamma=gamma,
                                                                              T=10.0, dt=0.02)
                    self.assertLessEqual(basis.gamma_effective, gamma)
                    trace = energy_trace(model, trajectory)
                    self.assertLessEqual(envelope_ratio(trace, prediction), 1.0, (scheme, N, gamma))

    def test_lyapunov_derivative_bound_on_filtered_states(self):
        model, basis, trajectory, prediction = self._filtered_run(Scheme.FD, 30, pairs=10, T=5.0, dt=0.05)
        Q = lyapunov_matrix(model, prediction.delta)
        for index in range(len(trajectory)):
            s = trajectory.state(index)
            value = lyapunov(model, s, prediction.delta).value
            rate = lyapunov_rate(model, s, prediction.delta, Q=Q)
            self.assertLessEqual(rate, -prediction.sigma * value + 1e-12 * abs(value))

    def test_unfiltered_decay_degrades_with_refinement(self):
        rates = {}
        for N in (30, 120):
            mesh = Mesh(N=N)
            model = build_model(Scheme.FD, DESK, mesh)
            trajectory = integrate(model, sine_band(mesh, scale_to_mesh=True), 20.0, dt=0.01, method="modal-exact")
            trace = energy_trace(model, trajectory)
            rates[N] = fit_decay_rate(trace).sigma
        self.assertLess(rates[120], 0.5 * rates[30])


class ObservabilityTests(SimpleTestCase):
    def test_horizon(self):
        with self.assertRaises(HorizonError):
            observability_ratio(PhysicalParams(), Mesh(N=10), Scheme.FD, 2.0)

    def test_fundamental_mode_is_observable(self):
        mesh = Mesh(N=30)
        s0 = mode_state(Scheme.FD, PhysicalParams(), mesh, 1)
        ratio = observability_ratio(PhysicalParams(), mesh, Scheme.FD, 3.0, s0=s0)
        self.assertTrue(0.05 < ratio < 10.0, ratio)

    def test_fd_top_mode_ratio_blows_up(self):
        ratios = [observability_ratio(PhysicalParams(), Mesh(N=n), Scheme.FD, 3.0) for n in (20, 40, 80)]
        self.assertTrue(ratios[0] < ratios[1] < ratios[2], ratios)
        self.assertGreater(ratios[2] / ratios[0], 4.0)

    def test_packet_ratios_increase_for_both_schemes(self):
        for scheme in Scheme:
            ratios = []
            for n in (20, 40, 80):
                mesh = Mesh(N=n)
                ratios.append(observability_ratio(PhysicalParams(), mesh, scheme, 2.5, s0=packet_state(mesh)))
            self.assertTrue(ratios[0] < ratios[1] < ratios[2], (scheme, ratios))

    def test_fem_top_mode_alone_stays_flat(self):
        # every FEM mode keeps a unit boundary amplitude, so one mode cannot show the growth
        T = 3.0
        ratios = [observability_ratio(PhysicalParams(), Mesh(N=n), Scheme.FEM, T) for n in (20, 40, 80)]
        for ratio in ratios:
            self.assertTrue(0.5 / (6 * T) <= ratio <= 2.0 / (2 * T), ratios)
        self.assertLess(max(ratios) / min(ratios), 1.5)

    def test_feedback_is_ignored(self):
        mesh = Mesh(N=10)
        damped = observability_ratio(DESK, mesh, Scheme.FD, 3.0)
        free = observability_ratio(PhysicalParams(), mesh, Scheme.FD, 3.0)
        self.assertAlmostEqual(damped, free, delta=1e-12 * free)

    def test_interior_observation(self):
        ratio = observability_ratio(PhysicalParams(), Mesh(N=20), Scheme.FD, 3.0, obs="interior")
        self.assertTrue(np.isfinite(ratio) and ratio > 0)
