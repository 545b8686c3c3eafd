import numpy as np
from django.test import SimpleTestCase, override_settings

from core.exceptions import ConditioningError, FilterTooAggressive, ParameterError, SizeError
from dynamics.energy import energy
from dynamics.integrators import integrate
from dynamics.observability import top_mode_state
from experiments.initial_conditions import mode_state, random_state, sine_band
from semidiscrete.assembly import build_model
from semidiscrete.params import Mesh, PhysicalParams, Scheme
from spectral.oracle import dense_spectrum

from .basis import FilterSpec, filter_for_model, gamma_for_pair_count, project_state, select_modes

DESK = PhysicalParams(c=1.0, L=1.0, xi=0.9)


def _desk_spectrum(scheme=Scheme.FD, N=30, params=DESK):
    model = build_model(scheme, params, Mesh(N=N, L=params.L))
    return model, dense_spectrum(model)


class FilterSpecTests(SimpleTestCase):
    def test_gamma_range(self):
        for gamma in (0.0, -0.5, 1.5, float("nan")):
            with self.assertRaises(ParameterError):
                FilterSpec(gamma, Scheme.FD)

    def test_unknown_basis(self):
        with self.assertRaises(ParameterError):
            FilterSpec(0.5, Scheme.FD, basis="modal")

    def test_normalizer(self):
        self.assertEqual(FilterSpec(0.5, "FD", c=2.0).normalizer, 16.0)
        self.assertEqual(FilterSpec(0.5, "FEM", c=2.0).normalizer, 48.0)


class SelectModesTests(SimpleTestCase):
    def test_unit_gamma_keeps_everything(self):
        model, spectrum = _desk_spectrum(N=10)
        basis = select_modes(spectrum, FilterSpec.for_params(1.0, Scheme.FD, DESK))
        self.assertTrue(basis.is_identity)
        np.testing.assert_array_equal(basis.projector, np.eye(2 * model.order))
        s = random_state(model.order, 3)
        np.testing.assert_array_equal(project_state(basis, s).as_vector(), s.as_vector())

    def test_tiny_gamma_is_too_aggressive(self):
        _, spectrum = _desk_spectrum(N=10)
        with self.assertRaises(FilterTooAggressive):
            select_modes(spectrum, FilterSpec.for_params(1e-9, Scheme.FD, DESK))

    def test_incomplete_spectrum_rejected(self):
        _, spectrum = _desk_spectrum(N=10)
        with self.assertRaises(SizeError):
            select_modes(spectrum, FilterSpec.for_params(0.5, Scheme.FD, DESK), mesh=Mesh(N=11))

    def test_retained_set_properties(self):
        for scheme in Scheme:
            _, spectrum = _desk_spectrum(scheme, N=20)
            spec = FilterSpec.for_params(0.4, scheme, DESK)
            basis = select_modes(spectrum, spec)
            values = spectrum.values[list(basis.retained)]
            for value in values:
                self.assertLess(np.abs(values - np.conj(value)).min(), 1e-10 * max(abs(value), 1.0))
            self.assertLessEqual(basis.gamma_effective, 0.4 * (1 + 1e-12))
            h = spectrum.mesh.h
            self.assertAlmostEqual(basis.kappa, (h ** 2 * np.abs(values) ** 2).max())
            self.assertAlmostEqual(basis.gamma_effective, basis.kappa / spec.normalizer)
            self.assertEqual(basis.retained_count + basis.filtered_count, len(spectrum))

    def test_randomized_projector_properties(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            scheme = Scheme.FD if rng.random() < 0.5 else Scheme.FEM
            params = PhysicalParams(c=float(rng.uniform(0.5, 2.0)), L=1.0, xi=float(rng.uniform(0.05, 0.45)))
            N = int(rng.integers(4, 12))
            model = build_model(scheme, params, Mesh(N=N))
            spectrum = dense_spectrum(model)
            low, high = np.sort(rng.uniform(0.2, 1.0, size=2))
            narrow = select_modes(spectrum, FilterSpec.for_params(float(low), scheme, params))
            wide = select_modes(spectrum, FilterSpec.for_params(float(high), scheme, params))
            self.assertTrue(set(narrow.retained) <= set(wide.retained))

            P = narrow.projector
            self.assertTrue(np.isrealobj(P))
            scale = max(np.abs(P).max(), 1.0)
            self.assertLess(np.abs(P @ P - P).max(), 1e-8 * scale)

            mask = narrow.mask
            y = random_state(model.order, int(rng.integers(1 << 30))).as_vector()
            dual = spectrum.left_vectors.conj().T
            complex_projection = spectrum.vectors[:, mask] @ (dual[mask] @ y)
            self.assertLess(np.abs(complex_projection.imag).max(), 1e-8 * max(np.abs(y).max(), 1.0))

    def test_conditioning_limit(self):
        model, spectrum = _desk_spectrum(N=10)
        basis = select_modes(spectrum, FilterSpec.for_params(0.5, Scheme.FD, DESK))
        with override_settings(WAVESTAB_CONDITION_LIMIT=1.0):
            with self.assertRaises(ConditioningError):
                project_state(basis, random_state(model.order, 1))


class ProjectionTests(SimpleTestCase):
    def test_top_mode_is_annihilated(self):
        params, mesh = PhysicalParams(), Mesh(N=20)
        model = build_model(Scheme.FD, params, mesh)
        basis = select_modes(dense_spectrum(model), FilterSpec.for_params(0.5, Scheme.FD, params))
        projected = project_state(basis, top_mode_state(Scheme.FD, params, mesh))
        self.assertLess(projected.norm(), 1e-8)

    def test_retained_state_is_unchanged(self):
        params, mesh = PhysicalParams(), Mesh(N=20)
        model = build_model(Scheme.FEM, params, mesh)
        basis = select_modes(dense_spectrum(model), FilterSpec.for_params(0.5, Scheme.FEM, params))
        s = mode_state(Scheme.FEM, params, mesh, 1)
        projected = project_state(basis, s)
        np.testing.assert_allclose(projected.as_vector(), s.as_vector(), atol=1e-10)

    def test_undamped_projection_does_not_raise_energy(self):
        params, mesh = PhysicalParams(), Mesh(N=30)
        model = build_model(Scheme.FD, params, mesh)
        s = sine_band(mesh)
        for gamma in (0.2, 0.5, 0.8):
            basis = select_modes(dense_spectrum(model), FilterSpec.for_params(gamma, Scheme.FD, params))
            self.assertLessEqual(energy(model, project_state(basis, s)), energy(model, s) * (1 + 1e-10))

    def test_retained_span_is_invariant_under_the_flow(self):
        for scheme in Scheme:
            model, spectrum = _desk_spectrum(scheme, N=20)
            basis = select_modes(spectrum, FilterSpec.for_params(0.3, scheme, DESK))
            s = project_state(basis, random_state(model.order, 11))
            final = integrate(model, s, 1.0, dt=0.01, method="modal-exact", spectrum=spectrum).final
            drift = np.abs(basis.project_array(final.as_vector()) - final.as_vector()).max()
            self.assertLessEqual(drift, 1e-8 * s.norm())

    def test_state_size_mismatch(self):
        model, spectrum = _desk_spectrum(N=10)
        basis = select_modes(spectrum, FilterSpec.for_params(0.5, Scheme.FD, DESK))
        with self.assertRaises(SizeError):
            project_state(basis, random_state(5, 0))


class PairCountTests(SimpleTestCase):
    def test_every_pair_gives_unit_gamma(self):
        model, spectrum = _desk_spectrum(N=30)
        self.assertEqual(gamma_for_pair_count(spectrum, model.order), 1.0)

    def test_round_trip(self):
        for scheme in Scheme:
            _, spectrum = _desk_spectrum(scheme, N=30)
            for m in (1, 10):
                gamma = gamma_for_pair_count(spectrum, m)
                basis = select_modes(spectrum, FilterSpec.for_params(gamma, scheme, DESK))
                self.assertEqual(basis.retained_pairs, m)
                self.assertEqual(basis.retained_count, 2 * m)

    def test_out_of_range(self):
        model, spectrum = _desk_spectrum(N=10)
        for m in (0, model.order + 1, 2.5):
            with self.assertRaises(SizeError):
                gamma_for_pair_count(spectrum, m)


class FilterForModelTests(SimpleTestCase):
    def test_undamped_basis_ignores_feedback(self):
        model = build_model(Scheme.FD, DESK, Mesh(N=12))
        damped = filter_for_model(model, FilterSpec.for_params(0.5, Scheme.FD, DESK))
        undamped = filter_for_model(model, FilterSpec.for_params(0.5, Scheme.FD, DESK, basis="undamped"))
        self.assertEqual(undamped.spectrum.params.xi, 0.0)
        self.assertLess(np.abs(undamped.spectrum.values.real).max(), 1e-10)
        self.assertGreater(np.abs(damped.spectrum.values.real).max(), 1e-3)
