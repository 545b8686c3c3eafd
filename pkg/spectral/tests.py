import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy.linalg import eigvalsh

from core.exceptions import ConsistencyError, DomainError, SizeError
from semidiscrete.assembly import build_model, control_free_stiffness
from semidiscrete.params import Mesh, PhysicalParams, Scheme

from .bounds import check_modulus_bounds, fit_envelope_constant, real_part_formula
from .closed_form import (
    fd_undamped_spectrum,
    fem_generalized_eigenvalues,
    fem_undamped_spectrum,
    pde_spectrum,
    top_mode_ratio,
)
from .export import pde_overlay, spectrum_rows
from .oracle import dense_spectrum
from .roots import (
    char_poly_eval,
    fixed_point_rhs,
    roots_to_eigenvalues,
    sector_root_bounds,
    sector_roots,
)
from .spectrum import Provenance, match_eigenvalues

DESK = PhysicalParams(c=1.0, L=1.0, xi=0.9)


class ClosedFormTests(SimpleTestCase):
    def test_control_free_fd_frequencies(self):
        spectrum = fd_undamped_spectrum(PhysicalParams(), Mesh(N=2), variant="control_free")
        upper = spectrum.upper_half()
        np.testing.assert_allclose(upper.imag ** 2, [3.43769410, 23.5623059], rtol=1e-8)
        np.testing.assert_allclose(upper.imag ** 2, 36 * np.sin(np.array([1, 3]) * np.pi / 10) ** 2, rtol=1e-13)
        self.assertTrue(spectrum.checks[0].valid)

    def test_fd_closed_forms_match_dense_symmetric_eigensolve(self):
        for n in (2, 5, 10, 50, 100):
            mesh = Mesh(N=n)
            for variant in ("assembled", "control_free"):
                check = fd_undamped_spectrum(PhysicalParams(), mesh, variant=variant).checks[0]
                self.assertTrue(check.valid, f"N={n} {variant}: {check.max_relative_gap}")
                self.assertLess(check.max_relative_gap, 1e-9)

    def test_fd_closed_form_matches_dense_first_order_operator(self):
        for n in (2, 5, 10, 50):
            mesh = Mesh(N=n)
            closed = fd_undamped_spectrum(PhysicalParams(), mesh)
            dense = dense_spectrum(build_model(Scheme.FD, PhysicalParams(), mesh))
            self.assertLess(np.abs(dense.values.real).max(), 1e-8 * np.abs(dense.values).max())
            self.assertLess(match_eigenvalues(closed.values, dense.values).max_gap, 1e-9)

    def test_fd_mode_shapes_are_eigenvectors(self):
        spectrum = fd_undamped_spectrum(PhysicalParams(c=2.0, L=3.0), Mesh(N=12, L=3.0))
        self.assertLess(spectrum.residuals.max(), 1e-10)
        self.assertEqual(spectrum.provenance, {Provenance.CLOSED_FORM})

    def test_c_scaling(self):
        mesh = Mesh(N=7)
        base = fd_undamped_spectrum(PhysicalParams(c=1.0), mesh).upper_half().imag ** 2
        doubled = fd_undamped_spectrum(PhysicalParams(c=2.0), mesh).upper_half().imag ** 2
        np.testing.assert_allclose(doubled, 4 * base, rtol=1e-13)
        fem_base = fem_generalized_eigenvalues(PhysicalParams(c=1.0), mesh)
        fem_doubled = fem_generalized_eigenvalues(PhysicalParams(c=2.0), mesh)
        np.testing.assert_allclose(fem_doubled, 4 * fem_base, rtol=1e-13)

    def test_shifted_fem_formula_is_flagged_at_small_n(self):
        spectrum = fem_undamped_spectrum(PhysicalParams(), Mesh(N=2))
        checks = {check.name: check for check in spectrum.checks}
        shifted = checks["fem-generalized-shifted"]
        self.assertAlmostEqual(shifted.formula[0], 9 * (6 - 6 * np.cos(np.pi / 4)) / (2 + np.cos(np.pi / 4)), places=12)
        self.assertAlmostEqual(shifted.formula[0], 5.84244, places=4)
        self.assertFalse(shifted.valid)
        self.assertFalse(checks["fem-sub-shifted"].valid)

    def test_exact_fem_formulas_match_dense_generalized_eigensolve(self):
        for n in (2, 5, 10, 50):
            spectrum = fem_undamped_spectrum(PhysicalParams(c=1.5), Mesh(N=n))
            checks = {check.name: check for check in spectrum.checks}
            self.assertTrue(checks["fem-generalized-exact"].valid, checks["fem-generalized-exact"].report())
            self.assertTrue(checks["fem-sub-exact"].valid, checks["fem-sub-exact"].report())
            self.assertLess(spectrum.residuals.max(), 1e-10)

    def test_fem_closed_form_matches_dense_first_order_operator(self):
        mesh = Mesh(N=10)
        closed = fem_undamped_spectrum(PhysicalParams(), mesh)
        dense = dense_spectrum(build_model(Scheme.FEM, PhysicalParams(), mesh))
        self.assertLess(match_eigenvalues(closed.values, dense.values).max_gap, 1e-9)

    def test_top_mode_ratio_tends_to_four_and_twelve(self):
        params = PhysicalParams()
        fd = [top_mode_ratio(Scheme.FD, params, Mesh(N=n)) for n in (100, 200, 400)]
        fem = [top_mode_ratio(Scheme.FEM, params, Mesh(N=n)) for n in (100, 200, 400)]
        self.assertTrue(fd[0] < fd[1] < fd[2] < 4.0)
        self.assertTrue(fem[0] < fem[1] < fem[2] < 12.0)
        self.assertLess(abs(fd[2] - 4.0) / 4.0, 0.05)
        self.assertLess(abs(fem[2] - 12.0) / 12.0, 0.05)

    def test_top_mode_ratio_matches_dense_eigensolve(self):
        mesh = Mesh(N=40)
        model = build_model(Scheme.FEM, PhysicalParams(), mesh)
        top = eigvalsh(model.stiffness_dense(), model.mass_dense())[-1]
        self.assertAlmostEqual(top_mode_ratio(Scheme.FEM, PhysicalParams(), mesh), mesh.h ** 2 * top, places=10)

    def test_small_gain_spectrum_is_close_to_closed_form(self):
        mesh = Mesh(N=10)
        closed = fd_undamped_spectrum(PhysicalParams(), mesh)
        damped = dense_spectrum(build_model(Scheme.FD, PhysicalParams(xi=1e-6), mesh))
        self.assertLess(np.abs(closed.values[:, None] - damped.values[None, :]).min(axis=1).max(), 1e-3)


class PdeSpectrumTests(SimpleTestCase):
    def test_desk_real_part(self):
        value = pde_spectrum(DESK, [0])[0]
        self.assertAlmostEqual(value.real, -0.5 * np.log(19), delta=1e-12)
        self.assertAlmostEqual(value.imag, np.pi / 2, places=12)
        self.assertAlmostEqual(value.real, -1.47222, places=5)

    def test_vertical_line(self):
        values = pde_spectrum(PhysicalParams(c=2.0, L=3.0, xi=0.4), range(10))
        self.assertEqual(np.unique(values.real).size, 1)
        np.testing.assert_allclose(np.diff(values.imag), np.pi * 2.0 / 3.0)

    def test_control_free_is_imaginary(self):
        values = pde_spectrum(PhysicalParams(), range(5))
        np.testing.assert_array_equal(values.real, 0.0)
        np.testing.assert_allclose(values.imag, (2 * np.arange(5) + 1) * np.pi / 2)

    def test_characteristic_gain_rejected(self):
        for xi in (1.0, 1.5):
            with self.assertRaises(DomainError):
                pde_spectrum(PhysicalParams(xi=xi), range(3))


class DenseSpectrumTests(SimpleTestCase):
    def test_count_and_stability(self):
        spectrum = dense_spectrum(build_model(Scheme.FD, DESK, Mesh(N=30)))
        self.assertEqual(len(spectrum), 62)
        self.assertLess(spectrum.max_real_part(), 0.0)
        self.assertLess(spectrum.residuals.max(), 1e-8)

    def test_fem_damped_spectrum_is_stable(self):
        spectrum = dense_spectrum(build_model(Scheme.FEM, DESK, Mesh(N=30)))
        self.assertEqual(len(spectrum), 62)
        self.assertLess(spectrum.max_real_part(), 0.0)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            scheme = Scheme.FD if rng.random() < 0.5 else Scheme.FEM
            params = PhysicalParams(c=rng.uniform(0.5, 2.0), L=1.0, xi=rng.uniform(0.0, 0.95))
            spectrum = dense_spectrum(build_model(scheme, params, Mesh(N=int(rng.integers(2, 12)))))
            self.assertTrue(spectrum.is_conjugate_closed())

    def test_left_vectors_form_a_dual_basis(self):
        spectrum = dense_spectrum(build_model(Scheme.FEM, DESK, Mesh(N=8)))
        gram = spectrum.left_vectors.conj().T @ spectrum.vectors
        np.testing.assert_allclose(gram, np.eye(len(spectrum)), atol=1e-8)

    @override_settings(WAVESTAB_DENSE_MAX_N=5)
    def test_size_guard(self):
        with self.assertRaises(SizeError):
            dense_spectrum(build_model(Scheme.FD, DESK, Mesh(N=6)))

    def test_real_part_energy_balance(self):
        for scheme in Scheme:
            model = build_model(scheme, DESK, Mesh(N=15))
            spectrum = dense_spectrum(model)
            for pair in spectrum.pairs[::5]:
                result = real_part_formula(model, pair.value, pair.vec)
                self.assertAlmostEqual(result["balance"], pair.value.real, delta=1e-8 * abs(pair.value))


class CharacteristicPolynomialTests(SimpleTestCase):
    def test_unit_circle_roots(self):
        for n in (2, 10, 30):
            for xi in (0.1, 0.9):
                params, mesh = PhysicalParams(xi=xi), Mesh(N=n)
                self.assertLess(abs(char_poly_eval(params, mesh, 1j)), 1e-12)
                self.assertLess(abs(char_poly_eval(params, mesh, -1j)), 1e-12)

    def test_value_at_one(self):
        for n, xi, c in ((2, 0.3, 1.0), (17, 0.9, 2.0), (40, 1.9, 2.0)):
            self.assertAlmostEqual(char_poly_eval(PhysicalParams(c=c, xi=xi), Mesh(N=n), 1.0), 2.0, places=12)

    def test_reflection_identity(self):
        rng = np.random.default_rng(2)
        params, mesh = PhysicalParams(xi=0.7), Mesh(N=4)
        for z in rng.standard_normal(20) + 1j * rng.standard_normal(20):
            left = z ** (4 * mesh.N + 6) * char_poly_eval(params, mesh, 1 / z)
            right = char_poly_eval(params, mesh, -z)
            self.assertLess(abs(left - right), 1e-9 * max(abs(right), 1.0))

    def test_roots_solve_the_fixed_point_form(self):
        report = sector_roots(DESK, Mesh(N=30))
        lhs = report.roots ** (4 * 30 + 5)
        np.testing.assert_allclose(lhs, fixed_point_rhs(DESK, Mesh(N=30), report.roots), atol=1e-10)


class SectorRootTests(SimpleTestCase):
    def setUp(self):
        self.mesh = Mesh(N=30)
        self.report = sector_roots(DESK, self.mesh)

    def test_root_count_and_residuals(self):
        self.assertEqual(len(self.report), 31)
        self.assertLess(self.report.residual.max(), 1e-10)
        self.assertTrue(np.all(self.report.roots.real > 0))
        self.assertTrue(np.all(self.report.roots.imag > 0))

    def test_one_root_per_sector(self):
        self.assertEqual(np.unique(self.report.sector_index).size, 31)
        self.assertTrue(self.report.in_sectors().all())

    def test_root_quadruples(self):
        for z in self.report.roots:
            self.assertLess(abs(char_poly_eval(DESK, self.mesh, np.conj(z))), 1e-9)
            self.assertLess(abs(char_poly_eval(DESK, self.mesh, -1 / z)), 1e-9)

    def test_modulus_sandwich(self):
        lower, upper = sector_root_bounds(DESK, self.mesh)
        moduli = np.abs(self.report.roots)
        self.assertTrue(np.all(moduli >= lower))
        self.assertTrue(np.all(moduli <= upper))
        self.assertTrue(np.all(moduli < 1.0))

    def test_eigenvalues_match_dense_oracle(self):
        oracle = dense_spectrum(build_model(Scheme.FD, DESK, self.mesh))
        spectrum = roots_to_eigenvalues(self.report, DESK, self.mesh, oracle=oracle)
        self.assertEqual(len(spectrum), 62)
        self.assertLess(match_eigenvalues(spectrum.values, oracle.values).max_gap, 1e-6)
        self.assertLess(spectrum.max_real_part(), 0.0)
        self.assertLess(spectrum.residuals.max(), 1e-8)

    def test_unit_circle_root_maps_to_top_of_axis(self):
        value = DESK.c / self.mesh.h * (1j - 1 / 1j)
        self.assertAlmostEqual(value, 2j * DESK.c / self.mesh.h)

    def test_mismatched_oracle_raises(self):
        other = dense_spectrum(build_model(Scheme.FD, PhysicalParams(xi=0.5), self.mesh))
        with self.assertRaises(ConsistencyError):
            roots_to_eigenvalues(self.report, DESK, self.mesh, oracle=other)

    def test_characteristic_gain_rejected(self):
        with self.assertRaises(DomainError):
            sector_roots(PhysicalParams(xi=1.0), self.mesh)


class ModulusBoundTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        params = PhysicalParams(xi=0.5)
        cls.spectra = {
            n: dense_spectrum(build_model(Scheme.FD, params, Mesh(N=n))) for n in (50, 100, 200)
        }

    def test_fitted_constant_covers_every_mesh(self):
        fit = fit_envelope_constant(self.spectra.values(), Scheme.FD)
        self.assertTrue(fit.consistent, fit.per_mesh)
        for spectrum in self.spectra.values():
            report = check_modulus_bounds(spectrum, Scheme.FD, constant=fit.constant)
            self.assertTrue(report.holds)
            self.assertGreaterEqual(report.min_slack, -1e-10)

    def test_real_parts_are_order_h(self):
        reports = [check_modulus_bounds(self.spectra[n], Scheme.FD) for n in (50, 100, 200)]
        for coarse, fine in zip(reports, reports[1:]):
            self.assertTrue(0.35 <= fine.max_h_real / coarse.max_h_real <= 0.65)

    def test_fem_envelope_uses_twelve(self):
        spectrum = dense_spectrum(build_model(Scheme.FEM, PhysicalParams(xi=0.5), Mesh(N=50)))
        fem = fit_envelope_constant([spectrum], Scheme.FEM).constant
        fd = fit_envelope_constant([spectrum], Scheme.FD).constant
        self.assertLessEqual(fem, fd)
        self.assertTrue(check_modulus_bounds(spectrum, Scheme.FEM).holds)

    def test_too_small_constant_is_reported(self):
        report = check_modulus_bounds(self.spectra[50], Scheme.FD, constant=0.0)
        self.assertGreater(report.violations, 0)


class ExportTests(SimpleTestCase):
    def test_rows(self):
        spectrum = dense_spectrum(build_model(Scheme.FD, DESK, Mesh(N=3)))
        rows = spectrum_rows(spectrum, retained=np.ones(len(spectrum), dtype=bool))
        self.assertEqual(len(rows), 8)
        self.assertEqual(rows[0][3], "dense-oracle")
        self.assertEqual({row[5] for row in rows}, {1})

    def test_pde_overlay_is_conjugate_closed(self):
        overlay = pde_overlay(DESK, 20.0)
        self.assertEqual(overlay.size % 2, 0)
        self.assertTrue(np.all(np.abs(overlay.imag) <= 20.0))
        self.assertEqual(pde_overlay(PhysicalParams(xi=1.0), 20.0).size, 0)


class ControlFreeMatrixTests(SimpleTestCase):
    def test_order_n(self):
        self.assertEqual(control_free_stiffness(PhysicalParams(), Mesh(N=9)).order, 9)
