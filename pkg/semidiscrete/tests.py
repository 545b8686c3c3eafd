import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import eigh, eigvalsh

from core.exceptions import ParameterError, SizeError

from .assembly import (
    apply_operator,
    assemble_dense_operator,
    build_model,
    control_free_stiffness,
)
from .params import Mesh, PhysicalParams, Scheme, State


def _random_state(rng, order):
    return State(rng.standard_normal(order), rng.standard_normal(order))


class ParamsTests(SimpleTestCase):
    def test_mesh_spacing_is_derived(self):
        mesh = Mesh(N=30, L=2.0)
        self.assertEqual(mesh.h * (mesh.N + 1), 2.0)
        self.assertEqual(mesh.order, 31)
        self.assertEqual(mesh.nodes[0], 0.0)
        self.assertAlmostEqual(mesh.nodes[-1], 2.0, places=14)

    def test_mesh_from_spacing(self):
        self.assertEqual(Mesh.from_spacing(1 / 31).N, 30)
        with self.assertRaises(SizeError):
            Mesh.from_spacing(0.3)

    def test_small_mesh_rejected(self):
        for n in (0, 1):
            with self.assertRaises(SizeError):
                Mesh(N=n)

    def test_non_positive_parameters_rejected(self):
        with self.assertRaises(ParameterError):
            PhysicalParams(c=0.0)
        with self.assertRaises(ParameterError):
            PhysicalParams(L=-1.0)
        with self.assertRaises(ParameterError):
            PhysicalParams(xi=-0.1)

    def test_sub_characteristic(self):
        self.assertTrue(PhysicalParams(xi=0.9).sub_characteristic)
        self.assertFalse(PhysicalParams(xi=1.0).sub_characteristic)

    def test_scheme_parse(self):
        self.assertIs(Scheme.parse("fem"), Scheme.FEM)
        with self.assertRaises(ParameterError):
            Scheme.parse("spectral")

    def test_state_lengths_must_match(self):
        with self.assertRaises(SizeError):
            State(np.zeros(3), np.zeros(4))


class BuildModelTests(SimpleTestCase):
    def test_fd_stiffness_and_mass(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=2))
        expected = 9.0 * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 1]])
        np.testing.assert_allclose(model.stiffness_dense(), expected, rtol=1e-14)
        np.testing.assert_array_equal(model.mass_dense(), np.eye(3))

    def test_fem_mass_rows(self):
        model = build_model(Scheme.FEM, PhysicalParams(), Mesh(N=2))
        expected = np.array([[2 / 3, 1 / 6, 0], [1 / 6, 2 / 3, 1 / 6], [0, 1 / 6, 1 / 3]])
        np.testing.assert_allclose(model.mass_dense(), expected, rtol=1e-15)

    def test_fd_and_fem_share_the_stiffness(self):
        params, mesh = PhysicalParams(c=1.3, L=0.7), Mesh(N=6, L=0.7)
        fd = build_model(Scheme.FD, params, mesh)
        fem = build_model(Scheme.FEM, params, mesh)
        np.testing.assert_array_equal(fd.stiffness_dense(), fem.stiffness_dense())

    def test_control_free_eigenvalues(self):
        matrix = control_free_stiffness(PhysicalParams(), Mesh(N=2)).dense()
        np.testing.assert_allclose(matrix, 9.0 * np.array([[2, -1], [-1, 1]]))
        np.testing.assert_allclose(eigvalsh(matrix), [3.43769410, 23.56230590], rtol=1e-8)

    def test_assembled_stiffness_matches_dense_eigensolve(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=2))
        values = eigvalsh(model.stiffness_dense())
        self.assertEqual(values.size, 3)
        self.assertTrue(np.all(values > 0))

    def test_symmetry_and_positive_definiteness(self):
        for n in (2, 3, 10, 57, 200):
            for scheme in Scheme:
                model = build_model(scheme, PhysicalParams(xi=0.4), Mesh(N=n))
                stiffness = model.stiffness_dense()
                np.testing.assert_array_equal(stiffness, stiffness.T)
                self.assertTrue(np.all(np.diag(stiffness) > 0))
                self.assertGreater(eigvalsh(stiffness)[0], 0.0)

    def test_doubling_c_quadruples_stiffness(self):
        mesh = Mesh(N=8)
        base = build_model(Scheme.FD, PhysicalParams(c=1.0), mesh).stiffness_dense()
        doubled = build_model(Scheme.FD, PhysicalParams(c=2.0), mesh).stiffness_dense()
        np.testing.assert_allclose(doubled, 4.0 * base, rtol=1e-15)

    def test_gain_changes_only_the_damping_entry(self):
        mesh = Mesh(N=5)
        model = build_model(Scheme.FEM, PhysicalParams(xi=0.0), mesh)
        damped = model.with_gain(0.9)
        difference = assemble_dense_operator(damped) - assemble_dense_operator(model)
        self.assertEqual(damped.damping_entry, -0.9 / mesh.h)
        np.testing.assert_array_equal(model.stiffness_dense(), damped.stiffness_dense())
        # FEM spreads the boundary force through M^{-1}, so only the last velocity column moves
        self.assertEqual(np.count_nonzero(difference[:, :-1]), 0)

    def test_mismatched_domain_length_rejected(self):
        with self.assertRaises(ParameterError):
            build_model(Scheme.FD, PhysicalParams(L=2.0), Mesh(N=4, L=1.0))


class OperatorTests(SimpleTestCase):
    def test_zero_state_has_zero_derivative(self):
        model = build_model(Scheme.FEM, PhysicalParams(xi=0.5), Mesh(N=7))
        derivative = apply_operator(model, State.zeros(model.order))
        self.assertEqual(derivative.norm(), 0.0)

    def test_dimension_mismatch(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=4))
        with self.assertRaises(SizeError):
            apply_operator(model, State.zeros(3))

    def test_dense_block_structure(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=2))
        dense = assemble_dense_operator(model)
        self.assertEqual(dense.shape, (6, 6))
        np.testing.assert_array_equal(dense[3:, 3:], np.zeros((3, 3)))
        np.testing.assert_array_equal(dense[:3, 3:], np.eye(3))

    def test_damping_entry(self):
        model = build_model(Scheme.FD, PhysicalParams(xi=0.9), Mesh(N=2))
        self.assertAlmostEqual(assemble_dense_operator(model)[5, 5], -2.7, places=13)

    def test_undamped_eigenvector_is_mapped_to_lambda_times_itself(self):
        model = build_model(Scheme.FD, PhysicalParams(), Mesh(N=6))
        mu, phi = eigh(model.stiffness_dense())
        omega = np.sqrt(mu[2])
        # real solution pair: s = (phi, 0) -> (0, -mu phi), (0, phi) -> (phi, 0)
        derivative = apply_operator(model, State(phi[:, 2], np.zeros(model.order)))
        np.testing.assert_allclose(derivative.vdot, -omega ** 2 * phi[:, 2], atol=1e-12 * mu[-1])
        vector = np.concatenate([phi[:, 2], 1j * omega * phi[:, 2]])
        image = assemble_dense_operator(model) @ vector
        np.testing.assert_allclose(image, 1j * omega * vector, atol=1e-10 * omega)

    def test_fem_acceleration_solves_the_mass_system(self):
        rng = np.random.default_rng(3)
        model = build_model(Scheme.FEM, PhysicalParams(xi=0.9), Mesh(N=40))
        s = _random_state(rng, model.order)
        acceleration = apply_operator(model, s).vdot
        residual = model.mass_dense() @ acceleration + model.stiffness_dense() @ s.v - model.damping_force(s.vdot)
        scale = np.abs(model.stiffness_dense()).max() * s.norm()
        self.assertLess(np.linalg.norm(residual), 1e-12 * scale)

    def test_dense_and_matrix_free_agree(self):
        rng = np.random.default_rng(20)
        for scheme in Scheme:
            for n in (2, 9, 30):
                model = build_model(scheme, PhysicalParams(xi=0.9), Mesh(N=n))
                dense = assemble_dense_operator(model)
                scale = np.linalg.norm(dense, 2)
                for _ in range(100):
                    s = _random_state(rng, model.order)
                    gap = dense @ s.as_vector() - apply_operator(model, s).as_vector()
                    self.assertLess(np.linalg.norm(gap), 1e-13 * scale * s.norm())

    def test_stacked_rhs(self):
        rng = np.random.default_rng(5)
        model = build_model(Scheme.FEM, PhysicalParams(xi=0.3), Mesh(N=5))
        block = rng.standard_normal((2 * model.order, 4))
        np.testing.assert_allclose(model.rhs(block), assemble_dense_operator(model) @ block, rtol=1e-12, atol=1e-10)
