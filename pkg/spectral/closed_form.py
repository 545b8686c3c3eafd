"""
Closed-form undamped spectra of the FD and FEM systems and the PDE spectrum.

Every closed form is checked against a dense symmetric eigensolve of the same
matrix; a mismatch is kept as a FormulaCheck flag and logged, never hidden.
"""
import logging

import numpy as np
from scipy.linalg import eigvalsh, eigvalsh_tridiagonal

from core.exceptions import ParameterError
from core.validators import validate_sub_characteristic
from semidiscrete.assembly import build_model, control_free_stiffness
from semidiscrete.params import Scheme

from .spectrum import EigenPair, FormulaCheck, Provenance, Spectrum

logger = logging.getLogger(__name__)

FD_VARIANTS = ("assembled", "control_free")
FEM_VARIANTS = ("exact", "shifted")


def _first_order_pairs(frequencies, shapes, stiffness, mass=None):
    """+-i sqrt(mu) with vectors (phi, lambda phi); residual of A phi = mu M phi"""
    pairs = []
    for index, mu in enumerate(frequencies):
        phi = shapes[:, index]
        rhs = mu * (phi if mass is None else mass.matvec(phi))
        residual = np.linalg.norm(stiffness.matvec(phi) - rhs) / max(np.linalg.norm(phi), 1e-300)
        omega = np.sqrt(mu)
        for sign in (1.0, -1.0):
            value = sign * 1j * omega
            vec = np.concatenate([phi, value * phi])
            pairs.append(EigenPair(value, vec, Provenance.CLOSED_FORM, residual / max(abs(value), 1e-300)))
    return pairs


def _sine_shapes(angles, order):
    """Columns sin(j * angle_k), j = 1..order"""
    j = np.arange(1, order + 1)[:, None]
    return np.sin(j * angles[None, :])


def _log_check(check):
    if check.valid:
        logger.info(f"{check.name}: closed form matches the dense oracle (gap {check.max_relative_gap:.2e})")
    else:
        logger.warning(f"{check.name}: closed form disagrees with the dense oracle (gap {check.max_relative_gap:.2e})")
    return check


def fd_frequencies(params, mesh, variant="assembled"):
    """mu_k = (4c^2/h^2) sin^2(angle_k / 2) and the sine mode shapes"""
    if variant not in FD_VARIANTS:
        raise ParameterError("unknown FD closed-form variant", variant=variant)
    c, L, h = params.c, params.L, mesh.h
    if variant == "assembled":
        order = mesh.order
        period = 2 * L + h
    else:
        order = mesh.N
        period = 2 * L - h
    k = np.arange(1, order + 1)
    angles = (2 * k - 1) * np.pi * h / period
    frequencies = 4 * c ** 2 / h ** 2 * np.sin(angles / 2) ** 2
    return frequencies, _sine_shapes(angles, order)


def fd_undamped_spectrum(params, mesh, variant="assembled"):
    """
    Closed-form spectrum of the control-free FD system.

    variant="assembled" describes the order-(N+1) matrix used everywhere else
    (the xi = 0 case of the damped model); variant="control_free" the order-N
    matrix written for the undamped problem. The gain in `params` is ignored.
    """
    undamped = params.with_gain(0.0)
    frequencies, shapes = fd_frequencies(undamped, mesh, variant)
    if variant == "assembled":
        stiffness = build_model(Scheme.FD, undamped, mesh).stiffness
    else:
        stiffness = control_free_stiffness(undamped, mesh)

    oracle = eigvalsh_tridiagonal(np.asarray(stiffness.diag), np.asarray(stiffness.upper))
    check = _log_check(FormulaCheck(f"fd-{variant}", np.sort(frequencies), oracle, tolerance=1e-9))
    pairs = _first_order_pairs(frequencies, shapes, stiffness)
    return Spectrum.build(pairs, Scheme.FD, undamped, mesh, checks=(check,))


def fem_angles(mesh, variant="exact"):
    """(2j-1) pi h / (2L) from the node reflection; the shifted form uses L - h"""
    if variant not in FEM_VARIANTS:
        raise ParameterError("unknown FEM closed-form variant", variant=variant)
    j = np.arange(1, mesh.order + 1)
    span = mesh.L if variant == "exact" else mesh.L - mesh.h
    return (2 * j - 1) * np.pi * mesh.h / (2 * span)


def fem_generalized_eigenvalues(params, mesh, variant="exact"):
    """Eigenvalues of M^{-1}A: (c^2/h^2) 6(1 - cos t)/(2 + cos t)"""
    theta = fem_angles(mesh, variant)
    return params.c ** 2 / mesh.h ** 2 * 6 * (1 - np.cos(theta)) / (2 + np.cos(theta))


def fem_sub_eigenvalues(params, mesh, variant="exact"):
    """Eigenvalues of K^{-1}A with K = diag(2, ..., 2, 1): (2c^2/h^2) sin^2(t/2)"""
    theta = fem_angles(mesh, variant)
    return 2 * params.c ** 2 / mesh.h ** 2 * np.sin(theta / 2) ** 2


def _lumping_matrix(order):
    diag = np.full(order, 2.0)
    diag[-1] = 1.0
    return np.diag(diag)


def fem_undamped_spectrum(params, mesh, variant="exact"):
    """
    Closed-form spectrum of the control-free FEM system.

    Both the sub-eigenvalues of K^{-1}A and the generalized eigenvalues of
    (A, M) are evaluated in the exact and the shifted (L - h) angle form, each checked
    against scipy's generalized symmetric eigensolver. The first-order pairs
    use `variant`.
    """
    undamped = params.with_gain(0.0)
    model = build_model(Scheme.FEM, undamped, mesh)
    stiffness = model.stiffness_dense()

    generalized_oracle = eigvalsh(stiffness, model.mass_dense())
    sub_oracle = eigvalsh(stiffness, _lumping_matrix(mesh.order))
    checks = []
    for name in FEM_VARIANTS:
        checks.append(_log_check(FormulaCheck(
            f"fem-generalized-{name}", np.sort(fem_generalized_eigenvalues(undamped, mesh, name)), generalized_oracle,
        )))
        checks.append(_log_check(FormulaCheck(
            f"fem-sub-{name}", np.sort(fem_sub_eigenvalues(undamped, mesh, name)), sub_oracle,
        )))

    frequencies = fem_generalized_eigenvalues(undamped, mesh, variant)
    shapes = _sine_shapes(fem_angles(mesh, variant), mesh.order)
    pairs = _first_order_pairs(frequencies, shapes, model.stiffness, model.mass)
    return Spectrum.build(pairs, Scheme.FEM, undamped, mesh, checks=checks)


def undamped_spectrum(scheme, params, mesh):
    """Assembled-matrix closed form for either scheme"""
    if Scheme.parse(scheme) is Scheme.FD:
        return fd_undamped_spectrum(params, mesh)
    return fem_undamped_spectrum(params, mesh)


def top_mode_ratio(scheme, params, mesh):
    """h^2 mu_{N+1} / c^2 of the highest undamped mode; tends to 4 (FD) or 12 (FEM)"""
    if Scheme.parse(scheme) is Scheme.FD:
        frequencies, _ = fd_frequencies(params, mesh)
    else:
        frequencies = fem_generalized_eigenvalues(params, mesh)
    return float(mesh.h ** 2 * frequencies.max() / params.c ** 2)


def pde_real_part(params):
    """-(c/2L) ln|(xi + c)/(xi - c)|, shared by every PDE eigenvalue"""
    validate_sub_characteristic(params.xi, params.c, allow_zero=True)
    c, L, xi = params.c, params.L, params.xi
    return -c / (2 * L) * np.log(abs((xi + c) / (xi - c)))


def pde_spectrum(params, k_range):
    """lambda_k = -(c/2L) ln|(xi+c)/(xi-c)| + i (2k+1) pi c / (2L)"""
    real = pde_real_part(params)
    k = np.asarray(list(k_range), dtype=float)
    return real + 1j * (2 * k + 1) * np.pi * params.c / (2 * params.L)


def undamped_mode_shape(scheme, params, mesh, k):
    """Mode shape phi_k, k = 1..N+1 (1 = fundamental), of the assembled control-free system"""
    if int(k) != k or not 1 <= k <= mesh.order:
        raise ParameterError("mode index out of range", k=k, modes=mesh.order)
    if Scheme.parse(scheme) is Scheme.FD:
        _, shapes = fd_frequencies(params, mesh)
    else:
        shapes = _sine_shapes(fem_angles(mesh), mesh.order)
    return shapes[:, int(k) - 1].copy()
