"""
Characteristic-polynomial route to the damped FD spectrum.

Eigenvectors of the form y_k = z^{2k} - z^{-2k} turn the eigenproblem into

    p(z) = z^{4N+6} + (xi/c) z^{4N+5} - (xi/c) z + 1 = 0,
    lambda = (c/h)(z - 1/z).

Each first-quadrant root is the fixed point of one branch
T_j(z) = |G(z)|^{1/(4N+5)} exp(i(theta(z) + 2 j pi)/(4N+5)),
G(z) = (xi z - c)/(c z + xi), inside its own sector S_j.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConsistencyError, ConvergenceError
from core.utils import get_setting
from core.validators import validate_sub_characteristic
from semidiscrete.assembly import build_model
from semidiscrete.params import Scheme

from .spectrum import EigenPair, Provenance, Spectrum, match_eigenvalues

logger = logging.getLogger(__name__)

ROOT_TOL = 1e-13
ROOT_MAX_ITER = 200
ROOT_RESIDUAL_TOL = 1e-10
BOUNDARY_SAMPLES = 1000


def _degree(mesh):
    """4N+5, the exponent of the fixed-point form"""
    return 4 * mesh.N + 5


def char_poly_coefficients(params, mesh):
    """Coefficients of p, highest power first"""
    ratio = params.xi / params.c
    coefficients = np.zeros(_degree(mesh) + 2)
    coefficients[0] = 1.0
    coefficients[1] = ratio
    coefficients[-2] = -ratio
    coefficients[-1] = 1.0
    return coefficients


def char_poly_eval(params, mesh, z):
    """p(z) by Horner's rule; z may be a scalar or an array"""
    return np.polyval(char_poly_coefficients(params, mesh), np.asarray(z, dtype=complex))


def fixed_point_rhs(params, mesh, z):
    """G(z) = (xi z - c)/(xi + c z), the right side of z^{4N+5} = G(z)"""
    z = np.asarray(z, dtype=complex)
    return (params.xi * z - params.c) / (params.xi + params.c * z)


def branch_angle(g):
    """Arg G taken in [pi/2, 3pi/2]"""
    return np.mod(np.angle(g) - np.pi / 2, 2 * np.pi) + np.pi / 2


def sector_radius(params):
    """Outer radius (xi + c)/(2 xi) of the sector S"""
    return (params.xi + params.c) / (2 * params.xi)


def sector_angles(mesh, j):
    degree = _degree(mesh)
    return 2 * j * np.pi / degree, (2 * j + 1) * np.pi / degree


@dataclass(frozen=True)
class RootSolveReport:
    """First-quadrant roots of p, one per sector"""
    roots: np.ndarray
    sector_index: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray
    params: object
    mesh: object

    def __len__(self):
        return self.roots.size

    def in_sectors(self, slack=1e-12):
        """True where each root lies in its own sector S_j"""
        low, high = sector_angles(self.mesh, self.sector_index)
        angle = np.angle(self.roots)
        inside_angle = (angle >= low - slack) & (angle <= high + slack)
        return inside_angle & (np.abs(self.roots) <= sector_radius(self.params) + slack)

    def summary(self):
        return {
            "count": len(self),
            "max_residual": float(self.residual.max()),
            "max_iterations": int(self.iterations.max()),
            "all_in_sectors": bool(self.in_sectors().all()),
        }


def sector_roots(params, mesh, tol=None, max_iter=None):
    """
    Fixed-point iteration of every branch T_j, j = 0..N, started on the unit
    circle at Arg z = (2j + 1/2) pi/(4N+5). The sectors are iterated together
    as one vector; the root z = i (j = N+1) is not returned.
    """
    validate_sub_characteristic(params.xi, params.c)
    tol = tol or get_setting("WAVESTAB_ROOT_TOL", ROOT_TOL)
    max_iter = max_iter or get_setting("WAVESTAB_ROOT_MAX_ITER", ROOT_MAX_ITER)

    degree = _degree(mesh)
    sectors = np.arange(mesh.N + 1)
    z = np.exp(1j * (2 * sectors + 0.5) * np.pi / degree)
    iterations = np.zeros(sectors.size, dtype=int)
    active = np.ones(sectors.size, dtype=bool)
    radius = sector_radius(params)

    for _ in range(max_iter):
        g = fixed_point_rhs(params, mesh, z[active])
        updated = np.abs(g) ** (1.0 / degree) * np.exp(1j * (branch_angle(g) + 2 * sectors[active] * np.pi) / degree)
        step = np.abs(updated - z[active])
        z[active] = updated
        iterations[active] += 1

        escaped = active.copy()
        escaped[active] = np.abs(updated) > radius
        if escaped.any():
            j = int(sectors[escaped][0])
            logger.error(f"Root iterate left the sector S_{j} (N={mesh.N}, xi={params.xi})")
            raise ConvergenceError("iterate left its sector", sector=j, N=mesh.N)

        done = active.copy()
        done[active] = step < tol
        active &= ~done
        if not active.any():
            break
    else:
        j = int(sectors[active][0])
        logger.error(f"Root iteration stalled in sector S_{j} after {max_iter} steps")
        raise ConvergenceError("fixed-point iteration did not converge", sector=j, iterations=max_iter)

    residual = np.abs(char_poly_eval(params, mesh, z))
    report = RootSolveReport(z, sectors, residual, iterations, params, mesh)
    if residual.max() > ROOT_RESIDUAL_TOL:
        j = int(sectors[residual.argmax()])
        raise ConvergenceError("converged iterate is not a root", sector=j, residual=float(residual.max()))
    logger.info(f"Found {len(report)} sector roots for N={mesh.N}, xi={params.xi}: "
                f"max residual {residual.max():.2e}, max iterations {iterations.max()}")
    return report


def estimate_m_g(params, mesh, samples=BOUNDARY_SAMPLES):
    """Sampled sup of |G| on the boundary of S, doubled"""
    radius = sector_radius(params)
    third = samples // 3
    t = np.linspace(0.0, 1.0, third)
    boundary = np.concatenate([
        radius * t,
        radius * np.exp(0.5j * np.pi * t),
        1j * radius * t,
        [radius * np.exp(0.25j * np.pi)],
    ])[:samples]
    return 2.0 * float(np.abs(fixed_point_rhs(params, mesh, boundary)).max())


def sector_root_bounds(params, mesh, m_g=None):
    """Lower and upper bounds on the modulus of every sector root"""
    if m_g is None:
        m_g = estimate_m_g(params, mesh)
    xi, c = params.xi, params.c
    degree = _degree(mesh)
    lower = ((xi * c - xi ** 2) / (2 * xi ** 2 + xi * c + c ** 2)) ** (1.0 / degree) \
        - np.sqrt(2) * (1 + c / xi) * m_g ** (1.0 / degree) / degree
    upper = (c / xi) ** (1.0 / degree) + (1 + c / xi) * m_g ** (1.0 / (2 * degree)) / degree
    return float(lower), float(upper)


def root_eigenvector(z, mesh, value):
    """(y, lambda y) with y_k = z^{2k} - z^{-2k}, k = 1..N+1"""
    k = np.arange(1, mesh.order + 1)
    y = z ** (2 * k) - z ** (-2 * k)
    return np.concatenate([y, value * y])


def roots_to_eigenvalues(report, params, mesh, oracle=None, rtol=1e-6):
    """
    lambda_j = (c/h)(z_j - 1/z_j) and its conjugate for every root.

    When `oracle` (a dense Spectrum of the same model) is given the two lists
    are matched one-to-one and a gap above `rtol` raises ConsistencyError.
    """
    model = build_model(Scheme.FD, params, mesh)
    pairs = []
    for z in report.roots:
        value = params.c / mesh.h * (z - 1 / z)
        for candidate in (value, np.conj(value)):
            root = z if candidate == value else np.conj(z)
            vec = root_eigenvector(root, mesh, candidate)
            vec = vec / np.linalg.norm(vec)
            residual = np.linalg.norm(model.rhs(vec) - candidate * vec) / max(abs(candidate), 1.0)
            pairs.append(EigenPair(candidate, vec, Provenance.POLYNOMIAL_ROOT, residual))
    spectrum = Spectrum.build(pairs, Scheme.FD, params, mesh)

    if oracle is not None:
        matching = match_eigenvalues(spectrum.values, oracle.values)
        if matching.max_gap > rtol:
            logger.error(f"Root and dense eigenvalues disagree: max gap {matching.max_gap:.2e}")
            raise ConsistencyError("root eigenvalue without a dense partner", gap=matching.max_gap, rtol=rtol)
        logger.info(f"Root and dense spectra agree to {matching.max_gap:.2e} ({matching.method} matching)")
    return spectrum
