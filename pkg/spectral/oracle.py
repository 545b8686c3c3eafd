"""Dense eigensolver oracle for the first-order operator."""
import logging

import numpy as np
from scipy.linalg import LinAlgError, eig, hessenberg

from core.exceptions import NumericalFailure, SizeError
from core.utils import get_setting
from semidiscrete.assembly import assemble_dense_operator

from .spectrum import EigenPair, Provenance, Spectrum

logger = logging.getLogger(__name__)

DENSE_MAX_N = 2000
RESIDUAL_TOL = 1e-8


def dense_spectrum(model, check_residuals=True):
    """
    All 2(N+1) eigenpairs of the assembled operator.

    LAPACK's geev balances the matrix, reduces it to Hessenberg form and runs
    the shifted QR iteration. Right vectors are unit length; left vectors are
    scaled so that w_i^H v_i = 1.
    """
    max_n = get_setting("WAVESTAB_DENSE_MAX_N", DENSE_MAX_N)
    if model.mesh.N > max_n:
        raise SizeError("mesh too large for the dense eigensolver", N=model.mesh.N, limit=max_n)

    operator = assemble_dense_operator(model)
    try:
        values, left, right = eig(operator, left=True, right=True)
    except LinAlgError as e:
        logger.error(f"Dense eigensolve failed for {model}: {e}")
        raise NumericalFailure("QR iteration did not converge", partial=hessenberg(operator),
                               N=model.mesh.N) from e

    right = right / np.linalg.norm(right, axis=0)
    duality = np.einsum("ij,ij->j", left.conj(), right)
    left = left / duality.conj()

    residuals = np.linalg.norm(operator @ right - right * values, axis=0) / np.maximum(np.abs(values), 1.0)
    pairs = [
        EigenPair(value, right[:, index], Provenance.DENSE_ORACLE, float(residuals[index]))
        for index, value in enumerate(values)
    ]
    spectrum = Spectrum.build(pairs, model.scheme, model.params, model.mesh, left_vectors=left)

    tolerance = get_setting("WAVESTAB_RESIDUAL_TOL", RESIDUAL_TOL)
    if check_residuals and residuals.max() > tolerance:
        logger.error(f"Dense eigenpair residual {residuals.max():.2e} above {tolerance:.0e} for {model}")
        raise NumericalFailure("dense eigenpair residual too large", partial=spectrum,
                               residual=float(residuals.max()))

    logger.info(f"Dense spectrum of {model}: {len(spectrum)} eigenvalues, "
                f"max residual {residuals.max():.2e}, max real part {spectrum.max_real_part():.3e}")
    return spectrum
