import numpy as np
from scipy.linalg import cho_solve

from .errors import NotPositiveDefinite

PIVOT_RTOL = 1e-12


def cholesky(cov):
    """Lower Cholesky factor, rejecting near-singular matrices.

    A pivot (squared diagonal entry of the factor) below ``PIVOT_RTOL`` times the
    largest diagonal entry of ``cov`` counts as a failure.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(cov).max())):
        raise NotPositiveDefinite("matrix is not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(chol) ** 2
    if pivots.min() < PIVOT_RTOL * np.diag(cov).max():
        raise NotPositiveDefinite(f"smallest Cholesky pivot {pivots.min():.3e} too small")
    return chol


def spd_solve(cov, rhs):
    """Solve ``cov @ x = rhs`` for symmetric positive definite ``cov``."""
    chol = cholesky(cov)
    return cho_solve((chol, True), np.asarray(rhs, dtype=float))


def is_spd(cov) -> bool:
    try:
        cholesky(cov)
    except NotPositiveDefinite:
        return False
    return True
