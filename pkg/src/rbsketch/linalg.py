"""Shared sparse/dense linear algebra helpers.

All sparse factorizations are computed once and cached on the owning
object; explicit inverses are never formed.
"""

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import SingularOperatorError, SingularReducedSystemError

# Reciprocal-condition threshold below which a dense reduced system is
# treated as singular (near-resonance parameter for the current space).
RCOND_FLOOR = 1e-12


def spd_sqrt_factor(sigma):
    """Return a sparse upper factor ``U`` with ``U.T @ U == sigma``.

    ``sigma`` must be sparse SPD. Uses an LDL^T decomposition obtained
    from an unpivoted symmetric-mode LU in natural ordering, so
    ``U = sqrt(D) L^T``. Natural ordering keeps banded matrices banded,
    which covers the tensor-grid Riesz maps used here.
    """
    sigma = sps.csc_matrix(sigma)
    try:
        lu = spla.splu(
            sigma,
            permc_spec="NATURAL",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise SingularOperatorError(f"covariance factorization failed: {exc}") from exc
    d = lu.U.diagonal()
    if np.any(d <= 0):
        raise SingularOperatorError("covariance matrix is not positive definite")
    return sps.csr_matrix((sps.diags(np.sqrt(d)) @ lu.L.T))


class SparseSolver:
    """Cached sparse LU solver for a square matrix.

    Wraps SuperLU and verifies the algebraic residual of every solve so
    that near-singular factorizations surface as errors instead of
    silently inaccurate solutions.
    """

    def __init__(self, matrix, residual_tol=1e-10):
        self.matrix = sps.csc_matrix(matrix)
        self.residual_tol = residual_tol
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise SingularOperatorError(f"sparse factorization failed: {exc}") from exc

    def solve(self, rhs, trans="N"):
        """Solve A x = rhs (or A^T x = rhs when trans='T')."""
        rhs = np.asarray(rhs, dtype=float)
        x = self._lu.solve(rhs, trans=trans)
        if not np.all(np.isfinite(x)):
            raise SingularOperatorError("sparse solve produced non-finite entries")
        op = self.matrix if trans == "N" else self.matrix.T
        res = np.linalg.norm(op @ x - rhs)
        scale = np.linalg.norm(rhs)
        if scale > 0 and res > self.residual_tol * scale:
            raise SingularOperatorError(
                f"sparse solve inaccurate (relative residual {res / scale:.2e}); "
                "operator is numerically singular"
            )
        return x


def solve_dense(matrix, rhs, context="reduced system"):
    """Solve a small dense system with an LU + reciprocal-condition guard."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    try:
        lu, piv = scipy.linalg.lu_factor(matrix)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise SingularReducedSystemError(f"{context}: factorization failed") from exc
    anorm = np.linalg.norm(matrix, 1)
    rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
    if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularReducedSystemError(
            f"{context}: reciprocal condition {rcond:.2e} below {RCOND_FLOOR:.0e}",
            rcond=rcond,
        )
    return scipy.linalg.lu_solve((lu, piv), rhs)


def gram_inner(inner_product, a, b):
    """Inner products a^T R b for column blocks a, b (R=None means identity)."""
    if inner_product is None:
        return a.T @ b
    return a.T @ (inner_product @ b)


def orthonormalize_against(basis, candidate, inner_product, drop_tol=1e-10):
    """Orthonormalize ``candidate`` against the columns of ``basis``.

    Modified Gram-Schmidt in the given SPD inner product with one
    reorthogonalization pass. Returns the new unit column, or ``None``
    when the post-projection norm falls below ``drop_tol`` times the
    pre-projection norm (candidate numerically in the span).
    """
    v = np.array(candidate, dtype=float)

    def norm(x):
        if inner_product is None:
            return float(np.linalg.norm(x))
        return float(np.sqrt(max(x @ (inner_product @ x), 0.0)))

    norm0 = norm(v)
    if norm0 == 0.0:
        return None
    for _ in range(2):  # MGS + one reorthogonalization pass
        for j in range(basis.shape[1]):
            q = basis[:, j]
            if inner_product is None:
                v -= (q @ v) * q
            else:
                v -= (q @ (inner_product @ v)) * q
    nv = norm(v)
    if nv < drop_tol * norm0:
        return None
    return v / nv
