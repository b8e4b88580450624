"""Covariance choices defining the target error (semi-)norm.

The error measure is ||v||_Sigma = sqrt(v^T Sigma v). Sigma is carried
as a factorization Sigma = U^T U, used both for norm evaluation and for
drawing correlated Gaussian vectors. Supported kinds:

  identity              Euclidean error, Sigma = I
  spd-matrix            Sigma given as a sparse SPD matrix (e.g. a Riesz map)
  semidefinite-factored Sigma = U^T U given via its (possibly wide) factor,
                        e.g. U = chol(R_W) L for a vector-valued QoI
  rank-one              Sigma = l l^T for a scalar QoI
"""

import numpy as np
import scipy.sparse as sps

from .errors import DomainError, NormNotInvertibleError
from .linalg import SparseSolver, spd_sqrt_factor

_FACTOR_CHECK_TOL = 1e-10


class CovarianceSpec:
    """The matrix Sigma defining the target norm, held as Sigma = U^T U."""

    def __init__(self, kind, dimension, sigma=None, factor=None, vector=None):
        if kind not in ("identity", "spd-matrix", "semidefinite-factored", "rank-one"):
            raise DomainError(f"unknown covariance kind {kind!r}")
        self.kind = kind
        self.dimension = int(dimension)
        self.sigma = sps.csr_matrix(sigma) if sigma is not None else None
        self.vector = np.asarray(vector, dtype=float) if vector is not None else None
        if factor is not None and not sps.issparse(factor):
            factor = sps.csr_matrix(np.atleast_2d(np.asarray(factor, dtype=float)))
        self.factor = factor
        self._inverse_solver = None
        self._validate()

    # Constructors ---------------------------------------------------------
    @classmethod
    def identity(cls, dimension):
        return cls("identity", dimension)

    @classmethod
    def from_matrix(cls, sigma):
        """SPD Sigma given entrywise; the factor is a sparse LDL^T square root."""
        sigma = sps.csr_matrix(sigma)
        asym = abs(sigma - sigma.T)
        if asym.nnz and asym.max() > _FACTOR_CHECK_TOL * max(abs(sigma).max(), 1.0):
            raise DomainError("covariance matrix must be symmetric")
        factor = spd_sqrt_factor(sigma)
        return cls("spd-matrix", sigma.shape[0], sigma=sigma, factor=factor)

    @classmethod
    def from_factor(cls, factor, sigma=None):
        """Semi-definite Sigma = factor^T factor, factor possibly wide/short."""
        factor = sps.csr_matrix(factor)
        return cls(
            "semidefinite-factored", factor.shape[1], sigma=sigma, factor=factor
        )

    @classmethod
    def from_qoi(cls, extractor, output_gram):
        """Sigma = L^T R_W L for a vector QoI s = L u measured in R_W.

        The factor chol(R_W) @ L is built without ever assembling the
        N-by-N product.
        """
        extractor = sps.csr_matrix(extractor)
        u_w = spd_sqrt_factor(sps.csr_matrix(output_gram))
        return cls.from_factor(u_w @ extractor)

    @classmethod
    def rank_one(cls, vector):
        vector = np.asarray(vector, dtype=float)
        factor = sps.csr_matrix(vector[np.newaxis, :])
        return cls("rank-one", vector.size, factor=factor, vector=vector)

    # Queries --------------------------------------------------------------
    def _validate(self):
        if self.factor is not None and self.factor.shape[1] != self.dimension:
            raise DomainError("factor column count must equal the dimension")
        if self.sigma is not None:
            if self.sigma.shape != (self.dimension, self.dimension):
                raise DomainError("sigma shape mismatch")
            rebuilt = self.factor.T @ self.factor
            err = sps.linalg.norm(rebuilt - self.sigma)
            ref = max(sps.linalg.norm(self.sigma), 1.0)
            if err > _FACTOR_CHECK_TOL * ref:
                raise DomainError(
                    f"factor does not reproduce sigma (relative error {err / ref:.2e})"
                )

    @property
    def sample_dimension(self):
        """Length of the white-noise vector needed to draw one sample."""
        return self.dimension if self.factor is None else self.factor.shape[0]

    @property
    def invertible(self):
        return self.kind in ("identity", "spd-matrix")

    def correlate(self, white):
        """Map standard normal white noise to a N(0, Sigma) sample: U^T zhat."""
        white = np.asarray(white, dtype=float)
        if self.factor is None:
            return white.copy()
        return self.factor.T @ white

    def norm(self, v):
        """sqrt(v^T Sigma v), evaluated as ||U v||_2."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dimension:
            raise DomainError("vector length mismatch")
        if self.factor is None:
            return float(np.linalg.norm(v))
        return float(np.linalg.norm(self.factor @ v))

    def inverse_norm(self, v):
        """sqrt(v^T Sigma^{-1} v) via a cached sparse factorization of Sigma."""
        if not self.invertible:
            raise NormNotInvertibleError(
                f"Sigma of kind {self.kind!r} is singular by construction"
            )
        v = np.asarray(v, dtype=float)
        if self.kind == "identity":
            return float(np.linalg.norm(v))
        if self._inverse_solver is None:
            self._inverse_solver = SparseSolver(self.sigma)
        x = self._inverse_solver.solve(v)
        return float(np.sqrt(max(v @ x, 0.0)))


def sigma_norm(cov, v):
    """Functional alias for :meth:`CovarianceSpec.norm`."""
    return cov.norm(v)


def sigma_inverse_norm(cov, v):
    """Functional alias for :meth:`CovarianceSpec.inverse_norm`."""
    return cov.inverse_norm(v)
