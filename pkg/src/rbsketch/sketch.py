"""Gaussian sketching: tail bounds, sample-size planning, drawing, norms.

A sketch is a frozen realization of K correlated Gaussian vectors
Z_1..Z_K with covariance Sigma. The map Phi with rows Z_i^T / sqrt(K)
estimates ||v||_Sigma by ||Phi v||_2, with multiplicative deviation
controlled by a chi-squared concentration bound.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .covariance import CovarianceSpec
from .errors import DomainError

SQRT_E = math.sqrt(math.e)


def chi2_fail_bound(w, k):
    """Upper bound (sqrt(e)/w)^k on the probability that Q ~ chi2(k)
    leaves [k w^-2, k w^2].

    Valid (and enforced) only for w > sqrt(e) and k >= 3; the failure
    probability appears to decay exponentially for smaller w as well,
    but no bound is available there, so such inputs are rejected.
    """
    if w <= SQRT_E:
        raise DomainError(f"w must exceed sqrt(e) ~ {SQRT_E:.4f}, got {w}")
    if k < 3:
        raise DomainError(f"k must be >= 3, got {k}")
    return (SQRT_E / w) ** k


def chi2_fail_exact(w, k):
    """Exact probability that Q ~ chi2(k) leaves [k w^-2, k w^2].

    Evaluated as CDF(k/w^2) + (1 - CDF(k w^2)) through the regularized
    incomplete gamma functions.
    """
    if w < 1:
        raise DomainError(f"w must be >= 1, got {w}")
    a = k / 2.0
    lower = scipy.special.gammainc(a, k / (2.0 * w * w))
    upper = scipy.special.gammaincc(a, k * w * w / 2.0)
    return float(lower + upper)


def select_sample_count(m_points, delta, w):
    """Smallest admissible K for estimating ``m_points`` norms at once.

    Guarantees, with probability at least 1 - delta, that all m
    sketched norms lie within a factor w of the true Sigma-norms:
    K = max(ceil((log m + log(1/delta)) / log(w / sqrt(e))), 3).
    """
    if m_points < 1:
        raise DomainError("m_points must be >= 1")
    if not 0 < delta < 1:
        raise DomainError("delta must be in (0, 1)")
    if w <= SQRT_E:
        raise DomainError(f"w must exceed sqrt(e) ~ {SQRT_E:.4f}, got {w}")
    ratio = (math.log(m_points) + math.log(1.0 / delta)) / math.log(w / SQRT_E)
    return max(math.ceil(ratio - 1e-12), 3)


@dataclass(frozen=True)
class Sketch:
    """K frozen Gaussian vectors plus the (w, delta) certificate they serve.

    ``vectors`` has shape (k, n); row i is Z_i^T.
    """

    vectors: np.ndarray
    k: int
    w: float
    delta: float
    seed: int
    covariance: CovarianceSpec

    def __post_init__(self):
        if self.k < 3:
            raise DomainError("a sketch needs k >= 3 vectors")
        if self.vectors.shape != (self.k, self.covariance.dimension):
            raise DomainError("sketch vector shape mismatch")

    def norm(self, v):
        """sqrt((1/K) sum_i (Z_i^T v)^2) = ||Phi v||_2."""
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(self.vectors @ v) / math.sqrt(self.k))


def draw_sketch(cov, k, seed, w=float("nan"), delta=float("nan")):
    """Draw K independent N(0, Sigma) vectors, frozen into a Sketch.

    Each Z_i = U^T zhat_i with zhat_i standard normal of length rows(U);
    for a rank-one covariance this degenerates to a scalar multiple of
    the defining vector. Drawing is single-threaded per seed so the
    vector stream is deterministic.
    """
    if k < 3:
        raise DomainError("k must be >= 3")
    rng = np.random.Generator(np.random.Philox(seed))
    white = rng.standard_normal((k, cov.sample_dimension))
    vectors = np.empty((k, cov.dimension))
    for i in range(k):
        vectors[i] = cov.correlate(white[i])
    return Sketch(vectors=vectors, k=k, w=w, delta=delta, seed=seed, covariance=cov)


def sketch_norm(sk, v):
    """Functional alias for :meth:`Sketch.norm`."""
    return sk.norm(v)
