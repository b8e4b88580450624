"""Parameter domains, affine operator decompositions, and sampling.

A parameter is a plain 1-D float array. A parametrized system is an
affine combination ``A(mu) = sum_q alpha_q(mu) A_q`` of fixed sparse
terms with an analogous affine right-hand side.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .errors import DomainError
from .linalg import SparseSolver

#: Named scalar coefficient forms usable in system manifests.
COEFFICIENT_FORMS = ("constant", "coordinate", "negated-coordinate", "product")


@dataclass(frozen=True)
class Coefficient:
    """One scalar coefficient function mu -> alpha(mu) from the registry.

    Forms: ``constant`` (value), ``coordinate`` (mu[index]),
    ``negated-coordinate`` (-mu[index]), ``product`` (mu[index]*mu[other]).
    """

    form: str
    value: float = 1.0
    index: int = 0
    other: int = 0

    def __post_init__(self):
        if self.form not in COEFFICIENT_FORMS:
            raise DomainError(f"unknown coefficient form {self.form!r}")

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.form == "constant":
            return self.value
        if self.form == "coordinate":
            return float(mu[self.index])
        if self.form == "negated-coordinate":
            return -float(mu[self.index])
        return float(mu[self.index] * mu[self.other])

    def to_json(self):
        out = {"form": self.form}
        if self.form == "constant":
            out["value"] = self.value
        else:
            out["index"] = self.index
        if self.form == "product":
            out["other"] = self.other
        return out

    @staticmethod
    def from_json(data):
        return Coefficient(
            form=data["form"],
            value=float(data.get("value", 1.0)),
            index=int(data.get("index", 0)),
            other=int(data.get("other", 0)),
        )


@dataclass(frozen=True)
class ParameterDomain:
    """Closed box of admissible parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DomainError("lower/upper bounds must be 1-D and matching")
        if np.any(lower > upper):
            raise DomainError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return self.lower.size

    def contains(self, mu, atol=1e-12):
        mu = np.asarray(mu, dtype=float)
        return bool(
            mu.shape == self.lower.shape
            and np.all(mu >= self.lower - atol)
            and np.all(mu <= self.upper + atol)
        )


@dataclass(frozen=True)
class SampleSet:
    """Finite set of parameters drawn from a domain.

    ``points`` has shape (count, P); rows are individual parameters.
    """

    points: np.ndarray
    seed: int
    role: str = "train"
    domain: ParameterDomain | None = None

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.shape[0] < 1:
            raise DomainError("a sample set needs at least one point")
        if self.domain is not None:
            for mu in points:
                if not self.domain.contains(mu):
                    raise DomainError(f"sample {mu} outside the parameter domain")
        object.__setattr__(self, "points", points)

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)


def sample_parameters(domain, count, seed, role="train"):
    """Draw ``count`` i.i.d. uniform parameters from the box domain.

    Uses a counter-based (Philox) generator so a (seed, role) pair fully
    determines the set.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.uniform(domain.lower, domain.upper, size=(count, domain.dim))
    return SampleSet(points=pts, seed=seed, role=role, domain=domain)


@dataclass
class AffineSystem:
    """Affinely parameter-dependent operator and right-hand side."""

    operator_terms: list
    operator_coeffs: list
    rhs_terms: list
    rhs_coeffs: list
    dimension: int = 0
    _solver_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.operator_terms = [sps.csr_matrix(t, dtype=float) for t in self.operator_terms]
        self.rhs_terms = [np.asarray(f, dtype=float) for f in self.rhs_terms]
        if not self.operator_terms:
            raise DomainError("at least one operator term required")
        n = self.operator_terms[0].shape[0]
        for t in self.operator_terms:
            if t.shape != (n, n):
                raise DomainError("operator terms must share a square dimension")
        for f in self.rhs_terms:
            if f.shape != (n,):
                raise DomainError("rhs terms must match the operator dimension")
        if len(self.operator_coeffs) != len(self.operator_terms):
            raise DomainError("one coefficient per operator term required")
        if len(self.rhs_coeffs) != len(self.rhs_terms):
            raise DomainError("one coefficient per rhs term required")
        self.dimension = n

    @property
    def n_operator_terms(self):
        return len(self.operator_terms)

    @property
    def n_rhs_terms(self):
        return len(self.rhs_terms)

    def operator_coefficients(self, mu):
        return np.array([c(mu) for c in self.operator_coeffs])

    def rhs_coefficients(self, mu):
        return np.array([c(mu) for c in self.rhs_coeffs])

    def operator(self, mu):
        """Assemble A(mu) = sum_q alpha_q(mu) A_q (sparsity union kept)."""
        alpha = self.operator_coefficients(mu)
        out = alpha[0] * self.operator_terms[0]
        for a, term in zip(alpha[1:], self.operator_terms[1:]):
            out = out + a * term
        return out

    def rhs(self, mu):
        zeta = self.rhs_coefficients(mu)
        out = np.zeros(self.dimension)
        for z, f in zip(zeta, self.rhs_terms):
            out += z * f
        return out

    def solver(self, mu):
        """Cached sparse factorization of A(mu) for this exact parameter."""
        key = tuple(np.asarray(mu, dtype=float))
        if key not in self._solver_cache:
            if len(self._solver_cache) > 64:
                self._solver_cache.clear()
            self._solver_cache[key] = SparseSolver(self.operator(key))
        return self._solver_cache[key]

    def solve(self, mu):
        """Full-order solve A(mu) u = f(mu) by sparse direct factorization."""
        return self.solver(mu).solve(self.rhs(mu))


def assemble_operator(system, mu):
    """Functional alias for :meth:`AffineSystem.operator`."""
    return system.operator(mu)
