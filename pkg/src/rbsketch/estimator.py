"""Randomized error estimators.

The exact estimator sketches the true error either directly or, through
the error-residual relationship, by applying K random dual solutions to
the residual. The fast estimator replaces the dual solutions by their
Galerkin projections onto a reduced dual space and is evaluated online
from preassembled blocks with a single small dense solve.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import solve_dense
from .primal import residual_vector

#: Sentinel effectivity ratio when the fast estimator vanishes but the
#: reference one does not; ranks above every finite ratio in argmax loops.
INFINITE_RATIO = float("inf")


@dataclass
class DualSnapshotMatrix:
    """All K dual solutions at one parameter, Y(mu) = [Y_1 ... Y_K]."""

    mu: tuple
    columns: np.ndarray  # (n, k)


def exact_estimator_from_truth(sk, u, utilde):
    """Sketch norm of the true error: sqrt((1/K) sum (Z_i^T (u - utilde))^2)."""
    return sk.norm(np.asarray(u, dtype=float) - np.asarray(utilde, dtype=float))


def solve_random_duals(system, mu, sk):
    """Solve A(mu)^T Y_i = Z_i for all K sketch vectors.

    One sparse factorization of A(mu) is reused (transposed solves)
    across all K right-hand sides.
    """
    solver = system.solver(mu)
    cols = np.column_stack([solver.solve(z, trans="T") for z in sk.vectors])
    return DualSnapshotMatrix(mu=tuple(np.asarray(mu, dtype=float)), columns=cols)


def exact_estimator_from_duals(duals, r):
    """sqrt((1/K) sum (Y_i(mu)^T r)^2); equals the truth route exactly."""
    r = np.asarray(r, dtype=float)
    if r.shape[0] != duals.columns.shape[0]:
        raise DomainError("residual length mismatch")
    k = duals.columns.shape[1]
    return float(np.linalg.norm(duals.columns.T @ r) / math.sqrt(k))


@dataclass
class OnlineEstimator:
    """Preassembled blocks for O(n_dual^3)-per-query fast estimation."""

    dual_space: object
    system: object
    reduced_dual_operator_terms: list  # Q_A blocks W^T A_q W
    cross_terms: list  # Q_A blocks W^T A_q V
    reduced_rhs_terms: list  # Q_f vectors W^T f_q
    sketch_projections: np.ndarray  # (K, n_dual) rows Z_i^T W
    k: int
    certificate: dict

    @property
    def dual_dim(self):
        return self.dual_space.dim

    def _reduced_blocks(self, mu, primal_coeffs):
        alpha = self.system.operator_coefficients(mu)
        zeta = self.system.rhs_coefficients(mu)
        op = sum(a * t for a, t in zip(alpha, self.reduced_dual_operator_terms))
        rhs = sum(z * f for z, f in zip(zeta, self.reduced_rhs_terms))
        rhs = rhs - sum(
            a * (c @ primal_coeffs) for a, c in zip(alpha, self.cross_terms)
        )
        return op, rhs

    def fast_estimate(self, mu, primal_coeffs):
        """Single-solve route: sketch norm of the reduced residual correction.

        Solves <A(mu) e, v> = <r(mu), v> for all v in the dual space using
        only reduced blocks, then returns
        sqrt((1/K) sum_i ((Z_i^T W) e_coeffs)^2).
        """
        op, rhs = self._reduced_blocks(mu, primal_coeffs)
        e_coeffs = solve_dense(op, rhs, context="dual reduced solve")
        return float(
            np.linalg.norm(self.sketch_projections @ e_coeffs) / math.sqrt(self.k)
        )

    def fast_estimate_via_duals(self, mu, primal_coeffs):
        """K-solve verification route: project each dual, apply to the residual.

        Algebraically identical to :meth:`fast_estimate`; kept as an
        independent code path to guard the single-solve identity.
        """
        op, rhs = self._reduced_blocks(mu, primal_coeffs)
        # K reduced dual solves (A^T W) y_i = W^T Z_i, then Y_i^T r = y_i^T (W^T r).
        y = solve_dense(op.T, self.sketch_projections.T, context="dual reduced solve")
        return float(np.linalg.norm(y.T @ rhs) / math.sqrt(self.k))

    def projected_duals(self, mu):
        """Lifted Galerkin projections [Ytilde_1(mu) ... Ytilde_K(mu)]."""
        alpha = self.system.operator_coefficients(mu)
        op = sum(a * t for a, t in zip(alpha, self.reduced_dual_operator_terms))
        y = solve_dense(op.T, self.sketch_projections.T, context="dual reduced solve")
        return self.dual_space.basis @ y


def build_online_estimator(system, primal_space, dual_space, sk, certificate=None):
    """Precompute every parameter-independent block of the fast estimator."""
    if primal_space.dim < 1 or dual_space.dim < 1:
        raise DomainError("spaces must be nonempty")
    v, w = primal_space.basis, dual_space.basis
    return OnlineEstimator(
        dual_space=dual_space,
        system=system,
        reduced_dual_operator_terms=[np.asarray(w.T @ (a @ w)) for a in system.operator_terms],
        cross_terms=[np.asarray(w.T @ (a @ v)) for a in system.operator_terms],
        reduced_rhs_terms=[w.T @ f for f in system.rhs_terms],
        sketch_projections=sk.vectors @ w,
        k=sk.k,
        certificate=dict(certificate or {"w": sk.w, "delta": sk.delta}),
    )


def fast_estimator(oe, mu, primal_coeffs):
    """Functional alias for :meth:`OnlineEstimator.fast_estimate`."""
    return oe.fast_estimate(mu, primal_coeffs)


def epsilon_dual_residual(system, oe, sk, cov, probe):
    """Max over probe points and sketch indices of ||A(mu)^T Ytilde_i - Z_i||
    in the Sigma^{-1} norm.

    This estimates, over an explicit finite probe set, the dual-residual
    quantity that additively widens the certificate; the supremum over
    the whole parameter set is not computable and is never claimed.
    """
    if not cov.invertible:
        raise DomainError("epsilon requires an invertible covariance")
    worst = 0.0
    for mu in probe:
        ytilde = oe.projected_duals(mu)
        defect = system.operator(mu).T @ ytilde - sk.vectors.T
        for i in range(sk.k):
            worst = max(worst, cov.inverse_norm(defect[:, i]))
    return worst


def effectivity_alpha(exact_values, fast_values):
    """max over the probe of max{exact/fast, fast/exact}; >= 1 or +inf.

    A vanishing fast estimate against a nonzero exact one yields the
    infinity sentinel rather than an exception, so greedy loops can
    rank such parameters as maximal-priority candidates.
    """
    exact_values = np.asarray(exact_values, dtype=float)
    fast_values = np.asarray(fast_values, dtype=float)
    if exact_values.shape != fast_values.shape:
        raise DomainError("probe evaluations must align")
    worst = 1.0
    for d, dt in zip(exact_values, fast_values):
        worst = max(worst, estimator_ratio(d, dt))
    return worst


def estimator_ratio(exact, fast):
    """max{exact/fast, fast/exact} with 0/0 := 1 and x/0 := +inf."""
    if exact == 0.0 and fast == 0.0:
        return 1.0
    if exact == 0.0 or fast == 0.0:
        return INFINITE_RATIO
    return max(exact / fast, fast / exact)
