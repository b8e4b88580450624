"""Greedy and POD constructions of the reduced dual space.

Two greedy variants are provided: a residual-driven one that treats the
sketch index as an extra parameter and snapshots single dual solutions,
and a goal-oriented one that snapshots the leading error direction of
the whole K-column dual matrix at the parameter where the fast and
reference estimators disagree most. Both stop on a quantile criterion.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateEigenproblemError, DomainError
from .estimator import (
    build_online_estimator,
    estimator_ratio,
    solve_random_duals,
)
from .linalg import solve_dense
from .primal import solve_reduced
from .spaces import SpaceBuilder


@dataclass
class GreedyConfig:
    """Stopping and training configuration shared by both greedy variants."""

    tol: float
    q: float = 1.0
    max_iterations: int = 100
    seed: int = 0
    norm_choice: str = "auto"  # 'sigma-inverse', 'riesz-inverse', or 'auto'

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise DomainError("quantile order must lie in (0, 1]")
        if self.tol <= 0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")


@dataclass
class GreedyResult:
    """Dual space plus the per-iteration trace of one greedy run."""

    space: object
    converged: bool
    criterion_trace: list = field(default_factory=list)
    selections: list = field(default_factory=list)


def quantile(values, q):
    """Ascending-rank quantile: element at rank ceil(q * len), 1-based.

    q = 1 returns the maximum, so the quantile criterion generalizes the
    max criterion.
    """
    values = sorted(values)
    if not values:
        raise DomainError("quantile of an empty list")
    if not 0 < q <= 1:
        raise DomainError("quantile order must lie in (0, 1]")
    rank = math.ceil(q * len(values))
    return values[rank - 1]


def leading_eigenvector(m):
    """Unit eigenvector of the largest eigenvalue of a symmetric PSD matrix.

    Sign is fixed so the largest-magnitude entry is positive.
    """
    m = np.asarray(m, dtype=float)
    if np.max(np.abs(m - m.T)) > 1e-10 * max(np.max(np.abs(m)), 1.0):
        raise DomainError("matrix must be symmetric")
    vals, vecs = scipy.linalg.eigh(m)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0 or vals[-1] < 1e-14 * scale:
        raise DegenerateEigenproblemError("matrix is numerically zero")
    if vals[0] < -1e-10 * scale:
        raise DomainError("matrix is not positive semi-definite")
    lam = vecs[:, -1]
    pivot = np.argmax(np.abs(lam))
    if lam[pivot] < 0:
        lam = -lam
    return lam / np.linalg.norm(lam)


def _dual_residual_norm_fn(cov, riesz_cov):
    """Pick the norm used for dual residuals: Sigma^{-1} when invertible."""
    if cov.invertible:
        return cov.inverse_norm
    if riesz_cov is None:
        raise DomainError(
            "singular covariance requires a fallback Riesz map for dual residuals"
        )
    return riesz_cov.inverse_norm


def greedy_dual_vector(system, cov, sk, train, cfg, inner_product=None, riesz_cov=None):
    """Residual-driven greedy over the augmented set {1..K} x train.

    Each iteration projects every dual solution onto the current space,
    enriches at the (index, parameter) pair with the largest dual
    residual norm, and stops once the q-quantile of those norms over the
    augmented training set drops to the tolerance. Hitting the iteration
    cap is a normal, flagged return.
    """
    norm_fn = _dual_residual_norm_fn(cov, riesz_cov)
    points = train.points
    builder = SpaceBuilder(system.dimension, inner_product=inner_product)
    trace, selections = [], []
    operators = [system.operator(mu) for mu in points]

    for _ in range(cfg.max_iterations + 1):
        if builder.dim == 0:
            # Empty space: every projected dual is zero, residual is Z_i.
            residuals = np.array(
                [[norm_fn(z) for z in sk.vectors] for _ in points]
            )
        else:
            w = builder.space().basis
            reduced_terms = [np.asarray(w.T @ (a @ w)) for a in system.operator_terms]
            proj = sk.vectors @ w  # rows Z_i^T W
            residuals = np.empty((len(points), sk.k))
            for p, mu in enumerate(points):
                alpha = system.operator_coefficients(mu)
                op = sum(a * t for a, t in zip(alpha, reduced_terms))
                y = solve_dense(op.T, proj.T, context="dual reduced solve")
                defect = operators[p].T @ (w @ y) - sk.vectors.T
                for i in range(sk.k):
                    residuals[p, i] = norm_fn(defect[:, i])

        crit = quantile(residuals.ravel(), cfg.q)
        trace.append(crit)
        if crit <= cfg.tol:
            return GreedyResult(builder.space() if builder.dim else None, True,
                                trace, selections)
        if len(selections) >= cfg.max_iterations:
            return GreedyResult(builder.space() if builder.dim else None, False,
                                trace, selections)

        flat = np.argmax(residuals)  # ties -> lowest linear index
        p_star, i_star = divmod(int(flat), sk.k)
        mu_star = points[p_star]
        snapshot = system.solver(mu_star).solve(sk.vectors[i_star], trans="T")
        builder.try_append(snapshot, (int(i_star), tuple(mu_star)))
        selections.append(
            {"index": int(i_star), "mu": tuple(mu_star), "criterion": crit}
        )
    raise AssertionError("unreachable")


def greedy_dual_goal_oriented(system, cov, sk, primal_model, reference_model,
                              train, cfg, inner_product=None):
    """Goal-oriented greedy with leading-eigenvector combination weights.

    The selection criterion is the pointwise disagreement between the
    fast estimator on the current dual space and a reference estimator
    built from a strictly richer primal model. Each enrichment solves
    all K duals at the selected parameter (one factorization), forms the
    Gram matrix of the projection defect, and appends the dual matrix
    applied to its leading eigenvector.
    """
    if reference_model.dim <= primal_model.dim:
        raise DomainError("reference model must be strictly richer than the primal")
    points = train.points

    # Reference estimator over the training set, computed once up front.
    proj_ref = sk.vectors @ reference_model.space.basis
    proj_primal = sk.vectors @ primal_model.space.basis
    delta_ref = np.empty(len(points))
    primal_coeffs = []
    for p, mu in enumerate(points):
        c, _ = solve_reduced(primal_model, mu)
        c_ref, _ = solve_reduced(reference_model, mu)
        primal_coeffs.append(c)
        delta_ref[p] = np.linalg.norm(proj_ref @ c_ref - proj_primal @ c) / math.sqrt(sk.k)

    # At primal snapshot parameters both estimators sit at roundoff level;
    # their ratio is then meaningless noise that can never be driven below
    # the tolerance, so such points count as perfectly estimated.
    noise_floor = 1e-9 * float(np.max(delta_ref))

    def ratio_at(p, fast_p):
        if max(delta_ref[p], fast_p) <= noise_floor:
            return 1.0
        return estimator_ratio(delta_ref[p], fast_p)

    builder = SpaceBuilder(system.dimension, inner_product=inner_product)
    trace, selections = [], []
    taken = np.zeros(len(points), dtype=bool)

    for _ in range(cfg.max_iterations + 1):
        if builder.dim == 0:
            fast = np.zeros(len(points))
        else:
            oe = build_online_estimator(
                system, primal_model.space, builder.space(), sk
            )
            fast = np.array(
                [oe.fast_estimate(mu, primal_coeffs[p]) for p, mu in enumerate(points)]
            )
        ratios = np.array(
            [ratio_at(p, fast[p]) for p in range(len(points))]
        )
        crit = quantile(ratios, cfg.q)
        trace.append(crit)
        if crit <= cfg.tol:
            return GreedyResult(builder.space() if builder.dim else None, True,
                                trace, selections)
        if len(selections) >= cfg.max_iterations:
            return GreedyResult(builder.space() if builder.dim else None, False,
                                trace, selections)

        # Already-selected parameters are excluded from later rounds so a
        # numerically exact dual at mu* cannot stall the loop.
        masked = np.where(taken, -np.inf, ratios)
        p_star = int(np.argmax(masked))
        if not np.isfinite(masked[p_star]) and masked[p_star] == -np.inf:
            return GreedyResult(builder.space() if builder.dim else None, False,
                                trace, selections)
        mu_star = points[p_star]
        taken[p_star] = True

        duals = solve_random_duals(system, mu_star, sk)
        if builder.dim == 0:
            defect = duals.columns
        else:
            oe = build_online_estimator(system, primal_model.space, builder.space(), sk)
            defect = duals.columns - oe.projected_duals(mu_star)
        m = defect.T @ defect
        lam = leading_eigenvector(m)
        builder.try_append(duals.columns @ lam, (tuple(mu_star), lam.copy()))
        selections.append(
            {"mu": tuple(mu_star), "lambda": lam.tolist(), "criterion": crit}
        )
    raise AssertionError("unreachable")


def pod_dual_baseline(snapshots, n_target, inner_product=None):
    """Method-of-snapshots POD of stacked dual columns in a stated inner product.

    Returns the dominant ``n_target`` directions; if the stack has lower
    numerical rank, the basis is truncated with a warning.
    """
    if not snapshots:
        raise DomainError("POD needs at least one dual snapshot matrix")
    if n_target < 1:
        raise DomainError("n_target must be >= 1")
    stack = np.column_stack([s.columns for s in snapshots])
    weighted = stack if inner_product is None else inner_product @ stack
    gram = stack.T @ weighted
    vals, vecs = scipy.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    rank_tol = max(vals[0], 0.0) * stack.shape[1] * np.finfo(float).eps
    rank = int(np.sum(vals > rank_tol))
    if rank == 0:
        raise DomainError("all dual snapshots are numerically zero")
    if n_target > rank:
        warnings.warn(
            f"requested {n_target} POD modes but numerical rank is {rank}; truncating",
            RuntimeWarning,
        )
        n_target = rank
    modes = stack @ (vecs[:, :n_target] / np.sqrt(vals[:n_target]))
    builder = SpaceBuilder(stack.shape[0], inner_product=inner_product)
    for j in range(n_target):
        builder.try_append(modes[:, j], {"pod_mode": j, "energy": float(vals[j])})
    return builder.space()
