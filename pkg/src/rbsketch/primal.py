"""Primal reduced-order model: Galerkin projection and weak greedy build.

The primal space is grown by a weak greedy on the dual norm of the
residual over a training set; the reference solution used by the
goal-oriented dual construction is the same greedy run extended by a
fixed number of extra snapshots.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import SparseSolver, solve_dense
from .spaces import ReducedSpace, SpaceBuilder


@dataclass
class ReducedModel:
    """Preassembled parameter-independent blocks of the projected system."""

    space: ReducedSpace
    system: object
    reduced_operator_terms: list  # Q_A dense (n, n) blocks V^T A_q V
    reduced_rhs_terms: list  # Q_f dense (n,) blocks V^T f_q
    residual_gram: dict | None = None

    @property
    def dim(self):
        return self.space.dim

    def reduced_operator(self, mu):
        alpha = self.system.operator_coefficients(mu)
        return sum(a * t for a, t in zip(alpha, self.reduced_operator_terms))

    def reduced_rhs(self, mu):
        zeta = self.system.rhs_coefficients(mu)
        return sum(z * f for z, f in zip(zeta, self.reduced_rhs_terms))


def reduce(system, space):
    """Project all affine terms of ``system`` onto ``space`` once."""
    v = space.basis
    op_terms = [np.asarray(v.T @ (a @ v)) for a in system.operator_terms]
    rhs_terms = [v.T @ f for f in system.rhs_terms]
    return ReducedModel(
        space=space,
        system=system,
        reduced_operator_terms=op_terms,
        reduced_rhs_terms=rhs_terms,
    )


def solve_reduced(model, mu):
    """Galerkin-reduced solve; returns (coefficients, lifted N-vector)."""
    coeffs = solve_dense(
        model.reduced_operator(mu), model.reduced_rhs(mu), context="primal reduced solve"
    )
    return coeffs, model.space.basis @ coeffs


def residual_vector(system, mu, utilde):
    """r(mu) = f(mu) - A(mu) utilde."""
    utilde = np.asarray(utilde, dtype=float)
    if utilde.shape != (system.dimension,):
        raise DomainError("approximation length mismatch")
    return system.rhs(mu) - system.operator(mu) @ utilde


class RieszResidualNorm:
    """Dual norm of the residual, sqrt(r^T R^{-1} r), for a fixed SPD R.

    Two routes are provided: a direct one through the cached
    factorization of R, and a preassembled one using the affine Gram
    blocks of the system against a reduced basis (no N-sized work per
    query). The preassembled route can lose accuracy once the residual
    is many orders of magnitude below the right-hand side.
    """

    def __init__(self, riesz):
        self.riesz = riesz
        self._solver = SparseSolver(riesz)

    def direct(self, system, mu, utilde):
        r = residual_vector(system, mu, utilde)
        return float(np.sqrt(max(r @ self._solver.solve(r), 0.0)))

    def preassemble(self, system, basis):
        """Gram blocks for ||f(mu) - A(mu) V c||_{R^{-1}} as a function of c."""
        riesz_inv_f = [self._solver.solve(f) for f in system.rhs_terms]
        av = [a @ basis for a in system.operator_terms]
        riesz_inv_av = [
            np.column_stack([self._solver.solve(col) for col in block.T])
            for block in av
        ]
        qf, qa = len(system.rhs_terms), len(system.operator_terms)
        g_ff = np.array(
            [[system.rhs_terms[p] @ riesz_inv_f[q] for q in range(qf)] for p in range(qf)]
        )
        g_fa = [[system.rhs_terms[p] @ riesz_inv_av[q] for q in range(qa)] for p in range(qf)]
        g_aa = [[av[p].T @ riesz_inv_av[q] for q in range(qa)] for p in range(qa)]
        return {"g_ff": g_ff, "g_fa": g_fa, "g_aa": g_aa}

    @staticmethod
    def from_gram(gram, system, mu, coeffs):
        zeta = system.rhs_coefficients(mu)
        alpha = system.operator_coefficients(mu)
        val = zeta @ gram["g_ff"] @ zeta
        for p, zp in enumerate(zeta):
            for q, aq in enumerate(alpha):
                val -= 2.0 * zp * aq * (gram["g_fa"][p][q] @ coeffs)
        for p, ap in enumerate(alpha):
            for q, aq in enumerate(alpha):
                val += ap * aq * (coeffs @ gram["g_aa"][p][q] @ coeffs)
        return float(np.sqrt(max(val, 0.0)))


def residual_dual_norm(system, mu, utilde, riesz):
    """One-shot sqrt(r(mu)^T R^{-1} r(mu)); cache a RieszResidualNorm to loop."""
    return RieszResidualNorm(riesz).direct(system, mu, utilde)


def weak_greedy_primal(system, riesz, train, n_target, use_gram=True):
    """Grow the primal space to ``n_target`` columns by residual argmax.

    Each iteration evaluates the residual dual norm of the current
    reduced solution over the training set, takes a full snapshot at the
    argmax (ties broken by lowest index), and orthonormalizes it in the
    ``riesz`` inner product. Candidates numerically inside the current
    span are rejected and the greedy advances to the next argmax.
    """
    if n_target < 1:
        raise DomainError("n_target must be >= 1")
    dual_norm = RieszResidualNorm(riesz)
    builder = SpaceBuilder(system.dimension, inner_product=riesz)
    points = train.points

    while builder.dim < n_target:
        if builder.dim == 0:
            scores = np.array([dual_norm.direct(system, mu, np.zeros(system.dimension))
                               for mu in points])
            coeff_rows = None
        else:
            model = reduce(system, builder.space())
            gram = dual_norm.preassemble(system, model.space.basis) if use_gram else None
            scores = np.empty(len(points))
            coeff_rows = np.empty((len(points), builder.dim))
            for idx, mu in enumerate(points):
                coeffs, lifted = solve_reduced(model, mu)
                coeff_rows[idx] = coeffs
                if gram is not None:
                    scores[idx] = dual_norm.from_gram(gram, system, mu, coeffs)
                else:
                    scores[idx] = dual_norm.direct(system, mu, lifted)

        for idx in np.argsort(-scores, kind="stable"):
            snapshot = system.solve(points[idx])
            if builder.try_append(snapshot, tuple(points[idx])):
                break
        else:
            raise DomainError(
                "training set exhausted before reaching the target dimension"
            )
    return builder.space()


def reference_solution_space(full_space, n_target):
    """Split one greedy run into (primal space, richer reference space).

    ``full_space`` must have been built to n_target + extra columns; the
    first n_target columns form the primal space and the whole basis the
    reference space (nested by construction of the greedy).
    """
    if full_space.dim < n_target:
        raise DomainError("greedy run shorter than the requested primal dimension")
    return full_space.truncate(n_target), full_space
