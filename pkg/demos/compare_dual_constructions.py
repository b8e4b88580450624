"""Three ways to build the reduced dual space, same accuracy target.

The dual space approximates K random dual solutions across the whole
parameter box. This script sizes the space built by the residual-driven
greedy, the goal-oriented greedy, and a POD of dual snapshots, all
matched to the same quantile stopping criterion. The goal-oriented
variant, which targets the estimator ratio instead of the dual residual,
consistently needs the fewest vectors.
"""

import numpy as np

from rbsketch import (
    BENCHMARK_DOMAIN,
    CovarianceSpec,
    GreedyConfig,
    assemble_helmholtz,
    build_online_estimator,
    draw_sketch,
    estimator_ratio,
    greedy_dual_goal_oriented,
    greedy_dual_vector,
    pod_dual_baseline,
    quantile,
    reduce,
    reference_solution_space,
    sample_parameters,
    solve_random_duals,
    solve_reduced,
    weak_greedy_primal,
)

disc = assemble_helmholtz(0.1)
cov = CovarianceSpec.from_matrix(disc.riesz_h1)
train = sample_parameters(BENCHMARK_DOMAIN, 60, seed=2, role="train")
full = weak_greedy_primal(disc.system, disc.riesz_h1, train, 14)
primal_space, reference_space = reference_solution_space(full, 6)
primal = reduce(disc.system, primal_space)
reference = reduce(disc.system, reference_space)

tol, q = 3.0, 0.975
sk = draw_sketch(cov, 10, seed=5, w=4.0, delta=1e-2)
cfg = GreedyConfig(tol=tol, q=q, max_iterations=100)

res1 = greedy_dual_vector(disc.system, cov, sk, train, cfg,
                          inner_product=disc.riesz_h1)
res2 = greedy_dual_goal_oriented(disc.system, cov, sk, primal, reference,
                                 train, cfg, inner_product=disc.riesz_h1)


def reference_ratios(dual_space):
    """Quantile criterion the goal-oriented greedy stops on."""
    proj_ref = sk.vectors @ reference.space.basis
    proj_primal = sk.vectors @ primal.space.basis
    delta_ref, coeffs = [], []
    for mu in train.points:
        c, _ = solve_reduced(primal, mu)
        c_ref, _ = solve_reduced(reference, mu)
        coeffs.append(c)
        delta_ref.append(np.linalg.norm(proj_ref @ c_ref - proj_primal @ c)
                         / np.sqrt(sk.k))
    floor = 1e-9 * max(delta_ref)
    oe = build_online_estimator(disc.system, primal.space, dual_space, sk)
    out = []
    for p, mu in enumerate(train.points):
        fast = oe.fast_estimate(mu, coeffs[p])
        out.append(1.0 if max(delta_ref[p], fast) <= floor
                   else estimator_ratio(delta_ref[p], fast))
    return out


snaps = [solve_random_duals(disc.system, mu, sk) for mu in train.points]
pod_full = pod_dual_baseline(snaps, 50, inner_product=disc.riesz_h1)
n_pod = next(n for n in range(1, pod_full.dim + 1)
             if quantile(reference_ratios(pod_full.truncate(n)), 0.99) <= tol)

print(f"stopping criterion: {q:.3f}-quantile <= {tol}, K={sk.k}")
print(f"residual-driven greedy : {res1.space.dim:3d} dual vectors")
print(f"goal-oriented greedy   : {res2.space.dim:3d} dual vectors")
print(f"POD, matched criterion : {n_pod:3d} dual vectors")
