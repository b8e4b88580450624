"""Experiment driver: build certified reduced models, run online sweeps,
and regenerate the sketch-planning reference tables as CSV.

Subcommands: build, estimate, table22, fig21, sweep-histogram. Every
build writes a manifest.json; all randomness sits behind three named
seeds (sketch / train / online) so runs can be both replayed and
redrawn.
"""

import argparse
import json
import math
import os
import sys as _sys

import numpy as np

from . import io as rio
from .covariance import CovarianceSpec
from .errors import ConfigError, RbsketchError, SingularOperatorError, SingularReducedSystemError
from .estimator import build_online_estimator, estimator_ratio, exact_estimator_from_truth, solve_random_duals
from .greedy import GreedyConfig, greedy_dual_goal_oriented, greedy_dual_vector, pod_dual_baseline, quantile
from .helmholtz import BENCHMARK_DOMAIN, assemble_helmholtz
from .primal import reduce, reference_solution_space, solve_reduced, weak_greedy_primal
from .sketch import SQRT_E, chi2_fail_bound, chi2_fail_exact, draw_sketch, select_sample_count
from .system import ParameterDomain, sample_parameters

SCHEMA_VERSION = 1

COVARIANCE_KEYWORDS = ("euclidean", "h1", "l2", "qoi")


class ExperimentConfig:
    """Validated experiment configuration (JSON schema version 1)."""

    def __init__(self, data):
        if data.get("schema_version", 1) != SCHEMA_VERSION:
            raise ConfigError("unsupported config schema version")
        self.benchmark = data.get("benchmark", {"kind": "helmholtz", "h": 0.05})
        self.covariance = data.get("covariance", "h1")
        if self.covariance not in COVARIANCE_KEYWORDS:
            raise ConfigError(
                f"covariance must be one of {COVARIANCE_KEYWORDS}, got {self.covariance!r}"
            )
        self.n_primal = int(data.get("n_primal", 10))
        self.extra_reference = int(data.get("extra_reference", 10))
        self.sketch = data.get("sketch", {"w": 4.0, "delta": 1e-2, "online_count": 1000})
        if "k" in self.sketch:
            if "online_count" in self.sketch:
                raise ConfigError(
                    "sketch plan must set either k or (w, delta, online_count), not both"
                )
        elif not {"w", "delta", "online_count"} <= set(self.sketch):
            raise ConfigError("sketch plan needs k, or all of (w, delta, online_count)")
        self.dual = data.get("dual", {"method": "alg2", "tol": 2.0, "q": 0.99})
        if self.dual.get("method") not in ("alg1", "alg2", "pod"):
            raise ConfigError("dual method must be alg1, alg2, or pod")
        self.train_size = int(data.get("train_size", 100))
        self.online_size = int(data.get("online_size", 1000))
        self.seeds = data.get("seeds", {"sketch": 0, "train": 1, "online": 2})
        self.output_dir = data.get("output_dir", "run")
        if min(self.train_size, self.online_size, self.n_primal) < 1:
            raise ConfigError("sizes must be >= 1")
        if self.benchmark.get("kind") == "manifest" and self.covariance != "euclidean":
            raise ConfigError("external manifests support only the euclidean covariance")
        if self.benchmark.get("kind") == "manifest":
            if not os.path.exists(self.benchmark.get("path", "")):
                raise ConfigError(f"manifest {self.benchmark.get('path')!r} does not exist")

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls(json.load(fh))

    def to_json(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "benchmark": self.benchmark,
            "covariance": self.covariance,
            "n_primal": self.n_primal,
            "extra_reference": self.extra_reference,
            "sketch": self.sketch,
            "dual": self.dual,
            "train_size": self.train_size,
            "online_size": self.online_size,
            "seeds": self.seeds,
            "output_dir": self.output_dir,
        }


def _load_problem(config):
    """Returns (system, domain, riesz, covariance)."""
    bench = config.benchmark
    if bench.get("kind") == "helmholtz":
        disc = assemble_helmholtz(float(bench.get("h", 0.05)))
        system = disc.system
        domain = BENCHMARK_DOMAIN
        riesz = disc.riesz_h1
        if config.covariance == "euclidean":
            cov = CovarianceSpec.identity(system.dimension)
        elif config.covariance == "h1":
            cov = CovarianceSpec.from_matrix(disc.riesz_h1)
        elif config.covariance == "l2":
            cov = CovarianceSpec.from_matrix(disc.riesz_l2)
        else:
            cov = CovarianceSpec.from_qoi(disc.trace_extractor, disc.trace_mass)
        return system, domain, riesz, cov
    if bench.get("kind") == "manifest":
        system = rio.load_system(bench["path"])
        domain = ParameterDomain(lower=bench["lower"], upper=bench["upper"])
        import scipy.sparse as sps

        riesz = sps.identity(system.dimension, format="csr")
        return system, domain, riesz, CovarianceSpec.identity(system.dimension)
    raise ConfigError(f"unknown benchmark kind {bench.get('kind')!r}")


def _plan_sketch(config):
    """Returns (k, w, delta) from either sketch-plan variant."""
    plan = config.sketch
    if "k" in plan:
        return int(plan["k"]), float(plan.get("w", float("nan"))), float(
            plan.get("delta", float("nan"))
        )
    w, delta = float(plan["w"]), float(plan["delta"])
    k = select_sample_count(int(plan["online_count"]), delta, w)
    return k, w, delta


def cmd_build(config):
    """Assemble, run primal + dual constructions, persist all artifacts."""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    manifest = {"config": config.to_json(), "stages": {}}

    def run_stage(name, fn):
        try:
            result = fn()
        except RbsketchError as exc:
            manifest["stages"][name] = {"status": "failed", "error": str(exc)}
            with open(os.path.join(out, "manifest.json"), "w") as fh:
                json.dump(manifest, fh, indent=1)
            raise
        manifest["stages"][name] = {"status": "ok"}
        return result

    system, domain, riesz, cov = run_stage("assemble", lambda: _load_problem(config))
    train = sample_parameters(domain, config.train_size, config.seeds["train"], role="train")
    rio.save_sample_set(os.path.join(out, "train.csv"), train)

    full_space = run_stage(
        "primal-greedy",
        lambda: weak_greedy_primal(
            system, riesz, train, config.n_primal + config.extra_reference
        ),
    )
    primal_space, reference_space = reference_solution_space(full_space, config.n_primal)
    rio.save_space(os.path.join(out, "primal_space.csv"), primal_space,
                   inner_product_id="riesz", seed_provenance=config.seeds)
    rio.save_space(os.path.join(out, "reference_space.csv"), reference_space,
                   inner_product_id="riesz", seed_provenance=config.seeds)

    k, w, delta = _plan_sketch(config)
    sk = run_stage(
        "sketch", lambda: draw_sketch(cov, k, config.seeds["sketch"], w=w, delta=delta)
    )
    rio.save_sketch(os.path.join(out, "sketch.csv"), sk, covariance_id=config.covariance)

    primal_model = reduce(system, primal_space)
    reference_model = reduce(system, reference_space)

    def build_dual():
        method = config.dual["method"]
        cfg = GreedyConfig(
            tol=float(config.dual.get("tol", 2.0)),
            q=float(config.dual.get("q", 0.99)),
            max_iterations=int(config.dual.get("max_iterations", 100)),
        )
        if method == "alg1":
            return greedy_dual_vector(system, cov, sk, train, cfg,
                                      inner_product=riesz, riesz_cov=_riesz_cov(riesz))
        if method == "alg2":
            return greedy_dual_goal_oriented(
                system, cov, sk, primal_model, reference_model, train, cfg,
                inner_product=riesz,
            )
        n_target = int(config.dual.get("n_target", config.n_primal))
        n_snap = int(config.dual.get("pod_snapshots", min(len(train), 30)))
        snaps = [solve_random_duals(system, mu, sk) for mu in train.points[:n_snap]]
        space = pod_dual_baseline(snaps, n_target, inner_product=riesz)
        from .greedy import GreedyResult

        return GreedyResult(space=space, converged=True)

    result = run_stage("dual-build", build_dual)
    if result.space is None:
        raise ConfigError("dual construction produced an empty space")
    rio.save_space(os.path.join(out, "dual_space.csv"), result.space,
                   inner_product_id="riesz", seed_provenance=config.seeds)
    _write_greedy_trace(os.path.join(out, "greedy_trace.csv"), result)

    oe = build_online_estimator(system, primal_space, result.space, sk)
    np.savez(
        os.path.join(out, "online_blocks.npz"),
        sketch_projections=oe.sketch_projections,
        **{f"dual_op_{q}": t for q, t in enumerate(oe.reduced_dual_operator_terms)},
        **{f"cross_{q}": t for q, t in enumerate(oe.cross_terms)},
        **{f"dual_rhs_{q}": t for q, t in enumerate(oe.reduced_rhs_terms)},
    )

    manifest["k"] = k
    manifest["w"] = w
    manifest["delta"] = delta
    manifest["n_primal"] = primal_space.dim
    manifest["n_dual"] = result.space.dim
    manifest["dual_converged"] = result.converged
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest


def _riesz_cov(riesz):
    return CovarianceSpec.from_matrix(riesz)


def _write_greedy_trace(path, result):
    rows = []
    for it, sel in enumerate(result.selections):
        mu = sel.get("mu", ())
        rows.append([
            it,
            ";".join("%.17g" % v for v in mu),
            sel.get("index", ""),
            ";".join("%.17g" % v for v in sel.get("lambda", [])),
            float(sel.get("criterion", float("nan"))),
            it + 1,
        ])
    rio.write_table(
        path,
        ["iteration", "selected_mu", "dual_index", "lambda", "criterion", "n_dual"],
        rows,
    )


def load_artifacts(artifact_dir):
    """Reload everything cmd_build persisted, rebuilding the problem."""
    with open(os.path.join(artifact_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    config = ExperimentConfig(manifest["config"])
    system, domain, riesz, cov = _load_problem(config)
    primal_space = rio.load_space(os.path.join(artifact_dir, "primal_space.csv"),
                                  inner_product=riesz)
    dual_space = rio.load_space(os.path.join(artifact_dir, "dual_space.csv"),
                                inner_product=riesz)
    sk = rio.load_sketch(os.path.join(artifact_dir, "sketch.csv"), covariance=cov)
    return {
        "config": config, "manifest": manifest, "system": system, "domain": domain,
        "riesz": riesz, "covariance": cov, "primal_space": primal_space,
        "dual_space": dual_space, "sketch": sk,
    }


def cmd_estimate(artifact_dir, online=None, with_truth=False, output=None):
    """Per-point online sweep CSV plus a summary block with the certificate."""
    art = load_artifacts(artifact_dir)
    config, system, cov, sk = art["config"], art["system"], art["covariance"], art["sketch"]
    if online is None:
        online = sample_parameters(art["domain"], config.online_size,
                                   config.seeds["online"], role="online")
    if len(online) < 1:
        raise ConfigError("online set must be nonempty")

    primal_model = reduce(system, art["primal_space"])
    oe = build_online_estimator(system, art["primal_space"], art["dual_space"], sk)
    dim_p = online.points.shape[1]
    columns = [f"mu_{i + 1}" for i in range(dim_p)] + [
        "true_error_sigma", "delta_exact", "delta_fast", "effectivity", "status",
        "seed", "n_primal", "n_dual", "K", "w", "delta_prob",
    ]
    rows = []
    effectivities, alpha_probe = [], []
    meta = [int(config.seeds["sketch"]), art["primal_space"].dim,
            art["dual_space"].dim, sk.k, float(sk.w), float(sk.delta)]
    for mu in online.points:
        base = [float(v) for v in mu]
        try:
            coeffs, lifted = solve_reduced(primal_model, mu)
            delta_fast = oe.fast_estimate(mu, coeffs)
            if with_truth:
                u = system.solve(mu)
                err = cov.norm(u - lifted)
                delta_exact = exact_estimator_from_truth(sk, u, lifted)
                eff = delta_fast / err if err > 0 else float("inf")
                effectivities.append(eff)
                alpha_probe.append(estimator_ratio(delta_exact, delta_fast))
                rows.append(base + [err, delta_exact, delta_fast, eff, "ok"] + meta)
            else:
                rows.append(base + ["", "", delta_fast, "", "ok"] + meta)
        except (SingularOperatorError, SingularReducedSystemError) as exc:
            rows.append(base + ["", "", "", "", type(exc).__name__] + meta)

    output = output or os.path.join(artifact_dir, "estimate.csv")
    rio.write_table(output, columns, rows)

    summary = {"n_points": len(online), "w": float(sk.w), "delta": float(sk.delta)}
    if with_truth and effectivities:
        eff = sorted(effectivities)
        alpha = max(alpha_probe)
        summary.update({
            "effectivity_min": eff[0], "effectivity_max": eff[-1],
            "effectivity_q50": quantile(eff, 0.5),
            "effectivity_q95": quantile(eff, 0.95),
            "effectivity_q99": quantile(eff, 0.99),
            "alpha_on_probe": alpha,
            "certified_interval": [1.0 / (alpha * sk.w), alpha * sk.w]
            if math.isfinite(alpha) and not math.isnan(sk.w) else None,
        })
    with open(output + ".summary.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return output, summary


def cmd_table22(output, deltas=(1e-2, 1e-4), ws=(2.0, 4.0, 10.0),
                cardinalities=(1, 10**3, 10**6, 10**9)):
    """Regenerate the minimal-K sketch-planning table as CSV."""
    rows = []
    for delta in deltas:
        for m in cardinalities:
            for w in ws:
                rows.append([float(delta), float(w), m,
                             select_sample_count(m, delta, w)])
    rio.write_table(output, ["delta", "w", "m", "K"], rows)
    return output


def cmd_fig21(output, ws=(1.1, 2.0, 5.0, 10.0, 50.0), k_range=range(3, 31)):
    """Exact chi-squared escape probabilities and the (sqrt(e)/w)^K bound.

    The bound column is left empty where it does not apply (w <= sqrt(e)).
    """
    rows = []
    for w in ws:
        for k in k_range:
            exact = chi2_fail_exact(w, k)
            bound = chi2_fail_bound(w, k) if w > SQRT_E else ""
            rows.append([float(w), k, exact, bound])
    rio.write_table(output, ["w", "K", "exact", "bound"], rows)
    return output


def cmd_sweep_histogram(config, repetitions, output):
    """Concatenate ``repetitions`` full redraws into one effectivity CSV.

    Each repetition redraws the sketch, the training set, and the online
    set (seeds offset by the repetition index), rebuilds the dual space,
    and contributes one effectivity row per online point.
    """
    all_rows = []
    columns = None
    for rep in range(repetitions):
        rep_config = ExperimentConfig(config.to_json())
        rep_config.seeds = {key: int(val) + 1000 * rep
                            for key, val in config.seeds.items()}
        rep_config.output_dir = os.path.join(config.output_dir, f"rep_{rep:03d}")
        cmd_build(rep_config)
        csv_path, _ = cmd_estimate(rep_config.output_dir, with_truth=True)
        with open(csv_path) as fh:
            lines = fh.read().splitlines()
        if columns is None:
            columns = lines[0] + ",repetition"
        all_rows.extend(f"{line},{rep}" for line in lines[1:])
    with open(output, "w") as fh:
        fh.write(columns + "\n")
        for line in all_rows:
            fh.write(line + "\n")
    return output


def main(argv=None):
    parser = argparse.ArgumentParser(prog="rbsketch",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build and persist all artifacts")
    p_build.add_argument("--config", required=True, help="experiment config JSON")
    p_build.add_argument("--output-dir", help="override the config output dir")

    p_est = sub.add_parser("estimate", help="online sweep over a fresh sample set")
    p_est.add_argument("--artifacts", required=True)
    p_est.add_argument("--with-truth", action="store_true")
    p_est.add_argument("--online-size", type=int)
    p_est.add_argument("--online-seed", type=int)
    p_est.add_argument("--output")

    p_t22 = sub.add_parser("table22", help="minimal-K planning table CSV")
    p_t22.add_argument("--output", required=True)

    p_f21 = sub.add_parser("fig21", help="chi-squared tail exact-vs-bound CSV")
    p_f21.add_argument("--output", required=True)

    p_sweep = sub.add_parser("sweep-histogram",
                             help="concatenate seeded repetitions of estimate")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--repetitions", type=int, default=10)
    p_sweep.add_argument("--output", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "build":
            config = ExperimentConfig.from_file(args.config)
            if args.output_dir:
                config.output_dir = args.output_dir
            manifest = cmd_build(config)
            print(json.dumps({k: manifest[k] for k in
                              ("k", "w", "delta", "n_primal", "n_dual", "dual_converged")}))
        elif args.command == "estimate":
            online = None
            if args.online_size is not None or args.online_seed is not None:
                art = load_artifacts(args.artifacts)
                size = args.online_size or art["config"].online_size
                seed = (args.online_seed if args.online_seed is not None
                        else art["config"].seeds["online"])
                online = sample_parameters(art["domain"], size, seed, role="online")
            path, summary = cmd_estimate(args.artifacts, online=online,
                                         with_truth=args.with_truth,
                                         output=args.output)
            print(path)
            print(json.dumps(summary))
        elif args.command == "table22":
            print(cmd_table22(args.output))
        elif args.command == "fig21":
            print(cmd_fig21(args.output))
        elif args.command == "sweep-histogram":
            config = ExperimentConfig.from_file(args.config)
            print(cmd_sweep_histogram(config, args.repetitions, args.output))
    except RbsketchError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
