"""Render figures from experiment sweep CSVs.

Three figure kinds, all read-only over their inputs:

  histogram    effectivity histograms on a log x-axis with [w^-1, w] and
               [(alpha w)^-1, alpha w] guide lines and the density of
               sqrt(Q/K), Q ~ chi2(K), overlaid
  convergence  greedy stopping-criterion traces, one line per input CSV
  tailbound    exact chi-squared escape probability vs its upper bound,
               one solid/dashed curve pair per w

Rendering is deterministic: fixed figure geometry, fixed bin rules, no
timestamps, so reruns are byte-stable for a fixed library version.
"""

import argparse
import csv
import math
from dataclasses import dataclass, field

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_HIST_BINS = 50
_FIGSIZE = (6.0, 4.0)
_DPI = 150

KINDS = ("histogram", "convergence", "tailbound")


class SchemaError(Exception):
    """An input CSV is missing a column the figure kind requires."""


@dataclass
class FigureSpec:
    """Everything needed to render one figure."""

    inputs: list
    kind: str
    output: str
    w: float | None = None
    alpha: float | None = None
    k: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def _read_columns(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        rows = list(reader)
    return rows


def sqrt_chi2_density(k, x):
    """pdf of sqrt(Q/K) with Q ~ chi2(K), evaluated at x >= 0.

    f(x) = 2 K x f_chi2(K x^2; K); written out with lgamma so the only
    dependencies are numpy and the stdlib.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    log_f = (
        math.log(2.0) + math.log(k) + np.log(xp)
        + (k / 2.0 - 1.0) * np.log(k * xp**2)
        - k * xp**2 / 2.0
        - (k / 2.0) * math.log(2.0)
        - math.lgamma(k / 2.0)
    )
    out[pos] = np.exp(log_f)
    return out


def _histogram_data(spec):
    values = []
    for path in spec.inputs:
        rows = _read_columns(path, ["effectivity"])
        values.extend(
            float(r["effectivity"]) for r in rows
            if r["effectivity"] not in ("", None) and float(r["effectivity"]) > 0
        )
    if not values:
        raise SchemaError("no positive effectivity values found in the inputs")
    values = np.asarray(values)
    lo, hi = float(np.min(values)), float(np.max(values))
    if spec.w:
        lo = min(lo, 1.0 / spec.w)
        hi = max(hi, spec.w)
    if lo == hi:  # constant column: a single occupied bin around the value
        lo, hi = lo * 0.5, hi * 2.0
    edges = np.geomspace(lo, hi, _HIST_BINS + 1)
    counts, edges = np.histogram(values, bins=edges, density=True)
    return values, counts, edges


def _render_histogram(spec, ax):
    values, counts, edges = _histogram_data(spec)
    ax.stairs(counts, edges, fill=True, alpha=0.55, color="tab:blue",
              label=f"effectivities (n={values.size})")
    if spec.k:
        xs = np.geomspace(edges[0], edges[-1], 2048)
        ax.plot(xs, sqrt_chi2_density(spec.k, xs), "k-", lw=1.2,
                label=f"density of sqrt(Q/{spec.k})")
    if spec.w:
        for v in (1.0 / spec.w, spec.w):
            ax.axvline(v, color="tab:red", ls="--", lw=1.0)
        ax.plot([], [], color="tab:red", ls="--", lw=1.0, label="[1/w, w]")
    if spec.w and spec.alpha:
        for v in (1.0 / (spec.alpha * spec.w), spec.alpha * spec.w):
            ax.axvline(v, color="0.5", ls=":", lw=1.0)
        ax.plot([], [], color="0.5", ls=":", lw=1.0, label="[1/(aw), aw]")
    ax.set_xscale("log")
    ax.set_xlabel("estimate / true error")
    ax.set_ylabel("density")
    ax.legend(loc="upper right", fontsize=8)
    return counts, edges


def _render_convergence(spec, ax):
    lines = []
    for path in spec.inputs:
        rows = _read_columns(path, ["iteration", "criterion"])
        xs = np.array([int(r["iteration"]) for r in rows])
        ys = np.array([float(r["criterion"]) for r in rows])
        ax.semilogy(xs, ys, marker="o", ms=3, lw=1.0, label=path.rsplit("/", 1)[-1])
        lines.append((xs, ys))
    if spec.w:
        ax.axhline(spec.w, color="tab:red", ls="--", lw=1.0, label="tolerance")
    ax.set_xlabel("iteration")
    ax.set_ylabel("stopping criterion")
    ax.legend(loc="upper right", fontsize=8)
    return lines


def _render_tailbound(spec, ax):
    curves = {}
    for path in spec.inputs:
        rows = _read_columns(path, ["w", "K", "exact", "bound"])
        for r in rows:
            curves.setdefault(float(r["w"]), []).append(
                (int(r["K"]), float(r["exact"]),
                 float(r["bound"]) if r["bound"] not in ("", None) else None)
            )
    for w, entries in sorted(curves.items()):
        entries.sort()
        ks = [e[0] for e in entries]
        ax.semilogy(ks, [e[1] for e in entries], "-", lw=1.2, label=f"w={w:g} exact")
        bounds = [(e[0], e[2]) for e in entries if e[2] is not None]
        if bounds:
            ax.semilogy([b[0] for b in bounds], [b[1] for b in bounds],
                        "--", lw=1.0, label=f"w={w:g} bound")
    ax.set_xlabel("K")
    ax.set_ylabel("escape probability")
    ax.legend(loc="lower left", fontsize=7)
    return curves


def render(spec):
    """Render ``spec`` to its output path; returns kind-specific plot data."""
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    try:
        if spec.kind == "histogram":
            data = _render_histogram(spec, ax)
        elif spec.kind == "convergence":
            data = _render_convergence(spec, ax)
        else:
            data = _render_tailbound(spec, ax)
        fig.tight_layout()
        fig.savefig(spec.output, metadata={"Software": "rbsketch-plots"})
    finally:
        plt.close(fig)
    return data


def main(argv=None):
    parser = argparse.ArgumentParser(prog="rbsketch-plots",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("inputs", nargs="+", help="input CSV paths")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--output", required=True, help="output image path")
    parser.add_argument("--w", type=float, help="guide-line half-width w")
    parser.add_argument("--alpha", type=float, help="certificate widening factor")
    parser.add_argument("--k", type=int, help="sample count for the density overlay")
    args = parser.parse_args(argv)
    spec = FigureSpec(inputs=args.inputs, kind=args.kind, output=args.output,
                      w=args.w, alpha=args.alpha, k=args.k)
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        parser.exit(2, f"error: {exc}\n")
    print(spec.output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
