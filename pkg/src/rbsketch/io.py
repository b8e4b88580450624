"""Persistence: Matrix Market matrices, headered CSV vectors/tables,
JSON manifests for systems, sketches, and reduced spaces.

Floating-point values are written with repr-faithful precision so a
rerun with identical seeds produces bitwise-identical files.
"""

import csv
import json
import os

import numpy as np
import scipy.io
import scipy.sparse as sps

from .covariance import CovarianceSpec
from .errors import ConfigError
from .sketch import Sketch
from .spaces import ReducedSpace
from .system import AffineSystem, Coefficient, SampleSet

FLOAT_FMT = "%.17g"


def _fmt(x):
    return FLOAT_FMT % float(x)


# Matrices and vectors -------------------------------------------------------

def save_matrix(path, matrix):
    scipy.io.mmwrite(path, sps.coo_matrix(matrix))


def load_matrix(path):
    return sps.csr_matrix(scipy.io.mmread(path))


def save_vector(path, vector, column="value"):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", column])
        for i, v in enumerate(np.asarray(vector, dtype=float)):
            writer.writerow([i, _fmt(v)])


def load_vector(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([float(row[1]) for row in reader])


def write_table(path, columns, rows):
    """Write a headered CSV with deterministic float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [_fmt(v) if isinstance(v, float) else v for v in row]
            )


# Sample sets ----------------------------------------------------------------

def save_sample_set(path, samples):
    dim = samples.points.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"mu_{i + 1}" for i in range(dim)])
        for mu in samples.points:
            writer.writerow([_fmt(v) for v in mu])
    with open(path + ".json", "w") as fh:
        json.dump({"seed": samples.seed, "role": samples.role}, fh, indent=1)


def load_sample_set(path, domain=None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        points = np.array([[float(v) for v in row] for row in reader])
    with open(path + ".json") as fh:
        meta = json.load(fh)
    return SampleSet(points=points, seed=meta["seed"], role=meta["role"], domain=domain)


# Affine system manifests ----------------------------------------------------

def save_system(directory, system, name="system"):
    """Write terms (Matrix Market / CSV) plus a JSON manifest naming them."""
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "dimension": system.dimension,
        "operator_terms": [],
        "rhs_terms": [],
    }
    for q, (term, coeff) in enumerate(zip(system.operator_terms, system.operator_coeffs)):
        fname = f"{name}_A{q}.mtx"
        save_matrix(os.path.join(directory, fname), term)
        manifest["operator_terms"].append({"file": fname, "coefficient": coeff.to_json()})
    for q, (term, coeff) in enumerate(zip(system.rhs_terms, system.rhs_coeffs)):
        fname = f"{name}_f{q}.csv"
        save_vector(os.path.join(directory, fname), term)
        manifest["rhs_terms"].append({"file": fname, "coefficient": coeff.to_json()})
    with open(os.path.join(directory, f"{name}.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return os.path.join(directory, f"{name}.json")


def load_system(manifest_path):
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(manifest_path)
    op_terms, op_coeffs, rhs_terms, rhs_coeffs = [], [], [], []
    for entry in manifest["operator_terms"]:
        op_terms.append(load_matrix(os.path.join(base, entry["file"])))
        op_coeffs.append(Coefficient.from_json(entry["coefficient"]))
    for entry in manifest["rhs_terms"]:
        rhs_terms.append(load_vector(os.path.join(base, entry["file"])))
        rhs_coeffs.append(Coefficient.from_json(entry["coefficient"]))
    return AffineSystem(op_terms, op_coeffs, rhs_terms, rhs_coeffs)


# Sketches -------------------------------------------------------------------

def save_sketch(path, sk, covariance_id="unspecified"):
    """One CSV per sketch (vector index, entry index, value) + JSON sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vector", "entry", "value"])
        for i in range(sk.k):
            for j, v in enumerate(sk.vectors[i]):
                writer.writerow([i, j, _fmt(v)])
    meta = {"k": sk.k, "w": sk.w, "delta": sk.delta, "seed": sk.seed,
            "covariance": covariance_id, "dimension": sk.covariance.dimension}
    with open(path + ".json", "w") as fh:
        json.dump(meta, fh, indent=1)


def load_sketch(path, covariance=None):
    with open(path + ".json") as fh:
        meta = json.load(fh)
    if covariance is None:
        covariance = CovarianceSpec.identity(meta["dimension"])
    vectors = np.zeros((meta["k"], meta["dimension"]))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            vectors[int(row[0]), int(row[1])] = float(row[2])
    return Sketch(vectors=vectors, k=meta["k"], w=meta["w"], delta=meta["delta"],
                  seed=meta["seed"], covariance=covariance)


# Reduced spaces -------------------------------------------------------------

def save_space(path, space, inner_product_id="identity", seed_provenance=None):
    """Dense basis CSV plus JSON sidecar with provenance."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"col_{j}" for j in range(space.dim)])
        for row in space.basis:
            writer.writerow([_fmt(v) for v in row])
    meta = {
        "inner_product": inner_product_id,
        "snapshot_params": [_provenance_json(p) for p in space.snapshot_params],
        "seed_provenance": seed_provenance or {},
    }
    with open(path + ".json", "w") as fh:
        json.dump(meta, fh, indent=1)


def _provenance_json(entry):
    if isinstance(entry, dict):
        return {k: (list(v) if isinstance(v, (tuple, np.ndarray)) else v)
                for k, v in entry.items()}
    if isinstance(entry, tuple):
        return [(_provenance_json(e) if isinstance(e, (tuple, dict)) else
                 (list(e) if isinstance(e, np.ndarray) else e)) for e in entry]
    return entry


def load_space(path, inner_product=None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        basis = np.array([[float(v) for v in row] for row in reader])
    if basis.shape[1] != len(header):
        raise ConfigError(f"basis file {path} is malformed")
    with open(path + ".json") as fh:
        meta = json.load(fh)
    return ReducedSpace(basis=basis, inner_product=inner_product,
                        snapshot_params=meta["snapshot_params"])
