"""Anisotropic parametrized Helmholtz benchmark on the unit square.

    -d11 u - mu1 d22 u - mu2 u = f   in (0,1)^2
    u = 0 on the bottom edge, du/dn = cos(pi x1) on the top edge,
    homogeneous Neumann on the lateral edges.

Discretized with bilinear Q1 elements on a uniform square mesh; the
bottom-edge Dirichlet DOFs are eliminated so every Riesz map stays SPD
on the constrained space. The quantity of interest is the trace of the
solution on the left edge, measured in a discrete L2 boundary norm.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .errors import DomainError
from .system import AffineSystem, Coefficient, ParameterDomain

#: Parameter box of the benchmark: anisotropy x squared wavenumber.
BENCHMARK_DOMAIN = ParameterDomain(lower=(0.2, 10.0), upper=(1.2, 50.0))

# Piecewise-constant source f(x1, x2) = f1(x1) f2(x2).
_SOURCE_BANDS_X1 = (
    (0.0, 0.1, 5.0),
    (0.2, 0.3, -5.0),
    (0.45, 0.55, 10.0),
    (0.7, 0.8, -5.0),
    (0.9, 1.0, 5.0),
)


def _source_x1(x):
    for lo, hi, val in _SOURCE_BANDS_X1:
        if lo <= x <= hi:
            return val
    return 0.0


def _source(x1, x2):
    return _source_x1(x1) * (1.0 if 0.5 <= x2 <= 1.0 else 0.0)


@dataclass
class HelmholtzDiscretization:
    """Assembled FE benchmark: affine system, Riesz maps, and the QoI trace."""

    h: float
    n_dofs: int
    system: AffineSystem
    riesz_h1: sps.csr_matrix
    riesz_l2: sps.csr_matrix
    trace_extractor: sps.csr_matrix
    trace_mass: sps.csr_matrix
    node_coords: np.ndarray  # (n_dofs, 2) coordinates of the retained DOFs


def _reference_element(h):
    """Element matrices on an h x h square by 2x2 Gauss quadrature.

    Exact for the bilinear mass and stiffness terms. Local node order:
    (0,0), (1,0), (0,1), (1,1) in element coordinates.
    """
    g = 0.5 - 0.5 / math.sqrt(3.0)
    gauss = [(a, b) for b in (g, 1 - g) for a in (g, 1 - g)]

    def shapes(xi, eta):
        vals = np.array([(1 - xi) * (1 - eta), xi * (1 - eta),
                         (1 - xi) * eta, xi * eta])
        dxi = np.array([-(1 - eta), (1 - eta), -eta, eta]) / h
        deta = np.array([-(1 - xi), -xi, (1 - xi), xi]) / h
        return vals, dxi, deta

    k11 = np.zeros((4, 4))
    k22 = np.zeros((4, 4))
    mass = np.zeros((4, 4))
    weight = h * h / 4.0
    for xi, eta in gauss:
        vals, dxi, deta = shapes(xi, eta)
        k11 += weight * np.outer(dxi, dxi)
        k22 += weight * np.outer(deta, deta)
        mass += weight * np.outer(vals, vals)
    return k11, k22, mass


def assemble_helmholtz(h):
    """Assemble the benchmark at mesh size ``h`` (1/h must be an integer).

    The affine operator has three terms (x1-stiffness, x2-stiffness,
    negated mass) with coefficients (1, mu1, mu2); the right-hand side
    folds the interior source and the top-edge Neumann data into one
    parameter-independent vector.
    """
    n = 1.0 / h
    if abs(n - round(n)) > 1e-9:
        raise DomainError(f"1/h must be an integer, got h={h}")
    n = int(round(n))

    n_nodes_1d = n + 1
    # Node (i, j) at (i h, j h); bottom row j=0 is Dirichlet and eliminated.
    def dof(i, j):
        return -1 if j == 0 else (j - 1) * n_nodes_1d + i

    n_dofs = n_nodes_1d * n
    k11, k22, mass = _reference_element(h)

    rows, cols = [], []
    data11, data22, datam = [], [], []
    rhs = np.zeros(n_dofs)

    aligned = n % 20 == 0  # source breakpoints are multiples of 0.05
    sub_offsets = [(0.5, 0.5)] if aligned else [(0.25, 0.25), (0.75, 0.25),
                                                (0.25, 0.75), (0.75, 0.75)]

    def q1_values(a, b):
        return np.array([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b])

    for ej in range(n):
        for ei in range(n):
            loc = [dof(ei, ej), dof(ei + 1, ej), dof(ei, ej + 1), dof(ei + 1, ej + 1)]
            for a in range(4):
                if loc[a] < 0:
                    continue
                for b in range(4):
                    if loc[b] < 0:
                        continue
                    rows.append(loc[a])
                    cols.append(loc[b])
                    data11.append(k11[a, b])
                    data22.append(k22[a, b])
                    datam.append(mass[a, b])
            # Source term by composite midpoint: exact when the mesh is
            # aligned with the breakpoints, 2x2 subcells otherwise.
            cell_weight = h * h / len(sub_offsets)
            for ox, oy in sub_offsets:
                fval = _source((ei + ox) * h, (ej + oy) * h)
                if fval == 0.0:
                    continue
                vals = q1_values(ox, oy)
                for a in range(4):
                    if loc[a] >= 0:
                        rhs[loc[a]] += cell_weight * fval * vals[a]

    # Top-edge Neumann term: 2-point Gauss on each 1D edge segment.
    gl = 0.5 - 0.5 / math.sqrt(3.0)
    for ei in range(n):
        for xi in (gl, 1 - gl):
            x1 = (ei + xi) * h
            gval = math.cos(math.pi * x1)
            left, right = dof(ei, n), dof(ei + 1, n)
            rhs[left] += (h / 2.0) * gval * (1 - xi)
            rhs[right] += (h / 2.0) * gval * xi

    shape = (n_dofs, n_dofs)
    a11 = sps.csr_matrix((data11, (rows, cols)), shape=shape)
    a22 = sps.csr_matrix((data22, (rows, cols)), shape=shape)
    m = sps.csr_matrix((datam, (rows, cols)), shape=shape)

    system = AffineSystem(
        operator_terms=[a11, a22, m],
        operator_coeffs=[
            Coefficient("constant", value=1.0),
            Coefficient("coordinate", index=0),
            Coefficient("negated-coordinate", index=1),
        ],
        rhs_terms=[rhs],
        rhs_coeffs=[Coefficient("constant", value=1.0)],
    )

    # QoI: trace on the left edge {0} x (0, 1], m = n grid values.
    trace_rows, trace_cols = [], []
    for j in range(1, n_nodes_1d):
        trace_rows.append(j - 1)
        trace_cols.append(dof(0, j))
    extractor = sps.csr_matrix(
        (np.ones(n), (trace_rows, trace_cols)), shape=(n, n_dofs)
    )
    # 1D P1 mass matrix on the edge grid with the Dirichlet corner eliminated.
    main = np.full(n, 2.0 * h / 3.0)
    main[-1] = h / 3.0  # free end at the top corner
    off = np.full(n - 1, h / 6.0)
    trace_mass = sps.csr_matrix(sps.diags([off, main, off], [-1, 0, 1]))

    coords = np.zeros((n_dofs, 2))
    for j in range(1, n_nodes_1d):
        for i in range(n_nodes_1d):
            coords[dof(i, j)] = (i * h, j * h)

    return HelmholtzDiscretization(
        h=h,
        n_dofs=n_dofs,
        system=system,
        riesz_h1=sps.csr_matrix(a11 + a22 + m),
        riesz_l2=m,
        trace_extractor=extractor,
        trace_mass=trace_mass,
        node_coords=coords,
    )


def full_solve(disc, mu):
    """Sparse direct solve of the benchmark at ``mu``; raises near resonances."""
    return disc.system.solve(mu)


def resonance_mu2(mu1, lo, hi):
    """Analytic resonance values of mu2 in [lo, hi] for fixed mu1 > 0.

    Separated variables give eigenvalues (k pi)^2 + mu1 ((l + 1/2) pi)^2
    for integers k, l >= 0 (Neumann in x1; Dirichlet bottom / Neumann
    top in x2). Returned sorted ascending.
    """
    if mu1 <= 0:
        raise DomainError("mu1 must be positive")
    out = []
    k = 0
    while (k * math.pi) ** 2 <= hi:
        l = 0
        while True:
            val = (k * math.pi) ** 2 + mu1 * ((l + 0.5) * math.pi) ** 2
            if val > hi:
                break
            if val >= lo:
                out.append(val)
            l += 1
        k += 1
    return sorted(out)


def qoi_extract(disc, u):
    """Left-edge trace of a DOF vector and its discrete boundary L2 norm."""
    u = np.asarray(u, dtype=float)
    if u.shape != (disc.n_dofs,):
        raise DomainError("DOF vector length mismatch")
    s = disc.trace_extractor @ u
    norm_w = float(np.sqrt(max(s @ (disc.trace_mass @ s), 0.0)))
    return s, norm_w
