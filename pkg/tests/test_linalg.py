"""Sparse/dense solver guards and Gram-Schmidt building blocks."""

import numpy as np
import pytest
import scipy.sparse as sps

from rbsketch import SingularOperatorError, SingularReducedSystemError
from rbsketch.linalg import (
    SparseSolver,
    gram_inner,
    orthonormalize_against,
    solve_dense,
    spd_sqrt_factor,
)


class TestSqrtFactor:
    def test_reproduces_spd_matrix(self, disc10):
        sigma = disc10.riesz_h1
        u = spd_sqrt_factor(sigma)
        err = sps.linalg.norm(u.T @ u - sigma) / sps.linalg.norm(sigma)
        assert err < 1e-12

    def test_banded_stays_sparse(self):
        n = 200
        sigma = sps.diags([np.full(n - 1, -1.0), np.full(n, 4.0), np.full(n - 1, -1.0)],
                          [-1, 0, 1], format="csr")
        u = spd_sqrt_factor(sigma)
        assert u.nnz <= 2 * n  # bidiagonal for a tridiagonal SPD matrix

    def test_rejects_indefinite(self):
        with pytest.raises(SingularOperatorError):
            spd_sqrt_factor(sps.csr_matrix(np.diag([1.0, -2.0])))


class TestSparseSolver:
    def test_solve_and_transpose(self, rng):
        a = sps.csr_matrix(np.array([[3.0, 1.0], [0.0, 2.0]]))
        solver = SparseSolver(a)
        b = rng.standard_normal(2)
        assert np.allclose(a @ solver.solve(b), b)
        assert np.allclose(a.T @ solver.solve(b, trans="T"), b)

    def test_matrix_rhs(self, rng):
        a = sps.csr_matrix(np.diag([2.0, 4.0, 8.0]))
        b = rng.standard_normal((3, 5))
        assert np.allclose(a @ SparseSolver(a).solve(b), b)

    def test_singular_matrix_raises(self):
        a = sps.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularOperatorError):
            SparseSolver(a).solve(np.array([1.0, 0.0]))


class TestSolveDense:
    def test_accuracy(self, rng):
        a = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        b = rng.standard_normal(6)
        assert np.allclose(a @ solve_dense(a, b), b)

    def test_near_singular_raises_with_rcond(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-15]])
        with pytest.raises(SingularReducedSystemError) as info:
            solve_dense(a, np.ones(2))
        assert info.value.rcond is None or info.value.rcond < 1e-12


class TestOrthonormalize:
    def test_euclidean(self, rng):
        basis = np.linalg.qr(rng.standard_normal((10, 3)))[0]
        new = orthonormalize_against(basis, rng.standard_normal(10), None)
        assert new is not None
        assert np.linalg.norm(new) == pytest.approx(1.0, abs=1e-13)
        assert np.max(np.abs(basis.T @ new)) < 1e-13

    def test_weighted(self, disc10, rng):
        r = disc10.riesz_h1
        builder_cols = np.empty((disc10.n_dofs, 0))
        cols = []
        for _ in range(4):
            new = orthonormalize_against(
                np.column_stack(cols) if cols else builder_cols,
                rng.standard_normal(disc10.n_dofs), r)
            cols.append(new)
        q = np.column_stack(cols)
        g = gram_inner(r, q, q)
        assert np.max(np.abs(g - np.eye(4))) < 1e-12

    def test_in_span_rejected(self, rng):
        basis = np.linalg.qr(rng.standard_normal((8, 4)))[0]
        combo = basis @ rng.standard_normal(4)
        assert orthonormalize_against(basis, combo, None) is None
        assert orthonormalize_against(basis, np.zeros(8), None) is None
