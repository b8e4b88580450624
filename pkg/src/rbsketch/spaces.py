"""Orthonormalized snapshot spaces shared by the primal and dual sides."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .linalg import gram_inner, orthonormalize_against


@dataclass
class ReducedSpace:
    """Basis with columns orthonormal in a stated SPD inner product.

    ``snapshot_params`` records, per column, what generated it: the
    selected parameter for primal/vector-dual snapshots, or a
    (parameter, combination weights) pair for matrix-dual snapshots.
    """

    basis: np.ndarray
    inner_product: object = None  # sparse SPD matrix, or None for identity
    snapshot_params: list = field(default_factory=list)

    def __post_init__(self):
        self.basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if self.basis.shape[1] < 1:
            raise DomainError("a reduced space needs at least one column")
        if self.basis.shape[1] > self.basis.shape[0]:
            raise DomainError("more basis columns than ambient dimensions")

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    def orthonormality_defect(self):
        """Max entrywise deviation of basis^T R basis from the identity."""
        g = gram_inner(self.inner_product, self.basis, self.basis)
        return float(np.max(np.abs(g - np.eye(self.dim))))

    def truncate(self, n):
        if not 1 <= n <= self.dim:
            raise DomainError(f"cannot truncate to {n} of {self.dim} columns")
        return ReducedSpace(
            basis=self.basis[:, :n].copy(),
            inner_product=self.inner_product,
            snapshot_params=list(self.snapshot_params[:n]),
        )


class SpaceBuilder:
    """Incrementally grows an orthonormal basis via modified Gram-Schmidt."""

    def __init__(self, ambient_dim, inner_product=None):
        self.inner_product = inner_product
        self._columns = np.empty((ambient_dim, 0))
        self._provenance = []

    @property
    def dim(self):
        return self._columns.shape[1]

    def try_append(self, candidate, provenance):
        """Orthonormalize and append; returns False if numerically in span."""
        new = orthonormalize_against(self._columns, candidate, self.inner_product)
        if new is None:
            return False
        self._columns = np.column_stack([self._columns, new])
        self._provenance.append(provenance)
        return True

    def space(self):
        if self.dim == 0:
            raise DomainError("no columns accepted; cannot build an empty space")
        return ReducedSpace(
            basis=self._columns.copy(),
            inner_product=self.inner_product,
            snapshot_params=list(self._provenance),
        )
