"""Lattice partition of unity and patch-norm machinery.

Translates of a tensor-product plateau chi_0 at spacing delta/2 cover the
torus; psi_j = chi_j / sum chi_i gives a smooth partition of unity whose
supports overlap boundedly (at most 7^m patches meet any point).  Patch
norms aggregate per-patch Besov norms in l^p.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .besov import BesovParams, besov_norm
from .errors import IncommensurableDelta
from .grid import Field, GridSpec
from .pdo import PDOperator, commutator_with_cutoff
from .profiles import Plateau


@dataclass
class PartitionSpec:
    grid: GridSpec
    delta: float
    labels: list  # lattice labels j in Z^m (one per translate)
    psis: np.ndarray  # (n_patches, *grid.shape), real, sums to one

    @property
    def num_patches(self) -> int:
        return len(self.labels)

    def psi_field(self, idx: int) -> Field:
        return Field(self.grid, self.psis[idx][..., None])

    def patch_fields(self, f: Field):
        for idx in range(self.num_patches):
            yield Field(self.grid, self.psis[idx][..., None] * f.samples)

    def max_overlap(self, tol: float = 1e-12) -> int:
        return int(np.max(np.sum(self.psis > tol, axis=0)))


def build_partition(grid: GridSpec, delta: float) -> PartitionSpec:
    """Partition of unity from plateau translates at spacing delta/2."""
    period = 2.0 * grid.half_period
    count_f = 2.0 * period / delta  # translates per axis at spacing delta/2
    count = round(count_f)
    if abs(count_f - count) > 1e-9 or count < 1:
        raise IncommensurableDelta(
            f"delta={delta} does not divide the period {period}"
        )
    prof = Plateau(delta / 2.0, delta)
    axis = grid.axis_points()
    centers = -grid.half_period + (delta / 2.0) * np.arange(count)
    # 1-D factors chi_0(x - delta j / 2), torus min-image
    factors = np.empty((count, grid.points_per_axis))
    for j, c in enumerate(centers):
        d = (axis - c + grid.half_period) % period - grid.half_period
        factors[j] = prof(d)
    labels = list(itertools.product(range(count), repeat=grid.dim))
    psis = np.empty((len(labels),) + grid.shape)
    for idx, label in enumerate(labels):
        chi = np.ones(grid.shape)
        for axis_i, j in enumerate(label):
            shape = [1] * grid.dim
            shape[axis_i] = -1
            chi = chi * factors[j].reshape(shape)
        psis[idx] = chi
    total = psis.sum(axis=0)
    if np.min(total) < 1.0 - 1e-9:
        raise IncommensurableDelta("plateau translates fail to cover the torus")
    psis /= total
    return PartitionSpec(grid, delta, labels, psis)


def patch_norm(f: Field, part: PartitionSpec, beta: float, p: float) -> float:
    """l^p over patches of the per-patch B^beta_{p,p} norms."""
    params = BesovParams(beta, p, p)
    vals = np.array([besov_norm(pf, params) for pf in part.patch_fields(f)])
    if math.isinf(p):
        return float(np.max(vals))
    return float(np.sum(vals**p) ** (1.0 / p))


def patch_commutators(Q: PDOperator, part: PartitionSpec) -> list:
    """Per-patch commutators [Q, psi_j], each of order <= order(Q) - 1."""
    return [
        commutator_with_cutoff(Q, part.psi_field(idx))
        for idx in range(part.num_patches)
    ]
