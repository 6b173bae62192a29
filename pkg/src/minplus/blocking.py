"""Block machinery: representative grids, the representative approximation
matrix, candidate sets per block pair, and halving refinement.

Indexing is 0-based throughout; the representative of block index b at
block length l is row/column b*l (the upper-left entry of the block).
Argmin ties always break toward the smallest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from .matrix import INF, BDMatrix, Matrix

CANDIDATE_WINDOW = 8  # admission threshold is approx + 8*delta*l


@dataclass(frozen=True)
class BlockGrid:
    """Partition of an n x n matrix into blocks of length l (l divides n)."""

    n: int
    l: int

    def __post_init__(self):
        if self.n < 1 or self.l < 1:
            raise ValueError("dimensions must be positive")
        if self.n % self.l != 0:
            raise ValueError(f"block length {self.l} does not divide {self.n}")

    @property
    def n_blocks(self) -> int:
        return self.n // self.l

    @property
    def alpha_equiv(self) -> float:
        """Exponent a with l = n**(1-a); defined as 1.0 for n == 1."""
        if self.n == 1:
            return 1.0
        return 1.0 - log2(self.l) / log2(self.n)

    def representatives(self) -> np.ndarray:
        return np.arange(0, self.n, self.l, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CandidateSets:
    """Per block pair (bi, bj), the block columns whose representative sums
    come within 8*delta*l of the representative minimum.

    ``mask[bi, bj, bk]`` is the primary representation; ``sets`` materializes
    the sorted index lists.
    """

    grid: BlockGrid
    delta: int
    approx: Matrix
    mask: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return self.mask.sum(axis=2)

    def set_for(self, bi: int, bj: int) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.mask[bi, bj])]

    @property
    def sets(self) -> list[list[list[int]]]:
        nb = self.grid.n_blocks
        return [[self.set_for(bi, bj) for bj in range(nb)] for bi in range(nb)]


def _rep_sums(a_data: np.ndarray, b_data: np.ndarray, l: int) -> np.ndarray:
    """T[bi, bk, bj] = A[bi*l, bk*l] + B[bk*l, bj*l]."""
    ra = np.ascontiguousarray(a_data[::l, ::l])
    rb = np.ascontiguousarray(b_data[::l, ::l])
    return ra[:, :, None] + rb[None, :, :]


def approx_matrix(a: BDMatrix, b: BDMatrix, l: int) -> Matrix:
    """Representative min-plus product: an (n/l) x (n/l) matrix within
    4*delta*l of the true product on every entry of each block."""
    _check_pair(a, b, l)
    t = _rep_sums(a.base.data, b.base.data, l)
    return Matrix(t.min(axis=1))


def candidate_sets(a: BDMatrix, b: BDMatrix, l: int) -> CandidateSets:
    """Full enumeration over representatives: bk is admitted for (bi, bj)
    iff A[i',k'] + B[k',j'] <= approx[bi,bj] + 8*delta*l.

    Every block containing an optimal witness column is admitted.
    """
    _check_pair(a, b, l)
    grid = BlockGrid(a.n, l)
    t = _rep_sums(a.base.data, b.base.data, l)
    approx = t.min(axis=1)
    threshold = approx + CANDIDATE_WINDOW * a.delta * l
    mask = t.transpose(0, 2, 1) <= threshold[:, :, None]
    return CandidateSets(grid=grid, delta=a.delta, approx=Matrix(approx), mask=mask)


def refine_candidates(parent: CandidateSets, a: BDMatrix, b: BDMatrix) -> CandidateSets:
    """Candidate sets at half the block length, scanning only child
    representatives inside the parent candidate blocks.

    Identical to candidate_sets(a, b, l/2): the optimal child witness always
    sits inside a parent candidate, so the restricted minimum is the global
    minimum and the admission test matches the from-scratch one.
    """
    if parent.grid.l < 2:
        raise ValueError("cannot refine below block length 1")
    l2 = parent.grid.l // 2
    grid2 = BlockGrid(a.n, l2)
    t2 = _rep_sums(a.base.data, b.base.data, l2)
    parent_universe = parent.mask.transpose(0, 2, 1)  # (bi, bk, bj)
    universe2 = np.repeat(np.repeat(np.repeat(parent_universe, 2, 0), 2, 1), 2, 2)
    masked = np.where(universe2, t2, INF)
    approx2 = masked.min(axis=1)
    threshold2 = approx2 + CANDIDATE_WINDOW * a.delta * l2
    mask2 = (t2.transpose(0, 2, 1) <= threshold2[:, :, None]) & universe2.transpose(0, 2, 1)
    return CandidateSets(grid=grid2, delta=a.delta, approx=Matrix(approx2), mask=mask2)


def _check_pair(a: BDMatrix, b: BDMatrix, l: int) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.delta != b.delta:
        raise ValueError(f"delta mismatch: {a.delta} vs {b.delta}")
    if l < 1 or a.n % l != 0:
        raise ValueError(f"block length {l} does not divide {a.n}")
