import numpy as np
import pytest

import minplus as mp
from minplus import BlockGrid, Matrix

ZERO8 = mp.BDMatrix(Matrix(np.zeros((8, 8), dtype=np.int64)), 1)


def test_grid_representatives():
    g = BlockGrid(16, 4)
    assert g.representatives().tolist() == [0, 4, 8, 12]
    assert g.n_blocks == 4


def test_grid_alpha_equiv():
    assert BlockGrid(16, 4).alpha_equiv == pytest.approx(0.5)
    assert BlockGrid(1, 1).alpha_equiv == 1.0


def test_grid_rejects_nondivisor():
    with pytest.raises(ValueError):
        BlockGrid(16, 3)


def test_approx_one_block(pool):
    a, b = pool.pair(8, 2, 0)
    got = mp.approx_matrix(a, b, 8)
    want = int(a.base.data[0, 0]) + int(b.base.data[0, 0])
    assert got.shape == (1, 1) and got.data[0, 0] == want


def test_approx_unit_blocks(pool):
    a, b = pool.pair(8, 2, 0)
    assert mp.approx_matrix(a, b, 1) == pool.naive(8, 2, 0)


def test_approx_bounds(pool):
    # |C[i,j] - approx[block(i), block(j)]| <= 4*delta*l,
    # |C[i,j] - C[i',j']| <= 2*delta*l
    n, delta, l = 64, 2, 8
    for seed in range(5):
        a, b = pool.pair(n, delta, seed)
        c = pool.naive(n, delta, seed).data
        approx = mp.approx_matrix(a, b, l).data
        per_entry = np.repeat(np.repeat(approx, l, 0), l, 1)
        assert np.abs(c - per_entry).max() <= 4 * delta * l
        rep = np.repeat(np.repeat(c[::l, ::l], l, 0), l, 1)
        assert np.abs(c - rep).max() <= 2 * delta * l


def test_candidates_all_zero():
    cs = mp.candidate_sets(ZERO8, ZERO8, 2)
    assert cs.mask.all()
    assert cs.set_for(0, 0) == [0, 1, 2, 3]


def test_candidate_threshold_exact(pool):
    # admission is exactly: representative sum <= approx + 8*delta*l
    n, delta, l = 32, 2, 4
    a, b = pool.pair(n, delta, 1)
    cs = mp.candidate_sets(a, b, l)
    ra = a.base.data[::l, ::l]
    rb = b.base.data[::l, ::l]
    nb = n // l
    for bi in range(nb):
        for bj in range(nb):
            sums = ra[bi, :] + rb[:, bj]
            want = sums <= cs.approx.data[bi, bj] + 8 * delta * l
            assert np.array_equal(cs.mask[bi, bj], want)


def test_candidate_soundness_exhaustive(pool):
    # the tie-broken argmin witness block is always admitted
    n, delta, l = 64, 2, 8
    a, b = pool.pair(n, delta, 2)
    ad, bd = a.base.data, b.base.data
    cs = mp.candidate_sets(a, b, l)
    for i in range(n):
        sums = ad[i, :][:, None] + bd  # (k, j)
        ks = sums.argmin(axis=0)  # smallest index on ties
        for j in range(n):
            assert cs.mask[i // l, j // l, ks[j] // l]


def test_two_candidate_closeness(pool):
    # representative sums of any two candidates differ by <= 16*delta*l
    n, delta, l = 64, 2, 8
    for seed in range(3):
        a, b = pool.pair(n, delta, seed)
        ra = a.base.data[::l, ::l]
        rb = b.base.data[::l, ::l]
        cs = mp.candidate_sets(a, b, l)
        nb = n // l
        sums = ra[:, :, None] + rb[None, :, :]
        for bi in range(nb):
            for bj in range(nb):
                vals = sums[bi, :, bj][cs.mask[bi, bj]]
                assert vals.max() - vals.min() <= 16 * delta * l


def test_refine_all_zero():
    cs = mp.candidate_sets(ZERO8, ZERO8, 2)
    child = mp.refine_candidates(cs, ZERO8, ZERO8)
    assert child.grid.l == 1
    assert child.mask.all()
    assert cs.sizes.max() == 4 and child.sizes.max() == 8


def test_refine_matches_scratch(pool):
    for n, delta, l in ((32, 2, 4), (64, 1, 8), (64, 5, 4)):
        a, b = pool.pair(n, delta, 3)
        parent = mp.candidate_sets(a, b, l)
        child = mp.refine_candidates(parent, a, b)
        scratch = mp.candidate_sets(a, b, l // 2)
        assert np.array_equal(child.mask, scratch.mask)
        assert child.approx == scratch.approx


def test_refine_size_bound():
    # child candidate sets have at most twice the parent's size
    for seed in range(100):
        delta = 1 + seed % 3
        a = mp.generate_bd(16, delta, 3 * seed)
        b = mp.generate_bd(16, delta, 3 * seed + 1)
        parent = mp.candidate_sets(a, b, 4)
        child = mp.refine_candidates(parent, a, b)
        ps = np.repeat(np.repeat(parent.sizes, 2, 0), 2, 1)
        assert (child.sizes <= 2 * ps).all()


def test_refine_rejects_unit_blocks(pool):
    a, b = pool.pair(8, 2, 0)
    cs = mp.candidate_sets(a, b, 1)
    with pytest.raises(ValueError):
        mp.refine_candidates(cs, a, b)
