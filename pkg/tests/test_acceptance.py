"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with: pytest tests/test_acceptance.py -v -s
"""

import math
import time

import numpy as np
import pytest

import minplus as mp
from minplus import AlgoParams, Counters
from minplus.basic import build_segments, _build_allocation, collision_block_counts, derived_rng
from minplus.cli import RunRecord, _run_once, strict_violations
from minplus.recursive import allocate_recursive, allocate_top, collisions_exhaustive, collisions_incremental

from conftest import random_matrix

GRID_NS = (32, 64, 128)
GRID_DELTAS = (1, 2, 5)
GRID_SEEDS = 30


def report(num: int, name: str, ok: bool) -> bool:
    print(f"\nACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'}")
    return ok


def test_criterion_1_oracle_equivalence_basic(pool):
    t0 = time.perf_counter()
    ok = True
    for n in GRID_NS:
        for delta in GRID_DELTAS:
            params = AlgoParams(delta=delta, seed=0)
            for seed in range(GRID_SEEDS):
                a, b = pool.pair(n, delta, seed)
                if mp.basic_minplus(a, b, params) != pool.naive(n, delta, seed):
                    ok = False
    print(f"\n  [criterion 1] {9 * GRID_SEEDS} runs in {time.perf_counter() - t0:.1f}s")
    assert report(1, "oracle equivalence, basic (bitwise, exact)", ok)


def test_criterion_2_oracle_equivalence_recursive(pool):
    t0 = time.perf_counter()
    ok = True
    for n in GRID_NS:
        for delta in GRID_DELTAS:
            params = AlgoParams(delta=delta, seed=0)
            for seed in range(GRID_SEEDS):
                a, b = pool.pair(n, delta, seed)
                if mp.recursive_minplus(a, b, params) != pool.naive(n, delta, seed):
                    ok = False
    print(f"\n  [criterion 2] {9 * GRID_SEEDS} runs in {time.perf_counter() - t0:.1f}s")
    assert report(2, "oracle equivalence, recursive (bitwise, exact)", ok)


def test_criterion_3_small_entry_product():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    ok = True
    for trial in range(200):
        n_rows = int(rng.integers(1, 65))
        k = int(rng.integers(1, 65))
        n_cols = int(rng.integers(1, 65))
        m_bound = int(rng.integers(0, 65))
        inf_p = float(rng.choice([0.0, 0.1, 0.3]))
        a = random_matrix(rng, n_rows, k, m_bound, inf_p)
        b = random_matrix(rng, k, n_cols, m_bound, inf_p)
        if mp.minplus_small_entries(a, b, m_bound) != mp.minplus_naive(a, b):
            ok = False
    print(f"\n  [criterion 3] 200 pairs in {time.perf_counter() - t0:.1f}s")
    assert report(3, "small-entry product equals naive (exact)", ok)


def test_criterion_4_approximation_bounds(pool):
    n, delta, l = 64, 2, 8
    ok = True
    for seed in range(50):
        a, b = pool.pair(n, delta, seed)
        c = pool.naive(n, delta, seed).data
        approx = mp.approx_matrix(a, b, l).data
        per_entry = np.repeat(np.repeat(approx, l, 0), l, 1)
        if np.abs(c - per_entry).max() > 4 * delta * l:
            ok = False
        rep = np.repeat(np.repeat(c[::l, ::l], l, 0), l, 1)
        if np.abs(c - rep).max() > 2 * delta * l:
            ok = False
    assert report(4, "approximation within 4*delta*l, representatives within 2*delta*l", ok)


def test_criterion_5_candidate_soundness(pool):
    n, l = 64, 8
    ok = True
    for delta, seed in ((1, 0), (2, 0), (2, 1), (2, 2), (5, 0), (5, 1)):
        a, b = pool.pair(n, delta, seed)
        ad, bd = a.base.data, b.base.data
        cs = mp.candidate_sets(a, b, l)
        for i in range(n):
            sums = ad[i, :][:, None] + bd
            ks = sums.argmin(axis=0)  # ties break to the smallest index
            if not cs.mask[i // l, np.arange(n) // l, ks // l].all():
                ok = False
        ra, rb = ad[::l, ::l], bd[::l, ::l]
        rsums = ra[:, :, None] + rb[None, :, :]
        nb = n // l
        for bi in range(nb):
            for bj in range(nb):
                vals = rsums[bi, :, bj][cs.mask[bi, bj]]
                if vals.max() - vals.min() > 16 * delta * l:
                    ok = False
    assert report(5, "candidate sets contain every argmin block; 16*delta*l closeness", ok)


def test_criterion_6_sampling_coverage():
    ok = True
    worst = 0.0
    for seed in range(100):
        delta = 1 + seed % 2
        a = mp.generate_bd(64, delta, 5000 + 2 * seed)
        b = mp.generate_bd(64, delta, 5001 + 2 * seed)
        params = AlgoParams(delta=delta, seed=seed, c0=3)
        cs = mp.candidate_sets(a, b, params.block_len(64))
        remaining = int((cs.sizes > params.t_beta(64)).sum())
        _, needed = mp.sample_r(cs, params)
        frac = len(needed.missed) / remaining if remaining else 0.0
        worst = max(worst, frac)
        if frac > 0.05:
            ok = False
    print(f"\n  [criterion 6] worst per-run missed fraction {worst:.4f}")
    assert report(6, "sampled columns cover large candidate sets (<= 5% missed per run)", ok)


def test_criterion_7_collision_statistics():
    n, delta, l = 128, 2, 8
    nb = n // l
    w = 20 * delta * l
    alpha = 1 - math.log2(l) / math.log2(n)
    gamma = 0.6
    t_gamma = math.ceil(n ** gamma)  # 19 > nb: every segment is small
    s_raw = math.ceil(n ** (2 * alpha - gamma))
    slot_count = ((s_raw + 3) // 4) * 4
    s_emp, s_pred, blk_emp, blk_pred = [], [], [], []
    for seed in range(50):
        a = mp.generate_bd(n, delta, 7000 + 2 * seed)
        b = mp.generate_bd(n, delta, 7001 + 2 * seed)
        ad, bd = a.base.data, b.base.data
        rng_pick = np.random.default_rng(seed)
        r = int(rng_pick.integers(0, nb)) * l
        ar = ad - ad[:, r : r + 1]
        br = bd - bd[r : r + 1, :]
        seg_a, seg_b, shifts = build_segments(ar, br, l, delta)
        shift = shifts[seed % 3]
        alloc = _build_allocation(
            seg_a, seg_b, seg_a.sizes < t_gamma, shift, slot_count, derived_rng(seed, 71)
        )
        counters = Counters()
        cols = mp.find_collisions(alloc, counters)
        s_emp.append(counters.collision_checks)
        s_pred.append(int(alloc.a_sizes.sum()) * int(alloc.b_sizes.sum()) / slot_count)
        m = len(alloc.keys)
        nonzero_pairs = sum(
            1 for p in range(m) for q in range(m) if p != q and alloc.a_sizes[p] and alloc.b_sizes[q]
        )
        blk_emp.append(collision_block_counts(alloc, cols, nb).mean())
        blk_pred.append(nonzero_pairs / slot_count)
    ms_emp, ms_pred = np.mean(s_emp), np.mean(s_pred)
    mb_emp, mb_pred = np.mean(blk_emp), np.mean(blk_pred)
    print(
        f"\n  [criterion 7] enumeration cost mean {ms_emp:.1f} vs prediction {ms_pred:.1f}; "
        f"per-block collisions mean {mb_emp:.3f} vs bound {mb_pred:.3f}"
    )
    ok = ms_emp <= 4 * ms_pred and ms_pred <= 4 * ms_emp and mb_emp <= 4 * mb_pred
    assert report(7, "collision counts within factor 4 of uniform-allocation predictions", ok)


def test_criterion_8_incremental_collision_equality(pool):
    from minplus.basic import _encode_keys

    cases = [(32, s) for s in range(8)] + [(64, s) for s in range(8)] + [(128, s) for s in range(4)]
    ok = True
    for n, seed in cases:
        delta = 1 + seed % 2
        a, b = pool.pair(n, delta, 60 + seed)
        ad, bd = a.base.data, b.base.data
        l0, l = 4, 1
        r = int(np.random.default_rng(seed).integers(0, n // l0)) * l0
        ar = ad - ad[:, r : r + 1]
        br = bd - bd[r : r + 1, :]
        seg_a, _, _ = build_segments(ar, br, l, delta)
        depth = int(math.log2(l0 // l))
        keys_t = seg_a.keys
        uk = []
        for j in range(depth + 1):
            sh = depth - j
            kj = np.stack([keys_t[:, 0] >> sh, keys_t[:, 1] >> sh], 1)
            _, first = np.unique(_encode_keys(kj[:, 0], kj[:, 1]), return_index=True)
            uk.append(kj[first])
        top_slots = max(4, math.ceil(n ** (1 / 3)))
        rng = derived_rng(seed, 81)
        tree = allocate_top(uk[0], l0, top_slots, rng)
        for j in range(1, depth + 1):
            tree = allocate_recursive(tree, uk[j], rng)
        pairs = collisions_exhaustive(tree, 0)
        for j in range(1, depth + 1):
            inc = collisions_incremental(pairs, tree, j)
            exh = collisions_exhaustive(tree, j)
            if set(map(tuple, inc.tolist())) != set(map(tuple, exh.tolist())):
                ok = False
            pairs = exh
    assert report(8, "incremental collision finding set-equal to exhaustive at every level", ok)


def test_criterion_9_work_counters_strict(pool):
    ok = True
    for algo in ("basic", "recursive"):
        for n in GRID_NS:
            for seed in range(2):
                delta = 2
                a, b = pool.pair(n, delta, seed)
                params = AlgoParams(delta=delta, seed=seed)
                _, rec = _run_once(algo, a, b, params, verify=True)
                if rec.verified is not True:
                    ok = False
                if strict_violations(rec, params):
                    ok = False
    assert report(9, "strict counter bounds hold across the benchmark grid", ok)


def test_criterion_10_bd_preservation(pool):
    # criteria 1-2 assert the engines match the naive product bitwise, so
    # validating those products validates every verified engine output
    ok = True
    for n in GRID_NS:
        for delta in GRID_DELTAS:
            for seed in range(GRID_SEEDS):
                if not mp.validate_bd(pool.naive(n, delta, seed), delta):
                    ok = False
    params = AlgoParams(delta=2, seed=0)
    for seed in range(5):
        a, b = pool.pair(32, 2, seed)
        got = mp.basic_minplus(a, b, params)
        if not mp.validate_bd(got, 2):
            ok = False
        got = mp.recursive_minplus(a, b, params)
        if not mp.validate_bd(got, 2):
            ok = False
    assert report(10, "products of bounded-difference inputs stay bounded-difference", ok)
