"""Level-recursive min-plus product.

Candidate sets are refined from the top block length down to single entries,
halving the block length each round. Pairs whose candidate set crosses the
size threshold at some level are finished by that level's sampled segment
pipeline; pairs still small at block length 1 are finished by direct
candidate enumeration. Slot allocation at finer levels descends a 4-way
tree so that collisions can be searched inside the previous level's
collisions instead of from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basic import (
    REL_SHIFTS,
    AlgoParams,
    Counters,
    _assigned_block_values,
    _ceil_tol,
    _encode_keys,
    _enumerate_pairs,
    _write_blocks,
    build_segments,
    derived_rng,
)
from .blocking import CandidateSets, candidate_sets, refine_candidates
from .matrix import INF, BDMatrix, Matrix

_PH_SAMPLE_LVL = 11
_PH_ALLOC_LVL = 12


@dataclass(frozen=True)
class LevelState:
    """Partition of the surviving block pairs at one refinement level."""

    block_len: int
    theta: float
    gamma: float
    active: np.ndarray  # pairs routed to this level's sampled pipeline
    pending: np.ndarray  # pairs refined to the next level (or the tail at l=1)


@dataclass
class TreeLevel:
    block_len: int
    slot_count: int
    keys: np.ndarray  # (m, 2) [block column, bucket] unique, lexicographic
    slots: np.ndarray
    parent: np.ndarray | None


@dataclass
class SlotTree:
    """Per-level slot assignments; each slot owns exactly 4 child slots."""

    levels: list[TreeLevel]

    @property
    def leaf(self) -> TreeLevel:
        return self.levels[-1]


def allocate_top(keys: np.ndarray, block_len: int, slot_count: int, rng: np.random.Generator) -> SlotTree:
    """Uniform slot choice for every top-level segment group."""
    if slot_count < 1:
        raise ValueError("slot_count must be positive")
    slots = rng.integers(0, slot_count, size=len(keys))
    return SlotTree([TreeLevel(block_len, slot_count, keys, slots, None)])


def allocate_recursive(tree: SlotTree, child_keys: np.ndarray, rng: np.random.Generator) -> SlotTree:
    """Place each half-length segment group uniformly among the 4 child
    slots of its parent's slot; children of distinct parents stay disjoint."""
    top = tree.leaf
    parent_enc = _encode_keys(top.keys[:, 0], top.keys[:, 1])
    want = _encode_keys(child_keys[:, 0] // 2, child_keys[:, 1] // 2)
    pos = np.searchsorted(parent_enc, want)
    ok = (pos < len(parent_enc)) & (parent_enc[np.minimum(pos, len(parent_enc) - 1)] == want)
    if not ok.all():
        raise ValueError("sub-segment with no parent record")
    choice = rng.integers(0, 4, size=len(child_keys))
    slots = top.slots[pos] * 4 + choice
    lev = TreeLevel(top.block_len // 2, top.slot_count * 4, child_keys, slots, pos)
    return SlotTree(tree.levels + [lev])


def _colocated_pairs(slots: np.ndarray) -> np.ndarray:
    """All ordered pairs of distinct indices sharing a slot: rows (slot, i, j)."""
    m = len(slots)
    rows: list[np.ndarray] = []
    if m:
        order = np.argsort(slots, kind="stable")
        ss = slots[order]
        bounds = np.flatnonzero(np.diff(ss)) + 1
        starts = np.concatenate([[0], bounds, [m]])
        for gi in range(len(starts) - 1):
            g0, g1 = int(starts[gi]), int(starts[gi + 1])
            if g1 - g0 < 2:
                continue
            idx = order[g0:g1]
            p = np.repeat(idx, len(idx))
            q = np.tile(idx, len(idx))
            keep = p != q
            rows.append(np.stack([np.full(int(keep.sum()), int(ss[g0]), dtype=np.int64), p[keep], q[keep]], 1))
    return np.concatenate(rows, 0) if rows else np.empty((0, 3), dtype=np.int64)


def collisions_exhaustive(tree: SlotTree, level_index: int) -> np.ndarray:
    """Reference per-slot enumeration at one tree level."""
    return _colocated_pairs(tree.levels[level_index].slots)


def _expand_children(pairs: np.ndarray, child_of: np.ndarray, starts: np.ndarray, counts: np.ndarray):
    """Cartesian products of the children of each (parent a, parent b) pair."""
    pa, pb = pairs[:, 0], pairs[:, 1]
    ca_n, cb_n = counts[pa], counts[pb]
    per = ca_n * cb_n
    total = int(per.sum())
    if total == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e
    pair_id = np.repeat(np.arange(len(pairs)), per)
    offs = np.concatenate([[0], np.cumsum(per)[:-1]])
    r = np.arange(total) - offs[pair_id]
    ia = r // cb_n[pair_id]
    ib = r % cb_n[pair_id]
    ca = child_of[starts[pa[pair_id]] + ia]
    cb = child_of[starts[pb[pair_id]] + ib]
    return ca, cb


def _children_index(parent: np.ndarray, n_parents: int):
    order = np.argsort(parent, kind="stable")
    counts = np.bincount(parent, minlength=n_parents).astype(np.int64)
    starts = np.zeros(n_parents, dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    return order.astype(np.int64), starts, counts


def collisions_incremental(
    parent_collisions: np.ndarray,
    tree: SlotTree,
    level_index: int,
    counters: Counters | None = None,
    diagonal_nodes: np.ndarray | None = None,
) -> np.ndarray:
    """Collisions at one tree level found by searching only the children of
    the previous level's collisions and of nodes sharing a slot with
    themselves (every co-located child pair has co-located parents).

    Set-equal to collisions_exhaustive at the same level. Each candidate
    check is O(1); checks are counted when counters are given.
    """
    lev = tree.levels[level_index]
    par = tree.levels[level_index - 1]
    child_of, starts, counts = _children_index(lev.parent, len(par.keys))
    if diagonal_nodes is None:
        diagonal_nodes = np.arange(len(par.keys), dtype=np.int64)
    diag = np.stack([diagonal_nodes, diagonal_nodes], 1)
    seed_pairs = np.concatenate([parent_collisions[:, 1:3], diag], 0) if len(parent_collisions) else diag
    ca, cb = _expand_children(seed_pairs, child_of, starts, counts)
    if counters is not None:
        counters.collision_checks += len(ca)
    if not len(ca):
        return np.empty((0, 3), dtype=np.int64)
    keep = (ca != cb) & (lev.slots[ca] == lev.slots[cb])
    ca, cb = ca[keep], cb[keep]
    out = np.stack([lev.slots[ca], ca, cb], 1)
    # dedup: a child pair can descend from several seed pairs only via the
    # diagonal overlap, but keep the contract tight anyway
    if len(out):
        enc = (out[:, 1] * (len(lev.keys) + 1) + out[:, 2])
        _, first = np.unique(enc, return_index=True)
        out = out[np.sort(first)]
    return out


def finish_tail(pending_at_l1: np.ndarray, k1: CandidateSets, a: BDMatrix, b: BDMatrix) -> np.ndarray:
    """Direct candidate enumeration at block length 1: for each pending pair
    (i, j), min over k in K_1(i, j) of A[i,k] + B[k,j]."""
    assert k1.grid.l == 1
    ad, bd = a.base.data, b.base.data
    out = np.empty(len(pending_at_l1), dtype=np.int64)
    chunk = max(1, 4_000_000 // max(ad.shape[0], 1))
    for lo in range(0, len(pending_at_l1), chunk):
        hi = min(lo + chunk, len(pending_at_l1))
        pi = pending_at_l1[lo:hi, 0]
        pj = pending_at_l1[lo:hi, 1]
        sums = ad[pi, :] + bd[:, pj].T
        sel = k1.mask[pi, pj, :]
        out[lo:hi] = np.where(sel, sums, INF).min(axis=1)
    return out


# ---------------------------------------------------------------------------
# per-level collision machinery (structural: counters and statistics)


def _cross_check_count(slots: np.ndarray, a_sizes: np.ndarray, b_sizes: np.ndarray) -> int:
    total = 0
    if len(slots):
        order = np.argsort(slots, kind="stable")
        ss = slots[order]
        bounds = np.flatnonzero(np.diff(ss)) + 1
        starts = np.concatenate([[0], bounds, [len(ss)]])
        for gi in range(len(starts) - 1):
            g0, g1 = int(starts[gi]), int(starts[gi + 1])
            if g1 - g0 < 2:
                continue
            idx = order[g0:g1]
            asz, bsz = a_sizes[idx], b_sizes[idx]
            total += int(asz.sum()) * int(bsz.sum()) - int((asz * bsz).sum())
    return total


def _level_collision_pass(
    a_rr: np.ndarray,
    b_rr: np.ndarray,
    l: int,
    l0: int,
    delta: int,
    top_slots: int,
    gamma_blocks: np.ndarray,
    rng: np.random.Generator,
    shift: int,
    counters: Counters,
) -> np.ndarray:
    """Tree allocation for one reduced column and one correspondence
    relation, with incremental collision finding restricted to collisions
    whose footprint touches the assigned blocks."""
    seg_a, seg_b, _ = build_segments(a_rr, b_rr, l, delta)
    keys_t = seg_a.keys
    n_seg = len(keys_t)
    depth = int(math.log2(l0 // l))

    # node keys per tree level; halving both the column-block index and the
    # bucket index reproduces the coarser level's grouping exactly
    uniq_keys: list[np.ndarray] = []
    node_of_seg: list[np.ndarray] = []
    for j in range(depth + 1):
        sh = depth - j
        kj = np.stack([keys_t[:, 0] >> sh, keys_t[:, 1] >> sh], 1)
        enc = _encode_keys(kj[:, 0], kj[:, 1])
        _, first, inverse = np.unique(enc, return_index=True, return_inverse=True)
        uniq_keys.append(kj[first])
        node_of_seg.append(inverse.astype(np.int64))

    tree = allocate_top(uniq_keys[0], l0, top_slots, rng)
    for j in range(1, depth + 1):
        tree = allocate_recursive(tree, uniq_keys[j], rng)

    # partner sizes per target segment
    b_enc = _encode_keys(seg_b.keys[:, 0], seg_b.keys[:, 1])
    want = _encode_keys(keys_t[:, 0], shift - keys_t[:, 1])
    pos = np.searchsorted(b_enc, want)
    pos_c = np.minimum(pos, max(len(b_enc) - 1, 0))
    found = (b_enc[pos_c] == want) if len(b_enc) else np.zeros(n_seg, bool)
    b_sizes_t = np.where(found, seg_b.sizes[pos_c], 0).astype(np.int64)

    # per-level footprint hits: does a node cover an assigned row / column
    seg_rows = np.concatenate(seg_a.members) if n_seg else np.empty(0, dtype=np.int64)
    row_seg_id = np.repeat(np.arange(n_seg), seg_a.sizes) if n_seg else np.empty(0, dtype=np.int64)
    bcol_lists = [seg_b.members[pos_c[i]] if found[i] else np.empty(0, dtype=np.int64) for i in range(n_seg)]
    seg_cols = np.concatenate(bcol_lists) if n_seg else np.empty(0, dtype=np.int64)
    col_seg_id = np.repeat(np.arange(n_seg), b_sizes_t) if n_seg else np.empty(0, dtype=np.int64)

    nb_t = a_rr.shape[0] // l
    row_hit_lv: list[np.ndarray] = []
    col_hit_lv: list[np.ndarray] = []
    for j in range(depth + 1):
        sh = depth - j
        nb_j = nb_t >> sh
        grow = np.zeros(nb_j, dtype=bool)
        gcol = np.zeros(nb_j, dtype=bool)
        grow[gamma_blocks[:, 0] >> sh] = True
        gcol[gamma_blocks[:, 1] >> sh] = True
        rh = np.zeros(len(uniq_keys[j]), dtype=bool)
        ch = np.zeros(len(uniq_keys[j]), dtype=bool)
        if len(seg_rows):
            np.logical_or.at(rh, node_of_seg[j][row_seg_id], grow[seg_rows >> sh])
        if len(seg_cols):
            np.logical_or.at(ch, node_of_seg[j][col_seg_id], gcol[seg_cols >> sh])
        row_hit_lv.append(rh)
        col_hit_lv.append(ch)

    # aggregate block counts per top node for the enumeration cost counter
    a_sz0 = np.zeros(len(uniq_keys[0]), dtype=np.int64)
    b_sz0 = np.zeros(len(uniq_keys[0]), dtype=np.int64)
    np.add.at(a_sz0, node_of_seg[0], seg_a.sizes)
    np.add.at(b_sz0, node_of_seg[0], b_sizes_t)
    counters.collision_checks += _cross_check_count(tree.levels[0].slots, a_sz0, b_sz0)

    pairs = _colocated_pairs(tree.levels[0].slots)
    if len(pairs):
        keep = row_hit_lv[0][pairs[:, 1]] & col_hit_lv[0][pairs[:, 2]]
        pairs = pairs[keep]
    for j in range(1, depth + 1):
        diag = np.flatnonzero(row_hit_lv[j - 1] & col_hit_lv[j - 1]).astype(np.int64)
        pairs = collisions_incremental(pairs, tree, j, counters, diagonal_nodes=diag)
        if len(pairs):
            keep = row_hit_lv[j][pairs[:, 1]] & col_hit_lv[j][pairs[:, 2]]
            pairs = pairs[keep]
    counters.collisions_found += len(pairs)
    return pairs


# ---------------------------------------------------------------------------
# driver


def recursive_minplus(
    a: BDMatrix,
    b: BDMatrix,
    params: AlgoParams,
    *,
    effective_omega: float = 3.0,
    counters: Counters | None = None,
    level_trace: list[LevelState] | None = None,
) -> Matrix:
    """Exact min-plus product via level-by-level candidate refinement.

    Deterministic for a fixed params.seed. The per-level slot exponent is
    gamma_l = theta + effective_omega/3 - 1 with theta the level exponent
    (block length l = n**(1-theta)), clamped so at least one slot exists.
    """
    if not isinstance(a, BDMatrix) or not isinstance(b, BDMatrix):
        raise TypeError("recursive_minplus expects BDMatrix inputs")
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.delta != b.delta or a.delta != params.delta:
        raise ValueError("delta mismatch between inputs and params")
    if counters is None:
        counters = Counters()
    ad, bd = a.base.data, b.base.data
    n = a.n
    if n == 1:
        return Matrix(np.array([[int(ad[0, 0]) + int(bd[0, 0])]], dtype=np.int64))

    l0 = params.block_len(n)
    levels = [l0 >> j for j in range(int(math.log2(l0)) + 1)]
    t_beta = params.t_beta(n)
    lg_n = math.log2(n)

    c = np.full((n, n), INF, dtype=np.int64)
    done = np.zeros((n, n), dtype=bool)
    cands = candidate_sets(a, b, l0)
    eligible = np.ones((n // l0, n // l0), dtype=bool)

    for li, l in enumerate(levels):
        nb = n // l
        theta = math.log2(nb) / lg_n if n > 1 else 1.0
        gamma_l = theta + effective_omega / 3.0 - 1.0
        sizes = cands.sizes
        active_mask = eligible & (sizes > t_beta)
        active = np.argwhere(active_mask)
        if len(active):
            if nb < 4:
                # grids this small skip the sampled pipeline: enumerate directly
                vals = _enumerate_pairs(ad, bd, l, active, cands.mask, counters)
                _mark_done(done, active, l)
                _write_blocks(c, active, vals, l)
                counters.fallback_pairs += len(active)
            else:
                _run_level(a, b, cands, params, l, l0, li, theta, gamma_l, active, c, done, counters)
        pending_mask = eligible & ~active_mask
        if level_trace is not None:
            level_trace.append(
                LevelState(l, theta, gamma_l, active, np.argwhere(pending_mask))
            )
        if l > 1:
            cands = refine_candidates(cands, a, b)
            eligible = np.repeat(np.repeat(pending_mask, 2, 0), 2, 1)
        else:
            pending = np.argwhere(pending_mask)
            if len(pending):
                vals = finish_tail(pending, cands, a, b)
                assert not done[pending[:, 0], pending[:, 1]].any()
                c[pending[:, 0], pending[:, 1]] = vals
                done[pending[:, 0], pending[:, 1]] = True
    assert done.all(), "some output blocks were never finalized"
    return Matrix(c)


def _run_level(
    a: BDMatrix,
    b: BDMatrix,
    cands: CandidateSets,
    params: AlgoParams,
    l: int,
    l0: int,
    level_index: int,
    theta: float,
    gamma_l: float,
    active: np.ndarray,
    c: np.ndarray,
    done: np.ndarray,
    counters: Counters,
) -> None:
    ad, bd = a.base.data, b.base.data
    n = a.n
    nb = n // l
    w = 20 * params.delta * l
    span = np.arange(l)

    count = _ceil_tol(params.c0 * math.log2(n) * n ** (theta - params.beta))
    rng = derived_rng(params.seed, _PH_SAMPLE_LVL, level_index)
    r_blocks = np.unique(rng.integers(0, nb, size=count)) if count else np.empty(0, dtype=np.int64)

    gamma: dict[int, np.ndarray] = {}
    missed = active
    if len(r_blocks):
        sel = cands.mask[active[:, 0], active[:, 1]][:, r_blocks]
        hit = sel.any(axis=1)
        first = sel.argmax(axis=1)
        assigned = active[hit]
        chosen = r_blocks[first[hit]]
        for rb in np.unique(chosen):
            gamma[int(rb)] = assigned[chosen == rb]
        missed = active[~hit]

    if len(missed):
        vals = _enumerate_pairs(ad, bd, l, missed, cands.mask, counters)
        _mark_done(done, missed, l)
        _write_blocks(c, missed, vals, l)
        counters.fallback_pairs += len(missed)

    top_slots = max(1, _ceil_tol(n ** (2 * (1.0 - math.log2(l0) / math.log2(n)) - gamma_l)))
    for rb in sorted(gamma):
        blocks = gamma[rb]
        r_col = rb * l
        a_rr = ad - ad[:, r_col : r_col + 1]
        b_rr = bd - bd[r_col : r_col + 1, :]
        vals = _assigned_block_values(a_rr, b_rr, l, w, blocks, counters)
        rows = blocks[:, 0][:, None] * l + span
        cols = blocks[:, 1][:, None] * l + span
        vals = vals + ad[rows, r_col][:, :, None] + bd[r_col, cols][:, None, :]
        _mark_done(done, blocks, l)
        _write_blocks(c, blocks, vals, l)
        for rel, shift in enumerate(REL_SHIFTS):
            rng_a = derived_rng(params.seed, _PH_ALLOC_LVL, level_index, r_col, rel)
            _level_collision_pass(a_rr, b_rr, l, l0, params.delta, top_slots, blocks, rng_a, shift, counters)


def _mark_done(done: np.ndarray, blocks: np.ndarray, l: int) -> None:
    span = np.arange(l)
    rows = blocks[:, 0][:, None] * l + span
    cols = blocks[:, 1][:, None] * l + span
    sl = (rows[:, :, None], cols[:, None, :])
    assert not done[sl].any(), "block finalized twice"
    done[sl] = True
