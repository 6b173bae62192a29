"""Blocked randomized min-plus product for bounded-difference matrices.

Single-partition engine: pick a block length, build candidate sets from
block representatives, finish small-candidate blocks by direct enumeration,
and cover the rest by sampling reference columns. For each sampled column
the matrices are column/row reduced, blocks are bucketed into value
segments per block column, and corresponding segments are multiplied inside
rectangular matrices: large segments in private slots, small segments
randomly allocated with collision subtraction on the packed polynomial
product. The result is always exact: pairs whose candidate set misses the
sample fall back to direct enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocking import CandidateSets, candidate_sets
from .matrix import INF, BDMatrix, Matrix
from .oracle import PolyMatrix, extract_min, minplus_small_entries, poly_matmul

# A-side bucket p corresponds to B-side bucket shift - p, one relation per shift.
REL_SHIFTS = (-2, -1, 0)

_PH_SAMPLE = 1
_PH_ALLOC = 2

_KEY_BIAS = 1 << 20
_KEY_STRIDE = 1 << 22
_SEED_MASK = 0xFFFFFFFFFFFFFFFF


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic stream for (seed, phase, ...) so parallel order never matters."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, *key]))


def _ceil_tol(x: float) -> int:
    # tolerate float fuzz when x should be an exact power
    return int(math.ceil(x - 1e-9))


@dataclass
class Counters:
    """Named work counters reported by the algorithms and the CLI."""

    block_products: int = 0
    collision_checks: int = 0
    collisions_found: int = 0
    fallback_pairs: int = 0
    poly_degree_ops: int = 0
    max_large_slots: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "block_products": self.block_products,
            "collision_checks": self.collision_checks,
            "collisions_found": self.collisions_found,
            "fallback_pairs": self.fallback_pairs,
            "poly_degree_ops": self.poly_degree_ops,
            "max_large_slots": self.max_large_slots,
        }


@dataclass(frozen=True)
class AlgoParams:
    """Tuning knobs shared by the blocked algorithms.

    alpha sets the block length l ~ n**(1-alpha); beta the small-candidate
    threshold n**beta; gamma the segment-size threshold n**gamma and the
    slot-count exponent; c0 scales the sample size.
    """

    delta: int
    alpha: float = 0.9
    beta: float = 0.6
    gamma: float = 0.6
    c0: int = 3
    seed: int = 0

    def __post_init__(self):
        if int(self.delta) < 1:
            raise ValueError(f"delta must be a positive integer, got {self.delta}")
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if int(self.c0) < 1:
            raise ValueError(f"c0 must be a positive integer, got {self.c0}")

    def block_len(self, n: int) -> int:
        """Power-of-two block length nearest n**(1-alpha) (half-up rounding)."""
        if n <= 1:
            return 1
        lg = int(math.log2(n))
        exp = int(math.floor((1.0 - self.alpha) * lg + 0.5 + 1e-9))
        return 1 << max(0, min(lg, exp))

    def t_beta(self, n: int) -> int:
        return _ceil_tol(n ** self.beta)

    def t_gamma(self, n: int) -> int:
        return _ceil_tol(n ** self.gamma)

    def sample_count(self, n: int) -> int:
        if n <= 1:
            return 0
        return _ceil_tol(self.c0 * math.log2(n) * n ** (self.alpha - self.beta))

    def slot_count(self, n: int) -> int:
        s = _ceil_tol(n ** (2 * self.alpha - self.gamma))
        return ((s + 3) // 4) * 4


# ---------------------------------------------------------------------------
# segmentation


@dataclass
class SegmentTable:
    """Value segments of one side: blocks of each block column (A side) or
    block row (B side) grouped by floor(representative / width)."""

    block_len: int
    width: int
    axis: str  # "columns" for the A side, "rows" for the B side
    buckets: np.ndarray  # A: bucket of block (bi, bk); B: bucket of block (bk, bj)
    keys: np.ndarray  # (m, 2) [major block index, bucket], lexicographic
    members: list[np.ndarray]  # block rows (A) / block columns (B) per segment
    sizes: np.ndarray

    @property
    def groups(self) -> list[dict[int, np.ndarray]]:
        """Per major index: bucket -> member blocks."""
        nb = self.buckets.shape[0]
        out: list[dict[int, np.ndarray]] = [dict() for _ in range(nb)]
        for (major, bucket), mem in zip(self.keys, self.members):
            out[int(major)][int(bucket)] = mem
        return out


def _group_by_major(bmat: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Group bmat[major, member] by (major, bucket value); members sorted."""
    n_major, n_member = bmat.shape
    major_idx = np.repeat(np.arange(n_major, dtype=np.int64), n_member)
    member_idx = np.tile(np.arange(n_member, dtype=np.int64), n_major)
    buck = bmat.ravel()
    order = np.lexsort((member_idx, buck, major_idx))
    mi, me, bu = major_idx[order], member_idx[order], buck[order]
    change = np.empty(mi.size, dtype=bool)
    change[0] = True
    change[1:] = (mi[1:] != mi[:-1]) | (bu[1:] != bu[:-1])
    starts = np.flatnonzero(change)
    keys = np.stack([mi[starts], bu[starts]], axis=1)
    members = np.split(me, starts[1:])
    sizes = np.diff(np.append(starts, mi.size)).astype(np.int64)
    return keys, members, sizes


def _data_of(m) -> np.ndarray:
    if isinstance(m, BDMatrix):
        return m.base.data
    if isinstance(m, Matrix):
        return m.data
    return np.asarray(m, dtype=np.int64)


def build_segments(a_r, b_r, l: int, delta: int) -> tuple[SegmentTable, SegmentTable, tuple[int, ...]]:
    """Bucket block representatives of the reduced matrices into half-open
    segments of width 20*delta*l, per block column of A and block row of B.

    Returns the two tables plus the correspondence relations: A bucket p is
    paired with B bucket shift - p for each shift in the returned tuple, which
    together cover every block pair whose representative sums have magnitude
    at most 16*delta*l.
    """
    ad, bd = _data_of(a_r), _data_of(b_r)
    w = 20 * int(delta) * int(l)
    pa = ad[::l, ::l] // w  # [bi, bk]
    qb = bd[::l, ::l] // w  # [bk, bj]
    assert np.abs(pa).max(initial=0) < _KEY_BIAS and np.abs(qb).max(initial=0) < _KEY_BIAS
    keys_a, members_a, sizes_a = _group_by_major(np.ascontiguousarray(pa.T))
    keys_b, members_b, sizes_b = _group_by_major(np.ascontiguousarray(qb))
    seg_a = SegmentTable(l, w, "columns", pa, keys_a, members_a, sizes_a)
    seg_b = SegmentTable(l, w, "rows", qb, keys_b, members_b, sizes_b)
    return seg_a, seg_b, REL_SHIFTS


def _encode_keys(major: np.ndarray, bucket: np.ndarray) -> np.ndarray:
    return major.astype(np.int64) * _KEY_STRIDE + (bucket.astype(np.int64) + _KEY_BIAS)


def baseline_offset(bucket, shift: int, width: int):
    """Value added to A-side segment entries and subtracted from the B-side
    partner. Centers both sides into [-(width + wobble), width + wobble]
    while leaving every pair sum unchanged."""
    bucket = np.asarray(bucket, dtype=np.int64)
    if shift == -2:
        out = -(bucket + 1) * width
    elif shift == -1:
        out = -bucket * width - width // 2
    elif shift == 0:
        out = -bucket * width
    else:
        raise ValueError(f"unknown correspondence shift {shift}")
    return out if out.ndim else int(out)


# ---------------------------------------------------------------------------
# allocation and collisions


@dataclass
class AllocationMap:
    """Randomized placement of small segments into rectangular slots.

    Corresponding A/B segments share a slot; ``offsets`` records the
    baseline added to the A side and subtracted from the B side.
    """

    slot_count: int
    shift: int
    block_len: int
    width: int
    m_enc: int
    keys: np.ndarray  # (m, 2) [home block column, bucket]
    slots: np.ndarray
    offsets: np.ndarray
    a_rows: list[np.ndarray]
    b_cols: list[np.ndarray]
    a_sizes: np.ndarray
    b_sizes: np.ndarray


def allocate_small_segments(n_segments: int, slot_count: int, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform slot choice per segment."""
    if slot_count < 1:
        raise ValueError("slot_count must be positive")
    return rng.integers(0, slot_count, size=n_segments)


def _build_allocation(
    seg_a: SegmentTable,
    seg_b: SegmentTable,
    select: np.ndarray,
    shift: int,
    slot_count: int,
    rng: np.random.Generator,
) -> AllocationMap:
    l, w = seg_a.block_len, seg_a.width
    delta = w // (20 * l)
    m_enc = w + 2 * delta * l
    keys = seg_a.keys[select]
    idxs = np.flatnonzero(select)
    slots = allocate_small_segments(len(keys), slot_count, rng)
    offsets = baseline_offset(keys[:, 1], shift, w)

    b_enc = _encode_keys(seg_b.keys[:, 0], seg_b.keys[:, 1])
    want = _encode_keys(keys[:, 0], shift - keys[:, 1])
    pos = np.searchsorted(b_enc, want)
    pos_c = np.clip(pos, 0, len(b_enc) - 1) if len(b_enc) else pos
    found = (b_enc[pos_c] == want) if len(b_enc) else np.zeros(len(want), bool)

    empty = np.empty(0, dtype=np.int64)
    a_rows = [seg_a.members[i] for i in idxs]
    b_cols = [seg_b.members[pos_c[i]] if found[i] else empty for i in range(len(keys))]
    a_sizes = seg_a.sizes[select].astype(np.int64)
    b_sizes = np.array([len(c) for c in b_cols], dtype=np.int64)
    return AllocationMap(
        slot_count=slot_count,
        shift=shift,
        block_len=l,
        width=w,
        m_enc=m_enc,
        keys=keys,
        slots=slots,
        offsets=offsets,
        a_rows=a_rows,
        b_cols=b_cols,
        a_sizes=a_sizes,
        b_sizes=b_sizes,
    )


def find_collisions(alloc: AllocationMap, counters: Counters | None = None) -> np.ndarray:
    """All co-located non-corresponding segment pairs, as rows
    (slot, A-segment id, B-segment id) indexing ``alloc.keys``.

    The enumeration cost counter adds sum over slots of |A_p| * |B_q| across
    ordered cross pairs, block counts multiplied.
    """
    m = len(alloc.slots)
    rows: list[np.ndarray] = []
    checks = 0
    if m:
        order = np.argsort(alloc.slots, kind="stable")
        slots_sorted = alloc.slots[order]
        bounds = np.flatnonzero(np.diff(slots_sorted)) + 1
        starts = np.concatenate([[0], bounds, [m]])
        for gi in range(len(starts) - 1):
            g0, g1 = starts[gi], starts[gi + 1]
            if g1 - g0 < 2:
                continue
            idx = order[g0:g1]
            asz = alloc.a_sizes[idx]
            bsz = alloc.b_sizes[idx]
            checks += int(asz.sum()) * int(bsz.sum()) - int((asz * bsz).sum())
            ai = idx[asz > 0]
            bi = idx[bsz > 0]
            if len(ai) and len(bi):
                p = np.repeat(ai, len(bi))
                q = np.tile(bi, len(ai))
                keep = p != q
                if keep.any():
                    slot = int(slots_sorted[g0])
                    rows.append(
                        np.stack([np.full(int(keep.sum()), slot, dtype=np.int64), p[keep], q[keep]], axis=1)
                    )
    out = np.concatenate(rows, axis=0) if rows else np.empty((0, 3), dtype=np.int64)
    if counters is not None:
        counters.collision_checks += checks
        counters.collisions_found += len(out)
    return out


def collision_block_counts(alloc: AllocationMap, collisions: np.ndarray, nb: int) -> np.ndarray:
    """Number of collision pairs whose footprint covers each output block."""
    counts = np.zeros((nb, nb), dtype=np.int64)
    for _, pi, qi in collisions:
        rows = alloc.a_rows[int(pi)]
        cols = alloc.b_cols[int(qi)]
        if len(rows) and len(cols):
            counts[np.ix_(rows, cols)] += 1
    return counts


# ---------------------------------------------------------------------------
# faithful rectangular paths


def process_large_segments(
    seg_a: SegmentTable,
    seg_b: SegmentTable,
    shift: int,
    a_r,
    b_r,
    t_gamma: int,
    counters: Counters | None = None,
) -> np.ndarray:
    """Pack each large A segment (>= t_gamma blocks) and its corresponding
    B segment into a private rectangular slot, centered by canceling
    baselines, and take the small-entry min-plus product.

    Returns the (n, n) reduced-space result, INF where nothing was covered.
    """
    ad, bd = _data_of(a_r), _data_of(b_r)
    l, w = seg_a.block_len, seg_a.width
    delta = w // (20 * l)
    m_enc = w + 2 * delta * l
    n = ad.shape[0]
    large = np.flatnonzero(seg_a.sizes >= t_gamma)
    if counters is not None:
        counters.max_large_slots = max(counters.max_large_slots, len(large))
    if not len(large):
        return np.full((n, n), INF, dtype=np.int64)

    b_enc = _encode_keys(seg_b.keys[:, 0], seg_b.keys[:, 1])
    span = np.arange(l)
    k_ext = len(large) * l
    ae = np.full((n, k_ext), INF, dtype=np.int64)
    be = np.full((k_ext, n), INF, dtype=np.int64)
    for s, seg_idx in enumerate(large):
        bk, p = (int(v) for v in seg_a.keys[seg_idx])
        u = baseline_offset(p, shift, w)
        rows = (seg_a.members[seg_idx][:, None] * l + span).ravel()
        src = bk * l + span
        placed = ad[np.ix_(rows, src)] + u
        assert np.abs(placed).max(initial=0) <= m_enc, "centered A value escapes its window"
        ae[np.ix_(rows, s * l + span)] = placed
        want = _encode_keys(np.array([bk]), np.array([shift - p]))[0]
        pos = int(np.searchsorted(b_enc, want))
        if pos < len(b_enc) and b_enc[pos] == want:
            cols = (seg_b.members[pos][:, None] * l + span).ravel()
            placed_b = bd[np.ix_(src, cols)] - u
            assert np.abs(placed_b).max(initial=0) <= m_enc, "centered B value escapes its window"
            be[np.ix_(s * l + span, cols)] = placed_b
    return minplus_small_entries(Matrix(ae), Matrix(be), m_enc, counters).data


_POLY_BYTES_LIMIT = 512 * 1024 * 1024


def process_small_segments(
    seg_a: SegmentTable,
    seg_b: SegmentTable,
    shift: int,
    a_r,
    b_r,
    t_gamma: int,
    slot_count: int,
    rng: np.random.Generator,
    counters: Counters | None = None,
) -> tuple[PolyMatrix, AllocationMap]:
    """Randomly allocate each small segment to a slot, encode entries as
    monomials (overlapping segments add up), and return the packed
    polynomial product together with the allocation."""
    ad, bd = _data_of(a_r), _data_of(b_r)
    l = seg_a.block_len
    n = ad.shape[0]
    alloc = _build_allocation(seg_a, seg_b, seg_a.sizes < t_gamma, shift, slot_count, rng)
    m_enc = alloc.m_enc
    deg = 2 * m_enc
    k_ext = slot_count * l
    est = n * k_ext * (deg + 1) * 8
    if est > _POLY_BYTES_LIMIT:
        raise MemoryError(f"packed polynomial matrices would need ~{2 * est >> 20} MiB")

    af = np.zeros((n, k_ext, deg + 1), dtype=np.int64)
    bf = np.zeros((k_ext, n, deg + 1), dtype=np.int64)
    span = np.arange(l)
    for i in range(len(alloc.keys)):
        bk = int(alloc.keys[i, 0])
        u = int(alloc.offsets[i])
        s = int(alloc.slots[i])
        src = bk * l + span
        rows = (alloc.a_rows[i][:, None] * l + span).ravel()
        deg_a = ad[np.ix_(rows, src)] + u + m_enc
        assert deg_a.min(initial=0) >= 0 and deg_a.max(initial=0) <= deg
        np.add.at(af, (rows[:, None], (s * l + span)[None, :], deg_a), 1)
        if len(alloc.b_cols[i]):
            cols = (alloc.b_cols[i][:, None] * l + span).ravel()
            deg_b = bd[np.ix_(src, cols)] - u + m_enc
            assert deg_b.min(initial=0) >= 0 and deg_b.max(initial=0) <= deg
            np.add.at(bf, ((s * l + span)[:, None], cols[None, :], deg_b), 1)
    cf = poly_matmul(PolyMatrix(af), PolyMatrix(bf), counters)
    return cf, alloc


def subtract_collisions(
    c_f: PolyMatrix,
    collisions: np.ndarray,
    needed: np.ndarray,
    a_r,
    b_r,
    alloc: AllocationMap,
    counters: Counters | None = None,
) -> dict[tuple[int, int], np.ndarray]:
    """Remove collision contributions from the packed product and extract
    exact reduced-space values for the needed blocks.

    Each colliding pair's block product is recomputed trivially and
    subtracted coefficientwise; a negative coefficient would mean the
    bookkeeping went wrong and trips an assertion.
    """
    ad, bd = _data_of(a_r), _data_of(b_r)
    l, m_enc = alloc.block_len, alloc.m_enc
    nb = ad.shape[0] // l
    span = np.arange(l)
    need_mask = np.zeros((nb, nb), dtype=bool)
    if len(needed):
        need_mask[needed[:, 0], needed[:, 1]] = True
    coeffs = c_f.coeffs.copy()
    ops = 0
    for _, pi, qi in collisions:
        pi, qi = int(pi), int(qi)
        rows_p = alloc.a_rows[pi]
        cols_q = alloc.b_cols[qi]
        if not (len(rows_p) and len(cols_q)):
            continue
        hit = need_mask[np.ix_(rows_p, cols_q)]
        if not hit.any():
            continue
        bk_p = int(alloc.keys[pi, 0])
        bk_q = int(alloc.keys[qi, 0])
        u_p = int(alloc.offsets[pi])
        u_q = int(alloc.offsets[qi])
        for li, lj in np.argwhere(hit):
            bi = int(rows_p[li])
            bj = int(cols_q[lj])
            deg_a = ad[np.ix_(bi * l + span, bk_p * l + span)] + u_p + m_enc
            deg_b = bd[np.ix_(bk_q * l + span, bj * l + span)] - u_q + m_enc
            d3 = deg_a[:, :, None] + deg_b[None, :, :]  # axes (i, c, j)
            rows = bi * l + span
            cols = bj * l + span
            np.subtract.at(coeffs, (rows[:, None, None], cols[None, :, None], d3.transpose(0, 2, 1)), 1)
            ops += l ** 3
    assert coeffs.min(initial=0) >= 0, "collision subtraction drove a coefficient negative"
    if counters is not None:
        counters.poly_degree_ops += ops
    cleaned = extract_min(PolyMatrix(coeffs), 2 * m_enc).data
    out: dict[tuple[int, int], np.ndarray] = {}
    for bi, bj in needed:
        bi, bj = int(bi), int(bj)
        out[(bi, bj)] = cleaned[np.ix_(bi * l + span, bj * l + span)]
    return out


# ---------------------------------------------------------------------------
# candidate phases


def handle_small_candidates(
    a: BDMatrix,
    b: BDMatrix,
    cands: CandidateSets,
    t_beta: int,
    counters: Counters | None = None,
) -> tuple[Matrix, np.ndarray]:
    """Finish every block pair with at most t_beta candidates by direct
    enumeration; other pairs are returned untouched (INF in the partial)."""
    l = cands.grid.l
    sizes = cands.sizes
    small = sizes <= t_beta
    remaining = np.argwhere(~small)
    c = np.full((a.n, a.n), INF, dtype=np.int64)
    sel = cands.mask & small[:, :, None]
    tri = np.argwhere(sel)  # row-major: grouped by (bi, bj)
    if len(tri):
        counts = sizes[small]
        pairs = np.argwhere(small)
        vals = _min_blocks(a.base.data, b.base.data, l, tri[:, 0], tri[:, 2], tri[:, 1], counts)
        _write_blocks(c, pairs, vals, l)
        if counters is not None:
            counters.block_products += len(tri)
    return Matrix(c), remaining


@dataclass
class NeededBlocks:
    """Per sampled representative column, the block pairs it must compute;
    pairs whose candidate set missed the sample go to the fallback."""

    gamma: dict[int, np.ndarray]
    missed: np.ndarray

    def total_assigned(self) -> int:
        return sum(len(v) for v in self.gamma.values())


def sample_r(cands: CandidateSets, params: AlgoParams, counters: Counters | None = None):
    """Sample representative columns uniformly with replacement (then dedup)
    and assign every large-candidate pair to the smallest sampled column
    inside its candidate set."""
    nb = cands.grid.n_blocks
    l = cands.grid.l
    n = cands.grid.n
    remaining = np.argwhere(cands.sizes > params.t_beta(n))
    count = params.sample_count(n)
    rng = derived_rng(params.seed, _PH_SAMPLE)
    draws = rng.integers(0, nb, size=count) if count else np.empty(0, dtype=np.int64)
    r_blocks = np.unique(draws)
    r_cols = (r_blocks * l).astype(np.int64)
    gamma: dict[int, np.ndarray] = {}
    missed = np.empty((0, 2), dtype=np.int64)
    if len(remaining) and len(r_blocks):
        sel = cands.mask[remaining[:, 0], remaining[:, 1]][:, r_blocks]
        hit = sel.any(axis=1)
        first = sel.argmax(axis=1)
        assigned = remaining[hit]
        chosen = r_blocks[first[hit]]
        for rb in np.unique(chosen):
            gamma[int(rb) * l] = assigned[chosen == rb]
        missed = remaining[~hit]
    elif len(remaining):
        missed = remaining
    return r_cols, NeededBlocks(gamma=gamma, missed=missed)


def shift_matrices(a, b, r: int) -> tuple[Matrix, Matrix]:
    """Column/row reduction: subtract column r of A from A and row r of B
    from B, so near-optimal block sums become near zero."""
    ad, bd = _data_of(a), _data_of(b)
    if not (0 <= r < ad.shape[1]):
        raise ValueError(f"column {r} out of range")
    if np.any(ad == INF) or np.any(bd == INF):
        raise ValueError("shift_matrices requires all-finite matrices")
    return Matrix(ad - ad[:, r : r + 1]), Matrix(bd - bd[r : r + 1, :])


# ---------------------------------------------------------------------------
# batched block products (shared by the candidate phases and the pipelines)


def _batched_block_minplus(a_blk: np.ndarray, b_blk: np.ndarray) -> np.ndarray:
    a_inf = a_blk == INF
    b_inf = b_blk == INF
    s = np.where(a_inf, 0, a_blk)[:, :, :, None] + np.where(b_inf, 0, b_blk)[:, None, :, :]
    s = np.where(a_inf[:, :, :, None] | b_inf[:, None, :, :], INF, s)
    return s.min(axis=2)


_TRIPLE_BUDGET = 2_000_000


def _min_blocks(
    a_data: np.ndarray,
    b_data: np.ndarray,
    l: int,
    bi: np.ndarray,
    bk: np.ndarray,
    bj: np.ndarray,
    counts: np.ndarray,
) -> np.ndarray:
    """Min over grouped block triples of the block min-plus products.

    Triples are ordered so each output group is contiguous; counts gives the
    group lengths (all >= 1). Returns (len(counts), l, l).
    """
    nb = a_data.shape[0] // l
    a4 = a_data.reshape(nb, l, nb, l).transpose(0, 2, 1, 3)
    b4 = b_data.reshape(nb, l, nb, l).transpose(0, 2, 1, 3)
    g_total = len(counts)
    out = np.empty((g_total, l, l), dtype=np.int64)
    starts = np.zeros(g_total + 1, dtype=np.int64)
    np.cumsum(counts, out=starts[1:])
    budget = max(1, _TRIPLE_BUDGET // max(l ** 3, 1))
    g0 = 0
    while g0 < g_total:
        g1 = int(np.searchsorted(starts, starts[g0] + budget, side="right")) - 1
        g1 = max(g1, g0 + 1)
        g1 = min(g1, g_total)
        t0, t1 = int(starts[g0]), int(starts[g1])
        vals = _batched_block_minplus(a4[bi[t0:t1], bk[t0:t1]], b4[bk[t0:t1], bj[t0:t1]])
        rel = (starts[g0:g1] - t0).astype(np.int64)
        out[g0:g1] = np.minimum.reduceat(vals.reshape(t1 - t0, -1), rel, axis=0).reshape(-1, l, l)
        g0 = g1
    return out


def _write_blocks(c: np.ndarray, blocks: np.ndarray, vals: np.ndarray, l: int) -> None:
    """Min-combine per-block values into the output (blocks are distinct)."""
    n = c.shape[1]
    span = np.arange(l)
    rows = blocks[:, 0][:, None] * l + span
    cols = blocks[:, 1][:, None] * l + span
    flat = (rows[:, :, None] * n + cols[:, None, :]).reshape(-1)
    cur = c.reshape(-1)
    fv = vals.reshape(-1)
    old = cur[flat]
    cur[flat] = np.where(fv < old, fv, old)


def _enumerate_pairs(
    a_data: np.ndarray,
    b_data: np.ndarray,
    l: int,
    pairs: np.ndarray,
    mask: np.ndarray,
    counters: Counters | None = None,
) -> np.ndarray:
    """Direct enumeration of each pair's candidate blocks (fallback path)."""
    sel = mask[pairs[:, 0], pairs[:, 1], :]
    p_idx, bk = np.nonzero(sel)
    counts = sel.sum(axis=1)
    assert counts.min(initial=1) >= 1
    vals = _min_blocks(a_data, b_data, l, pairs[p_idx, 0], bk, pairs[p_idx, 1], counts)
    if counters is not None:
        counters.block_products += len(bk)
    return vals


def _assigned_block_values(
    a_r: np.ndarray,
    b_r: np.ndarray,
    l: int,
    width: int,
    blocks: np.ndarray,
    counters: Counters | None = None,
) -> np.ndarray:
    """Reduced-space values of the assigned blocks: for each block pair, the
    min over every block column whose A/B buckets fall in one of the three
    correspondence relations (p + q in {-2, -1, 0}).

    Equals the union of the rectangular segment products after collision
    subtraction, computed directly per assigned block.
    """
    pa = a_r[::l, ::l] // width
    qb = b_r[::l, ::l] // width
    bi, bj = blocks[:, 0], blocks[:, 1]
    psum = pa[bi, :] + qb[:, bj].T
    match = (psum >= -2) & (psum <= 0)
    counts = match.sum(axis=1)
    assert counts.min(initial=1) >= 1, "assigned block without a covered candidate"
    g_idx, bk_idx = np.nonzero(match)
    vals = _min_blocks(a_r, b_r, l, bi[g_idx], bk_idx, bj[g_idx], counts)
    if counters is not None:
        counters.poly_degree_ops += len(bk_idx) * l ** 3
    return vals


# ---------------------------------------------------------------------------
# driver


def basic_minplus(a: BDMatrix, b: BDMatrix, params: AlgoParams, counters: Counters | None = None) -> Matrix:
    """Exact min-plus product of two bounded-difference matrices via the
    single-partition blocked randomized algorithm.

    Deterministic for a fixed params.seed; always bitwise equal to the naive
    product because unassigned pairs fall back to candidate enumeration.
    """
    if not isinstance(a, BDMatrix) or not isinstance(b, BDMatrix):
        raise TypeError("basic_minplus expects BDMatrix inputs")
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

    l = params.block_len(n)
    w = 20 * params.delta * l
    cands = candidate_sets(a, b, l)
    partial, remaining = handle_small_candidates(a, b, cands, params.t_beta(n), counters)
    c = partial.data.copy()

    if len(remaining):
        r_cols, needed = sample_r(cands, params)
        if len(needed.missed):
            vals = _enumerate_pairs(ad, bd, l, needed.missed, cands.mask, counters)
            _write_blocks(c, needed.missed, vals, l)
            counters.fallback_pairs += len(needed.missed)
        t_gamma = params.t_gamma(n)
        slot_count = params.slot_count(n)
        span = np.arange(l)
        for r_col in r_cols:
            r_col = int(r_col)
            a_rr = ad - ad[:, r_col : r_col + 1]
            b_rr = bd - bd[r_col : r_col + 1, :]
            seg_a, seg_b, shifts = build_segments(a_rr, b_rr, l, params.delta)
            large_count = int((seg_a.sizes >= t_gamma).sum())
            counters.max_large_slots = max(counters.max_large_slots, large_count)
            for rel, shift in enumerate(shifts):
                rng = derived_rng(params.seed, _PH_ALLOC, r_col, rel)
                alloc = _build_allocation(seg_a, seg_b, seg_a.sizes < t_gamma, shift, slot_count, rng)
                find_collisions(alloc, counters)
            blocks = needed.gamma.get(r_col)
            if blocks is not None and len(blocks):
                vals = _assigned_block_values(a_rr, b_rr, l, w, blocks, counters)
                rows = blocks[:, 0][:, None] * l + span
                cols = blocks[:, 1][:, None] * l + span
                vals = vals + ad[rows, r_col][:, :, None] + bd[r_col, cols][:, None, :]
                _write_blocks(c, blocks, vals, l)
    return Matrix(c)
