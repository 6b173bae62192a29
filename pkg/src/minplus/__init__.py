"""Exact min-plus matrix products for bounded-difference matrices."""

from .basic import (
    AlgoParams,
    AllocationMap,
    Counters,
    NeededBlocks,
    SegmentTable,
    allocate_small_segments,
    baseline_offset,
    basic_minplus,
    build_segments,
    find_collisions,
    handle_small_candidates,
    process_large_segments,
    process_small_segments,
    sample_r,
    shift_matrices,
    subtract_collisions,
)
from .blocking import BlockGrid, CandidateSets, approx_matrix, candidate_sets, refine_candidates
from .matrix import (
    INF,
    MAX_ENTRY,
    BDMatrix,
    FormatError,
    Matrix,
    generate_bd,
    read_matrix,
    sat_add,
    validate_bd,
    write_matrix,
)
from .oracle import (
    PolyMatrix,
    encode_poly,
    extract_min,
    minplus_naive,
    minplus_small_entries,
    poly_matmul,
)
from .recursive import (
    LevelState,
    SlotTree,
    allocate_recursive,
    allocate_top,
    collisions_exhaustive,
    collisions_incremental,
    finish_tail,
    recursive_minplus,
)

__version__ = "0.1.0"

__all__ = [
    "AlgoParams",
    "AllocationMap",
    "BDMatrix",
    "BlockGrid",
    "CandidateSets",
    "Counters",
    "FormatError",
    "INF",
    "LevelState",
    "MAX_ENTRY",
    "Matrix",
    "NeededBlocks",
    "PolyMatrix",
    "SegmentTable",
    "SlotTree",
    "allocate_recursive",
    "allocate_small_segments",
    "allocate_top",
    "approx_matrix",
    "baseline_offset",
    "basic_minplus",
    "build_segments",
    "candidate_sets",
    "collisions_exhaustive",
    "collisions_incremental",
    "encode_poly",
    "extract_min",
    "find_collisions",
    "finish_tail",
    "generate_bd",
    "handle_small_candidates",
    "minplus_naive",
    "minplus_small_entries",
    "poly_matmul",
    "process_large_segments",
    "process_small_segments",
    "read_matrix",
    "refine_candidates",
    "recursive_minplus",
    "sample_r",
    "sat_add",
    "shift_matrices",
    "subtract_collisions",
    "validate_bd",
    "write_matrix",
]
