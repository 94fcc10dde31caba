"""Exact erasure-channel analysis through a finite knowledge algebra.

On a pure erasure channel the successive-cancellation decoder never handles
soft probabilities: every intermediate posterior is uniform over an affine
subspace of GF(2)^k.  What the decoder "knows" about a k-bit window is
therefore captured completely by the row space of a GF(2) constraint matrix,
and for the 3-bit windows of the convolutional sweep there are exactly 16
such row spaces (1 of rank 0, 7 of rank 1, 7 of rank 2, 1 of rank 3).
Propagating a probability distribution over these classes through the same
contraction plan the decoder uses yields exact per-position failure
probabilities — no sampling, no truncation.

The module provides:

* the 16 canonical knowledge states and ``canonicalize``;
* the two hard-coded reference fusion tables for the 3-bit bulk kernels,
  plus ``kernel_transform``, which re-derives the same maps from the kernel's
  linear coordinate change, and ``verify_tables`` which diffs the two routes;
* ``first_error_probs``: exact P(position j cannot be resolved when all
  later positions are known) for any supported circuit;
* ``polar_erasure_probs``: the closed scalar recursion the algebra collapses
  to on polar circuits, kept as an independent cross-check;
* frozen-set selection, frame-error bounds, and the scaling-exponent fit
  used to compare code families.

Positions follow the codeword order of :mod:`convpolar.circuit` (1-based,
decoded from position N down to 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2 import inv, rref
from .scdecode import KernelKind, _canonical_step, _get_plan

__all__ = [
    "KnowledgeState",
    "STATES",
    "KernelTransform",
    "TRIPLE_LEFT",
    "TRIPLE_RIGHT",
    "canonicalize",
    "kernel_transform",
    "apply_kernel",
    "verify_tables",
    "init_dist",
    "first_error_probs",
    "polar_erasure_probs",
    "fer_bounds",
    "select_frozen_erasure",
    "fit_error_exponent",
]


# ---------------------------------------------------------------------------
# canonical states
# ---------------------------------------------------------------------------
#
# A state is a set of GF(2) rows over the window coordinates; rows are stored
# as bitmasks with bit i <-> coordinate x_{i+1}.  Width 3 is the public
# 16-state algebra; widths 1 and 2 appear internally at clipped windows.

_W3_ROWS = (
    (),                     # s1   nothing known
    (0b001,),               # s2   x1
    (0b010,),               # s3   x2
    (0b100,),               # s4   x3
    (0b011,),               # s5   x1+x2
    (0b101,),               # s6   x1+x3
    (0b110,),               # s7   x2+x3
    (0b111,),               # s8   x1+x2+x3
    (0b001, 0b010),         # s9   {x1, x2}
    (0b001, 0b100),         # s10  {x1, x3}
    (0b010, 0b100),         # s11  {x2, x3}
    (0b001, 0b110),         # s12  {x1, x2+x3}
    (0b101, 0b010),         # s13  {x1+x3, x2}
    (0b011, 0b100),         # s14  {x1+x2, x3}
    (0b101, 0b110),         # s15  {x1+x3, x2+x3}
    (0b001, 0b010, 0b100),  # s16  everything known
)
_W2_ROWS = ((), (0b01,), (0b10,), (0b11,), (0b01, 0b10))
_W1_ROWS = ((), (0b1,))
_REGISTRY = {1: _W1_ROWS, 2: _W2_ROWS, 3: _W3_ROWS}


def _rref_masks(rows: list[int], width: int) -> tuple[int, ...]:
    """Reduced row echelon form of bitmask rows, pivots in column order."""
    rows = [r for r in rows if r]
    kept: list[int] = []
    for col in range(width):
        piv = next((r for r in rows if (r >> col) & 1), None)
        if piv is None:
            continue
        rows = [r ^ piv if (r >> col) & 1 else r for r in rows if r != piv]
        rows = [r for r in rows if r]
        kept.append(piv)
    for i, ri in enumerate(kept):
        pc = (ri & -ri).bit_length() - 1
        for j in range(len(kept)):
            if j != i and (kept[j] >> pc) & 1:
                kept[j] ^= ri
    kept.sort(key=lambda r: r & -r)
    return tuple(kept)


def _mask_to_matrix(rows: tuple[int, ...], width: int) -> np.ndarray:
    mat = np.zeros((len(rows), width), dtype=np.uint8)
    for i, r in enumerate(rows):
        for j in range(width):
            mat[i, j] = (r >> j) & 1
    mat.flags.writeable = False
    return mat


@dataclass(frozen=True)
class KnowledgeState:
    """One of the 16 canonical constraint classes over a 3-bit window.

    ``canonical`` is the reduced-row-echelon constraint matrix (rank x 3,
    zero rows removed): its row space is the set of window parities the
    decoder has pinned down.  ``id`` runs 1..16 in the fixed enumeration
    order (rank, then the pattern of known parities).
    """

    id: int
    canonical: np.ndarray = field(compare=False)

    @property
    def rank(self) -> int:
        return self.canonical.shape[0]

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        terms = [
            "+".join(f"x{j + 1}" for j in range(3) if row[j])
            for row in self.canonical
        ]
        return f"KnowledgeState(s{self.id}: {{{', '.join(terms)}}})"


STATES: tuple[KnowledgeState, ...] = tuple(
    KnowledgeState(i + 1, _mask_to_matrix(rows, 3))
    for i, rows in enumerate(_W3_ROWS)
)

_CLASS_OF: dict[tuple[int, tuple[int, ...]], int] = {}
for _w, _states in _REGISTRY.items():
    for _i, _rows in enumerate(_states):
        _key = (_w, _rref_masks(list(_rows), _w))
        assert _key not in _CLASS_OF
        _CLASS_OF[_key] = _i


def _canon_id(rows: list[int], width: int) -> int:
    """0-based class index of a set of constraint rows."""
    return _CLASS_OF[(width, _rref_masks(rows, width))]


def canonicalize(constraints) -> KnowledgeState:
    """Map any GF(2) constraint matrix over 3 bits to its canonical state.

    Accepts anything array-like with 3 columns (row count is free; redundant
    and zero rows are fine).  An empty matrix means nothing is known.
    """
    arr = np.asarray(constraints, dtype=np.uint8)
    if arr.size == 0:
        return STATES[0]
    arr = np.atleast_2d(arr) & 1
    if arr.shape[1] != 3:
        raise ValueError("constraint matrix needs exactly 3 columns")
    reduced, _rank = rref(arr)
    masks = [int(row[0]) | int(row[1]) << 1 | int(row[2]) << 2 for row in reduced]
    return STATES[_canon_id(masks, 3)]


# ---------------------------------------------------------------------------
# reference fusion tables for the two bulk kernels
# ---------------------------------------------------------------------------
#
# For each ordered pair of 3-bit input states (a, b) the tables give the
# output state of the bulk kernel.  They are hard-coded reference data; the
# same maps are re-derived independently by kernel_transform below, and
# verify_tables() diffs the two.  Stored as {output id: [(a id, b id), ...]}
# because that is the compact way to write them down; _table_array checks
# that the pairs tile all 256 combinations exactly once.

_LEFT_PAIRS = {
    1: [(1, 1), (1, 2), (1, 5), (1, 6), (1, 8), (2, 1), (5, 1), (6, 1), (8, 1)],
    2: [(2, 2), (5, 8), (6, 6), (8, 5)],
    3: [(2, 8), (5, 2), (6, 5), (8, 6)],
    4: [(1, 4), (1, 10), (1, 14), (2, 4), (4, 1), (4, 2), (4, 4), (4, 5),
        (4, 6), (4, 8), (4, 10), (4, 14), (5, 4), (6, 4), (8, 4), (10, 1),
        (10, 4), (14, 1), (14, 4)],
    5: [(1, 7), (1, 12), (1, 15), (2, 7), (3, 1), (3, 2), (3, 5), (3, 6),
        (3, 7), (3, 8), (3, 12), (3, 15), (5, 7), (6, 7), (8, 7), (9, 1),
        (9, 7), (13, 1), (13, 7)],
    6: [(2, 6), (5, 5), (6, 2), (8, 8)],
    7: [(2, 5), (5, 6), (6, 8), (8, 2)],
    8: [(1, 3), (1, 9), (1, 13), (2, 3), (5, 3), (6, 3), (7, 1), (7, 2),
        (7, 3), (7, 5), (7, 6), (7, 8), (7, 9), (7, 13), (8, 3), (12, 1),
        (12, 3), (15, 1), (15, 3)],
    9: [(2, 12), (5, 12), (6, 15), (8, 15), (9, 2), (9, 8), (9, 12), (13, 5),
        (13, 6), (13, 15)],
    10: [(2, 10), (5, 14), (6, 10), (8, 14), (10, 2), (10, 6), (10, 10),
         (14, 5), (14, 8), (14, 14)],
    11: [(2, 14), (5, 10), (6, 14), (8, 10), (10, 5), (10, 8), (10, 14),
         (14, 2), (14, 6), (14, 10)],
    12: [(2, 9), (5, 13), (6, 13), (8, 9), (12, 2), (12, 5), (12, 9), (15, 6),
         (15, 8), (15, 13)],
    13: [(2, 13), (5, 9), (6, 9), (8, 13), (12, 6), (12, 8), (12, 13),
         (15, 2), (15, 5), (15, 9)],
    14: [(1, 11), (1, 16), (2, 11), (3, 3), (3, 4), (3, 9), (3, 10), (3, 11),
         (3, 13), (3, 14), (3, 16), (4, 3), (4, 7), (4, 9), (4, 11), (4, 12),
         (4, 13), (4, 15), (4, 16), (5, 11), (6, 11), (7, 4), (7, 7), (7, 10),
         (7, 11), (7, 12), (7, 14), (7, 15), (7, 16), (8, 11), (9, 3), (9, 4),
         (9, 11), (10, 3), (10, 7), (10, 11), (11, 1), (11, 2), (11, 3),
         (11, 4), (11, 5), (11, 6), (11, 7), (11, 8), (11, 9), (11, 10),
         (11, 11), (11, 12), (11, 13), (11, 14), (11, 15), (11, 16), (12, 4),
         (12, 7), (12, 11), (13, 3), (13, 4), (13, 11), (14, 3), (14, 7),
         (14, 11), (15, 4), (15, 7), (15, 11), (16, 1), (16, 3), (16, 4),
         (16, 7), (16, 11)],
    15: [(2, 15), (5, 15), (6, 12), (8, 12), (9, 5), (9, 6), (9, 15), (13, 2),
         (13, 8), (13, 12)],
    16: [(2, 16), (5, 16), (6, 16), (8, 16), (9, 9), (9, 10), (9, 13),
         (9, 14), (9, 16), (10, 9), (10, 12), (10, 13), (10, 15), (10, 16),
         (12, 10), (12, 12), (12, 14), (12, 15), (12, 16), (13, 9), (13, 10),
         (13, 13), (13, 14), (13, 16), (14, 9), (14, 12), (14, 13), (14, 15),
         (14, 16), (15, 10), (15, 12), (15, 14), (15, 15), (15, 16), (16, 2),
         (16, 5), (16, 6), (16, 8), (16, 9), (16, 10), (16, 12), (16, 13),
         (16, 14), (16, 15), (16, 16)],
}

_RIGHT_PAIRS = {
    1: [(1, 1), (1, 2), (1, 3), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9),
        (1, 12), (1, 13), (1, 15), (2, 1), (2, 2), (2, 3), (2, 6), (2, 7),
        (3, 1), (3, 2), (3, 5), (3, 6), (3, 8), (5, 1), (5, 3), (5, 5),
        (5, 7), (5, 8), (6, 1), (6, 2), (6, 3), (6, 6), (6, 7), (7, 1),
        (7, 2), (7, 5), (7, 6), (7, 8), (8, 1), (8, 3), (8, 5), (8, 7),
        (8, 8), (9, 1), (12, 1), (13, 1), (15, 1)],
    2: [(5, 2), (5, 9), (5, 12), (8, 6), (8, 13), (8, 15), (9, 2), (12, 6),
        (13, 6), (15, 2)],
    3: [(3, 3), (3, 9), (3, 13), (7, 7), (7, 12), (7, 15), (9, 3), (12, 7),
        (13, 3), (15, 7)],
    4: [(3, 7), (3, 12), (3, 15), (7, 3), (7, 9), (7, 13), (9, 7), (12, 3),
        (13, 7), (15, 3)],
    5: [(2, 5), (2, 9), (2, 15), (6, 8), (6, 12), (6, 13), (9, 5), (12, 5),
        (13, 8), (15, 8)],
    6: [(2, 8), (2, 12), (2, 13), (6, 5), (6, 9), (6, 15), (9, 8), (12, 8),
        (13, 5), (15, 5)],
    7: [(1, 4), (1, 10), (1, 11), (1, 14), (1, 16), (2, 4), (2, 10), (2, 11),
        (3, 4), (3, 10), (3, 14), (4, 1), (4, 2), (4, 3), (4, 4), (4, 5),
        (4, 6), (4, 7), (4, 8), (4, 9), (4, 10), (4, 11), (4, 12), (4, 13),
        (4, 14), (4, 15), (4, 16), (5, 4), (5, 11), (5, 14), (6, 4), (6, 10),
        (6, 11), (7, 4), (7, 10), (7, 14), (8, 4), (8, 11), (8, 14), (9, 4),
        (10, 1), (10, 2), (10, 3), (10, 4), (10, 6), (10, 7), (10, 10),
        (10, 11), (11, 1), (11, 2), (11, 4), (11, 5), (11, 6), (11, 8),
        (11, 10), (11, 14), (12, 4), (13, 4), (14, 1), (14, 3), (14, 4),
        (14, 5), (14, 7), (14, 8), (14, 11), (14, 14), (15, 4), (16, 1),
        (16, 4)],
    8: [(5, 6), (5, 13), (5, 15), (8, 2), (8, 9), (8, 12), (9, 6), (12, 2),
        (13, 2), (15, 6)],
    9: [(9, 9), (12, 15), (13, 13), (15, 12)],
    10: [(9, 12), (12, 13), (13, 15), (15, 9)],
    11: [(3, 11), (3, 16), (7, 11), (7, 16), (9, 11), (11, 3), (11, 7),
         (11, 9), (11, 11), (11, 12), (11, 13), (11, 15), (11, 16), (12, 11),
         (13, 11), (15, 11), (16, 3), (16, 7), (16, 11)],
    12: [(5, 10), (5, 16), (8, 10), (8, 16), (9, 10), (12, 10), (13, 10),
         (14, 2), (14, 6), (14, 9), (14, 10), (14, 12), (14, 13), (14, 15),
         (14, 16), (15, 10), (16, 2), (16, 6), (16, 10)],
    13: [(9, 13), (12, 12), (13, 9), (15, 15)],
    14: [(9, 15), (12, 9), (13, 12), (15, 13)],
    15: [(2, 14), (2, 16), (6, 14), (6, 16), (9, 14), (10, 5), (10, 8),
         (10, 9), (10, 12), (10, 13), (10, 14), (10, 15), (10, 16), (12, 14),
         (13, 14), (15, 14), (16, 5), (16, 8), (16, 14)],
    16: [(9, 16), (12, 16), (13, 16), (15, 16), (16, 9), (16, 12), (16, 13),
         (16, 15), (16, 16)],
}


@dataclass(frozen=True)
class KernelTransform:
    """A bulk kernel's full fusion map: output state id per input pair."""

    kernel: KernelKind
    map: np.ndarray = field(compare=False)  # (16, 16), entries 1..16


def _table_array(pairs: dict[int, list[tuple[int, int]]]) -> np.ndarray:
    table = np.zeros((16, 16), dtype=np.uint8)
    filled = 0
    for out, combos in pairs.items():
        for a, b in combos:
            if table[a - 1, b - 1]:
                raise AssertionError(f"duplicate pair ({a},{b})")
            table[a - 1, b - 1] = out
            filled += 1
    if filled != 256:
        raise AssertionError(f"table covers {filled}/256 pairs")
    table.flags.writeable = False
    return table


TRIPLE_LEFT = KernelTransform(KernelKind.TripleLeft, _table_array(_LEFT_PAIRS))
TRIPLE_RIGHT = KernelTransform(KernelKind.TripleRight, _table_array(_RIGHT_PAIRS))


# ---------------------------------------------------------------------------
# kernel maps from the linear coordinate change
# ---------------------------------------------------------------------------
#
# Stack the two 3-bit child windows into x = (a1,a2,a3,b1,b2,b3).  The
# kernel's wiring expresses each child coordinate over the parent-side
# symbols: decided constants, the parent window coords w1..w3, and the
# summed-out quotient coord(s).  That linear relation x = T·y is invertible,
# so y = M·x with M = T^{-1}, and the output columns split
# (known | retained | ignored).  Knowledge then transforms exactly as rows:
# C' = C·M^{-1} = C·T, ignored columns are eliminated (dropping the pivot
# rows), known columns are constants and fall away, and the retained block
# canonicalizes.  An exhaustive search shows no 3-CNOT circuit realizes M
# under any wire labelling, so M is taken from the wiring itself.

_GEOMETRY_CACHE: dict[KernelKind, tuple[tuple[int, ...], int]] = {}


def _kernel_geometry(kind: KernelKind) -> tuple[tuple[int, ...], int]:
    """(rows of M^{-1} as 6-bit masks, number of known output columns)."""
    if kind in _GEOMETRY_CACHE:
        return _GEOMETRY_CACHE[kind]
    builder, st = _canonical_step(kind)
    gmasks: list[int] = []
    qbits: set[int] = set()
    for ref in (st.a, st.b):
        for gm in ref.gmasks:
            if gm and gm not in gmasks:
                gmasks.append(gm)
        for _, qm in ref.coords:
            b = qm
            while b:
                qbits.add((b & -b).bit_length() - 1)
                b &= b - 1
    qlist = sorted(qbits)
    nk, nw = len(gmasks), st.arity
    if nk + nw + len(qlist) != 6:
        raise AssertionError("kernel does not span a 6-bit coordinate change")
    T = np.zeros((6, 6), dtype=np.uint8)
    row = 0
    for ref in (st.a, st.b):
        for c, (wm, qm) in enumerate(ref.coords):
            gm = ref.gmasks[c]
            if gm:
                T[row, gmasks.index(gm)] = 1
            for i in range(nw):
                T[row, nk + i] = (wm >> i) & 1
            for i, qb in enumerate(qlist):
                T[row, nk + nw + i] = (qm >> qb) & 1
            row += 1
    inv(T)  # invertibility check; T itself is M^{-1}
    t_rows = tuple(
        int(sum(int(T[i, j]) << j for j in range(6))) for i in range(6)
    )
    _GEOMETRY_CACHE[kind] = (t_rows, nk)
    return _GEOMETRY_CACHE[kind]


def kernel_transform(
    kernel: KernelKind, a: KnowledgeState, b: KnowledgeState
) -> KnowledgeState:
    """Fuse two 3-bit knowledge states through a bulk kernel.

    Implements the linear-map route directly: block-diagonal constraints,
    right-multiplication by M^{-1}, elimination of the ignored columns,
    and canonicalization of the retained 3-bit block.  Only the two 3-bit
    bulk kernels carry a 6-bit coordinate change; other kernel kinds are
    handled internally by first_error_probs.
    """
    if kernel not in (KernelKind.TripleLeft, KernelKind.TripleRight):
        raise ValueError(f"{kernel.value} is not a 3-bit bulk kernel")
    minv_rows, nk = _kernel_geometry(kernel)
    masks = [int(r) for r in _W3_ROWS[a.id - 1]]
    masks += [int(r) << 3 for r in _W3_ROWS[b.id - 1]]
    rows = []
    for r in masks:
        acc = 0
        while r:
            k = (r & -r).bit_length() - 1
            r &= r - 1
            acc ^= minv_rows[k]
        rows.append(acc)
    for col in range(nk + 3, 6):  # eliminate ignored columns
        piv = next((r for r in rows if (r >> col) & 1), None)
        if piv is None:
            continue
        rows = [r ^ piv if (r >> col) & 1 else r for r in rows if r != piv]
    retained = [(r >> nk) & 0b111 for r in rows]
    return STATES[_canon_id(retained, 3)]


_KERNEL_MAP_CACHE: dict[KernelKind, np.ndarray] = {}


def _kernel_map(kind: KernelKind) -> np.ndarray:
    """(16, 16) fusion map with 1-based ids, derived via kernel_transform."""
    if kind not in _KERNEL_MAP_CACHE:
        table = np.zeros((16, 16), dtype=np.uint8)
        for ia, a in enumerate(STATES):
            for ib, b in enumerate(STATES):
                table[ia, ib] = kernel_transform(kind, a, b).id
        table.flags.writeable = False
        _KERNEL_MAP_CACHE[kind] = table
    return _KERNEL_MAP_CACHE[kind]


def apply_kernel(
    kernel: KernelKind, dist_a: np.ndarray, dist_b: np.ndarray
) -> np.ndarray:
    """Push a pair of 16-state distributions through a bulk kernel.

    Output probability of each state is the sum of dist_a[a]*dist_b[b] over
    the input pairs that fuse to it, so normalization is preserved exactly.
    """
    da = np.asarray(dist_a, dtype=np.float64)
    db = np.asarray(dist_b, dtype=np.float64)
    if da.shape != (16,) or db.shape != (16,):
        raise ValueError("state distributions have shape (16,)")
    table = _kernel_map(kernel)
    out = np.zeros(16)
    np.add.at(out, table.ravel() - 1, np.outer(da, db).ravel())
    return out


def verify_tables(left_map=None, right_map=None) -> dict:
    """Diff the derived kernel maps against the hard-coded reference tables.

    With no arguments, checks the maps produced by kernel_transform; tests
    can inject alternative maps (e.g. a deliberately perturbed wiring) to
    confirm the check actually discriminates.  Returns a report with one
    entry per kernel listing every mismatching (a, b, got, want) quadruple.
    """
    report: dict = {"total_checked": 0, "total_mismatches": 0}
    for name, table, computed in (
        ("left", TRIPLE_LEFT.map, left_map),
        ("right", TRIPLE_RIGHT.map, right_map),
    ):
        if computed is None:
            kind = (
                KernelKind.TripleLeft if name == "left" else KernelKind.TripleRight
            )
            computed = _kernel_map(kind)
        computed = np.asarray(computed)
        if computed.shape != (16, 16):
            raise ValueError("kernel map has shape (16, 16)")
        mism = [
            (ia + 1, ib + 1, int(computed[ia, ib]), int(table[ia, ib]))
            for ia, ib in np.argwhere(computed != table)
        ]
        report[name] = {"checked": 256, "mismatches": mism}
        report["total_checked"] += 256
        report["total_mismatches"] += len(mism)
    return report


# ---------------------------------------------------------------------------
# state distributions
# ---------------------------------------------------------------------------


def init_dist(p: float) -> np.ndarray:
    """Knowledge distribution of three independent channel bits.

    Each bit is erased with probability p, so the state is one of the eight
    axis-aligned classes: nothing (s1), one bit (s2-s4), two bits (s9-s11),
    or all three (s16).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    q = 1.0 - p
    dist = np.zeros(16)
    dist[0] = p**3
    dist[1] = dist[2] = dist[3] = q * p * p
    dist[8] = dist[9] = dist[10] = q * q * p
    dist[15] = q**3
    return dist


# ---------------------------------------------------------------------------
# exact per-position analysis on any supported circuit
# ---------------------------------------------------------------------------
#
# The decoder's contraction plan already records, for every step, how each
# child-window coordinate expands over the parent's window coords, the
# summed-out quotient coords, and decided constants.  Lifting the child
# constraint rows through that relation, eliminating the quotient columns,
# and projecting to the window block is the generic form of the kernel maps
# above — it covers every kernel kind, both boundaries, and the polar
# windows (width 1) in one procedure.

_STEP_TABLE_CACHE: dict[tuple, np.ndarray] = {}
_INDICATOR_CACHE: dict[tuple, np.ndarray] = {}


def _child_width(plan, ref) -> int:
    return plan.steps[ref.step].arity if ref.step >= 0 else 1


def _structure_key(plan, st) -> tuple:
    """Cache key for a step's transition table, invariant to absolute wires."""
    qbits = sorted(
        {b for ref in (st.a, st.b) for _, qm in ref.coords
         for b in _iter_bits(qm)}
    )
    dense = {qb: i for i, qb in enumerate(qbits)}

    def densify(ref):
        out = []
        for wm, qm in ref.coords:
            dq = 0
            for b in _iter_bits(qm):
                dq |= 1 << dense[b]
            out.append((wm, dq))
        return tuple(out)

    return (
        st.arity,
        _child_width(plan, st.a),
        densify(st.a),
        _child_width(plan, st.b),
        densify(st.b),
    )


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _step_table(plan, st) -> np.ndarray:
    """Transition table: class indices of (a, b) -> output class index."""
    key = _structure_key(plan, st)
    if key in _STEP_TABLE_CACHE:
        return _STEP_TABLE_CACHE[key]
    arity, wa, coords_a, wb, coords_b = key
    nq = max(
        (b + 1 for _, qm in coords_a + coords_b for b in _iter_bits(qm)),
        default=0,
    )

    def lift(coords, rowmask, shift=0):
        w = q = 0
        for c in _iter_bits(rowmask):
            wm, qm = coords[c - shift] if shift else coords[c]
            w ^= wm
            q ^= qm
        return w | q << arity

    table = np.empty((len(_REGISTRY[wa]), len(_REGISTRY[wb])), dtype=np.int64)
    for ia, rows_a in enumerate(_REGISTRY[wa]):
        lifted_a = [lift(coords_a, r) for r in rows_a]
        for ib, rows_b in enumerate(_REGISTRY[wb]):
            rows = lifted_a + [lift(coords_b, r) for r in rows_b]
            for col in range(arity, arity + nq):
                piv = next((r for r in rows if (r >> col) & 1), None)
                if piv is None:
                    continue
                rows = [
                    r ^ piv if (r >> col) & 1 else r for r in rows if r != piv
                ]
            table[ia, ib] = _canon_id(
                [r & ((1 << arity) - 1) for r in rows], arity
            )
    _STEP_TABLE_CACHE[key] = table
    return table


def _undetermined_indicator(width: int, tbit: int, fixed: tuple[int, ...]):
    """Per-class indicator: 1 where the target coordinate stays unresolved.

    A class resolves the target when the unit vector e_tbit lies in the span
    of its constraint rows together with the unit vectors of the already
    decided window coordinates.
    """
    key = (width, tbit, fixed)
    if key in _INDICATOR_CACHE:
        return _INDICATOR_CACHE[key]
    target = 1 << tbit
    units = [1 << f for f in fixed]
    out = np.empty(len(_REGISTRY[width]))
    for idx, rows in enumerate(_REGISTRY[width]):
        base = _rref_masks(list(rows) + units, width)
        extended = _rref_masks(list(base) + [target], width)
        out[idx] = 0.0 if len(extended) == len(base) else 1.0
    _INDICATOR_CACHE[key] = out
    return out


def first_error_probs(circuit, erasure_prob: float) -> np.ndarray:
    """Exact P(position j is the first to fail) under erasures.

    For each position j the decoder is assumed to know every later position
    (its own earlier decisions, all correct so far) and nothing about earlier
    ones; the returned p[j-1] is the probability that the channel pattern
    leaves x_j undetermined at that point.  Works for polar and both
    convolutional boundaries; the computation is exact, not sampled.
    """
    if not 0.0 <= erasure_prob <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    plan = _get_plan(circuit)
    leaf = np.array([erasure_prob, 1.0 - erasure_prob])
    dists: list[np.ndarray] = []
    for st in plan.steps:
        table = _step_table(plan, st)
        da = dists[st.a.step] if st.a.step >= 0 else leaf
        db = dists[st.b.step] if st.b.step >= 0 else leaf
        out = np.zeros(len(_REGISTRY[st.arity]))
        np.add.at(out, table.ravel(), np.outer(da, db).ravel())
        dists.append(out)
    probs = np.zeros(plan.num_bits)
    for turn in plan.turns:
        if turn.step < 0:  # the trivial single-wire code
            probs[turn.t - 1] = erasure_prob
            continue
        st = plan.steps[turn.step]
        fixed = tuple(sorted(f for f, _ in turn.fixed))
        ind = _undetermined_indicator(st.arity, turn.tbit, fixed)
        probs[turn.t - 1] = float(dists[turn.step] @ ind)
    return probs


def polar_erasure_probs(n: int, erasure_prob: float) -> np.ndarray:
    """Scalar recursion for polar codes on the erasure channel.

    Each level squares the erasure rate on odd positions and applies
    e -> 2e - e^2 on even ones; first_error_probs collapses to exactly this
    on polar circuits, and the two routes are kept as mutual cross-checks.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0.0 <= erasure_prob <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    e = np.array([erasure_prob])
    for _ in range(n):
        out = np.empty(2 * e.size)
        out[0::2] = e * e
        out[1::2] = 2.0 * e - e * e
        e = out
    return e


# ---------------------------------------------------------------------------
# code construction and reporting helpers
# ---------------------------------------------------------------------------


def fer_bounds(p_j, data_set) -> tuple[float, float]:
    """(lower, upper) bounds on the frame-error rate from per-position p_j.

    A frame fails exactly when some data position is undetermined at its
    turn, so the largest single p_j is a lower bound and their sum (clipped
    to 1) is the union upper bound.
    """
    probs = np.asarray(p_j, dtype=np.float64)
    data = sorted({int(d) for d in data_set})
    if data and not 1 <= data[0] <= data[-1] <= probs.size:
        raise ValueError("data positions must lie in 1..N")
    if not data:
        return 0.0, 0.0
    selected = probs[np.asarray(data) - 1]
    return float(selected.max()), float(min(selected.sum(), 1.0))


def select_frozen_erasure(p_j, k: int) -> set[int]:
    """Freeze all but the k most reliable positions.

    The k positions with the smallest p_j become data (ties resolved toward
    the smaller position index); the complement is returned as the frozen
    set, 1-based.
    """
    probs = np.asarray(p_j, dtype=np.float64)
    if not 0 <= k <= probs.size:
        raise ValueError(f"k must lie in 0..{probs.size}")
    order = np.argsort(probs, kind="stable")
    data = set(int(i) + 1 for i in order[:k])
    return {j for j in range(1, probs.size + 1) if j not in data}


def fit_error_exponent(points) -> tuple[float, float]:
    """Fit Pe = 2^(-gamma * N^beta) through (n, Pe) pairs with N = 2^n.

    Least squares on the linearized form log2(-log2 Pe) = log2(gamma) +
    beta*n; returns (gamma, beta).  Needs at least three points, all with
    Pe strictly inside (0, 1), and at least two distinct n.
    """
    pts = [(int(n), float(pe)) for n, pe in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit")
    if any(not 0.0 < pe < 1.0 for _, pe in pts):
        raise ValueError("every Pe must lie strictly inside (0, 1)")
    ns = np.array([n for n, _ in pts], dtype=np.float64)
    if np.unique(ns).size < 2:
        raise ValueError("degenerate fit: all points share one n")
    ys = np.log2(-np.log2([pe for _, pe in pts]))
    beta, intercept = np.polyfit(ns, ys, 1)
    return float(2.0**intercept), float(beta)
