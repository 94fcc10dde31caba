"""Successive-cancellation decoding as tensor-network contraction.

The decoder walks positions from N down to 1.  At each turn it needs the
joint posterior over a short window of adjacent input bits — width 1 for the
polar family, width 3 (clipped at the edges) for the convolutional family —
given that every bit to the right of the window is already decided and every
bit to the left is completely unknown.

The window joint is computed bottom-up over the recursive block structure of
the circuit.  For a block of size M evaluated at window start s, each child
block is evaluated at start s // 2, and the child's window coordinates are
affine GF(2) forms in three kinds of symbols:

  * the parent's window symbols,
  * a small quotient basis (rank <= 2) of undecoded-prefix parities shared
    by the two children, which the parent sums over,
  * parities of already-decided bits, entering as constant index shifts.

Everything value-independent is precomputed once per (family, boundary, n)
into a plan: flat index tables per child, constant-parity position lists and
the per-turn slicing recipe.  The executor then pushes a whole batch of
codewords through the plan with a few numpy gathers per step.

Marginalizing the undecoded prefix uniformly at every level is exact, and
the proof obligation reduces to a dimension count checked at plan time: the
block's wire map is invertible and suffix coordinates carry no window or
prefix dependence, so the prefix-parts of the remaining child coordinates
span the prefix space; they are jointly uniform and independent exactly when
(number of child prefix coordinates) + (quotient rank) equals the number of
prefix bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np

from .circuit import GateList

__all__ = [
    "DecodingFailure",
    "KernelKind",
    "ProbTensor",
    "Schedule",
    "apply_identity",
    "contract_kernel",
    "decode_bit_marginal",
    "sc_decode",
    "sc_decode_batch",
    "sc_genie_marginals",
    "simplify",
    "sweep_contraction_count",
]


class DecodingFailure(Exception):
    """Raised when the evidence is contradictory (an all-zero tensor)."""


class KernelKind(Enum):
    PolarLeft = "PolarLeft"  # 1+1 -> 1, hidden bit summed out (even turn)
    PolarRight = "PolarRight"  # 1+1 -> 1, shifted by a decided bit (odd turn)
    PairCombine = "PairCombine"  # 1+1 -> 2, size-2 block joint
    PairToTripleLeft = "PairToTripleLeft"  # 2+2 -> 3, even start
    PairToTripleRight = "PairToTripleRight"  # 2+2 -> 3, odd start
    TripleLeft = "TripleLeft"  # 3+3 -> 3, even start (two decided bits)
    TripleRight = "TripleRight"  # 3+3 -> 3, odd start (one decided bit)
    BoundaryPair = "BoundaryPair"  # clipped window at either edge, arity 2


@dataclass
class ProbTensor:
    """Joint distribution over 1-3 adjacent bits, flat little-endian values.

    values[i] is the probability of the assignment whose j-th coordinate
    (0-based, ascending position order) equals (i >> j) & 1.
    """

    values: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] not in (2, 4, 8):
            raise ValueError("values must be a flat array of length 2, 4 or 8")
        if np.any(self.values < 0):
            raise ValueError("probabilities must be non-negative")
        if self.normalized:
            s = self.values.sum()
            if not np.isclose(s, 1.0, atol=1e-9):
                raise ValueError(f"normalized tensor sums to {s}")

    @property
    def arity(self) -> int:
        return int(self.values.shape[0]).bit_length() - 1

    @classmethod
    def known_bit(cls, value: int) -> "ProbTensor":
        v = np.zeros(2)
        v[value & 1] = 1.0
        return cls(v)

    @classmethod
    def erased(cls) -> "ProbTensor":
        return cls(np.array([0.5, 0.5]))

    def normalize(self) -> "ProbTensor":
        s = self.values.sum()
        if s <= 0:
            raise DecodingFailure("all-zero tensor: contradictory evidence")
        return ProbTensor(self.values / s)


# ---------------------------------------------------------------------------
# local wire algebra
# ---------------------------------------------------------------------------


def _child_terms(family: str, periodic: bool, M: int, side: int, i: int) -> list[int]:
    """Local input lines whose XOR feeds child `side` (0=odd, 1=even) at i."""
    if family == "polar":
        return [2 * i - 1] if side == 0 else [2 * i, 2 * i - 1]
    if i == 1:
        terms = [1] if side == 0 else [2, 1]
        if periodic:
            terms.append(M)
        return terms
    if side == 0:
        return [2 * i - 1, 2 * i - 2]
    return [2 * i, 2 * i - 1, 2 * i - 2]


def _leaf_output_terms(family: str, periodic: bool) -> list[list[int]]:
    """Input-line parities on the two output wires of a size-2 block."""
    if family == "conv" and periodic:
        return [[1, 2], [1]]
    return [[1], [1, 2]]


def _window(family: str, M: int, s: int) -> list[int]:
    if family == "polar":
        return [s]  # s is the local target position, 1..M
    return list(range(max(s, 1), min(s + 2, M) + 1))


def _child_start(family: str, s: int) -> int:
    return (s + 1) // 2 if family == "polar" else s // 2


def _classify(family: str, M: int, s: int, arity: int, child_arity: int) -> KernelKind:
    if family == "polar":
        return KernelKind.PolarLeft if s % 2 == 0 else KernelKind.PolarRight
    if M == 2:
        return KernelKind.PairCombine
    if arity == 2:
        return KernelKind.BoundaryPair
    if child_arity == 2:
        return (
            KernelKind.PairToTripleLeft if s % 2 == 0 else KernelKind.PairToTripleRight
        )
    return KernelKind.TripleLeft if s % 2 == 0 else KernelKind.TripleRight


# ---------------------------------------------------------------------------
# symbolic machinery
# ---------------------------------------------------------------------------


class _QuotientBasis:
    """Incremental GF(2) basis over prefix bitsets with combination tracking."""

    def __init__(self):
        self.pivots: dict[int, tuple[int, int]] = {}  # pivot bit -> (vec, qmask)
        self.rank = 0

    def reduce(self, vec: int, extend: bool) -> int | None:
        """Express vec over the basis, extending it when allowed.

        Returns the quotient-variable mask, or None when vec lies outside the
        span and extension is disabled.
        """
        q = 0
        while vec:
            h = vec.bit_length() - 1
            if h in self.pivots:
                bvec, bq = self.pivots[h]
                vec ^= bvec
                q ^= bq
            elif extend:
                qbit = 1 << self.rank
                self.pivots[h] = (vec, q ^ qbit)
                self.rank += 1
                return q ^ qbit
            else:
                return None
        return q


def _zone_split(
    terms: list[int], window: list[int], masks: list[int]
) -> tuple[int, int, int]:
    """Split local lines into (window mask, prefix bitset, global const mask).

    Window lines become output coordinates, prefix lines are summed over, and
    suffix lines fold into a constant parity of decided bits.
    """
    lo, hi = window[0], window[-1]
    wmask = pmask = gconst = 0
    for pos in terms:
        if lo <= pos <= hi:
            wmask ^= 1 << window.index(pos)
        elif pos < lo:
            pmask ^= 1 << (pos - 1)
        else:
            gconst ^= masks[pos - 1]
    return wmask, pmask, gconst


# ---------------------------------------------------------------------------
# plan data model
# ---------------------------------------------------------------------------


@dataclass
class _ChildRef:
    step: int  # producing step index, or -1 for a channel-prior leaf
    wire: int  # 1-based codeword position when step == -1
    idx_table: np.ndarray  # (cells,) flat base indices into the child tensor
    const_bits: list[tuple[int, np.ndarray]]  # (coord bit, 0-based positions)
    coords: list[tuple[int, int]]  # per coord: (window mask, quotient mask)
    gmasks: list[int]  # per coord: global bitset of constant positions


@dataclass
class _Step:
    index: int
    node: tuple
    size: int
    start: int
    arity: int
    r: int
    kind: KernelKind
    kept_gates: int
    a: _ChildRef
    b: _ChildRef
    first_turn: int
    last_turn: int


@dataclass
class _Turn:
    t: int
    step: int  # -1 for the trivial N=1 code
    window: tuple[int, ...]  # global positions of the root tensor's window
    tbit: int
    fixed: list[tuple[int, int]]  # (coord bit, 1-based global position)
    marg_combos: np.ndarray  # offsets summed over (undecoded window coords)
    counted: bool  # True when the turn performs an extra marginalization


@dataclass
class _Plan:
    family: str
    boundary: str
    n: int
    steps: list[_Step]
    turns: list[_Turn]  # decode order, t = N .. 1

    @property
    def num_bits(self) -> int:
        return 1 << self.n

    @property
    def contraction_steps(self) -> int:
        return len(self.steps) + sum(1 for t in self.turns if t.counted)


class _Node:
    """Block context: local input masks and physical output wires."""

    def __init__(self, path: tuple, masks: list[int], wires: list[int]):
        self.path = path
        self.masks = masks  # local line -> global-input parity bitset
        self.wires = wires  # local line -> codeword position at the outputs
        self.size = len(masks)
        self._kids: dict[int, "_Node"] = {}

    def child(self, side: int, family: str, periodic: bool) -> "_Node":
        if side not in self._kids:
            M = self.size
            masks = []
            for i in range(1, M // 2 + 1):
                m = 0
                for pos in _child_terms(family, periodic, M, side, i):
                    m ^= self.masks[pos - 1]
                masks.append(m)
            self._kids[side] = _Node(self.path + (side,), masks, self.wires[side::2])
        return self._kids[side]


class _PlanBuilder:
    def __init__(self, family: str, boundary: str, n: int):
        self.family = family
        self.periodic = boundary == "periodic"
        self.n = n
        self.N = 1 << n
        self.steps: list[_Step] = []
        self.memo: dict[tuple, int] = {}
        self.turns: list[_Turn] = []

    # -- constant-mask discipline ---------------------------------------------

    @staticmethod
    def _right_of(gmasks: list[int], hi: int) -> bool:
        """True when every constant position is strictly greater than hi."""
        low = (1 << hi) - 1
        return all((m & low) == 0 for m in gmasks)

    def _window_hi(self, turn: int) -> int:
        return min(turn + 2, self.N) if self.family == "conv" else turn

    # -- step construction ------------------------------------------------------

    def request(self, node: _Node, start: int, turn: int) -> int:
        if node.size == 2 and self.family == "conv":
            start = 0  # both starts see the same {1, 2} window
        key = (node.path, start)
        if key in self.memo:
            idx = self.memo[key]
            st = self.steps[idx]
            st.last_turn = min(st.last_turn, turn)
            return idx
        idx = self._build_step(node, start, turn)
        self.memo[key] = idx
        return idx

    def _build_step(
        self, node: _Node, start: int, turn: int, check_turn: bool = True
    ) -> int:
        M = node.size
        family = self.family
        window = _window(family, M, start)
        arity = len(window)
        basis = _QuotientBasis()
        coords_per_child: list[list[list[int]]] = []

        if M == 2:
            for side in (0, 1):
                terms = _leaf_output_terms(family, self.periodic)[side]
                wm, pm, gc = _zone_split(terms, window, node.masks)
                qm = basis.reduce(pm, extend=True) if pm else 0
                coords_per_child.append([[wm, qm, gc]])
            child_steps = (-1, -1)
            child_wires = (node.wires[0], node.wires[1])
            kind = _classify(family, M, start, arity, 1)
            kept = 2 if (family == "conv" and self.periodic) else 1
        else:
            c = _child_start(family, start)
            cw = _window(family, M // 2, c)
            if family == "conv" and M // 2 == 2:
                cw = [1, 2]
            n_child_prefix = 0
            for side in (0, 1):
                coords = []
                for i in cw:
                    terms = _child_terms(family, self.periodic, M, side, i)
                    wm, pm, gc = _zone_split(terms, window, node.masks)
                    coords.append([wm, pm, gc])
                coords_per_child.append(coords)
                for i in range(1, M // 2 + 1):
                    if i in cw:
                        continue
                    terms = _child_terms(family, self.periodic, M, side, i)
                    wm, pm, gc = _zone_split(terms, window, node.masks)
                    if i > cw[-1]:
                        if wm or pm:
                            raise RuntimeError(
                                "suffix coordinate depends on window/prefix at "
                                f"block={node.path} M={M} start={start} side={side} i={i}"
                            )
                    else:
                        n_child_prefix += 1
            for coords in coords_per_child:
                for entry in coords:
                    entry[1] = basis.reduce(entry[1], extend=True) if entry[1] else 0
            if n_child_prefix + basis.rank != window[0] - 1:
                raise RuntimeError(
                    f"prefix dimension mismatch at block={node.path} M={M} "
                    f"start={start}: {n_child_prefix} + {basis.rank} != {window[0] - 1}"
                )
            kidA = node.child(0, family, self.periodic)
            kidB = node.child(1, family, self.periodic)
            child_steps = (
                self.request(kidA, c, turn),
                self.request(kidB, c, turn),
            )
            child_wires = (0, 0)
            kind = _classify(family, M, start, arity, self.steps[child_steps[0]].arity)
            kept = self._kept_gates(node, start, window, cw, basis)

        r = basis.rank
        if r > 2:
            raise RuntimeError(f"quotient rank {r} > 2 at block={node.path}")
        refs = [
            self._make_ref(child_steps[side], child_wires[side], coords, arity, r)
            for side, coords in enumerate(coords_per_child)
        ]
        gm = [g for ref in refs for g in ref.gmasks]
        if check_turn and not self._right_of(gm, self._window_hi(turn)):
            raise RuntimeError(
                f"constant not right of the window at block={node.path} "
                f"M={M} start={start} (turn {turn})"
            )
        idx = len(self.steps)
        self.steps.append(
            _Step(
                index=idx,
                node=node.path,
                size=M,
                start=start,
                arity=arity,
                r=r,
                kind=kind,
                kept_gates=kept,
                a=refs[0],
                b=refs[1],
                first_turn=turn,
                last_turn=turn,
            )
        )
        return idx

    def _make_ref(
        self, step: int, wire: int, coords: list[list[int]], arity: int, r: int
    ) -> _ChildRef:
        cells = 1 << (arity + r)
        wlim = (1 << arity) - 1
        table = np.zeros(cells, dtype=np.intp)
        for cell in range(cells):
            wcell, qcell = cell & wlim, cell >> arity
            flat = 0
            for j, (wm, qm, _) in enumerate(coords):
                bit = (bin(wm & wcell).count("1") + bin(qm & qcell).count("1")) & 1
                flat |= bit << j
            table[cell] = flat
        const_bits = []
        gmasks = []
        for j, (_, _, gc) in enumerate(coords):
            gmasks.append(gc)
            if gc:
                positions = np.array(
                    [p for p in range(self.N) if (gc >> p) & 1], dtype=np.intp
                )
                const_bits.append((j, positions))
        return _ChildRef(
            step=step,
            wire=wire,
            idx_table=table,
            const_bits=const_bits,
            coords=[(wm, qm) for wm, qm, _ in coords],
            gmasks=gmasks,
        )

    # -- gate-elimination bookkeeping -------------------------------------------

    def _kept_gates(
        self,
        node: _Node,
        start: int,
        window: list[int],
        cw: list[int],
        basis: _QuotientBasis,
    ) -> int:
        """Gates of this block surviving the window reduction: the target must
        feed a child-window coordinate and the control must be non-constant
        with its prefix part inside the retained span."""
        M = node.size
        family = self.family
        gates: list[tuple[list[int], int]] = []
        if family == "conv":
            for i in range(1, M // 2):
                gates.append(([2 * i], 2 * i + 1))
            if self.periodic:
                gates.append(([M], 1))
        for i in range(1, M // 2 + 1):
            ctrl = (
                [2 * i - 1]
                if family == "polar"
                else _child_terms(family, self.periodic, M, 0, i)
            )
            gates.append((ctrl, 2 * i))
        kept = 0
        for ctrl, tgt in gates:
            pos = (tgt + 1) // 2 if tgt % 2 else tgt // 2
            if pos not in cw:
                continue
            wm, pm, _ = _zone_split(ctrl, window, node.masks)
            if wm or (pm and basis.reduce(pm, extend=False) is not None):
                kept += 1
        return kept

    # -- full decode sweep --------------------------------------------------------

    def build(self) -> _Plan:
        N = self.N
        if self.n == 0:
            self.turns.append(
                _Turn(1, -1, (1,), 0, [], np.zeros(1, dtype=np.intp), False)
            )
            return self._finish()
        root = _Node((), [1 << i for i in range(N)], list(range(1, N + 1)))
        for t in range(N, 0, -1):
            if self.family == "polar":
                s = t
            elif N == 2:
                s = 0
            else:
                s = min(t, N - 2)
            idx = self.request(root, s, t)
            window = _window(self.family, N, self.steps[idx].start)
            tbit = window.index(t)
            fixed = [(j, window[j]) for j in range(tbit + 1, len(window))]
            self.turns.append(
                _Turn(
                    t=t,
                    step=idx,
                    window=tuple(window),
                    tbit=tbit,
                    fixed=fixed,
                    marg_combos=np.arange(1 << tbit, dtype=np.intp),
                    counted=tbit > 0,
                )
            )
        return self._finish()

    def _finish(self) -> _Plan:
        return _Plan(
            family=self.family,
            boundary="periodic" if self.periodic else "open",
            n=self.n,
            steps=self.steps,
            turns=self.turns,
        )


_PLAN_CACHE: dict[tuple, _Plan] = {}


def _get_plan(circuit: GateList) -> _Plan:
    key = (circuit.family, circuit.boundary, circuit.n)
    if key not in _PLAN_CACHE:
        _PLAN_CACHE[key] = _PlanBuilder(
            circuit.family, circuit.boundary, circuit.n
        ).build()
    return _PLAN_CACHE[key]


# ---------------------------------------------------------------------------
# executor
# ---------------------------------------------------------------------------


def _child_values(
    ref: _ChildRef, slots: list, priors: np.ndarray, assign: np.ndarray
) -> np.ndarray:
    tensor = slots[ref.step] if ref.step >= 0 else priors[:, ref.wire - 1, :]
    B = tensor.shape[0]
    if ref.const_bits:
        shift = np.zeros(B, dtype=np.intp)
        for j, positions in ref.const_bits:
            bits = assign[:, positions[0]].astype(np.intp)
            for p in positions[1:]:
                bits = bits ^ assign[:, p]
            shift |= bits << j
        idx = ref.idx_table[None, :] ^ shift[:, None]
    else:
        idx = np.broadcast_to(ref.idx_table[None, :], (B, ref.idx_table.shape[0]))
    return np.take_along_axis(tensor, idx, axis=1)


def _exec_step(step: _Step, slots: list, priors: np.ndarray, assign: np.ndarray):
    prod = _child_values(step.a, slots, priors, assign) * _child_values(
        step.b, slots, priors, assign
    )
    B = prod.shape[0]
    out = prod.reshape(B, 1 << step.r, 1 << step.arity).sum(axis=1)
    # sequential accumulation so the compiled executor is bit-identical
    total = out[:, :1].copy()
    for j in range(1, out.shape[1]):
        total += out[:, j : j + 1]
    if np.any(total == 0):
        raise DecodingFailure(
            f"contradictory evidence in block {step.node or ('root',)} "
            f"(window start {step.start})"
        )
    slots[step.index] = out / total


def _turn_marginal(
    turn: _Turn, slots: list, priors: np.ndarray, decided: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized posterior mass for the turn's target bit, per trial."""
    if turn.step < 0:  # N = 1: the prior is the answer
        return priors[:, 0, 0].copy(), priors[:, 0, 1].copy()
    tensor = slots[turn.step]
    B = tensor.shape[0]
    base = np.zeros(B, dtype=np.intp)
    for bit, pos in turn.fixed:
        base |= decided[:, pos - 1].astype(np.intp) << bit
    rows = np.arange(B)
    out = []
    for v in (0, 1):
        idx = base | (v << turn.tbit)
        acc = np.zeros(B)
        for off in turn.marg_combos:
            acc += tensor[rows, idx | int(off)]
        out.append(acc)
    return out[0], out[1]


def _exec_pending(plan: _Plan, root: int, done: np.ndarray, slots, priors, assign):
    stack = [root]
    order: list[int] = []
    while stack:
        i = stack.pop()
        if done[i]:
            continue
        st = plan.steps[i]
        pending = [c.step for c in (st.a, st.b) if c.step >= 0 and not done[c.step]]
        if pending:
            stack.append(i)
            stack.extend(pending)
        else:
            done[i] = True
            order.append(i)
    for i in order:
        _exec_step(plan.steps[i], slots, priors, assign)


def _decode_batch_reference(
    circuit: GateList,
    priors: np.ndarray,
    frozen_values: dict[int, int] | None = None,
    collect_ties: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Pure-numpy batch decode; the slow twin of sc_decode_batch.

    Kept as an independent executor over the same plan so the compiled path
    has an in-package cross-check.
    """
    plan = _get_plan(circuit)
    N = plan.num_bits
    priors = np.asarray(priors, dtype=np.float64)
    if priors.ndim != 3 or priors.shape[1:] != (N, 2):
        raise ValueError(f"priors must have shape (B, {N}, 2)")
    B = priors.shape[0]
    frozen_values = frozen_values or {}
    xhat = np.zeros((B, N), dtype=np.uint8)
    ties = np.zeros((B, N), dtype=bool) if collect_ties else None
    slots: list = [None] * len(plan.steps)
    done = np.zeros(len(plan.steps), dtype=bool)
    for turn in plan.turns:
        if turn.step >= 0:
            _exec_pending(plan, turn.step, done, slots, priors, xhat)
        p0, p1 = _turn_marginal(turn, slots, priors, xhat)
        if np.any(p0 + p1 == 0):
            raise DecodingFailure(f"contradictory evidence at position {turn.t}")
        if collect_ties:
            ties[:, turn.t - 1] = p0 == p1
        if turn.t in frozen_values:
            xhat[:, turn.t - 1] = frozen_values[turn.t] & 1
        else:
            xhat[:, turn.t - 1] = (p1 > p0).astype(np.uint8)
    return xhat, ties


# ---------------------------------------------------------------------------
# compiled tape executor
#
# The plan is value-independent, so the whole sweep flattens into integer
# arrays ("the tape"): per step the slot offsets, gather tables and
# constant-parity recipes; per turn the list of newly required steps and the
# root-tensor slicing. A numba kernel then runs one trial at a time over a
# reused scratch slab, which keeps the per-step cost at a few dozen machine
# ops instead of a few dozen numpy calls.
# ---------------------------------------------------------------------------


@dataclass
class _Tape:
    slab_w: int
    num_words: int  # uint64 words holding the packed decided vector
    st_out: np.ndarray  # (S,) slab offset of each step's output
    st_r: np.ndarray  # (S,) quotient rank
    st_arity: np.ndarray  # (S,) output arity
    ch_leaf: np.ndarray  # (2, S) 1 if the operand is a channel prior
    ch_off: np.ndarray  # (2, S) slab offset, or 0-based wire for leaves
    ch_tab: np.ndarray  # (2, S) offset into idx_pool
    ch_cg_off: np.ndarray  # (2, S) first const group
    ch_cg_cnt: np.ndarray  # (2, S) number of const groups
    idx_pool: np.ndarray
    cg_jbit: np.ndarray  # per group: coordinate bit the parity lands on
    cg_w_off: np.ndarray  # per group: offset into cg_wpool
    cg_w_lo: np.ndarray  # per group: first packed word the mask touches
    cg_w_cnt: np.ndarray  # per group: packed word count
    cg_wpool: np.ndarray  # uint64 mask words, concatenated
    tn_step: np.ndarray  # (N,) root step per turn, -1 for the N=1 code
    tn_tbit: np.ndarray
    tn_exec_off: np.ndarray
    tn_exec_cnt: np.ndarray
    exec_pool: np.ndarray  # step indices, children before parents
    tn_fix_off: np.ndarray
    tn_fix_cnt: np.ndarray
    fix_bit: np.ndarray
    fix_pos: np.ndarray  # 0-based decided window coordinates


def _pack_positions(positions: np.ndarray, num_words: int) -> tuple[int, np.ndarray]:
    """Pack a 0-based position set into (first word, little-endian words)."""
    words = np.zeros(num_words, dtype=np.uint64)
    for p in positions:
        words[p >> 6] |= np.uint64(1) << np.uint64(p & 63)
    nz = np.nonzero(words)[0]
    return int(nz[0]), words[nz[0] : nz[-1] + 1]


def _build_tape(plan: _Plan) -> _Tape:
    S = len(plan.steps)
    num_words = (plan.num_bits + 63) >> 6
    st_out = np.zeros(S, dtype=np.int64)
    st_r = np.zeros(S, dtype=np.int64)
    st_arity = np.zeros(S, dtype=np.int64)
    ch_leaf = np.zeros((2, S), dtype=np.int64)
    ch_off = np.zeros((2, S), dtype=np.int64)
    ch_tab = np.zeros((2, S), dtype=np.int64)
    ch_cg_off = np.zeros((2, S), dtype=np.int64)
    ch_cg_cnt = np.zeros((2, S), dtype=np.int64)
    idx_pool: list[np.ndarray] = []
    idx_off = 0
    cg_jbit: list[int] = []
    cg_w_off: list[int] = []
    cg_w_lo: list[int] = []
    cg_w_cnt: list[int] = []
    cg_wpool: list[np.ndarray] = []
    wpool_off = 0
    slab_w = 0
    for st in plan.steps:
        i = st.index
        st_out[i] = slab_w
        slab_w += 1 << st.arity
        st_r[i] = st.r
        st_arity[i] = st.arity
        for side, ref in enumerate((st.a, st.b)):
            if ref.step < 0:
                ch_leaf[side, i] = 1
                ch_off[side, i] = ref.wire - 1
            else:
                ch_off[side, i] = st_out[ref.step]
            ch_tab[side, i] = idx_off
            idx_pool.append(ref.idx_table)
            idx_off += ref.idx_table.shape[0]
            ch_cg_off[side, i] = len(cg_jbit)
            ch_cg_cnt[side, i] = len(ref.const_bits)
            for j, positions in ref.const_bits:
                lo, words = _pack_positions(positions, num_words)
                cg_jbit.append(j)
                cg_w_off.append(wpool_off)
                cg_w_lo.append(lo)
                cg_w_cnt.append(words.shape[0])
                cg_wpool.append(words)
                wpool_off += words.shape[0]
    # replay the lazy scheduler once to fix each turn's execution list
    done = np.zeros(S, dtype=bool)
    exec_pool: list[int] = []
    tn_exec_off = np.zeros(len(plan.turns), dtype=np.int64)
    tn_exec_cnt = np.zeros(len(plan.turns), dtype=np.int64)
    tn_step = np.zeros(len(plan.turns), dtype=np.int64)
    tn_tbit = np.zeros(len(plan.turns), dtype=np.int64)
    tn_fix_off = np.zeros(len(plan.turns), dtype=np.int64)
    tn_fix_cnt = np.zeros(len(plan.turns), dtype=np.int64)
    fix_bit: list[int] = []
    fix_pos: list[int] = []
    for k, turn in enumerate(plan.turns):
        tn_step[k] = turn.step
        tn_tbit[k] = turn.tbit
        tn_exec_off[k] = len(exec_pool)
        if turn.step >= 0:
            stack = [turn.step]
            order: list[int] = []
            while stack:
                i = stack.pop()
                if done[i]:
                    continue
                st = plan.steps[i]
                pending = [
                    c.step for c in (st.a, st.b) if c.step >= 0 and not done[c.step]
                ]
                if pending:
                    stack.append(i)
                    stack.extend(pending)
                else:
                    done[i] = True
                    order.append(i)
            exec_pool.extend(order)
        tn_exec_cnt[k] = len(exec_pool) - tn_exec_off[k]
        tn_fix_off[k] = len(fix_bit)
        for bit, pos in turn.fixed:
            fix_bit.append(bit)
            fix_pos.append(pos - 1)
        tn_fix_cnt[k] = len(fix_bit) - tn_fix_off[k]
    return _Tape(
        slab_w=slab_w,
        num_words=num_words,
        st_out=st_out,
        st_r=st_r,
        st_arity=st_arity,
        ch_leaf=ch_leaf,
        ch_off=ch_off,
        ch_tab=ch_tab,
        ch_cg_off=ch_cg_off,
        ch_cg_cnt=ch_cg_cnt,
        idx_pool=(
            np.concatenate(idx_pool).astype(np.int64)
            if idx_pool
            else np.zeros(0, dtype=np.int64)
        ),
        cg_jbit=np.array(cg_jbit, dtype=np.int64),
        cg_w_off=np.array(cg_w_off, dtype=np.int64),
        cg_w_lo=np.array(cg_w_lo, dtype=np.int64),
        cg_w_cnt=np.array(cg_w_cnt, dtype=np.int64),
        cg_wpool=(
            np.concatenate(cg_wpool)
            if cg_wpool
            else np.zeros(0, dtype=np.uint64)
        ),
        tn_step=tn_step,
        tn_tbit=tn_tbit,
        tn_exec_off=tn_exec_off,
        tn_exec_cnt=tn_exec_cnt,
        exec_pool=np.array(exec_pool, dtype=np.int64),
        tn_fix_off=tn_fix_off,
        tn_fix_cnt=tn_fix_cnt,
        fix_bit=np.array(fix_bit, dtype=np.int64),
        fix_pos=np.array(fix_pos, dtype=np.int64),
    )


_TAPE_CACHE: dict[tuple, _Tape] = {}


def _get_tape(circuit: GateList) -> _Tape:
    key = (circuit.family, circuit.boundary, circuit.n)
    if key not in _TAPE_CACHE:
        _TAPE_CACHE[key] = _build_tape(_get_plan(circuit))
    return _TAPE_CACHE[key]


@numba.njit(nogil=True, cache=True)
def _sweep_kernel(
    priors,
    frozen,
    tie_bits,
    dead_uniform,
    xhat,
    ties,
    margs,
    fail,
    slab,
    xw,
    st_out,
    st_r,
    st_arity,
    ch_leaf,
    ch_off,
    ch_tab,
    ch_cg_off,
    ch_cg_cnt,
    idx_pool,
    cg_jbit,
    cg_w_off,
    cg_w_lo,
    cg_w_cnt,
    cg_wpool,
    tn_step,
    tn_tbit,
    tn_exec_off,
    tn_exec_cnt,
    exec_pool,
    tn_fix_off,
    tn_fix_cnt,
    fix_bit,
    fix_pos,
):  # pragma: no cover - exercised via sc_decode_batch
    B, N = xhat.shape
    for b in range(B):
        xh = xhat[b]
        for w in range(xw.shape[0]):
            xw[w] = np.uint64(0)
        alive = True
        for k in range(N):
            t = N - k
            if not alive:
                break
            for e in range(tn_exec_off[k], tn_exec_off[k] + tn_exec_cnt[k]):
                s = exec_pool[e]
                arity = st_arity[s]
                ow = 1 << arity
                nq = 1 << st_r[s]
                out_off = st_out[s]
                # constant-parity index shifts for both operands
                ash = 0
                for g in range(ch_cg_off[0, s], ch_cg_off[0, s] + ch_cg_cnt[0, s]):
                    acc = np.uint64(0)
                    o, lo = cg_w_off[g], cg_w_lo[g]
                    for w in range(cg_w_cnt[g]):
                        acc ^= xw[lo + w] & cg_wpool[o + w]
                    acc ^= acc >> np.uint64(32)
                    acc ^= acc >> np.uint64(16)
                    acc ^= acc >> np.uint64(8)
                    acc ^= acc >> np.uint64(4)
                    acc ^= acc >> np.uint64(2)
                    acc ^= acc >> np.uint64(1)
                    ash |= int(acc & np.uint64(1)) << cg_jbit[g]
                bsh = 0
                for g in range(ch_cg_off[1, s], ch_cg_off[1, s] + ch_cg_cnt[1, s]):
                    acc = np.uint64(0)
                    o, lo = cg_w_off[g], cg_w_lo[g]
                    for w in range(cg_w_cnt[g]):
                        acc ^= xw[lo + w] & cg_wpool[o + w]
                    acc ^= acc >> np.uint64(32)
                    acc ^= acc >> np.uint64(16)
                    acc ^= acc >> np.uint64(8)
                    acc ^= acc >> np.uint64(4)
                    acc ^= acc >> np.uint64(2)
                    acc ^= acc >> np.uint64(1)
                    bsh |= int(acc & np.uint64(1)) << cg_jbit[g]
                a_tab = ch_tab[0, s]
                b_tab = ch_tab[1, s]
                a_off = ch_off[0, s]
                b_off = ch_off[1, s]
                tot = 0.0
                if ch_leaf[0, s]:  # size-2 block: both operands are priors
                    for j in range(ow):
                        acc_f = 0.0
                        for q in range(nq):
                            cell = (q << arity) | j
                            ia = idx_pool[a_tab + cell] ^ ash
                            ib = idx_pool[b_tab + cell] ^ bsh
                            acc_f += priors[b, a_off, ia] * priors[b, b_off, ib]
                        slab[out_off + j] = acc_f
                        tot += acc_f
                else:
                    for j in range(ow):
                        acc_f = 0.0
                        for q in range(nq):
                            cell = (q << arity) | j
                            ia = idx_pool[a_tab + cell] ^ ash
                            ib = idx_pool[b_tab + cell] ^ bsh
                            acc_f += slab[a_off + ia] * slab[b_off + ib]
                        slab[out_off + j] = acc_f
                        tot += acc_f
                if tot == 0.0:
                    if not dead_uniform:
                        fail[b] = t
                        alive = False
                        break
                    for j in range(ow):
                        slab[out_off + j] = 1.0 / ow
                else:
                    for j in range(ow):
                        slab[out_off + j] /= tot
            if not alive:
                break
            # slice the root tensor down to the turn's target bit
            if tn_step[k] < 0:
                p0 = priors[b, 0, 0]
                p1 = priors[b, 0, 1]
            else:
                off = st_out[tn_step[k]]
                base = 0
                for f in range(tn_fix_off[k], tn_fix_off[k] + tn_fix_cnt[k]):
                    base |= xh[fix_pos[f]] << fix_bit[f]
                tb = tn_tbit[k]
                p0 = 0.0
                p1 = 0.0
                for m in range(1 << tb):
                    p0 += slab[off + (base | m)]
                    p1 += slab[off + (base | (1 << tb) | m)]
            if p0 + p1 == 0.0:
                if not dead_uniform:
                    fail[b] = t
                    break
                p0 = 0.5
                p1 = 0.5
            margs[b, t - 1] = p1 / (p0 + p1)
            ties[b, t - 1] = p0 == p1
            if frozen[t - 1] >= 0:
                xh[t - 1] = frozen[t - 1]
            elif p1 > p0:
                xh[t - 1] = 1
            elif p1 == p0:
                xh[t - 1] = tie_bits[b, t - 1]
            else:
                xh[t - 1] = 0
            if xh[t - 1]:
                xw[(t - 1) >> 6] |= np.uint64(1) << np.uint64((t - 1) & 63)


def _frozen_array(N: int, frozen_values) -> np.ndarray:
    """Normalize a frozen-bit spec to (N,) int8 with -1 marking data bits."""
    arr = np.full(N, -1, dtype=np.int8)
    if frozen_values is None:
        return arr
    if isinstance(frozen_values, dict):
        for k, v in frozen_values.items():
            arr[int(k) - 1] = int(v) & 1
    elif isinstance(frozen_values, (set, frozenset)):
        for k in frozen_values:
            arr[int(k) - 1] = 0
    else:
        src = np.asarray(frozen_values)
        if src.shape != (N,):
            raise ValueError(f"frozen array must have shape ({N},)")
        arr[:] = src
    return arr


def _run_sweep(
    circuit: GateList,
    priors: np.ndarray,
    frozen: np.ndarray,
    tie_bits=None,
    dead_uniform: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One tape sweep per row; returns (xhat, ties, per-turn P(x_t = 1))."""
    plan = _get_plan(circuit)
    N = plan.num_bits
    priors = np.ascontiguousarray(priors, dtype=np.float64)
    if priors.ndim != 3 or priors.shape[1:] != (N, 2):
        raise ValueError(f"priors must have shape (B, {N}, 2)")
    tape = _get_tape(circuit)
    B = priors.shape[0]
    if tie_bits is None:
        tie_bits = np.zeros((B, N), dtype=np.uint8)
    else:
        tie_bits = np.ascontiguousarray(tie_bits, dtype=np.uint8)
        if tie_bits.shape != (B, N):
            raise ValueError(f"tie_bits must have shape ({B}, {N})")
    xhat = np.zeros((B, N), dtype=np.uint8)
    ties = np.zeros((B, N), dtype=np.uint8)
    margs = np.zeros((B, N), dtype=np.float64)
    fail = np.zeros(B, dtype=np.int64)
    slab = np.empty(max(tape.slab_w, 1), dtype=np.float64)
    xw = np.empty(tape.num_words, dtype=np.uint64)
    _sweep_kernel(
        priors,
        frozen,
        tie_bits,
        np.uint8(dead_uniform),
        xhat,
        ties,
        margs,
        fail,
        slab,
        xw,
        tape.st_out,
        tape.st_r,
        tape.st_arity,
        tape.ch_leaf,
        tape.ch_off,
        tape.ch_tab,
        tape.ch_cg_off,
        tape.ch_cg_cnt,
        tape.idx_pool,
        tape.cg_jbit,
        tape.cg_w_off,
        tape.cg_w_lo,
        tape.cg_w_cnt,
        tape.cg_wpool,
        tape.tn_step,
        tape.tn_tbit,
        tape.tn_exec_off,
        tape.tn_exec_cnt,
        tape.exec_pool,
        tape.tn_fix_off,
        tape.tn_fix_cnt,
        tape.fix_bit,
        tape.fix_pos,
    )
    if np.any(fail):
        t = int(fail[fail > 0][0])
        raise DecodingFailure(f"contradictory evidence at position {t}")
    return xhat, ties, margs


def sc_decode_batch(
    circuit: GateList,
    priors: np.ndarray,
    frozen_values=None,
    collect_ties: bool = False,
    tie_bits=None,
    on_dead_end: str = "raise",
) -> tuple[np.ndarray, np.ndarray | None]:
    """Decode a batch of codewords in one pass.

    Args:
        circuit: the code.
        priors: (B, N, 2) per-position posteriors from the channel.
        frozen_values: 1-based position -> forced bit value (dict), a set of
            positions frozen to 0, or an (N,) int array with -1 for data bits.
        collect_ties: also report which decisions were exact ties.
        tie_bits: (B, N) bits deciding exact posterior ties at data
            positions (row b, column t-1 resolves position t).  Omitted:
            ties decode to 0.
        on_dead_end: what to do when pinned decisions contradict hard
            channel evidence and all remaining mass vanishes: "raise"
            DecodingFailure, or "uniform" to continue with an
            uninformative posterior (the frame is already unrecoverable,
            but decoding runs to completion).

    Returns:
        (decoded inputs, shape (B, N) uint8; tie flags or None).
    """
    if on_dead_end not in ("raise", "uniform"):
        raise ValueError('on_dead_end must be "raise" or "uniform"')
    N = _get_plan(circuit).num_bits
    frozen = _frozen_array(N, frozen_values)
    xhat, ties, _ = _run_sweep(
        circuit, priors, frozen, tie_bits, dead_uniform=on_dead_end == "uniform"
    )
    return xhat, (ties.astype(bool) if collect_ties else None)


def sc_genie_marginals(circuit: GateList, priors, values=None) -> np.ndarray:
    """Per-turn posteriors P(x_t = 1) along a forced decoding trajectory.

    Runs the SC sweep with every decision forced: at the turn for position
    t the decoder conditions on the forced values of all later-decoded
    positions and marginalises the not-yet-decoded ones, and the posterior
    it would have used is recorded before the forced value is written.

    Args:
        circuit: the code.
        priors: (B, N, 2) or (N, 2) channel evidence.
        values: (N,) bits to force (the genie trajectory); all-zero when
            omitted.

    Returns:
        (B, N) float64 (or (N,) if priors was unbatched); entry t-1 is
        P(x_t = 1 | evidence, forced values at positions > t).
    """
    N = _get_plan(circuit).num_bits
    priors = np.asarray(priors, dtype=np.float64)
    squeeze = priors.ndim == 2
    if squeeze:
        priors = priors[None, :, :]
    if values is None:
        frozen = np.zeros(N, dtype=np.int8)
    else:
        frozen = np.asarray(values, dtype=np.int8) & 1
        if frozen.shape != (N,):
            raise ValueError(f"values must have shape ({N},)")
    _, _, margs = _run_sweep(circuit, priors, frozen)
    return margs[0] if squeeze else margs


def sc_decode(
    circuit: GateList, priors, frozen: dict[int, int] | set | frozenset | None = None
) -> np.ndarray:
    """Successive-cancellation decode of one codeword.

    Args:
        circuit: the code.
        priors: (N, 2) array-like; priors[i] = (P0, P1) for codeword bit i+1
            given the channel output.
        frozen: positions forced to a value; a set means frozen to 0.

    Returns:
        Decoded input vector, shape (N,), dtype uint8.  An exact tie in a
        data position decodes to 0.
    """
    if frozen is None:
        fv: dict[int, int] = {}
    elif isinstance(frozen, dict):
        fv = {int(k): int(v) & 1 for k, v in frozen.items()}
    else:
        fv = {int(k): 0 for k in frozen}
    priors = np.asarray(priors, dtype=np.float64)[None, :, :]
    xhat, _ = sc_decode_batch(circuit, priors, fv)
    return xhat[0]


def sweep_contraction_count(circuit: GateList) -> int:
    """Distinct contraction steps one full N..1 decode performs, cache-aware.

    Counts every (block, window-start) evaluation once, plus the two extra
    right-edge marginalizations of the convolutional family.
    """
    return _get_plan(circuit).contraction_steps


# ---------------------------------------------------------------------------
# single-window interface: simplify + decode_bit_marginal
# ---------------------------------------------------------------------------


@dataclass
class Schedule:
    """Bottom-up contraction schedule for a single decode window."""

    family: str
    boundary: str
    n: int
    window: tuple[int, ...]
    entries: list[dict]
    kept_gates: int
    root_step: int
    _plan: _Plan = field(repr=False)

    @property
    def contraction_steps(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "boundary": self.boundary,
                "n": self.n,
                "window": list(self.window),
                "kept_gates": self.kept_gates,
                "entries": self.entries,
            }
        )


def _expected_window(family: str, N: int, t: int) -> tuple[int, ...]:
    if family == "polar" or N == 1:
        return (t,)
    return tuple(range(t, min(t + 2, N) + 1))


def _subtree(plan: _Plan, root: int) -> list[int]:
    seen: set[int] = set()
    order: list[int] = []

    def visit(i: int) -> None:
        if i in seen:
            return
        seen.add(i)
        st = plan.steps[i]
        for c in (st.a, st.b):
            if c.step >= 0:
                visit(c.step)
        order.append(i)

    visit(root)
    return order


def simplify(circuit: GateList, window, known=None) -> Schedule:
    """Reduce the network for one decode window to a contraction schedule.

    Args:
        circuit: the code.
        window: target positions — (i,) for polar, (i, ..., min(i+2, N)) for
            the convolutional family.
        known: ignored; the schedule depends only on the window shape, never
            on decided values.  Accepted for call-site symmetry with
            decode_bit_marginal.

    Returns:
        Schedule listing every (block, start) evaluation with its kernel
        kind, cache key and surviving-gate count.
    """
    del known
    plan = _get_plan(circuit)
    N = plan.num_bits
    window = tuple(int(p) for p in window)
    t = window[0] if window else 0
    if not 1 <= t <= N:
        raise ValueError("window out of range")
    expected = _expected_window(circuit.family, N, t)
    if window != expected:
        raise ValueError(f"window {window} invalid here; expected {expected}")
    turn = plan.turns[N - t]
    if turn.step < 0:
        return Schedule(
            circuit.family, circuit.boundary, circuit.n, window, [], 0, -1, plan
        )
    entries = []
    kept = 0
    for i in _subtree(plan, turn.step):
        st = plan.steps[i]
        name = "/".join("ab"[s] for s in st.node) or "root"
        entries.append(
            {
                "kind": st.kind.value,
                "block": name,
                "size": st.size,
                "start": st.start,
                "cache_key": f"{name}@{st.start}",
                "kept_gates": st.kept_gates,
                "operands": [
                    c.step if c.step >= 0 else f"prior:{c.wire}" for c in (st.a, st.b)
                ],
            }
        )
        kept += st.kept_gates
    return Schedule(
        circuit.family,
        circuit.boundary,
        circuit.n,
        window,
        entries,
        kept,
        turn.step,
        plan,
    )


def decode_bit_marginal(schedule: Schedule, priors, known) -> ProbTensor:
    """Exact joint posterior over the window bits.

    Bits right of the window are read from `known`; bits left of it are
    treated as uniformly unknown.

    Args:
        schedule: from simplify().
        priors: (N, 2) per-position channel posteriors.
        known: length-N array-like of bit values; only positions right of the
            window are consulted.

    Returns:
        Normalized ProbTensor over the window positions, ascending.
    """
    plan = schedule._plan
    N = plan.num_bits
    priors = np.asarray(priors, dtype=np.float64)[None, :, :]
    if priors.shape[1:] != (N, 2):
        raise ValueError(f"priors must have shape ({N}, 2)")
    assign = np.zeros((1, N), dtype=np.uint8)
    if known is not None:
        k = np.asarray(known, dtype=np.uint8).reshape(-1) % 2
        assign[0, : k.size] = k
    if schedule.root_step < 0:
        return ProbTensor(priors[0, 0] / priors[0, 0].sum())
    slots: list = [None] * len(plan.steps)
    for i in _subtree(plan, schedule.root_step):
        _exec_step(plan.steps[i], slots, priors, assign)
    st = plan.steps[schedule.root_step]
    tensor = slots[schedule.root_step][0]
    full = _window(plan.family, N, st.start)
    keep = sorted(full.index(p) for p in schedule.window)
    values = np.zeros(1 << len(keep))
    for cell in range(1 << st.arity):
        out = 0
        for jo, j in enumerate(keep):
            out |= ((cell >> j) & 1) << jo
        values[out] += tensor[cell]
    s = values.sum()
    if s <= 0:
        raise DecodingFailure("all-zero window joint")
    return ProbTensor(values / s)


# ---------------------------------------------------------------------------
# standalone kernels and the single-gate identity
# ---------------------------------------------------------------------------


def apply_identity(gate, control_state, target_state):
    """Remove one CNOT when its input states make it redundant.

    States are "e" (uniform and independent) or a known bit 0/1.  Supported
    reductions: both inputs uniform; known control with known target (the
    target picks up the XOR); known control with uniform target.  Anything
    else raises ValueError — the gate has to stay in the network.
    """
    del gate
    if control_state == "e" and target_state == "e":
        return ("e", "e")
    if control_state in (0, 1):
        if target_state in (0, 1):
            return (control_state, control_state ^ target_state)
        if target_state == "e":
            return (control_state, "e")
    raise ValueError("no identity applies; the gate must remain")


# canonical instance per kind: (family, n, window start)
_CANONICAL_KERNEL = {
    KernelKind.PairCombine: ("conv", 1, 0),
    KernelKind.BoundaryPair: ("conv", 3, 0),
    KernelKind.PairToTripleLeft: ("conv", 2, 2),
    KernelKind.PairToTripleRight: ("conv", 2, 1),
    KernelKind.TripleLeft: ("conv", 3, 4),
    KernelKind.TripleRight: ("conv", 3, 3),
    KernelKind.PolarLeft: ("polar", 1, 2),
    KernelKind.PolarRight: ("polar", 1, 1),
}

_KERNEL_CACHE: dict[KernelKind, tuple[_PlanBuilder, int]] = {}


def _canonical_step(kind: KernelKind) -> tuple[_PlanBuilder, _Step]:
    if kind not in _KERNEL_CACHE:
        family, n, start = _CANONICAL_KERNEL[kind]
        builder = _PlanBuilder(family, "open", n)
        N = 1 << n
        root = _Node((), [1 << i for i in range(N)], list(range(1, N + 1)))
        idx = builder._build_step(root, start, max(start, 1), check_turn=False)
        _KERNEL_CACHE[kind] = (builder, idx)
    builder, idx = _KERNEL_CACHE[kind]
    return builder, builder.steps[idx]


def contract_kernel(
    kind: KernelKind, a: ProbTensor, b: ProbTensor, known=()
) -> ProbTensor:
    """Contract a pair of child tensors through one named kernel.

    The wiring is the canonical bulk instance of the kind as the decoder
    builds it (BoundaryPair uses the left edge).  `known` lists the decided
    bits the kernel consumes, ascending in the canonical instance's input
    positions; missing entries default to 0.  Input arities must match the
    kind: 1+1 for the polar kernels and PairCombine, 2+2 for the
    PairToTriple kernels and BoundaryPair, 3+3 for the Triple kernels.
    """
    builder, st = _canonical_step(kind)
    for tensor, ref in ((a, st.a), (b, st.b)):
        want = builder.steps[ref.step].arity if ref.step >= 0 else 1
        if tensor.arity != want:
            raise ValueError(f"{kind.value} expects an arity-{want} input here")
    N = 1 << builder.n
    assign = np.zeros(N, dtype=np.uint8)
    consumed = sorted(
        {int(p) for ref in (st.a, st.b) for _, ps in ref.const_bits for p in ps}
    )
    for i, p in enumerate(consumed):
        if i < len(known):
            assign[p] = known[i] & 1

    def gather(ref: _ChildRef, values: np.ndarray) -> np.ndarray:
        shift = 0
        for j, positions in ref.const_bits:
            bit = 0
            for p in positions:
                bit ^= int(assign[p])
            shift |= bit << j
        return values[ref.idx_table ^ shift]

    prod = gather(st.a, a.values) * gather(st.b, b.values)
    out = prod.reshape(1 << st.r, 1 << st.arity).sum(axis=0)
    s = out.sum()
    if s <= 0:
        raise DecodingFailure("all-zero tensor: contradictory evidence")
    return ProbTensor(out / s)
