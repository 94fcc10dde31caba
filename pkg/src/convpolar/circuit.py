"""Encoding circuits for polar and convolutional polar codes.

A code is an ordered list of CNOT gates over N = 2**n bit lines, built by a
recursive construction: a size-M block applies (for the convolutional family)
a layer of CNOTs from even lines onto the next odd line — with a wrap gate
M -> 1 when the boundary is periodic — then a layer from each odd line onto
the next even line, and finally recurses into two half-size blocks living on
the odd and even lines respectively.  The polar family keeps only the
odd -> even layer.  Gates act input-side first: `encode` applies the list in
order, target ^= control.

Bit lines are 1-based.  Each gate carries the level of the block that created
it (level = log2 of the block size), so size-2 blocks are level 1 and the
outermost block is level n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import gf2

__all__ = ["Gate", "GateList", "build_circuit", "encode", "encoding_matrix"]

FAMILIES = ("polar", "conv")
BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class Gate:
    """One CNOT: target line receives target XOR control."""

    control: int
    target: int
    level: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target must differ")


@dataclass(frozen=True)
class GateList:
    """An encoding circuit: family, boundary, size exponent and ordered gates."""

    family: str
    boundary: str
    n: int
    gates: tuple[Gate, ...]

    @property
    def num_bits(self) -> int:
        return 1 << self.n

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "boundary": self.boundary,
                "n": self.n,
                "gates": [
                    {"level": g.level, "control": g.control, "target": g.target}
                    for g in self.gates
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GateList":
        d = json.loads(text)
        gates = tuple(
            Gate(control=g["control"], target=g["target"], level=g["level"])
            for g in d["gates"]
        )
        return cls(family=d["family"], boundary=d["boundary"], n=d["n"], gates=gates)


def _check(family: str, boundary: str) -> tuple[str, str]:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}")
    if family == "polar":
        boundary = "open"  # the polar construction has no wrap gate to remove
    return family, boundary


def build_circuit(family: str, n: int, boundary: str = "open") -> GateList:
    """Build the recursive encoding circuit on 2**n lines.

    Args:
        family: "polar" or "conv".
        boundary: "open" or "periodic"; ignored for the polar family.  Open
            removes the wrap gate of every block at every level.
        n: number of halving levels; the code has N = 2**n bits (n >= 0).

    Returns:
        GateList in application order (input side first).
    """
    family, boundary = _check(family, boundary)
    if n < 0:
        raise ValueError("n must be >= 0")
    gates: list[Gate] = []
    _block(list(range(1, (1 << n) + 1)), family, boundary == "periodic", gates)
    return GateList(family=family, boundary=boundary, n=n, gates=tuple(gates))


def _block(wires: list[int], family: str, periodic: bool, out: list[Gate]) -> None:
    m = len(wires)
    if m < 2:
        return
    level = m.bit_length() - 1
    if family == "conv":
        for i in range(1, m // 2):  # even local line 2i onto odd local line 2i+1
            out.append(Gate(control=wires[2 * i - 1], target=wires[2 * i], level=level))
        if periodic:
            out.append(Gate(control=wires[m - 1], target=wires[0], level=level))
    for i in range(1, m // 2 + 1):  # odd local line 2i-1 onto even local line 2i
        out.append(Gate(control=wires[2 * i - 2], target=wires[2 * i - 1], level=level))
    _block(wires[0::2], family, periodic, out)
    _block(wires[1::2], family, periodic, out)


def encode(circuit: GateList, bits) -> np.ndarray:
    """Apply the circuit to an input vector (or batch of row vectors).

    Args:
        circuit: the gate list.
        bits: shape (N,) or (B, N) array-like of 0/1 values.

    Returns:
        Codeword(s) with the same shape, dtype uint8.
    """
    x = np.array(bits, dtype=np.uint8, copy=True) % 2
    squeeze = x.ndim == 1
    if squeeze:
        x = x.reshape(1, -1)
    if x.shape[1] != circuit.num_bits:
        raise ValueError(
            f"input length {x.shape[1]} != code length {circuit.num_bits}"
        )
    for g in circuit.gates:
        x[:, g.target - 1] ^= x[:, g.control - 1]
    return x[0] if squeeze else x


def encoding_matrix(circuit: GateList) -> np.ndarray:
    """The N x N GF(2) matrix G with codeword = input . G (row convention)."""
    return encode(circuit, gf2.identity(circuit.num_bits))
