"""Tests for the recursive CNOT encoding circuits."""

import numpy as np
import pytest

from convpolar import gf2
from convpolar.circuit import Gate, GateList, build_circuit, encode, encoding_matrix

G2 = gf2.asmatrix([[1, 1], [0, 1]])

# Two-block layer structure for eight lines: each even local line feeds the
# following odd line, then each odd line feeds its even partner, with the
# level-3 wrap gate folded in.  Frozen as data; the recursion tests below
# derive the same matrix from first principles.
LAYER8 = gf2.asmatrix(
    [
        [1, 1, 1, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 1, 0, 0, 0],
        [0, 0, 0, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 1, 1, 1, 0],
        [0, 0, 0, 0, 0, 1, 1, 0],
        [1, 0, 0, 0, 0, 0, 1, 1],
        [1, 0, 0, 0, 0, 0, 0, 1],
    ]
)


def cnot_matrix(m, control, target):
    """Matrix of a single CNOT on m lines, 0-based wires, row convention."""
    g = gf2.identity(m)
    g[control, target] = 1
    return g


def gates_to_matrix(circuit):
    """Fold the gate list into a matrix one CNOT at a time."""
    m = gf2.identity(circuit.num_bits)
    for g in circuit.gates:
        m = gf2.mul(m, cnot_matrix(circuit.num_bits, g.control - 1, g.target - 1))
    return m


def test_gate_counts():
    for n in range(1, 8):
        N = 1 << n
        assert len(build_circuit("polar", n).gates) == N * n // 2
        assert len(build_circuit("conv", n, "periodic").gates) == N * n
        assert len(build_circuit("conv", n, "open").gates) == N * n - (N - 1)


def test_polar_n1_single_gate():
    c = build_circuit("polar", 1)
    assert c.gates == (Gate(control=1, target=2, level=1),)


def test_conv_periodic_n4_gate_count():
    assert len(build_circuit("conv", 4, "periodic").gates) == 64


def test_n0_is_trivial():
    for fam in ("polar", "conv"):
        c = build_circuit(fam, 0)
        assert c.gates == ()
        assert np.array_equal(encoding_matrix(c), gf2.identity(1))


def test_encode_examples():
    c1 = build_circuit("polar", 1)
    assert np.array_equal(encode(c1, [1, 0]), [1, 1])
    assert np.array_equal(encode(c1, [0, 0]), [0, 0])
    c2 = build_circuit("polar", 2)
    assert np.array_equal(encode(c2, [0, 1, 0, 0]), [0, 1, 0, 1])


def test_encode_batch_shape():
    c = build_circuit("conv", 3, "periodic")
    x = np.eye(8, dtype=np.uint8)
    y = encode(c, x)
    assert y.shape == (8, 8)
    for i in range(8):
        assert np.array_equal(y[i], encode(c, x[i]))


def test_encode_length_mismatch():
    with pytest.raises(ValueError):
        encode(build_circuit("polar", 2), [1, 0])


def test_bad_family_and_boundary():
    with pytest.raises(ValueError):
        build_circuit("turbo", 3)
    with pytest.raises(ValueError):
        build_circuit("conv", 3, "twisted")
    with pytest.raises(ValueError):
        build_circuit("polar", -1)


def test_polar_matrix_is_kron_power():
    for n in range(0, 7):
        g = gf2.identity(1)
        for _ in range(n):
            g = gf2.kron(g, G2)
        assert np.array_equal(encoding_matrix(build_circuit("polar", n)), g)


def test_polar_matrix_self_inverse():
    for n in range(0, 7):
        g = encoding_matrix(build_circuit("polar", n))
        assert np.array_equal(gf2.mul(g, g), gf2.identity(1 << n))


def test_encoding_matrix_equals_gate_product():
    """encode on basis vectors agrees with multiplying single-CNOT matrices."""
    for fam, bnd in [("polar", "open"), ("conv", "open"), ("conv", "periodic")]:
        for n in range(1, 5):
            c = build_circuit(fam, n, bnd)
            assert np.array_equal(encoding_matrix(c), gates_to_matrix(c))


def test_layer8_factorization():
    """The 8-line two-block layer equals (I4 x G2) . S8 . (I4 x G2) . S8^T."""
    a = gf2.kron(gf2.identity(4), G2)
    s = gf2.cyclic_perm(8)
    prod = gf2.mul(gf2.mul(gf2.mul(a, s), a), s.T)
    assert np.array_equal(prod, LAYER8)


def shifted_layer(m, periodic):
    """Even-onto-odd CNOT layer on m lines; wrap only when periodic."""
    prod = gf2.identity(m)
    for i in range(1, m - 1, 2):
        prod = gf2.mul(prod, cnot_matrix(m, i, i + 1))
    if periodic:
        prod = gf2.mul(prod, cnot_matrix(m, m - 1, 0))
    return prod


@pytest.mark.parametrize("boundary", ["open", "periodic"])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_conv_matrix_recursion(n, boundary):
    """Doubling the code applies both CNOT layers then the half-size code on
    interleaved lines: G_{2M} = shifted . (I x G2) . (G_M x I2)."""
    m = 1 << n
    a = gf2.kron(gf2.identity(m // 2), G2)
    if boundary == "periodic":
        s = gf2.cyclic_perm(m)
        shift = gf2.mul(gf2.mul(s, a), s.T)
    else:
        shift = shifted_layer(m, False)
    half = encoding_matrix(build_circuit("conv", n - 1, boundary))
    rhs = gf2.mul(gf2.mul(shift, a), gf2.kron(half, gf2.identity(2)))
    assert np.array_equal(encoding_matrix(build_circuit("conv", n, boundary)), rhs)


def test_conv_periodic_shifted_layer_is_conjugated():
    """Cyclic conjugation turns the odd-onto-even layer into the even-onto-odd
    layer plus the wrap gate."""
    for m in (4, 8, 16):
        a = gf2.kron(gf2.identity(m // 2), G2)
        s = gf2.cyclic_perm(m)
        assert np.array_equal(gf2.mul(gf2.mul(s, a), s.T), shifted_layer(m, True))


def test_conv_open_matrix_order():
    """Open-boundary conv matrices have multiplicative order exactly N."""
    for n in range(1, 6):
        N = 1 << n
        g = encoding_matrix(build_circuit("conv", n, "open"))
        p = gf2.identity(N)
        for k in range(1, N):
            p = gf2.mul(p, g)
            assert not np.array_equal(p, gf2.identity(N))
        assert np.array_equal(gf2.mul(p, g), gf2.identity(N))


def test_conv_periodic_matrix_order():
    """G^N = I for the periodic family once N >= 4; the N = 2 block closes
    at the third power instead."""
    for n in range(2, 6):
        N = 1 << n
        g = encoding_matrix(build_circuit("conv", n, "periodic"))
        assert np.array_equal(gf2.matpow(g, N), gf2.identity(N))
    g2 = encoding_matrix(build_circuit("conv", 1, "periodic"))
    assert not np.array_equal(gf2.matpow(g2, 2), gf2.identity(2))
    assert np.array_equal(gf2.matpow(g2, 3), gf2.identity(2))


def test_polar_boundary_is_ignored():
    a = build_circuit("polar", 3, "open")
    b = build_circuit("polar", 3, "periodic")
    assert a == b


def test_gate_levels():
    c = build_circuit("conv", 3, "periodic")
    assert {g.level for g in c.gates} == {1, 2, 3}
    # the outermost block contributes exactly N gates when periodic
    assert sum(1 for g in c.gates if g.level == 3) == 8


def test_json_roundtrip():
    for fam, bnd in [("polar", "open"), ("conv", "periodic")]:
        c = build_circuit(fam, 3, bnd)
        assert GateList.from_json(c.to_json()) == c


def test_gate_rejects_self_loop():
    with pytest.raises(ValueError):
        Gate(control=3, target=3, level=1)
