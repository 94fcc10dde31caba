"""Tests for dense GF(2) linear algebra."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convpolar import gf2

G2 = gf2.asmatrix([[1, 1], [0, 1]])

# Cyclic translation on 8 elements, written out so the orientation of
# cyclic_perm is pinned to explicit data rather than to another formula.
S8 = gf2.asmatrix(
    [
        [0, 0, 0, 0, 0, 0, 0, 1],
        [1, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 0],
    ]
)


def naive_mul(a, b):
    """Per-bit reference product, no numpy tricks."""
    a = gf2.asmatrix(a)
    b = gf2.asmatrix(b)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0
            for k in range(a.shape[1]):
                acc ^= int(a[i, k]) & int(b[k, j])
            out[i, j] = acc
    return out


def test_rref_single_row_add():
    m, r = gf2.rref([[1, 0, 0], [1, 1, 0]])
    assert r == 2
    assert np.array_equal(m, [[1, 0, 0], [0, 1, 0]])


def test_rref_zero_matrix():
    m, r = gf2.rref([[0, 0, 0]])
    assert r == 0
    assert m.shape == (0, 3)


def test_rref_hand_elimination():
    m, r = gf2.rref([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    assert r == 2
    assert np.array_equal(m, [[1, 0, 1], [0, 1, 1]])


def test_rref_idempotent_exhaustive_3x3():
    for bits in range(512):
        m = gf2.asmatrix([[(bits >> (3 * i + j)) & 1 for j in range(3)] for i in range(3)])
        once, r1 = gf2.rref(m)
        twice, r2 = gf2.rref(once)
        assert r1 == r2
        assert np.array_equal(once, twice)


def test_rref_pivots_strictly_increasing():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = rng.integers(0, 2, (6, 6), dtype=np.uint8)
        red, r = gf2.rref(m)
        assert red.shape[0] == r  # zero rows removed
        pivots = [int(np.argmax(row)) for row in red]
        assert pivots == sorted(set(pivots))
        # pivot columns contain a single 1
        for i, p in enumerate(pivots):
            assert red[:, p].sum() == 1 and red[i, p] == 1


def test_mul_matches_naive_reference():
    rng = np.random.default_rng(5)
    for _ in range(50):
        r, k, c = rng.integers(1, 7, 3)
        a = rng.integers(0, 2, (r, k), dtype=np.uint8)
        b = rng.integers(0, 2, (k, c), dtype=np.uint8)
        assert np.array_equal(gf2.mul(a, b), naive_mul(a, b))


def test_mul_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2.mul(np.zeros((2, 3), np.uint8), np.zeros((2, 3), np.uint8))


def test_matpow_zero_is_identity():
    m = gf2.asmatrix([[1, 1], [1, 0]])
    assert np.array_equal(gf2.matpow(m, 0), gf2.identity(2))


def test_g2_self_inverse():
    assert np.array_equal(gf2.mul(G2, G2), gf2.identity(2))


def test_kron_g2_g2():
    expected = [[1, 1, 1, 1], [0, 1, 0, 1], [0, 0, 1, 1], [0, 0, 0, 1]]
    assert np.array_equal(gf2.kron(G2, G2), expected)


def test_kron_identity_factor():
    m = gf2.asmatrix([[1, 0, 1], [1, 1, 0]])
    assert np.array_equal(gf2.kron(gf2.identity(1), m), m)


def test_cyclic_perm_8():
    assert np.array_equal(gf2.cyclic_perm(8), S8)


def test_cyclic_perm_orthogonal():
    for k in (1, 2, 3, 8, 13):
        s = gf2.cyclic_perm(k)
        assert np.array_equal(gf2.mul(s, s.T), gf2.identity(k))


def test_rank_of_product_bounded():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a = rng.integers(0, 2, (5, 4), dtype=np.uint8)
        b = rng.integers(0, 2, (4, 6), dtype=np.uint8)
        assert gf2.rank(gf2.mul(a, b)) <= min(gf2.rank(a), gf2.rank(b))


def test_sixteen_rref_classes_for_three_columns():
    """Brute force over all 3x3 binary matrices: exactly 16 canonical forms."""
    seen = set()
    for bits in range(512):
        m = gf2.asmatrix([[(bits >> (3 * i + j)) & 1 for j in range(3)] for i in range(3)])
        red, _ = gf2.rref(m)
        seen.add(red.tobytes() + bytes([red.shape[0]]))
    assert len(seen) == 16


def test_inv_roundtrip():
    rng = np.random.default_rng(17)
    found = 0
    while found < 20:
        m = rng.integers(0, 2, (5, 5), dtype=np.uint8)
        if gf2.rank(m) < 5:
            continue
        found += 1
        assert np.array_equal(gf2.mul(gf2.inv(m), m), gf2.identity(5))
        assert np.array_equal(gf2.mul(m, gf2.inv(m)), gf2.identity(5))


def test_inv_singular_raises():
    with pytest.raises(ValueError):
        gf2.inv([[1, 1], [1, 1]])


def test_row_space_contains():
    m = gf2.asmatrix([[1, 1, 0], [0, 1, 1]])
    assert gf2.row_space_contains(m, gf2.asmatrix([1, 0, 1]))
    assert not gf2.row_space_contains(m, gf2.asmatrix([1, 0, 0]))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**36 - 1))
def test_rref_idempotent_property(rows, cols, bits):
    m = gf2.asmatrix(
        [[(bits >> (cols * i + j)) & 1 for j in range(cols)] for i in range(rows)]
    )
    once, r1 = gf2.rref(m)
    twice, r2 = gf2.rref(once)
    assert r1 == r2
    assert np.array_equal(once, twice)
