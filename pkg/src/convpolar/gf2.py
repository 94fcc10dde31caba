"""Dense linear algebra over GF(2).

Matrices are numpy arrays of dtype uint8 with entries in {0, 1}; vectors are
1-D arrays of the same kind.  All functions are pure and never modify their
arguments.  Matrix indices are 0-based here; user-facing bit positions in the
rest of the package are 1-based.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "asmatrix",
    "identity",
    "mul",
    "matpow",
    "kron",
    "cyclic_perm",
    "rref",
    "rank",
    "inv",
    "row_space_contains",
]


def asmatrix(rows) -> np.ndarray:
    """Coerce a nested sequence (or array) to a uint8 GF(2) matrix."""
    m = np.array(rows, dtype=np.uint8) % 2
    if m.ndim == 1:
        m = m.reshape(1, -1)
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.uint8)


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over GF(2).

    Args:
        a: shape (r, k) matrix (or (k,) row vector).
        b: shape (k, c) matrix.

    Returns:
        The product reduced mod 2, dtype uint8.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return (a.astype(np.int64) @ b.astype(np.int64) % 2).astype(np.uint8)


def matpow(a: np.ndarray, k: int) -> np.ndarray:
    """k-th power of a square matrix over GF(2); matpow(a, 0) is the identity."""
    a = np.asarray(a, dtype=np.uint8)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matpow requires a square matrix")
    if k < 0:
        raise ValueError("negative powers not supported")
    result = identity(a.shape[0])
    base = a.copy()
    while k:
        if k & 1:
            result = mul(result, base)
        base = mul(base, base)
        k >>= 1
    return result


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product over GF(2)."""
    return (np.kron(np.asarray(a, np.uint8), np.asarray(b, np.uint8)) % 2).astype(
        np.uint8
    )


def cyclic_perm(k: int) -> np.ndarray:
    """Cyclic permutation matrix S of size k with S[0, k-1] = 1 and S[i, i-1] = 1.

    Acting on a row vector from the right, x -> x.S shifts the content of every
    position one step toward lower index, with position k receiving the content
    of position 1 (1-based view).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    s = np.zeros((k, k), dtype=np.uint8)
    s[0, k - 1] = 1
    for i in range(1, k):
        s[i, i - 1] = 1
    return s


def rref(m: np.ndarray) -> tuple[np.ndarray, int]:
    """Reduced row-echelon form over GF(2).

    Zero rows are removed, so the result has exactly `rank` rows and strictly
    increasing pivot columns; this makes the output a canonical representative
    of the row space.

    Args:
        m: matrix of shape (r, c); r may be 0.

    Returns:
        (reduced matrix of shape (rank, c), rank)
    """
    a = np.array(m, dtype=np.uint8, copy=True) % 2
    if a.ndim == 1:
        a = a.reshape(1, -1)
    nrows, ncols = a.shape
    pivot_row = 0
    for col in range(ncols):
        if pivot_row >= nrows:
            break
        hits = np.nonzero(a[pivot_row:, col])[0]
        if hits.size == 0:
            continue
        swap = pivot_row + hits[0]
        if swap != pivot_row:
            a[[pivot_row, swap]] = a[[swap, pivot_row]]
        # Clear the pivot column everywhere else (full reduction).
        others = np.nonzero(a[:, col])[0]
        others = others[others != pivot_row]
        a[others] ^= a[pivot_row]
        pivot_row += 1
    return a[:pivot_row].copy(), pivot_row


def rank(m: np.ndarray) -> int:
    return rref(m)[1]


def inv(m: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix over GF(2); raises ValueError if singular."""
    a = np.asarray(m, dtype=np.uint8)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("inv requires a square matrix")
    n = a.shape[0]
    aug = np.concatenate([a % 2, identity(n)], axis=1)
    reduced, r = rref(aug)
    if r < n or not np.array_equal(reduced[:, :n], identity(n)):
        raise ValueError("matrix is singular over GF(2)")
    return reduced[:, n:].copy()


def row_space_contains(m: np.ndarray, v: np.ndarray) -> bool:
    """True iff row vector v lies in the row space of m."""
    m = np.asarray(m, dtype=np.uint8)
    v = np.asarray(v, dtype=np.uint8).reshape(1, -1)
    if m.size == 0:
        return not v.any()
    base = rank(m)
    return rank(np.concatenate([m % 2, v % 2], axis=0)) == base
