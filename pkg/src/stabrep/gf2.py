"""Linear algebra over GF(2) with packed-word storage, plus the symplectic form.

Symplectic convention used everywhere in the package: a Pauli on ``n`` qubits
is the length-``2n`` row ``(x | z)`` and

    sp((a|b), (c|d)) = a.d + b.c  (mod 2)

which is 1 exactly when the two Paulis anticommute.  Check matrices are
stored in the same ``(H1 | H2)`` column order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numba
import numpy as np
import scipy.sparse as sp

WORD = 64


def _n_words(cols: int) -> int:
    return max(1, (cols + WORD - 1) // WORD)


def pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into little-endian uint64 words, one row per row."""
    dense = np.ascontiguousarray(dense, dtype=np.uint8) & 1
    rows, cols = dense.shape
    nw = _n_words(cols)
    padded = np.zeros((rows, nw * WORD), dtype=np.uint8)
    padded[:, :cols] = dense
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").copy()


def unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if rows == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(words).view(np.uint8).reshape(rows, -1)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :cols].copy()


@numba.njit(cache=True)
def _rref_words(words, ncols, col_order):
    """In-place reduced row echelon form on packed rows.

    Columns are visited in ``col_order``; returns the pivot columns found, in
    pivot-row order.
    """
    nrows = words.shape[0]
    nw = words.shape[1]
    pivots = np.empty(min(nrows, ncols), dtype=np.int64)
    rank = 0
    for idx in range(col_order.shape[0]):
        if rank == nrows:
            break
        c = col_order[idx]
        w = c >> 6
        bit = np.uint64(1) << np.uint64(c & 63)
        piv = -1
        for r in range(rank, nrows):
            if words[r, w] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(nw):
                tmp = words[piv, j]
                words[piv, j] = words[rank, j]
                words[rank, j] = tmp
        for r in range(nrows):
            if r != rank and (words[r, w] & bit):
                for j in range(nw):
                    words[r, j] ^= words[rank, j]
        pivots[rank] = c
        rank += 1
    return pivots[:rank]


class BitMatrix:
    """Immutable binary matrix stored as packed row-major 64-bit words."""

    __slots__ = ("_words", "_rows", "_cols", "_dense")

    def __init__(self, data, cols: Optional[int] = None):
        arr = np.asarray(data, dtype=np.uint8)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0 if cols is None else cols)
        if arr.ndim != 2:
            raise ValueError(f"BitMatrix needs 2-D data, got shape {arr.shape}")
        if np.any(arr > 1):
            raise ValueError("BitMatrix entries must be 0 or 1")
        self._rows, self._cols = arr.shape
        self._words = pack_rows(arr)
        self._words.setflags(write=False)
        self._dense = None

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_words(cls, words: np.ndarray, cols: int) -> "BitMatrix":
        return cls(unpack_rows(words, cols))

    @property
    def shape(self) -> tuple[int, int]:
        return (self._rows, self._cols)

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def words(self) -> np.ndarray:
        return self._words

    def to_array(self) -> np.ndarray:
        """Dense uint8 copy-on-first-use view (read-only)."""
        if self._dense is None:
            dense = unpack_rows(self._words, self._cols)
            dense.setflags(write=False)
            self._dense = dense
        return self._dense

    def __array__(self, dtype=None, copy=None):
        arr = self.to_array()
        return arr.astype(dtype) if dtype is not None else arr.copy()

    def __getitem__(self, idx):
        if isinstance(idx, tuple) and len(idx) == 2 and all(isinstance(i, (int, np.integer)) for i in idx):
            i, j = idx
            if not (0 <= i < self._rows and 0 <= j < self._cols):
                raise IndexError(f"index {idx} out of range for shape {self.shape}")
            return int((self._words[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))
        return self.to_array()[idx]

    def row(self, i: int) -> np.ndarray:
        return self.to_array()[i]

    @property
    def T(self) -> "BitMatrix":
        return BitMatrix(self.to_array().T)

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            return BitMatrix(matmul(self.to_array(), other.to_array()))
        return matmul(self.to_array(), other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._words, other._words)

    def __hash__(self) -> int:
        return hash((self.shape, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self._rows}x{self._cols})"

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        return BitMatrix(np.hstack([self.to_array(), other.to_array()]))

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        return BitMatrix(np.vstack([self.to_array(), other.to_array()]))

    def to_strings(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self.to_array()]

    @classmethod
    def from_strings(cls, rows: Sequence[str], cols: Optional[int] = None) -> "BitMatrix":
        if not rows:
            return cls(np.zeros((0, cols or 0), dtype=np.uint8))
        arr = np.array([[1 if ch == "1" else 0 for ch in r] for r in rows], dtype=np.uint8)
        bad = [r for r in rows if set(r) - {"0", "1"}]
        if bad:
            raise ValueError(f"bitstrings may contain only '0' and '1': {bad[0]!r}")
        return cls(arr)


@dataclass(frozen=True, eq=False)
class PauliVector:
    """A Pauli operator on ``n`` qubits up to phase, as bit vectors ``x`` and ``z``."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) & 1
        z = np.asarray(self.z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError(f"x and z must be equal-length vectors, got {x.shape} and {z.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @classmethod
    def identity(cls, n: int) -> "PauliVector":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_symplectic(cls, v) -> "PauliVector":
        v = np.asarray(v, dtype=np.uint8)
        if v.shape[0] % 2:
            raise ValueError("symplectic vector must have even length")
        n = v.shape[0] // 2
        return cls(v[:n], v[n:])

    @classmethod
    def from_string(cls, s: str) -> "PauliVector":
        """Parse e.g. ``"XIZY"`` (leftmost character is qubit 1)."""
        table = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
        try:
            bits = [table[ch] for ch in s.upper()]
        except KeyError as exc:
            raise ValueError(f"not a Pauli string: {s!r}") from exc
        arr = np.array(bits, dtype=np.uint8).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliVector":
        p = ["I"] * n
        p[qubit] = kind
        return cls.from_string("".join(p))

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def __mul__(self, other: "PauliVector") -> "PauliVector":
        if self.n != other.n:
            raise ValueError("Pauli length mismatch")
        return PauliVector(self.x ^ other.x, self.z ^ other.z)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliVector):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.z.tobytes()))

    def __str__(self) -> str:
        return "".join("IZXY"[2 * int(a) + int(b)] for a, b in zip(self.x, self.z))

    def __repr__(self) -> str:
        return f"PauliVector('{self}')"


def symplectic_product(u, v) -> int:
    """Return 1 if the Paulis ``u`` and ``v`` anticommute, else 0.

    Accepts :class:`PauliVector` or length-``2n`` symplectic rows.
    """
    if isinstance(u, PauliVector) and isinstance(v, PauliVector):
        if u.n != v.n:
            raise ValueError(f"dimension mismatch: {u.n} vs {v.n}")
        return int((np.count_nonzero(u.x & v.z) + np.count_nonzero(u.z & v.x)) & 1)
    a = np.asarray(u.symplectic() if isinstance(u, PauliVector) else u, dtype=np.uint8)
    b = np.asarray(v.symplectic() if isinstance(v, PauliVector) else v, dtype=np.uint8)
    if a.shape != b.shape or a.shape[0] % 2:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0] // 2
    return int((np.count_nonzero(a[:n] & b[n:]) + np.count_nonzero(a[n:] & b[:n])) & 1)


def matmul(a, b) -> np.ndarray:
    """Matrix product mod 2.

    Routed through float64 BLAS; exact while inner dimensions stay below 2**53.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (np.rint(a @ b).astype(np.int64) & 1).astype(np.uint8)


def symplectic_matrix(a, b) -> np.ndarray:
    """Pairwise symplectic products between the rows of ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.ndim != 2 or b.ndim != 2 or b.shape[1] != a.shape[1] or a.shape[1] % 2:
        raise ValueError("dimension mismatch")
    return matmul(a, swap_halves(b).T)


def swap_halves(m) -> np.ndarray:
    """Map ``(A | B)`` to ``(B | A)`` so that ordinary products become symplectic."""
    m = np.asarray(m, dtype=np.uint8)
    n = m.shape[-1] // 2
    return np.concatenate([m[..., n:], m[..., :n]], axis=-1)


def _as_dense(m) -> np.ndarray:
    if isinstance(m, BitMatrix):
        return m.to_array()
    arr = np.asarray(m, dtype=np.uint8)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr & 1


def _rref(dense: np.ndarray, col_order: Optional[np.ndarray] = None):
    rows, cols = dense.shape
    words = pack_rows(dense)
    if col_order is None:
        col_order = np.arange(cols, dtype=np.int64)
    pivots = _rref_words(words, cols, np.asarray(col_order, dtype=np.int64))
    return words, pivots


def row_reduce(m) -> tuple[BitMatrix, int, list[int]]:
    """Reduced row echelon form over GF(2).

    Returns ``(reduced, rank, pivot_cols)``; ``reduced`` has the same shape as
    the input with zero rows at the bottom.
    """
    dense = _as_dense(m)
    words, pivots = _rref(dense)
    return BitMatrix.from_words(words, dense.shape[1]), len(pivots), [int(p) for p in pivots]


def rank(m) -> int:
    dense = _as_dense(m)
    if dense.size == 0:
        return 0
    return len(_rref(dense)[1])


def solve(m, b) -> Optional[np.ndarray]:
    """Solve ``M x = b`` over GF(2); ``None`` if inconsistent.

    Free variables are set to 0, so the answer is deterministic.
    """
    dense = _as_dense(m)
    b = np.asarray(b, dtype=np.uint8).reshape(-1) & 1
    rows, cols = dense.shape
    if b.shape[0] != rows:
        raise ValueError(f"b has length {b.shape[0]}, expected {rows}")
    aug = np.hstack([dense, b[:, None]])
    words, pivots = _rref(aug, np.arange(cols, dtype=np.int64))
    red = unpack_rows(words, cols + 1)
    r = len(pivots)
    if np.any(red[r:, cols]):
        return None
    x = np.zeros(cols, dtype=np.uint8)
    x[pivots] = red[:r, cols]
    return x


def nullspace(m) -> np.ndarray:
    """Basis of ``{x : M x = 0}`` as the rows of a uint8 array."""
    dense = _as_dense(m)
    rows, cols = dense.shape
    if rows == 0:
        return np.eye(cols, dtype=np.uint8)
    words, pivots = _rref(dense)
    red = unpack_rows(words, cols)
    r = len(pivots)
    pivset = set(int(p) for p in pivots)
    free = [c for c in range(cols) if c not in pivset]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        basis[i, pivots] = red[:r, f]
    return basis


def row_basis(m) -> np.ndarray:
    """Rows of the RREF of ``M`` that are nonzero (a basis of the row space)."""
    dense = _as_dense(m)
    if dense.shape[0] == 0:
        return dense.copy()
    words, pivots = _rref(dense)
    return unpack_rows(words[: len(pivots)], dense.shape[1])


def in_rowspace(v, m) -> bool:
    dense = _as_dense(m)
    v = np.asarray(v, dtype=np.uint8).reshape(1, -1)
    if dense.shape[0] == 0:
        return not v.any()
    return rank(np.vstack([dense, v])) == rank(dense)


@numba.njit(cache=True)
def _greedy_independent(words, ncols):
    nrows, nw = words.shape
    basis = np.zeros_like(words)
    piv = np.empty(nrows, dtype=np.int64)
    nb = 0
    keep = np.zeros(nrows, dtype=np.bool_)
    v = np.empty(nw, dtype=np.uint64)
    one = np.uint64(1)
    for r in range(nrows):
        for j in range(nw):
            v[j] = words[r, j]
        for b in range(nb):
            p = piv[b]
            if (v[p >> 6] >> np.uint64(p & 63)) & one:
                for j in range(nw):
                    v[j] ^= basis[b, j]
        low = -1
        for j in range(nw):
            if v[j]:
                for t in range(64):
                    if (v[j] >> np.uint64(t)) & one:
                        low = j * 64 + t
                        break
                break
        if low >= 0:
            for j in range(nw):
                basis[nb, j] = v[j]
            piv[nb] = low
            nb += 1
            keep[r] = True
    return keep


def complement_basis(space, sub) -> np.ndarray:
    """Rows of ``space`` that extend a basis of ``rowspace(sub)``.

    Vectors are taken greedily in order, so the result is deterministic.
    """
    space = _as_dense(space)
    sub = _as_dense(sub).reshape(-1, space.shape[1])
    stacked = np.vstack([sub, space])
    if stacked.shape[0] == 0:
        return space.copy()
    keep = _greedy_independent(pack_rows(stacked), stacked.shape[1])
    return space[keep[sub.shape[0]:]].copy()


def inverse(m) -> np.ndarray:
    """Inverse of a square invertible matrix over GF(2)."""
    dense = _as_dense(m)
    n = dense.shape[0]
    if dense.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    aug = np.hstack([dense, np.eye(n, dtype=np.uint8)])
    words, pivots = _rref(aug, np.arange(n, dtype=np.int64))
    if len(pivots) != n:
        raise ValueError("matrix is singular over GF(2)")
    return unpack_rows(words, 2 * n)[:, n:]


class SparseBitMatrix:
    """Index-list representation for large low-density matrices.

    Wraps a CSR matrix so matrix-vector products reduce to a sparse product
    followed by a parity mask.
    """

    def __init__(self, dense_or_csr):
        if sp.issparse(dense_or_csr):
            csr = sp.csr_matrix(dense_or_csr, dtype=np.int32)
        else:
            csr = sp.csr_matrix(_as_dense(dense_or_csr).astype(np.int32))
        csr.eliminate_zeros()
        csr.sort_indices()
        self.csr = csr
        self.shape = csr.shape

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], cols: int) -> "SparseBitMatrix":
        indptr = [0]
        indices: list[int] = []
        for r in rows:
            idx = sorted(set(int(i) for i in r))
            indices.extend(idx)
            indptr.append(len(indices))
        data = np.ones(len(indices), dtype=np.int32)
        return cls(sp.csr_matrix((data, indices, indptr), shape=(len(indptr) - 1, cols)))

    def row_indices(self, i: int) -> np.ndarray:
        return self.csr.indices[self.csr.indptr[i] : self.csr.indptr[i + 1]]

    def rows_as_lists(self) -> list[list[int]]:
        return [self.row_indices(i).tolist() for i in range(self.shape[0])]

    def matvec(self, v) -> np.ndarray:
        return (self.csr @ np.asarray(v, dtype=np.int32) & 1).astype(np.uint8)

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray().astype(np.uint8)

    @property
    def T(self) -> "SparseBitMatrix":
        return SparseBitMatrix(self.csr.T.tocsr())
