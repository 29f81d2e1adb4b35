"""Dense exact linear algebra over prime fields GF(p).

Everything in this package ultimately reduces to row reduction of integer
matrices mod p.  Matrices are stored dense, row-major, as int64 numpy
arrays with entries in [0, p).  Elimination is deterministic (leftmost
pivot column, topmost pivot row), so every derived object, echelon forms,
kernels, subspace bases, is bit-reproducible.

p is restricted to primes below 2**16; with that bound every dot product
of desk-scale length fits comfortably in int64, so no intermediate
reduction is needed inside a matrix product.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DimensionError, GreencorrError

MAX_PRIME = 1 << 16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def check_prime(p: int) -> int:
    p = int(p)
    if not is_prime(p) or p > MAX_PRIME:
        raise GreencorrError(f"modulus must be a prime <= 2^16, got {p}")
    return p


def inv_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 is not invertible mod {p}")
    return pow(a, p - 2, p)


def _as_array(data, p: int) -> np.ndarray:
    a = np.asarray(data, dtype=np.int64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got ndim={a.ndim}")
    return np.mod(a, p)


class FpMatrix:
    """Immutable dense matrix over GF(p)."""

    __slots__ = ("p", "a")

    def __init__(self, data, p: int, _trusted: bool = False):
        self.p = int(p)
        if _trusted:
            a = data
        else:
            check_prime(p)
            a = _as_array(data, self.p)
        a.setflags(write=False)
        self.a = a

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zeros(rows: int, cols: int, p: int) -> "FpMatrix":
        return FpMatrix(np.zeros((rows, cols), dtype=np.int64), p, _trusted=True)

    @staticmethod
    def identity(n: int, p: int) -> "FpMatrix":
        return FpMatrix(np.eye(n, dtype=np.int64), p, _trusted=True)

    @staticmethod
    def from_rows(rows: Sequence[Sequence[int]], p: int, cols: Optional[int] = None) -> "FpMatrix":
        if len(rows) == 0:
            if cols is None:
                raise DimensionError("cols required for an empty row list")
            return FpMatrix.zeros(0, cols, p)
        return FpMatrix(rows, p)

    # -- basic properties ----------------------------------------------

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    @property
    def shape(self):
        return self.a.shape

    def is_zero(self) -> bool:
        return not self.a.any()

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, FpMatrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and np.array_equal(self.a, other.a)

    def __hash__(self) -> int:
        return hash((self.p, self.shape, self.a.tobytes()))

    def tobytes(self) -> bytes:
        """Canonical serialization: shape, modulus, then row-major entries."""
        head = np.array([self.rows, self.cols, self.p], dtype=np.int64)
        return head.tobytes() + self.a.tobytes()

    def tolist(self):
        return self.a.tolist()

    def __repr__(self) -> str:
        return f"FpMatrix(p={self.p}, {self.rows}x{self.cols})"

    # -- arithmetic ------------------------------------------------------

    def _check_same_field(self, other: "FpMatrix"):
        if self.p != other.p:
            raise DimensionError(f"mixed moduli {self.p} and {other.p}")

    def __add__(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_field(other)
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} + {other.shape}")
        return FpMatrix((self.a + other.a) % self.p, self.p, _trusted=True)

    def __sub__(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_field(other)
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} - {other.shape}")
        return FpMatrix((self.a - other.a) % self.p, self.p, _trusted=True)

    def __neg__(self) -> "FpMatrix":
        return FpMatrix((-self.a) % self.p, self.p, _trusted=True)

    def __mul__(self, scalar: int) -> "FpMatrix":
        return FpMatrix((self.a * (int(scalar) % self.p)) % self.p, self.p, _trusted=True)

    __rmul__ = __mul__

    def __matmul__(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_field(other)
        if self.cols != other.rows:
            raise DimensionError(f"matmul shape mismatch {self.shape} @ {other.shape}")
        return FpMatrix(matmul_mod(self.a, other.a, self.p), self.p, _trusted=True)

    @property
    def T(self) -> "FpMatrix":
        return FpMatrix(self.a.T.copy(), self.p, _trusted=True)

    def kron(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_field(other)
        return FpMatrix(np.kron(self.a, other.a) % self.p, self.p, _trusted=True)

    def hstack(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_field(other)
        return FpMatrix(np.hstack([self.a, other.a]), self.p, _trusted=True)

    def vstack(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_field(other)
        return FpMatrix(np.vstack([self.a, other.a]), self.p, _trusted=True)

    def flatten_row(self) -> np.ndarray:
        """Row-major flattening as a 1-d vector (copy)."""
        return self.a.reshape(-1).copy()

    # -- elimination-backed queries ---------------------------------------

    def rank(self) -> int:
        return rref(self).rank

    def inverse(self) -> "FpMatrix":
        if not self.is_square():
            raise DimensionError("inverse of a non-square matrix")
        n = self.rows
        aug = np.hstack([self.a, np.eye(n, dtype=np.int64)])
        red, rank, _ = _rref_array(aug, self.p, pivot_cols_limit=n)
        if rank < n:
            raise GreencorrError("matrix is singular")
        return FpMatrix(red[:, n:].copy(), self.p, _trusted=True)

    def is_invertible(self) -> bool:
        return self.is_square() and self.rank() == self.rows

    def pow(self, e: int) -> "FpMatrix":
        """Matrix power by repeated squaring; e >= 0."""
        if not self.is_square():
            raise DimensionError("power of a non-square matrix")
        result = np.eye(self.rows, dtype=np.int64)
        base = self.a
        e = int(e)
        while e > 0:
            if e & 1:
                result = matmul_mod(result, base, self.p)
            base = matmul_mod(base, base, self.p)
            e >>= 1
        return FpMatrix(result, self.p, _trusted=True)


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """a @ b mod p, exact.

    Routed through float64 BLAS when every dot product is guaranteed below
    2^53 (always true at desk scale); numpy's integer matmul has no BLAS
    backend and is an order of magnitude slower.  Falls back to int64
    otherwise, which is itself overflow-safe for p <= 2^16.
    """
    inner = a.shape[-1]
    if inner * (p - 1) * (p - 1) < 2 ** 53:
        c = np.matmul(a.astype(np.float64), b.astype(np.float64))
        return np.mod(np.rint(c).astype(np.int64), p)
    return np.mod(np.matmul(a, b), p)


class KernelAccumulator:
    """Kernel of a tall stacked linear system, fed block by block.

    Maintains the reduced row echelon form of all constraint rows seen so
    far.  Feeding in blocks keeps the slow per-pivot Python loop bounded by
    the column count instead of the (much larger) row count.
    """

    def __init__(self, width: int, p: int):
        self.width = int(width)
        self.p = int(p)
        self.rows = np.zeros((0, self.width), dtype=np.int64)
        self.pivots: list = []

    @property
    def rank(self) -> int:
        return self.rows.shape[0]

    def add_block(self, block: np.ndarray):
        if block.size == 0:
            return
        block = np.mod(np.asarray(block, dtype=np.int64).reshape(-1, self.width), self.p)
        if self.rank:
            block = (block - matmul_mod(block[:, self.pivots], self.rows, self.p)) % self.p
        if not block.any():
            return
        merged = np.vstack([self.rows, block])
        red, rank, piv = _rref_array(merged, self.p)
        self.rows = red[:rank].copy()
        self.pivots = list(piv)

    def kernel(self) -> np.ndarray:
        """Canonical RREF basis (rows) of the common kernel."""
        if self.rank == 0:
            return np.eye(self.width, dtype=np.int64)
        return _kernel_array(self.rows, self.p)


def batched_matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Broadcasting matmul mod p with the same BLAS routing as matmul_mod."""
    inner = a.shape[-1]
    if inner * (p - 1) * (p - 1) < 2 ** 53:
        c = np.matmul(a.astype(np.float64), b.astype(np.float64))
        return np.mod(np.rint(c).astype(np.int64), p)
    return np.mod(np.matmul(a, b), p)


def _rref_array(a: np.ndarray, p: int, pivot_cols_limit: Optional[int] = None):
    """In-place-style reduced row echelon form of a copy of `a` mod p.

    Returns (reduced, rank, pivot_columns).  Deterministic: scans columns
    left to right, picks the topmost available nonzero entry as pivot.
    """
    r = np.mod(a, p).astype(np.int64, copy=True)
    m, n = r.shape
    limit = n if pivot_cols_limit is None else pivot_cols_limit
    pivots = []
    row = 0
    for col in range(limit):
        if row >= m:
            break
        nz = np.nonzero(r[row:, col])[0]
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            r[[row, piv]] = r[[piv, row]]
        inv = inv_mod(int(r[row, col]), p)
        if inv != 1:
            r[row] = (r[row] * inv) % p
        colvals = r[:, col].copy()
        colvals[row] = 0
        touched = np.nonzero(colvals)[0]
        if touched.size:
            r[touched] = (r[touched] - np.outer(colvals[touched], r[row])) % p
        pivots.append(col)
        row += 1
    return r, len(pivots), pivots


class RrefResult(NamedTuple):
    matrix: FpMatrix
    rank: int
    pivots: tuple


def rref(m: FpMatrix) -> RrefResult:
    """Unique reduced row-echelon form of m, with rank and pivot columns."""
    red, rank, pivots = _rref_array(m.a, m.p)
    return RrefResult(FpMatrix(red, m.p, _trusted=True), rank, tuple(pivots))


def _kernel_array(a: np.ndarray, p: int) -> np.ndarray:
    """Rows span {v : a @ v = 0}; output is in reduced echelon form."""
    m, n = a.shape
    red, rank, pivots = _rref_array(a, p)
    free = [j for j in range(n) if j not in set(pivots)]
    if not free:
        return np.zeros((0, n), dtype=np.int64)
    basis = np.zeros((len(free), n), dtype=np.int64)
    for i, j in enumerate(free):
        basis[i, j] = 1
        for r_idx, pc in enumerate(pivots):
            basis[i, pc] = (-red[r_idx, j]) % p
    out, _, _ = _rref_array(basis, p)
    return out


class Subspace:
    """Subspace of GF(p)^n given by a canonical RREF row basis."""

    __slots__ = ("p", "ambient_dim", "basis", "pivots")

    def __init__(self, basis: FpMatrix, ambient_dim: int, _canonical: bool = False):
        self.p = basis.p
        self.ambient_dim = int(ambient_dim)
        if basis.cols != self.ambient_dim:
            raise DimensionError(
                f"basis width {basis.cols} != ambient dim {self.ambient_dim}")
        if _canonical:
            red, rank, piv = basis.a, basis.rows, None
            # pivots recomputed cheaply: first nonzero per row
            piv = [int(np.nonzero(row)[0][0]) for row in red] if rank else []
            self.basis = basis
            self.pivots = tuple(piv)
        else:
            red, rank, piv = _rref_array(basis.a, basis.p)
            self.basis = FpMatrix(red[:rank].copy(), basis.p, _trusted=True)
            self.pivots = tuple(piv)

    @staticmethod
    def spanned_by(rows, p: int, ambient_dim: int) -> "Subspace":
        rows = list(rows)
        if not rows:
            return Subspace.zero(ambient_dim, p)
        return Subspace(FpMatrix(np.array(rows, dtype=np.int64), p), ambient_dim)

    @staticmethod
    def zero(ambient_dim: int, p: int) -> "Subspace":
        return Subspace(FpMatrix.zeros(0, ambient_dim, p), ambient_dim, _canonical=True)

    @staticmethod
    def full(ambient_dim: int, p: int) -> "Subspace":
        return Subspace(FpMatrix.identity(ambient_dim, p), ambient_dim, _canonical=True)

    @property
    def dim(self) -> int:
        return self.basis.rows

    def _check_compatible(self, other: "Subspace"):
        if self.p != other.p or self.ambient_dim != other.ambient_dim:
            raise DimensionError("subspaces live in different ambient spaces")

    def reduce_vector(self, v: np.ndarray) -> np.ndarray:
        """Residue of v after elimination against the basis rows."""
        w = np.mod(np.asarray(v, dtype=np.int64).reshape(-1), self.p)
        if w.shape[0] != self.ambient_dim:
            raise DimensionError("vector length != ambient dim")
        for row_idx, pc in enumerate(self.pivots):
            c = w[pc]
            if c:
                w = (w - c * self.basis.a[row_idx]) % self.p
        return w

    def contains_vector(self, v) -> bool:
        if isinstance(v, FpMatrix):
            v = v.flatten_row()
        return not self.reduce_vector(v).any()

    def coordinates_of(self, v) -> Optional[np.ndarray]:
        """Coefficients of v in the basis rows, or None if v is outside."""
        if isinstance(v, FpMatrix):
            v = v.flatten_row()
        w = np.mod(np.asarray(v, dtype=np.int64).reshape(-1), self.p)
        coeffs = np.zeros(self.dim, dtype=np.int64)
        for row_idx, pc in enumerate(self.pivots):
            c = w[pc]
            if c:
                coeffs[row_idx] = c
                w = (w - c * self.basis.a[row_idx]) % self.p
        if w.any():
            return None
        return coeffs

    def contains(self, other: "Subspace") -> bool:
        self._check_compatible(other)
        return all(self.contains_vector(row) for row in other.basis.a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (self.p == other.p and self.ambient_dim == other.ambient_dim
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim}, p={self.p})"

    def sum(self, other: "Subspace") -> "Subspace":
        self._check_compatible(other)
        stacked = np.vstack([self.basis.a, other.basis.a])
        return Subspace(FpMatrix(stacked, self.p, _trusted=True), self.ambient_dim)

    def intersection(self, other: "Subspace") -> "Subspace":
        """Intersection via the kernel of the stacked coefficient system.

        Pairs (x, y) with basis_self^T x = basis_other^T y parameterize the
        intersection; the first block of each kernel vector gives the
        coefficients of an intersection element in self's basis.
        """
        self._check_compatible(other)
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim, self.p)
        stacked = np.hstack([self.basis.a.T, (-other.basis.a.T) % self.p])
        ker = _kernel_array(stacked, self.p)
        if ker.shape[0] == 0:
            return Subspace.zero(self.ambient_dim, self.p)
        vecs = matmul_mod(ker[:, : self.dim], self.basis.a, self.p)
        return Subspace(FpMatrix(vecs, self.p, _trusted=True), self.ambient_dim)

    def extend_to(self, bigger_vectors: Iterable[np.ndarray]) -> list:
        """Greedy picks from `bigger_vectors` that are independent mod self.

        Returns the picked vectors; useful for quotient representatives.
        """
        picked = []
        work = [self.basis.a[i].copy() for i in range(self.dim)]

        def reduce_against(v, rows):
            v = v.copy()
            for r in rows:
                pc = int(np.nonzero(r)[0][0])
                c = v[pc]
                if c:
                    inv = inv_mod(int(r[pc]), self.p)
                    v = (v - (c * inv) * r) % self.p
            return v

        for cand in bigger_vectors:
            v = np.mod(np.asarray(cand, dtype=np.int64).reshape(-1), self.p)
            red = reduce_against(v, work)
            if red.any():
                picked.append(v)
                work.append(red)
        return picked


def kernel_basis(m: FpMatrix) -> Subspace:
    """Canonical basis of the right kernel {v : m v = 0}."""
    ker = _kernel_array(m.a, m.p)
    return Subspace(FpMatrix(ker, m.p, _trusted=True), m.cols, _canonical=True)


class SolveResult(NamedTuple):
    solution: Optional[FpMatrix]
    kernel: Subspace


def solve(m: FpMatrix, b: FpMatrix) -> SolveResult:
    """Solve m x = b; returns one particular solution and the kernel.

    b may have several columns (simultaneous right-hand sides).  The
    solution is None when the system is inconsistent.
    """
    if isinstance(b, np.ndarray):
        b = FpMatrix(b.reshape(m.rows, -1), m.p)
    if m.p != b.p:
        raise DimensionError("mixed moduli in solve")
    if b.rows != m.rows:
        raise DimensionError(f"solve shape mismatch: {m.shape} vs {b.shape}")
    n = m.cols
    aug = np.hstack([m.a, b.a])
    red, rank, pivots = _rref_array(aug, m.p, pivot_cols_limit=n)
    # A row with zero coefficient part but nonzero rhs means inconsistency.
    consistent = all(
        red[i, :n].any() or not red[i, n:].any() for i in range(rank, red.shape[0]))
    ker = kernel_basis(m)
    if not consistent:
        return SolveResult(None, ker)
    x = np.zeros((n, b.cols), dtype=np.int64)
    for r_idx, pc in enumerate(pivots):
        x[pc] = red[r_idx, n:]
    return SolveResult(FpMatrix(x, m.p, _trusted=True), ker)


def row_space(m: FpMatrix) -> Subspace:
    return Subspace(m, m.cols)


def random_matrix(rows: int, cols: int, p: int, rng: np.random.Generator) -> FpMatrix:
    return FpMatrix(rng.integers(0, p, size=(rows, cols), dtype=np.int64), p, _trusted=True)
