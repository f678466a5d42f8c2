"""Exact integer-lattice linear algebra.

Smith normal form with tracked unimodular transforms (and their inverses),
unimodular extensions of generating sets, and primitivity/divisibility
tests.  All arithmetic uses Python integers, so nothing ever overflows;
exactness is what the topology side of the workbench is built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DimensionMismatch, NotGenerating, ZeroVector


@dataclass(frozen=True)
class IntMatrix:
    """Immutable integer matrix, row-major."""

    rows: int
    cols: int
    entries: tuple  # flattened, length rows * cols

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match shape")
        if not all(isinstance(e, int) for e in self.entries):
            raise ValueError("entries must be integers")

    @staticmethod
    def from_rows(rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if rows:
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise ValueError("ragged rows")
        else:
            width = 0 if cols is None else cols
        flat = tuple(int(x) for r in rows for x in r)
        return IntMatrix(len(rows), width, flat)

    @staticmethod
    def identity(n: int) -> "IntMatrix":
        return IntMatrix(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @staticmethod
    def zero(rows: int, cols: int) -> "IntMatrix":
        return IntMatrix(rows, cols, (0,) * (rows * cols))

    def __getitem__(self, ij) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def column(self, j: int) -> tuple:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def to_lists(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "IntMatrix":
        return IntMatrix(
            self.cols,
            self.rows,
            tuple(self[i, j] for j in range(self.cols) for i in range(self.rows)),
        )

    def matmul(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch("incompatible shapes for product")
        a, b = self.to_lists(), other.to_lists()
        out = []
        for i in range(self.rows):
            ai = a[i]
            for j in range(other.cols):
                out.append(sum(ai[k] * b[k][j] for k in range(self.cols)))
        return IntMatrix(self.rows, other.cols, tuple(out))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return self.matmul(other)

    def diagonal(self) -> tuple:
        return tuple(self[i, i] for i in range(min(self.rows, self.cols)))

    def is_diagonal(self) -> bool:
        return all(
            self[i, j] == 0
            for i in range(self.rows)
            for j in range(self.cols)
            if i != j
        )

    def det(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise DimensionMismatch("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = self.to_lists()
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                pivot = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
                if pivot is None:
                    return 0
                m[k], m[pivot] = m[pivot], m[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[n - 1][n - 1]

    def is_unimodular(self) -> bool:
        return self.rows == self.cols and abs(self.det()) == 1


@dataclass(frozen=True)
class SnfDecomposition:
    """left @ input @ right = diag, with left/right unimodular.

    ``left_inv`` and ``right_inv`` are carried along because the
    unimodular-extension construction needs them and they are cheap to
    track during the reduction.
    """

    left: IntMatrix
    diag: IntMatrix
    right: IntMatrix
    left_inv: IntMatrix
    right_inv: IntMatrix

    def diagonal(self) -> tuple:
        return self.diag.diagonal()


class _Reducer:
    """Mutable state for one Smith reduction, with transform tracking."""

    def __init__(self, a: IntMatrix):
        self.m = a.rows
        self.n = a.cols
        self.a = a.to_lists()
        self.left = IntMatrix.identity(self.m).to_lists()
        self.left_inv = IntMatrix.identity(self.m).to_lists()
        self.right = IntMatrix.identity(self.n).to_lists()
        self.right_inv = IntMatrix.identity(self.n).to_lists()

    # Row operations act as A <- E A, so left <- E left and
    # left_inv <- left_inv E^{-1}.
    def swap_rows(self, i, j):
        if i == j:
            return
        self.a[i], self.a[j] = self.a[j], self.a[i]
        self.left[i], self.left[j] = self.left[j], self.left[i]
        for row in self.left_inv:
            row[i], row[j] = row[j], row[i]

    def add_row(self, i, j, q):
        # row_i += q * row_j
        if q == 0:
            return
        ai, aj = self.a[i], self.a[j]
        for k in range(self.n):
            ai[k] += q * aj[k]
        li, lj = self.left[i], self.left[j]
        for k in range(self.m):
            li[k] += q * lj[k]
        for row in self.left_inv:
            row[j] -= q * row[i]

    def negate_row(self, i):
        self.a[i] = [-x for x in self.a[i]]
        self.left[i] = [-x for x in self.left[i]]
        for row in self.left_inv:
            row[i] = -row[i]

    # Column operations act as A <- A E, so right <- right E and
    # right_inv <- E^{-1} right_inv.
    def swap_cols(self, i, j):
        if i == j:
            return
        for row in self.a:
            row[i], row[j] = row[j], row[i]
        for row in self.right:
            row[i], row[j] = row[j], row[i]
        self.right_inv[i], self.right_inv[j] = self.right_inv[j], self.right_inv[i]

    def add_col(self, j, i, q):
        # col_j += q * col_i
        if q == 0:
            return
        for row in self.a:
            row[j] += q * row[i]
        for row in self.right:
            row[j] += q * row[i]
        ri, rj = self.right_inv[i], self.right_inv[j]
        for k in range(self.n):
            ri[k] -= q * rj[k]

    def negate_col(self, j):
        for row in self.a:
            row[j] = -row[j]
        for row in self.right:
            row[j] = -row[j]
        self.right_inv[j] = [-x for x in self.right_inv[j]]

    def _find_pivot(self, t):
        """Smallest nonzero |entry| in the trailing submatrix."""
        best = None
        where = None
        for i in range(t, self.m):
            row = self.a[i]
            for j in range(t, self.n):
                v = row[j]
                if v != 0:
                    v = abs(v)
                    if best is None or v < best:
                        best, where = v, (i, j)
                        if best == 1:
                            return where
        return where

    def run(self):
        t = 0
        bound = min(self.m, self.n)
        while t < bound:
            where = self._find_pivot(t)
            if where is None:
                break
            self.swap_rows(t, where[0])
            self.swap_cols(t, where[1])
            while True:
                # Clear column t, moving a smaller remainder up if one appears.
                dirty = False
                for i in range(t + 1, self.m):
                    if self.a[i][t] != 0:
                        q = self.a[i][t] // self.a[t][t]
                        self.add_row(i, t, -q)
                        if self.a[i][t] != 0:
                            self.swap_rows(i, t)
                            dirty = True
                if dirty:
                    continue
                for j in range(t + 1, self.n):
                    if self.a[t][j] != 0:
                        q = self.a[t][j] // self.a[t][t]
                        self.add_col(j, t, -q)
                        if self.a[t][j] != 0:
                            self.swap_cols(j, t)
                            dirty = True
                if dirty:
                    continue
                # Pivot must divide the rest of the trailing block.
                offender = None
                piv = self.a[t][t]
                for i in range(t + 1, self.m):
                    row = self.a[i]
                    for j in range(t + 1, self.n):
                        if row[j] % piv != 0:
                            offender = i
                            break
                    if offender is not None:
                        break
                if offender is None:
                    break
                self.add_row(t, offender, 1)
            t += 1
        for i in range(bound):
            if self.a[i][i] < 0:
                self.negate_row(i)


def snf(a: IntMatrix) -> SnfDecomposition:
    """Smith normal form with unimodular transforms.

    The diagonal is nonnegative and satisfies d_i | d_{i+1} (trailing
    zeros allowed; zero is divisible by everything).  The diagonal is
    uniquely determined by ``a``; the transforms are not.
    """
    red = _Reducer(a)
    red.run()
    return SnfDecomposition(
        left=IntMatrix.from_rows(red.left, cols=a.rows),
        diag=IntMatrix.from_rows(red.a, cols=a.cols),
        right=IntMatrix.from_rows(red.right, cols=a.cols),
        left_inv=IntMatrix.from_rows(red.left_inv, cols=a.rows),
        right_inv=IntMatrix.from_rows(red.right_inv, cols=a.cols),
    )


def unimodular_extension(a: IntMatrix) -> IntMatrix:
    """Extend a full-lattice generating matrix to a unimodular square one.

    For ``a`` of shape r x m (r <= m) whose columns generate Z^r, returns
    an m x m unimodular matrix whose top r rows equal ``a``.  Raises
    NotGenerating otherwise.
    """
    r, m = a.rows, a.cols
    if r > m:
        raise DimensionMismatch("need rows <= cols")
    dec = snf(a)
    diag = dec.diagonal()
    if len(diag) < r or any(d != 1 for d in diag[:r]):
        raise NotGenerating("columns do not generate the full lattice")
    # a = left_inv [I 0] right_inv, so stacking left_inv over an identity
    # block and multiplying by right_inv keeps the top rows equal to a.
    linv = dec.left_inv.to_lists()
    block = [row + [0] * (m - r) for row in linv]
    for i in range(m - r):
        block.append([0] * r + [1 if j == i else 0 for j in range(m - r)])
    ext = IntMatrix.from_rows(block, cols=m) @ dec.right_inv
    return ext


def divisibility(v: Iterable[int]) -> int:
    """gcd of the entries; 0 for the zero vector."""
    g = 0
    for x in v:
        g = math.gcd(g, int(x))
    return g


def is_primitive(v: Sequence[int]) -> bool:
    """True iff the entries have gcd 1.  Raises ZeroVector on 0."""
    d = divisibility(v)
    if d == 0:
        raise ZeroVector("primitivity of the zero vector is undefined")
    return d == 1


def extends_to_basis(vs: Sequence[Sequence[int]]) -> bool:
    """True iff the given vectors extend to a basis of Z^d.

    ``vs`` is a nonempty list of at most d vectors, all of the same
    length d.  Equivalent to the Smith diagonal of the column matrix
    being all ones.
    """
    if not vs:
        raise DimensionMismatch("empty list of vectors")
    d = len(vs[0])
    if any(len(v) != d for v in vs):
        raise DimensionMismatch("vectors of unequal length")
    if len(vs) > d:
        raise DimensionMismatch("more vectors than the ambient rank")
    cols = IntMatrix.from_rows([[int(v[i]) for v in vs] for i in range(d)], cols=len(vs))
    diag = snf(cols).diagonal()
    ones = sum(1 for x in diag if x == 1)
    return ones == len(vs) and all(x == 1 for x in diag[: len(vs)])
