"""Exact integer matrices, Smith normal form, and homology of a pair of
boundary maps.

Everything here runs on Python's arbitrary-precision integers: invariant
factors blow up quickly during reduction, so fixed-width arithmetic is not
an option.  Matrices are immutable; all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionMismatch, NotAComplex

__all__ = [
    "IntegerMatrix",
    "SmithDecomposition",
    "HomologyGroup",
    "smith_normal_form",
    "rank",
    "homology_at",
]


@dataclass(frozen=True)
class IntegerMatrix:
    """A rows x cols matrix of Python ints stored row-major.

    Empty matrices (zero rows or zero columns) are legal and represent
    zero maps, which occur at the top and bottom degrees of a complex.
    """

    rows: int
    cols: int
    entries: tuple = ()

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatch("negative matrix dimension")
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols}"
                f" entries, got {len(self.entries)}")
        for x in self.entries:
            if not isinstance(x, int) or isinstance(x, bool):
                raise DimensionMismatch(f"non-integer entry {x!r}")

    @classmethod
    def from_rows(cls, rows_data):
        rows_data = [list(r) for r in rows_data]
        rows = len(rows_data)
        cols = len(rows_data[0]) if rows else 0
        if any(len(r) != cols for r in rows_data):
            raise DimensionMismatch("ragged row lengths")
        return cls(rows, cols, tuple(x for r in rows_data for x in r))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n):
        return cls(n, n, tuple(int(i == j) for i in range(n) for j in range(n)))

    def __getitem__(self, key):
        i, j = key
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(key)
        return self.entries[i * self.cols + j]

    def row(self, i):
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self):
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self):
        return IntegerMatrix(
            self.cols, self.rows,
            tuple(self[i, j] for j in range(self.cols) for i in range(self.rows)))

    def __matmul__(self, other):
        if not isinstance(other, IntegerMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise DimensionMismatch(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        out = []
        for i in range(self.rows):
            lrow = self.row(i)
            for j in range(other.cols):
                out.append(sum(lrow[k] * other[k, j] for k in range(self.cols)))
        return IntegerMatrix(self.rows, other.cols, tuple(out))

    def is_zero(self):
        return all(x == 0 for x in self.entries)

    def diagonal(self):
        return [self[i, i] for i in range(min(self.rows, self.cols))]

    def determinant(self):
        """Exact determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise DimensionMismatch("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        a = self.to_rows()
        sign = 1
        prev = 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k] != 0:
                        a[k], a[i] = a[i], a[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
                a[i][k] = 0
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def __str__(self):
        if self.rows == 0 or self.cols == 0:
            return f"<empty {self.rows}x{self.cols}>"
        return "\n".join(" ".join(str(x) for x in self.row(i)) for i in range(self.rows))


@dataclass(frozen=True)
class SmithDecomposition:
    """U @ A @ V == D with U, V unimodular and D diagonal, the nonzero
    diagonal entries positive and forming a divisibility chain."""

    U: IntegerMatrix
    D: IntegerMatrix
    V: IntegerMatrix
    invariant_factors: tuple


@dataclass(frozen=True)
class HomologyGroup:
    """A finitely generated abelian group Z^betti + sum of Z/t cyclic parts.

    The torsion list keeps only invariant factors > 1, each dividing the
    next.
    """

    degree: int
    betti: int
    torsion: tuple = ()

    def is_trivial(self):
        return self.betti == 0 and not self.torsion

    def describe(self):
        parts = []
        if self.betti == 1:
            parts.append("Z")
        elif self.betti > 1:
            parts.append(f"Z^{self.betti}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts) if parts else "0"

    def __str__(self):
        return self.describe()


def smith_normal_form(matrix):
    """Diagonalize an integer matrix by unimodular row/column operations.

    Pivot rule: smallest nonzero absolute value in the remaining block,
    ties broken by row-major position.  This keeps entry growth moderate
    and makes the output deterministic.
    """
    m, n = matrix.rows, matrix.cols
    a = matrix.to_rows()
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        if i != j:
            a[i], a[j] = a[j], a[i]
            u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        if i != j:
            for r in a:
                r[i], r[j] = r[j], r[i]
            for r in v:
                r[i], r[j] = r[j], r[i]

    def add_row(dst, src, k):
        # row dst += k * row src, mirrored on U
        if k:
            ad, asrc = a[dst], a[src]
            for j in range(n):
                ad[j] += k * asrc[j]
            ud, usrc = u[dst], u[src]
            for j in range(m):
                ud[j] += k * usrc[j]

    def add_col(dst, src, k):
        # col dst += k * col src, mirrored on V
        if k:
            for r in a:
                r[dst] += k * r[src]
            for r in v:
                r[dst] += k * r[src]

    for t in range(min(m, n)):
        # choose the pivot
        best = None
        for i in range(t, m):
            ai = a[i]
            for j in range(t, n):
                x = ai[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
        if best is None:
            break
        swap_rows(t, best[1])
        swap_cols(t, best[2])

        while True:
            dirty = False
            # clear the column below the pivot
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // a[t][t]))
                    if a[i][t]:
                        # remainder is strictly smaller: promote it
                        swap_rows(t, i)
                        dirty = True
            if dirty:
                continue
            # clear the row right of the pivot
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // a[t][t]))
                    if a[t][j]:
                        swap_cols(t, j)
                        dirty = True
            if dirty:
                continue
            # cross is clear; force the pivot to divide the rest of the block
            offender = None
            p = a[t][t]
            for i in range(t + 1, m):
                ai = a[i]
                for j in range(t + 1, n):
                    if ai[j] % p:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(t, offender, 1)

        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]

    d = IntegerMatrix.from_rows(a) if m else IntegerMatrix.zeros(0, n)
    factors = tuple(a[i][i] for i in range(min(m, n)) if a[i][i] != 0)
    return SmithDecomposition(
        U=IntegerMatrix.from_rows(u) if m else IntegerMatrix.zeros(0, 0),
        D=d,
        V=IntegerMatrix.from_rows(v) if n else IntegerMatrix.zeros(0, 0),
        invariant_factors=factors,
    )


def rank(matrix):
    """Rank over the rationals (= number of nonzero invariant factors)."""
    return len(smith_normal_form(matrix).invariant_factors)


def homology_at(boundary_out, boundary_in, degree=0):
    """Homology ker(boundary_out) / im(boundary_in) over the integers.

    ``boundary_out`` maps the middle group down; ``boundary_in`` maps into
    it, so ``boundary_in.rows`` must equal ``boundary_out.cols`` and the
    composition must vanish.
    """
    if boundary_in.rows != boundary_out.cols:
        raise DimensionMismatch(
            f"boundary_in has {boundary_in.rows} rows but boundary_out has"
            f" {boundary_out.cols} columns")
    if not (boundary_out @ boundary_in).is_zero():
        raise NotAComplex("boundary_out @ boundary_in is nonzero")
    snf_in = smith_normal_form(boundary_in)
    rank_in = len(snf_in.invariant_factors)
    betti = boundary_out.cols - rank(boundary_out) - rank_in
    torsion = tuple(d for d in snf_in.invariant_factors if d > 1)
    return HomologyGroup(degree=degree, betti=betti, torsion=torsion)
