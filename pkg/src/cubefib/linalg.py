"""Exact rational linear algebra: determinants, adjugates, congruence
diagonalization and inertia of symmetric matrices, quadratic-polynomial
extraction. No floating point anywhere."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence, Tuple

from .polynomials import IntPolynomial


# ---------------------------------------------------------------------------
# integer matrices


def int_matrix_det(m: Sequence[Sequence[int]]) -> int:
    """Determinant by fraction-free Bareiss elimination."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if n == 0:
        return 1
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


def int_matrix_adjugate_det(m: Sequence[Sequence[int]]) -> Tuple[List[List[int]], int]:
    n = len(m)
    det = int_matrix_det(m)
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [[m[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            adj[i][j] = (-1) ** (i + j) * int_matrix_det(sub)
    return adj, det


# ---------------------------------------------------------------------------
# rational matrices


class RationalMatrix:
    """Dense exact-rational matrix; small sizes only."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Sequence[Sequence]):
        e = [[Fraction(v) for v in row] for row in entries]
        rows = len(e)
        cols = len(e[0]) if rows else 0
        if any(len(r) != cols for r in e):
            raise ValueError("ragged matrix")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", tuple(tuple(r) for r in e))

    def __setattr__(self, *a):
        raise AttributeError("RationalMatrix is immutable")

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls([[0] * cols for _ in range(rows)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_symmetric(self) -> bool:
        return self.is_square() and all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i)
        )

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)]
        )

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(
            [
                [self.entries[i][j] - other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def scale(self, c) -> "RationalMatrix":
        c = Fraction(c)
        return RationalMatrix([[v * c for v in row] for row in self.entries])

    def __mul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        return RationalMatrix(
            [
                [
                    sum(self.entries[i][k] * other.entries[k][j] for k in range(self.cols))
                    for j in range(other.cols)
                ]
                for i in range(self.rows)
            ]
        )

    def matvec(self, v: Sequence) -> List[Fraction]:
        if len(v) != self.cols:
            raise ValueError("shape mismatch")
        v = [Fraction(x) for x in v]
        return [sum(self.entries[i][j] * v[j] for j in range(self.cols)) for i in range(self.rows)]

    def det(self) -> Fraction:
        if not self.is_square():
            raise ValueError("det of non-square matrix")
        a = [list(row) for row in self.entries]
        n = self.rows
        det = Fraction(1)
        for k in range(n):
            piv = None
            for i in range(k, n):
                if a[i][k]:
                    piv = i
                    break
            if piv is None:
                return Fraction(0)
            if piv != k:
                a[k], a[piv] = a[piv], a[k]
                det = -det
            det *= a[k][k]
            inv = 1 / a[k][k]
            for i in range(k + 1, n):
                if a[i][k]:
                    f = a[i][k] * inv
                    for j in range(k, n):
                        a[i][j] -= f * a[k][j]
        return det

    def rank(self) -> int:
        a = [list(row) for row in self.entries]
        rank = 0
        for col in range(self.cols):
            piv = None
            for i in range(rank, self.rows):
                if a[i][col]:
                    piv = i
                    break
            if piv is None:
                continue
            a[rank], a[piv] = a[piv], a[rank]
            inv = 1 / a[rank][col]
            for i in range(rank + 1, self.rows):
                if a[i][col]:
                    f = a[i][col] * inv
                    for j in range(col, self.cols):
                        a[i][j] -= f * a[rank][j]
            rank += 1
            if rank == self.rows:
                break
        return rank

    def inverse(self) -> "RationalMatrix":
        adj, det = self.adjugate_and_det()
        if det == 0:
            raise ValueError("singular matrix")
        return adj.scale(Fraction(1, 1) / det)

    def adjugate_and_det(self) -> Tuple["RationalMatrix", Fraction]:
        """Returns (adj M, det M) with M * adj M = det(M) * I, exactly."""
        if not self.is_square():
            raise ValueError("adjugate of non-square matrix")
        n = self.rows
        if n == 0:
            return RationalMatrix([]), Fraction(1)
        det = self.det()
        adj = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                sub = [
                    [self.entries[r][c] for c in range(n) if c != i]
                    for r in range(n)
                    if r != j
                ]
                if n == 1:
                    adj[i][j] = Fraction(1)
                else:
                    adj[i][j] = (-1) ** (i + j) * RationalMatrix(sub).det()
        return RationalMatrix(adj), det

    def tolist(self) -> List[List[Fraction]]:
        return [list(r) for r in self.entries]

    def __repr__(self):
        return f"RationalMatrix({[[str(v) for v in row] for row in self.entries]})"


def quadratic_form_value(Q: RationalMatrix, x: Sequence) -> Fraction:
    x = [Fraction(v) for v in x]
    return sum(
        Q.entries[i][j] * x[i] * x[j] for i in range(Q.rows) for j in range(Q.cols)
    )


# ---------------------------------------------------------------------------
# symmetric reduction: rank and inertia without floating point


def symmetric_diagonalize(Q: RationalMatrix) -> Tuple[RationalMatrix, List[Fraction]]:
    """Congruence diagonalization: returns (T, d) with T^t Q T = diag(d).

    Lagrange reduction with exact rationals. Zero or missing diagonal
    pivots are repaired by column/row moves or by mixing in a row that
    carries a nonzero off-diagonal entry.
    """
    if not Q.is_symmetric():
        raise ValueError("symmetric matrix required")
    n = Q.rows
    a = [[Fraction(v) for v in row] for row in Q.entries]
    t = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]

    def col_add(dst, src, factor):
        # x_src -> x_src + factor * x_dst corresponds to C_dst += factor*C_src
        for i in range(n):
            a[i][dst] += factor * a[i][src]
        for i in range(n):
            a[dst][i] += factor * a[src][i]
        for i in range(n):
            t[i][dst] += factor * t[i][src]

    def col_swap(i, j):
        for r in range(n):
            a[r][i], a[r][j] = a[r][j], a[r][i]
        for r in range(n):
            a[i][r], a[j][r] = a[j][r], a[i][r]
        for r in range(n):
            t[r][i], t[r][j] = t[r][j], t[r][i]

    for k in range(n):
        if a[k][k] == 0:
            # look for a later diagonal pivot
            piv = next((i for i in range(k + 1, n) if a[i][i] != 0), None)
            if piv is not None:
                col_swap(k, piv)
            else:
                # all remaining diagonal entries are 0: grab an off-diagonal one
                found = None
                for i in range(k, n):
                    for j in range(i + 1, n):
                        if a[i][j] != 0:
                            found = (i, j)
                            break
                    if found:
                        break
                if found is None:
                    break  # remaining block is zero
                i, j = found
                if i != k:
                    col_swap(k, i)
                    if j == k:
                        j = i
                col_add(k, j, Fraction(1))  # now a[k][k] = 2*a[k][j] != 0
        pivot = a[k][k]
        if pivot == 0:
            continue
        for j in range(k + 1, n):
            if a[k][j] != 0:
                col_add(j, k, -a[k][j] / pivot)
    diag = [a[i][i] for i in range(n)]
    return RationalMatrix(t), diag


def rank_signature_over_Q(Q: RationalMatrix) -> Tuple[int, int, int]:
    """(rank, positives, negatives) of a symmetric rational matrix, exact."""
    _, diag = symmetric_diagonalize(Q)
    pos = sum(1 for d in diag if d > 0)
    neg = sum(1 for d in diag if d < 0)
    return pos + neg, pos, neg


# ---------------------------------------------------------------------------
# quadratic polynomials F(x) = x^t Q x + B^t x + N


class QuadraticPolynomial:
    """Quadratic polynomial with exact data.

    Q is symmetric rational (off-diagonal denominators divide 2 when the
    polynomial has integer coefficients), B integer, N integer. The matrix
    convention is F(x) = x^t Q x + B^t x + N; the discriminant used for
    "bad prime" bookkeeping is det(2Q).
    """

    __slots__ = ("m", "Q", "B", "N")

    def __init__(self, Q: RationalMatrix, B: Sequence[int], N: int):
        if not Q.is_symmetric():
            raise ValueError("Q must be symmetric")
        if len(B) != Q.rows:
            raise ValueError("B has wrong length")
        object.__setattr__(self, "m", Q.rows)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "B", tuple(int(b) for b in B))
        object.__setattr__(self, "N", int(N))

    def __setattr__(self, *a):
        raise AttributeError("QuadraticPolynomial is immutable")

    @classmethod
    def from_polynomial(cls, p: IntPolynomial) -> "QuadraticPolynomial":
        """Extract (Q, B, N) from a polynomial of total degree <= 2."""
        if p.total_degree() > 2:
            raise ValueError("degree > 2")
        m = p.num_vars
        q = [[Fraction(0)] * m for _ in range(m)]
        b = [0] * m
        n = 0
        for exps, coef in p.terms.items():
            support = [i for i, e in enumerate(exps) if e]
            deg = sum(exps)
            if deg == 0:
                n = coef
            elif deg == 1:
                b[support[0]] = coef
            elif len(support) == 1:
                i = support[0]
                q[i][i] += coef
            else:
                i, j = support
                q[i][j] += Fraction(coef, 2)
                q[j][i] += Fraction(coef, 2)
        return cls(RationalMatrix(q), b, n)

    def to_polynomial(self) -> IntPolynomial:
        m = self.m
        terms = {}
        for i in range(m):
            for j in range(i, m):
                c = self.Q.entries[i][j] if i == j else 2 * self.Q.entries[i][j]
                if c:
                    if c.denominator != 1:
                        raise ValueError("non-integer coefficient")
                    e = [0] * m
                    e[i] += 1
                    e[j] += 1
                    terms[tuple(e)] = terms.get(tuple(e), 0) + int(c)
        for i, bi in enumerate(self.B):
            if bi:
                e = [0] * m
                e[i] = 1
                terms[tuple(e)] = terms.get(tuple(e), 0) + bi
        if self.N:
            terms[tuple([0] * m)] = self.N
        return IntPolynomial(m, terms)

    def evaluate(self, x: Sequence[int]) -> Fraction:
        v = quadratic_form_value(self.Q, x)
        v += sum(b * xi for b, xi in zip(self.B, x))
        return v + self.N

    def gradient_at(self, x: Sequence[int]) -> List[Fraction]:
        g = self.Q.matvec(x)
        return [2 * gi + bi for gi, bi in zip(g, self.B)]

    def two_Q_int(self) -> List[List[int]]:
        """The integer matrix 2Q."""
        out = []
        for row in self.Q.entries:
            r = []
            for v in row:
                w = 2 * v
                if w.denominator != 1:
                    raise ValueError("2Q is not integral")
                r.append(int(w))
            out.append(r)
        return out

    def disc(self) -> int:
        """det(2Q) as an integer."""
        return int_matrix_det(self.two_Q_int())

    def rank(self) -> int:
        return self.Q.rank()

    def rank_support(self) -> Tuple[int, int]:
        """(rank over Q, gcd of the order-rank minors of 2Q).

        Reduction mod a prime not dividing the gcd keeps the rank, so the
        gcd plays the role of the discriminant for rank-deficient forms;
        it equals |det 2Q| when the form is nondegenerate.
        """
        r = self.rank()
        if r == 0:
            return 0, 1
        two_q = self.two_Q_int()
        m = self.m
        from itertools import combinations
        from math import gcd as _gcd

        g = 0
        for rows in combinations(range(m), r):
            for cols in combinations(range(m), r):
                sub = [[two_q[i][j] for j in cols] for i in rows]
                g = _gcd(g, int_matrix_det(sub))
                if g == 1:
                    return r, 1
        return r, g

    def __repr__(self):
        return f"QuadraticPolynomial(m={self.m}, Q={self.Q!r}, B={self.B}, N={self.N})"
