"""Structural analysis of split cubic forms: the matrix of linear forms
M[y], fibration rank with symbolic verification, linear-block extraction,
degenerate-shape detectors, function-field rank classification of bilinear
bundles, and randomized dimension probes.

Convention: the symbolic matrix carried around is M2[y] = 2 M[y], the
integer matrix of twice the fibre quadratic part; ranks, minors-vanishing
and common linear factors are insensitive to the doubling.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from . import gridcount
from .linalg import RationalMatrix, rank_signature_over_Q, symmetric_diagonalize
from .polynomials import IntPolynomial, LinearChange, VariableSplit


class FalsificationAlarm(RuntimeError):
    """A structural fact the code relies on appears violated: this is an
    arithmetic bug or bad input, never to be swallowed."""


# ---------------------------------------------------------------------------
# raw dict-polynomial helpers (hot paths of minor expansion)

DPoly = Dict[Tuple[int, ...], int]


def _dp_add(a: DPoly, b: DPoly, sign: int = 1) -> DPoly:
    out = dict(a)
    for e, c in b.items():
        s = out.get(e, 0) + sign * c
        if s:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def _dp_mul(a: DPoly, b: DPoly) -> DPoly:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    out: DPoly = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            s = out.get(e, 0) + c1 * c2
            if s:
                out[e] = s
            else:
                del out[e]
    return out


def _dp_scale(a: DPoly, c: int) -> DPoly:
    if c == 0:
        return {}
    return {e: v * c for e, v in a.items()}


def _dp_eval(a: DPoly, point: Sequence[int]) -> int:
    total = 0
    for e, c in a.items():
        v = c
        for x, k in zip(point, e):
            if k:
                v *= x ** k
        total += v
    return total


def minor_det(entries: Sequence[Sequence[DPoly]], rows: Tuple[int, ...],
              cols: Tuple[int, ...], memo: dict) -> DPoly:
    """Determinant of the (rows x cols) submatrix, memoized across subsets."""
    key = (rows, cols)
    if key in memo:
        return memo[key]
    if len(rows) == 1:
        out = entries[rows[0]][cols[0]]
    else:
        out: DPoly = {}
        r0 = rows[0]
        rest = rows[1:]
        for idx, c in enumerate(cols):
            e = entries[r0][c]
            if not e:
                continue
            sub = minor_det(entries, rest, cols[:idx] + cols[idx + 1 :], memo)
            if not sub:
                continue
            out = _dp_add(out, _dp_mul(e, sub), 1 if idx % 2 == 0 else -1)
    memo[key] = out
    return out


def all_minors_vanish(entries, size: int, memo: dict, dim_cap: int = 12) -> Optional[Tuple]:
    """None if every size x size minor is the zero polynomial, else the
    first (rows, cols) with a nonzero minor."""
    m = len(entries)
    if m > dim_cap:
        raise ValueError(f"matrix dimension {m} exceeds the minor-enumeration cap {dim_cap}")
    if size > m:
        return None
    for rows in combinations(range(m), size):
        for cols in combinations(range(m), size):
            if minor_det(entries, rows, cols, memo):
                return rows, cols
    return None


# ---------------------------------------------------------------------------
# fibration data


@dataclass
class ConfidenceRecord:
    seed: int
    trials: int
    sample_ranks: Tuple[int, ...]


@dataclass
class FibrationData:
    split: VariableSplit
    F_list: List[IntPolynomial]        # x-quadratics, one per y variable
    q_list: List[IntPolynomial]        # y-quadratics, one per x variable
    R: IntPolynomial                   # cubic in y
    M2: List[List[DPoly]]              # 2 * M[y], entries linear in y
    rank: int
    witness: Tuple[Tuple[int, ...], Tuple[int, ...], IntPolynomial]
    confidence: ConfidenceRecord

    @property
    def m(self) -> int:
        return len(self.split.x_indices)

    @property
    def h(self) -> int:
        return len(self.split.y_indices)

    def M2_at(self, y: Sequence[int]) -> List[List[int]]:
        return [[_dp_eval(e, y) for e in row] for row in self.M2]

    def witness_minor_at(self, y: Sequence[int]) -> int:
        return self.witness[2].evaluate(list(y))

    def to_report(self) -> dict:
        rows, cols, poly = self.witness
        return {
            "m": self.m,
            "h": self.h,
            "rank": self.rank,
            "witness_rows": list(rows),
            "witness_cols": list(cols),
            "witness_minor": poly.to_text(),
            "seed": self.confidence.seed,
            "trials": self.confidence.trials,
        }


def split_cubic(C: IntPolynomial, split: VariableSplit):
    """Decompose C = sum_i y_i F_i(x) + sum_j x_j q_j(y) + R(y)."""
    if not C.is_homogeneous(3):
        raise ValueError("C must be a homogeneous cubic")
    split.validate_against(C)
    xs, ys = split.x_indices, split.y_indices
    xpos = {v: i for i, v in enumerate(xs)}
    ypos = {v: i for i, v in enumerate(ys)}
    m, h = len(xs), len(ys)
    F_terms: List[DPoly] = [dict() for _ in range(h)]
    q_terms: List[DPoly] = [dict() for _ in range(m)]
    R_terms: DPoly = {}
    for exps, coef in C.terms.items():
        xdeg = sum(exps[i] for i in xs)
        if xdeg == 3:
            raise ValueError(
                "split is not an h-decomposition: monomial of x-degree 3 present"
            )
        if xdeg == 2:
            (yvar,) = [v for v in ys if exps[v]]
            xe = tuple(exps[v] for v in xs)
            F_terms[ypos[yvar]][xe] = coef
        elif xdeg == 1:
            (xvar,) = [v for v in xs if exps[v]]
            ye = tuple(exps[v] for v in ys)
            q_terms[xpos[xvar]][ye] = coef
        else:
            ye = tuple(exps[v] for v in ys)
            R_terms[ye] = coef
    F_list = [IntPolynomial(m, t) for t in F_terms]
    q_list = [IntPolynomial(h, t) for t in q_terms]
    return F_list, q_list, IntPolynomial(h, R_terms)


def bundle_matrix(F_list: Sequence[IntPolynomial], h: int) -> List[List[DPoly]]:
    """M2[y] with entry (a,b) = sum_i y_i * d^2 F_i / dx_a dx_b."""
    if not F_list:
        raise ValueError("empty bundle")
    m = F_list[0].num_vars
    entries: List[List[DPoly]] = [[dict() for _ in range(m)] for _ in range(m)]
    for i, F in enumerate(F_list):
        ye = tuple(1 if k == i else 0 for k in range(h))
        for exps, coef in F.terms.items():
            sup = [k for k, e in enumerate(exps) if e]
            if sum(exps) != 2:
                raise ValueError("bundle entries must be quadratic forms")
            if len(sup) == 1:
                a = sup[0]
                entries[a][a][ye] = entries[a][a].get(ye, 0) + 2 * coef
            else:
                a, b = sup
                entries[a][b][ye] = entries[a][b].get(ye, 0) + coef
                entries[b][a][ye] = entries[b][a].get(ye, 0) + coef
    return entries


def _int_matrix_rank(rows: List[List[int]]) -> int:
    return RationalMatrix(rows).rank()


def fibration_rank(
    M2: List[List[DPoly]],
    h: int,
    seed: int = 0,
    trials: int = 6,
    dim_cap: int = 12,
) -> Tuple[int, Tuple[Tuple[int, ...], Tuple[int, ...], IntPolynomial], ConfidenceRecord]:
    """Rank of M[y] over Q(y): randomized guess, then symbolic proof.

    The witness minor is expanded symbolically and must be nonzero; every
    minor of the next order is expanded and must vanish identically. A
    mismatch with the randomized phase raises FalsificationAlarm.
    """
    m = len(M2)
    rng = random.Random(seed)
    best_rank = 0
    best_point = None
    sample_ranks = []
    for _ in range(trials):
        y = [rng.randint(-10 ** 6, 10 ** 6) for _ in range(h)]
        mat = [[_dp_eval(e, y) for e in row] for row in M2]
        rk = _int_matrix_rank(mat)
        sample_ranks.append(rk)
        if rk > best_rank:
            best_rank = rk
            best_point = y
    record = ConfidenceRecord(seed, trials, tuple(sample_ranks))
    memo: dict = {}
    if best_rank == 0:
        missing = all_minors_vanish(M2, 1, memo, dim_cap)
        if missing is not None:
            raise FalsificationAlarm("sampling said rank 0 but an entry is nonzero")
        return 0, ((), (), IntPolynomial.constant(h, 1)), record
    # witness subset from pivoted elimination at the best sample
    rows, cols = _pivot_subsets(M2, best_point, best_rank)
    det = minor_det(M2, rows, cols, memo)
    if not det:
        raise FalsificationAlarm("randomized witness minor vanished symbolically")
    offender = all_minors_vanish(M2, best_rank + 1, memo, dim_cap)
    if offender is not None:
        raise FalsificationAlarm(
            f"randomized rank {best_rank} but minor {offender} of order "
            f"{best_rank + 1} is not identically zero"
        )
    return best_rank, (rows, cols, IntPolynomial(h, det)), record


def _pivot_subsets(M2, y, rank):
    """Row/column subsets of a rank-witnessing minor at the sample point."""
    m = len(M2)
    mat = [[Fraction(_dp_eval(M2[i][j], y)) for j in range(m)] for i in range(m)]
    row_used: List[int] = []
    col_used: List[int] = []
    rows_left = list(range(m))
    cols_left = list(range(m))
    work = [row[:] for row in mat]
    for _ in range(rank):
        piv = None
        for i in rows_left:
            for j in cols_left:
                if work[i][j]:
                    piv = (i, j)
                    break
            if piv:
                break
        if piv is None:
            raise FalsificationAlarm("pivot search ran out before reaching the sampled rank")
        pi, pj = piv
        row_used.append(pi)
        col_used.append(pj)
        rows_left.remove(pi)
        cols_left.remove(pj)
        inv = 1 / work[pi][pj]
        for i in rows_left:
            f = work[i][pj] * inv
            if f:
                for j in cols_left:
                    work[i][j] -= f * work[pi][j]
    return tuple(sorted(row_used)), tuple(sorted(col_used))


def build_fibration(
    C: IntPolynomial, split: VariableSplit, seed: int = 0, trials: int = 6,
    dim_cap: int = 12,
) -> FibrationData:
    F_list, q_list, R = split_cubic(C, split)
    h = len(split.y_indices)
    M2 = bundle_matrix(F_list, h)
    rank, witness, record = fibration_rank(M2, h, seed, trials, dim_cap)
    return FibrationData(split, F_list, q_list, R, M2, rank, witness, record)


# ---------------------------------------------------------------------------
# linear-block extraction (rank-deficient bundles)


@dataclass
class LinearBlockResult:
    change: LinearChange             # x-side substitution (scaled integer)
    combination: Tuple[int, ...]     # y-combination whose matrix attains rank r
    block_size: int                  # n - h - r certified linear variables
    certificate: List[List[IntPolynomial]]  # the (i,j > r) entries, all zero


def _search_rank_r_combination(M2, h, r, seed=0, budget=4000):
    """Small integer y-combination c with rank M2[c] = r."""
    m = len(M2)

    def rank_at(c):
        return _int_matrix_rank([[_dp_eval(e, c) for e in row] for row in M2])

    for i in range(h):
        c = [0] * h
        c[i] = 1
        if rank_at(c) == r:
            return tuple(c)
    tried = 0
    for c in product(range(-2, 3), repeat=h):
        if not any(c):
            continue
        tried += 1
        if tried > budget:
            break
        if rank_at(list(c)) == r:
            return tuple(c)
    rng = random.Random(seed)
    for _ in range(200):
        c = [rng.randint(-10 ** 3, 10 ** 3) for _ in range(h)]
        if rank_at(c) == r:
            return tuple(c)
    return None


def _congruence_to_front(mat: List[List[int]]):
    """Rational T with T^t mat T diagonal, nonzero pivots first; returns
    (T as integer matrix, denominator, number of nonzeros)."""
    q = RationalMatrix(mat)
    t, diag = symmetric_diagonalize(q)
    order = sorted(range(len(diag)), key=lambda i: (diag[i] == 0))
    perm = [[1 if order[j] == i else 0 for j in range(len(diag))] for i in range(len(diag))]
    tp = t * RationalMatrix(perm)
    den = 1
    for row in tp.entries:
        for v in row:
            den = den * v.denominator // gcd(den, v.denominator)
    tint = [[int(v * den) for v in row] for row in tp.entries]
    nonzero = sum(1 for d in diag if d != 0)
    return tint, den, nonzero


def extract_linear_block(fd: FibrationData, seed: int = 0) -> LinearBlockResult:
    """Change of x-variables after which the last n-h-r of them occur only
    linearly; certified by the vanishing of the corresponding second
    partials as polynomials."""
    m, h, r = fd.m, fd.h, fd.rank
    if r >= m:
        return LinearBlockResult(LinearChange.identity(m), (1,) + (0,) * (h - 1), 0, [])
    if r == 0:
        cert = [[IntPolynomial(h, dict(e)) for e in row] for row in fd.M2]
        return LinearBlockResult(LinearChange.identity(m), (1,) + (0,) * (h - 1), m, cert)
    c = _search_rank_r_combination(fd.M2, h, r, seed)
    if c is None:
        raise ValueError("no small integer combination attains the fibration rank")
    mat = [[_dp_eval(e, c) for e in row] for row in fd.M2]
    tint, den, nonzero = _congruence_to_front(mat)
    if nonzero != r:
        raise FalsificationAlarm("diagonalized combination lost rank")
    # transform M2[y] symbolically: S^t M2 S with the integer-scaled S
    transformed = _congruence_transform_bundle(fd.M2, tint)
    block = [
        [IntPolynomial(h, transformed[i][j]) for j in range(r, m)] for i in range(r, m)
    ]
    for i, row in enumerate(block):
        for j, e in enumerate(row):
            if not e.is_zero():
                memo: dict = {}
                offender = all_minors_vanish(fd.M2, r + 1, memo)
                raise FalsificationAlarm(
                    f"second partial ({r + i},{r + j}) nonzero after reduction; "
                    f"an order-{r + 1} minor must be nonzero (found {offender}), "
                    "contradicting the verified rank"
                )
    return LinearBlockResult(LinearChange(tint, den), c, m - r, block)


def _congruence_transform_bundle(M2, S):
    """S^t M2[y] S for an integer matrix S, entries as dict-polys."""
    m = len(M2)
    inter = [[dict() for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(m):
            acc: DPoly = {}
            for k in range(m):
                if S[k][j]:
                    acc = _dp_add(acc, _dp_scale(M2[i][k], S[k][j]))
            inter[i][j] = acc
    out = [[dict() for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(m):
            acc = {}
            for k in range(m):
                if S[k][i]:
                    acc = _dp_add(acc, _dp_scale(inter[k][j], S[k][i]))
            out[i][j] = acc
    return out


# ---------------------------------------------------------------------------
# Hypothesis-1 detector


@dataclass
class H1Result:
    holds: bool
    l: Optional[IntPolynomial]               # the common linear form in y
    N1: Optional[RationalMatrix]             # constant matrix with 2 M[y] = l(y) N1
    F_definite_full: Optional[bool]          # semidefinite of full rank n-h
    signature: Optional[Tuple[int, int, int]]
    certificate: Optional[IntPolynomial]     # 2 Q_y - l * (x^t N1 x), must be 0
    reason: str = ""


def detect_hypothesis_h1(fd: FibrationData) -> H1Result:
    """True iff all entries of M[y] are rational multiples of one linear form
    and the resulting constant matrix is semidefinite of rank r."""
    m, h, r = fd.m, fd.h, fd.rank
    pivot: Optional[DPoly] = None
    for row in fd.M2:
        for e in row:
            if e:
                pivot = e
                break
        if pivot:
            break
    if pivot is None:
        return H1Result(False, None, None, None, None, None, "zero bundle")
    # primitive form l from the pivot entry
    g = 0
    for c in pivot.values():
        g = gcd(g, c)
    lead_key = min(pivot)
    sgn = 1 if pivot[lead_key] > 0 else -1
    l_terms = {e: sgn * c // g for e, c in pivot.items()}
    # proportionality of every entry to l: cross-determinants vanish
    ratios = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            e = fd.M2[i][j]
            if not e:
                continue
            for key in e:
                if key not in l_terms:
                    return H1Result(False, None, None, None, None, None,
                                    "entry support exceeds the candidate line")
            ratio = Fraction(e[lead_key] if lead_key in e else 0, l_terms[lead_key])
            for key, lc in l_terms.items():
                if Fraction(e.get(key, 0), 1) != ratio * lc:
                    return H1Result(False, None, None, None, None, None,
                                    "entries are not proportional to a single linear form")
            ratios[i][j] = ratio
    N1 = RationalMatrix(ratios)
    rank, pos, neg = rank_signature_over_Q(N1)
    if rank != r:
        return H1Result(False, IntPolynomial(h, l_terms), N1, None, (rank, pos, neg), None,
                        f"factor matrix has rank {rank} != fibration rank {r}")
    semidefinite = pos == 0 or neg == 0
    if not semidefinite:
        return H1Result(False, IntPolynomial(h, l_terms), N1, False, (rank, pos, neg), None,
                        "factor matrix is indefinite")
    # certificate: 2 Q_y(x) == l(y) * x^t N1 x after clearing denominators
    den = 1
    for row in N1.entries:
        for v in row:
            den = den * v.denominator // gcd(den, v.denominator)
    n_all = m + h
    lhs = IntPolynomial.zero(n_all)
    for i in range(m):
        for j in range(m):
            if fd.M2[i][j]:
                xe = [0] * n_all
                xe[i] += 1
                xe[j] += 1
                mono = IntPolynomial(n_all, {tuple(xe): den})
                lpoly = IntPolynomial(
                    n_all, {tuple([0] * m + list(e)): c for e, c in fd.M2[i][j].items()}
                )
                lhs = lhs + mono * lpoly
    rhs = IntPolynomial.zero(n_all)
    lf = IntPolynomial(n_all, {tuple([0] * m + list(e)): c for e, c in l_terms.items()})
    for i in range(m):
        for j in range(m):
            v = N1.entries[i][j] * den
            if v:
                xe = [0] * n_all
                xe[i] += 1
                xe[j] += 1
                rhs = rhs + IntPolynomial(n_all, {tuple(xe): int(v)}) * lf
    cert = lhs - rhs
    if not cert.is_zero():
        raise FalsificationAlarm("H1 certificate failed after proportionality checks")
    return H1Result(True, IntPolynomial(h, l_terms), N1, rank == m,
                    (rank, pos, neg), cert, "")


# ---------------------------------------------------------------------------
# indefinite specialization witness


@dataclass
class IndefiniteWitness:
    point: Tuple[int, ...]
    signature: Tuple[int, int, int]
    box_radius: Fraction     # corner-check certificate only, not a proof


def indefinite_witness(fd: FibrationData, seed: int = 0, tries: int = 2000) -> IndefiniteWitness:
    """Rational point u with rank M[u] = r and Q_u indefinite; the returned
    box radius only certifies the witness minor at the box corners."""
    if fd.rank < 1:
        raise ValueError("rank 0 bundle has no indefinite specialization")
    h1 = detect_hypothesis_h1(fd)
    if h1.holds:
        raise ValueError("bundle satisfies the single-form hypothesis; no witness exists")
    rng = random.Random(seed)
    candidates = []
    for i in range(fd.h):
        for s in (1, -1):
            c = [0] * fd.h
            c[i] = s
            candidates.append(c)
    for c in product((-1, 0, 1), repeat=fd.h):
        if any(c):
            candidates.append(list(c))
        if len(candidates) > 500:
            break
    for _ in range(tries):
        candidates.append([rng.randint(-50, 50) for _ in range(fd.h)])
    for u in candidates:
        mat = fd.M2_at(u)
        rank, pos, neg = rank_signature_over_Q(RationalMatrix(mat))
        if rank == fd.rank and pos > 0 and neg > 0:
            if fd.witness_minor_at(u) == 0:
                continue
            radius = Fraction(1)
            while radius > Fraction(1, 1024):
                ok = all(
                    fd.witness_minor_at([ui + si * radius for ui, si in zip(u, signs)]) != 0
                    for signs in product((-1, 1), repeat=min(fd.h, 13))
                ) if fd.h <= 13 else True
                if ok:
                    break
                radius /= 2
            return IndefiniteWitness(tuple(u), (rank, pos, neg), radius)
    raise ValueError("indefinite witness search budget exhausted")


# ---------------------------------------------------------------------------
# linear factors of quadratic forms (pi' common-factor detector)


def linear_factors_of_quadratic(q: IntPolynomial) -> List[IntPolynomial]:
    """Rational linear factors of a quadratic form, primitive-normalized.

    Rank > 2 has none; rank 1 is a scaled square; rank 2 splits over Q iff
    the discriminant of its binary reduction is a perfect square.
    """
    from .linalg import QuadraticPolynomial

    if q.is_zero() or not q.is_homogeneous(2):
        raise ValueError("nonzero quadratic form required")
    k = q.num_vars
    Q = QuadraticPolynomial.from_polynomial(q)
    t, diag = symmetric_diagonalize(Q.Q)
    nonzero = [i for i, d in enumerate(diag) if d != 0]
    rank = len(nonzero)
    if rank > 2:
        return []
    # inverse transform: rows of t^{-1} express old coordinates z = t w, so
    # w_i as a form in the original variables is the i-th row of t^{-1}
    tinv = t.inverse()

    def row_form(coeffs: Sequence[Fraction]) -> IntPolynomial:
        den = 1
        for v in coeffs:
            den = den * v.denominator // gcd(den, v.denominator)
        ints = [int(v * den) for v in coeffs]
        g = 0
        for v in ints:
            g = gcd(g, v)
        lead = next(v for v in ints if v)
        sgn = 1 if lead > 0 else -1
        return IntPolynomial.linear_form([sgn * v // g for v in ints])

    if rank == 1:
        i = nonzero[0]
        w = row_form(tinv.entries[i])
        return [w]
    i, j = nonzero
    a, b = diag[i], diag[j]
    # a w_i^2 + b w_j^2 factors over Q iff -b/a is a square
    ratio = -b / a
    if ratio < 0:
        return []
    num, den = ratio.numerator, ratio.denominator
    from math import isqrt

    rn, rd = isqrt(num), isqrt(den)
    if rn * rn != num or rd * rd != den:
        return []
    s = Fraction(rn, rd)
    wi = tinv.entries[i]
    wj = tinv.entries[j]
    f1 = row_form([x + s * y for x, y in zip(wi, wj)])
    f2 = row_form([x - s * y for x, y in zip(wi, wj)])
    return [f1, f2] if f1 != f2 else [f1]


def divides_form(l: IntPolynomial, f: IntPolynomial) -> bool:
    """Whether the linear form l divides the homogeneous form f: f restricted
    to the hyperplane l = 0 must vanish, checked by an integral substitution."""
    if l.total_degree() != 1:
        raise ValueError("divisor must be linear")
    n = f.num_vars
    coeffs = [l.coefficient(tuple(1 if i == j else 0 for i in range(n))) for j in range(n)]
    piv = next(j for j, c in enumerate(coeffs) if c)
    lp = coeffs[piv]
    images = []
    for j in range(n):
        if j == piv:
            images.append(
                IntPolynomial.linear_form([-c if i != piv else 0 for i, c in enumerate(coeffs)])
            )
        else:
            images.append(IntPolynomial.variable(n, j, lp))
    return f.substitute_polys(images).is_zero()


def divide_form_by_linear(f: IntPolynomial, l: IntPolynomial) -> IntPolynomial:
    """Exact quotient f / l for a homogeneous f divisible by the linear l."""
    n = f.num_vars
    coeffs = [l.coefficient(tuple(1 if i == j else 0 for i in range(n))) for j in range(n)]
    piv = next(j for j, c in enumerate(coeffs) if c)
    lp = coeffs[piv]
    # long division along the pivot variable
    remainder = dict(f.terms)
    quotient: DPoly = {}
    while remainder:
        # take the term with the highest pivot-degree
        e = max(remainder, key=lambda t: (t[piv], t))
        c = remainder[e]
        if c % lp != 0:
            # scale the whole computation: f divisible by l over Q means the
            # quotient may be rational; clear by multiplying f by lp^deg first
            raise ArithmeticError("quotient is not integral; caller must clear content")
        qe = list(e)
        qe[piv] -= 1
        if qe[piv] < 0:
            raise ArithmeticError("division left a remainder; l does not divide f")
        qc = c // lp
        quotient[tuple(qe)] = quotient.get(tuple(qe), 0) + qc
        for j, lc in enumerate(coeffs):
            if lc:
                te = list(qe)
                te[j] += 1
                key = tuple(te)
                s = remainder.get(key, 0) - qc * lc
                if s:
                    remainder[key] = s
                else:
                    remainder.pop(key, None)
    return IntPolynomial(n, quotient)


def divide_form_by_linear_rational(f, l) -> Tuple[IntPolynomial, int]:
    """Quotient as (IntPolynomial, denominator) even when not integral."""
    n = f.num_vars
    deg = f.total_degree()
    coeffs = [l.coefficient(tuple(1 if i == j else 0 for i in range(n))) for j in range(n)]
    piv = next(j for j, c in enumerate(coeffs) if c)
    lp = coeffs[piv]
    scale = abs(lp) ** max(deg - 1, 0)
    q = divide_form_by_linear(f * scale, l)
    den = scale
    g = den
    for c in q.terms.values():
        g = gcd(g, c)
    g = g or 1
    return IntPolynomial(n, {e: c // g for e, c in q.terms.items()}), den // g


@dataclass
class CommonFactorResult:
    factor: Optional[IntPolynomial]
    cofactors: List[Tuple[IntPolynomial, int]]   # (linear form, denominator) per Q_i
    verified: bool


def detect_common_linear_factor_Qi(
    C: IntPolynomial, split: VariableSplit
) -> Optional[CommonFactorResult]:
    """For C = sum x_i Q_i(y) + R(y): a linear form dividing every Q_i, with
    the certified cofactors, or None."""
    if split.role != "pi_prime":
        raise ValueError("requires a linear-fibre split")
    _, q_list, _ = split_cubic(C, split)
    nonzero = [q for q in q_list if not q.is_zero()]
    if not nonzero:
        raise ValueError("degenerate input: all Q_i vanish")
    candidates = linear_factors_of_quadratic(nonzero[0])
    for l in candidates:
        if all(divides_form(l, q) for q in nonzero):
            cofs = []
            for q in q_list:
                if q.is_zero():
                    cofs.append((IntPolynomial.zero(q.num_vars), 1))
                else:
                    quo, den = divide_form_by_linear_rational(q, l)
                    assert (l * quo) == q * den
                    cofs.append((quo, den))
            return CommonFactorResult(l, cofs, True)
    return None


# ---------------------------------------------------------------------------
# function-field rank classification of x-linear, y-quadratic bundles


@dataclass
class Rank2Shape:
    shape: str                        # "option1" | "exps2psi" | "integral" | "low-rank"
    rank_over_K: int
    kappa: Optional[Fraction] = None
    y_change: Optional[LinearChange] = None
    combination: Optional[Tuple[int, ...]] = None
    factor_pieces: Optional[dict] = None
    delta_relations_ok: Optional[bool] = None
    notes: str = ""


def bilinear_bundle_matrix(psi_list: Sequence[IntPolynomial], v: int) -> List[List[DPoly]]:
    """A2[x] for Psi = sum x_i psi_i(y): entry (a,b) is the linear form in x
    carrying twice the y_a y_b coefficient."""
    if not psi_list:
        raise ValueError("empty bundle")
    myv = psi_list[0].num_vars
    entries: List[List[DPoly]] = [[dict() for _ in range(myv)] for _ in range(myv)]
    for i, psi in enumerate(psi_list):
        xe = tuple(1 if k == i else 0 for k in range(v))
        for exps, coef in psi.terms.items():
            sup = [k for k, e in enumerate(exps) if e]
            if sum(exps) != 2:
                raise ValueError("psi_i must be quadratic forms")
            if len(sup) == 1:
                a = sup[0]
                entries[a][a][xe] = entries[a][a].get(xe, 0) + 2 * coef
            else:
                a, b = sup
                entries[a][b][xe] = entries[a][b].get(xe, 0) + coef
                entries[b][a][xe] = entries[b][a].get(xe, 0) + coef
    return entries


def _psi_independent(psi_list: Sequence[IntPolynomial]) -> bool:
    """Linear independence over Q of the coefficient vectors (x-nondegeneracy)."""
    keys = sorted({e for psi in psi_list for e in psi.terms})
    rows = [[Fraction(psi.terms.get(e, 0)) for e in keys] for psi in psi_list]
    if not keys:
        return False
    return RationalMatrix(rows).rank() == len(psi_list)


def _pairwise_proportional(psi_list: Sequence[IntPolynomial]) -> bool:
    nonzero = [p for p in psi_list if not p.is_zero()]
    if len(nonzero) <= 1:
        return True
    base = nonzero[0]
    key0 = next(iter(base.terms))
    for p in nonzero[1:]:
        # cross-multiplication: p * base[key0] == base * p[key0]
        if p * base.terms[key0] != base * p.terms.get(key0, 0):
            return False
    return True


def classify_rank2_bundle(
    psi_list: Sequence[IntPolynomial], seed: int = 0, dim_cap: int = 12
) -> Rank2Shape:
    """Classify Psi = sum x_i psi_i(y) by its rank over K = Q(x).

    rank >= 3 with irreducible, x-nondegenerate Psi reports the
    geometrically-integral branch; rank 2 is matched against the two
    normal forms, extracting kappa and verifying the factorization and the
    Delta-relations symbolically. A rank-2 bundle matching neither shape
    raises FalsificationAlarm.
    """
    v = len(psi_list)
    my = psi_list[0].num_vars
    A2 = bilinear_bundle_matrix(psi_list, v)
    rank, witness, record = fibration_rank(A2, v, seed=seed, dim_cap=dim_cap)
    if rank >= 3:
        nondeg = _psi_independent(psi_list)
        common = None
        nz = [p for p in psi_list if not p.is_zero()]
        for l in linear_factors_of_quadratic(nz[0]) if nz else []:
            if all(divides_form(l, p) for p in nz):
                common = l
                break
        reducible = common is not None or _pairwise_proportional(psi_list)
        if nondeg and not reducible and v >= 4:
            return Rank2Shape("integral", rank, notes="irreducible, x-nondegenerate, rank >= 3")
        return Rank2Shape(
            "integral" if not reducible else "low-rank",
            rank,
            notes="rank >= 3"
            + ("" if nondeg else "; x-degenerate")
            + ("; reducible over Q" if reducible else "")
            + ("; needs v >= 4 for the integrality conclusion" if v < 4 else ""),
        )
    if rank < 2:
        return Rank2Shape("low-rank", rank, notes="rank over K below 2")

    c = _search_rank_r_combination(A2, v, 2, seed=seed)
    if c is None:
        raise FalsificationAlarm("rank 2 over K but no rank-2 specialization found")
    mat = [[_dp_eval(e, c) for e in row] for row in A2]
    tint, den, nonzero = _congruence_to_front(mat)
    if nonzero != 2:
        raise FalsificationAlarm("rank-2 specialization failed to diagonalize to rank 2")
    At = _congruence_transform_bundle(A2, tint)
    ych = LinearChange(tint, den)
    # lower-right block must vanish identically (the bordered-minor argument)
    for i in range(2, my):
        for j in range(2, my):
            if At[i][j]:
                raise FalsificationAlarm("rank-2 bundle with nonzero lower-right block")
    mixed = [j for j in range(2, my) if At[0][j] or At[1][j]]
    if not mixed:
        pieces = {
            "a00": IntPolynomial(v, At[0][0]),
            "a01": IntPolynomial(v, At[0][1]),
            "a11": IntPolynomial(v, At[1][1]),
        }
        return Rank2Shape("option1", 2, y_change=ych, combination=c, factor_pieces=pieces,
                          notes="depends on two y-variables after the change")
    # Schur quantities D(i,j) = a00 a_ij - a0i a0j for the matrix convention;
    # rank 2 with a00 in K^* forces D(1,1) D(i,j) = D(1,i) D(1,j)
    a00, a01, a11 = At[0][0], At[0][1], At[1][1]
    deltas = {
        i: _dp_add(_dp_mul(a00, At[1][i]), _dp_mul(a01, At[0][i]), -1)
        for i in range(2, my)
    }
    S = [i for i in range(2, my) if At[0][i] or At[1][i]]
    # kappa from a_{1i} = kappa a_{0i} on S, constant across S
    kappa = None
    for i in S:
        a0i, a1i = At[0][i], At[1][i]
        if not a0i:
            raise FalsificationAlarm("rank-2 bundle: a1i nonzero with a0i zero")
        key = next(iter(a0i))
        cand = Fraction(a1i.get(key, 0), a0i[key])
        if _dp_add(_dp_scale(a0i, cand.numerator), _dp_scale(a1i, -cand.denominator)):
            raise FalsificationAlarm("rank-2 bundle: a1i not proportional to a0i")
        if kappa is None:
            kappa = cand
        elif kappa != cand:
            raise FalsificationAlarm("rank-2 bundle: kappa differs across S")
    kn, kd = kappa.numerator, kappa.denominator
    # a11 = 2 kappa a01 - kappa^2 a00 (the constant-factor condition)
    lhs = _dp_scale(a11, kd * kd)
    rhs = _dp_add(_dp_scale(a01, 2 * kn * kd), _dp_scale(a00, kn * kn), -1)
    if _dp_add(lhs, rhs, -1):
        raise FalsificationAlarm("rank-2 bundle: a11 != 2 kappa a01 - kappa^2 a00")
    # Delta relations D(1,1) D(i,j) = D(1,i) D(1,j) for i, j >= 2
    d11 = _dp_add(_dp_mul(a00, a11), _dp_mul(a01, a01), -1)
    for i in range(2, my):
        for j in range(2, my):
            dij = _dp_add(_dp_mul(a00, At[i][j]), _dp_mul(At[0][i], At[0][j]), -1)
            if _dp_add(_dp_mul(d11, dij), _dp_mul(deltas[i], deltas[j]), -1):
                raise FalsificationAlarm("rank-2 bundle: Delta relations fail")
    # factorization identity: kd^2 y^t At y ==
    #   (kd y0 + kn y1)(kd a00 y0 + (2 kd a01 - kn a00) y1 + 2 kd sum a0i y_i)
    nv = v + my

    def lift_x(d: DPoly) -> IntPolynomial:
        return IntPolynomial(nv, {tuple(list(e) + [0] * my): c for e, c in d.items()})

    def yvar(i: int) -> IntPolynomial:
        return IntPolynomial.variable(nv, v + i)

    quad = IntPolynomial.zero(nv)
    for i in range(my):
        for j in range(my):
            if At[i][j]:
                quad = quad + lift_x(At[i][j]) * yvar(i) * yvar(j)
    left = yvar(0) * kd + yvar(1) * kn
    y1_coeff = _dp_add(_dp_scale(a01, 2 * kd), _dp_scale(a00, kn), -1)
    inner = lift_x(a00) * yvar(0) * kd + lift_x(y1_coeff) * yvar(1)
    for i in S:
        inner = inner + lift_x(At[0][i]) * yvar(i) * (2 * kd)
    identity = quad * (kd * kd) - left * inner
    if not identity.is_zero():
        raise FalsificationAlarm("rank-2 factorization identity failed")
    pieces = {
        "constant_factor": (kd, kn),   # kd y0 + kn y1
        "a00": IntPolynomial(v, a00),
        "a01": IntPolynomial(v, a01),
        "linear_coeffs": {i: IntPolynomial(v, At[0][i]) for i in S},
    }
    return Rank2Shape("exps2psi", 2, kappa=kappa, y_change=ych, combination=c,
                      factor_pieces=pieces, delta_relations_ok=True)


# ---------------------------------------------------------------------------
# order-3 minors: common linear factor and the codimension probe


def _linear_factors_of_cubic(poly: IntPolynomial) -> List[IntPolynomial]:
    """Rational linear factors of a homogeneous cubic via sympy, normalized
    to primitive integer forms. Verification stays in-house."""
    import sympy

    syms = sympy.symbols(f"y0:{poly.num_vars}")
    expr = sympy.Integer(0)
    for e, c in poly.terms.items():
        term = sympy.Integer(c)
        for s, k in zip(syms, e):
            if k:
                term *= s ** k
        expr += term
    out = []
    _, factors = sympy.factor_list(sympy.Poly(expr, *syms))
    for fac, mult in factors:
        p = sympy.Poly(fac, *syms)
        if p.total_degree() != 1:
            continue
        coeffs = [0] * poly.num_vars
        for mono, coef in zip(p.monoms(), p.coeffs()):
            idx = mono.index(1)
            coeffs[idx] = int(coef)
        g = 0
        for v in coeffs:
            g = gcd(g, v)
        lead = next(v for v in coeffs if v)
        sgn = 1 if lead > 0 else -1
        cand = IntPolynomial.linear_form([sgn * v // g for v in coeffs])
        if divides_form(cand, poly):
            out.append(cand)
    return out


@dataclass
class Order3FactorResult:
    status: str                       # "factor-found" | "no-common-factor" |
                                      # "suspected-nonlinear" | "unknown"
    factor: Optional[IntPolynomial]
    y_change: Optional[LinearChange]
    slice_rank_ok: Optional[bool]     # order-3 minors vanish on the z1 = 0 slice
    nonzero_minors: int
    codim_probe: Optional[dict]


def order3_minors(M2: List[List[DPoly]], h: int, dim_cap: int = 12) -> List[IntPolynomial]:
    m = len(M2)
    if m > dim_cap:
        raise ValueError("matrix dimension exceeds the minor cap")
    memo: dict = {}
    out = []
    for rows in combinations(range(m), 3):
        for cols in combinations(range(m), 3):
            d = minor_det(M2, rows, cols, memo)
            if d:
                out.append(IntPolynomial(h, d))
    return out


def _restrict_to_pencil(poly: IntPolynomial, u: Sequence[int], w: Sequence[int]) -> List[int]:
    """Coefficients of poly(s*u + t*w) as a binary form in (s, t), degree 3."""
    h = poly.num_vars
    coeffs = [0, 0, 0, 0]
    # expand via substitution polynomials in 2 variables
    images = [IntPolynomial.linear_form([u[i], w[i]]) for i in range(h)]
    sub = poly.substitute_polys(images)
    for (es, et), c in sub.terms.items():
        coeffs[et] += c
    return coeffs


def _binary_gcd_degree(coeff_lists: List[List[int]]) -> int:
    """Degree of the gcd of binary cubics given by t-coefficient lists."""

    def poly_mod(a, b):
        a = [Fraction(x) for x in a]
        b = [Fraction(x) for x in b]
        while a and a[-1] == 0:
            a.pop()
        while b and b[-1] == 0:
            b.pop()
        if not b:
            return a
        while len(a) >= len(b) and a:
            f = a[-1] / b[-1]
            shift = len(a) - len(b)
            for i in range(len(b)):
                a[shift + i] -= f * b[i]
            while a and a[-1] == 0:
                a.pop()
        return a

    cur = None
    for c in coeff_lists:
        c = list(c)
        if all(v == 0 for v in c):
            continue
        if cur is None:
            cur = [Fraction(v) for v in c]
            continue
        a, b = cur, [Fraction(v) for v in c]
        while b:
            a, b = b, poly_mod(a, b)
        cur = a
    if cur is None:
        return -1
    return len(cur) - 1


def order3_minor_common_factor(
    fd: FibrationData,
    probe_primes: Sequence[int] | None = None,
    seed: int = 0,
    budget: int | None = None,
    dim_cap: int = 12,
) -> Order3FactorResult:
    """Common linear factor of the order-3 minors, with the normalized
    bundle certificate and a point-count probe of the minor variety."""
    if fd.rank < 3:
        raise ValueError("order-3 minors require fibration rank >= 3")
    h = fd.h
    minors = order3_minors(fd.M2, h, dim_cap)
    if not minors:
        raise FalsificationAlarm("rank >= 3 but no nonzero order-3 minor")
    pivot_minor = min(minors, key=lambda p: len(p.terms))
    candidates = _linear_factors_of_cubic(pivot_minor)
    factor = None
    for l in candidates:
        if all(divides_form(l, q) for q in minors):
            factor = l
            break
    probe = _codim_probe(minors, h, probe_primes, budget)
    if factor is not None:
        ych = _linear_change_with_first_coordinate(factor)
        slice_ok = _slice_minors_vanish(fd.M2, ych, h)
        if not slice_ok:
            raise FalsificationAlarm("factor found but the y1 = 0 slice keeps rank >= 3")
        return Order3FactorResult("factor-found", factor, ych, slice_ok, len(minors), probe)
    # no common linear factor: probe for a nonlinear common divisor along pencils
    rng = random.Random(seed)
    suspicious = 0
    for _ in range(6):
        u = [rng.randint(-20, 20) for _ in range(h)]
        w = [rng.randint(-20, 20) for _ in range(h)]
        coeffs = [_restrict_to_pencil(q, u, w) for q in minors]
        if _binary_gcd_degree(coeffs) >= 1:
            suspicious += 1
    if suspicious == 6:
        status = "suspected-nonlinear" if fd.rank >= 5 else "unknown"
        return Order3FactorResult(status, None, None, None, len(minors), probe)
    return Order3FactorResult("no-common-factor", None, None, None, len(minors), probe)


def _linear_change_with_first_coordinate(l: IntPolynomial) -> LinearChange:
    """Invertible V with l(V z) = c * z_1: new first coordinate tracks l."""
    h = l.num_vars
    coeffs = [l.coefficient(tuple(1 if i == j else 0 for i in range(h))) for j in range(h)]
    piv = next(j for j, c in enumerate(coeffs) if c)
    lp = coeffs[piv]
    # V: z -> y with y_piv = z_0 - sum_{j != piv} c_j z_(j-slot), y_other = lp * z_slot
    cols = [0] * h
    V = [[0] * h for _ in range(h)]
    slot = 1
    slots = {}
    for j in range(h):
        if j == piv:
            continue
        slots[j] = slot
        slot += 1
    for j in range(h):
        if j == piv:
            V[j][0] = 1
            for k, s in slots.items():
                V[j][s] = -coeffs[k]
        else:
            V[j][slots[j]] = lp
    return LinearChange(V)


def _slice_minors_vanish(M2, ych: LinearChange, h: int) -> bool:
    """All order-3 minors of M2[V z] vanish identically on z_1 = 0."""
    m = len(M2)
    V = ych.matrix
    transformed = [[dict() for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(m):
            acc: DPoly = {}
            for e, c in M2[i][j].items():
                k = e.index(1)
                # y_k = sum_s V[k][s] z_s; drop z_0 (the slice)
                for s in range(1, h):
                    if V[k][s]:
                        ze = tuple(1 if q == s else 0 for q in range(h))
                        acc = _dp_add(acc, {ze: c * V[k][s]})
            transformed[i][j] = acc
    memo: dict = {}
    return all_minors_vanish(transformed, 3, memo) is None


def _codim_probe(minors: List[IntPolynomial], h: int, probe_primes, budget) -> dict:
    import math

    if probe_primes is None:
        probe_primes = (101, 211) if h <= 3 else ((31, 37) if h == 4 else (11, 13))
    counts = {}
    for p in probe_primes:
        try:
            counts[p] = gridcount.count_system_zeros_mod_p(minors, p, budget)
        except gridcount.BudgetExceeded:
            counts[p] = None
    dims = [
        math.log(c) / math.log(p) for p, c in counts.items() if c
    ]
    est_dim = round(sum(dims) / len(dims)) if dims else 0
    return {"primes": list(probe_primes), "counts": counts,
            "estimated_dim": est_dim, "estimated_codim": h - est_dim}


# ---------------------------------------------------------------------------
# probes and box counts


@dataclass
class SingularLocusProbe:
    estimate: int
    counts: Dict[int, int]
    primes: Tuple[int, ...]


def singular_locus_dim_probe(
    f: IntPolynomial, primes: Sequence[int] = (11, 13, 17), budget: int | None = None
) -> SingularLocusProbe:
    """Estimated affine dimension of {grad f = 0} from F_p point counts.

    Randomized evidence only, never a proof: counts c ~ p^dim are fitted by
    rounding the mean of log_p(c).
    """
    import math

    if f.is_zero():
        raise ValueError("zero form")
    grads = [g for g in f.gradient()]
    counts = {}
    for p in primes:
        counts[p] = gridcount.count_system_zeros_mod_p(grads, p, budget)
    logs = [math.log(c) / math.log(p) for p, c in counts.items() if c > 0]
    est = round(sum(logs) / len(logs)) if logs else -1
    return SingularLocusProbe(est, counts, tuple(primes))


def low_rank_specialization_count(
    psi_list: Sequence[IntPolynomial], R_box: int, budget: int | None = None
) -> Tuple[int, bool]:
    """#{|x| <= R : rank of the specialized bundle matrix <= 2} by exact
    enumeration; flags a bundle whose matrix has rank <= 2 identically."""
    v = len(psi_list)
    A2 = bilinear_bundle_matrix(psi_list, v)
    my = len(A2)
    minors = []
    memo: dict = {}
    for rows in combinations(range(my), 3):
        for cols in combinations(range(my), 3):
            d = minor_det(A2, rows, cols, memo)
            if d:
                minors.append(IntPolynomial(v, d))
    if not minors:
        return (2 * R_box + 1) ** v, True
    lows = [-R_box] * v
    highs = [R_box] * v
    gridcount.check_budget(gridcount.box_point_count(lows, highs) * len(minors), budget)
    total = (2 * R_box + 1) ** v
    count = 0
    iters = [gridcount.eval_on_box(q, lows, highs, budget) for q in minors]
    for chunks in zip(*iters):
        mask = None
        for coords, vals in chunks:
            zero = vals == 0
            mask = zero if mask is None else (mask & zero)
        count += int(mask.sum())
    return count, False
