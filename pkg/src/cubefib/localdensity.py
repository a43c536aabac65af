"""Local densities sigma_p, exponential-sum coefficients S_{p^k}, truncated
singular series, lower-bound certificates, and Z_p-solubility verdicts for
quadratic fibre polynomials.

sigma_p is always computed from exact solution counts N(p^t); the
character-sum definition of S_q survives only as a small-q cross-check
oracle (Ramanujan sums, still exact integers).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import gridcount
from .finitefield import (
    PadicWitness,
    count_quadric_mod_p_closed_form,
    count_witnesses,
    find_nonsingular_zero_mod_p,
    find_padic_nonsingular,
)
from .gridcount import BudgetExceeded, check_budget
from .linalg import QuadraticPolynomial, symmetric_diagonalize
from .nt import divisors, prime_factors, primes_up_to
from .polynomials import IntPolynomial


@dataclass(frozen=True)
class LocalDensityEstimate:
    p: int
    t: int
    sigma: Fraction            # N(p^t) / p^(t(m-1)), exact
    stability_gap: Fraction    # |sigma^(t) - sigma^(t-1)|
    counts: Tuple[int, ...]    # N(p^0), ..., N(p^t)
    method: str                # "recursion" or "enumeration"
    stable: bool

    def report_record(self) -> dict:
        return {
            "p": self.p,
            "t": self.t,
            "numerator": self.sigma.numerator,
            "denominator": self.sigma.denominator,
            "stable": self.stable,
        }


def _critical_data(F: QuadraticPolynomial, p: int):
    """Unique singular residue mod p for a full-rank reduction, plus F there."""
    from .finitefield import diagonalize_mod_p

    m = F.m
    two_q = F.two_Q_int()
    # solve 2Q x = -B mod p by inverting mod p
    a = [[two_q[i][j] % p for j in range(m)] + [(-F.B[i]) % p] for i in range(m)]
    # gaussian elimination mod p
    for col in range(m):
        piv = next((r for r in range(col, m) if a[r][col] % p), None)
        if piv is None:
            raise ValueError("2Q singular mod p")
        a[col], a[piv] = a[piv], a[col]
        inv = pow(a[col][col], p - 2, p)
        a[col] = [v * inv % p for v in a[col]]
        for r in range(m):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(v - f * w) % p for v, w in zip(a[r], a[col])]
    xstar = [a[i][m] for i in range(m)]
    return xstar


def counts_good_prime(F: QuadraticPolynomial, p: int, t: int) -> List[int]:
    """Exact N(p^k), k = 0..t, for odd p not dividing det(2Q).

    Nonsingular residues lift with multiplicity p^(m-1) per level; the
    single critical residue recurses with modulus dropped by p^2.
    """
    if p == 2:
        raise ValueError("p = 2 has no closed-form path")
    m = F.m
    if F.disc() % p == 0:
        raise ValueError("p divides the discriminant")
    counts = [1] * (t + 1)
    if t == 0:
        return counts
    ns = count_quadric_mod_p_closed_form(F, p).nonsingular
    xstar = _critical_data(F, p)
    poly = F.to_polynomial()
    cstar = poly.evaluate(xstar)
    counts[1] = ns + (1 if cstar % p == 0 else 0)
    if t == 1:
        return counts
    sub_counts = None
    if cstar % (p * p) == 0:
        grad = [g.evaluate(xstar) for g in poly.gradient()]
        assert all(v % p == 0 for v in grad)
        quad_part = poly.homogeneous_part(2)
        terms = dict(quad_part.terms)
        for i, gv in enumerate(grad):
            if gv // p:
                e = [0] * m
                e[i] = 1
                terms[tuple(e)] = terms.get(tuple(e), 0) + gv // p
        const = cstar // (p * p)
        if const:
            terms[tuple([0] * m)] = terms.get(tuple([0] * m), 0) + const
        G = QuadraticPolynomial.from_polynomial(IntPolynomial(m, terms))
        sub_counts = counts_good_prime(G, p, t - 2)
    for k in range(2, t + 1):
        counts[k] = ns * p ** ((k - 1) * (m - 1))
        if sub_counts is not None:
            counts[k] += p ** m * sub_counts[k - 2]
    return counts


def sigma_p(
    F: QuadraticPolynomial, p: int, t: int, budget: int | None = None
) -> LocalDensityEstimate:
    """Exact truncated local density sigma_p^(t) = N(p^t) / p^(t(m-1)).

    Three paths: exact value 1 when the reduced linear part has a unit
    coefficient outside the rank block (the unit survives every power),
    the critical-point recursion when p does not divide det(2Q), and
    enumeration otherwise.
    """
    if t < 1:
        raise ValueError("truncation level must be >= 1")
    m = F.m
    if p != 2:
        case = count_quadric_mod_p_closed_form(F, p).data.case
        if case == "linear-unit":
            counts = tuple(p ** (k * (m - 1)) for k in range(t + 1))
            return LocalDensityEstimate(
                p, t, Fraction(1), Fraction(0), counts, "linear-unit", True
            )
    if p != 2 and F.disc() % p != 0:
        counts = counts_good_prime(F, p, t + 1)
        method = "recursion"
    else:
        poly = F.to_polynomial()
        counts = [1]
        for k in range(1, t + 1):
            counts.append(gridcount.count_zeros_mod_q(poly, p ** k, budget))
        method = "enumeration"
    sig = [Fraction(counts[k], p ** (k * (m - 1))) for k in range(len(counts))]
    if method == "recursion":
        stable = sig[t + 1] == sig[t]
        counts = counts[: t + 1]
    else:
        stable = sig[t] == sig[t - 1]
    gap = abs(sig[t] - sig[t - 1])
    return LocalDensityEstimate(p, t, sig[t], gap, tuple(counts), method, stable)


def S_pk_extract(F: QuadraticPolynomial, p: int, k: int, counts: Sequence[int] | None = None,
                 budget: int | None = None) -> int:
    """S_{p^k} recovered from exact counts; an integer by construction."""
    if k == 0:
        return 1
    if counts is None:
        counts = sigma_p(F, p, k, budget).counts
    m = F.m
    val = Fraction(counts[k], p ** (k * (m - 1))) - Fraction(counts[k - 1], p ** ((k - 1) * (m - 1)))
    out = val * p ** (k * m)
    assert out.denominator == 1
    return int(out)


def S_q_character_sum(F: QuadraticPolynomial, q: int, budget: int | None = None) -> int:
    """Direct S_q = sum*_a sum_b e_q(a F(b)) via Ramanujan sums, exact."""
    poly = F.to_polynomial()
    m = F.m
    check_budget(q ** m, budget)
    hist = np.zeros(q, dtype=np.int64)
    tables = gridcount._pow_tables(poly, q)
    for coords in gridcount._grid_chunks(m, q):
        vals = gridcount.eval_mod_on_coords(poly, q, coords, tables)
        hist += np.bincount(vals, minlength=q)
    # Ramanujan sum c_q(v) = sum_{d | gcd(v, q)} d mu(q/d)
    c = np.zeros(q, dtype=np.int64)
    for d in divisors(q):
        ratio = q // d
        ps = prime_factors(ratio)
        rad = 1
        for pp in ps:
            rad *= pp
        if ratio != rad:
            continue  # mu(q/d) = 0
        c[::d] += d * (-1) ** len(ps)
    return int((hist * c).sum())


@dataclass(frozen=True)
class SingularSeriesEstimate:
    P_max: int
    locals_: Tuple[LocalDensityEstimate, ...]
    product: Fraction
    certified: bool
    tail_lower: Optional[Fraction]    # lower bound on the omitted factors

    def factors(self) -> Dict[int, Fraction]:
        return {e.p: e.sigma for e in self.locals_}


# frozen after measurement: max observed |sigma_p - 1| on the rank-5
# calibration suite is ~ p^-2 + p^-3, well under 4 p^(-3/2)
SIGMA_TAIL_CONSTANT = 4

_TAIL_SIEVE_TO = 10 ** 6
_tail_primes_cache: List[int] | None = None


def _tail_lower_bound(P: int) -> Fraction:
    """Rational lower bound for prod_{p > P} (1 - 4 p^(-3/2)).

    Fixed-point accumulation (2^40 scale, rounded up per term) keeps the
    overestimate of the sum rigorous while avoiding huge denominators.
    """
    global _tail_primes_cache
    if _tail_primes_cache is None:
        _tail_primes_cache = primes_up_to(_TAIL_SIEVE_TO)
    scale = 1 << 40
    total_fp = 0
    for q in _tail_primes_cache:
        if q > P:
            # 1/q^{3/2} <= 1/(q * isqrt(q)) since isqrt rounds down
            total_fp += -(-scale // (q * isqrt(q)))
    total = Fraction(total_fp, scale) + Fraction(2, isqrt(_TAIL_SIEVE_TO - 1))
    return 1 - SIGMA_TAIL_CONSTANT * total


def singular_series(
    F: QuadraticPolynomial,
    P_max: int,
    t: int = 2,
    budget: int | None = None,
    v_max: int = 3,
) -> SingularSeriesEstimate:
    """Truncated singular series prod_{p <= P_max} sigma_p^(t_p).

    Good primes use truncation t; primes dividing 2 disc use 2 v_p + 1
    from a witness search (capped by the budget). The certificate flag
    requires rank >= 5 and every prime of 2 disc below P_max.
    """
    rank, support = F.rank_support()
    locals_ = []
    product = Fraction(1)
    bad = set(prime_factors(2 * support))
    for p in primes_up_to(P_max):
        if p in bad:
            tp = 2 * v_max + 1
            try:
                wit = find_padic_nonsingular(F.to_polynomial(), p, v_max, budget=budget)
                tp = (2 * wit.v + 1) if wit else tp
            except (ValueError, BudgetExceeded):
                wit = None
            try:
                est = sigma_p(F, p, tp, budget)
            except BudgetExceeded:
                est = sigma_p(F, p, max(1, min(tp, 2)), budget)
        else:
            est = sigma_p(F, p, t, budget)
        locals_.append(est)
        product *= est.sigma
    certified = rank >= 5 and all(p <= P_max for p in bad)
    tail = _tail_lower_bound(P_max) if certified else None
    return SingularSeriesEstimate(P_max, tuple(locals_), product, certified, tail)


@dataclass(frozen=True)
class SeriesLowerBound:
    value: Fraction
    bad_factors: Dict[int, Fraction]
    medium_factors: Dict[int, Fraction]
    tail_lower: Fraction
    P_tail: int


def series_lower_bound_certificate(
    F: QuadraticPolynomial,
    witnesses: Dict[int, PadicWitness],
    medium_primes: Sequence[int] = (),
    budget: int | None = None,
    witness_count_budget: int = 10 ** 6,
    P_min: int = 100,
) -> SeriesLowerBound:
    """Positive rational L with singular series >= L.

    Three-factor assembly: witness floors at the bad primes, exact
    nonsingular-count floors at the medium primes (rank >= 3 mod p
    required), and the frozen tail product beyond them. Every factor is
    a genuine lower bound for the corresponding sigma_p.
    """
    m = F.m
    rank, support = F.rank_support()
    if rank < 5:
        raise ValueError("certificate requires rank >= 5 over Q")
    bad_needed = set(prime_factors(2 * support))
    for p in sorted(bad_needed):
        if p not in witnesses and p not in medium_primes:
            raise ValueError(f"missing witness for bad prime {p}")
    poly = F.to_polynomial()
    bad_factors: Dict[int, Fraction] = {}
    for p, wit in witnesses.items():
        if not wit.verify(poly):
            raise ValueError(f"witness at p={p} fails re-verification")
        v = wit.v
        if p ** ((2 * v - 1) * m) <= witness_count_budget:
            W = count_witnesses(poly, p, v, budget=witness_count_budget)
        else:
            W = 1
        bad_factors[p] = Fraction(W, p ** ((2 * v - 1) * (m - 1)))
    medium_factors: Dict[int, Fraction] = {}
    covered = set(witnesses) | set(bad_needed)
    for p in medium_primes:
        if p in bad_factors:
            continue
        if p == 2:
            raise ValueError("p = 2 needs a witness, not a closed-form floor")
        ns = count_quadric_mod_p_closed_form(F, p)
        if ns.data.case == "gauss" and ns.data.r < 3:
            raise ValueError(f"rank < 3 mod {p}: no closed floor available")
        if ns.nonsingular <= 0:
            raise ValueError(f"sigma_{p} floor is zero: no certificate")
        medium_factors[p] = Fraction(ns.nonsingular, p ** (m - 1))
        covered.add(p)
    # the generic (1 - 4 p^(-3/2)) tail is only useful past P_min, so every
    # prime below that gets an explicit closed-form floor
    P_tail = max([int(p) for p in covered] + [P_min])
    for p in primes_up_to(P_tail):
        if p in covered:
            continue
        ns = count_quadric_mod_p_closed_form(F, p)
        if ns.nonsingular <= 0:
            raise ValueError(f"sigma_{p} floor is zero: no certificate")
        medium_factors[p] = Fraction(ns.nonsingular, p ** (m - 1))
    tail = _tail_lower_bound(P_tail)
    if tail <= 0:
        tail = Fraction(0)
    value = tail
    for f in bad_factors.values():
        value *= f
    for f in medium_factors.values():
        value *= f
    return SeriesLowerBound(value, bad_factors, medium_factors, tail, P_tail)


# ---------------------------------------------------------------------------
# Z_p solubility


@dataclass(frozen=True)
class ZpSolubility:
    verdict: str                      # "soluble" | "insoluble" | "unknown"
    witness: Optional[PadicWitness]
    searched_level: int               # residues were examined mod p^searched_level
    note: str = ""


def solubility_quadric_Zp(
    F: QuadraticPolynomial, p: int, v_max: int = 3, budget: int | None = None
) -> ZpSolubility:
    """Decide solubility of F = 0 over Z_p.

    soluble always carries a verified witness; insoluble is certified by
    an empty residue search (no solution mod p^k implies none in Z_p);
    everything else is unknown.
    """
    poly = F.to_polynomial()
    m = F.m
    if p != 2:
        try:
            ns = count_quadric_mod_p_closed_form(F, p)
            if ns.nonsingular > 0:
                pt = find_nonsingular_zero_mod_p(F, p)
                assert pt is not None
                idx = next(i for i, g in enumerate(poly.gradient()) if g.evaluate_mod(pt, p))
                wit = PadicWitness(p, 1, pt, idx)
                assert wit.verify(poly)
                return ZpSolubility("soluble", wit, 1, "nonsingular point mod p")
        except ValueError:
            pass
    try:
        if not all(g.is_zero() for g in poly.gradient()):
            wit = find_padic_nonsingular(poly, p, v_max, budget=budget)
            if wit is not None:
                return ZpSolubility("soluble", wit, 2 * wit.v - 1, "witness search")
    except BudgetExceeded:
        return ZpSolubility("unknown", None, 0, "witness search over budget")
    level = 2 * v_max - 1
    try:
        n_sol = gridcount.count_zeros_mod_q(poly, p ** level, budget)
    except BudgetExceeded:
        return ZpSolubility("unknown", None, level, "residue search over budget")
    if n_sol == 0:
        return ZpSolubility("insoluble", None, level, f"no solutions mod {p}^{level}")
    return ZpSolubility("unknown", None, level,
                        "solutions exist but none lift within the search depth")


def real_solubility(F: QuadraticPolynomial) -> bool:
    """Whether F = 0 has a real solution, decided exactly.

    Diagonalizes over Q, completes squares, and checks that the exact
    range of F contains 0.
    """
    t, diag = symmetric_diagonalize(F.Q)
    # F(T z) = sum diag_i z_i^2 + (T^t B) z + N
    b = [sum(Fraction(t[i, j]) * F.B[i] for i in range(F.m)) for j in range(F.m)]
    lo = Fraction(F.N)
    hi = Fraction(F.N)
    lo_inf = hi_inf = False
    for d, bi in zip(diag, b):
        if d == 0:
            if bi != 0:
                return True  # unbounded in both directions
        elif d > 0:
            hi_inf = True
            lo -= bi * bi / (4 * d)
        else:
            lo_inf = True
            hi -= bi * bi / (4 * d)
    low_ok = lo_inf or lo <= 0
    high_ok = hi_inf or hi >= 0
    return low_ok and high_ok
