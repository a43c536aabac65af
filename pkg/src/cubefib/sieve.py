"""Admissible sets from local conditions: bad-prime congruence classes from
p-adic witnesses, good-prime minor conditions, box membership, fibre
solubility, and density estimation.

The good-prime conjunction over *all* primes is decided exactly per point:
a point fails at a good prime p iff p divides the gcd of the defining
values (the Q_i(y) for linear fibres, the order-3 minors for quadric
fibres), so factoring one integer settles the infinite conjunction. The
documented cutoff mode retains the truncated predicate plus a tail-loss
report.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .finitefield import PadicWitness, find_padic_nonsingular
from .fibration import build_fibration, order3_minors, split_cubic
from .linalg import QuadraticPolynomial, RationalMatrix, symmetric_diagonalize
from .localdensity import real_solubility, solubility_quadric_Zp
from .nt import is_prime, prime_factors, solve_linear_diophantine, vector_gcd
from .polynomials import IntPolynomial, VariableSplit


@dataclass
class LocalConditionSet:
    mode: str                                   # "pi" | "pi_prime"
    bad_primes: Dict[int, PadicWitness]         # p -> witness (full residues)
    good_polys: List[IntPolynomial]             # define L: all must vanish mod p to fail
    M: int                                      # product of bad primes (with 2)
    y_indices: Tuple[int, ...]                  # positions of y in the witness residues
    insoluble_at: Optional[int] = None          # prime where witness search failed

    def bad_modulus(self) -> int:
        out = 1
        for p, w in self.bad_primes.items():
            out *= p ** (2 * w.v - 1)
        return out

    def y_residue(self, p: int) -> Tuple[int, ...]:
        """The y-part of the witness residues mod p^(2v-1)."""
        w = self.bad_primes[p]
        return tuple(w.residues[i] for i in self.y_indices)


@dataclass
class AdmissibleSetSpec:
    k: int
    box: List[Tuple[Fraction, Fraction]]        # per-coordinate interval of Omega_infty
    conditions: LocalConditionSet
    box_change: Optional[List[List[Fraction]]] = None   # y = T z with z in the box
    y1_prime_window: Optional[Tuple[Fraction, Fraction]] = None  # y1 in P(delta Y)
    coprime_pairs: Tuple[Tuple[int, int], ...] = ()
    jacobi_condition: Optional[Tuple[IntPolynomial, int]] = None  # (G, target symbol)
    good_prime_cutoff: Optional[int] = None     # None = exact mode
    good_primes_only: Optional[Tuple[int, ...]] = None  # restrict the predicate

    def box_change_inverse(self) -> Optional[RationalMatrix]:
        if self.box_change is None:
            return None
        cached = getattr(self, "_box_change_inv", None)
        if cached is None:
            cached = RationalMatrix(self.box_change).inverse()
            object.__setattr__(self, "_box_change_inv", cached)
        return cached

    def scaled_bounds(self, Y: int) -> List[Tuple[int, int]]:
        out = []
        for lo, hi in self.box:
            l = -(-(lo * Y).numerator // (lo * Y).denominator)   # ceil
            h_ = (hi * Y).numerator // (hi * Y).denominator      # floor
            out.append((l, h_))
        return out


@dataclass
class MembershipResult:
    member: bool
    reason: str = ""


def build_conditions(
    C: IntPolynomial,
    split: VariableSplit,
    mode: str,
    v_max: int = 3,
    budget: int | None = None,
    extra_bad: Sequence[int] = (),
) -> LocalConditionSet:
    """Bad primes get witness residue classes via the p-adic search; good
    primes get the minor / Q_i vanishing predicate."""
    if mode not in ("pi", "pi_prime"):
        raise ValueError("mode must be pi or pi_prime")
    n = C.num_vars
    xs, ys = split.x_indices, split.y_indices
    if mode == "pi_prime":
        if len(xs) < 2 or len(ys) < 2:
            raise ValueError("pi_prime mode needs k >= 2 and n-k >= 2")
        _, q_list, _ = split_cubic(C, split)
        good = [q for q in q_list if not q.is_zero()]
        if not good:
            raise ValueError("all Q_i vanish: not a pi_prime bundle")
        coeff_gcd = 0
        for q in good:
            coeff_gcd = gcd(coeff_gcd, q.content())
        M = 2 * coeff_gcd if coeff_gcd else 2
    else:
        fd = build_fibration(C, split)
        if fd.rank < 3:
            raise ValueError("pi mode needs fibration rank >= 3 for order-3 minors")
        good = order3_minors(fd.M2, fd.h)
        coeff_gcd = 0
        for q in good:
            coeff_gcd = gcd(coeff_gcd, q.content())
        M = 2 * coeff_gcd if coeff_gcd else 2
    bad: Dict[int, PadicWitness] = {}
    for p in sorted(set(prime_factors(M)) | set(extra_bad)):
        wit = find_padic_nonsingular(C, p, v_max, x_indices=xs, budget=budget)
        if wit is None:
            return LocalConditionSet(mode, {}, good, M, ys, insoluble_at=p)
        bad[p] = wit
    return LocalConditionSet(mode, bad, good, M, ys)


def _good_prime_ok(spec: AdmissibleSetSpec, y: Sequence[int]) -> Tuple[bool, str]:
    if not spec.conditions.good_polys:
        return True, ""
    if spec.good_primes_only is not None:
        for p in spec.good_primes_only:
            if all(g.evaluate_mod(list(y), p) == 0 for g in spec.conditions.good_polys):
                return False, f"good prime {p} kills all predicate values"
        return True, ""
    vals = [g.evaluate(list(y)) for g in spec.conditions.good_polys]
    d = vector_gcd(vals)
    if d == 0:
        return False, "good-prime predicate fails at every prime (all values zero)"
    bad_set = set(spec.conditions.bad_primes)
    for p in prime_factors(d):
        if spec.good_prime_cutoff is not None and p > spec.good_prime_cutoff:
            continue
        if p not in bad_set:
            return False, f"good prime {p} divides all predicate values"
    return True, ""


def membership(y: Sequence[int], spec: AdmissibleSetSpec, Y: int) -> MembershipResult:
    """Deterministic membership with the first failed predicate as a reason."""
    y = list(y)
    if spec.box_change is None:
        for yi, (lo, hi) in zip(y, spec.box):
            if not (lo * Y <= yi <= hi * Y):
                return MembershipResult(False, "box")
    else:
        t = spec.box_change_inverse().matvec(y)
        for zi, (lo, hi) in zip(t, spec.box):
            if not (lo * Y <= zi <= hi * Y):
                return MembershipResult(False, "box")
    if spec.y1_prime_window is not None:
        lo, hi = spec.y1_prime_window
        if not (lo * Y <= y[0] <= hi * Y):
            return MembershipResult(False, "prime-window")
        if not is_prime(abs(y[0])):
            return MembershipResult(False, "prime")
    for i, j in spec.coprime_pairs:
        if gcd(y[i], y[j]) != 1:
            return MembershipResult(False, f"coprimality({i},{j})")
    for p, wit in spec.conditions.bad_primes.items():
        q = p ** (2 * wit.v - 1)
        ys = spec.conditions.y_residue(p)
        if any((yi - ri) % q for yi, ri in zip(y, ys)):
            return MembershipResult(False, f"bad-prime congruence mod {p}^{2 * wit.v - 1}")
    ok, why = _good_prime_ok(spec, y)
    if not ok:
        return MembershipResult(False, why)
    if spec.jacobi_condition is not None:
        from .nt import jacobi_symbol

        G, target = spec.jacobi_condition
        gval = G.evaluate(y[1:])
        if y[0] <= 2 or gval % y[0] == 0 or jacobi_symbol(gval, abs(y[0])) != target:
            return MembershipResult(False, "jacobi-symbol condition")
    return MembershipResult(True, "")


def enumerate_admissible(spec: AdmissibleSetSpec, Y: int,
                         budget: int | None = None) -> Iterator[Tuple[int, ...]]:
    """Lexicographic stream of admissible y in the scaled box."""
    from itertools import product as iproduct

    if spec.box_change is None:
        bounds = spec.scaled_bounds(Y)
    else:
        # bounding box of the transformed parallelepiped
        T = RationalMatrix(spec.box_change)
        corners = []
        for signs in iproduct(*[(lo, hi) for lo, hi in spec.box]):
            z = [s * Y for s in signs]
            corners.append(T.matvec(z))
        bounds = []
        for i in range(spec.k):
            vals = [c[i] for c in corners]
            lo = min(vals)
            hi = max(vals)
            bounds.append((-(-lo.numerator // lo.denominator), hi.numerator // hi.denominator))
    total = 1
    for lo, hi in bounds:
        total *= max(0, hi - lo + 1)
    from .gridcount import check_budget

    check_budget(total, budget)
    for y in iproduct(*[range(lo, hi + 1) for lo, hi in bounds]):
        if membership(y, spec, Y).member:
            yield y


def admissible_points_lines(points: Iterator[Tuple[int, ...]]) -> str:
    """Line-delimited integer tuples, the export format for admissible sets."""
    return "\n".join(" ".join(str(v) for v in y) for y in points)


@dataclass
class DensityEstimate:
    rows: List[Tuple[int, int, Fraction, Optional[Fraction]]]  # (Y, count, density, delta)
    tail_loss_bound: Optional[float] = None

    def to_csv(self) -> str:
        lines = ["Y,count,density,delta"]
        for Y, count, dens, delta in self.rows:
            d = "" if delta is None else repr(float(delta))
            lines.append(f"{Y},{count},{float(dens)!r},{d}")
        return "\n".join(lines)


def density_estimate(
    spec: AdmissibleSetSpec, Y_list: Sequence[int], budget: int | None = None,
    codim_estimate: int | None = None,
) -> DensityEstimate:
    """#C_k(Y) / Y^k for each Y, with successive differences as a Cauchy
    monitor; in cutoff mode adds the tail density-loss bound from the
    codimension probe."""
    rows = []
    prev: Optional[Fraction] = None
    for Y in Y_list:
        count = sum(1 for _ in enumerate_admissible(spec, Y, budget))
        dens = Fraction(count, Y ** spec.k)
        delta = None if prev is None else abs(dens - prev)
        rows.append((Y, count, dens, delta))
        prev = dens
    tail = None
    if spec.good_prime_cutoff is not None and codim_estimate is not None:
        # ignored primes p > P contribute at most ~ c p^(-codim) each
        P = spec.good_prime_cutoff
        from .nt import primes_up_to

        tail = 0.0
        for p in primes_up_to(50 * P):
            if p > P:
                tail += float(p) ** (-codim_estimate)
        tail += 2.0 * (50 * P) ** (1 - codim_estimate) if codim_estimate > 1 else float("inf")
    return DensityEstimate(rows, tail)


# ---------------------------------------------------------------------------
# fibre solubility


@dataclass
class FibreVerdict:
    status: str           # "soluble" | "insoluble" | "unknown"
    label: str            # "explicit-point-found" | "principle-invoked" | ...
    point: Optional[Tuple[int, ...]] = None
    detail: str = ""


def fibre_solubility(
    y: Sequence[int],
    C: IntPolynomial,
    split: VariableSplit,
    mode: str,
    want_point: bool = False,
    search_bound: int = 20,
    budget: int | None = None,
) -> FibreVerdict:
    """Solubility of the fibre over a fixed integer y.

    Linear fibres are settled exactly by gcd arithmetic with an explicit
    point; quadric fibres combine local checks at the primes of 2 disc
    with the rank >= 5 Hasse shortcut (labeled principle-invoked) or a
    bounded explicit search.
    """
    y = list(y)
    F_list, q_list, R = split_cubic(C, split)
    if mode == "pi_prime":
        vals = [q.evaluate(y) for q in q_list]
        target = -R.evaluate(y)
        if all(v == 0 for v in vals):
            if target == 0:
                point = tuple([0] * len(vals))
                return FibreVerdict("soluble", "explicit-point-found", point,
                                    "fibre is all of affine space")
            return FibreVerdict("insoluble", "gcd", None, "0 = nonzero constant")
        d = vector_gcd(vals)
        if target % d:
            return FibreVerdict("insoluble", "gcd", None,
                                f"gcd {d} does not divide {target}")
        sol = solve_linear_diophantine(vals, target)
        assert sol is not None
        assert sum(v * s for v, s in zip(vals, sol)) == target
        return FibreVerdict("soluble", "explicit-point-found", tuple(sol))
    # pi mode: quadric fibre F_y(x) = sum y_i F_i(x) + sum x_j q_j(y) + R(y)
    m = len(split.x_indices)
    terms: Dict[Tuple[int, ...], int] = {}
    for i, F in enumerate(F_list):
        for e, c in F.terms.items():
            v = c * y[i]
            if v:
                terms[e] = terms.get(e, 0) + v
    for j, q in enumerate(q_list):
        e = tuple(1 if t == j else 0 for t in range(m))
        v = q.evaluate(y)
        if v:
            terms[e] = terms.get(e, 0) + v
    rv = R.evaluate(y)
    if rv:
        zero = tuple([0] * m)
        terms[zero] = terms.get(zero, 0) + rv
    fibre = IntPolynomial(m, terms)
    Fq = QuadraticPolynomial.from_polynomial(fibre)
    if want_point or search_bound:
        pt = _search_integer_point(fibre, min(search_bound, 6))
        if pt is not None:
            return FibreVerdict("soluble", "explicit-point-found", pt)
    if not real_solubility(Fq):
        return FibreVerdict("insoluble", "real", None, "no real points")
    rank, support = Fq.rank_support()
    checked: List[int] = []
    for p in sorted(set(prime_factors(2 * support)) | {2, 3}):
        res = solubility_quadric_Zp(Fq, p, v_max=2, budget=budget)
        if res.verdict == "insoluble":
            return FibreVerdict("insoluble", f"Z_{p}", None, res.note)
        if res.verdict == "unknown":
            return FibreVerdict("unknown", f"Z_{p}", None, res.note)
        checked.append(p)
    if rank >= 5:
        return FibreVerdict("soluble", "principle-invoked", None,
                            f"local solubility verified at {checked}; rank >= 5")
    if want_point:
        pt = _search_integer_point(fibre, search_bound)
        if pt is not None:
            return FibreVerdict("soluble", "explicit-point-found", pt)
    return FibreVerdict("unknown", "rank<5", None,
                        "local checks passed but the Hasse shortcut needs rank >= 5")


def _search_integer_point(f: IntPolynomial, bound: int) -> Optional[Tuple[int, ...]]:
    from itertools import product as iproduct

    m = f.num_vars
    if (2 * bound + 1) ** m > 10 ** 6:
        return None
    for x in iproduct(range(-bound, bound + 1), repeat=m):
        if f.evaluate(x) == 0:
            return x
    return None


# ---------------------------------------------------------------------------
# reducible-shape admissible tuples (prime-modulus congruence sets)


@dataclass
class ReducibleCaseSet:
    count: int
    Y: int
    delta: Fraction
    samples: List[Tuple[Tuple[int, int, int], Tuple[int, ...]]]  # ((x3,x4,x5), y)
    y_count: int


def reducible_case_set(
    alphas: Sequence[int],
    R: IntPolynomial,
    k_index: int,
    Y: int,
    delta: Fraction,
    budget: int | None = None,
    sample_limit: int = 32,
) -> ReducibleCaseSet:
    """Admissible tuples for the shape C = y_k sum alpha_i x_i y_i + R(y).

    Conditions: |x_3|,|x_4|,|x_5|,|y| <= Y, gcd(beta_1 y_1, beta_2 y_2) = 1,
    y_k prime in [delta Y, 2 delta Y], and R_1(x_3,x_4,x_5,y) = 0 mod y_k.
    The congruence is x-free (every x-term carries y_k), so the count is
    (#admissible y) * (2Y+1)^3; sampled tuples re-verify directly.
    """
    if len(alphas) != 5 or any(a == 0 for a in alphas):
        raise ValueError("shape requires five nonzero alpha_i")
    ydim = R.num_vars
    if not (0 <= k_index < ydim):
        raise ValueError("k_index out of range")
    g = gcd(alphas[0], alphas[1])
    b1, b2 = alphas[0] // g, alphas[1] // g
    lo = -(-(delta * Y).numerator // (delta * Y).denominator)
    hi = (2 * delta * Y).numerator // (2 * delta * Y).denominator
    from itertools import product as iproduct

    from .gridcount import check_budget
    from .nt import primes_in_interval

    primes = primes_in_interval(max(lo, 2), hi)
    check_budget(len(primes) * (2 * Y + 1) ** (ydim - 1), budget)
    y_count = 0
    samples: List[Tuple[Tuple[int, int, int], Tuple[int, ...]]] = []
    for yk in primes:
        for rest in iproduct(range(-Y, Y + 1), repeat=ydim - 1):
            yvec = list(rest[:k_index]) + [yk] + list(rest[k_index:])
            if gcd(b1 * yvec[0], b2 * yvec[1]) != 1:
                continue
            # R_1 = R mod y_k on the slice (all x-terms carry y_k)
            if R.evaluate_mod(yvec, yk):
                continue
            y_count += 1
            if len(samples) < sample_limit:
                samples.append(((0, 1, -1), tuple(yvec)))
    return ReducibleCaseSet(y_count * (2 * Y + 1) ** 3, Y, delta, samples, y_count)


# ---------------------------------------------------------------------------
# Omega_infty construction with |Q_1| >> P^2


@dataclass
class LargeQBox:
    change: List[List[Fraction]]       # y = T z
    intervals: List[Tuple[Fraction, Fraction]]
    c_frozen: Fraction                 # verified |Q_1(y)| >= c P^2 on samples
    samples_checked: int
    endpoint_error_bound: Fraction = Fraction(1, 1024)


def box_with_large_Q(
    Q1: IntPolynomial, P: int = 100, sample_step: int = 1
) -> LargeQBox:
    """Rational box (after a rational congruence change) on which the first
    quadratic stays >> P^2, with the constant measured on the integer
    sample points and frozen."""
    if Q1.is_zero():
        raise ValueError("Q_1 must be nonzero")
    k = Q1.num_vars
    Fq = QuadraticPolynomial.from_polynomial(Q1)
    t, diag = symmetric_diagonalize(Fq.Q)
    nonzero = [(i, d) for i, d in enumerate(diag) if d != 0]
    pos = [(i, d) for i, d in nonzero if d > 0]
    neg = [(i, d) for i, d in nonzero if d < 0]
    main, small = (pos, neg) if len(pos) >= len(neg) else (neg, pos)
    intervals: List[Tuple[Fraction, Fraction]] = []

    def inv_sqrt(a: Fraction, up: bool) -> Fraction:
        # rational 1/sqrt(a), exact when a is a rational square, else
        # rounded inward by 1/1024; a > 0
        from math import isqrt

        rn, rd = isqrt(a.numerator), isqrt(a.denominator)
        if rn * rn == a.numerator and rd * rd == a.denominator:
            return Fraction(rd, rn)
        val = 1.0 / float(a) ** 0.5
        n = int(val * 1024)
        return Fraction(n + (1 if up else 0), 1024)

    # inward rounding: the lower endpoint rounds up, the upper rounds down,
    # so every claimed inequality survives the rational approximation
    for i in range(k):
        d = diag[i]
        if (i, d) in main:
            intervals.append((inv_sqrt(abs(d), up=True), 2 * inv_sqrt(abs(d), up=False)))
        elif (i, d) in small:
            s = inv_sqrt(4 * k * abs(d), up=False)
            intervals.append((inv_sqrt(16 * k * abs(d), up=True), s))
        else:
            intervals.append((Fraction(-1), Fraction(1)))
    change = t.tolist()
    # verify |Q1| >= c P^2 on the integer sample and freeze c
    tmat = RationalMatrix(change)
    worst: Optional[Fraction] = None
    checked = 0
    import itertools

    grids = []
    for lo, hi in intervals:
        a = -(-(lo * P).numerator // (lo * P).denominator)
        b = (hi * P).numerator // (hi * P).denominator
        pick = list(range(a, b + 1, max(1, (b - a) // 3 or 1)))[:4] or [a]
        grids.append(pick)
    for z in itertools.product(*grids):
        yv = tmat.matvec(list(z))
        val = abs(Q1.evaluate_fraction(yv))
        ratio = val / (P * P)
        worst = ratio if worst is None else min(worst, ratio)
        checked += 1
    if worst is None or worst <= 0:
        raise ValueError("sampled box failed to keep Q_1 large")
    return LargeQBox(change, intervals, worst, checked)
