"""Point counts for quadratic polynomials over F_p and Z/p^t: the exact
Gauss-sum closed form, brute-force oracles, Davenport-Hensel lifting
bounds, and p-adic nonsingular witness search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import gridcount
from .gridcount import BudgetExceeded, check_budget
from .linalg import QuadraticPolynomial
from .nt import is_prime, jacobi_symbol, sqrt_mod_p
from .polynomials import IntPolynomial


@dataclass(frozen=True)
class PrimeModulus:
    p: int
    t: int = 1

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("power must be >= 1")
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @property
    def modulus(self) -> int:
        return self.p ** self.t


@dataclass(frozen=True)
class GaussSumData:
    """Exact ingredients of the closed-form count at an odd prime."""

    p: int
    r: int                 # rank of the quadratic part mod p
    eps_tag: str           # "1" if p = 1 mod 4 else "i"
    jacobi_det: int        # (prod of diagonal pivots / p)
    w: int                 # 4N - B^t M^{-1} B mod p, 2Q-block inverse sense
    kappa: int             # 1 iff p | w
    gauss_term: int        # eps_p^r (det/p) p^(m-r/2-1) K_r(w;p), an integer
    case: str              # "linear-unit" or "gauss"


@dataclass(frozen=True)
class QuadricCount:
    nonsingular: int
    total: int
    data: GaussSumData


def diagonalize_mod_p(Q: Sequence[Sequence[int]], p: int):
    """Congruence diagonalization over F_p, p odd.

    Returns (R, D): R invertible mod p with R^t Q R = diag(D) mod p; the
    number of nonzero entries of D is the rank of Q mod p. Nonzero
    entries are moved to the front.
    """
    if p == 2:
        raise ValueError("p = 2 is excluded")
    n = len(Q)
    a = [[Q[i][j] % p for j in range(n)] for i in range(n)]
    if any(a[i][j] != a[j][i] for i in range(n) for j in range(i)):
        raise ValueError("matrix is not symmetric mod p")
    r = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def col_add(dst, src, f):
        for i in range(n):
            a[i][dst] = (a[i][dst] + f * a[i][src]) % p
        for i in range(n):
            a[dst][i] = (a[dst][i] + f * a[src][i]) % p
        for i in range(n):
            r[i][dst] = (r[i][dst] + f * r[i][src]) % p

    def col_swap(i, j):
        for t in range(n):
            a[t][i], a[t][j] = a[t][j], a[t][i]
        for t in range(n):
            a[i][t], a[j][t] = a[j][t], a[i][t]
        for t in range(n):
            r[t][i], r[t][j] = r[t][j], r[t][i]

    for k in range(n):
        if a[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if a[i][i]), None)
            if piv is not None:
                col_swap(k, piv)
            else:
                found = None
                for i in range(k, n):
                    for j in range(i + 1, n):
                        if a[i][j]:
                            found = (i, j)
                            break
                    if found:
                        break
                if found is None:
                    break
                i, j = found
                if i != k:
                    col_swap(k, i)
                col_add(k, j, 1)  # a[k][k] becomes 2*a[k][j] != 0 (p odd)
        piv = a[k][k]
        if piv == 0:
            continue
        inv = pow(piv, p - 2, p)
        for j in range(k + 1, n):
            if a[k][j]:
                col_add(j, k, (-a[k][j] * inv) % p)
    diag = [a[i][i] for i in range(n)]
    # move zero pivots to the back with column swaps
    front = 0
    for i in range(n):
        if diag[i]:
            if i != front:
                col_swap(front, i)
                diag[front], diag[i] = diag[i], diag[front]
            front += 1
    return r, [a[i][i] for i in range(n)]


def count_quadric_mod_p_closed_form(F: QuadraticPolynomial, p: int) -> QuadricCount:
    """Exact (nonsingular, total) counts of F = 0 over F_p^m, p odd.

    Assembles p^(m-1) + eps_p^r (det/p) p^(m-r/2-1) K_r(w; p) as an exact
    integer; the singular correction is kappa_p * p^(m-r). If the reduced
    linear part has a unit coefficient outside the rank block, both counts
    are exactly p^(m-1).
    """
    if p == 2:
        raise ValueError("p = 2 is excluded from the closed form")
    if not is_prime(p):
        raise ValueError("p must be prime")
    m = F.m
    if m == 0:
        raise ValueError("need at least one variable")
    two_q = F.two_Q_int()
    inv2 = (p + 1) // 2
    qp = [[v * inv2 % p for v in row] for row in two_q]
    R, diag = diagonalize_mod_p(qp, p)
    r = sum(1 for d in diag if d)
    # transformed linear part D = R^t B mod p
    D = [sum(R[i][j] * F.B[i] for i in range(m)) % p for j in range(m)]
    eps_tag = "1" if p % 4 == 1 else "i"
    if any(D[i] for i in range(r, m)):
        data = GaussSumData(p, r, eps_tag, 0, 0, 0, 0, "linear-unit")
        c = p ** (m - 1)
        return QuadricCount(c, c, data)
    det_part = 1
    w = 4 * F.N % p
    for i in range(r):
        det_part = det_part * diag[i] % p
        inv_a = pow(diag[i], p - 2, p)
        w = (w - inv_a * D[i] * D[i]) % p
    jac = jacobi_symbol(det_part, p) if r else 1
    if r % 2:
        # K_r = eps_p (w/p) sqrt(p); eps_p^(r+1) is a sign
        sign = (-1) ** (((r + 1) // 2) % 2) if p % 4 == 3 else 1
        gauss = sign * jac * jacobi_symbol(w, p) * p ** (m - (r + 1) // 2)
    else:
        sign = (-1) ** ((r // 2) % 2) if p % 4 == 3 else 1
        k_val = (p - 1) if w == 0 else -1
        gauss = sign * jac * k_val * p ** (m - r // 2 - 1)
    kappa = 1 if w == 0 else 0
    total = p ** (m - 1) + gauss
    nonsingular = total - kappa * p ** (m - r)
    assert 0 <= nonsingular <= total, "assembled count must be a non-negative integer"
    data = GaussSumData(p, r, eps_tag, jac, w, kappa, gauss, "gauss")
    return QuadricCount(nonsingular, total, data)


def _as_poly(F) -> IntPolynomial:
    if isinstance(F, QuadraticPolynomial):
        return F.to_polynomial()
    if isinstance(F, IntPolynomial):
        return F
    raise TypeError("expected IntPolynomial or QuadraticPolynomial")


def count_mod_q_bruteforce(
    F,
    q: int,
    nonsingular_only: bool = False,
    budget: int | None = None,
) -> int:
    """Exact count by full enumeration of (Z/q)^m."""
    poly = _as_poly(F)
    if nonsingular_only:
        from .nt import factorize

        fac = factorize(q)
        if len(fac) != 1:
            raise ValueError("nonsingular counting requires a prime-power modulus")
        (p, _), = fac.items()
        return gridcount.count_zeros_mod_q(poly, q, budget, nonsingular_p=p)
    return gridcount.count_zeros_mod_q(poly, q, budget)


# ---------------------------------------------------------------------------
# p-adic witnesses and Hensel lifting


@dataclass(frozen=True)
class PadicWitness:
    p: int
    v: int
    residues: Tuple[int, ...]   # point mod p^(2v-1)
    index: int                  # coordinate whose partial is nonzero mod p^v

    def verify(self, C: IntPolynomial, x_indices: Sequence[int] | None = None) -> bool:
        """Re-check both defining congruences directly."""
        mod = self.p ** (2 * self.v - 1)
        if C.evaluate_mod(self.residues, mod) != 0:
            return False
        pv = self.p ** self.v
        idx = tuple(x_indices) if x_indices is not None else tuple(range(C.num_vars))
        if self.index not in idx:
            return False
        return C.derivative(self.index).evaluate_mod(self.residues, pv) != 0


def _lex_chunks(m: int, q: int):
    total = q ** m
    start = 0
    while start < total:
        stop = min(start + (1 << 18), total)
        idx = np.arange(start, stop, dtype=np.int64)
        coords = np.empty((m, stop - start), dtype=np.int64)
        for i in range(m - 1, -1, -1):
            coords[i] = idx % q
            idx //= q
        yield coords
        start = stop


def find_padic_nonsingular(
    C: IntPolynomial,
    p: int,
    v_max: int,
    x_indices: Sequence[int] | None = None,
    budget: int | None = None,
) -> Optional[PadicWitness]:
    """Breadth-first witness search: increasing v, lexicographic residues.

    Returns the first (x, r) mod p^(2v-1) with C = 0 mod p^(2v-1) and some
    x-block partial nonzero mod p^v, or None if v_max is exhausted.
    """
    idx = tuple(x_indices) if x_indices is not None else tuple(range(C.num_vars))
    grads = [(i, C.derivative(i)) for i in idx]
    if all(g.is_zero() for _, g in grads):
        raise ValueError("all x-partials vanish identically")
    m = C.num_vars
    for v in range(1, v_max + 1):
        q = p ** (2 * v - 1)
        pv = p ** v
        check_budget(q ** m, budget)
        tables = gridcount._pow_tables(C, q)
        gtables = [gridcount._pow_tables(g, pv) for _, g in grads]
        for coords in _lex_chunks(m, q):
            vals = gridcount.eval_mod_on_coords(C, q, coords, tables)
            cand = np.nonzero(vals == 0)[0]
            if cand.size == 0:
                continue
            sub = coords[:, cand] % pv
            good = np.zeros(cand.size, dtype=bool)
            first_index = np.full(cand.size, -1, dtype=np.int64)
            for (i, g), tb in zip(grads, gtables):
                nz = gridcount.eval_mod_on_coords(g, pv, sub, tb) != 0
                newly = nz & ~good
                first_index[newly] = i
                good |= nz
            hits = np.nonzero(good)[0]
            if hits.size:
                j = hits[0]
                point = tuple(int(coords[i, cand[j]]) for i in range(m))
                return PadicWitness(p, v, point, int(first_index[j]))
    return None


def count_witnesses(
    C: IntPolynomial, p: int, v: int, x_indices: Sequence[int] | None = None,
    budget: int | None = None,
) -> int:
    """#{x mod p^(2v-1) : C = 0 mod p^(2v-1), some x-partial != 0 mod p^v}."""
    idx = tuple(x_indices) if x_indices is not None else tuple(range(C.num_vars))
    grads = [C.derivative(i) for i in idx]
    m = C.num_vars
    q = p ** (2 * v - 1)
    pv = p ** v
    check_budget(q ** m, budget)
    tables = gridcount._pow_tables(C, q)
    gtables = [gridcount._pow_tables(g, pv) for g in grads]
    count = 0
    for coords in _lex_chunks(m, q):
        vals = gridcount.eval_mod_on_coords(C, q, coords, tables)
        cand = np.nonzero(vals == 0)[0]
        if cand.size == 0:
            continue
        sub = coords[:, cand] % pv
        good = np.zeros(cand.size, dtype=bool)
        for g, tb in zip(grads, gtables):
            good |= gridcount.eval_mod_on_coords(g, pv, sub, tb) != 0
        count += int(good.sum())
    return count


@dataclass(frozen=True)
class HenselCount:
    p: int
    t: int
    exact: Optional[int]
    certified_lower: Optional[int]
    v: Optional[int]
    witness_count: Optional[int]


def hensel_count(
    F,
    p: int,
    t: int,
    budget: int | None = None,
    v: int | None = None,
    v_max: int = 3,
) -> HenselCount:
    """Solution count mod p^t plus a Davenport-Hensel certified lower bound.

    The certified bound is W * p^((t - (2v-1))(m-1)) where W counts
    witnesses mod p^(2v-1); for t < 2v-1 it degrades to 1 if W > 0.
    """
    poly = _as_poly(F)
    m = poly.num_vars
    exact = None
    try:
        exact = gridcount.count_zeros_mod_q(poly, p ** t, budget)
    except BudgetExceeded:
        pass
    certified = None
    wcount = None
    v_used = v
    if v_used is None and not all(g.is_zero() for g in poly.gradient()):
        try:
            wit = find_padic_nonsingular(poly, p, v_max, budget=budget)
            v_used = wit.v if wit else None
        except BudgetExceeded:
            v_used = None
    if v_used is not None:
        wcount = count_witnesses(poly, p, v_used, budget=budget)
        if wcount:
            if t >= 2 * v_used - 1:
                certified = wcount * p ** ((t - (2 * v_used - 1)) * (m - 1))
            else:
                certified = 1
    if exact is None and certified is None:
        raise BudgetExceeded("neither exact nor certified count computable")
    if exact is not None and certified is not None and certified > exact:
        raise AssertionError("certified bound exceeds exact count; arithmetic bug")
    return HenselCount(p, t, exact, certified, v_used, wcount)


# ---------------------------------------------------------------------------
# Legendre-symbol value counts (character sums)


@dataclass(frozen=True)
class KatzCount:
    p: int
    m: int
    count_plus: int     # #{x : (f(x)/p) = 1}
    count_zero: int     # #{x : f(x) = 0}
    S: int              # sum of chi(f(x))

    def identity_holds(self) -> bool:
        return 2 * self.count_plus == self.p ** self.m + self.S - self.count_zero


def quadratic_residue_value_count(f: IntPolynomial, p: int, budget: int | None = None) -> KatzCount:
    plus, minus, zero = gridcount.character_sum_counts(f, p, budget)
    return KatzCount(p, f.num_vars, plus, zero, plus - minus)


# ---------------------------------------------------------------------------
# structured point search on quadrics mod p


def find_nonsingular_zero_mod_p(F: QuadraticPolynomial, p: int) -> Optional[Tuple[int, ...]]:
    """A nonsingular zero of F over F_p, or None if there is none.

    Decides existence with the closed form first, then constructs a point
    by diagonalizing mod p and solving a single variable with a modular
    square root; cost O(p^2) field operations in the worst case, never a
    p^m enumeration.
    """
    import itertools

    if p == 2:
        poly = F.to_polynomial()
        grads = poly.gradient()
        for point in itertools.product(range(2), repeat=F.m):
            if poly.evaluate_mod(point, 2) == 0 and any(
                g.evaluate_mod(point, 2) for g in grads
            ):
                return point
        return None
    if count_quadric_mod_p_closed_form(F, p).nonsingular == 0:
        return None
    m = F.m
    two_q = F.two_Q_int()
    inv2 = (p + 1) // 2
    qp = [[v * inv2 % p for v in row] for row in two_q]
    R, diag = diagonalize_mod_p(qp, p)
    r = sum(1 for d in diag if d)
    D = [sum(R[i][j] * F.B[i] for i in range(m)) % p for j in range(m)]
    N = F.N % p

    def back(point):
        return tuple(sum(R[i][j] * point[j] for j in range(m)) % p for i in range(m))

    for j in range(r, m):
        if D[j]:
            point = [0] * m
            point[j] = (-N) * pow(D[j], p - 2, p) % p
            return back(point)
    # block form sum A_i x_i^2 + D_i x_i + N; a nonsingular zero exists and
    # (by restricting to the first three block variables) one exists with
    # all other coordinates zero
    A1, D1 = diag[0], D[0]
    inv2a = pow(2 * A1 % p, p - 2, p)
    free = min(r, 3) - 1  # how many extra block variables to sweep
    for rest in itertools.product(range(p), repeat=free):
        c = N
        grad_rest = []
        for t, s in enumerate(rest):
            c = (c + diag[1 + t] * s * s + D[1 + t] * s) % p
            grad_rest.append((2 * diag[1 + t] * s + D[1 + t]) % p)
        disc = (D1 * D1 - 4 * A1 * c) % p
        root = sqrt_mod_p(disc, p)
        if root is None:
            continue
        for sgn in (1, -1):
            x1 = (-D1 + sgn * root) * inv2a % p
            g0 = (2 * A1 * x1 + D1) % p
            if g0 or any(grad_rest):
                point = [0] * m
                point[0] = x1
                for t, s in enumerate(rest):
                    point[1 + t] = s
                return back(point)
    return None
