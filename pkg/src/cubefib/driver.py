"""End-to-end experiment orchestration: form documents, brute-force counts,
fibration-based certified lower bounds, representation numbers, exponent
fits, and deterministic JSON/CSV reporting."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import gridcount
from .lattice import hyperplane_count_exact
from .linalg import QuadraticPolynomial
from .nt import squarefree_divisors, vector_gcd
from .polynomials import IntPolynomial, VariableSplit
from .sieve import AdmissibleSetSpec, box_with_large_Q, build_conditions, enumerate_admissible


# ---------------------------------------------------------------------------
# form documents

FORM_SCHEMA = "cubefib-form-v1"


@dataclass
class FormDocument:
    n: int
    poly: IntPolynomial
    name: str = ""
    split: Optional[VariableSplit] = None
    mode: Optional[str] = None
    metadata: Dict[str, object] = field(default_factory=dict)
    degree: int = 3

    def __eq__(self, other):
        return (
            isinstance(other, FormDocument)
            and (self.n, self.poly, self.name, self.mode, self.degree)
            == (other.n, other.poly, other.name, other.mode, other.degree)
            and self.metadata == other.metadata
            and _split_key(self.split) == _split_key(other.split)
        )


def _split_key(split):
    return None if split is None else (split.n, split.x_indices, split.y_indices, split.role)


class FormValidationError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _find_line(text: str, needle: str) -> Optional[int]:
    for i, ln in enumerate(text.splitlines(), start=1):
        if needle in ln:
            return i
    return None


def parse_form_document(text: str) -> FormDocument:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormValidationError(e.msg, line=e.lineno)
    if obj.get("schema") != FORM_SCHEMA:
        raise FormValidationError(f"schema must be {FORM_SCHEMA}")
    n = int(obj["n"])
    degree = int(obj.get("degree", 3))
    terms = {}
    for idx, item in enumerate(obj.get("terms", [])):
        exps = tuple(int(e) for e in item["exps"])
        coef = int(item["coef"])
        if len(exps) != n:
            raise FormValidationError(
                f"term {idx}: exponent vector has length {len(exps)}, expected {n}",
                line=_find_line(text, json.dumps(item["exps"])),
            )
        if sum(exps) != degree:
            raise FormValidationError(
                f"term {idx}: degree {sum(exps)} != {degree}",
                line=_find_line(text, json.dumps(item["exps"])),
            )
        terms[exps] = terms.get(exps, 0) + coef
    poly = IntPolynomial(n, terms)
    split = None
    mode = None
    if obj.get("split"):
        s = obj["split"]
        mode = s.get("mode", "pi")
        role = mode if mode in ("pi", "pi_prime") else "pi"
        try:
            split = VariableSplit(n, tuple(s["x_vars"]), tuple(s["y_vars"]), role=role)
            split.validate_against(poly)
        except ValueError as e:
            raise FormValidationError(str(e), line=_find_line(text, '"split"'))
    return FormDocument(n, poly, obj.get("name", ""), split, mode,
                        dict(obj.get("metadata", {})), degree)


def serialize_form_document(doc: FormDocument) -> str:
    terms = [
        {"exps": list(exps), "coef": str(coef)}
        for exps, coef in doc.poly.sorted_terms()
    ]
    obj = {
        "schema": FORM_SCHEMA,
        "name": doc.name,
        "n": doc.n,
        "degree": doc.degree,
        "terms": terms,
        "split": None
        if doc.split is None
        else {
            "x_vars": list(doc.split.x_indices),
            "y_vars": list(doc.split.y_indices),
            "mode": doc.mode or doc.split.role,
        },
        "metadata": doc.metadata,
    }
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# counting series


@dataclass
class CountSeries:
    rows: List[Tuple[int, int]]          # (B, N(B)), monotone in B
    predicate: str                       # "primitive-box" | "fibration-lower-bound"
    config_hash: str = ""
    samples: List[Tuple[int, ...]] = field(default_factory=list)
    per_B_fibres: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for (b1, c1), (b2, c2) in zip(self.rows, self.rows[1:]):
            if b2 >= b1 and c2 < c1:
                raise ValueError("count series must be monotone in B")

    def to_csv(self) -> str:
        lines = ["B,count,logB,logN"]
        for B, c in self.rows:
            logn = "" if c <= 0 else repr(math.log(c))
            lines.append(f"{B},{c},{math.log(B)!r},{logn}")
        return "\n".join(lines)


def brute_force_N(C: IntPolynomial, B_list: Sequence[int],
                  budget: int | None = None) -> CountSeries:
    """Exact primitive zero counts in the height box, one grid pass."""
    n = C.num_vars
    Bmax = max(B_list)
    lows = [-Bmax] * n
    highs = [Bmax] * n
    gridcount.check_budget(gridcount.box_point_count(lows, highs), budget)
    buckets = np.zeros(Bmax + 1, dtype=np.int64)
    for coords, vals in gridcount.eval_on_box(C, lows, highs, budget):
        mask = vals == 0
        if not mask.any():
            continue
        sel = coords[:, np.asarray(mask, dtype=bool)]
        g = np.zeros(sel.shape[1], dtype=np.int64)
        for i in range(n):
            g = np.gcd(g, np.abs(sel[i]))
        prim = g == 1
        if not prim.any():
            continue
        sel = sel[:, prim]
        height = np.abs(sel).max(axis=0)
        buckets += np.bincount(height, minlength=Bmax + 1)
    cum = np.cumsum(buckets)
    rows = [(B, int(cum[B])) for B in sorted(B_list)]
    return CountSeries(rows, "primitive-box")


@dataclass
class FibrationCountResult:
    series: CountSeries
    Y_values: Dict[int, int]
    mode: str
    label: str                           # "certified-lower-bound" | "sampling-lower-bound"
    spec: AdmissibleSetSpec


def default_Y_rule(B: int, eps: Fraction = Fraction(1, 20)) -> int:
    """Y = B^(1 - 2 eps) rounded down (default eps = 0.05)."""
    exponent = 1 - 2 * float(eps)
    return max(1, int(B ** exponent))


def fibration_count(
    C: IntPolynomial,
    split: VariableSplit,
    mode: str,
    B_list: Sequence[int],
    Y_rule=default_Y_rule,
    box_shrink: Fraction = Fraction(1),
    budget: int | None = None,
    sample_limit: int = 3,
    spec: AdmissibleSetSpec | None = None,
) -> FibrationCountResult:
    """Sum of exact per-fibre counts over the admissible set: a certified
    lower bound for N(B) in pi_prime mode (linear fibres, every counted
    point is a primitive zero of C); pi mode uses bounded per-fibre search
    and is labeled sampling-based."""
    if mode == "pi":
        return _fibration_count_pi(C, split, B_list, Y_rule, budget)
    xs = split.x_indices
    k = len(xs)
    from .fibration import split_cubic

    _, q_list, R = split_cubic(C, split)
    if spec is None:
        cond = build_conditions(C, split, "pi_prime", budget=budget)
        if cond.insoluble_at is not None:
            rows = [(B, 0) for B in sorted(B_list)]
            empty = AdmissibleSetSpec(len(split.y_indices), [], cond)
            return FibrationCountResult(
                CountSeries(rows, "fibration-lower-bound"), {}, mode,
                f"locally insoluble at {cond.insoluble_at}", empty)
        q_first = next(q for q in q_list if not q.is_zero())
        box = box_with_large_Q(q_first, P=100)
        intervals = []
        for lo, hi in box.intervals:
            mid_width = (hi - lo) * box_shrink
            intervals.append((lo, lo + mid_width))
        spec = AdmissibleSetSpec(len(split.y_indices), intervals, cond,
                                 box_change=box.change)
    rows = []
    samples: List[Tuple[int, ...]] = []
    Yvals = {}
    fibre_counts = {}
    for B in sorted(B_list):
        Y = Y_rule(B)
        Yvals[B] = Y
        total = 0
        nfib = 0
        for y in enumerate_admissible(spec, Y, budget):
            vals = [q.evaluate(list(y)) for q in q_list]
            if all(v == 0 for v in vals):
                continue
            d0 = vector_gcd(vals)
            rval = R.evaluate(list(y))
            assert rval % d0 == 0, "admissibility must force local solubility at every prime"
            a = [v // d0 for v in vals]
            b = rval // d0
            g = vector_gcd(y)
            res = hyperplane_count_exact(a, b, B, g=g,
                                         sample_limit=sample_limit if nfib < 4 else 0)
            total += res.exact
            nfib += 1
            for pt in res.samples:
                if len(samples) < 16 and gcd(vector_gcd(pt), g) == 1:
                    full = list(pt) + list(y)
                    assert C.evaluate(full) == 0
                    samples.append(tuple(full))
        rows.append((B, total))
        fibre_counts[B] = nfib
    series = CountSeries(rows, "fibration-lower-bound", samples=samples,
                         per_B_fibres=fibre_counts)
    return FibrationCountResult(series, Yvals, mode, "certified-lower-bound", spec)


def _fibration_count_pi(C, split, B_list, Y_rule, budget):
    """Quadric fibres: bounded per-fibre point search, a sampled lower bound."""
    from .fibration import split_cubic
    from .sieve import fibre_solubility

    cond = build_conditions(C, split, "pi", budget=budget)
    h = len(split.y_indices)
    spec = AdmissibleSetSpec(h, [(Fraction(-1), Fraction(1))] * h, cond)
    rows = []
    Yvals = {}
    for B in sorted(B_list):
        Y = Y_rule(B)
        Yvals[B] = Y
        total = 0
        for y in enumerate_admissible(spec, Y, budget):
            verdict = fibre_solubility(y, C, split, "pi", want_point=True,
                                       search_bound=min(B, 8))
            if verdict.point is not None:
                pt = verdict.point
                if max(abs(v) for v in pt) <= B:
                    full = list(pt) + list(y)
                    if gcd(vector_gcd(pt), vector_gcd(y)) == 1:
                        total += 1
        rows.append((B, total))
    series = CountSeries(rows, "fibration-lower-bound")
    return FibrationCountResult(series, Yvals, "pi", "sampling-lower-bound", spec)


# ---------------------------------------------------------------------------
# representation numbers of definite forms


@dataclass
class RepresentationCount:
    count: int
    by_divisor: Dict[int, int]           # d -> M_d
    inclusion_exclusion_ok: bool
    precondition_ok: bool


def _solutions_of_definite(F: QuadraticPolynomial, N: int) -> List[Tuple[int, ...]]:
    """All integer z with F(z) = N, for positive-definite quadratic part.

    Recursive interval descent with an exact root test at the innermost
    level; never scans a full box.
    """
    from .lattice import QuadraticSolvedLevels

    m = F.m
    den = 1
    for row in F.Q.entries:
        for v in row:
            den = den * v.denominator // gcd(den, v.denominator)
    G = [[int(F.Q.entries[i][j] * den) for j in range(m)] for i in range(m)]
    lin = [den * b for b in F.B]
    c = den * (F.N - N)
    if any(l % 2 for l in lin):
        G = [[2 * v for v in row] for row in G]
        w = lin
        c *= 2
    else:
        w = [l // 2 for l in lin]
    solver = QuadraticSolvedLevels(G, w, c)
    out: List[Tuple[int, ...]] = []

    def value(t):
        tot = c
        for i in range(m):
            tot += G[i][i] * t[i] * t[i] + 2 * w[i] * t[i]
            for j in range(i + 1, m):
                tot += 2 * G[i][j] * t[i] * t[j]
        return tot

    def recurse(j, outer):
        cnt, lo, hi = solver.bounds_at(j, outer)
        if cnt == 0:
            return
        if j == 0:
            a = G[0][0]
            bq = 2 * (w[0] + sum(G[0][1 + i] * outer[i] for i in range(m - 1)))
            cq = value([0] + outer)
            disc = bq * bq - 4 * a * cq
            if disc < 0:
                return
            s = isqrt(disc)
            if s * s != disc:
                return
            for sgn in (1, -1):
                num = -bq + sgn * s
                if num % (2 * a) == 0:
                    out.append(tuple([num // (2 * a)] + outer))
                if s == 0:
                    break
            return
        for tj in range(lo, hi + 1):
            recurse(j - 1, [tj] + outer)

    recurse(m - 1, [])
    return sorted(set(out))


def representation_count_coprime(
    F: QuadraticPolynomial,
    xi: Sequence[int],
    N_target: int,
    window: Fraction = Fraction(1),
) -> RepresentationCount:
    """M(F, N) = #{x : gcd(x, 2 disc) = 1, F(x + xi) = N, |x| <= window * sqrt(N)}
    with the indicator window, plus the Mobius decomposition over d | 2 disc."""
    rank, pos, neg = _signature(F)
    if not (rank == F.m and (pos == F.m or neg == F.m)):
        raise ValueError("F must be definite")
    if neg == F.m:
        F = QuadraticPolynomial(F.Q.scale(-1), [-b for b in F.B], -F.N)
        N_target = -N_target
    if N_target < 0:
        return RepresentationCount(0, {}, True, True)
    # Delta is det of the half-integer matrix of F when integral, else det(2Q);
    # the coprimality predicate gcd(x, 2 Delta) = 1 has the same prime support
    # either way
    det_q = F.Q.det()
    delta = abs(int(det_q)) if det_q.denominator == 1 and det_q != 0 else abs(F.disc())
    disc = abs(F.disc())
    precondition_ok = (F.evaluate(list(xi)) - N_target) % (2 * delta) == 0
    P = isqrt(N_target) if N_target > 0 else 1
    bound = (window * P)
    zs = _solutions_of_definite(F, N_target)
    xi = list(xi)
    count = 0
    by_divisor: Dict[int, int] = {}
    for d, _mu in squarefree_divisors(2 * disc):
        by_divisor[d] = 0
    for z in zs:
        x = [zi - xii for zi, xii in zip(z, xi)]
        in_box = all(Fraction(abs(v)) <= bound for v in x)
        if not in_box:
            continue
        gx = vector_gcd(x)
        if gcd(gx, 2 * disc) == 1:
            count += 1
        for d in by_divisor:
            if all(v % d == 0 for v in x):
                by_divisor[d] += 1
    mob = sum(mu * by_divisor[d] for d, mu in squarefree_divisors(2 * disc))
    return RepresentationCount(count, by_divisor, mob == count, precondition_ok)


def _signature(F: QuadraticPolynomial):
    from .linalg import rank_signature_over_Q

    return rank_signature_over_Q(F.Q)


# ---------------------------------------------------------------------------
# exponent fits


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    residuals: List[float]
    points_used: int


def fit_exponent(series: CountSeries) -> ExponentFit:
    """Ordinary least squares of log N(B) against log B."""
    pts = [(math.log(B), math.log(c)) for B, c in series.rows if c > 0]
    if len(pts) < 4:
        raise ValueError("need at least 4 positive counts")
    n = len(pts)
    sx = sum(p[0] for p in pts)
    sy = sum(p[1] for p in pts)
    sxx = sum(p[0] * p[0] for p in pts)
    sxy = sum(p[0] * p[1] for p in pts)
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    residuals = [y - (slope * x + intercept) for x, y in pts]
    return ExponentFit(slope, intercept, residuals, n)


@dataclass
class FitVerdict:
    passed: bool
    slope: float
    predicted: float
    slack: float


def compare_fit(fit: ExponentFit, predicted: float, slack: float = 0.5) -> FitVerdict:
    return FitVerdict(fit.slope >= predicted - slack, fit.slope, float(predicted), slack)


# ---------------------------------------------------------------------------
# reports

REPORT_SCHEMA = "cubefib-report-v1"


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def build_report(config: dict, sections: dict, seed: int = 0) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "seed": seed,
        "config_hash": config_hash(config),
        "config": config,
        "sections": sections,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, IntPolynomial):
        return obj.to_text()
    if hasattr(obj, "__dict__"):
        return {k: v for k, v in obj.__dict__.items() if not k.startswith("_")}
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    return str(obj)
