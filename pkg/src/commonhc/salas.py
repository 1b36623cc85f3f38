"""Weighted translation and homothety on ``L^1(R, omega)``: admissibility
of a weight and finite-horizon searches for the hypercyclicity criteria.

Everything here is a semi-decision.  Admissibility is a supremum over a
grid (plus local refinement), and the criteria are asymptotic statements
checked on ``n <= n_max``; reports say which horizon they refer to.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .funcspaces import WeightedMeasure, weighted_integral

WEIGHT_KINDS = ("constant", "reciprocal-linear", "reciprocal-quadratic", "exponential", "table")
VERDICTS = ("witness-found", "fails-on-horizon", "inconclusive")
TRAILING_FRACTION = 0.25
FAIL_FACTOR = 10.0
SPREAD_TOL = 0.01


class WeightDegeneracyError(DomainError):
    """An integral used as a denominator vanished."""


# --------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightSpec:
    """Positive weight ``omega`` on the line.

    ``kind`` is one of :data:`WEIGHT_KINDS` or ``"custom"``.  Closed-form
    kinds carry an exact antiderivative; ``table`` holds sorted ``(x, w)``
    pairs, interpolated linearly and extended by its end values.

    Parameters
    ----------
    kind : str
    params : dict
        ``value`` (constant), ``rate`` (exponential ``exp(rate x)``),
        ``points`` (table).
    func : callable, optional
        Evaluator for ``custom`` weights; integrals then use quadrature.
    sup : float or None
        Declared bound ``sup omega``; ``None`` means unbounded.
    """

    kind: str
    params: dict = field(default_factory=dict)
    func: Callable | None = None
    sup: float | None = None

    def __post_init__(self):
        if self.kind == "custom":
            if self.func is None:
                raise DomainError("custom weights need an evaluator")
            return
        if self.kind not in WEIGHT_KINDS:
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if self.kind == "constant" and not float(self.params.get("value", 1.0)) > 0:
            raise DomainError("constant weight must be positive")
        if self.kind == "table":
            pts = np.asarray(self.params.get("points", ()), dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
                raise DomainError("table weights need at least two (x, w) pairs")
            if np.any(np.diff(pts[:, 0]) <= 0):
                raise DomainError("table abscissae must be strictly increasing")
            if np.any(pts[:, 1] <= 0):
                raise DomainError("table weights must be positive")

    @classmethod
    def from_config(cls, d: dict) -> "WeightSpec":
        kind = d.get("kind")
        params = {k: v for k, v in d.items() if k != "kind"}
        if kind == "table":
            params["points"] = [tuple(map(float, p)) for p in params.get("points", ())]
        return cls(kind, params, sup=default_sup(kind, params))

    # evaluation --------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k == "custom":
            return np.asarray(self.func(x), dtype=float)
        if k == "constant":
            return np.full_like(x, float(self.params.get("value", 1.0)))
        if k == "reciprocal-linear":
            return 1.0 / (1.0 + np.abs(x))
        if k == "reciprocal-quadratic":
            return 1.0 / (1.0 + x * x)
        if k == "exponential":
            return np.exp(float(self.params.get("rate", 1.0)) * x)
        pts = np.asarray(self.params["points"], dtype=float)
        return np.interp(x, pts[:, 0], pts[:, 1])

    def integral(self, a, b):
        """``int_a^b omega`` (vectorized); closed form unless ``custom``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        k = self.kind
        if k == "custom":
            return np.vectorize(self.quad_integral)(a, b)
        if k == "constant":
            return float(self.params.get("value", 1.0)) * (b - a)
        if k == "reciprocal-linear":
            return _reciprocal_linear(a, b)
        if k == "reciprocal-quadratic":
            # arctan(b) - arctan(a), free of cancellation for nearby ends
            return np.arctan2(b - a, 1.0 + a * b)
        if k == "exponential":
            r = float(self.params.get("rate", 1.0))
            return np.exp(r * a) * np.expm1(r * (b - a)) / r
        return _table_antiderivative(self.params["points"], b) - _table_antiderivative(self.params["points"], a)

    def quad_integral(self, a: float, b: float) -> float:
        """Adaptive Gauss-Legendre value of ``int_a^b omega`` (independent of the closed forms)."""
        if a == b:
            return 0.0
        lo, hi = (a, b) if a < b else (b, a)
        pts = [lo, hi]
        if self.kind in ("reciprocal-linear",) and lo < 0 < hi:
            pts = [lo, 0.0, hi]
        if self.kind == "table":
            xs = [float(p[0]) for p in self.params["points"]]
            pts = sorted(set(pts) | {x for x in xs if lo < x < hi})
        m = WeightedMeasure(p=1.0, alpha=None, omega=self.__call__, tol=1e-13)
        val, _, _ = weighted_integral(lambda x: np.ones_like(x), pts, m, affine_pieces=False)
        return val if a < b else -val

    def tail_bound(self, T: float) -> float:
        """Upper bound on ``int_{|x| > T} omega``; ``inf`` when not integrable."""
        k = self.kind
        if k == "reciprocal-quadratic":
            return 2.0 * math.atan2(1.0, T) if T > 0 else math.pi
        if k == "table":
            pts = self.params["points"]
            return 0.0 if (pts[0][1] == 0 and pts[-1][1] == 0) else math.inf
        return math.inf

    def probe(self, xs: Sequence[float]) -> list[str]:
        """Positivity and declared-bound violations at the probe points."""
        xs = np.asarray(xs, dtype=float)
        w = self(xs)
        problems = [f"omega({x!r}) = {v!r} is not positive" for x, v in zip(xs, w) if not v > 0]
        if self.sup is not None:
            problems += [f"omega({x!r}) = {v!r} exceeds declared sup {self.sup!r}"
                         for x, v in zip(xs, w) if v > self.sup * (1 + 1e-12)]
        return problems

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def default_sup(kind: str, params: dict) -> float | None:
    if kind == "constant":
        return float(params.get("value", 1.0))
    if kind in ("reciprocal-linear", "reciprocal-quadratic"):
        return 1.0
    if kind == "table":
        return max(float(p[1]) for p in params["points"])
    return None


def _reciprocal_linear(a, b):
    """``F(b) - F(a)`` for ``F(x) = sign(x) log(1 + |x|)``, accurate when ``a, b`` share a sign."""
    same_pos = (a >= 0) & (b >= 0)
    same_neg = (a <= 0) & (b <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.log1p((b - a) / (1.0 + np.abs(a)))
        neg = np.log1p((b - a) / (1.0 + np.abs(b)))
    mixed = np.sign(b) * np.log1p(np.abs(b)) - np.sign(a) * np.log1p(np.abs(a))
    return np.where(same_pos, pos, np.where(same_neg, neg, mixed))


def _table_antiderivative(points, x):
    pts = np.asarray(points, dtype=float)
    xs, ws = pts[:, 0], pts[:, 1]
    x = np.asarray(x, dtype=float)
    areas = np.concatenate([[0.0], np.cumsum(0.5 * (ws[1:] + ws[:-1]) * np.diff(xs))])
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    h = xs[i + 1] - xs[i]
    t = np.clip(x, xs[0], xs[-1]) - xs[i]
    inside = areas[i] + ws[i] * t + 0.5 * (ws[i + 1] - ws[i]) * t * t / h
    left = (np.minimum(x, xs[0]) - xs[0]) * ws[0]
    right = (np.maximum(x, xs[-1]) - xs[-1]) * ws[-1]
    return inside + left + right


# --------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    """Grid supremum of an integral ratio, refined locally around the argmax.

    ``refinement_gain`` is how much the local search raised the grid
    supremum; it doubles as the grid error estimate.
    """

    kind: str
    sup_ratio: float
    argmax: tuple
    grid_sup: float
    refinement_gain: float
    n_points: int
    skipped: int
    C_cap: float | None
    verdict: str
    notes: tuple = ()


def _verdict(sup_ratio: float, C_cap: float | None) -> str:
    if C_cap is None:
        return f"admissible on grid with C <= {sup_ratio!r}"
    if sup_ratio <= C_cap:
        return f"admissible on grid with C <= {sup_ratio!r} (cap {C_cap!r})"
    return f"ratio {sup_ratio!r} exceeds cap {C_cap!r} on grid"


def translation_ratio(weight: WeightSpec, a):
    a = np.asarray(a, dtype=float)
    num = weight.integral(a - 1.0, a)
    den = weight.integral(a, a + 1.0)
    if np.any(den <= 0):
        bad = np.atleast_1d(a)[np.atleast_1d(den <= 0)][0]
        raise WeightDegeneracyError(f"int_a^(a+1) omega vanishes at a = {bad!r}")
    return num / den


def translation_admissible(weight: WeightSpec, a_grid: Sequence[float], C_cap: float | None = None
                           ) -> AdmissibilityReport:
    """``sup_a int_{a-1}^a omega / int_a^{a+1} omega`` over ``a_grid``.

    The grid maximum is refined by a bounded scalar search over the two
    neighbouring grid cells.

    Raises
    ------
    WeightDegeneracyError
        If some denominator integral is zero.
    """
    a = np.asarray(a_grid, dtype=float)
    if a.size == 0:
        raise DomainError("a_grid is empty")
    ratios = translation_ratio(weight, a)
    i = int(np.argmax(ratios))
    grid_sup = float(ratios[i])
    lo = float(a[max(i - 1, 0)])
    hi = float(a[min(i + 1, a.size - 1)])
    best_a, best = float(a[i]), grid_sup
    if hi > lo:
        res = minimize_scalar(lambda t: -float(translation_ratio(weight, t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if -res.fun > best:
            best_a, best = float(res.x), float(-res.fun)
    return AdmissibilityReport("translation", best, (best_a,), grid_sup, best - grid_sup, int(a.size), 0, C_cap,
                               _verdict(best, C_cap))


def homothety_ratio(weight: WeightSpec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    num = weight.integral(x / 2.0, y / 2.0)
    den = weight.integral(x, y)
    if np.any(den <= 0):
        raise WeightDegeneracyError("int_x^y omega vanishes on a nondegenerate pair")
    return num / den


def pair_grid(values: Sequence[float]) -> list[tuple[float, float]]:
    """All admissible pairs ``x <= y`` from ``values`` on one side of 0."""
    v = sorted(set(float(t) for t in values))
    out = []
    for i, x in enumerate(v):
        for y in v[i:]:
            if (0 <= x <= y) or (x <= y <= 0):
                out.append((x, y))
    return out


def homothety_admissible(weight: WeightSpec, pairs: Sequence[tuple[float, float]], C_cap: float | None = None,
                         refine_rounds: int = 4) -> AdmissibilityReport:
    """``sup int_{x/2}^{y/2} omega / int_x^y omega`` over pairs with ``0 <= x <= y`` or ``x <= y <= 0``.

    Degenerate pairs ``x = y`` are skipped (both integrals vanish).  The
    best pair is refined on shrinking local ``9 x 9`` grids that respect
    the sign constraint.
    """
    P = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if P.size == 0:
        raise DomainError("pair grid is empty")
    x, y = P[:, 0], P[:, 1]
    if np.any(x > y) or np.any((x < 0) & (y > 0)):
        raise DomainError("pairs must satisfy 0 <= x <= y or x <= y <= 0")
    keep = x < y
    skipped = int(np.sum(~keep))
    notes = (f"{skipped} degenerate pair(s) x = y skipped",) if skipped else ()
    if not np.any(keep):
        raise DomainError("no nondegenerate pairs")
    x, y = x[keep], y[keep]
    r = homothety_ratio(weight, x, y)
    i = int(np.argmax(r))
    grid_sup = float(r[i])
    bx, by, best = float(x[i]), float(y[i]), grid_sup
    step = max(abs(by - bx), 1.0) / 4.0
    for _ in range(refine_rounds):
        offs = np.linspace(-step, step, 9)
        cx, cy = np.meshgrid(bx + offs, by + offs)
        cx, cy = cx.ravel(), cy.ravel()
        if bx >= 0:
            cx, cy = np.maximum(cx, 0.0), np.maximum(cy, 0.0)
        else:
            cx, cy = np.minimum(cx, 0.0), np.minimum(cy, 0.0)
        ok = cx < cy
        if np.any(ok):
            rr = homothety_ratio(weight, cx[ok], cy[ok])
            j = int(np.argmax(rr))
            if rr[j] > best:
                bx, by, best = float(cx[ok][j]), float(cy[ok][j]), float(rr[j])
        step /= 4.0
    return AdmissibilityReport("homothety", best, (bx, by), grid_sup, best - grid_sup, int(P.shape[0]), skipped,
                               C_cap, _verdict(best, C_cap), notes)


# --------------------------------------------------------------------------
# criteria


@dataclass(frozen=True)
class CriterionReport:
    """Finite-horizon evidence for a hypercyclicity criterion.

    ``values[n-1]`` is the largest of the monitored integrals at ``n``;
    ``witness`` is the least ``n`` where all are below ``threshold`` and
    ``witness_sequence`` a sparse decreasing run of ``(n, value)`` after it.
    ``trailing`` summarizes the last quarter of the horizon.
    """

    operator: str
    verdict: str
    threshold: float
    n_max: int
    witness: int | None
    witness_sequence: tuple
    trailing: dict
    columns: tuple
    rows: tuple
    values: np.ndarray = field(repr=False, compare=False, default=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()


def fmt(v: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{v:.17g}"


def _summarize(values: np.ndarray, threshold: float, empty: bool) -> tuple:
    n_max = values.size
    if empty:
        return "witness-found", 1, ((1, 0.0),), {"start": 1, "min": 0.0, "max": 0.0, "limit": 0.0, "spread": 0.0}
    below = np.flatnonzero(values < threshold)
    start = max(1, int(math.floor(n_max * (1.0 - TRAILING_FRACTION))) + 1)
    tail = values[start - 1:]
    t_min, t_max = float(np.min(tail)), float(np.max(tail))
    spread = (t_max - t_min) / t_min if t_min > 0 else math.inf
    trailing = {"start": start, "min": t_min, "max": t_max, "limit": float(tail[-1]), "spread": spread}
    if below.size:
        n0 = int(below[0]) + 1
        seq, n, last = [], n0, math.inf
        while n <= n_max:
            v = float(values[n - 1])
            if v < last:
                seq.append((n, v))
                last = v
            n *= 2
        return "witness-found", n0, tuple(seq), trailing
    if t_min > FAIL_FACTOR * threshold and spread < SPREAD_TOL:
        return "fails-on-horizon", None, (), trailing
    return "inconclusive", None, (), trailing


def translation_criterion(weight: WeightSpec, q_list: Sequence[float], n_max: int, threshold: float
                          ) -> CriterionReport:
    """Search ``n <= n_max`` with ``int_{n-q}^{n+q} omega`` and ``int_{-n-q}^{-n+q} omega``
    both below ``threshold`` for every ``q``.

    Verdicts: ``witness-found`` (least such ``n``), ``fails-on-horizon`` (the
    trailing-quarter minimum exceeds ``10 * threshold`` with relative spread
    below 1%), otherwise ``inconclusive``.  An empty ``q_list`` is a vacuous
    witness at ``n = 1``.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    n = np.arange(1, n_max + 1, dtype=float)
    values = np.zeros(n_max)
    rows = []
    per_q = []
    for q in q_list:
        q = float(q)
        left = weight.integral(n - q, n + q)
        right = weight.integral(-n - q, -n + q)
        per_q.append((q, left, right))
        values = np.maximum(values, np.maximum(left, right))
    for idx in range(n_max):
        for q, left, right in per_q:
            rows.append((idx + 1, q, float(left[idx]), float(right[idx])))
    verdict, witness, seq, trailing = _summarize(values, threshold, not per_q)
    return CriterionReport("translation", verdict, float(threshold), n_max, witness, seq, trailing,
                           ("n", "q", "left", "right"), tuple(rows), values)


def homothety_criterion(weight: WeightSpec, ab_list: Sequence[tuple[float, float]], n_max: int, threshold: float
                        ) -> CriterionReport:
    """As :func:`translation_criterion` with integrals over ``[2^n a, 2^n b]`` and ``[-2^n b, -2^n a]``.

    Raises
    ------
    DomainError
        If some pair has ``a <= 0`` or ``a > b``, or ``n_max > 1000``.
    """
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    if not 1 <= n_max <= 1000:
        raise DomainError("n_max must lie in [1, 1000] (2^n must stay finite)")
    for a, b in ab_list:
        if not a > 0:
            raise DomainError(f"a = {a!r} must be positive")
        if a > b:
            raise DomainError(f"need a <= b, got ({a!r}, {b!r})")
    scale = np.ldexp(1.0, np.arange(1, n_max + 1))
    values = np.zeros(n_max)
    per = []
    for a, b in ab_list:
        a, b = float(a), float(b)
        left = weight.integral(scale * a, scale * b)
        right = weight.integral(-scale * b, -scale * a)
        per.append((a, b, left, right))
        values = np.maximum(values, np.maximum(left, right))
    rows = []
    for idx in range(n_max):
        for a, b, left, right in per:
            rows.append((idx + 1, a, b, float(left[idx]), float(right[idx])))
    verdict, witness, seq, trailing = _summarize(values, threshold, not per)
    return CriterionReport("homothety", verdict, float(threshold), n_max, witness, seq, trailing,
                           ("n", "a", "b", "left", "right"), tuple(rows), values)
