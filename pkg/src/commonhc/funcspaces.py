"""Sequence and function spaces: finitely supported l^2 vectors with shift
operators, piecewise functions on the line, and weighted L^p norms.

Piecewise functions keep breakpoints and affine maps as exact rationals
(:class:`fractions.Fraction`), so translations and dilations by rational
(in particular floating-point) parameters are exact at the representation
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, QuadratureError

# --------------------------------------------------------------------------
# l^2


@dataclass(frozen=True)
class L2Vector:
    """Finitely supported vector ``sum_n coef[n-1] e_n`` (origin-1 indices).

    Stored canonically: trailing zeros are stripped.
    """

    coef: tuple = ()

    def __post_init__(self):
        c = list(self.coef)
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coef", tuple(c))

    @classmethod
    def basis(cls, n: int, value=1.0) -> "L2Vector":
        if n < 1:
            raise DomainError("basis vectors are indexed from 1")
        return cls((0.0,) * (n - 1) + (value,))

    @classmethod
    def from_array(cls, a) -> "L2Vector":
        return cls(tuple(np.asarray(a).tolist()))

    def __len__(self) -> int:
        return len(self.coef)

    def __getitem__(self, n: int):
        """``n``-th coordinate (1-based); zero beyond the support."""
        if n < 1:
            raise IndexError("coordinates are indexed from 1")
        return self.coef[n - 1] if n <= len(self.coef) else 0.0

    def array(self, length: int | None = None) -> np.ndarray:
        n = len(self.coef) if length is None else length
        out = np.zeros(n, dtype=complex if any(isinstance(c, complex) for c in self.coef) else float)
        m = min(n, len(self.coef))
        out[:m] = self.coef[:m]
        return out

    def norm(self) -> float:
        # fsum keeps the value independent of leading zeros, so shifts are exact isometries
        return math.sqrt(math.fsum(abs(c) ** 2 for c in self.coef))

    def __add__(self, other: "L2Vector") -> "L2Vector":
        n = max(len(self), len(other))
        return L2Vector.from_array(self.array(n) + other.array(n))

    def __sub__(self, other: "L2Vector") -> "L2Vector":
        n = max(len(self), len(other))
        return L2Vector.from_array(self.array(n) - other.array(n))

    def scale(self, c) -> "L2Vector":
        return L2Vector.from_array(c * self.array())

    def inner(self, other: "L2Vector"):
        n = min(len(self), len(other))
        return complex(np.vdot(other.array(n), self.array(n))) if n else 0.0

    def to_list(self) -> list:
        return [[c.real, c.imag] if isinstance(c, complex) else c for c in self.coef]

    @classmethod
    def from_list(cls, xs) -> "L2Vector":
        return cls(tuple(complex(*c) if isinstance(c, list) else c for c in xs))


def backward_shift(x: L2Vector, lam=1.0, n: int = 1) -> L2Vector:
    """``(lam B)^n x``: drops the first ``n`` coordinates and scales by ``lam^n``."""
    if n < 0:
        raise DomainError("power must be >= 0")
    if n == 0:
        return x
    tail = x.array()[n:]
    return L2Vector.from_array(tail * (lam ** n)) if tail.size else L2Vector()


def forward_shift(x: L2Vector, n: int = 1) -> L2Vector:
    """``S^n x``: prepends ``n`` zeros; an isometry with ``B S = Id``."""
    if n < 0:
        raise DomainError("power must be >= 0")
    if not x.coef:
        return x
    return L2Vector((0.0,) * n + x.coef)


def adjoint_multiplier_pow(x: L2Vector, d: int, n: int = 1) -> L2Vector:
    """``(M_{z^d}^*)^n x``; on Taylor coefficients ``M_{z^d}^* = B^d``."""
    if d < 1:
        raise DomainError("d must be >= 1")
    return backward_shift(x, 1.0, d * n)


def multiplier_pow(x: L2Vector, d: int, n: int = 1) -> L2Vector:
    """``M_{z^d}^n x``, the isometric right inverse of :func:`adjoint_multiplier_pow`."""
    if d < 1:
        raise DomainError("d must be >= 1")
    return forward_shift(x, d * n)


def operator_from_spec(spec: str, lam: float = 1.0) -> Callable[[L2Vector, int], L2Vector]:
    """``"backward"``, ``"forward"`` or ``"adjoint_multiplier:d"`` as ``(x, n) -> T^n x``."""
    if spec == "backward":
        return lambda x, n: backward_shift(x, lam, n)
    if spec == "forward":
        return lambda x, n: forward_shift(x, n)
    if spec.startswith("adjoint_multiplier:"):
        d = int(spec.split(":", 1)[1])
        return lambda x, n: adjoint_multiplier_pow(x, d, n)
    raise DomainError(f"unknown operator {spec!r}")


def poly_in_operator(x: L2Vector, operator, coeffs: Sequence) -> L2Vector:
    """``sum_i coeffs[i] T^i x``; ``operator`` is a spec string or ``(x, n) -> T^n x``."""
    op = operator_from_spec(operator) if isinstance(operator, str) else operator
    out = L2Vector()
    for i, c in enumerate(coeffs):
        if c != 0:
            out = out + op(x, i).scale(c)
    return out


def l2_distance(x: L2Vector, y: L2Vector) -> float:
    return (x - y).norm()


# --------------------------------------------------------------------------
# piecewise functions


@dataclass(frozen=True)
class BaseFunction:
    """Bounded primitive with known support ``[lo, hi)``, sup norm and kinks."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    support: tuple
    sup: float
    kinks: tuple
    constant: bool = False


def _one(u):
    return np.ones_like(u, dtype=float)


def _step(u):
    return ((u >= 0) & (u < 1)).astype(float)


def _tent(u):
    return np.maximum(0.0, 1.0 - np.abs(u))


INF = math.inf
BASES = {
    "one": BaseFunction("one", _one, (-INF, INF), 1.0, (), constant=True),
    "step": BaseFunction("step", _step, (Fraction(0), Fraction(1)), 1.0, (Fraction(0), Fraction(1))),
    "tent": BaseFunction("tent", _tent, (Fraction(-1), Fraction(1)), 1.0, (Fraction(-1), Fraction(0), Fraction(1))),
}


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    xf = float(x)
    if not math.isfinite(xf):
        raise DomainError("breakpoints and affine coefficients must be finite")
    return Fraction(xf)


@dataclass(frozen=True)
class Piece:
    """``factor * base(c*x + d)`` on ``[lo, hi)``."""

    lo: Fraction
    hi: Fraction
    base: str
    c: Fraction = Fraction(1)
    d: Fraction = Fraction(0)
    factor: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("lo", "hi", "c", "d", "factor"):
            object.__setattr__(self, name, _q(getattr(self, name)))
        if self.base not in BASES:
            raise DomainError(f"unknown base function {self.base!r}")
        if self.c == 0:
            raise DomainError("affine map must be invertible (c != 0)")

    def key(self):
        return (self.base, self.c, self.d, self.factor)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        mask = (x >= float(self.lo)) & (x < float(self.hi))
        out = np.zeros_like(x, dtype=float)
        if np.any(mask):
            # c (x - x0) rather than c x + d: no cancellation for steep pieces
            u = float(self.c) * (x[mask] - float(-self.d / self.c))
            out[mask] = float(self.factor) * BASES[self.base].func(u)
        return out

    def breakpoints(self) -> list[Fraction]:
        pts = [self.lo, self.hi]
        for k in BASES[self.base].kinks:
            x = (k - self.d) / self.c
            if self.lo < x < self.hi:
                pts.append(x)
        return pts

    def to_record(self) -> list:
        return [str(self.lo), str(self.hi), self.base, str(self.c), str(self.d), str(self.factor)]

    @classmethod
    def from_record(cls, r) -> "Piece":
        lo, hi, base, c, d, f = r
        return cls(Fraction(lo), Fraction(hi), base, Fraction(c), Fraction(d), Fraction(f))


def _clip(piece: Piece) -> Piece | None:
    """Restrict a piece to where its base can be nonzero; ``None`` if empty."""
    if piece.factor == 0 or piece.lo >= piece.hi:
        return None
    b = BASES[piece.base]
    lo, hi = piece.lo, piece.hi
    if not b.constant:
        s_lo, s_hi = b.support
        # preimage of [s_lo, s_hi) under u = c x + d
        a1, a2 = (s_lo - piece.d) / piece.c, (s_hi - piece.d) / piece.c
        lo, hi = max(lo, min(a1, a2)), min(hi, max(a1, a2))
        if lo >= hi:
            return None
    if piece.base == "step":
        # a step restricted to its support is a constant
        return Piece(lo, hi, "one", 1, 0, piece.factor)
    if b.constant:
        return Piece(lo, hi, "one", 1, 0, piece.factor)
    return Piece(lo, hi, piece.base, piece.c, piece.d, piece.factor)


@dataclass(frozen=True)
class PiecewiseFunction:
    """Sum of pieces with pairwise disjoint intervals, kept in canonical form.

    Canonical form clips every piece to its base support, drops null
    pieces, sorts by left endpoint and merges adjacent identical pieces.
    """

    pieces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", _canonical(self.pieces))

    @classmethod
    def indicator(cls, lo, hi, height=1) -> "PiecewiseFunction":
        return cls((Piece(lo, hi, "one", 1, 0, height),))

    @classmethod
    def tent(cls, center, half_width, height=1) -> "PiecewiseFunction":
        c = 1 / _q(half_width)
        return cls((Piece(_q(center) - _q(half_width), _q(center) + _q(half_width), "tent", c,
                          -_q(center) * c, height),))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.pieces:
            out = out + p.evaluate(x)
        return out

    def __add__(self, other: "PiecewiseFunction") -> "PiecewiseFunction":
        return PiecewiseFunction(self.pieces + other.pieces)

    def scale(self, s) -> "PiecewiseFunction":
        s = _q(s)
        return PiecewiseFunction(tuple(Piece(p.lo, p.hi, p.base, p.c, p.d, p.factor * s) for p in self.pieces))

    @property
    def support(self) -> tuple | None:
        if not self.pieces:
            return None
        return self.pieces[0].lo, max(p.hi for p in self.pieces)

    def sup_norm(self) -> float:
        return max((abs(float(p.factor)) * BASES[p.base].sup for p in self.pieces), default=0.0)

    def breakpoints(self) -> list[Fraction]:
        pts = set()
        for p in self.pieces:
            pts.update(p.breakpoints())
        return sorted(pts)

    def to_records(self) -> list:
        return [p.to_record() for p in self.pieces]

    @classmethod
    def from_records(cls, rs) -> "PiecewiseFunction":
        return cls(tuple(Piece.from_record(r) for r in rs))


def _canonical(pieces: Iterable[Piece]) -> tuple:
    clipped = [q for q in (_clip(p) for p in pieces) if q is not None]
    clipped.sort(key=lambda p: (p.lo, p.hi))
    for a, b in zip(clipped, clipped[1:]):
        if b.lo < a.hi:
            raise DomainError(f"overlapping pieces [{a.lo}, {a.hi}) and [{b.lo}, {b.hi})")
    out: list[Piece] = []
    for p in clipped:
        if out and out[-1].hi == p.lo and out[-1].key() == p.key():
            q = out.pop()
            p = Piece(q.lo, p.hi, p.base, p.c, p.d, p.factor)
        out.append(p)
    return tuple(out)


def translate_pw(F: PiecewiseFunction, a) -> PiecewiseFunction:
    """``(T_a F)(x) = F(x + a)``."""
    a = _q(a)
    return PiecewiseFunction(tuple(Piece(p.lo - a, p.hi - a, p.base, p.c, p.c * a + p.d, p.factor)
                                   for p in F.pieces))


def dilate_pw(F: PiecewiseFunction, lam, b=0) -> PiecewiseFunction:
    """``x -> F(lam (x - b) + b)`` for ``lam > 0``."""
    lam, b = _q(lam), _q(b)
    if lam <= 0:
        raise DomainError("dilation factor must be positive")
    shift = b * (1 - lam)
    return PiecewiseFunction(tuple(
        Piece((p.lo - shift) / lam, (p.hi - shift) / lam, p.base, p.c * lam, p.c * shift + p.d, p.factor)
        for p in F.pieces))


def restrict_pw(F: PiecewiseFunction, intervals: Sequence[tuple]) -> PiecewiseFunction:
    """``F`` times the indicator of a union of disjoint ``[lo, hi)`` intervals."""
    out = []
    for p in F.pieces:
        for lo, hi in intervals:
            lo, hi = max(p.lo, _q(lo)), min(p.hi, _q(hi))
            if lo < hi:
                out.append(Piece(lo, hi, p.base, p.c, p.d, p.factor))
    return PiecewiseFunction(tuple(out))


# --------------------------------------------------------------------------
# dense family


def dense_family(count: int, caps: Sequence[float] | None = None, p: float = 1.0) -> list[PiecewiseFunction]:
    """First ``count`` members of a fixed enumeration of steps and tents.

    The first three members are ``1_[-1,1)``, the tent of half-width 1 at 0
    and ``1_[0,1)``.  Level ``n >= 1`` then lists, for every dyadic
    ``s = i/2^n`` in ``[-n, n)``, the steps ``1_[s, s + 2^-n)`` and tents
    of half-width ``2^-n`` at ``s``, each with heights ``+1`` and ``-1``.
    Finite combinations of these are dense in every ``L^p`` with a finite
    weight, which is all the enumeration needs to provide.

    If ``caps`` is given, member ``l`` is scaled so its sup norm to the
    ``p``-th power is at most ``caps[l]``.
    """
    out = [PiecewiseFunction.indicator(-1, 1), PiecewiseFunction.tent(0, 1), PiecewiseFunction.indicator(0, 1)]
    n = 1
    while len(out) < count:
        w = Fraction(1, 2 ** n)
        i = -n * 2 ** n
        while i < n * 2 ** n and len(out) < count:
            s = i * w
            for h in (1, -1):
                out.append(PiecewiseFunction.indicator(s, s + w, h))
                out.append(PiecewiseFunction.tent(s, w, h))
            i += 1
        n += 1
    out = out[:count]
    if caps is not None:
        for l, F in enumerate(out):
            cap = _q(float(caps[l]) ** (1.0 / p))
            sup = _q(F.sup_norm())
            if sup > cap:
                out[l] = F.scale(cap / sup)
    return out


# --------------------------------------------------------------------------
# weighted measures and quadrature

_GL_NODES = 20
_GL = np.polynomial.legendre.leggauss(_GL_NODES)


@dataclass(frozen=True)
class WeightedMeasure:
    """``d mu = dt / (1 + t^2)^alpha`` (power weight) or ``omega(t) dt``.

    For a general ``omega`` the integrand is taken over ``[-T, T]`` with
    ``T = truncation``; the caller supplies ``tail_bound``, a bound on the
    mass outside.
    """

    p: float = 1.0
    alpha: float | None = 2.0
    omega: Callable | None = None
    truncation: float = INF
    tail_bound: float = 0.0
    tol: float = 1e-12
    max_depth: int = 40

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("p must be >= 1")
        if self.omega is None:
            if self.alpha is None or not self.alpha > 0.5:
                raise DomainError("power weights need alpha > 1/2")
        elif self.alpha is not None:
            raise DomainError("give either alpha or omega, not both")

    def density(self, t):
        t = np.asarray(t, dtype=float)
        if self.omega is None:
            return (1.0 + t * t) ** (-self.alpha)
        return self.omega(t)


@dataclass(frozen=True)
class QuadResult:
    """``value = integral ** (1/p)`` with error estimates for both."""

    value: float
    error: float
    integral: float
    integral_error: float
    intervals: int = 0


def _gl(func, a, b):
    x, w = _GL
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, func(mid + half * x)))


def _adaptive(func, a, b, tol, depth, budget):
    whole = _gl(func, a, b)
    stack = [(a, b, whole, depth)]
    total, err, count = 0.0, 0.0, 0
    while stack:
        lo, hi, val, d = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _gl(func, lo, mid), _gl(func, mid, hi)
        delta = abs(left + right - val)
        count += 1
        # the roundoff floor keeps tiny absolute targets reachable
        if delta <= max(tol * (hi - lo) / (b - a), 64 * np.finfo(float).eps * abs(val), 1e-300) or d == 0:
            if d == 0 and delta > tol:
                raise QuadratureError("adaptive refinement did not converge", partial=total + left + right,
                                      error=err + delta)
            total += left + right
            err += delta
            continue
        if count > budget:
            raise QuadratureError("quadrature budget exhausted", partial=total + val, error=err + delta)
        stack.append((mid, hi, right, d - 1))
        stack.append((lo, mid, left, d - 1))
    return total, err


def _zero_crossings(H: Callable, a: float, b: float) -> list[float]:
    """Sign changes of a function that is affine on ``[a, b]``."""
    fa, fb = float(H(np.array([a]))[0]), float(H(np.array([b - (b - a) * 1e-15]))[0])
    if fa * fb < 0:
        return [a + (b - a) * fa / (fa - fb)]
    return []


def weighted_integral(g: Callable, breakpoints: Sequence[float], measure: WeightedMeasure,
                      affine_pieces: bool = True) -> tuple[float, float, int]:
    """``int |g|^p d mu`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``g`` must be smooth between breakpoints; with ``affine_pieces`` its
    sign changes there are located and added (``|g|^p`` has a kink at zeros).
    Unbounded segments of a power weight use ``t = tan(theta)``, which turns
    the density into ``cos(theta)^(2 alpha - 2)``.
    """
    pts = sorted(float(x) for x in breakpoints)
    if len(pts) < 2:
        return 0.0, 0.0, 0
    if measure.omega is not None and math.isfinite(measure.truncation):
        T = measure.truncation
        pts = sorted({min(max(x, -T), T) for x in pts})
    if affine_pieces:
        extra = []
        for a, b in zip(pts, pts[1:]):
            if b > a and math.isfinite(a) and math.isfinite(b):
                extra.extend(_zero_crossings(g, a, b))
        pts = sorted(set(pts) | set(extra))
    p = measure.p
    total, err, n = 0.0, 0.0, 0
    budget = 200000
    al = measure.alpha

    def make(xa, xb):
        if measure.omega is not None:
            return xa, xb, lambda t: np.abs(g(t)) ** p * measure.omega(t)
        if math.isfinite(xa) and math.isfinite(xb):
            return xa, xb, lambda t: np.abs(g(t)) ** p * (1.0 + t * t) ** (-al)
        # unbounded: t = tan(theta) turns the density into cos(theta)^(2 alpha - 2);
        # tan(atan(x)) need not return x, so clamp to stay on one piece
        hi = np.nextafter(xb, -np.inf)
        return (math.atan(xa), math.atan(xb),
                lambda th: np.abs(g(np.clip(np.tan(th), xa, hi))) ** p * np.cos(th) ** (2.0 * al - 2.0))

    segs = [make(a, b) for a, b in zip(pts, pts[1:]) if b > a]
    segs = [sg for sg in segs if sg[1] > sg[0]]
    if not segs:
        return 0.0, 0.0, 0
    span = sum(b - a for a, b, _ in segs)
    for a, b, fn in segs:
        v, e = _adaptive(fn, a, b, measure.tol * (b - a) / span, measure.max_depth, budget)
        total += v
        err += e
        n += 1
    return total, err, n


def lp_norm(F: PiecewiseFunction, measure: WeightedMeasure) -> QuadResult:
    return lp_distance(F, PiecewiseFunction(), measure)


def lp_distance(F: PiecewiseFunction, G: PiecewiseFunction, measure: WeightedMeasure) -> QuadResult:
    """``(int |F - G|^p d mu)^(1/p)`` with every breakpoint of both used.

    Raises
    ------
    QuadratureError
        If adaptive refinement fails; carries the partial value.
    """
    pts = sorted(set(F.breakpoints()) | set(G.breakpoints()))

    def diff(x):
        return F(x) - G(x)

    I, Ierr, n = weighted_integral(diff, pts, measure)
    if measure.omega is not None and math.isfinite(measure.truncation):
        Ierr += measure.tail_bound * (F.sup_norm() + G.sup_norm()) ** measure.p
    p = measure.p
    value = I ** (1.0 / p) if I > 0 else 0.0
    if I > 0:
        err = Ierr * (1.0 / p) * I ** (1.0 / p - 1.0)
    else:
        err = Ierr ** (1.0 / p)
    return QuadResult(value, err, I, Ierr, n)
