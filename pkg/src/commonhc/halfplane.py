"""Right half-plane geometry: Cayley map, automorphism types, stage regions."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GeometryError

MARGIN = 1e-9
PAD_FRACTION = 0.25
CLASSIFY_TOL = 1e-9
EXACT_TOL = 1e-12


# --------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class Rect:
    """Axis-aligned closed rectangle.  A point is a degenerate rectangle."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        for name in ("x_lo", "x_hi", "y_lo", "y_hi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x_lo <= self.x_hi and self.y_lo <= self.y_hi):
            raise GeometryError(f"malformed rectangle {self}")

    @classmethod
    def point(cls, z: complex) -> "Rect":
        return cls(z.real, z.real, z.imag, z.imag)

    @classmethod
    def square(cls, center: complex, side: float) -> "Rect":
        h = side / 2.0
        return cls(center.real - h, center.real + h, center.imag - h, center.imag + h)

    @property
    def degenerate(self) -> bool:
        return self.x_lo == self.x_hi or self.y_lo == self.y_hi

    @property
    def center(self) -> complex:
        return complex((self.x_lo + self.x_hi) / 2, (self.y_lo + self.y_hi) / 2)

    @property
    def diameter(self) -> float:
        return math.hypot(self.x_hi - self.x_lo, self.y_hi - self.y_lo)

    def shift(self, w: complex) -> "Rect":
        return Rect(self.x_lo + w.real, self.x_hi + w.real, self.y_lo + w.imag, self.y_hi + w.imag)

    def pad(self, m: float, left: float | None = None) -> "Rect":
        return Rect(self.x_lo - (m if left is None else left), self.x_hi + m, self.y_lo - m, self.y_hi + m)

    def bbox(self) -> "Rect":
        return self

    def corners(self) -> list[complex]:
        return [complex(x, y) for x in (self.x_lo, self.x_hi) for y in (self.y_lo, self.y_hi)]

    def contains(self, z, margin: float = 0.0):
        z = np.asarray(z)
        return ((z.real >= self.x_lo + margin) & (z.real <= self.x_hi - margin)
                & (z.imag >= self.y_lo + margin) & (z.imag <= self.y_hi - margin))

    def in_right_half_plane(self) -> bool:
        return self.x_lo > 0

    def to_dict(self):
        return {"type": "rect", "x_lo": self.x_lo, "x_hi": self.x_hi, "y_lo": self.y_lo, "y_hi": self.y_hi}


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise GeometryError(f"disk radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2 * self.radius

    def bbox(self) -> Rect:
        c, r = self.center, self.radius
        return Rect(c.real - r, c.real + r, c.imag - r, c.imag + r)

    def scale(self, factor: float) -> "Disk":
        return Disk(self.center * factor, self.radius * factor)

    def contains(self, z, margin: float = 0.0):
        return np.abs(np.asarray(z) - self.center) <= self.radius - margin

    def in_right_half_plane(self) -> bool:
        return self.center.real - self.radius > 0

    def to_dict(self):
        return {"type": "disk", "center": [self.center.real, self.center.imag], "radius": self.radius}


def shape_from_dict(d):
    if d["type"] == "rect":
        return Rect(d["x_lo"], d["x_hi"], d["y_lo"], d["y_hi"])
    if d["type"] == "disk":
        return Disk(complex(*d["center"]), d["radius"])
    raise GeometryError(f"unknown shape {d['type']!r}")


def bounding_box(*shapes) -> Rect:
    boxes = [s.bbox() for s in shapes]
    return Rect(min(b.x_lo for b in boxes), max(b.x_hi for b in boxes),
                min(b.y_lo for b in boxes), max(b.y_hi for b in boxes))


def distance(s, t) -> float:
    """Euclidean distance between two shapes (0 when they meet)."""
    if isinstance(s, Disk) and isinstance(t, Disk):
        return max(0.0, abs(s.center - t.center) - s.radius - t.radius)
    if isinstance(s, Disk):
        s, t = t, s
    if isinstance(t, Disk):
        return max(0.0, _point_rect_distance(t.center, s) - t.radius)
    dx = max(0.0, s.x_lo - t.x_hi, t.x_lo - s.x_hi)
    dy = max(0.0, s.y_lo - t.y_hi, t.y_lo - s.y_hi)
    return math.hypot(dx, dy)


def _point_rect_distance(z: complex, r: Rect) -> float:
    dx = max(r.x_lo - z.real, 0.0, z.real - r.x_hi)
    dy = max(r.y_lo - z.imag, 0.0, z.imag - r.y_hi)
    return math.hypot(dx, dy)


def contains_shape(outer, inner, margin: float = 0.0) -> bool:
    """``inner`` lies inside ``outer`` with at least ``margin`` to spare."""
    if isinstance(inner, Rect):
        pts = inner.corners()
        if isinstance(outer, Rect):
            return bool(np.all(outer.contains(np.array(pts), margin)))
        # disks are convex: corners suffice
        return all(abs(p - outer.center) <= outer.radius - margin for p in pts)
    if isinstance(outer, Rect):
        return contains_shape(outer, inner.bbox(), margin)
    return abs(inner.center - outer.center) + inner.radius <= outer.radius - margin


# --------------------------------------------------------------------------
# Cayley map and automorphisms


def cayley(z):
    """Unit disk to right half-plane, ``(1 + z) / (1 - z)``."""
    arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(arr) >= 1):
        raise DomainError("cayley is defined on the open unit disk")
    out = (1 + arr) / (1 - arr)
    return complex(out) if out.ndim == 0 else out


def inv_cayley(w):
    """Right half-plane to unit disk, ``(w - 1) / (w + 1)``."""
    arr = np.asarray(w, dtype=complex)
    if np.any(arr.real <= 0):
        raise DomainError("inv_cayley is defined on the open right half-plane")
    out = (arr - 1) / (arr + 1)
    return complex(out) if out.ndim == 0 else out


_SIGMA = np.array([[1, 1], [-1, 1]], dtype=complex)
_SIGMA_INV = np.array([[1, -1], [1, 1]], dtype=complex) / 2


@dataclass(frozen=True)
class AutomorphismParams:
    """Classification of ``phi(z) = e^{i theta} (z - a)/(1 - conj(a) z)``.

    For parabolic and hyperbolic maps whose attractive fixed point is ``+1``
    the half-plane conjugate ``psi = sigma o phi o sigma^{-1}`` is recorded:
    ``psi(w) = w + i a`` (``shift``) or ``psi(w) = lam (w - i b) + i b``.
    """

    kind: str
    shift: float | None = None
    lam: float | None = None
    b: float | None = None
    fixed_points: tuple = field(default_factory=tuple)
    attractive: complex | None = None

    def __post_init__(self):
        if self.kind not in ("parabolic", "hyperbolic", "elliptic"):
            raise DomainError(f"unknown automorphism kind {self.kind!r}")
        if self.kind == "parabolic" and self.shift is not None and self.shift == 0:
            raise DomainError("parabolic parameter a must be nonzero")
        if self.kind == "hyperbolic" and self.lam is not None and not self.lam > 1:
            raise DomainError("hyperbolic parameter lambda must exceed 1")

    @property
    def halfplane(self) -> bool:
        return self.shift is not None or self.lam is not None

    @classmethod
    def parabolic(cls, a: float) -> "AutomorphismParams":
        return cls("parabolic", shift=float(a), fixed_points=(1 + 0j,), attractive=1 + 0j)

    @classmethod
    def hyperbolic(cls, lam: float, b: float = 0.0) -> "AutomorphismParams":
        rep = inv_cayley_extended(1j * b)
        return cls("hyperbolic", lam=float(lam), b=float(b), fixed_points=(1 + 0j, rep), attractive=1 + 0j)

    def psi(self, w):
        """Half-plane action."""
        if self.kind == "parabolic":
            return np.asarray(w) + 1j * self.shift
        if self.kind == "hyperbolic":
            return self.lam * (np.asarray(w) - 1j * self.b) + 1j * self.b
        raise DomainError("elliptic maps have no half-plane normal form here")

    def psi_iterate(self, w, n: int):
        if self.kind == "parabolic":
            return np.asarray(w) + 1j * n * self.shift
        if self.kind == "hyperbolic":
            return self.lam**n * (np.asarray(w) - 1j * self.b) + 1j * self.b
        raise DomainError("elliptic maps have no half-plane normal form here")


def inv_cayley_extended(w: complex) -> complex:
    """``(w - 1)/(w + 1)`` on the closed half-plane (boundary points map to the circle)."""
    return (w - 1) / (w + 1)


def _disk_matrix(theta: float, a: complex) -> np.ndarray:
    u = cmath.exp(1j * theta)
    return np.array([[u, -u * a], [-np.conj(a), 1]], dtype=complex)


def classify_automorphism(theta: float, a: complex, tol: float = CLASSIFY_TOL,
                          exact_tol: float = EXACT_TOL) -> AutomorphismParams:
    """Classify ``phi(z) = e^{i theta}(z - a)/(1 - conj(a) z)`` by its fixed points.

    The fixed-point quadratic ``conj(a) z^2 + (e^{i theta} - 1) z - e^{i theta} a = 0``
    has discriminant ``4 e^{i theta} (|a|^2 - sin^2(theta/2))``; the sign of
    ``D = |a|^2 - sin^2(theta/2)`` decides the type.  ``|D| <= exact_tol``
    is read as a double boundary fixed point (parabolic); ``exact_tol < |D| <= tol``
    raises rather than guessing.
    """
    a = complex(a)
    if not abs(a) < 1:
        raise DomainError("|a| must be < 1")
    D = abs(a) ** 2 - math.sin(theta / 2) ** 2
    if abs(D) <= exact_tol:
        if abs(a) <= exact_tol:
            raise DomainError("phi is the identity")
        kind = "parabolic"
    elif abs(D) <= tol:
        raise DomainError(f"near-degenerate classification: discriminant {D:.3e} within {tol:g} of 0")
    else:
        kind = "hyperbolic" if D > 0 else "elliptic"

    u = cmath.exp(1j * theta)
    A, B, C = np.conj(a), u - 1, -u * a
    if abs(A) <= exact_tol:
        roots = [0j]
    else:
        disc = cmath.sqrt(B * B - 4 * A * C)
        roots = [(-B + disc) / (2 * A), (-B - disc) / (2 * A)]
    if kind == "parabolic":
        roots = [sum(roots) / len(roots)]
    fixed = tuple(complex(r) for r in roots)

    if kind == "elliptic":
        inside = [r for r in fixed if abs(r) < 1]
        return AutomorphismParams("elliptic", fixed_points=fixed, attractive=inside[0] if inside else None)

    # attractive boundary fixed point: |phi'(z*)| < 1 (or the double point)
    def deriv(z):
        return u * (1 - abs(a) ** 2) / (1 - np.conj(a) * z) ** 2

    if kind == "parabolic":
        attractive = fixed[0]
    else:
        attractive = min(fixed, key=lambda z: abs(deriv(z)))

    if abs(attractive - 1) > 1e-7:
        return AutomorphismParams(kind, fixed_points=fixed, attractive=attractive)

    psi = _SIGMA @ _disk_matrix(theta, a) @ _SIGMA_INV
    psi = psi / psi[1, 1]
    slope, offset = psi[0, 0], psi[0, 1]
    if kind == "parabolic":
        return AutomorphismParams("parabolic", shift=float(offset.imag), fixed_points=fixed, attractive=attractive)
    lam = float(slope.real)
    b = float(offset.imag / (1 - lam))
    return AutomorphismParams("hyperbolic", lam=lam, b=b, fixed_points=fixed, attractive=attractive)


def disk_coefficients(params: AutomorphismParams) -> tuple[float, complex]:
    """Inverse of :func:`classify_automorphism` for half-plane normal forms."""
    if params.kind == "parabolic":
        psi = np.array([[1, 1j * params.shift], [0, 1]], dtype=complex)
    elif params.kind == "hyperbolic":
        psi = np.array([[params.lam, 1j * params.b * (1 - params.lam)], [0, 1]], dtype=complex)
    else:
        raise DomainError("only parabolic and hyperbolic normal forms are supported")
    phi = _SIGMA_INV @ psi @ _SIGMA
    phi = phi / phi[1, 1]
    a = -np.conj(phi[1, 0])
    theta = cmath.phase(phi[0, 0])
    return float(theta), complex(a)


# --------------------------------------------------------------------------
# pseudo-hyperbolic disks


def php_ratio(z):
    z = np.asarray(z, dtype=complex)
    return np.abs(z - 1) / np.abs(z + 1)


def php_disk_to_euclidean(R: float) -> Disk:
    """Euclidean form of ``{z : |z - 1| / |z + 1| <= R}`` for ``0 < R < 1``."""
    if not 0 < R < 1:
        raise DomainError(f"pseudo-hyperbolic radius must be in (0, 1), got {R}")
    q = 1 - R * R
    return Disk(complex((1 + R * R) / q, 0.0), 2 * R / q)


# --------------------------------------------------------------------------
# region schedules


@dataclass(frozen=True)
class StageRegions:
    k: int
    C: object
    D: object
    Gamma: Rect
    R: float
    delta: float

    def to_dict(self):
        return {"k": self.k, "C": self.C.to_dict(), "D": self.D.to_dict(), "Gamma": self.Gamma.to_dict(),
                "R": self.R, "delta": self.delta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["k"], shape_from_dict(d["C"]), shape_from_dict(d["D"]), shape_from_dict(d["Gamma"]),
                   d["R"], d["delta"])


@dataclass(frozen=True)
class RegionSchedule:
    """Stage regions ``C_k, D_k, Gamma_k`` for ``k = first .. last``; ``Gamma_{k0}`` is the seed point."""

    kind: str
    k0: int
    gamma0: Rect
    stages: dict

    @property
    def first(self) -> int:
        return min(self.stages)

    @property
    def last(self) -> int:
        return max(self.stages)

    def __getitem__(self, k) -> StageRegions:
        return self.stages[k]

    def gamma(self, k: int) -> Rect:
        if k == self.k0:
            return self.gamma0
        return self.stages[k].Gamma

    def to_dict(self):
        return {"kind": self.kind, "k0": self.k0, "gamma0": self.gamma0.to_dict(),
                "stages": [self.stages[k].to_dict() for k in sorted(self.stages)]}

    @classmethod
    def from_dict(cls, d):
        stages = {s["k"]: StageRegions.from_dict(s) for s in d["stages"]}
        return cls(d["kind"], d["k0"], shape_from_dict(d["gamma0"]), stages)


def default_deltas(k: int) -> float:
    return 2.0 ** (-k)


def _delta_at(delta, k):
    if delta is None:
        return default_deltas(k)
    if callable(delta):
        return float(delta(k))
    if isinstance(delta, (int, float)):
        return float(delta)
    return float(delta[k])


def _chain_gammas(kind, k0, Cs, Ds, Rs, deltas, stages, pad_fraction=PAD_FRACTION) -> RegionSchedule:
    gamma_prev = Rect.point(1 + 0j)
    gamma0 = gamma_prev
    out = {}
    for k in stages[:-1]:
        box = bounding_box(gamma_prev, Ds[k])
        gap = distance(box, Ds[k + 1])
        if not gap > MARGIN:
            raise GeometryError(f"D_{k + 1} meets the hull of Gamma_{k - 1} and D_{k} (distance {gap:.3e})", stage=k)
        m = gap * pad_fraction
        gamma = box.pad(m, left=min(m, box.x_lo / 2.0))
        out[k] = StageRegions(k, Cs[k], Ds[k], gamma, Rs[k], deltas[k])
        gamma_prev = gamma
    regions = RegionSchedule(kind, k0, gamma0, out)
    problems = certify_regions(regions, Ds[stages[-1]])
    if problems:
        raise GeometryError(problems[0])
    return regions


def parabolic_regions(schedule, delta=None, stages: Sequence[int] | None = None,
                      pad_fraction: float = PAD_FRACTION) -> RegionSchedule:
    """Squares ``C_k`` of side ``R_k - delta_k`` centred at ``R_k/2`` and ``D_k = C_k + i X_k``.

    ``R_k`` is the smaller half-gap of the offsets around ``X_k``.  Regions are
    produced for ``k0 + 1 <= k <= last - 2`` (or the requested stages).
    """
    if schedule.kind != "add":
        raise GeometryError("parabolic regions need an additive schedule")
    k0 = schedule.k0
    last = k0 + schedule.horizon - 1
    wanted = list(range(k0 + 1, last - 1)) if stages is None else sorted(stages)
    if not wanted:
        raise GeometryError("schedule too short for any region stage")
    if wanted[0] < k0 + 1 or wanted[-1] > last - 2:
        raise GeometryError(f"region stages must lie in [{k0 + 1}, {last - 2}]")
    if wanted != list(range(wanted[0], wanted[-1] + 1)):
        raise GeometryError("region stages must be consecutive")
    X = schedule.X
    Cs, Ds, Rs, ds = {}, {}, {}, {}
    for k in wanted + [wanted[-1] + 1]:
        i = k - k0
        R = parabolic_radius(X[i - 1], X[i], X[i + 1])
        d = _delta_at(delta, k)
        if not 0 < d < 1:
            raise GeometryError(f"delta_{k} = {d} outside (0, 1)", stage=k)
        if not R > d:
            raise GeometryError(f"R_k = {R} does not exceed delta_k = {d}", stage=k)
        C = Rect.square(complex(R / 2.0, 0.0), R - d)
        Cs[k], Ds[k], Rs[k], ds[k] = C, C.shift(1j * X[i]), R, d
    return _chain_gammas("parabolic", k0, Cs, Ds, Rs, ds, wanted + [wanted[-1] + 1], pad_fraction)


def parabolic_radius(x_prev: float, x: float, x_next: float) -> float:
    """Smaller half-gap around ``x``."""
    return min((x_next - x) / 2.0, (x - x_prev) / 2.0)


def hyperbolic_radius(log_ratio_prev: float, log_ratio_next: float, delta: float) -> float:
    """``delta * min(tanh(log(r_{k-1}/r_k)/4), tanh(log(r_k/r_{k+1})/4))``.

    ``tanh(log(q)/4) = (sqrt(q) - 1)/(sqrt(q) + 1)``; the tanh form stays
    accurate for very large ratios.
    """
    return delta * min(math.tanh(log_ratio_prev / 4.0), math.tanh(log_ratio_next / 4.0))


def hyperbolic_regions(schedule, delta=None, stages: Sequence[int] | None = None,
                       pad_fraction: float = PAD_FRACTION) -> RegionSchedule:
    """Pseudo-hyperbolic disks ``C_k`` about 1 and their dilates ``D_k = C_k / r_k``."""
    if schedule.kind != "mult":
        raise GeometryError("hyperbolic regions need a multiplicative schedule")
    k0 = schedule.k0
    last = k0 + schedule.horizon - 1
    wanted = list(range(k0 + 1, last - 1)) if stages is None else sorted(stages)
    if not wanted:
        raise GeometryError("schedule too short for any region stage")
    if wanted[0] < k0 + 1 or wanted[-1] > last - 2:
        raise GeometryError(f"region stages must lie in [{k0 + 1}, {last - 2}]")
    logr = schedule.logr
    Cs, Ds, Rs, ds = {}, {}, {}, {}
    for k in wanted + [wanted[-1] + 1]:
        i = k - k0
        d = _delta_at(delta, k)
        if not 0 < d < 1:
            raise GeometryError(f"delta_{k} = {d} outside (0, 1)", stage=k)
        R = hyperbolic_radius(logr[i - 1] - logr[i], logr[i] - logr[i + 1], d)
        if -logr[i] > 700:
            raise GeometryError("stage beyond numeric horizon (1/r_k overflows)", stage=k)
        C = php_disk_to_euclidean(R)
        Cs[k], Ds[k], Rs[k], ds[k] = C, C.scale(math.exp(-logr[i])), R, d
    return _chain_gammas("hyperbolic", k0, Cs, Ds, Rs, ds, wanted + [wanted[-1] + 1], pad_fraction)


def certify_regions(regions: RegionSchedule, next_D=None, margin: float = MARGIN) -> list[str]:
    """Check the chain invariants; returns human-readable violations."""
    problems = []
    ks = sorted(regions.stages)
    for k in ks:
        st = regions[k]
        prev = regions.gamma(k - 1) if (k - 1 in regions.stages or k - 1 == regions.k0) else None
        if prev is not None and not contains_shape(st.Gamma, prev, margin):
            problems.append(f"stage {k}: Gamma_{k - 1} not inside Gamma_{k}")
        if not contains_shape(st.Gamma, st.D, margin):
            problems.append(f"stage {k}: D_{k} not inside Gamma_{k}")
        nxt = regions[k + 1].D if k + 1 in regions.stages else next_D
        if nxt is not None and not distance(st.Gamma, nxt) > margin:
            problems.append(f"stage {k}: Gamma_{k} meets D_{k + 1}")
        if not st.Gamma.in_right_half_plane():
            problems.append(f"stage {k}: Gamma_{k} leaves the right half-plane")
        if not st.D.in_right_half_plane():
            problems.append(f"stage {k}: D_{k} leaves the right half-plane")
    # nesting plus Gamma_{k-1} clear of D_k already separates every earlier D_j
    # from D_k; the explicit pairwise scan is kept for short schedules
    if len(ks) <= 200:
        for a_i, ka in enumerate(ks):
            for kb in ks[a_i + 1:]:
                if not distance(regions[ka].D, regions[kb].D) > margin:
                    problems.append(f"D_{ka} and D_{kb} intersect")
    return problems


def find_containing_stage(regions: RegionSchedule, box: Rect, margin: float = MARGIN):
    """Least stage whose ``C_k`` contains ``box``; ``None`` means the horizon is too short."""
    if not box.in_right_half_plane():
        raise DomainError("box must lie in the open right half-plane")
    for k in sorted(regions.stages):
        if contains_shape(regions[k].C, box, margin):
            return k
    return None
