"""Polynomial approximation on pairs of disjoint compacts, and stage chains.

Polynomials are stored in a scaled variable ``zeta = (z - c) / s`` with a
Krylov basis orthonormalised against the fit samples (Vandermonde with
Arnoldi).  The Hessenberg matrix from the fit is kept, so evaluation
replays the same three-term-style recurrence and stays well conditioned on
the reference box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, FitError
from .halfplane import Disk, Rect, RegionSchedule, bounding_box, contains_shape, distance

DEGREE_START = 8
DEGREE_GROWTH = 1.5
DEGREE_CAP = 320
VALIDATION_FACTOR = 4


# --------------------------------------------------------------------------
# polynomial in the Arnoldi basis


@dataclass(frozen=True)
class Poly:
    """Polynomial ``sum_j coef[j] q_j((z - center) / scale)``.

    ``hess`` is the ``(n+1) x n`` Hessenberg matrix defining ``q_0..q_n``.
    """

    center: complex
    scale: float
    hess: np.ndarray
    coef: np.ndarray

    @property
    def degree(self) -> int:
        return self.hess.shape[1]

    @classmethod
    def constant(cls, value: complex, center: complex = 1 + 0j, scale: float = 1.0) -> "Poly":
        return cls(complex(center), float(scale), np.zeros((1, 0), dtype=complex), np.array([value], dtype=complex))

    def basis(self, z) -> np.ndarray:
        zeta = (np.asarray(z, dtype=complex).ravel() - self.center) / self.scale
        n = self.degree
        W = np.empty((zeta.size, n + 1), dtype=complex)
        W[:, 0] = 1.0
        for k in range(n):
            w = zeta * W[:, k] - W[:, : k + 1] @ self.hess[: k + 1, k]
            W[:, k + 1] = w / self.hess[k + 1, k]
        return W

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = (self.basis(z) @ self.coef).reshape(z.shape)
        return complex(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "scale": self.scale,
            "hess": _cplx_to_list(self.hess),
            "coef": _cplx_to_list(self.coef),
        }

    @classmethod
    def from_dict(cls, d) -> "Poly":
        hess = _cplx_from_list(d["hess"])
        if hess.ndim == 1:
            hess = hess.reshape(1, 0)
        return cls(complex(*d["center"]), float(d["scale"]), hess, _cplx_from_list(d["coef"]))


def _cplx_to_list(a: np.ndarray):
    a = np.asarray(a)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_cplx_to_list(x) for x in a]


def _cplx_from_list(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        return np.zeros((1, 0), dtype=complex) if arr.ndim == 2 else np.zeros(0, dtype=complex)
    return arr[..., 0] + 1j * arr[..., 1]


def arnoldi_fit(z: np.ndarray, f: np.ndarray, degree: int, center: complex, scale: float,
                weights: np.ndarray | None = None) -> Poly:
    """Weighted least-squares fit of degree ``degree`` in the Arnoldi basis."""
    zeta = (np.asarray(z, dtype=complex) - center) / scale
    m = zeta.size
    if m <= degree:
        raise FitError(f"{m} samples cannot determine degree {degree}", degree=degree)
    Q = np.empty((m, degree + 1), dtype=complex)
    H = np.zeros((degree + 1, degree), dtype=complex)
    Q[:, 0] = 1.0
    for k in range(degree):
        q = zeta * Q[:, k]
        for _ in range(2):  # classical Gram-Schmidt, twice
            h = Q[:, : k + 1].conj().T @ q / m
            q = q - Q[:, : k + 1] @ h
            H[: k + 1, k] += h
        H[k + 1, k] = np.linalg.norm(q) / math.sqrt(m)
        if H[k + 1, k] == 0:
            raise FitError("Krylov basis broke down (too few distinct samples)", degree=degree)
        Q[:, k + 1] = q / H[k + 1, k]
    f = np.asarray(f, dtype=complex)
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=float))
        Q, f = Q * w[:, None], f * w
    coef, *_ = np.linalg.lstsq(Q, f, rcond=None)
    return Poly(complex(center), float(scale), H, coef)


# --------------------------------------------------------------------------
# sampling


def sample_region(shape, n: int, rng: np.random.Generator, boundary_fraction: float = 0.8) -> np.ndarray:
    """Boundary-heavy sample of a closed region.

    Errors of holomorphic differences peak on the boundary, so most points
    go there (equally spaced with a random phase); the rest are uniform
    interior points.
    """
    n = max(int(n), 4)
    nb = max(int(round(boundary_fraction * n)), 4)
    ni = n - nb
    if isinstance(shape, Rect):
        if shape.x_lo == shape.x_hi and shape.y_lo == shape.y_hi:
            return np.array([shape.center])
        w, h = shape.x_hi - shape.x_lo, shape.y_hi - shape.y_lo
        per = 2 * (w + h)
        t = (np.arange(nb) + rng.random()) * per / nb
        pts = np.empty(nb, dtype=complex)
        s = t
        bottom = s < w
        right = (s >= w) & (s < w + h)
        top = (s >= w + h) & (s < 2 * w + h)
        left = s >= 2 * w + h
        pts[bottom] = shape.x_lo + s[bottom] + 1j * shape.y_lo
        pts[right] = shape.x_hi + 1j * (shape.y_lo + s[right] - w)
        pts[top] = shape.x_hi - (s[top] - w - h) + 1j * shape.y_hi
        pts[left] = shape.x_lo + 1j * (shape.y_hi - (s[left] - 2 * w - h))
        inner = shape.x_lo + w * rng.random(ni) + 1j * (shape.y_lo + h * rng.random(ni))
        return np.concatenate([pts, inner])
    if isinstance(shape, Disk):
        th = 2 * np.pi * (np.arange(nb) + rng.random()) / nb
        pts = shape.center + shape.radius * np.exp(1j * th)
        rad = shape.radius * np.sqrt(rng.random(ni))
        inner = shape.center + rad * np.exp(2j * np.pi * rng.random(ni))
        return np.concatenate([pts, inner])
    raise DomainError(f"cannot sample {type(shape).__name__}")


@dataclass(frozen=True)
class TargetSet:
    """A compact region with the function to approximate on it."""

    region: object
    func: Callable


@dataclass(frozen=True)
class FitCertificate:
    """Validation sup errors: ``error_a`` and ``error_b`` on the two certified
    sets, ``error_extra`` on the auxiliary sets (reported, not certified)."""

    degree: int
    error_a: float
    error_b: float
    n_fit: int
    n_validation: int
    tol: float
    error_extra: float = 0.0

    @property
    def error(self) -> float:
        return max(self.error_a, self.error_b)

    @property
    def passed(self) -> bool:
        return self.error <= self.tol

    def to_dict(self):
        return {"degree": self.degree, "error_a": self.error_a, "error_b": self.error_b,
                "n_fit": self.n_fit, "n_validation": self.n_validation, "tol": self.tol,
                "error_extra": self.error_extra}


def degree_ladder(cap: int = DEGREE_CAP, start: int = DEGREE_START, growth: float = DEGREE_GROWTH) -> list[int]:
    out, d = [], min(start, cap)
    while d < cap:
        out.append(d)
        d = int(math.ceil(d * growth))
    out.append(cap)
    return out


def _points_for(degree: int, base: int) -> int:
    return max(base, 3 * (degree + 1))


def two_set_fit(set_a: TargetSet, set_b: TargetSet, tol: float, degree_cap: int = DEGREE_CAP,
                seed: int = 0, base_points: int = 64, extra: Sequence[TargetSet] = ()) -> tuple[Poly, FitCertificate]:
    """Fit one polynomial to two targets on two disjoint compacts.

    Degrees climb the ladder ``8, 12, 18, ...`` up to ``degree_cap``; the
    first degree whose validation errors (sup over an independent sample at
    ``VALIDATION_FACTOR`` times the fit density) are both within ``tol``
    wins.  ``extra`` sets take part in the least-squares fit but are only
    reported.

    Raises
    ------
    DomainError
        If any two regions touch.
    FitError
        If the cap is reached; carries the best error seen.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    sets = [set_a, set_b, *extra]
    for i, s in enumerate(sets):
        for t in sets[i + 1:]:
            if not distance(s.region, t.region) > 0:
                raise DomainError("sample regions overlap (no positive separation)")
    box = bounding_box(*(s.region for s in sets))
    center = box.center
    scale = max(box.x_hi - box.x_lo, box.y_hi - box.y_lo) / 2.0 or 1.0
    best = None
    for deg in degree_ladder(degree_cap):
        rng = np.random.default_rng([seed, deg, 0])
        n = _points_for(deg, base_points)
        zs = [sample_region(s.region, n, rng) for s in sets]
        z = np.concatenate(zs)
        f = np.concatenate([s.func(pts) for s, pts in zip(sets, zs)])
        poly = arnoldi_fit(z, f, deg, center, scale)
        vrng = np.random.default_rng([seed, deg, 1])
        vs = [sample_region(s.region, VALIDATION_FACTOR * n, vrng) for s in sets]
        errs = [float(np.max(np.abs(poly(v) - s.func(v)))) for s, v in zip(sets, vs)]
        cert = FitCertificate(deg, errs[0], errs[1], z.size, sum(v.size for v in vs), tol,
                              max(errs[2:], default=0.0))
        if best is None or cert.error < best[1].error:
            best = (poly, cert)
        if cert.passed:
            return poly, cert
    raise FitError(f"degree cap {degree_cap} reached without meeting tol {tol:g}",
                   best_error=best[1].error, degree=best[1].degree)


# --------------------------------------------------------------------------
# chains


@dataclass(frozen=True)
class ChainStage:
    """Increment ``q_k = pi_k - pi_{k-1}`` (``pi_{k0}`` itself for the first stage)."""

    k: int
    l: int
    poly: Poly
    cert: FitCertificate | None

    @property
    def budget(self) -> float:
        return 2.0 ** (-self.k)

    def to_dict(self):
        return {"k": self.k, "l": self.l, "poly": self.poly.to_dict(),
                "cert": None if self.cert is None else self.cert.to_dict()}

    @classmethod
    def from_dict(cls, d):
        c = d["cert"]
        return cls(d["k"], d["l"], Poly.from_dict(d["poly"]), None if c is None else FitCertificate(**c))


@dataclass(frozen=True)
class Chain:
    """Polynomials ``pi_{k0}, ..., pi_K`` stored as increments.

    ``pi_k = sum_{m <= k} q_m``.  ``kind`` is ``"parabolic"`` (stage targets
    ``P_l(z - i X_k)``) or ``"hyperbolic"`` (``P_l(r_k z)``); ``targets``
    holds monomial coefficients of ``P_0, P_1, ...``.  ``final`` is the
    planned last stage: every increment is also held near 0 on the later
    ``D_m`` (``m <= final``), which keeps ``pi_{k-1}`` moderate where stage
    ``k`` must correct it.  The represented function is ``pi_K``.
    """

    kind: str
    k0: int
    final: int
    regions: RegionSchedule
    targets: tuple
    stages: tuple = field(default_factory=tuple)
    seed: int = 0
    degree_cap: int = DEGREE_CAP

    @property
    def last(self) -> int:
        return self.stages[-1].k

    def stage(self, k: int) -> ChainStage:
        for st in self.stages:
            if st.k == k:
                return st
        raise DomainError(f"stage {k} not in chain")

    def partial(self, k: int, z):
        """``pi_k(z)``."""
        if k < self.k0 or k > self.last:
            raise DomainError(f"stage {k} not in chain")
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for st in self.stages:
            if st.k > k:
                break
            out = out + st.poly(z)
        return complex(out) if out.ndim == 0 else out

    def __call__(self, z):
        return self.partial(self.last, z)

    def target(self, l: int) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial(np.asarray(self.targets[l], dtype=complex))

    def gamma(self, k: int) -> Rect:
        return self.regions.gamma(k)

    def to_dict(self):
        return {"kind": self.kind, "k0": self.k0, "final": self.final, "regions": self.regions.to_dict(),
                "targets": [_cplx_to_list(np.asarray(t, dtype=complex)) for t in self.targets],
                "stages": [s.to_dict() for s in self.stages], "seed": self.seed, "degree_cap": self.degree_cap}

    @classmethod
    def from_dict(cls, d):
        targets = tuple(tuple(complex(*c) for c in t) for t in d["targets"])
        return cls(d["kind"], d["k0"], d["final"], RegionSchedule.from_dict(d["regions"]), targets,
                   tuple(ChainStage.from_dict(s) for s in d["stages"]), d["seed"], d["degree_cap"])


def chain_init(kind: str, regions: RegionSchedule, targets: Sequence[Sequence[complex]], n_stages: int,
               seed: int = 0, degree_cap: int = DEGREE_CAP) -> Chain:
    """Chain holding only ``pi_{k0} = 1``, planned for ``n_stages`` more stages."""
    if kind not in ("parabolic", "hyperbolic"):
        raise DomainError(f"unknown chain kind {kind!r}")
    if not targets:
        raise DomainError("at least one target polynomial is required")
    final = regions.k0 + n_stages
    if n_stages < 0 or (n_stages and final not in regions.stages):
        raise DomainError(f"regions do not reach stage {final}")
    tgt = tuple(tuple(complex(c) for c in t) for t in targets)
    first = ChainStage(regions.k0, -1, Poly.constant(1.0), None)
    return Chain(kind, regions.k0, final, regions, tgt, (first,), seed, degree_cap)


def stage_target(chain: Chain, schedule, k: int) -> tuple[int, Callable]:
    """Index ``l = j(k)`` and the function ``pi_k`` must match on ``D_k``."""
    i = schedule.index(k)
    l = int(schedule.j[i])
    if l >= len(chain.targets):
        raise DomainError(f"stage {k} schedules target {l} but only {len(chain.targets)} are given")
    P = chain.target(l)
    if chain.kind == "parabolic":
        shift = 1j * float(schedule.X[i])
        return l, lambda z: P(z - shift)
    logr = float(schedule.logr[i])
    if logr < -700:
        raise DomainError(f"stage {k}: r_k underflows")
    r = math.exp(logr)
    return l, lambda z: P(r * z)


def chain_extend(chain: Chain, schedule, k: int | None = None, tol: float | None = None) -> Chain:
    """Append stage ``k``.

    The increment ``q_k`` is fitted to ``0`` on ``Gamma_{k-1}`` (condition
    b: ``|pi_k - pi_{k-1}| <= 2^{-k}`` there) and to the stage target minus
    ``pi_{k-1}`` on ``D_k`` (condition a).
    """
    k = chain.last + 1 if k is None else k
    if k != chain.last + 1:
        raise DomainError(f"stage {k - 1} must be present before stage {k}")
    if k > chain.final:
        raise DomainError(f"stage {k} is past the planned final stage {chain.final}")
    l, func = stage_target(chain, schedule, k)
    tol = 2.0 ** (-k) if tol is None else tol
    prev = chain.last

    def residual(z):
        return func(z) - chain.partial(prev, z)

    def zero(z):
        return np.zeros(np.shape(z), dtype=complex)

    set_d = TargetSet(chain.regions[k].D, residual)
    set_g = TargetSet(chain.gamma(k - 1), zero)
    later = [TargetSet(chain.regions[m].D, zero) for m in range(k + 1, chain.final + 1)]
    try:
        poly, cert = two_set_fit(set_d, set_g, tol, chain.degree_cap, seed=chain.seed * 1000 + k, extra=later)
    except FitError as exc:
        raise FitError(str(exc), best_error=exc.best_error, degree=exc.degree, stage=k) from None
    return replace(chain, stages=chain.stages + (ChainStage(k, l, poly, cert),))


def build_chain(kind: str, schedule, regions: RegionSchedule, targets, n_stages: int, seed: int = 0,
                degree_cap: int = DEGREE_CAP) -> Chain:
    chain = chain_init(kind, regions, targets, n_stages, seed, degree_cap)
    for _ in range(n_stages):
        chain = chain_extend(chain, schedule)
    return chain


def chain_eval(chain: Chain, z) -> tuple:
    """``pi_K(z)`` and the bound ``2^{-k(z)} + 2^{-K}``.

    ``k(z)`` is the largest stored stage whose ``Gamma`` contains ``z``.

    Raises
    ------
    DomainError
        If ``z`` lies outside every stored ``Gamma_k``.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    K = chain.last
    kz = np.full(z_arr.shape, -1, dtype=np.int64)
    for st in chain.stages:
        if st.k in chain.regions.stages or st.k == chain.k0:
            kz[_in_rect_closed(chain.gamma(st.k), z_arr)] = st.k
    if np.any(kz < 0):
        raise DomainError("point outside every stored Gamma_k")
    value = chain(z_arr)
    bound = 2.0 ** (-kz.astype(float)) + 2.0 ** (-K)
    if np.ndim(z) == 0:
        return complex(value[0]), float(bound[0])
    return value, bound


def _in_rect_closed(r: Rect, z: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    sc = tol * max(1.0, abs(r.x_lo), abs(r.x_hi), abs(r.y_lo), abs(r.y_hi))
    return ((z.real >= r.x_lo - sc) & (z.real <= r.x_hi + sc)
            & (z.imag >= r.y_lo - sc) & (z.imag <= r.y_hi + sc))


def stage_errors(chain: Chain, schedule, k: int, n: int = 400, seed: int = 7) -> tuple[float, float]:
    """Fresh-sample sup errors of conditions a) and b) at stage ``k``."""
    rng = np.random.default_rng([seed, k])
    _, func = stage_target(chain, schedule, k)
    zd = sample_region(chain.regions[k].D, n, rng)
    zg = sample_region(chain.gamma(k - 1), n, rng)
    ea = float(np.max(np.abs(chain.partial(k, zd) - func(zd))))
    eb = float(np.max(np.abs(chain.stage(k).poly(zg))))
    return ea, eb


def telescoping_check(chain: Chain, n: int = 400, seed: int = 7) -> list[tuple[int, float, float]]:
    """``(k, sup |pi_k - pi_{k-1}| on Gamma_{k-1}, 2^{-k})`` on fresh samples."""
    out = []
    for st in chain.stages[1:]:
        rng = np.random.default_rng([seed, st.k])
        pts = sample_region(chain.gamma(st.k - 1), n, rng)
        out.append((st.k, float(np.max(np.abs(st.poly(pts)))), st.budget))
    return out
