"""Explicit common-hypercyclic candidates built to finite stage, with
replayable certificates for the inequalities that make them work.

Five builders share one bundle format:

========================  ==========================  ==========================
kind                      schedule                    object
========================  ==========================  ==========================
``shift``                 multiplicative              :class:`L2Vector`
``holo-parabolic``        additive                    :class:`Chain`
``holo-hyperbolic``       multiplicative, alpha = 1   :class:`Chain`
``lp-parabolic``          additive                    :class:`PiecewiseFunction`
``lp-hyperbolic``         multiplicative, alpha = 1   :class:`PiecewiseFunction`
========================  ==========================  ==========================

A bundle stores only certificates whose achieved value is within the bound.
:func:`certify` re-evaluates a query from scratch and either appends a
certificate or returns a :class:`Refusal` naming every failed precondition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConstructionError, DomainError
from .funcspaces import (L2Vector, PiecewiseFunction, WeightedMeasure, backward_shift, dilate_pw,
                         forward_shift, lp_distance, lp_norm, restrict_pw, translate_pw, weighted_integral)
from .halfplane import MARGIN, Rect, RegionSchedule, contains_shape, hyperbolic_regions, parabolic_regions
from .polyapprox import DEGREE_CAP, Chain, build_chain, sample_region, stage_errors
from .schedules import (AddSchedule, AuxSequence, MultSchedule, build_aux_sequence, build_aux_sequence_hyperbolic,
                        dumps_schedule, loads_schedule)

KINDS = ("shift", "holo-parabolic", "holo-hyperbolic", "lp-parabolic", "lp-hyperbolic")
BUNDLE_HEADER = "# commonhc bundle v1"
DEFAULT_COMPACT = (0.5, 1.5, -0.5, 0.5)
DEFAULT_ETA = 0.125
COMPACT_SAMPLES = 2000
LOG_LIMIT = 700.0


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Certificate:
    """One checked inequality ``achieved <= bound``.

    ``name`` identifies the inequality, ``stage`` the schedule stage and
    ``params`` the operator parameters it was checked for.  ``details``
    keeps the intermediate quantities (proof terms, margins).
    """

    name: str
    stage: int
    bound: float
    achieved: float
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.achieved <= self.bound

    def to_dict(self) -> dict:
        return {"name": self.name, "stage": self.stage, "bound": self.bound, "achieved": self.achieved,
                "params": self.params, "details": self.details}

    @classmethod
    def from_dict(cls, d) -> "Certificate":
        return cls(d["name"], d["stage"], d["bound"], d["achieved"], d.get("params", {}), d.get("details", {}))


@dataclass(frozen=True)
class Query:
    """Certification request.

    ``stage=None`` asks for the least admissible stage.  ``params`` holds
    ``lam`` (shift), ``a`` (parabolic), or ``lam``, ``b`` and ``mu``
    (hyperbolic).  ``eps=None`` uses the schedule's ledger tolerance.
    ``compact`` is ``(x_lo, x_hi, y_lo, y_hi)`` for holomorphic kinds.
    """

    target: int
    params: dict = field(default_factory=dict)
    stage: int | None = None
    eps: float | None = None
    compact: tuple | None = None
    eta: float = DEFAULT_ETA

    def to_dict(self) -> dict:
        params = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.params.items()}
        return {"target": self.target, "params": params, "stage": self.stage, "eps": self.eps,
                "compact": None if self.compact is None else list(self.compact), "eta": self.eta}


@dataclass(frozen=True)
class Refusal:
    """Why a query could not be certified; ``achieved`` is set when the
    inequality was evaluated but exceeded its bound."""

    query: dict
    reasons: tuple
    achieved: float | None = None
    bound: float | None = None

    @property
    def passed(self) -> bool:
        return False


@dataclass
class ConstructionBundle:
    """Schedule, constructed object, certificates and truncation ledger.

    ``extra`` carries what :func:`certify` needs besides the object itself
    (targets, auxiliary sequence, measure, stage geometry).
    """

    kind: str
    schedule: MultSchedule | AddSchedule
    obj: object
    certificates: list = field(default_factory=list)
    ledger: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def add(self, cert: Certificate) -> None:
        if not cert.passed:
            raise ConstructionError(f"refusing to store failing certificate {cert.name} at stage {cert.stage}")
        if cert not in self.certificates:
            self.certificates.append(cert)

    def find(self, name: str, stage: int | None = None) -> list[Certificate]:
        return [c for c in self.certificates if c.name == name and (stage is None or c.stage == stage)]


# --------------------------------------------------------------------------
# serialization


def _obj_to_json(kind, obj):
    if kind == "shift":
        return obj.to_list()
    if kind.startswith("holo"):
        return obj.to_dict()
    return obj.to_records()


def _obj_from_json(kind, data):
    if kind == "shift":
        return L2Vector.from_list(data)
    if kind.startswith("holo"):
        return Chain.from_dict(data)
    return PiecewiseFunction.from_records(data)


def _extra_to_json(extra: dict) -> dict:
    out = {}
    for key, value in extra.items():
        if key == "targets_pw":
            out[key] = [F.to_records() for F in value]
        elif key == "targets_l2":
            out[key] = [v.to_list() for v in value]
        elif key == "measure":
            out[key] = {"p": value.p, "alpha": value.alpha}
        else:
            out[key] = value
    return out


def _extra_from_json(data: dict) -> dict:
    out = {}
    for key, value in data.items():
        if key == "targets_pw":
            out[key] = [PiecewiseFunction.from_records(r) for r in value]
        elif key == "targets_l2":
            out[key] = [L2Vector.from_list(v) for v in value]
        elif key == "measure":
            out[key] = WeightedMeasure(p=value["p"], alpha=value["alpha"])
        else:
            out[key] = value
    return out


def dumps_bundle(bundle: ConstructionBundle) -> str:
    """Header line plus canonical JSON; identical bundles give identical text."""
    payload = {
        "kind": bundle.kind,
        "schedule": dumps_schedule(bundle.schedule),
        "object": _obj_to_json(bundle.kind, bundle.obj),
        "certificates": [c.to_dict() for c in bundle.certificates],
        "ledger": bundle.ledger,
        "extra": _extra_to_json(bundle.extra),
    }
    return BUNDLE_HEADER + "\n" + json.dumps(payload, sort_keys=True, indent=1, allow_nan=True) + "\n"


def loads_bundle(text: str) -> ConstructionBundle:
    head, _, body = text.partition("\n")
    if head != BUNDLE_HEADER:
        raise ConstructionError("not a bundle file (bad header)")
    d = json.loads(body)
    kind = d["kind"]
    if kind not in KINDS:
        raise ConstructionError(f"unknown bundle kind {kind!r}")
    extra = _extra_from_json(d["extra"])
    if "aux" in extra:
        extra["aux"] = list(extra["aux"])
    return ConstructionBundle(kind, loads_schedule(d["schedule"]), _obj_from_json(kind, d["object"]),
                              [Certificate.from_dict(c) for c in d["certificates"]], d["ledger"], extra)


# --------------------------------------------------------------------------
# helpers


def _require(schedule, kind: str):
    if schedule.kind != kind:
        raise DomainError(f"this construction needs a {'multiplicative' if kind == 'mult' else 'additive'} "
                          f"schedule, got {schedule.kind!r}")


def _require_unit_alphas(schedule: MultSchedule):
    bad = {l: a for l, a in schedule.alphas.items() if a != 1.0}
    if bad:
        raise DomainError(f"dilation constructions need alpha_l = 1 for every l (got {bad})")


def _last_stage(schedule) -> int:
    return schedule.k0 + schedule.horizon - 1


def _check_cap(schedule, stage_cap: int, need_next: bool = True):
    hi = _last_stage(schedule) - (1 if need_next else 0)
    if not schedule.k0 <= stage_cap <= hi:
        raise DomainError(f"stage_cap must lie in [{schedule.k0}, {hi}]")


def _refuse(query: Query, reasons, achieved=None, bound=None) -> Refusal:
    return Refusal(query.to_dict(), tuple(reasons), achieved, bound)


def _eps_for(query: Query, schedule, k: int) -> float:
    return float(schedule.eps[schedule.index(k)]) if query.eps is None else float(query.eps)


def _search(query: Query, stages: Sequence[int], attempt) -> Certificate | Refusal:
    """Run ``attempt(k)`` on candidate stages; first certificate wins.

    An explicit stage returns its own refusal.  A search that finds nothing
    refuses with the reasons collected at every stage tried.
    """
    if query.stage is not None:
        return attempt(int(query.stage))
    seen = []
    for k in stages:
        out = attempt(k)
        if isinstance(out, Certificate):
            return out
        seen.append(f"stage {k}: " + "; ".join(out.reasons))
    if not seen:
        return _refuse(query, ["no stage within horizon"])
    return _refuse(query, ["no stage matching the request within horizon"] + seen)


# --------------------------------------------------------------------------
# shift vectors


def build_shift_vector(schedule: MultSchedule, targets: Sequence[L2Vector], stage_cap: int,
                       certify_ledger: bool = True) -> ConstructionBundle:
    """``f = sum_{k0 <= k <= cap} y_k`` for the scaled backward shift family.

    With ``d_k = r_k - r_{k+1}``, ``w_k = v_{j(k)}`` when ``B^{M_{k+1}-M_k}``
    kills it (that is, its support fits in the gap) and ``0`` otherwise,
    and ``y_k = (d_k/|w_k|) S^{M_k} w_k``.

    Certificates ``norm-decay`` (``|B^{M_k} f| <= r_k``) are stored for every
    stage; with ``certify_ledger`` each stage whose ``w_k`` is nonzero also
    gets ``orbit`` (``|(lam_k B)^{M_k} f - v_{l_k}| <= 3 eps_k``) at its ledger
    ``lam_k``.

    Raises
    ------
    DomainError
        If ``|v_l|`` differs from the schedule's ``alpha_l`` or the cap
        leaves no room for ``r_{cap+1}``.
    """
    _require(schedule, "mult")
    _check_cap(schedule, stage_cap)
    targets = list(targets)
    for l, v in enumerate(targets):
        if l not in schedule.alphas:
            raise DomainError(f"schedule has no weight for target {l}")
        a = schedule.alpha(l)
        if not math.isclose(v.norm(), a, rel_tol=1e-12):
            raise DomainError(f"|v_{l}| = {v.norm()!r} but the schedule was generated with alpha_{l} = {a!r}")
    k0 = schedule.k0
    f = L2Vector()
    d, used = {}, {}
    for k in range(k0, stage_cap + 1):
        i = schedule.index(k)
        lr, lr_next = float(schedule.logr[i]), float(schedule.logr[i + 1])
        dk = math.exp(lr) * -math.expm1(lr_next - lr)
        d[k] = dk
        l = int(schedule.j[i])
        w = targets[l] if l < len(targets) else None
        if w is not None and w.coef and len(w) <= int(schedule.M[i + 1] - schedule.M[i]):
            used[k] = l
            f = f + forward_shift(w.scale(dk / w.norm()), int(schedule.M[i]))
    bundle = ConstructionBundle(
        "shift", schedule, f,
        ledger={"stage_cap": stage_cap, "d": {str(k): v for k, v in d.items()},
                "scheduled": {str(k): l for k, l in used.items()},
                "omitted_tail": f"y_k for k > {stage_cap} (norm at most r_{stage_cap + 1})"},
        extra={"targets_l2": targets, "stage_cap": stage_cap})
    for k in range(k0, stage_cap + 1):
        i = schedule.index(k)
        direct = backward_shift(f, 1.0, int(schedule.M[i])).norm()
        telescoped = math.fsum(d[m] for m in range(k, stage_cap + 1) if m in used)
        bundle.add(Certificate("norm-decay", k, math.exp(float(schedule.logr[i])), direct,
                               details={"sum_d": telescoped}))
    if certify_ledger:
        for k in sorted(used):
            l, lam, eps = schedule.ledger(k)
            out = certify(bundle, Query(target=l, params={"lam": lam}, stage=k, eps=eps))
            if isinstance(out, Refusal):
                raise ConstructionError(f"ledger stage {k} failed to certify: {out.reasons}")
    return bundle


def _certify_shift(bundle: ConstructionBundle, query: Query):
    s: MultSchedule = bundle.schedule
    lam = float(query.params.get("lam", float("nan")))
    if not lam > 1:
        return _refuse(query, ["lam must exceed 1"])
    l = int(query.target)
    targets = bundle.extra["targets_l2"]
    if not 0 <= l < len(targets):
        return _refuse(query, [f"unknown target {l}"])
    v = targets[l]
    alpha = v.norm()
    cap = bundle.extra["stage_cap"]
    scheduled = bundle.ledger["scheduled"]

    def attempt(k):
        if not s.k0 <= k <= cap:
            return _refuse(query, [f"stage {k} outside [{s.k0}, {cap}]"])
        i = s.index(k)
        eps = _eps_for(query, s, k)
        reasons = []
        if int(s.j[i]) != l:
            reasons.append("choice mismatch")
        elif str(k) not in scheduled:
            reasons.append("target not scheduled")
        log_scale = int(s.M[i]) * math.log(lam)
        if log_scale > LOG_LIMIT:
            return _refuse(query, reasons + ["stage beyond numeric horizon"])
        hit = math.exp(log_scale + float(s.logr[i]))
        if abs(hit - alpha) > eps:
            reasons.append("schedule mismatch")
        ratio = math.exp(float(s.logr[i + 1] - s.logr[i]))
        if ratio * (eps + alpha) > eps:
            reasons.append("radius ratio too large for this tolerance")
        if reasons:
            return _refuse(query, reasons)
        img = backward_shift(bundle.obj, lam, int(s.M[i]))
        dist = (img - v).norm()
        bound = 3.0 * eps
        if dist > bound:
            return _refuse(query, ["eps too small"], dist, bound)
        cert = Certificate("orbit", k, bound, dist, {"lam": lam, "target": l, "eps": eps},
                           {"lam_M_r": hit, "ratio": ratio})
        bundle.add(cert)
        return cert

    return _search(query, range(s.k0, cap + 1), attempt)


# --------------------------------------------------------------------------
# holomorphic chains


def _compact(query: Query) -> Rect:
    x_lo, x_hi, y_lo, y_hi = DEFAULT_COMPACT if query.compact is None else query.compact
    return Rect(x_lo, x_hi, y_lo, y_hi)


def _compact_points(K: Rect, seed: int, k: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 104729, k])
    pts = sample_region(K, COMPACT_SAMPLES, rng)
    return np.concatenate([np.array(K.corners(), dtype=complex), pts])


def _lipschitz(coeffs: Sequence[complex], radius: float) -> float:
    """Upper bound on ``|P'|`` over ``|z| <= radius``."""
    return float(sum(n * abs(c) * radius ** (n - 1) for n, c in enumerate(coeffs) if n >= 1))


def _fit_certificates(bundle: ConstructionBundle, chain: Chain, schedule):
    for st in chain.stages[1:]:
        ea, eb = stage_errors(chain, schedule, st.k)
        bundle.add(Certificate("fit-a", st.k, st.budget, ea, details={"degree": st.poly.degree}))
        bundle.add(Certificate("fit-b", st.k, st.budget, eb, details={"degree": st.poly.degree}))


def _chain_bundle(kind, schedule, chain: Chain, extra) -> ConstructionBundle:
    K = chain.last
    bundle = ConstructionBundle(
        kind, schedule, chain,
        ledger={"stages": [st.k for st in chain.stages], "truncation": 2.0 ** (1 - K),
                "degrees": [st.poly.degree for st in chain.stages]},
        extra=extra)
    _fit_certificates(bundle, chain, schedule)
    return bundle


def build_holo_parabolic(schedule: AddSchedule, targets: Sequence[Sequence[complex]], stages: int,
                         seed: int = 0, degree_cap: int = DEGREE_CAP, regions: RegionSchedule | None = None,
                         queries: Sequence[Query] = ()) -> ConstructionBundle:
    """Polynomial chain whose translates ``f(z + i M_k a)`` approach each ``P_l``.

    ``targets`` are monomial coefficient lists of ``P_0, P_1, ...``.  Every
    chain stage gets ``fit-a``/``fit-b`` certificates; each query that
    certifies adds an ``orbit`` certificate, and a refused query raises.
    """
    _require(schedule, "add")
    regions = parabolic_regions(schedule) if regions is None else regions
    chain = build_chain("parabolic", schedule, regions, targets, stages, seed, degree_cap)
    bundle = _chain_bundle("holo-parabolic", schedule, chain, {"seed": seed})
    _run_queries(bundle, queries)
    return bundle


def build_holo_hyperbolic(schedule: MultSchedule, targets: Sequence[Sequence[complex]], stages: int,
                          mu_list: Sequence[float] = (), seed: int = 0, degree_cap: int = DEGREE_CAP,
                          regions: RegionSchedule | None = None,
                          queries: Sequence[Query] = ()) -> ConstructionBundle:
    """Chain for the dilations; ``g(z) = f(mu z)`` is certified per ``mu`` in ``mu_list``.

    Queries without ``mu`` are run once per ``mu`` in ``mu_list``; an empty
    ``mu_list`` therefore yields no orbit certificates for them.
    """
    _require(schedule, "mult")
    _require_unit_alphas(schedule)
    for mu in mu_list:
        if not mu >= 1:
            raise DomainError(f"mu = {mu} must be >= 1")
    regions = hyperbolic_regions(schedule) if regions is None else regions
    chain = build_chain("hyperbolic", schedule, regions, targets, stages, seed, degree_cap)
    bundle = _chain_bundle("holo-hyperbolic", schedule, chain, {"seed": seed, "mu_list": list(mu_list)})
    expanded = []
    for q in queries:
        if "mu" in q.params:
            expanded.append(q)
        else:
            expanded.extend(Query(q.target, {**q.params, "mu": mu}, q.stage, q.eps, q.compact, q.eta)
                            for mu in mu_list)
    _run_queries(bundle, expanded)
    return bundle


def _run_queries(bundle, queries):
    for q in queries:
        out = certify(bundle, q)
        if isinstance(out, Refusal):
            raise ConstructionError(f"query {out.query} refused: {'; '.join(out.reasons)}")


def _holo_common(bundle, query, k, K: Rect):
    """Checks common to both chain kinds; returns ``(reasons, eps)``, ``eps=None`` if ``k`` is unusable."""
    chain: Chain = bundle.obj
    s = bundle.schedule
    reasons = []
    if not (chain.k0 < k <= chain.last):
        return [f"stage {k} not in chain ({chain.k0 + 1}..{chain.last})"], None
    i = s.index(k)
    eps = _eps_for(query, s, k)
    l = int(query.target)
    if not 0 <= l < len(chain.targets):
        return [f"unknown target {l}"], None
    if int(s.j[i]) != l:
        reasons.append("choice mismatch")
    if 2.0 ** (-k) > eps:
        reasons.append("stage too early for eps (2^-k > eps)")
    if not K.in_right_half_plane():
        reasons.append("compact leaves the right half-plane")
    return reasons, eps


def _certify_holo_parabolic(bundle: ConstructionBundle, query: Query):
    chain: Chain = bundle.obj
    s: AddSchedule = bundle.schedule
    a = query.params.get("a")
    if a is None or not float(a) > 0:
        return _refuse(query, ["a must be positive"])
    a = float(a)
    K = _compact(query)
    eta = float(query.eta)
    K1 = K.pad(eta)
    P = chain.target(int(query.target)) if 0 <= int(query.target) < len(chain.targets) else None

    def attempt(k):
        reasons, eps = _holo_common(bundle, query, k, K)
        if eps is None:
            return _refuse(query, reasons)
        i = s.index(k)
        if not K1.in_right_half_plane():
            reasons.append("K + eta-ball leaves the right half-plane")
        if not contains_shape(chain.regions[k].C, K1, MARGIN):
            reasons.append("region miss (K + eta-ball not inside C_k)")
        L = _lipschitz(P.coef, max(abs(z) for z in K1.corners()))
        delta = eta if L == 0 else min(eta, eps / L)
        theta = a * int(s.M[i]) - float(s.X[i])
        if abs(theta) > delta:
            reasons.append("schedule mismatch (|a M_k - X_k| > delta)")
        if reasons:
            return _refuse(query, reasons)
        z = _compact_points(K, chain.seed, k)
        w = z + 1j * (a * int(s.M[i]))
        value = chain(w)
        achieved = float(np.max(np.abs(value - P(z))))
        bound = 3.0 * eps + 2.0 ** (1 - chain.last)
        if achieved > bound:
            return _refuse(query, ["eps too small"], achieved, bound)
        cert = Certificate("orbit", k, bound, achieved,
                           {"a": a, "target": int(query.target), "eps": eps, "compact": [K.x_lo, K.x_hi, K.y_lo, K.y_hi]},
                           {"delta": delta, "theta": theta, "lipschitz": L,
                            "continuity": float(np.max(np.abs(P(z + 1j * theta) - P(z))))})
        bundle.add(cert)
        return cert

    return _search(query, range(chain.k0 + 1, chain.last + 1), attempt)


def _certify_holo_hyperbolic(bundle: ConstructionBundle, query: Query):
    chain: Chain = bundle.obj
    s: MultSchedule = bundle.schedule
    lam = float(query.params.get("lam", float("nan")))
    b = float(query.params.get("b", 0.0))
    mu = float(query.params.get("mu", 1.0))
    if not lam > 1:
        return _refuse(query, ["lam must exceed 1"])
    if not mu >= 1:
        return _refuse(query, ["mu must be >= 1"])
    K = _compact(query)
    eta = float(query.eta)
    K1 = K.pad(eta)
    P = chain.target(int(query.target)) if 0 <= int(query.target) < len(chain.targets) else None

    def attempt(k):
        reasons, eps = _holo_common(bundle, query, k, K)
        if eps is None:
            return _refuse(query, reasons)
        i = s.index(k)
        log_lm = int(s.M[i]) * math.log(lam)
        if log_lm > LOG_LIMIT:
            return _refuse(query, reasons + ["stage beyond numeric horizon"])
        lam_m = math.exp(log_lm)
        r = math.exp(float(s.logr[i]))
        rho = lam_m * r
        # image of K under z -> mu rho (z - ib) + mu r ib is an axis-aligned box
        img = Rect(mu * rho * K.x_lo, mu * rho * K.x_hi,
                   mu * rho * (K.y_lo - b) + mu * r * b, mu * rho * (K.y_hi - b) + mu * r * b)
        if not K1.in_right_half_plane():
            reasons.append("K + eta-ball leaves the right half-plane")
        if not contains_shape(chain.regions[k].C, img, MARGIN):
            reasons.append("region miss (rescaled K not inside C_k)")
        # z -> P(mu z - mu i b) on K1
        radius = max(abs(mu * (z - 1j * b)) for z in K1.corners())
        L = mu * _lipschitz(P.coef, radius)
        delta = eta if L == 0 else min(eta, eps / L)
        M_abs = max(abs(z) for z in K.corners())
        drift = mu * abs(rho - 1.0) * (M_abs + abs(b)) + mu * r * abs(b)
        if not drift < delta:
            reasons.append("schedule mismatch (rescaling drift >= delta)")
        if reasons:
            return _refuse(query, reasons)
        z = _compact_points(K, chain.seed, k)
        w = mu * lam_m * (z - 1j * b) + mu * 1j * b
        achieved = float(np.max(np.abs(chain(w) - P(mu * z - mu * 1j * b))))
        bound = 3.0 * eps + 2.0 ** (1 - chain.last)
        if achieved > bound:
            return _refuse(query, ["eps too small"], achieved, bound)
        cert = Certificate("orbit", k, bound, achieved,
                           {"lam": lam, "b": b, "mu": mu, "target": int(query.target), "eps": eps,
                            "compact": [K.x_lo, K.x_hi, K.y_lo, K.y_hi]},
                           {"delta": delta, "drift": drift, "lipschitz": L, "lam_M_r": rho})
        bundle.add(cert)
        return cert

    return _search(query, range(chain.k0 + 1, chain.last + 1), attempt)


# --------------------------------------------------------------------------
# weighted L^p


def mu_tail(x: float, measure: WeightedMeasure) -> float:
    """Upper bound on ``mu([x, inf))`` for a power weight.

    For ``x >= 1`` this is ``x^(1 - 2 alpha) / (2 alpha - 1)`` (from
    ``(1 + t^2)^-alpha <= t^(-2 alpha)``); otherwise the total mass.
    """
    al = measure.alpha
    if x >= 1:
        return x ** (1.0 - 2.0 * al) / (2.0 * al - 1.0)
    return math.sqrt(math.pi) * math.gamma(al - 0.5) / math.gamma(al)


def _aux_values(u, n: int) -> np.ndarray:
    if isinstance(u, AuxSequence):
        vals = np.asarray(u.u, dtype=float)
    else:
        vals = np.asarray(list(u), dtype=float)
    if len(vals) < n:
        raise DomainError(f"auxiliary sequence has {len(vals)} terms, {n} needed")
    return vals


def _check_power_measure(measure: WeightedMeasure):
    if measure.omega is not None:
        raise DomainError("the L^p constructions use power weights (1 + t^2)^-alpha")


def _pw_integral(F: PiecewiseFunction, G: PiecewiseFunction, lo: float, hi: float,
                 measure: WeightedMeasure) -> tuple[float, float]:
    """``int_lo^hi |F - G|^p d mu`` (``lo``/``hi`` may be infinite)."""
    sup = [s for s in (F.support, G.support) if s is not None]
    if not sup:
        return 0.0, 0.0
    lo = max(lo, min(float(s[0]) for s in sup))
    hi = min(hi, max(float(s[1]) for s in sup))
    if not hi > lo:
        return 0.0, 0.0
    pts = {lo, hi}
    pts.update(float(x) for x in F.breakpoints() + G.breakpoints() if lo < float(x) < hi)

    def diff(x):
        return F(x) - G(x)

    val, err, _ = weighted_integral(diff, sorted(pts), measure)
    return val, err


def _add_tail_bound(stage_cap: int, x_cap: float, profile, measure: WeightedMeasure, shift: float) -> float:
    """``sum_{m > cap} 2^3 C u_m / X_m^3``-type remainder, using ``u_m <= m``.

    ``X_{cap+j}`` is bounded below by both ``x_growth^j X_cap`` and
    ``X_cap + j gap(cap)``; each term uses ``mu([X_m/2 - shift, inf))``.
    """
    total = 0.0
    g = float(profile.gap(stage_cap))
    growth = max(1.0, float(profile.x_growth))
    for j in range(1, 400):
        x_m = max(x_cap * growth ** j, x_cap + j * g)
        term = (stage_cap + j) * mu_tail(x_m / 2.0 - shift, measure)
        total += term
        if term < 1e-18 * max(total, 1e-300):
            break
    else:
        # remaining terms: (cap + j) C / (j g / 2)^3 summed past j = 400
        total += 8.0 * (stage_cap / (2.0 * 400 ** 2) + 1.0 / 400) / (g ** 3 * (2 * measure.alpha - 1))
    return total


def parabolic_lp_radii(schedule: AddSchedule, upto: int) -> dict:
    """``R_k = min((X_{k+1} - X_k)/2, (X_k - X_{k-1})/2, X_k/2)`` for ``k0 <= k <= upto``,
    replaced by its suffix minimum so that it is nondecreasing."""
    X = schedule.X
    k0 = schedule.k0
    raw = {}
    for k in range(k0, upto + 1):
        i = schedule.index(k)
        cand = [(float(X[i + 1]) - float(X[i])) / 2.0, float(X[i]) / 2.0]
        if i > 0:
            cand.append((float(X[i]) - float(X[i - 1])) / 2.0)
        raw[k] = min(cand)
    out, run = {}, math.inf
    for k in sorted(raw, reverse=True):
        run = min(run, raw[k])
        out[k] = run
    return out


def build_lp_parabolic(schedule: AddSchedule, targets: Sequence[PiecewiseFunction], stage_cap: int,
                       aux=None, measure: WeightedMeasure | None = None,
                       queries: Sequence[Query] = ()) -> ConstructionBundle:
    """``f = sum_k h_k`` with ``h_k(x) = w_k(x - X_k)`` on ``L^p(dt/(1+t^2)^alpha)``.

    ``w_k = f_{j(k)}`` when its support lies in ``[-R_k, R_k]`` and
    ``sup |f_{j(k)}|^p <= u_k``; otherwise ``w_k = 0``.  ``aux`` defaults to
    the lemma sequence built from ``v_k = k``.

    Certificates: ``disjoint-supports`` at ``stage_cap`` and ``norm`` (the
    quadrature value of ``|f|_p^p`` against ``C sum 2^3 u_k / X_k^3`` plus the
    certified tail past the cap).  Queries add ``term-1``, ``term-2`` and
    ``term-3`` certificates at the chosen stage.

    Raises
    ------
    DomainError
        If ``sup |f_l|^p`` exceeds ``u_l`` for some target.
    ConstructionError
        If a query's target fits no scheduled stage.
    """
    _require(schedule, "add")
    measure = WeightedMeasure(p=1.0, alpha=2.0) if measure is None else measure
    _check_power_measure(measure)
    _check_cap(schedule, stage_cap)
    k0 = schedule.k0
    aux = build_aux_sequence(lambda k: float(k), stage_cap + 1) if aux is None else aux
    u = _aux_values(aux, stage_cap)
    if np.any(u[:stage_cap] > np.arange(1, stage_cap + 1)):
        raise DomainError("the tail ledger assumes u_k <= k")
    p = measure.p
    targets = list(targets)
    for l, F in enumerate(targets):
        if F.sup_norm() ** p > u[max(l, 1) - 1]:
            raise DomainError(f"sup |f_{l}|^p = {F.sup_norm() ** p} exceeds u_{max(l, 1)} = {u[max(l, 1) - 1]}")
    R = parabolic_lp_radii(schedule, stage_cap)
    f = PiecewiseFunction()
    used, skipped = {}, {}
    for k in range(k0, stage_cap + 1):
        i = schedule.index(k)
        l = int(schedule.j[i])
        if l >= len(targets):
            skipped[str(k)] = "no such target"
            continue
        F = targets[l]
        sup = F.support
        if sup is None:
            skipped[str(k)] = "zero target"
            continue
        if not (-R[k] <= float(sup[0]) and float(sup[1]) <= R[k]):
            skipped[str(k)] = f"support exceeds R_k = {R[k]!r}"
            continue
        if F.sup_norm() ** p > u[k - 1]:
            skipped[str(k)] = "sup norm exceeds u_k"
            continue
        used[str(k)] = l
        f = f + translate_pw(F, -Fraction(float(schedule.X[i])))
    C = mu_tail(1.0, measure)  # C/x^(2 alpha - 1) bounds the tail mass for x >= 1
    ledger_terms = [2.0 ** (2 * measure.alpha - 1) * C * u[k - 1] / float(schedule.X[schedule.index(k)])
                    ** (2 * measure.alpha - 1) for k in range(k0, stage_cap + 1) if str(k) in used]
    i_cap = schedule.index(stage_cap)
    tail = _add_tail_bound(stage_cap, float(schedule.X[i_cap]), schedule.profile, measure, 0.0)
    bundle = ConstructionBundle(
        "lp-parabolic", schedule, f,
        ledger={"stage_cap": stage_cap, "R": {str(k): v for k, v in R.items()}, "scheduled": used,
                "skipped": skipped, "norm_ledger": math.fsum(ledger_terms), "norm_tail": tail},
        extra={"targets_pw": targets, "aux": [float(x) for x in u], "measure": measure,
               "stage_cap": stage_cap})
    # disjointness: each h_k sits in [X_k - R_k, X_k + R_k] and these windows are disjoint
    windows = [(float(schedule.X[schedule.index(int(k))]) - R[int(k)],
                float(schedule.X[schedule.index(int(k))]) + R[int(k)]) for k in used]
    overlap = max((a[1] - b[0] for a, b in zip(windows, windows[1:])), default=-math.inf)
    bundle.add(Certificate("disjoint-supports", stage_cap, 0.0, min(overlap, 0.0),
                           details={"max_overlap": overlap if math.isfinite(overlap) else None}))
    norm = lp_norm(f, measure)
    per_piece = math.fsum(lp_norm(translate_pw(targets[l], -Fraction(float(schedule.X[schedule.index(int(k))]))),
                                  measure).integral for k, l in used.items())
    bundle.add(Certificate("norm", stage_cap, math.fsum(ledger_terms) + tail, norm.integral + norm.integral_error,
                           details={"norm_p": norm.integral, "quad_error": norm.integral_error,
                                    "per_piece_sum": per_piece, "tail": tail}))
    _run_queries(bundle, queries)
    return bundle


def _certify_lp_parabolic(bundle: ConstructionBundle, query: Query):
    s: AddSchedule = bundle.schedule
    f: PiecewiseFunction = bundle.obj
    measure: WeightedMeasure = bundle.extra["measure"]
    targets = bundle.extra["targets_pw"]
    cap = bundle.extra["stage_cap"]
    p = measure.p
    a = query.params.get("a")
    if a is None or not float(a) > 0:
        return _refuse(query, ["a must be positive"])
    a_q = a if isinstance(a, Fraction) else Fraction(float(a))
    l = int(query.target)
    if not 0 <= l < len(targets):
        return _refuse(query, [f"unknown target {l}"])
    fl = targets[l]
    used = bundle.ledger["scheduled"]

    def attempt(k):
        if not s.k0 <= k <= cap:
            return _refuse(query, [f"stage {k} outside [{s.k0}, {cap}]"])
        i = s.index(k)
        eps = _eps_for(query, s, k)
        reasons = []
        if int(s.j[i]) != l:
            reasons.append("choice mismatch")
        elif str(k) not in used:
            reasons.append("target not scheduled (" + bundle.ledger["skipped"].get(str(k), "omitted") + ")")
        if reasons:
            return _refuse(query, reasons)
        shift = int(s.M[i]) * a_q
        X = {m: Fraction(float(s.X[s.index(m)])) for m in range(s.k0, cap + 1)}
        h = {m: translate_pw(targets[used[str(m)]], -X[m]) for m in range(s.k0, cap + 1) if str(m) in used}
        # (1) |T^{M_k} h_k - f_l|_p
        t1 = lp_distance(translate_pw(h[k], shift), fl, measure)
        term1 = t1.value
        # (2) |sum_{m>k} T^{M_k} h_m|_p^p plus the part of the series past the cap
        later = PiecewiseFunction(tuple(pc for m, hm in h.items() if m > k for pc in hm.pieces))
        t2 = lp_norm(translate_pw(later, shift), measure)
        trunc = _add_tail_bound(cap, float(X[cap]), s.profile, measure, float(shift))
        term2 = t2.integral + t2.integral_error + trunc
        # (3) |sum_{m<k} T^{M_k} h_m|_p^p
        earlier = PiecewiseFunction(tuple(pc for m, hm in h.items() if m < k for pc in hm.pieces))
        t3 = lp_norm(translate_pw(earlier, shift), measure)
        term3 = t3.integral + t3.integral_error
        over = [name for name, val in (("term-1", term1), ("term-2", term2), ("term-3", term3)) if val > eps]
        if over:
            return _refuse(query, ["eps too small (" + ", ".join(over) + ")"], max(term1, term2, term3), eps)
        total = lp_distance(translate_pw(f, shift), fl, measure)
        params = {"a": str(a_q) if isinstance(a, Fraction) else float(a), "target": l, "eps": eps}
        details = {"orbit_distance": total.value, "theta": float(shift - X[k]), "truncation": trunc}
        certs = [Certificate("term-1", k, eps, term1, params, {**details, "quad_error": t1.error}),
                 Certificate("term-2", k, eps, term2, params, {**details, "quad_error": t2.integral_error}),
                 Certificate("term-3", k, eps, term3, params, {**details, "quad_error": t3.integral_error})]
        for c in certs:
            bundle.add(c)
        return certs[0]

    return _search(query, range(s.k0, cap + 1), attempt)


def dilation_intervals(schedule: MultSchedule, stage_cap: int) -> dict:
    """``log`` endpoints of ``I_k = ]1/sqrt(r_k r_{k-1}), 1/sqrt(r_k r_{k+1})[`` for ``k0 < k <= cap``.

    ``hi_k`` and ``lo_{k+1}`` are the same floating-point expression, so
    consecutive intervals share an endpoint exactly.
    """
    lr = schedule.logr
    out = {}
    for k in range(schedule.k0 + 1, stage_cap + 1):
        i = schedule.index(k)
        lo = -0.5 * (float(lr[i - 1]) + float(lr[i]))
        hi = -0.5 * (float(lr[i]) + float(lr[i + 1]))
        out[k] = (lo, hi)
    return out


def support_radius(l: int) -> float:
    """Targets ``f_l`` must vanish outside ``1/L <= |x| <= L`` with ``L = l + 2``."""
    return float(l + 2)


def build_lp_hyperbolic(schedule: MultSchedule, targets: Sequence[PiecewiseFunction], stage_cap: int,
                        aux=None, measure: WeightedMeasure | None = None, b_test: Sequence[float] = (0.0,),
                        queries: Sequence[Query] = ()) -> ConstructionBundle:
    """``f(x) = f_{j(k)}(r_k x)`` on ``I_k`` and ``J_k = -I_k`` for ``k0 < k <= cap``.

    ``aux`` defaults to the dilation variant of the lemma sequence (computed
    without its certificate gate).  Stages whose target breaks the size rule
    ``sup |f_l|^p <= u_k`` are left empty and noted in the ledger.

    Raises
    ------
    DomainError
        If a target's support is not inside ``1/L <= |x| <= L``.
    ConstructionError
        With message "stage beyond numeric horizon" if an interval endpoint
        overflows a double.
    """
    _require(schedule, "mult")
    _require_unit_alphas(schedule)
    measure = WeightedMeasure(p=1.0, alpha=2.0) if measure is None else measure
    _check_power_measure(measure)
    _check_cap(schedule, stage_cap)
    if stage_cap <= schedule.k0:
        raise DomainError("stage_cap must exceed k0")
    if aux is None:
        aux = build_aux_sequence_hyperbolic(schedule, list(b_test), certify=False)
    u = _aux_values(aux, stage_cap - schedule.k0 + 1)
    p = measure.p
    targets = list(targets)
    for l, F in enumerate(targets):
        L = Fraction(support_radius(l))
        if not all((1 / L <= pc.lo and pc.hi <= L) or (-L <= pc.lo and pc.hi <= -1 / L) for pc in F.pieces):
            raise DomainError(f"f_{l} must vanish outside 1/{float(L):g} <= |x| <= {float(L):g}")
    logs = dilation_intervals(schedule, stage_cap)
    pieces, used, skipped, intervals = [], {}, {}, {}
    for k, (llo, lhi) in logs.items():
        if lhi > LOG_LIMIT:
            raise ConstructionError(f"stage {k}: stage beyond numeric horizon")
        i = schedule.index(k)
        l = int(schedule.j[i])
        lo, hi = Fraction(math.exp(llo)), Fraction(math.exp(lhi))
        intervals[str(k)] = [llo, lhi]
        if l >= len(targets) or targets[l].support is None:
            skipped[str(k)] = "no such target" if l >= len(targets) else "zero target"
            continue
        if targets[l].sup_norm() ** p > u[k - schedule.k0]:
            skipped[str(k)] = "sup norm exceeds u_k"
            continue
        g = dilate_pw(targets[l], Fraction(math.exp(float(schedule.logr[i]))))
        pieces.extend(restrict_pw(g, [(lo, hi), (-hi, -lo)]).pieces)
        used[str(k)] = l
    f = PiecewiseFunction(tuple(pieces))
    tail = _dilation_tail(schedule, stage_cap, measure, 0.0, 1.0, u)
    norm_terms = []
    for k in logs:
        if str(k) in used:
            x = math.exp(logs[k][0])
            norm_terms.append(2.0 * u[k - schedule.k0] * mu_tail(x, measure))
    bundle = ConstructionBundle(
        "lp-hyperbolic", schedule, f,
        ledger={"stage_cap": stage_cap, "log_intervals": intervals, "scheduled": used, "skipped": skipped,
                "norm_ledger": math.fsum(norm_terms), "norm_tail": tail},
        extra={"targets_pw": targets, "aux": [float(x) for x in u], "measure": measure, "stage_cap": stage_cap})
    ks = sorted(logs)
    gaps = [logs[a][1] - logs[b][0] for a, b in zip(ks, ks[1:])]
    bundle.add(Certificate("disjoint-intervals", stage_cap, 0.0, max(gaps, default=0.0),
                           details={"shared_endpoints": all(g == 0.0 for g in gaps)}))
    norm = lp_norm(f, measure)
    bundle.add(Certificate("norm", stage_cap, math.fsum(norm_terms) + tail, norm.integral + norm.integral_error,
                           details={"norm_p": norm.integral, "quad_error": norm.integral_error, "tail": tail}))
    _run_queries(bundle, queries)
    return bundle


def _dilation_tail(schedule: MultSchedule, stage_cap: int, measure: WeightedMeasure, b: float, scale: float,
                   u) -> float:
    """Bound on the mass the infinite series puts past ``I_cap`` and ``J_cap``
    after ``x -> scale (x - b) + b`` is undone.

    Uses ``u_m <= sqrt(m)`` and ``lo_{m+1} >= 2 lo_m`` (true once
    ``r_{m-1}/r_{m+1} >= 4``).  Each of ``I_m`` and ``J_m`` contributes at
    most ``u_m mu(|x - b'| >= (lo_m - |b|)/scale)``.
    """
    lr = schedule.logr
    i_cap = schedule.index(stage_cap)
    log_lo = -0.5 * (float(lr[i_cap]) + float(lr[i_cap + 1]))
    total = 0.0
    for j in range(1, 200):
        m = stage_cap + j
        lo_m = math.exp(min(log_lo, LOG_LIMIT)) * 2.0 ** (j - 1)
        x = (lo_m - abs(b)) / scale - abs(b)
        term = 2.0 * math.sqrt(m) * mu_tail(x, measure)
        total += term
        if term < 1e-18 * max(total, 1e-300):
            break
    return total


def _certify_lp_hyperbolic(bundle: ConstructionBundle, query: Query):
    s: MultSchedule = bundle.schedule
    f: PiecewiseFunction = bundle.obj
    measure: WeightedMeasure = bundle.extra["measure"]
    targets = bundle.extra["targets_pw"]
    cap = bundle.extra["stage_cap"]
    logs = {int(k): tuple(v) for k, v in bundle.ledger["log_intervals"].items()}
    used = bundle.ledger["scheduled"]
    lam = float(query.params.get("lam", float("nan")))
    b = float(query.params.get("b", 0.0))
    if not lam > 1:
        return _refuse(query, ["lam must exceed 1"])
    l = int(query.target)
    if not 0 <= l < len(targets):
        return _refuse(query, [f"unknown target {l}"])
    target = translate_pw(targets[l], -Fraction(b))

    def attempt(k):
        if not s.k0 < k <= cap:
            return _refuse(query, [f"stage {k} outside [{s.k0 + 1}, {cap}]"])
        i = s.index(k)
        eps = _eps_for(query, s, k)
        reasons = []
        if int(s.j[i]) != l:
            reasons.append("choice mismatch")
        elif str(k) not in used:
            reasons.append("target not scheduled")
        log_lm = int(s.M[i]) * math.log(lam)
        if log_lm > LOG_LIMIT:
            return _refuse(query, reasons + ["stage beyond numeric horizon"])
        rho = math.exp(log_lm + float(s.logr[i]))
        if not abs(rho - 1.0) < 0.5:
            reasons.append("schedule mismatch (|lam^M_k r_k - 1| >= 1/2)")
        lr = s.logr
        if any(float(lr[s.index(m) - 1] - lr[s.index(m)]) < 2 * math.log(2.0) for m in range(k, cap + 1)):
            reasons.append("radius ratio below 4 at or after stage k")
        if reasons:
            return _refuse(query, reasons)
        lam_m = Fraction(math.exp(log_lm))
        g = dilate_pw(f, lam_m, Fraction(b))
        scale = float(lam_m)

        def pre(y):
            return b + (y - b) / scale

        lo_k, hi_k = (math.exp(v) for v in logs[k])
        regions = {
            "S1": (pre(0.0), pre(lo_k)), "S2": (pre(lo_k), pre(hi_k)), "S3": (pre(hi_k), math.inf),
            "S1'": (pre(-lo_k), pre(0.0)), "S2'": (pre(-hi_k), pre(-lo_k)), "S3'": (-math.inf, pre(-hi_k)),
        }
        trunc = _dilation_tail(s, cap, measure, b, scale, bundle.extra["aux"])
        terms, errs = {}, {}
        for name, (lo, hi) in regions.items():
            val, err = _pw_integral(g, target, lo, hi, measure)
            if name.startswith("S3"):
                # mass of the series past the cap, half on each side
                val += trunc / 2.0
            terms[name] = val + err
            errs[name] = err
        over = [n for n, v in terms.items() if v > eps]
        if over:
            return _refuse(query, ["eps too small (" + ", ".join(over) + ")"], max(terms.values()), eps)
        total = lp_distance(g, target, measure)
        params = {"lam": lam, "b": b, "target": l, "eps": eps}
        details = {"orbit_distance": total.value, "lam_M_r": rho, "truncation": trunc}
        certs = [Certificate(name, k, eps, v, params, {**details, "quad_error": errs[name]})
                 for name, v in terms.items()]
        for c in certs:
            bundle.add(c)
        return certs[1]

    return _search(query, range(s.k0 + 1, cap + 1), attempt)


# --------------------------------------------------------------------------
# dispatch

_CERTIFIERS = {
    "shift": _certify_shift,
    "holo-parabolic": _certify_holo_parabolic,
    "holo-hyperbolic": _certify_holo_hyperbolic,
    "lp-parabolic": _certify_lp_parabolic,
    "lp-hyperbolic": _certify_lp_hyperbolic,
}


def certify(bundle: ConstructionBundle, query: Query) -> Certificate | Refusal:
    """Evaluate ``query`` against ``bundle`` from scratch.

    A passing evaluation is appended to ``bundle.certificates`` (exact
    duplicates are not stored twice) and returned; otherwise a
    :class:`Refusal` lists the failed preconditions.
    """
    try:
        fn = _CERTIFIERS[bundle.kind]
    except KeyError:
        raise DomainError(f"unknown bundle kind {bundle.kind!r}") from None
    return fn(bundle, query)
