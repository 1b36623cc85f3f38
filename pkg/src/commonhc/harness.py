"""Experiment harness: orbit scans, boundary probes and config-driven runs.

Reports are written deterministically (sorted JSON, 17-digit CSV floats,
no timestamps) so two runs of one config with one seed produce identical
bytes; wall-clock time is only logged.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import config as cfgmod
from .constructions import (DEFAULT_COMPACT, Certificate, ConstructionBundle, Query, Refusal, _compact_points, build_holo_hyperbolic,
                            build_holo_parabolic, build_lp_hyperbolic, build_lp_parabolic, build_shift_vector,
                            certify, dumps_bundle)
from .errors import (ConfigError, ConstructionError, DomainError, FitError, GeometryError, HCError, QuadratureError,
                     ScheduleError)
from .funcspaces import (L2Vector, PiecewiseFunction, WeightedMeasure, backward_shift, dense_family, dilate_pw,
                         lp_distance, translate_pw)
from .halfplane import AutomorphismParams, Rect, certify_regions, hyperbolic_regions, inv_cayley, parabolic_regions
from .polyapprox import Chain
from .salas import (WeightSpec, fmt, homothety_admissible, homothety_criterion, pair_grid, translation_admissible,
                    translation_criterion)
from .schedules import PROFILES, check_invariants, dumps_schedule, gen_add_schedule, gen_mult_schedule

log = logging.getLogger(__name__)

REPORT_VERSION = "commonhc orbit-report v1"
DEFAULT_N0 = 64
EXIT_OK, EXIT_ASSERT, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (FitError, QuadratureError, ConstructionError, GeometryError, ScheduleError, FloatingPointError,
                  OverflowError, ZeroDivisionError)
# certificate that stands for an orbit inequality, per bundle kind
ORBIT_CERT = {"shift": "orbit", "holo-parabolic": "orbit", "holo-hyperbolic": "orbit", "lp-parabolic": "term-1",
              "lp-hyperbolic": "S2"}


# --------------------------------------------------------------------------
# orbit scans


@dataclass(frozen=True)
class OrbitRow:
    index: int
    params: dict
    target: int
    best_n: int
    best_distance: float
    stage: int | None = None
    bound: float | None = None

    @property
    def certified(self) -> bool:
        return self.bound is not None

    @property
    def coherent(self) -> bool:
        return self.bound is None or self.best_distance <= self.bound


@dataclass
class OrbitReport:
    """Best distances ``min_n d(T^n f, v_l)`` over an ``n``-schedule."""

    kind: str
    metric: str
    n_schedule: tuple
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def coherent(self) -> bool:
        return all(r.coherent for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {REPORT_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("row", "params", "target", "best_n", "best_distance", "certified_stage", "bound"))
        for r in self.rows:
            w.writerow((r.index, json.dumps(r.params, sort_keys=True), r.target, r.best_n, fmt(r.best_distance),
                        "" if r.stage is None else r.stage, "" if r.bound is None else fmt(r.bound)))
        return buf.getvalue()


def _plain(params: dict) -> dict:
    return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in params.items()}


def _as_float(v) -> float:
    return float(Fraction(v)) if isinstance(v, str) else float(v)


def _check_family(kind: str, params: dict):
    if "lam" in params and not _as_float(params["lam"]) > 1:
        raise ConfigError(f"lam = {params['lam']!r}: the family requires lam > 1")
    if kind in ("holo-parabolic", "lp-parabolic"):
        if "a" not in params or _as_float(params["a"]) == 0:
            raise ConfigError("translation parameter a must be given and nonzero")
    elif "lam" not in params:
        raise ConfigError("parameter lam is required")


def _ledger_rows(bundle: ConstructionBundle) -> list[tuple[dict, int]]:
    seen, out = set(), []
    for c in bundle.certificates:
        if c.name != ORBIT_CERT[bundle.kind]:
            continue
        params = {k: v for k, v in c.params.items() if k not in ("target", "eps")}
        key = (json.dumps(params, sort_keys=True), int(c.params["target"]))
        if key not in seen:
            seen.add(key)
            out.append((params, int(c.params["target"])))
    return out


def _certified(bundle: ConstructionBundle, params: dict, target: int) -> Certificate | None:
    best = None
    for c in bundle.certificates:
        if c.name != ORBIT_CERT[bundle.kind] or int(c.params.get("target", -1)) != target:
            continue
        if all(c.params.get(k) == v for k, v in _plain(params).items()):
            if best is None or c.stage < best.stage:
                best = c
    return best


def _bound(bundle: ConstructionBundle, cert: Certificate) -> float:
    """Bound on the orbit distance implied by ``cert`` (and its sibling terms)."""
    if bundle.kind in ("shift", "holo-parabolic", "holo-hyperbolic"):
        return cert.bound
    p = bundle.extra["measure"].p
    eps = cert.bound
    if bundle.kind == "lp-parabolic":
        # |A + B + C| <= |A| + |B| + |C| with term 1 a norm and terms 2, 3 p-th powers
        return eps + 2.0 * eps ** (1.0 / p)
    return (6.0 * eps) ** (1.0 / p)


def default_n_schedule(bundle: ConstructionBundle, n0: int | None = None) -> tuple[int, ...]:
    """The construction's ``{M_k}`` plus ``1..n0`` (``n0`` defaults to 64 on desk schedules, 0 otherwise)."""
    s = bundle.schedule
    if n0 is None:
        n0 = DEFAULT_N0 if s.profile.name == "desk" else 0
    if bundle.kind.startswith("holo"):
        stages = [st.k for st in bundle.obj.stages]
    else:
        stages = range(s.k0, bundle.extra["stage_cap"] + 1)
    return tuple(sorted({int(s.M[s.index(k)]) for k in stages} | set(range(1, n0 + 1))))


def _distance_fn(bundle: ConstructionBundle, params: dict, target: int, compact, eta) -> Callable[[int], float]:
    kind = bundle.kind
    f = bundle.obj
    if kind == "shift":
        v = bundle.extra["targets_l2"][target]
        lam = float(params["lam"])
        return lambda n: (backward_shift(f, lam, n) - v).norm()
    if kind.startswith("holo"):
        chain: Chain = f
        P = chain.target(target)
        K = Rect(*(params.get("compact") or compact or DEFAULT_COMPACT))
        cert = _certified(bundle, params, target)
        z = _compact_points(K, chain.seed, cert.stage if cert else chain.last)
        if kind == "holo-parabolic":
            a = _as_float(params["a"])
            ref = P(z)

            def dist(n):
                with np.errstate(all="ignore"):
                    return float(np.max(np.abs(chain(z + 1j * (a * n)) - ref)))
            return dist
        lam, b, mu = float(params["lam"]), float(params.get("b", 0.0)), float(params.get("mu", 1.0))
        ref = P(mu * z - mu * 1j * b)

        def dist(n):
            log_lm = n * math.log(lam)
            if log_lm > 700:
                return math.inf
            with np.errstate(all="ignore"):
                w = mu * math.exp(log_lm) * (z - 1j * b) + mu * 1j * b
                return float(np.max(np.abs(chain(w) - ref)))
        return dist
    measure: WeightedMeasure = bundle.extra["measure"]
    fl = bundle.extra["targets_pw"][target]
    if kind == "lp-parabolic":
        a = params["a"]
        a_q = Fraction(a) if isinstance(a, str) else (a if isinstance(a, Fraction) else Fraction(float(a)))
        return lambda n: lp_distance(translate_pw(f, n * a_q), fl, measure).value
    lam, b = float(params["lam"]), float(params.get("b", 0.0))
    tgt = translate_pw(fl, -Fraction(b))

    def dist(n):
        log_lm = n * math.log(lam)
        if log_lm > 700:
            return math.inf
        return lp_distance(dilate_pw(f, Fraction(math.exp(log_lm)), Fraction(b)), tgt, measure).value
    return dist


def verify_orbit(bundle: ConstructionBundle, param_grid, targets: Sequence[int] | None = None,
                 n_schedule: Sequence[int] | None = None, metric: str | None = None, n0: int | None = None,
                 compact=None, eta=None, jobs: int = 1) -> OrbitReport:
    """Scan ``d(T_param^n f, v_l)`` for every ``(param, target)``.

    ``param_grid="ledger"`` takes the pairs from the bundle's orbit
    certificates; otherwise rows are ``param_grid x targets``.  Rows with a
    matching certificate record its stage and the bound it implies, and
    that stage's ``M_k`` is added to the scan.  Rows are evaluated in
    parallel with ``jobs`` threads and emitted in grid order.

    Raises
    ------
    ConfigError
        If ``metric`` does not fit the bundle or a parameter lies outside
        the operator family.
    """
    expected = cfgmod.METRIC_FOR[bundle.kind]
    metric = expected if metric is None else metric
    if metric != expected:
        raise ConfigError(f"metric {metric!r} does not match a {bundle.kind} bundle (use {expected!r})")
    if isinstance(param_grid, str):
        if param_grid != "ledger":
            raise ConfigError(f"unknown parameter grid {param_grid!r}")
        pairs = _ledger_rows(bundle)
        if targets is not None:
            pairs = [(p, t) for p, t in pairs if t in set(targets)]
    else:
        targets = list(targets or ())
        pairs = [(dict(p), int(t)) for p in param_grid for t in targets]
    for p, _ in pairs:
        _check_family(bundle.kind, p)
    base = tuple(default_n_schedule(bundle, n0) if n_schedule is None else sorted(set(int(n) for n in n_schedule)))
    if any(n < 1 for n in base):
        raise ConfigError("n-schedule entries must be >= 1")
    s = bundle.schedule

    def run(item):
        idx, (params, target) = item
        cert = _certified(bundle, params, target)
        ns = set(base)
        if cert is not None:
            ns.add(int(s.M[s.index(cert.stage)]))
        dist = _distance_fn(bundle, params, target, compact, eta)
        best_n, best = 0, math.inf
        for n in sorted(ns):
            d = dist(n)
            if d < best:
                best_n, best = n, d
        bound = None if cert is None else _bound(bundle, cert)
        return OrbitRow(idx, _plain(params), target, best_n, best, None if cert is None else cert.stage, bound)

    items = list(enumerate(pairs))
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run, items))
    else:
        rows = [run(it) for it in items]
    return OrbitReport(bundle.kind, metric, base, sorted(rows, key=lambda r: r.index))


# --------------------------------------------------------------------------
# boundary probe


@dataclass(frozen=True)
class ProbeReport:
    """``F(phi_n(0))`` along the orbit of 0, with ``w_n = psi^n(1)`` its half-plane image."""

    kind: str
    n: np.ndarray
    w: np.ndarray
    z: np.ndarray
    values: np.ndarray
    dispersion: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(("n", "w_re", "w_im", "z_re", "z_im", "value_re", "value_im"))
        for n, w, z, v in zip(self.n, self.w, self.z, self.values):
            wr.writerow((int(n), fmt(w.real), fmt(w.imag), fmt(z.real), fmt(z.imag), fmt(v.real), fmt(v.imag)))
        return buf.getvalue()


def boundary_probe(f, params: AutomorphismParams, n_max: int, trailing: float = 0.25) -> ProbeReport:
    """Evaluate ``F`` along ``phi_n(0)``; ``f`` is a :class:`Chain` (a half-plane
    function ``g`` with ``F = g o sigma``) or a callable on the disk.

    The dispersion is the largest pairwise distance among the trailing
    ``trailing`` fraction of values (at least two); it stays away from 0
    when the values do not converge.

    Raises
    ------
    DomainError
        For elliptic maps or maps without a half-plane normal form.
    """
    if params.kind == "elliptic":
        raise DomainError("elliptic automorphisms have an interior fixed point; nothing to probe")
    if not params.halfplane:
        raise DomainError("probe needs the half-plane normal form (attractive fixed point +1)")
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    n = np.arange(1, n_max + 1)
    w = np.array([complex(params.psi_iterate(1.0 + 0j, int(k))) for k in n])
    z = inv_cayley(w)
    with np.errstate(all="ignore"):
        if isinstance(f, Chain):
            values = np.asarray(f(w), dtype=complex)
        else:
            values = np.asarray(f(z), dtype=complex) * np.ones_like(z)
    m = max(2, int(math.ceil(trailing * n_max)))
    tail = values[-m:]
    disp = float(np.max(np.abs(tail[:, None] - tail[None, :]))) if tail.size > 1 else 0.0
    return ProbeReport(params.kind, n, w, z, values, disp)


# --------------------------------------------------------------------------
# config-driven runs


def _num(v):
    v = cfgmod.parse_number(v)
    return v


def _schedule_from(cfg: dict, profile_name: str):
    sc = cfg["schedule"]
    profile = PROFILES[profile_name]
    if sc["kind"] == "add":
        return gen_add_schedule(int(sc["horizon"]), profile, sc.get("n_targets"))
    con = cfg.get("construction", {})
    alphas = sc.get("alphas")
    if alphas is None:
        if con.get("kind") == "shift":
            alphas = [L2Vector(tuple(float(_num(c)) for c in t)).norm() for t in con["targets"]]
        else:
            alphas = [1.0] * max(1, len(con.get("targets", [])) if isinstance(con.get("targets"), list) else 1)
    return gen_mult_schedule([float(a) for a in alphas], int(sc["horizon"]), profile)


def _pw_targets(spec) -> list[PiecewiseFunction]:
    if isinstance(spec, dict):
        if "dense" not in spec:
            raise ConfigError("L^p targets need a list or {dense = count}")
        return dense_family(int(spec["dense"]))
    out = []
    for t in spec:
        h = _num(t.get("height", 1))
        if "indicator" in t:
            lo, hi = (_num(x) for x in t["indicator"])
            out.append(PiecewiseFunction.indicator(lo, hi, h))
        elif "tent" in t:
            c, wdt = (_num(x) for x in t["tent"])
            out.append(PiecewiseFunction.tent(c, wdt, h))
        else:
            raise ConfigError(f"unknown L^p target {t!r}")
    return out


def _query_params(kind: str, schedule, q: dict) -> dict:
    params = {}
    stage = q.get("stage")
    for key, v in q.get("params", {}).items():
        if v == "ledger":
            if stage is None:
                raise ConfigError(f"{key} = \"ledger\" needs an explicit stage")
            i = schedule.index(int(stage))
            if kind == "lp-parabolic" and key == "a":
                v = Fraction(float(schedule.X[i])) / int(schedule.M[i])
            else:
                v = float(schedule.lam[i])
        else:
            v = _num(v)
            if not (kind == "lp-parabolic" and key == "a"):
                v = float(v)
        params[key] = v
    return params


def _build(cfg: dict, schedule, seed: int) -> tuple[ConstructionBundle, list]:
    con = cfg["construction"]
    kind = con["kind"]
    if kind == "shift":
        targets = [L2Vector(tuple(float(_num(c)) for c in t)) for t in con["targets"]]
        bundle = build_shift_vector(schedule, targets, int(con["stage_cap"]))
    elif kind in ("holo-parabolic", "holo-hyperbolic"):
        targets = [[float(_num(c)) for c in t] for t in con["targets"]]
        kw = {"seed": seed}
        if "degree_cap" in con:
            kw["degree_cap"] = int(con["degree_cap"])
        if kind == "holo-parabolic":
            bundle = build_holo_parabolic(schedule, targets, int(con["stages"]), **kw)
        else:
            bundle = build_holo_hyperbolic(schedule, targets, int(con["stages"]),
                                           mu_list=[float(m) for m in con.get("mu", [1.0])], **kw)
    else:
        measure = WeightedMeasure(p=float(con.get("p", 1.0)), alpha=float(con.get("alpha", 2.0)))
        targets = _pw_targets(con["targets"])
        if kind == "lp-parabolic":
            bundle = build_lp_parabolic(schedule, targets, int(con["stage_cap"]), measure=measure)
        else:
            bundle = build_lp_hyperbolic(schedule, targets, int(con["stage_cap"]), measure=measure,
                                         b_test=[float(b) for b in con.get("b_test", [0.0])])
    outcomes = []
    for q in con.get("queries", ()):
        query = Query(int(q["target"]), _query_params(kind, schedule, q),
                      None if q.get("stage") is None else int(q["stage"]),
                      None if q.get("eps") is None else float(q["eps"]),
                      None if q.get("compact") is None else tuple(float(x) for x in q["compact"]),
                      float(q.get("eta", 0.125)))
        mus = con.get("mu", [1.0]) if kind == "holo-hyperbolic" and "mu" not in query.params else [None]
        for mu in mus:
            qq = query if mu is None else Query(query.target, {**query.params, "mu": float(mu)}, query.stage,
                                                query.eps, query.compact, query.eta)
            outcomes.append((qq, certify(bundle, qq)))
    return bundle, outcomes


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _salas(sal: dict) -> tuple[dict, dict]:
    """Run the configured Salas checks; returns ``(summary, csv files)``."""
    w = WeightSpec.from_config(sal["weight"])
    summary, files = {"weight": w.to_dict()}, {}
    if "translation" in sal:
        t = sal["translation"]
        rep = translation_criterion(w, [float(q) for q in t.get("q", [1.0])], int(t["n_max"]), float(t["threshold"]))
        summary["translation"] = _criterion_summary(rep)
        files["salas_translation.csv"] = rep.to_csv()
    if "homothety" in sal:
        h = sal["homothety"]
        rep = homothety_criterion(w, [tuple(map(float, ab)) for ab in h.get("ab", [[1.0, 2.0]])], int(h["n_max"]),
                                  float(h["threshold"]))
        summary["homothety"] = _criterion_summary(rep)
        files["salas_homothety.csv"] = rep.to_csv()
    if "translation_admissible" in sal:
        t = sal["translation_admissible"]
        grid = np.arange(int(round((t["stop"] - t["start"]) / t["step"])) + 1) * float(t["step"]) + float(t["start"])
        summary["translation_admissible"] = _adm_summary(translation_admissible(w, grid, t.get("C_cap")))
    if "homothety_admissible" in sal:
        h = sal["homothety_admissible"]
        vals = np.linspace(float(h["start"]), float(h["stop"]), int(h["count"]))
        summary["homothety_admissible"] = _adm_summary(homothety_admissible(w, pair_grid(vals), h.get("C_cap")))
    return summary, files


def _criterion_summary(rep) -> dict:
    return {"verdict": rep.verdict, "threshold": rep.threshold, "n_max": rep.n_max, "witness": rep.witness,
            "witness_sequence": [list(x) for x in rep.witness_sequence], "trailing": rep.trailing}


def _adm_summary(rep) -> dict:
    return {"sup_ratio": rep.sup_ratio, "argmax": list(rep.argmax), "grid_sup": rep.grid_sup,
            "refinement_gain": rep.refinement_gain, "points": rep.n_points, "skipped": rep.skipped,
            "verdict": rep.verdict, "notes": list(rep.notes)}


def _probe(prb: dict, bundle: ConstructionBundle | None) -> ProbeReport:
    if prb["kind"] == "parabolic":
        params = AutomorphismParams.parabolic(float(_num(prb.get("a", 1.0))))
    elif prb["kind"] == "hyperbolic":
        params = AutomorphismParams.hyperbolic(float(_num(prb.get("lam", 2.0))), float(_num(prb.get("b", 0.0))))
    else:
        raise ConfigError("probe kind 'disk' needs theta and a; use parabolic or hyperbolic normal forms")
    fn = prb.get("function", "constant")
    if fn == "chain":
        if bundle is None or not bundle.kind.startswith("holo"):
            raise ConfigError("probe function 'chain' needs a holomorphic construction")
        f = bundle.obj
    elif fn == "constant":
        c = complex(float(_num(prb.get("center", 1.0))))
        f = lambda z: np.full_like(z, c)  # noqa: E731
    else:
        raise ConfigError(f"unknown probe function {fn!r}")
    return boundary_probe(f, params, int(prb["n_max"]))


def _assertions(cfg: dict, state: dict) -> list[dict]:
    exp = cfg.get("assert", {})
    out = []

    def check(name, ok, detail):
        out.append({"name": name, "passed": bool(ok), "detail": detail})

    sal = state.get("salas", {})
    if exp.get("certificates_pass", True) and "certificates" in state:
        bad = [c for c in state["certificates"] if not c["passed"]]
        check("certificates_pass", not bad and not state["refusals"],
              f"{len(state['certificates'])} certificates, {len(bad)} failing, {len(state['refusals'])} refused")
    if exp.get("regions_pass", True) and "region_problems" in state:
        check("regions_pass", not state["region_problems"], "; ".join(state["region_problems"]) or "ok")
    if "schedule_problems" in state:
        check("schedule_invariants", not state["schedule_problems"], "; ".join(state["schedule_problems"]) or "ok")
    if "orbit" in state:
        rows = state["orbit"].rows
        check("orbit_coherent", state["orbit"].coherent, f"{sum(r.certified for r in rows)} certified rows")
        if "orbit_certified_min" in exp:
            n = sum(r.certified for r in rows)
            check("orbit_certified_min", n >= exp["orbit_certified_min"], f"{n} certified rows")
    if "translation_verdict" in exp:
        v = sal.get("translation", {}).get("verdict")
        check("translation_verdict", v == exp["translation_verdict"], f"got {v}")
    if "translation_witness_max" in exp:
        n = sal.get("translation", {}).get("witness")
        check("translation_witness_max", n is not None and n <= exp["translation_witness_max"], f"witness {n}")
    if "homothety_verdict" in exp:
        v = sal.get("homothety", {}).get("verdict")
        check("homothety_verdict", v == exp["homothety_verdict"], f"got {v}")
    if "homothety_limit" in exp:
        target, tol = exp["homothety_limit"]
        tr = sal.get("homothety", {}).get("trailing", {})
        ok = bool(tr) and abs(tr["min"] - target) <= tol and abs(tr["max"] - target) <= tol
        check("homothety_limit", ok, f"trailing [{tr.get('min')}, {tr.get('max')}]")
    if "translation_sup_ratio" in exp:
        lo, hi = exp["translation_sup_ratio"]
        r = sal.get("translation_admissible", {}).get("sup_ratio")
        check("translation_sup_ratio", r is not None and lo <= r <= hi, f"sup ratio {r}")
    if "homothety_sup_ratio_max" in exp:
        r = sal.get("homothety_admissible", {}).get("sup_ratio")
        check("homothety_sup_ratio_max", r is not None and r <= exp["homothety_sup_ratio_max"], f"sup ratio {r}")
    if "probe_dispersion_min" in exp:
        d = state["probe"].dispersion if "probe" in state else None
        check("probe_dispersion_min", d is not None and d >= exp["probe_dispersion_min"], f"dispersion {d}")
    return out


def _package_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def execute(cfg: dict, config_hash: str, out_dir, seed: int | None = None, profile: str | None = None,
            jobs: int = 1) -> int:
    """Run a validated config and write its reports into ``out_dir``; returns the exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    profile = profile or cfg.get("profile", "desk")
    files: dict[str, str] = {}
    state: dict = {}
    bundle = None
    t0 = time.perf_counter()
    if "schedule" in cfg:
        schedule = _schedule_from(cfg, profile)
        files["schedule.txt"] = dumps_schedule(schedule)
        state["schedule_problems"] = check_invariants(schedule)
        if "construction" in cfg:
            kind = cfg["construction"]["kind"]
            if kind.startswith("holo"):
                regions = parabolic_regions(schedule) if kind == "holo-parabolic" else hyperbolic_regions(schedule)
                state["region_problems"] = certify_regions(regions)
            bundle, outcomes = _build(cfg, schedule, seed)
            state["certificates"] = [{**c.to_dict(), "passed": c.passed} for c in bundle.certificates]
            state["refusals"] = [{"query": q.to_dict(), "reasons": list(o.reasons), "achieved": o.achieved,
                                  "bound": o.bound} for q, o in outcomes if isinstance(o, Refusal)]
            files["bundle.txt"] = dumps_bundle(bundle)
    if "orbit" in cfg:
        o = cfg["orbit"]
        params = o.get("params", "ledger")
        if params != "ledger":
            params = [{k: _num(v) for k, v in p.items()} for p in params]
        targets = o.get("targets")
        if targets is None and params != "ledger":
            targets = range(len(bundle.extra.get("targets_l2") or bundle.extra.get("targets_pw")
                                or bundle.obj.targets))
        rep = verify_orbit(bundle, params, targets, n0=o.get("n0"), metric=o.get("metric"),
                           compact=o.get("compact"), jobs=jobs)
        state["orbit"] = rep
        files["report.csv"] = rep.to_csv()
    if "probe" in cfg:
        state["probe"] = _probe(cfg["probe"], bundle)
        files["probe.csv"] = state["probe"].to_csv()
    if "salas" in cfg:
        state["salas"], extra = _salas(cfg["salas"])
        files.update(extra)
    if "report.csv" not in files:
        files["report.csv"] = OrbitReport("none", "none", ()).to_csv()
    checks = _assertions(cfg, state)
    doc = {"name": cfg["name"], "certificates": state.get("certificates", []), "refusals": state.get("refusals", []),
           "salas": state.get("salas", {}), "assertions": checks}
    if "probe" in state:
        doc["probe"] = {"kind": state["probe"].kind, "dispersion": state["probe"].dispersion}
    files["certificates.json"] = _dump_json(doc)
    meta = [f"schema_version = {cfgmod.SCHEMA_VERSION}", f"package_version = {_package_version()}",
            f"name = {cfg['name']}", f"config_sha256 = {config_hash}", f"seed = {seed}", f"profile = {profile}"]
    for name in sorted(files):
        meta.append(f"sha256[{name}] = {hashlib.sha256(files[name].encode()).hexdigest()}")
    meta.append(f"status = {'pass' if all(c['passed'] for c in checks) else 'fail'}")
    files["metadata.txt"] = "\n".join(meta) + "\n"
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    log.info("run %s finished in %.2f s", cfg["name"], time.perf_counter() - t0)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_ASSERT


def run_experiment(config_path=None, out_dir="out", seed: int | None = None, profile: str | None = None,
                   jobs: int = 1, text: str | None = None) -> int:
    """Validate and execute a config file (or ``text``); maps failures to exit codes.

    Returns
    -------
    int
        0 when every certificate and assertion passed, 1 on an assertion
        failure, 2 on a schema or domain violation, 3 on a numeric failure.
    """
    try:
        if text is None:
            cfg, digest = cfgmod.load(config_path)
        else:
            cfg, digest = cfgmod.load_text(text), hashlib.sha256(text.encode()).hexdigest()
    except (ConfigError, OSError) as exc:
        log.error("config error: %s", exc)
        return EXIT_SCHEMA
    try:
        return execute(cfg, digest, out_dir, seed, profile, jobs)
    except (ConfigError, DomainError, ValueError) as exc:
        log.error("schema/domain error: %s", exc)
        return EXIT_SCHEMA
    except NUMERIC_ERRORS as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except HCError as exc:
        log.error("failure: %s", exc)
        return EXIT_NUMERIC
