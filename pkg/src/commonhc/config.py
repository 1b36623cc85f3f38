"""Experiment configuration: TOML files validated against a small schema.

A config names a pipeline by the sections it contains::

    name = "..."          # required
    seed = 0              # optional, CLI --seed overrides
    profile = "desk"      # desk | density

    [schedule]            # kind = "mult" | "add", horizon, alphas (mult)
    [construction]        # kind, stage_cap or stages, targets, [[construction.queries]]
    [orbit]               # params = "ledger" | [{...}], targets, n0, metric
    [probe]               # kind, a | lam, b, n_max, function
    [salas]               # weight, translation, homothety, *_admissible
    [assert]              # expectations checked after the run

Unknown keys are schema errors, so typos fail loudly.
"""

from __future__ import annotations

import hashlib
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .constructions import KINDS
from .errors import ConfigError
from .salas import WEIGHT_KINDS

SCHEMA_VERSION = 1
TOP_KEYS = {"name", "description", "seed", "profile", "schedule", "construction", "orbit", "probe", "salas",
            "assert"}
SECTION_KEYS = {
    "schedule": {"kind", "horizon", "alphas", "n_targets"},
    "construction": {"kind", "stage_cap", "stages", "targets", "queries", "mu", "b_test", "degree_cap", "p",
                     "alpha"},
    "orbit": {"params", "targets", "n0", "metric", "compact", "eta"},
    "probe": {"kind", "a", "lam", "b", "theta", "center", "n_max", "function"},
    "salas": {"weight", "translation", "homothety", "translation_admissible", "homothety_admissible"},
    "assert": {"certificates_pass", "regions_pass", "orbit_certified_min", "orbit_within_bound",
               "translation_verdict", "translation_witness_max", "homothety_verdict", "homothety_limit",
               "translation_sup_ratio", "homothety_sup_ratio_max", "probe_dispersion_min"},
}
QUERY_KEYS = {"target", "params", "stage", "eps", "compact", "eta"}
SCHEDULE_FOR = {"shift": "mult", "holo-parabolic": "add", "holo-hyperbolic": "mult", "lp-parabolic": "add",
                "lp-hyperbolic": "mult"}
METRIC_FOR = {"shift": "l2", "holo-parabolic": "sup-compact", "holo-hyperbolic": "sup-compact",
              "lp-parabolic": "lp", "lp-hyperbolic": "lp"}


def _fail(msg: str):
    raise ConfigError(msg)


def _unknown(where: str, d: dict, allowed: set):
    extra = sorted(set(d) - allowed)
    if extra:
        _fail(f"{where}: unknown key(s) {', '.join(extra)}")


def _table(cfg: dict, key: str) -> dict | None:
    v = cfg.get(key)
    if v is not None and not isinstance(v, dict):
        _fail(f"[{key}] must be a table")
    return v


def _num(where: str, v, positive: bool = False, integer: bool = False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{where} must be a number, got {v!r}")
    if integer and not isinstance(v, int):
        _fail(f"{where} must be an integer, got {v!r}")
    if positive and not v > 0:
        _fail(f"{where} must be positive, got {v!r}")
    return v


def parse_number(v):
    """Numbers may be written as TOML floats or as exact ``"p/q"`` strings."""
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            _fail(f"cannot read {v!r} as a number")
    return v


def validate(cfg: dict) -> dict:
    """Check ``cfg`` against the schema; returns it unchanged.

    Raises
    ------
    ConfigError
        On any violation, including operator parameters outside their
        family (``lam <= 1``, ``a = 0``).
    """
    _unknown("top level", cfg, TOP_KEYS)
    if not isinstance(cfg.get("name"), str):
        _fail("name must be a string")
    if "seed" in cfg:
        _num("seed", cfg["seed"], integer=True)
    if cfg.get("profile", "desk") not in ("desk", "density"):
        _fail("profile must be desk or density")
    for key, allowed in SECTION_KEYS.items():
        sec = _table(cfg, key)
        if sec is not None:
            _unknown(f"[{key}]", sec, allowed)

    sch = cfg.get("schedule")
    con = cfg.get("construction")
    if sch is not None:
        if sch.get("kind") not in ("mult", "add"):
            _fail("[schedule] kind must be mult or add")
        _num("[schedule] horizon", sch.get("horizon"), positive=True, integer=True)
        if sch["kind"] == "mult":
            alphas = sch.get("alphas")
            if alphas is not None and (not isinstance(alphas, list) or not alphas):
                _fail("[schedule] alphas must be a nonempty list")
            for i, a in enumerate(alphas or ()):
                _num(f"[schedule] alphas[{i}]", a, positive=True)
    if con is not None:
        if sch is None:
            _fail("[construction] needs a [schedule]")
        kind = con.get("kind")
        if kind not in KINDS:
            _fail(f"[construction] kind must be one of {', '.join(KINDS)}")
        if SCHEDULE_FOR[kind] != sch["kind"]:
            _fail(f"construction {kind} needs a {SCHEDULE_FOR[kind]} schedule")
        if "targets" not in con:
            _fail("[construction] targets missing")
        for i, q in enumerate(con.get("queries", ())):
            if not isinstance(q, dict):
                _fail(f"query {i} must be a table")
            _unknown(f"query {i}", q, QUERY_KEYS)
            _num(f"query {i} target", q.get("target"), integer=True)
            _check_params(f"query {i}", kind, q.get("params", {}))
    orb = cfg.get("orbit")
    if orb is not None:
        if con is None:
            _fail("[orbit] needs a [construction]")
        metric = orb.get("metric", METRIC_FOR[con["kind"]])
        if metric != METRIC_FOR[con["kind"]]:
            _fail(f"metric {metric!r} does not match a {con['kind']} bundle")
        params = orb.get("params", "ledger")
        if params != "ledger":
            if not isinstance(params, list):
                _fail("[orbit] params must be \"ledger\" or a list of tables")
            for i, p in enumerate(params):
                _check_params(f"[orbit] params[{i}]", con["kind"], p)
        if "n0" in orb:
            _num("[orbit] n0", orb["n0"], integer=True)
    prb = cfg.get("probe")
    if prb is not None:
        if prb.get("kind") not in ("parabolic", "hyperbolic", "disk"):
            _fail("[probe] kind must be parabolic, hyperbolic or disk")
        _num("[probe] n_max", prb.get("n_max"), positive=True, integer=True)
        if prb["kind"] == "hyperbolic":
            _check_params("[probe]", "holo-hyperbolic", prb)
    sal = cfg.get("salas")
    if sal is not None:
        w = sal.get("weight")
        if not isinstance(w, dict) or w.get("kind") not in WEIGHT_KINDS:
            _fail(f"[salas] weight.kind must be one of {', '.join(WEIGHT_KINDS)}")
        for key in ("translation", "homothety"):
            sub = sal.get(key)
            if sub is not None:
                _num(f"[salas.{key}] n_max", sub.get("n_max"), positive=True, integer=True)
                _num(f"[salas.{key}] threshold", sub.get("threshold"), positive=True)
    return cfg


def _check_params(where: str, kind: str, p: dict):
    if not isinstance(p, dict):
        _fail(f"{where} params must be a table")
    # "ledger" defers to the schedule's value at the query stage
    p = {k: v for k, v in p.items() if v != "ledger"}
    if "lam" in p:
        lam = float(parse_number(p["lam"]))
        if not lam > 1:
            _fail(f"{where}: lam = {lam!r} outside the family (need lam > 1)")
    if "a" in p:
        a = float(parse_number(p["a"]))
        if a == 0:
            _fail(f"{where}: a = 0 is not a translation")
    if "mu" in p and not float(parse_number(p["mu"])) >= 1:
        _fail(f"{where}: mu must be >= 1")


def load_text(text: str) -> dict:
    try:
        cfg = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return validate(cfg)


def load(path) -> tuple[dict, str]:
    """Read and validate a config file; returns ``(config, sha256 of its bytes)``."""
    data = Path(path).read_bytes()
    return load_text(data.decode("utf-8")), hashlib.sha256(data).hexdigest()


def demo_names() -> list[str]:
    root = resources.files("commonhc") / "demos"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def demo_text(name: str) -> str:
    path = resources.files("commonhc") / "demos" / f"{name}.toml"
    if not path.is_file():
        raise ConfigError(f"no bundled demo {name!r} (have: {', '.join(demo_names())})")
    return path.read_text(encoding="utf-8")
