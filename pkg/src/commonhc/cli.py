"""Command-line interface (``commonhc``).

Subcommands mirror the module boundaries: ``schedule``, ``regions``,
``construct``, ``certify``, ``orbit``, ``salas``, ``demo`` and ``run``.
Config-driven subcommands exit with 0 (all passed), 1 (assertion or
certificate failure), 2 (schema violation) or 3 (numeric failure).
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import config as cfgmod
from . import harness
from .constructions import Query, Refusal, certify, loads_bundle
from .errors import ConfigError, HCError
from .halfplane import certify_regions, hyperbolic_regions, parabolic_regions
from .salas import WeightSpec, homothety_criterion, translation_criterion
from .schedules import PROFILES, dumps_schedule, gen_add_schedule, gen_mult_schedule

PIPELINE_SECTIONS = {
    "construct": ("schedule", "construction"),
    "orbit": ("schedule", "construction", "orbit"),
    "salas": ("salas",),
}
KEEP = ("name", "description", "seed", "profile")


def _common(f):
    f = click.option("--jobs", type=int, default=1, show_default=True, help="Worker threads for grid scans.")(f)
    f = click.option("--profile", type=click.Choice(sorted(PROFILES)), default=None, help="Schedule profile.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True,
                     help="Output directory.")(f)
    f = click.option("--seed", type=int, default=None, help="Override the config seed.")(f)
    return f


def _floats(text: str) -> list[float]:
    return [float(cfgmod.parse_number(t.strip())) for t in text.split(",") if t.strip()]


def _subset(path: str, command: str, seed, out, profile, jobs) -> int:
    """Run only the sections of ``path`` that ``command`` is about."""
    try:
        cfg, digest = cfgmod.load(path)
        missing = [s for s in PIPELINE_SECTIONS[command] if s not in cfg]
        if missing:
            raise ConfigError(f"{command} needs section(s) {', '.join(missing)}")
        sub = {k: v for k, v in cfg.items() if k in KEEP or k in PIPELINE_SECTIONS[command]}
        if "assert" in cfg:
            sub["assert"] = cfg["assert"]
    except (ConfigError, OSError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return harness.EXIT_SCHEMA
    try:
        return harness.execute(sub, digest, out, seed, profile, jobs)
    except (ConfigError, HCError, ArithmeticError) as exc:
        click.echo(f"error: {exc}", err=True)
        return harness.EXIT_SCHEMA if isinstance(exc, (ConfigError, ValueError)) else harness.EXIT_NUMERIC


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Common hypercyclic vectors: schedules, constructions and certificates."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@click.option("--kind", type=click.Choice(["mult", "add"]), default="mult", show_default=True)
@click.option("--horizon", type=int, default=10, show_default=True)
@click.option("--alphas", default="1,1,1", show_default=True, help="Target norms (mult schedules).")
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default="desk", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write here instead of stdout.")
def schedule(kind, horizon, alphas, profile, out):
    """Generate a schedule and print its text form."""
    try:
        if kind == "mult":
            s = gen_mult_schedule(_floats(alphas), horizon, PROFILES[profile])
        else:
            s = gen_add_schedule(horizon, PROFILES[profile])
    except HCError as exc:
        raise click.ClickException(str(exc))
    text = dumps_schedule(s)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--kind", type=click.Choice(["parabolic", "hyperbolic"]), default="parabolic", show_default=True)
@click.option("--horizon", type=int, default=8, show_default=True)
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default="desk", show_default=True)
def regions(kind, horizon, profile):
    """Print the stage regions C_k, D_k, Gamma_k as JSON."""
    try:
        if kind == "parabolic":
            r = parabolic_regions(gen_add_schedule(horizon, PROFILES[profile]))
        else:
            r = hyperbolic_regions(gen_mult_schedule([1.0, 1.0, 1.0], horizon, PROFILES[profile]))
    except HCError as exc:
        raise click.ClickException(str(exc))
    doc = {"regions": r.to_dict(), "problems": certify_regions(r)}
    click.echo(json.dumps(doc, sort_keys=True, indent=1))
    sys.exit(1 if doc["problems"] else 0)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_common
def construct(config_path, seed, out, profile, jobs):
    """Build the configured construction; writes bundle.txt and certificates.json."""
    sys.exit(_subset(config_path, "construct", seed, out, profile, jobs))


@main.command(name="certify")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", type=int, required=True)
@click.option("--param", "params", multiple=True, help="Operator parameter as key=value (repeatable).")
@click.option("--stage", type=int, default=None, help="Stage to certify (default: least admissible).")
@click.option("--eps", type=float, default=None)
@click.option("--compact", default=None, help="x_lo,x_hi,y_lo,y_hi for holomorphic bundles.")
@click.option("--eta", type=float, default=0.125, show_default=True)
def certify_cmd(bundle_path, target, params, stage, eps, compact, eta):
    """Certify one orbit query against a saved bundle; exits 1 on refusal."""
    bundle = loads_bundle(Path(bundle_path).read_text(encoding="utf-8"))
    p = {}
    for item in params:
        key, _, value = item.partition("=")
        if not value:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--param")
        v = cfgmod.parse_number(value) if "/" in value else float(value)
        p[key.strip()] = v
    q = Query(target, p, stage, eps, None if compact is None else tuple(_floats(compact)), eta)
    out = certify(bundle, q)
    if isinstance(out, Refusal):
        click.echo(json.dumps({"refused": True, "reasons": list(out.reasons), "achieved": out.achieved,
                               "bound": out.bound}, sort_keys=True, indent=1))
        sys.exit(1)
    click.echo(json.dumps(out.to_dict(), sort_keys=True, indent=1, default=str))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_common
def orbit(config_path, seed, out, profile, jobs):
    """Build the construction and scan its orbits; writes report.csv."""
    sys.exit(_subset(config_path, "orbit", seed, out, profile, jobs))


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--weight", default="reciprocal-linear", show_default=True, help="Weight kind (without --config).")
@click.option("--operator", type=click.Choice(["translation", "homothety"]), default="translation",
              show_default=True)
@click.option("--q", "q_list", default="1", show_default=True, help="Comma-separated q (translation).")
@click.option("--ab", default="1,2", show_default=True, help="a,b pair (homothety).")
@click.option("--n-max", type=int, default=4000, show_default=True)
@click.option("--threshold", type=float, default=1e-3, show_default=True)
@_common
def salas(config_path, weight, operator, q_list, ab, n_max, threshold, seed, out, profile, jobs):
    """Salas criteria for a weight; prints CSV, or runs the [salas] section of a config."""
    if config_path:
        sys.exit(_subset(config_path, "salas", seed, out, profile, jobs))
    try:
        w = WeightSpec.from_config({"kind": weight})
        if operator == "translation":
            rep = translation_criterion(w, _floats(q_list), n_max, threshold)
        else:
            a, b = _floats(ab)
            rep = homothety_criterion(w, [(a, b)], n_max, threshold)
    except HCError as exc:
        raise click.ClickException(str(exc))
    click.echo(rep.to_csv(), nl=False)
    click.echo(f"# verdict: {rep.verdict} (horizon n <= {rep.n_max}), witness: {rep.witness}", err=True)


@main.command()
@click.argument("name", required=False)
@click.option("--list", "list_only", is_flag=True, help="List bundled demos.")
@_common
def demo(name, list_only, seed, out, profile, jobs):
    """Run a bundled demo config."""
    if list_only or not name:
        for n in cfgmod.demo_names():
            click.echo(n)
        return
    try:
        text = cfgmod.demo_text(name)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    sys.exit(harness.run_experiment(text=text, out_dir=out, seed=seed, profile=profile, jobs=jobs))


@main.command()
@click.argument("path", required=False, type=click.Path(dir_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(dir_okay=False))
@_common
def run(path, config_path, seed, out, profile, jobs):
    """Run every section of a config file (given as argument or --config)."""
    target = config_path or path
    if target is None:
        raise click.UsageError("give a config path")
    sys.exit(harness.run_experiment(target, out, seed, profile, jobs))


if __name__ == "__main__":
    main()
