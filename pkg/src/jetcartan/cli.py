"""Command-line front end.

    jetcartan run <config>
    jetcartan check --scenario {flat,sphere2d,exp-time,random-cartan}
    jetcartan tables --scenario <name> [--emit-symbolic]
    jetcartan list-identities

Exit status: 0 all verdicts pass, 1 verification failure (or SUSPECT without
``--allow-suspect``), 2 configuration error, 3 sampling/domain failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .curvtors import (
    berwald_expected_residuals,
    curvature_table,
    oracle_comparison,
    torsion_table,
)
from .dconnect import (
    CartanSymmetryError,
    GammaConnection,
    HNormalData,
    berwald,
    h_normal_relation_residuals,
    h_normal_residuals,
    make_h_normal_cartan,
    random_cartan,
)
from .geometry import (
    NonlinearConnection,
    SpatialMetric,
    TemporalMetric,
    canonical_nlc,
    determinant,
    spatial_christoffel,
)
from .identities import SuiteOptions, apply_suspect_policy, identity_residuals, list_identities
from .symexpr import ONE, ZERO, DomainError, ParseError, parse_expr, simplify, to_dsl
from .tensors import expr_array
from .verify import SamplingError, SamplingPlan, VerificationReport, verify

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3

TASKS = ("hnormal", "oracle", "expected", "ricci", "deflection", "bianchi", "general")
SCENARIOS = ("flat", "sphere2d", "exp-time", "random-cartan")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class Scenario:
    name: str
    conn: GammaConnection
    h: TemporalMetric
    phi: SpatialMetric | None = None
    domain: dict = field(default_factory=dict)
    guards: list = field(default_factory=list)
    tasks: tuple = TASKS
    seed: int = 0
    points: int = 50
    tol: float = 1e-8
    fields: int = 5


# --------------------------------------------------------------------------
# built-in scenarios


def _diag(entries) -> np.ndarray:
    n = len(entries)
    return expr_array((n, n), lambda i, j: entries[i] if i == j else ZERO)


def _metric_guards(h: TemporalMetric, phi: SpatialMetric | None) -> list:
    guards = [h.h11]
    if phi is not None:
        guards.append(determinant(phi.phi))
    return guards


def builtin_scenario(name: str, seed: int = 0, dim: int = 2) -> Scenario:
    if not 1 <= dim <= 4:
        raise ConfigError("--dim must lie in 1..4")
    if name == "flat":
        h = TemporalMetric(ONE)
        phi = SpatialMetric(_diag([ONE] * dim))
        return Scenario("flat", berwald(h, phi), h, phi, guards=_metric_guards(h, phi), seed=seed)
    if name == "sphere2d":
        h = TemporalMetric(parse_expr("1 + t^2", 2))
        phi = SpatialMetric(_diag([ONE, parse_expr("sin(x1)^2", 2)]))
        return Scenario("sphere2d", berwald(h, phi), h, phi, domain={"x1": (0.3, math.pi - 0.3)},
                        guards=_metric_guards(h, phi), seed=seed)
    if name == "exp-time":
        h = TemporalMetric(parse_expr("exp(2*t)", 2))
        phi = SpatialMetric(_diag([ONE, ONE]))
        return Scenario("exp-time", berwald(h, phi), h, phi, guards=_metric_guards(h, phi), seed=seed)
    if name == "random-cartan":
        conn, h = random_cartan(seed, dim)
        return Scenario("random-cartan", conn, h, None, guards=[h.h11], seed=seed,
                        tasks=tuple(t for t in TASKS if t != "expected"))
    raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


# --------------------------------------------------------------------------
# config files


def _parse_domain(key: str, value: str) -> tuple:
    try:
        lo, hi = (float(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected 'lo, hi'") from exc
    if not lo < hi:
        raise ConfigError(f"{key}: empty interval")
    return lo, hi


def read_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def scenario_from_config(cfg: dict) -> Scenario:
    cfg = dict(cfg)
    try:
        n = int(cfg.pop("n"))
    except KeyError as exc:
        raise ConfigError("missing key 'n'") from exc
    except ValueError as exc:
        raise ConfigError("'n' must be an integer") from exc
    if not 1 <= n <= 4:
        raise ConfigError("'n' must lie in 1..4")

    def expr(key, default=None):
        src = cfg.pop(key, None)
        if src is None:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        try:
            return parse_expr(src, n)
        except ParseError as exc:
            raise ConfigError(f"{key}: {exc}") from exc

    try:
        h = TemporalMetric(expr("h11", ONE))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    phi = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i + 1):
            lower = cfg.pop(f"phi{i + 1}{j + 1}", None)
            upper = cfg.pop(f"phi{j + 1}{i + 1}", None) if i != j else None
            if lower is not None and upper is not None and simplify(parse_expr(lower, n) - parse_expr(upper, n)) is not ZERO:
                raise ConfigError(f"phi{i + 1}{j + 1} and phi{j + 1}{i + 1} disagree")
            src = lower if lower is not None else upper
            val = ONE if (src is None and i == j) else (ZERO if src is None else None)
            if val is None:
                try:
                    val = parse_expr(src, n)
                except ParseError as exc:
                    raise ConfigError(f"phi{i + 1}{j + 1}: {exc}") from exc
            phi[i, j] = phi[j, i] = val
    try:
        metric = SpatialMetric(phi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rng = range(n)
    keys_nlc = [f"M{j + 1}" for j in rng] + [f"N{j + 1}{i + 1}" for j in rng for i in rng]
    if any(k in cfg for k in keys_nlc):
        nlc = NonlinearConnection(
            expr_array((n,), lambda j: expr(f"M{j + 1}", ZERO)),
            expr_array((n, n), lambda j, i: expr(f"N{j + 1}{i + 1}", ZERO)),
        )
    else:
        nlc = canonical_nlc(h, metric)

    # unspecified entries default to the Berwald data (G = 0, L = gamma, C = 0)
    gamma = spatial_christoffel(metric).components
    G = expr_array((n, n), lambda k, i: expr(f"G{k + 1}{i + 1}", ZERO))
    L = expr_array((n, n, n), lambda k, i, j: expr(f"L{k + 1}{i + 1}{j + 1}", gamma[k, i, j]))
    C = expr_array((n, n, n), lambda k, i, j: expr(f"C{k + 1}{i + 1}{j + 1}", ZERO))
    conn = make_h_normal_cartan(HNormalData(h, G, L, C), nlc)

    domain = {}
    for key in [k for k in cfg if k.startswith("domain.")]:
        name = key.split(".", 1)[1]
        valid = {"t"} | {f"x{i + 1}" for i in rng} | {f"y{i + 1}" for i in rng}
        if name not in valid:
            raise ConfigError(f"{key}: unknown coordinate {name!r}")
        domain[name] = _parse_domain(key, cfg.pop(key))

    def num(key, cast, default):
        if key not in cfg:
            return default
        try:
            return cast(cfg.pop(key))
        except ValueError as exc:
            raise ConfigError(f"{key}: not a valid {cast.__name__}") from exc

    seed = num("seed", int, 0)
    points = num("points", int, 50)
    tol = num("tol", float, 1e-8)
    fields = num("fields", int, 5)
    if points < 1 or tol <= 0 or fields < 0:
        raise ConfigError("points must be >= 1, tol > 0, fields >= 0")
    tasks = TASKS
    if "tasks" in cfg:
        tasks = tuple(t.strip() for t in cfg.pop("tasks").split(",") if t.strip())
        bad = [t for t in tasks if t not in TASKS]
        if bad:
            raise ConfigError(f"unknown tasks {bad}; choose from {', '.join(TASKS)}")
    name = cfg.pop("name", "config")
    if cfg:
        raise ConfigError(f"unknown keys: {', '.join(sorted(cfg))}")
    return Scenario(name, conn, h, metric, domain, _metric_guards(h, metric), tasks, seed, points, tol, fields)


# --------------------------------------------------------------------------
# running


def scenario_residuals(sc: Scenario) -> list:
    tasks = set(sc.tasks)
    out = []
    if "hnormal" in tasks:
        out.extend(h_normal_residuals(sc.conn, sc.h))
        out.extend(h_normal_relation_residuals(sc.conn))
    if "oracle" in tasks:
        out.extend(oracle_comparison(sc.conn))
    if "expected" in tasks and sc.phi is not None and _is_berwald(sc):
        out.extend(berwald_expected_residuals(sc.conn, sc.phi))
    opts = SuiteOptions(
        fields=sc.fields,
        field_seed=sc.seed,
        ricci="ricci" in tasks,
        deflection="deflection" in tasks,
        consistency="deflection" in tasks,
        bianchi="bianchi" in tasks,
        general="general" in tasks,
    )
    if any((opts.ricci, opts.deflection, opts.bianchi, opts.general)):
        out.extend(identity_residuals(sc.conn, opts))
    return out


def _is_berwald(sc: Scenario) -> bool:
    ref = berwald(sc.h, sc.phi)
    c = sc.conn
    pairs = [(c.G, ref.G), (c.L, ref.L), (c.C, ref.C), (c.nlc.M, ref.nlc.M), (c.nlc.N, ref.nlc.N)]
    return all(simplify(a - b) is ZERO for x, y in pairs for a, b in zip(x.flat, y.flat))


def run_scenario(sc: Scenario) -> VerificationReport:
    plan = SamplingPlan(seed=sc.seed, count=sc.points, domain=sc.domain, abs_tol=sc.tol, rel_tol=sc.tol)
    report = verify(scenario_residuals(sc), plan, sc.conn.n, sc.guards)
    return apply_suspect_policy(report)


def report_document(sc: Scenario, report: VerificationReport) -> dict:
    doc = report.to_dict()
    doc.update(
        scenario=sc.name,
        dimension=sc.conn.n,
        tolerance=sc.tol,
        domain={k: list(v) for k, v in sorted(sc.domain.items())},
        passed=report.passed,
        suspect=[r.name for r in report.results if r.suspect],
        version=__version__,
    )
    return doc


def exit_status(report: VerificationReport, allow_suspect: bool) -> int:
    for r in report.results:
        if r.passed:
            continue
        if r.suspect and allow_suspect:
            continue
        return EXIT_FAIL
    return EXIT_OK


def _emit(sc: Scenario, report: VerificationReport, args) -> int:
    print(f"scenario {sc.name}  n={sc.conn.n}  seed={sc.seed}  points={sc.points}  tol={sc.tol:g}")
    print(report.summary())
    status = exit_status(report, args.allow_suspect)
    counts = sum(r.passed for r in report.results), len(report.results)
    print(f"{counts[0]}/{counts[1]} passed" + (", SUSPECT flags present" if any(r.suspect for r in report.results) else ""))
    if args.json:
        text = json.dumps(report_document(sc, report), sort_keys=True, indent=2) + "\n"
        Path(args.json).write_text(text, encoding="utf-8")
    return status


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if getattr(args, "points", None) is not None:
        sc.points = args.points
    if getattr(args, "tol", None) is not None:
        sc.tol = args.tol
    if getattr(args, "seed", None) is not None and sc.name != "random-cartan":
        sc.seed = args.seed
    return sc


def cmd_run(args) -> int:
    try:
        cfg = read_config(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from exc
    sc = _apply_overrides(scenario_from_config(cfg), args)
    return _emit(sc, run_scenario(sc), args)


def cmd_check(args) -> int:
    sc = _apply_overrides(builtin_scenario(args.scenario, args.seed or 0, args.dim), args)
    return _emit(sc, run_scenario(sc), args)


def cmd_tables(args) -> int:
    sc = builtin_scenario(args.scenario, args.seed or 0, args.dim)
    tt = torsion_table(sc.conn)
    ct = curvature_table(sc.conn, tt)
    doc = {"scenario": sc.name, "torsion": {}, "curvature": {}}
    for group, table in (("torsion", tt), ("curvature", ct)):
        print(f"{group}:")
        for name, d in table.items():
            comps = {}
            for idx in np.ndindex(*d.shape):
                e = simplify(d[idx])
                if e is not ZERO:
                    comps[",".join(str(i + 1) for i in idx)] = to_dsl(e)
            sig = " ".join(s.value for s in d.signature)
            print(f"  {name:<4} [{sig}]  {'zero' if not comps else f'{len(comps)} nonzero'}")
            if args.emit_symbolic:
                for key, text in comps.items():
                    print(f"    [{key}] {text}")
            doc[group][name] = {"signature": [s.value for s in d.signature], "nonzero": comps}
    if args.json:
        Path(args.json).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_list(args) -> int:
    groups = list_identities()
    for group, names in groups.items():
        print(f"{group} ({len(names)}):")
        for name in names:
            print(f"  {name}")
    if args.json:
        Path(args.json).write_text(json.dumps(groups, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jetcartan", description="Torsion, curvature and identity checks on J^1(R, M).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="sampling seed (random-cartan: connection seed)")
    common.add_argument("--points", type=int, default=None, help="number of sample points")
    common.add_argument("--tol", type=float, default=None, help="absolute and scale-relative tolerance")
    common.add_argument("--allow-suspect", action="store_true", help="exit 0 despite SUSPECT flags")
    common.add_argument("--json", metavar="PATH", help="write the structured report here")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run a scenario config file")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", parents=[common], help="verify a built-in scenario")
    c.add_argument("--scenario", required=True, choices=SCENARIOS)
    c.add_argument("--dim", type=int, default=2, help="dimension for flat and random-cartan")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("tables", parents=[common], help="print torsion and curvature tables")
    t.add_argument("--scenario", required=True, choices=SCENARIOS)
    t.add_argument("--dim", type=int, default=2)
    t.add_argument("--emit-symbolic", action="store_true", help="print nonzero components")
    t.set_defaults(func=cmd_tables)

    ls = sub.add_parser("list-identities", parents=[common], help="enumerate identity names")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CartanSymmetryError, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SamplingError, DomainError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
