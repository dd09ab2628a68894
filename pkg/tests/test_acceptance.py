"""Acceptance criteria, one test (and one summary line) per criterion.

Run with ``pytest tests/test_acceptance.py``; the verdict lines are printed in
the "acceptance criteria" section of the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from jetcartan import symexpr as sx
from jetcartan.cli import main
from jetcartan.curvtors import berwald_expected_residuals, curvature_table, oracle_comparison, torsion_table
from jetcartan.dconnect import berwald, h_normal_relation_residuals, h_normal_residuals, random_cartan, random_nlc
from jetcartan.geometry import AdaptedFrame, TemporalMetric, canonical_nlc, frame_bracket
from jetcartan.identities import (
    BIANCHI_NAMES,
    DEFLECTION_NAMES,
    RICCI_NAMES,
    SuiteOptions,
    deflection_consistency_residuals,
    deflections,
    verify_identities,
)
from jetcartan.symexpr import DomainError, ONE, ZERO, simplify
from jetcartan.tensors import expr_array
from jetcartan.verify import ResidualTensor, SamplingPlan, verify

from conftest import SPHERE_DOMAIN, diag_metric
from exprgen import COORDS, random_expression, richardson

SEEDS = range(10)


def symbolic_zero(e):
    return simplify(sx.expand(e)).is_zero()


@pytest.fixture(scope="module")
def random_connections():
    return {seed: random_cartan(seed) for seed in SEEDS}


def sphere_metrics():
    return TemporalMetric(sx.parse_expr("1 + t^2", 2)), diag_metric(["1", "sin(x1)^2"], 2)


def berwald_examples():
    """Every closed-form Berwald example used by the criteria."""
    out = {}
    for n in (2, 3):
        out[f"flat-{n}"] = (TemporalMetric(ONE), diag_metric(["1"] * n, n), {})
    out["sphere"] = (*sphere_metrics(), SPHERE_DOMAIN)
    out["exp-time"] = (TemporalMetric(sx.exp(2 * sx.t_var())), diag_metric(["1", "1"], 2), {})
    return out


# --------------------------------------------------------------------------


def test_criterion_1_flat(record_criterion):
    start = time.perf_counter()
    problems = []
    for n in (2, 3):
        h, phi = TemporalMetric(ONE), diag_metric(["1"] * n, n)
        conn = berwald(h, phi)
        tt = torsion_table(conn)
        ct = curvature_table(conn, tt)
        tables = tt.items() + ct.items()
        if not all(e.is_zero() for _, a in tables for e in a.components.flat):
            problems.append(f"n={n}: nonzero table entry")
        table_res = [ResidualTensor(name, a.signature, a.components, expr_array(a.shape)) for name, a in tables]
        opts = SuiteOptions(fields=5, general=False, consistency=False)
        rep = verify_identities(conn, SamplingPlan(seed=n, count=100), options=opts)
        rep_tables = verify(table_res, SamplingPlan(seed=n, count=100), n)
        names = set(rep.names())
        if not set(RICCI_NAMES + DEFLECTION_NAMES + BIANCHI_NAMES) <= names:
            problems.append(f"n={n}: identities missing")
        worst = max(r.max_abs for r in rep.results + rep_tables.results)
        if worst != 0.0:
            problems.append(f"n={n}: max residual {worst:.3e}")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 10
    detail = f"n=2,3 tables and 39 identities exactly 0 at 100 points, {elapsed:.1f}s (< 10s)"
    record_criterion(1, ok, detail if ok else f"{'; '.join(problems)}; {elapsed:.1f}s")
    assert ok, problems


def test_criterion_2_sphere(record_criterion):
    start = time.perf_counter()
    h, phi = sphere_metrics()
    conn = berwald(h, phi)
    plan = SamplingPlan(seed=2, count=100, domain=SPHERE_DOMAIN, abs_tol=1e-9, rel_tol=1e-9)
    res = berwald_expected_residuals(conn, phi)
    rep = verify(res, plan, 2, guards=[sx.sin(sx.x_vars(2)[0])])
    symbolic = all(symbolic_zero(e) for r in res for e in r.difference().flat)
    worst_rel = max(r.max_rel for r in rep.results)
    ids = verify_identities(conn, plan, guards=[h.h11], options=SuiteOptions(fields=5))
    ids_ok = ids.passed and not any(r.suspect for r in ids.results)
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-9 and symbolic and ids_ok and elapsed < 30
    record_criterion(
        2, ok,
        f"13 tables vs spatial Riemann: max rel {worst_rel:.2e} (<= 1e-9), symbolic match {symbolic}, "
        f"identities {sum(r.passed for r in ids.results)}/{len(ids.results)}, {elapsed:.1f}s (< 30s)",
    )
    assert ok


def test_criterion_3_oracle(random_connections, record_criterion):
    start = time.perf_counter()
    worst, failed = 0.0, []
    for seed, (conn, h) in random_connections.items():
        rep = verify(oracle_comparison(conn), SamplingPlan(seed=seed, count=50), conn.n, guards=[h.h11])
        worst = max(worst, max(r.max_rel for r in rep.results))
        failed += [f"{seed}:{r.name}" for r in rep.results if r.max_rel > 1e-8]
    elapsed = time.perf_counter() - start
    ok = not failed and elapsed < 120
    record_criterion(3, ok, f"10 connections x 20 comparisons, max rel {worst:.2e} (<= 1e-8), "
                            f"failures {failed or 'none'}, {elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_4_identities(random_connections, record_criterion):
    start = time.perf_counter()
    failed, suspect, both = [], [], []
    worst = 0.0
    for seed, (conn, h) in random_connections.items():
        rep = verify_identities(conn, SamplingPlan(seed=seed, count=50), guards=[h.h11],
                                options=SuiteOptions(fields=5, field_seed=seed))
        for r in rep.results:
            worst = max(worst, r.max_rel)
            if r.passed:
                continue
            if r.suspect:
                suspect.append(f"{seed}:{r.name}")
            elif r.family == "bianchi":
                both.append(f"{seed}:{r.name}")
            else:
                failed.append(f"{seed}:{r.name}")
    elapsed = time.perf_counter() - start
    ok = not failed and not both and elapsed < 300
    record_criterion(4, ok, f"10 connections, Ricci/deflection/general failures {failed or 'none'}, "
                            f"SUSPECT {suspect or 'none'}, both-fail {both or 'none'}, max rel {worst:.2e}, "
                            f"{elapsed:.1f}s (< 300s)")
    assert ok


def test_criterion_5_h_normal(random_connections, record_criterion):
    conns = [(f"random-{s}", c, h, {}) for s, (c, h) in random_connections.items()]
    conns += [(name, berwald(h, phi), h, dom) for name, (h, phi, dom) in berwald_examples().items()]
    worst, inexact = 0.0, []
    for name, conn, h, dom in conns:
        rep = verify(h_normal_residuals(conn, h), SamplingPlan(count=50, domain=dom), conn.n, guards=[h.h11])
        worst = max(worst, max(r.max_abs for r in rep.results if "nablaJ" in r.name))
        for res in h_normal_relation_residuals(conn):
            if not all(symbolic_zero(e) for e in res.difference().flat):
                inexact.append(f"{name}:{res.name}")
    ok = worst < 1e-10 and not inexact
    record_criterion(5, ok, f"{len(conns)} connections, max |nabla J| {worst:.2e} (< 1e-10), "
                            f"six relations exact: {'yes' if not inexact else inexact}")
    assert ok


def test_criterion_6_deflections(random_connections, record_criterion):
    conns = [(f"random-{s}", c, {}) for s, (c, _) in random_connections.items()]
    conns += [(name, berwald(h, phi), dom) for name, (h, phi, dom) in berwald_examples().items()]
    numeric_only, bad = [], []
    for name, conn, dom in conns:
        res = deflection_consistency_residuals(conn)
        for r in res:
            if all(symbolic_zero(e) for e in r.difference().flat):
                continue
            numeric_only.append(f"{name}:{r.name}")
            rep = verify([r], SamplingPlan(count=50, domain=dom), conn.n)
            if rep.results[0].max_abs >= 1e-10:
                bad.append(f"{name}:{r.name}")
    berwald_ok = True
    for name, (h, phi, _) in berwald_examples().items():
        df = deflections(berwald(h, phi))
        n = phi.n
        berwald_ok &= all(symbolic_zero(e) for e in df.Dbar.components.flat)
        berwald_ok &= all(symbolic_zero(e) for e in df.D.components.flat)
        berwald_ok &= all(symbolic_zero(df.d[i, j] - (1 if i == j else 0)) for i in range(n) for j in range(n))
    ok = not bad and berwald_ok
    record_criterion(6, ok, f"{len(conns)} connections: closed form = derivative "
                            f"({'exact' if not numeric_only else f'numeric for {numeric_only}'}), "
                            f"Berwald Dbar=0, D=0, d=delta: {berwald_ok}")
    assert ok


def test_criterion_7_infrastructure(record_criterion):
    rng = np.random.default_rng(2024)
    pairs, worst, failures, draws = 0, 0.0, 0, 0
    while pairs < 1000:
        draws += 1
        e = random_expression(rng, depth=3)
        c = COORDS[int(rng.integers(len(COORDS)))]
        v = rng.uniform(-1, 1, 5)
        p = sx.Point(v[0], tuple(v[1:3]), tuple(v[3:5]))
        try:
            sym = sx.evaluate(sx.diff(e, c), p)
            fd = richardson(e, p, c, h=1e-4)
        except DomainError:
            continue
        if not (math.isfinite(sym) and math.isfinite(fd)):
            continue
        pairs += 1
        err = abs(sym - fd) / max(1.0, abs(sym))
        worst = max(worst, err)
        failures += err > 1e-6

    h, phi = sphere_metrics()
    frames = [AdaptedFrame(canonical_nlc(h, phi))]
    frames += [AdaptedFrame(random_nlc(np.random.default_rng(s), n)) for s, n in ((0, 2), (1, 3))]
    duality = all(
        simplify(fr.pairing(a, b)) is (ONE if a == b else ZERO)
        for fr in frames for a in range(fr.size) for b in range(fr.size)
    )

    fr = frames[0]
    R = torsion_table(berwald(h, phi)).R
    brackets = True
    for i in range(2):
        for j in range(2):
            br = frame_bracket(fr, fr.space(i), fr.space(j))
            brackets &= all(symbolic_zero(br[c]) for c in range(3))
            brackets &= all(symbolic_zero(br[fr.fiber(k)] - R[k, i, j]) for k in range(2))
    ok = failures == 0 and duality and brackets
    record_criterion(7, ok, f"diff vs finite differences: {pairs} pairs, {failures} over 1e-6, worst {worst:.2e}; "
                            f"duality exact: {duality}; sphere [delta_i, delta_j] = R y-part: {brackets}")
    assert ok


def test_criterion_8_determinism(tmp_path, record_criterion, capsys):
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    codes = [main(["check", "--scenario", "random-cartan", "--seed", "42", "--json", str(p)]) for p in paths]
    capsys.readouterr()
    a, b = (p.read_bytes() for p in paths)
    doc = json.loads(a)
    ok = a == b and codes == [0, 0]
    record_criterion(8, ok, f"two runs of check --scenario random-cartan --seed 42: byte-identical {a == b}, "
                            f"{len(a)} bytes, {len(doc['results'])} results, exit codes {codes}")
    assert ok
