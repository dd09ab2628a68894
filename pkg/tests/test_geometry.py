import math

import numpy as np
import pytest

from jetcartan import symexpr as sx
from jetcartan.geometry import (
    AdaptedFrame,
    CoordinateChange,
    NonlinearConnection,
    SpatialMetric,
    TemporalMetric,
    canonical_nlc,
    frame_bracket,
    inverse_spatial_metric,
    nlc_from_semispray,
    nlc_transform,
    pullback_metrics,
    spatial_christoffel,
    spatial_riemann,
    temporal_christoffel,
    temporal_christoffel_first_kind,
)
from jetcartan.symexpr import ONE, ZERO, parse_expr, simplify
from jetcartan.tensors import expr_array
from jetcartan.verify import ResidualTensor, SamplingPlan, verify

from conftest import SPHERE_DOMAIN, diag_metric

t = sx.t_var()
x1, x2 = sx.x_vars(2)
y1, y2 = sx.y_vars(2)


def metric(rows, n=2):
    arr = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            arr[i, j] = parse_expr(rows[i][j], n)
    return SpatialMetric(arr)


WARPED = metric([["2 + x1^2", "x1*x2/2"], ["x1*x2/2", "3 + sin(x2)"]])


def numeric(e, tv=0.0, x=(0.0, 0.0), y=(0.0, 0.0)):
    return sx.evaluate(e, sx.Point(tv, tuple(x), tuple(y)))


def zero(e):
    return simplify(sx.expand(e)).is_zero()


def check_zero(residuals, n=2, **plan):
    rep = verify(residuals, SamplingPlan(**plan), n)
    assert rep.passed, rep.summary()
    return rep


# --- metrics ---------------------------------------------------------------


def test_temporal_metric_must_depend_on_t_only():
    with pytest.raises(ValueError):
        TemporalMetric(t + x1)


def test_spatial_metric_rejects_asymmetric():
    arr = np.array([[ONE, x1], [ZERO, ONE]], dtype=object)
    with pytest.raises(ValueError):
        SpatialMetric(arr)


def test_kappa_constant_metric_is_zero():
    assert temporal_christoffel(TemporalMetric(ONE)).is_zero()


def test_kappa_exp_metric_is_one():
    assert simplify(temporal_christoffel(TemporalMetric(sx.exp(2 * t)))) is ONE


def test_kappa_square_metric():
    k = temporal_christoffel(TemporalMetric(t * t))
    assert simplify(k - sx.power(t, -1)).is_zero()


def test_kappa_is_half_log_derivative():
    h = TemporalMetric(parse_expr("2 + t^2 + sin(t)", 1))
    k = temporal_christoffel(h)
    for tv in np.linspace(-1, 1, 9):
        step = 1e-5
        lg = lambda s: math.log(numeric(h.h11, s, (0.0,), (0.0,)))  # noqa: E731
        fd = (lg(tv + step) - lg(tv - step)) / (4 * step)
        assert numeric(k, tv, (0.0,), (0.0,)) == pytest.approx(fd, abs=1e-8)


def test_first_kind_symbol():
    h = TemporalMetric(sx.exp(2 * t))
    assert simplify(temporal_christoffel_first_kind(h) - sx.exp(2 * t)).is_zero()


# --- spatial Christoffel symbols -------------------------------------------


def test_flat_christoffel_vanishes():
    gamma = spatial_christoffel(diag_metric(["1", "1", "1"], 3))
    assert all(e.is_zero() for e in gamma.components.flat)


def test_sphere_christoffel(sphere):
    _, phi = sphere
    g = spatial_christoffel(phi).components
    assert simplify(g[0, 1, 1] + sx.sin(x1) * sx.cos(x1)).is_zero()
    assert simplify(g[1, 0, 1] - sx.cos(x1) * sx.power(sx.sin(x1), -1)).is_zero()
    assert simplify(g[1, 1, 0] - g[1, 0, 1]).is_zero()
    assert g[0, 0, 0].is_zero() and g[1, 1, 1].is_zero()


def _numeric_christoffel(phi, x, h=1e-5):
    """Independent oracle: finite differences of phi and a numpy inverse."""
    n = phi.n
    g = lambda p: np.array([[numeric(phi.phi[i, j], 0.0, p) for j in range(n)] for i in range(n)])  # noqa: E731
    dg = np.empty((n, n, n))  # dg[k, i, j] = d_k g_ij
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dg[k] = (g(x + e) - g(x - e)) / (2 * h)
    ginv = np.linalg.inv(g(x))
    first = np.einsum("kjm->mjk", dg) + np.einsum("jkm->mjk", dg) - np.einsum("mjk->mjk", dg)
    return 0.5 * np.einsum("im,mjk->ijk", ginv, first)


@pytest.mark.parametrize("which", ["sphere", "warped"])
def test_christoffel_matches_numeric_oracle(which, sphere):
    phi = sphere[1] if which == "sphere" else WARPED
    g = spatial_christoffel(phi).components
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.uniform(0.4, 2.5, 2)
        want = _numeric_christoffel(phi, x)
        got = np.array([[[numeric(g[i, j, k], 0.0, x) for k in range(2)] for j in range(2)] for i in range(2)])
        assert np.allclose(got, want, atol=1e-7)


def test_christoffel_symmetric_at_random_points():
    g = spatial_christoffel(WARPED).components
    res = ResidualTensor("sym", (), g, np.swapaxes(g, 1, 2))
    check_zero([res], count=100, seed=11)


# --- inverse ---------------------------------------------------------------


def test_inverse_identity():
    inv = inverse_spatial_metric(diag_metric(["1", "1"], 2))
    assert [simplify(e) for e in inv.flat] == [ONE, ZERO, ZERO, ONE]


def test_inverse_sphere(sphere):
    inv = inverse_spatial_metric(sphere[1])
    assert simplify(inv[1, 1] - sx.power(sx.sin(x1), -2)).is_zero()
    assert simplify(inv[0, 1]).is_zero() and simplify(inv[0, 0]) is ONE


@pytest.mark.parametrize("n", [2, 3, 4])
def test_inverse_random_spd_numeric(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(n, n))
    spd = a @ a.T + n * np.eye(n)
    phi = SpatialMetric(expr_array((n, n), lambda i, j: sx.const(float(spd[i, j]))))
    inv = np.array([[numeric(e, 0.0, (0.0,) * n, (0.0,) * n) for e in row] for row in inverse_spatial_metric(phi)])
    assert np.allclose(inv @ spd, np.eye(n), atol=1e-10)


def test_inverse_product_is_identity_symbolically_sampled():
    inv = inverse_spatial_metric(WARPED)
    prod = expr_array((2, 2), lambda i, j: sx.add(*(inv[i, m] * WARPED.phi[m, j] for m in range(2))))
    eye = expr_array((2, 2), lambda i, j: ONE if i == j else ZERO)
    check_zero([ResidualTensor("inv", (), prod, eye)], count=100, abs_tol=1e-10, rel_tol=1e-10)


def test_inverse_rejects_large_dimension():
    with pytest.raises(ValueError):
        inverse_spatial_metric(diag_metric(["1"] * 5, 5))


# --- nonlinear connections -------------------------------------------------


def test_canonical_flat_is_zero(flat2):
    nlc = canonical_nlc(*flat2)
    assert all(e.is_zero() for e in list(nlc.M) + list(nlc.N.flat))


def test_canonical_exp_time():
    nlc = canonical_nlc(TemporalMetric(sx.exp(2 * t)), diag_metric(["1", "1"], 2))
    assert simplify(nlc.M[0] + y1).is_zero() and simplify(nlc.M[1] + y2).is_zero()


def test_canonical_sphere(sphere):
    nlc = canonical_nlc(*sphere)
    assert simplify(nlc.N[0, 1] + sx.sin(x1) * sx.cos(x1) * y2).is_zero()


def test_semispray_zero():
    nlc = nlc_from_semispray([ZERO, ZERO], [ZERO, ZERO])
    assert all(e.is_zero() for e in list(nlc.M) + list(nlc.N.flat))


def test_semispray_reproduces_canonical(sphere):
    h, phi = sphere
    kappa = temporal_christoffel(h)
    g = spatial_christoffel(phi).components
    ys = [y1, y2]
    H = [-(kappa * ys[j]) / 2 for j in range(2)]
    G = [sx.add(*(g[j, k, m] * ys[k] * ys[m] for k in range(2) for m in range(2))) / 2 for j in range(2)]
    got, want = nlc_from_semispray(H, G), canonical_nlc(h, phi)
    for a, b in zip(list(got.M) + list(got.N.flat), list(want.M) + list(want.N.flat)):
        assert simplify(a - b).is_zero()


# --- adapted frame ---------------------------------------------------------


def test_zero_connection_frame_is_coordinate():
    fr = AdaptedFrame(NonlinearConnection.zero(2))
    f = t * t * y1 + x1
    assert fr.delta_t(f) is sx.diff(f, sx.Coordinate("t"))


def test_duality_exact(sphere):
    fr = AdaptedFrame(canonical_nlc(*sphere))
    s = fr.size
    for a in range(s):
        for b in range(s):
            assert simplify(fr.pairing(a, b)) is (ONE if a == b else ZERO)


def test_sphere_delta_x2_of_y1(sphere):
    fr = AdaptedFrame(canonical_nlc(*sphere))
    assert simplify(fr.delta_x(1, y1) - sx.sin(x1) * sx.cos(x1) * y2).is_zero()


def test_flat_brackets_vanish(flat2):
    fr = AdaptedFrame(canonical_nlc(*flat2))
    for a in range(5):
        for b in range(5):
            assert all(e.is_zero() for e in frame_bracket(fr, a, b))


def _random_nlc(seed):
    from jetcartan.dconnect import random_nlc

    return random_nlc(np.random.default_rng(seed), 2)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bracket_spatial_pair_is_torsion_formula(seed):
    nlc = _random_nlc(seed)
    fr = AdaptedFrame(nlc)
    br = frame_bracket(fr, fr.space(0), fr.space(1))
    N = nlc.N
    want = [fr.delta_x(1, N[k, 0]) - fr.delta_x(0, N[k, 1]) for k in range(2)]
    for k in range(2):
        assert zero(br[fr.fiber(k)] - want[k])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bracket_time_fibre(seed):
    nlc = _random_nlc(seed)
    fr = AdaptedFrame(nlc)
    for j in range(2):
        br = frame_bracket(fr, fr.time(), fr.fiber(j))
        for k in range(2):
            assert zero(br[fr.fiber(k)] - sx.diff(nlc.M[k], sx.Coordinate("y", j + 1)))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_brackets_close_in_vertical_distribution(seed):
    fr = AdaptedFrame(_random_nlc(seed))
    for a in range(5):
        for b in range(5):
            br = frame_bracket(fr, a, b)
            assert all(zero(br[c]) for c in range(3))


def test_sphere_bracket_matches_riemann(sphere):
    h, phi = sphere
    fr = AdaptedFrame(canonical_nlc(h, phi))
    r = spatial_riemann(phi).components
    br = frame_bracket(fr, fr.space(0), fr.space(1))
    for k in range(2):
        want = sx.add(*(r[k, m, 0, 1] * [y1, y2][m] for m in range(2)))
        assert simplify(br[fr.fiber(k)] - want).is_zero()


# --- spatial curvature -----------------------------------------------------


def test_flat_riemann_vanishes():
    r = spatial_riemann(diag_metric(["1", "1"], 2))
    assert all(e.is_zero() for e in r.components.flat)


def test_sphere_gauss_curvature_one(sphere):
    _, phi = sphere
    r = spatial_riemann(phi).components
    ric = expr_array((2, 2), lambda i, j: sx.add(*(r[l, i, j, l] for l in range(2))))
    check_zero([ResidualTensor("ricci=K*phi", (), ric, phi.phi)], count=50, domain=SPHERE_DOMAIN)
    nonzero = [idx for idx in np.ndindex(2, 2, 2, 2) if not simplify(r[idx]).is_zero()]
    assert len(nonzero) == 4


def test_riemann_antisymmetric():
    r = spatial_riemann(WARPED).components
    check_zero([ResidualTensor("anti", (), r, -np.swapaxes(r, 2, 3))], count=100, seed=5)


# --- coordinate changes ----------------------------------------------------


def _same_connection(a, b, **plan):
    res = [ResidualTensor("M", (), a.M, b.M), ResidualTensor("N", (), a.N, b.N)]
    check_zero(res, **plan)


def test_identity_change_keeps_connection(sphere):
    nlc = canonical_nlc(*sphere)
    change = CoordinateChange(t, t, (x1, x2), (x1, x2))
    _same_connection(nlc_transform(nlc, change), nlc, domain=SPHERE_DOMAIN)


def test_time_rescaling_of_zero_connection():
    change = CoordinateChange(2 * t, t / 2, (x1, x2), (x1, x2))
    out = nlc_transform(NonlinearConnection.zero(2), change)
    assert all(simplify(e).is_zero() for e in list(out.M) + list(out.N.flat))


def test_non_invertible_change_rejected():
    change = CoordinateChange(sx.const(3), t, (x1, x2), (x1, x2))
    with pytest.raises(ValueError):
        nlc_transform(NonlinearConnection.zero(2), change)


def test_canonical_connection_is_natural():
    h = TemporalMetric(parse_expr("1 + t^2", 2))
    phi = metric([["1 + x2^2", "0"], ["0", "2"]])
    change = CoordinateChange(
        sx.exp(t), sx.log(t),
        (x1 + x2 * x2, x2), (x1 - x2 * x2, x2),
    )
    moved = nlc_transform(canonical_nlc(h, phi), change)
    h2, phi2 = pullback_metrics(h, phi, change)
    _same_connection(moved, canonical_nlc(h2, phi2), domain={"t": (0.5, 2.0)}, count=60)
