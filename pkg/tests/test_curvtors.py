import numpy as np
import pytest

from jetcartan import symexpr as sx
from jetcartan.curvtors import (
    CURVATURE_FAMILIES,
    TORSION_FAMILIES,
    FrameData,
    berwald_expected_residuals,
    curvature_from_full,
    curvature_table,
    curvature_to_full,
    full_curvature_oracle,
    full_torsion_oracle,
    oracle_comparison,
    torsion_from_full,
    torsion_table,
    torsion_to_full,
    zero_check,
)
from jetcartan.dconnect import GammaConnection, berwald, random_cartan, random_gamma_connection
from jetcartan.geometry import NonlinearConnection, TemporalMetric
from jetcartan.symexpr import simplify
from jetcartan.verify import ResidualTensor, SamplingPlan, verify

from conftest import SPHERE_DOMAIN, diag_metric

x1 = sx.x_vars(2)[0]
y1, y2 = sx.y_vars(2)


def check(residuals, n=2, **plan):
    rep = verify(residuals, SamplingPlan(**plan), n)
    assert rep.passed, rep.summary()
    return rep


def test_family_names():
    assert len(TORSION_FAMILIES) == 8 and len(CURVATURE_FAMILIES) == 5


@pytest.mark.parametrize("dim", [2, 3])
def test_flat_tables_vanish(dim):
    conn = berwald(TemporalMetric(sx.ONE), diag_metric(["1"] * dim, dim))
    tt = torsion_table(conn)
    for _, a in tt.items():
        assert zero_check(a.components)
    for _, a in curvature_table(conn, tt).items():
        assert zero_check(a.components)


def test_sphere_berwald_expected_values_exact(sphere):
    conn = berwald(*sphere)
    for res in berwald_expected_residuals(conn, sphere[1]):
        assert all(simplify(sx.expand(e)).is_zero() for e in res.difference().flat), res.name


def test_sphere_berwald_components(sphere):
    conn = berwald(*sphere)
    tt = torsion_table(conn)
    ct = curvature_table(conn, tt)
    s2 = sx.power(sx.sin(x1), 2)
    assert simplify(ct.R[0, 1, 0, 1] + s2).is_zero()
    assert simplify(ct.R[1, 0, 0, 1] - 1).is_zero()
    assert simplify(sx.expand(tt.R[0, 0, 1] + y2 * s2)).is_zero()
    assert simplify(tt.R[1, 0, 1] - y1).is_zero()


@pytest.mark.parametrize("seed", range(3))
def test_cartan_type_has_no_T_or_S_torsion(seed):
    conn, _ = random_cartan(seed)
    tt = torsion_table(conn)
    assert zero_check(tt.T.components) and zero_check(tt.S.components)


def test_tables_need_h_normal():
    conn = random_gamma_connection(0)
    with pytest.raises(ValueError):
        torsion_table(conn)
    with pytest.raises(ValueError):
        curvature_table(conn)


@pytest.mark.parametrize("seed", range(3))
def test_closed_forms_match_definitions(seed):
    conn, _ = random_cartan(seed)
    rep = check(oracle_comparison(conn), seed=seed, count=50)
    assert len(rep.results) == 20


def test_closed_forms_match_definitions_sphere(sphere):
    conn = berwald(*sphere)
    check(oracle_comparison(conn), count=100, domain=SPHERE_DOMAIN, abs_tol=1e-9, rel_tol=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_antisymmetries(seed):
    conn, _ = random_cartan(seed)
    tt = torsion_table(conn)
    ct = curvature_table(conn, tt)
    res = [
        ResidualTensor("T1", (), tt.R.components, -np.swapaxes(tt.R.components, 1, 2)),
        ResidualTensor("R", (), ct.R.components, -np.swapaxes(ct.R.components, 2, 3)),
    ]
    check(res, seed=seed)


def test_full_arrays_antisymmetric_in_frame_pair():
    conn = random_gamma_connection(1)
    fd = FrameData.of(conn)
    T = full_torsion_oracle(conn, fd=fd)
    R = full_curvature_oracle(conn, fd=fd)
    check([
        ResidualTensor("T", (), T, -np.swapaxes(T, 1, 2)),
        ResidualTensor("R", (), R, -np.swapaxes(R, 2, 3)),
    ])


def test_zero_connection_over_zero_nlc():
    conn = GammaConnection.zero(NonlinearConnection.zero(2))
    assert zero_check(np.vectorize(simplify, otypes=[object])(full_torsion_oracle(conn)))
    assert zero_check(np.vectorize(simplify, otypes=[object])(full_curvature_oracle(conn)))


@pytest.mark.parametrize("seed", range(2))
def test_layout_round_trip(seed):
    conn, _ = random_cartan(seed)
    tt = torsion_table(conn)
    ct = curvature_table(conn, tt)
    back_t = torsion_from_full(torsion_to_full(tt, 2), 2)
    back_c = curvature_from_full(curvature_to_full(ct, 2), 2)
    for (_, a), (_, b) in zip(tt.items(), back_t.items()):
        assert all(simplify(p - q).is_zero() for p, q in zip(a.components.flat, b.components.flat))
    for (_, a), (_, b) in zip(ct.items(), back_c.items()):
        assert all(simplify(p - q).is_zero() for p, q in zip(a.components.flat, b.components.flat))


def test_perturbed_table_is_caught():
    conn, _ = random_cartan(0)
    res = oracle_comparison(conn)
    bad = res[3]
    bad.lhs = bad.lhs.copy()
    bad.lhs.flat[0] = bad.lhs.flat[0] + 1e-3
    rep = verify([bad], SamplingPlan(count=20), 2)
    assert not rep.passed
