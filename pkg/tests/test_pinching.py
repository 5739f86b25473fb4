import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpcurv import models
from warpcurv.families import build_lambda_r, build_lambda_r_s, build_rho_r, make_isotopy
from warpcurv.pinching import (
    SamplingGrid,
    WarpFamily,
    curvature_range,
    family_metric,
    find_alpha0,
    find_min_r,
    geometric_grid,
    lemma22_terms,
    linear_grid,
    sample_sectional,
)
from warpcurv.warp import WarpFunction, assemble_doubly_warped, warp

H = models.hyperbolic_cylinder()
EXP, COSH, SINH = WarpFunction.exp(), WarpFunction.cosh(), WarpFunction.sinh()


# -- lemma22_terms -----------------------------------------------------------------------


@given(alpha=st.floats(0.1, 4.0), t=st.floats(0.1, 3.0))
@settings(max_examples=40, deadline=None)
def test_exp_terms_are_minus_one(alpha, t):
    # (0 - e^{2s}) / e^{2s} = -1: with K = 0 every term of the e^t pair is -1
    fam = WarpFamily(EXP, EXP, (0.5, 3.0), (0.0, 0.0), (0.0, 0.0))
    T = lemma22_terms(fam, alpha, t)
    np.testing.assert_allclose(T, -1.0, rtol=0, atol=1e-15)


def test_exp_terms_with_curvature_bounds():
    fam = WarpFamily(EXP, EXP, (1.0, 3.0), (-1.0, 1.0), (-1.0, 1.0))
    alpha, t = 1.3, 2.0
    T = lemma22_terms(fam, alpha, t)
    s = np.exp(-2 * alpha * t)
    np.testing.assert_allclose(T[2], [-1 - s, -1 + s], rtol=1e-14)
    np.testing.assert_allclose(T[[0, 1, 4]], -1.0, atol=1e-15)


@pytest.mark.parametrize("alpha,t", [(0.5, 1.0), (2.0, 0.7), (3.0, 2.5)])
def test_hyperbolic_tube_terms(alpha, t):
    fam = WarpFamily(COSH, SINH, (0.5, 3.0), (-1.0, -1.0), None)
    T = lemma22_terms(fam, alpha, t)
    for k in (0, 1, 2, 4):
        np.testing.assert_allclose(T[k], -1.0, rtol=1e-12)
    assert np.all(np.isnan(T[3]))


def test_cosh_curvature_term_range():
    fam = WarpFamily(COSH, COSH, (0.5, 2.0), (-1.2, -0.8), None)
    T = lemma22_terms(fam, 3.0, 1.0)
    sh2, ch2 = np.sinh(3.0) ** 2, np.cosh(3.0) ** 2
    np.testing.assert_allclose(T[2], [(-1.2 - sh2) / ch2, (-0.8 - sh2) / ch2], rtol=1e-14)


def test_terms_reject_nonpositive_warp_and_alpha():
    bad = WarpFamily(WarpFunction(lambda t: np.sin(t)), EXP, (1.0, 6.0), (0.0, 0.0), None)
    with pytest.raises(ValueError):
        lemma22_terms(bad, 1.0, np.linspace(1.0, 6.0, 20))
    with pytest.raises(ValueError):
        lemma22_terms(WarpFamily(EXP, EXP, (1, 2), None, None), 0.0, 1.0)


@pytest.mark.parametrize("interval", [(0.0, 1.0), (2.0, 1.0), (-1.0, 1.0)])
def test_family_interval_validation(interval):
    with pytest.raises(ValueError):
        WarpFamily(EXP, EXP, interval, None, None)


def test_family_records_hypotheses():
    fam = WarpFamily(EXP, EXP, (1, 2), None, None)
    assert len(fam.metadata["hypotheses"]) == 2


# -- find_alpha0 -------------------------------------------------------------------------


def test_alpha0_exp_family():
    fam = WarpFamily(EXP, EXP, (1.0, 3.0), (-1.0, 1.0), (-1.0, 1.0))
    rep = find_alpha0(fam, 0.1, linear_grid(0.5, 3.0, 0.01))
    oracle = np.log(1 / 0.1) / 2  # e^{-2 alpha} < eps at t = a = 1
    assert rep.found
    assert abs(rep.alpha0 - 1.16) <= 0.01 + 1e-12
    assert oracle <= rep.alpha0 <= oracle + 0.01


def test_alpha0_hyperbolic_tube_is_first_point():
    fam = WarpFamily(COSH, SINH, (0.5, 3.0), (-1.0, -1.0), None)
    grid = geometric_grid(0.2, 5.0)
    assert find_alpha0(fam, 0.05, grid).alpha0 == grid[0]


def test_alpha0_cosh_family_matches_inversion():
    # terms: -1 exactly, |K + 1| / cosh^2 <= 0.5 / cosh^2, and sech^2 for the mixed term.
    # The binding condition is sech^2(alpha a) < eps.
    eps, a = 0.1, 1.0
    fam = WarpFamily(COSH, COSH, (a, 3.0), (-1.5, -0.5), None)
    rep = find_alpha0(fam, eps, linear_grid(0.5, 4.0, 0.01))
    oracle = np.arccosh(np.sqrt(1 / eps)) / a
    assert oracle <= rep.alpha0 <= oracle + 0.01
    assert rep.table[[r["alpha"] for r in rep.table].index(rep.alpha0) - 1]["witness_term"] == "u_v"


def test_alpha0_not_found_reports_witness():
    fam = WarpFamily(EXP, EXP, (1.0, 3.0), (-1.0, 1.0), None)
    rep = find_alpha0(fam, 0.1, linear_grid(0.1, 0.5, 0.1))
    assert not rep.found
    assert rep.witness["term"] == "u_u" and rep.witness["t"] == 1.0
    json.dumps(rep.to_dict())


def test_alpha0_requires_persistence():
    # exact hyperbolic tube at alpha = 1 and 2 only; alpha = 1 is an isolated pass
    def phi2(alpha):
        return SINH if alpha in (1.0, 2.0) else WarpFunction.constant(1.0)

    fam = WarpFamily(COSH, phi2, (1.0, 2.0), (-1.0, -1.0), None)
    rep = find_alpha0(fam, 0.1, np.array([0.5, 1.0, 1.5, 2.0]))
    assert [r["passed"] for r in rep.table] == [False, True, False, True]
    assert rep.alpha0 == 2.0


def test_alpha0_errors():
    fam = WarpFamily(EXP, EXP, (1.0, 3.0), None, None)
    with pytest.raises(ValueError):
        find_alpha0(fam, 0.0, [1.0, 2.0])
    with pytest.raises(ValueError):
        find_alpha0(fam, 0.1, [2.0, 1.0])


def test_monotone_in_alpha():
    fam = WarpFamily(COSH, SINH, (0.5, 2.0), (-1.3, -0.7), None)
    rep = find_alpha0(fam, 0.01, geometric_grid(0.2, 12.0))
    dev = [r["max_deviation"] for r in rep.table]
    assert all(b <= a for a, b in zip(dev, dev[1:]))
    assert dev[-1] < 1e-4


@pytest.mark.parametrize("start,stop,ratio", [(6, 40, 1.5), (0.1, 1.0, 1.1), (1.0, 1.0, 2.0)])
def test_geometric_grid(start, stop, ratio):
    g = geometric_grid(start, stop, ratio)
    assert g[0] == start and g[-1] >= stop * (1 - 1e-12)
    assert len(g) == 1 or g[-2] < stop
    np.testing.assert_allclose(g[1:] / g[:-1], ratio)


# -- sampling ---------------------------------------------------------------------------


def test_flat_torus_range():
    rep = curvature_range(models.flat_torus(3), SamplingGrid(n_t=32, n_space=4))
    assert -1e-6 <= rep.K_min <= rep.K_max <= 1e-6
    assert rep.term_extrema is None and rep.brackets() is None


def test_rho_r_range():
    rep = curvature_range(build_rho_r(12.0, H), SamplingGrid(n_t=64), eps=0.1)
    assert -1 - 1e-5 <= rep.K_min <= rep.K_max <= -1 + 1e-5
    assert rep.verdict is True
    assert rep.brackets()


def test_lambda_r_large_r_range():
    rep = curvature_range(build_lambda_r(60.0, H), SamplingGrid(n_t=128), eps=0.1)
    assert -1.1 < rep.K_min <= rep.K_max < -0.9
    assert rep.brackets()


@pytest.mark.parametrize(
    "s1,s2,p1,p2,dom",
    [
        ("round_sphere", "flat_circle", "two_plus_sin", "exp", (0.2, 2.0)),
        ("hyperbolic_cylinder", "flat_circle", "cosh", "sinh", (0.3, 2.0)),
        ("round_sphere", "round_sphere", "one_plus_square", "two_plus_sin", (-1.0, 1.0)),
    ],
)
def test_bracketing_on_doubly_warped(s1, s2, p1, p2, dom):
    m = assemble_doubly_warped(models.model(s1), models.model(s2), warp(p1), warp(p2), dom)
    rep = curvature_range(m, SamplingGrid(n_t=24, n_space=3, planes=30))
    assert rep.K_min <= rep.K_max
    assert rep.brackets(1e-6)


def test_pointwise_bracketing_on_sphere_factor(rng):
    # exact factor curvature (+1) makes the pointwise term interval available
    phi1, phi2 = warp("two_plus_sin"), warp("exp")
    m = assemble_doubly_warped(models.round_sphere(), models.flat_circle(), phi1, phi2, (0.2, 2.0))
    fam = WarpFamily(phi1, phi2, (0.2, 2.0), (1.0, 1.0), None)
    ts = rng.uniform(0.2, 2.0, 40)
    pts = np.stack([rng.uniform(0.5, 2.5, 40), rng.uniform(0, 6, 40), rng.uniform(0, 6, 40), ts], -1)
    K = sample_sectional(m, pts, planes=40, seed=3)
    T = lemma22_terms(fam, 1.0, ts)
    lo, hi = np.nanmin(T[..., 0], axis=-1), np.nanmax(T[..., 1], axis=-1)
    assert np.all(K.min(axis=1) >= lo - 1e-6)
    assert np.all(K.max(axis=1) <= hi + 1e-6)


@pytest.mark.parametrize("alpha", [0.7, 1.5, 3.0])
def test_rescaling_isometry(alpha):
    fam = WarpFamily(warp("cosh"), warp("exp"), (0.5, 1.5), None, None)
    ts = np.linspace(0.5, 1.5, 17)
    S1 = models.round_sphere()
    S2 = models.flat_circle()
    a = curvature_range(family_metric(fam, alpha, S1, S2, True), SamplingGrid(t_values=tuple(ts)))
    b = curvature_range(family_metric(fam, alpha, S1, S2, False), SamplingGrid(t_values=tuple(alpha * ts)))
    assert abs(a.K_min - b.K_min) <= 1e-6
    assert abs(a.K_max - b.K_max) <= 1e-6


def test_curvature_range_is_deterministic():
    grid = SamplingGrid(n_t=32, seed=11)
    a = curvature_range(build_lambda_r(9.0, H), grid, dict(r=9.0), 0.2)
    b = curvature_range(build_lambda_r(9.0, H), grid, dict(r=9.0), 0.2)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    c = curvature_range(build_lambda_r(9.0, H), SamplingGrid(n_t=32, seed=12), dict(r=9.0), 0.2)
    assert c.to_json() != a.to_json()


def test_report_csv_layout():
    rep = curvature_range(build_rho_r(6.0, H), SamplingGrid(n_t=4))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "# warpcurv-csv v1 columns=parameter,t,series,value"
    assert lines[1] == "parameter,t,series,value"
    assert len(lines) == 2 + 2 * len(rep.per_t)
    d = json.loads(rep.to_json())
    assert d["grid"]["seed"] == 0 and d["n_planes"] == 6 + 20


# -- find_min_r -------------------------------------------------------------------------


SMALL = SamplingGrid(n_t=48, n_space=2, planes=8)


def test_min_r_rho_family_is_first_point():
    rep = find_min_r(lambda r: build_rho_r(r, H), 0.05, [2.0, 4.0, 8.0], SMALL)
    assert rep.r_star == 2.0


def test_min_r_lambda_identity():
    rep = find_min_r(lambda r: build_lambda_r(r, H), 0.2, geometric_grid(6.0, 30.0, 1.5), SMALL)
    assert rep.found
    assert rep.non_increasing(slack=1e-12)
    first_pass = next(row["r"] for row in rep.table if row["passed"])
    assert rep.r_star == first_pass


def test_min_r_lambda_s_covers_all_s():
    iso = make_isotopy(2, "bump_rotation", 0.9, [np.pi, 0.0], 0.5)
    rep = find_min_r(lambda r, s: build_lambda_r_s(r, s, iso, H), 0.2, [6.0, 9.0, 13.5, 20.25],
                     SMALL, s_values=[0.0, 0.25, 0.5, 0.75, 1.0])
    assert rep.found
    assert all(len(row["per_s"]) == 5 for row in rep.table)
    assert rep.non_increasing(slack=1e-12)


def test_min_r_not_found():
    rep = find_min_r(lambda r: build_lambda_r(r, H), 0.01, [3.0, 4.0], SMALL)
    assert not rep.found and rep.r_star is None
    with pytest.raises(ValueError):
        find_min_r(lambda r: build_lambda_r(r, H), -1.0, [3.0])
