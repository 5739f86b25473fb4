import numpy as np
import pytest
from scipy.integrate import quad

from warpcurv import heatflow, models
from warpcurv.heatflow import (
    BlowUpError,
    CFLError,
    ClosedCurve,
    affine_deviation,
    covariant_acceleration,
    curve_to_csv,
    cylinder_circle,
    energy,
    flow_step,
    flow_until,
    stable_dt,
    tension,
    tension_norm,
    torus_loop,
    winding_numbers,
)

T2 = models.flat_torus(2)
CYL = models.hyperbolic_cylinder()


def _max_tension(curve):
    return float(tension_norm(tension(curve), curve.target(curve.samples)).max())


# -- construction -----------------------------------------------------------------------


def test_curve_validation():
    with pytest.raises(ValueError, match="16"):
        torus_loop(T2, 8)
    with pytest.raises(ValueError, match="not periodic"):
        ClosedCurve(np.zeros((32, 2)), CYL, (0, 1))
    theta = np.linspace(0, 1, 32) ** 4
    with pytest.raises(ValueError, match="uneven"):
        ClosedCurve(np.stack([theta, 0 * theta], -1), T2, (0, 0))


@pytest.mark.parametrize("w", [(1, 0), (0, 1), (3, 4), (-2, 1), (0, 0)])
def test_winding_recomputed_from_wrapped_samples(w):
    c = torus_loop(T2, 64, w, amplitude=0.2, offset=(0.3, 1.0))
    assert winding_numbers(c) == w


# -- energy -----------------------------------------------------------------------------


def test_energy_examples():
    assert abs(energy(torus_loop(T2, 256, (1, 0))) - np.pi) <= 1e-4
    assert energy(ClosedCurve(np.full((64, 2), 1.0), T2, (0, 0))) == 0.0
    assert abs(energy(torus_loop(T2, 256, (3, 4))) - 25 * np.pi) <= 1e-3


def test_energy_second_order_against_quadrature():
    amp, off = 0.3, 0.5
    exact = 0.5 * quad(lambda th: np.cosh(off + amp * np.sin(th)) ** 2 + (amp * np.cos(th)) ** 2, 0, 2 * np.pi)[0]
    errs = [abs(energy(cylinder_circle(CYL, n, off, amp)) - exact) for n in (32, 64, 128)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 < coarse / fine < 4.5


# -- tension ----------------------------------------------------------------------------


def test_tension_vanishes_on_geodesics():
    assert _max_tension(torus_loop(T2, 256, (2, 1), offset=(0.4, 0.1))) <= 1e-10
    assert _max_tension(cylinder_circle(CYL, 256, 0.0)) <= 1e-10


@pytest.mark.parametrize("c", [0.2, 0.5, 1.0])
def test_offset_circle_tension(c):
    tau = tension(cylinder_circle(CYL, 256, c))
    np.testing.assert_allclose(tau[:, 1], -np.cosh(c) * np.sinh(c), atol=1e-4)
    np.testing.assert_allclose(tau[:, 0], 0.0, atol=1e-10)


def test_tension_matches_covariant_acceleration():
    errs = []
    for n in (64, 128, 256):
        c = cylinder_circle(CYL, n, 0.4, 0.3)
        errs.append(float(np.max(np.abs(tension(c) - covariant_acceleration(c)))))
    assert errs[-1] < 1e-3
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


# -- stepping ---------------------------------------------------------------------------


def test_cfl_violation_reports_bound():
    c = torus_loop(T2, 64, amplitude=0.1)
    bound = stable_dt(c)
    assert bound == pytest.approx(0.4 * (2 * np.pi / 64) ** 2)
    with pytest.raises(CFLError) as err:
        flow_step(c, 1.5 * bound)
    assert err.value.bound == bound
    with pytest.raises(CFLError):
        flow_until(c, dt=2 * bound)


def test_geodesic_is_fixed_point():
    for c in (cylinder_circle(CYL, 128, 0.0), torus_loop(T2, 128, (1, 2))):
        out = flow_step(c, stable_dt(c))
        assert np.max(np.abs(out.samples - c.samples)) <= 1e-12


def test_offset_circle_amplitude_decreases():
    c = cylinder_circle(CYL, 128, 0.5)
    out = flow_step(c, stable_dt(c))
    assert np.max(np.abs(out.samples[:, 1])) < 0.5


def test_one_step_decreases_energy():
    c = torus_loop(T2, 256, (1, 0), amplitude=0.3)
    assert energy(flow_step(c, stable_dt(c))) < energy(c)


def test_blow_up_detected(monkeypatch):
    c = torus_loop(T2, 32, amplitude=0.1)
    monkeypatch.setattr(heatflow, "tension", lambda curve: np.full(curve.samples.shape, np.nan))
    with pytest.raises(BlowUpError):
        flow_step(c, stable_dt(c))


def test_flow_requires_positive_tol():
    with pytest.raises(ValueError):
        flow_until(torus_loop(T2, 32), tol=0.0)


# -- full flows (Npts = 256 per the reference examples) -----------------------------------


@pytest.fixture(scope="module")
def torus_flow():
    return flow_until(torus_loop(T2, 256, (1, 0), amplitude=0.3), tol=1e-6, record_every=500)


def test_torus_flow_limit(torus_flow):
    final, trace = torus_flow
    assert trace.status == "converged"
    assert abs(trace.steps[-1][1] - np.pi) <= 1e-3
    assert affine_deviation(final) <= 1e-3
    assert trace.monotone and trace.winding_preserved
    assert final.winding == (1, 0)


def test_trace_csv(torus_flow):
    final, trace = torus_flow
    lines = trace.to_csv().splitlines()
    assert lines[0] == "# warpcurv-csv v1 columns=step,energy,tension_max,dt"
    assert len(lines) == 2 + len(trace.steps)
    assert np.all(np.diff(trace.energies) <= 1e-12)
    body = curve_to_csv(final).splitlines()
    assert body[0].startswith("# warpcurv-csv v1 columns=i,theta,x1,x2")
    assert len(body) == 2 + final.npts


def test_class_21_flow():
    c = torus_loop(T2, 256, (2, 1), amplitude=0.25)
    final, trace = flow_until(c, tol=1e-6, record_every=1000)
    assert trace.status == "converged"
    assert abs(trace.steps[-1][1] - 5 * np.pi) <= 1e-3
    assert final.winding == (2, 1) == winding_numbers(final)


def test_cylinder_flow_to_core():
    final, trace = flow_until(cylinder_circle(CYL, 256, 0.5), tol=1e-6, record_every=1000)
    assert trace.status == "converged" and trace.monotone
    assert abs(trace.steps[-1][1] - np.pi) <= 1e-3
    assert np.max(np.abs(final.samples[:, 1])) <= 1e-3


def test_max_steps_status():
    final, trace = flow_until(torus_loop(T2, 64, amplitude=0.3), tol=1e-9, max_steps=10)
    assert trace.status == "max-steps" and trace.n_steps == 10
    assert trace.steps[-1][0] == 10


# -- convergence and uniqueness (coarser grids keep these quick) ---------------------------


def _limit(curve):
    final, trace = flow_until(curve, tol=1e-8, record_every=10_000)
    assert trace.status == "converged"
    return final, trace.steps[-1][1]


def test_grid_convergence_of_limit_energy():
    # limits are exact geodesics here, so successive energy changes sit at round-off
    es = [_limit(cylinder_circle(CYL, n, 0.4, 0.2))[1] for n in (32, 64, 128)]
    d1, d2 = abs(es[1] - es[0]), abs(es[2] - es[1])
    assert d2 <= max(4 * d1, 1e-9)
    assert abs(es[-1] - np.pi) <= 1e-6


def test_uniqueness_echo_cylinder():
    a, _ = _limit(cylinder_circle(CYL, 64, 0.5))
    b, _ = _limit(cylinder_circle(CYL, 64, -0.3, 0.2))
    assert np.max(np.abs(a.samples[:, 1] - b.samples[:, 1])) <= 1e-3


def test_uniqueness_echo_torus_up_to_translation():
    # geodesics of a flat torus come in a translation family; compare modulo translation
    a, _ = _limit(torus_loop(T2, 64, (1, 1), amplitude=0.3))
    b, _ = _limit(torus_loop(T2, 64, (1, 1), amplitude=-0.2, offset=(0.5, 2.0)))
    da = a.samples - a.samples.mean(axis=0)
    db = b.samples - b.samples.mean(axis=0)
    assert np.max(np.abs(da - db)) <= 1e-3
