import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warpcurv import models
from warpcurv.chart import GeometryError, TangentPlane, christoffel_at, curvature_operator_at, sectional_at
from warpcurv.warp import (
    DoublyWarpedFrame,
    FrameError,
    WarpFunction,
    assemble_doubly_warped,
    compare_with_engine,
    convex_weights,
    doubly_warped_K,
    frame_at,
    frame_from_plane,
    random_frame,
    single_warp_K,
    warp,
    warp_terms,
    warped_connection,
    warped_curvature_images,
)

E = WarpFunction.exp()
COSH = WarpFunction.cosh()
SINH = WarpFunction.sinh()
ONE = WarpFunction.constant(1.0)
TWO_PLUS_SIN = warp("two_plus_sin")


@pytest.mark.parametrize("name", ["exp", "cosh", "sinh", "two_plus_sin", "one_plus_square"])
def test_warp_derivatives_consistent(name):
    assert warp(name).consistency_error(np.linspace(0.2, 2.0, 9)) <= 1e-6


def test_jet_derivatives_fill_in_missing_ones():
    f, fp, fpp = TWO_PLUS_SIN.derivs(np.array([0.3, 1.0]))
    np.testing.assert_allclose(fp, np.cos([0.3, 1.0]), rtol=1e-14)
    np.testing.assert_allclose(fpp, -np.sin([0.3, 1.0]), rtol=1e-14)


def test_rescaled_warp():
    f, fp, fpp = COSH.rescaled(3.0).derivs(0.5)
    assert (f, fp, fpp) == pytest.approx((np.cosh(1.5), 3 * np.sinh(1.5), 9 * np.cosh(1.5)))


# -- single warp -----------------------------------------------------------------


@given(st.floats(0.0, 1.0), st.floats(0.0, 2 * np.pi), st.floats(-2.0, 2.0))
@settings(max_examples=50, deadline=None)
def test_single_exp_warp_is_hyperbolic(s, angle, t):
    # orthonormal u, v in a 2-D fibre with ||u||^2 = 1 - s^2
    c = np.sqrt(1 - s * s)
    u = c * np.array([np.cos(angle), np.sin(angle)])
    v = np.array([-np.sin(angle), np.cos(angle)])
    assert single_warp_K(E, t, s, u, v, 0.0) == pytest.approx(-1.0, abs=1e-12)


def test_single_unwarped_returns_factor_curvature():
    assert single_warp_K(ONE, 0.4, 0.0, [1.0, 0.0], [0.0, 1.0], 0.37) == pytest.approx(0.37)


def test_single_cosh_matches_engine():
    # phi = cosh over the hyperbolic cylinder fibre, point t = 0.7, s = 0.6, ||u|| = 0.8
    sigma = models.hyperbolic_cylinder()
    m = assemble_doubly_warped(sigma, models.flat_circle(), COSH, ONE, (0.1, 2.0))
    x = np.array([1.0, 0.3])
    t = 0.7
    gram = np.cosh(t) ** 2 * sigma(x)
    # rho-orthonormal fibre basis
    e1 = np.array([1.0 / np.sqrt(gram[0, 0]), 0.0])
    e2 = np.array([0.0, 1.0 / np.sqrt(gram[1, 1])])
    u, v = 0.8 * e1, e2
    K = single_warp_K(COSH, t, 0.6, u, v, -1.0, gram)
    a = np.concatenate([u, [0.0], [0.6]])
    b = np.concatenate([v, [0.0], [0.0]])
    K_engine = sectional_at(m, TangentPlane(np.array([1.0, 0.3, 0.0, t]), a, b))
    assert K == pytest.approx(K_engine, abs=1e-5)
    assert K == pytest.approx(-1.0, abs=1e-12)


def test_single_rejects_bad_frame():
    with pytest.raises(FrameError):
        single_warp_K(E, 0.0, 0.5, [0.5], [1.0], 0.0)


# -- weights and the doubly warped formula -------------------------------------------


def test_weights_pure_t_plane():
    f = DoublyWarpedFrame([0.0, 0.0], [1.0, 0.0], [0.0], [0.0], 1.0, np.eye(2), np.eye(1))
    np.testing.assert_array_equal(convex_weights(f), [1, 0, 0, 0, 0])


def test_weights_factor_plane():
    f = DoublyWarpedFrame([1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0], 0.0, np.eye(2), np.eye(2))
    np.testing.assert_allclose(convex_weights(f), [0, 0, 1, 0, 0])


@pytest.mark.parametrize("dims", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)])
def test_random_weights_are_convex(dims, rng):
    n1, n2 = dims
    for _ in range(200):
        A1 = rng.normal(size=(n1, n1))
        A2 = rng.normal(size=(n2, n2))
        frame = random_frame(rng, A1 @ A1.T + 0.1 * np.eye(n1), A2 @ A2.T + 0.1 * np.eye(n2))
        w = convex_weights(frame)
        assert abs(w.sum() - 1.0) <= 1e-10
        assert w.min() >= -1e-12
        if n1 == 1:
            assert w[2] == 0.0
        if n2 == 1:
            assert w[3] == 0.0


def test_hyperbolic_tube_formula(rng):
    for _ in range(50):
        t = rng.uniform(0.1, 3.0)
        frame = random_frame(rng, np.cosh(t) ** 2 * np.eye(2), np.sinh(t) ** 2 * np.eye(1), K1=-1.0)
        assert doubly_warped_K(COSH, SINH, t, frame) == pytest.approx(-1.0, abs=1e-12)


def test_flat_product_formula(rng):
    for _ in range(20):
        frame = random_frame(rng, np.eye(2), np.eye(2), K1=0.0, K2=0.0)
        assert doubly_warped_K(ONE, ONE, 0.3, frame) == pytest.approx(0.0, abs=1e-14)


def test_reduces_to_single_warp(rng):
    for _ in range(20):
        t = rng.uniform(-1, 1)
        frame = random_frame(rng, np.exp(2 * t) * np.eye(2), np.eye(1) * 4.0, K1=0.3)
        a, b = frame.plane()
        a[2] = b[2] = 0.0  # drop the v components
        f = frame_from_plane(a, b, frame.gram1, frame.gram2, K1=0.3)
        K = doubly_warped_K(E, COSH, t, f)
        K_single = single_warp_K(E, t, f.s, f.u1, f.u2, 0.3, f.gram1)
        assert K == pytest.approx(K_single, abs=1e-12)


def test_K_lies_in_term_bracket(rng):
    for _ in range(100):
        t = rng.uniform(-1, 1)
        K1, K2 = rng.uniform(-2, 2, size=2)
        f1, f2 = TWO_PLUS_SIN.derivs(t)[0], E.derivs(t)[0]
        frame = random_frame(rng, f1**2 * np.eye(2), f2**2 * np.eye(2), K1, K2)
        K = doubly_warped_K(TWO_PLUS_SIN, E, t, frame)
        terms = warp_terms(TWO_PLUS_SIN, E, t, K1, K2)
        assert terms.min() - 1e-12 <= K <= terms.max() + 1e-12


def test_missing_factor_curvature_is_an_error(rng):
    frame = random_frame(rng, np.eye(2), np.eye(1))
    with pytest.raises(FrameError):
        doubly_warped_K(E, E, 0.0, frame)


def test_frame_constraints_enforced():
    bad = DoublyWarpedFrame([0.5], [1.0], [0.0], [0.0], 0.5, np.eye(1), np.eye(1))
    with pytest.raises(FrameError, match="not orthonormal"):
        convex_weights(bad)


def test_non_positive_warp_rejected(rng):
    frame = random_frame(rng, np.eye(1), np.eye(1))
    with pytest.raises(GeometryError):
        doubly_warped_K(SINH, E, -0.5, frame)


# -- oracle equivalence --------------------------------------------------------------

FACTOR_PAIRS = [
    ("round_sphere", "flat_circle"),
    ("hyperbolic_cylinder", "flat_circle"),
    ("round_sphere", "half_plane"),
    ("flat_torus2", "round_sphere"),
]
WARP_PAIRS = [("two_plus_sin", "exp"), ("cosh", "one_plus_square"), ("exp", "two_plus_sin")]


@pytest.mark.parametrize("factors", FACTOR_PAIRS)
@pytest.mark.parametrize("warps", WARP_PAIRS)
def test_closed_form_matches_engine(factors, warps, rng):
    m = assemble_doubly_warped(models.model(factors[0]), models.model(factors[1]),
                               warp(warps[0]), warp(warps[1]), (-1.0, 1.0))
    rows = compare_with_engine(m, 100, rng)
    assert max(abs(kc - ke) for _, kc, ke in rows) <= 1e-5


def test_assembled_flat_chart():
    m = assemble_doubly_warped(models.flat_circle(), models.flat_circle(), ONE, ONE, (-1, 1))
    from warpcurv.chart import riemann_at

    assert np.all(riemann_at(m, [0.1, 0.2, 0.3]).values == 0.0)


def test_assemble_domain_mismatch():
    with pytest.raises(GeometryError, match="domain mismatch"):
        assemble_doubly_warped(models.flat_circle(), models.flat_circle(), SINH, E, (-1.0, 1.0))


# -- connection and curvature images ---------------------------------------------------


def _four_d():
    return models.round_sphere(), models.flat_circle(), TWO_PLUS_SIN, E


def test_connection_identities_match_christoffels():
    s1, s2, p1, p2 = _four_d()
    m = assemble_doubly_warped(s1, s2, p1, p2, (-1.0, 1.0))
    point = np.array([1.1, 0.4, 2.0, 0.35])
    gamma = christoffel_at(m, point)
    samples = {
        "d": [None],
        "u": [np.array([1.0, 0.0]), np.array([0.3, -0.7])],
        "v": [np.array([1.0])],
    }

    def chart_vec(tag, vec):
        out = np.zeros(4)
        if tag == "d":
            out[3] = 1.0
        elif tag == "u":
            out[:2] = vec
        else:
            out[2:3] = vec
        return out

    for (tx, xs), (ty, ys) in itertools.product(samples.items(), repeat=2):
        for x in xs:
            for y in ys:
                closed = warped_connection(s1, s2, p1, p2, point, (tx, x), (ty, y))
                engine = np.einsum("kij,i,j->k", gamma, chart_vec(tx, x), chart_vec(ty, y))
                np.testing.assert_allclose(closed, engine, atol=1e-10, err_msg=f"{tx}{ty}")


def test_connection_cosh_example():
    s1, s2 = models.hyperbolic_cylinder(), models.flat_circle()
    point = np.array([0.5, 0.2, 1.0, 0.5])
    u1, u2 = np.array([1.0, 0.5]), np.array([-0.2, 1.0])
    out = warped_connection(s1, s2, COSH, E, point, ("u", u1), ("u", u2))
    ip = np.cosh(0.5) ** 2 * (u1 @ s1(point[:2]) @ u2)
    assert out[-1] == pytest.approx(-np.tanh(0.5) * ip)
    assert np.all(warped_connection(s1, s2, COSH, E, point, ("d", None), ("d", None)) == 0.0)
    assert np.all(warped_connection(s1, s2, COSH, E, point, ("u", u1), ("v", np.ones(1))) == 0.0)


def test_connection_unknown_tag():
    s1, s2, p1, p2 = _four_d()
    with pytest.raises(ValueError):
        warped_connection(s1, s2, p1, p2, np.zeros(4) + 1.0, ("w", None), ("d", None))


def test_curvature_images_examples():
    assert warped_curvature_images(COSH, SINH, 1.0, "du").coefficient == pytest.approx(-1.0)
    assert warped_curvature_images(COSH, SINH, 1.0, "uv").coefficient == pytest.approx(-1.0)
    c = warped_curvature_images(COSH, SINH, 1.0, "uu", K1=-1.0).coefficient
    assert c == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        warped_curvature_images(COSH, SINH, 1.0, "xy")


@pytest.mark.parametrize("t", [-0.6, 0.1, 0.8])
def test_operator_eigenpairs_match_images(t):
    s1, s2, p1, p2 = _four_d()
    m = assemble_doubly_warped(s1, s2, p1, p2, (-1.0, 1.0))
    op = curvature_operator_at(m, np.array([1.2, 0.3, 0.5, t]))
    coeff = {k: warped_curvature_images(p1, p2, t, k, K1=1.0).coefficient for k in ("du", "uv", "uu")}
    # frame columns are scaled coordinate axes: pairs (0,1) u^u, (0|1, 2) u^v, (0|1, 3) u^d, (2, 3) v^d
    kinds = {(0, 1): "uu", (0, 2): "uv", (1, 2): "uv", (0, 3): "du", (1, 3): "du"}
    for idx, pair in enumerate(op.pairs):
        if pair in kinds:
            e = np.zeros(len(op.pairs))
            e[idx] = 1.0
            np.testing.assert_allclose(op.matrix @ e, coeff[kinds[pair]] * e, atol=1e-5)
    v_d = op.pairs.index((2, 3))
    assert op.matrix[v_d, v_d] == pytest.approx(warped_curvature_images(p1, p2, t, "dv").coefficient, abs=1e-5)
    eig = np.linalg.eigvalsh(op.matrix)
    for c in coeff.values():
        assert np.min(np.abs(eig - c)) <= 1e-5


def test_frame_at_uses_engine_factor_curvature():
    s1, s2, p1, p2 = _four_d()
    m = assemble_doubly_warped(s1, s2, p1, p2, (-1.0, 1.0))
    f = frame_at(m, np.array([1.0, 0.2, 0.1, 0.3]), np.array([1.0, 0.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0, 0.0]))
    assert f.K1 == pytest.approx(1.0, abs=1e-10)
    assert f.K2 is None
