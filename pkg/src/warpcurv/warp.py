"""Closed-form curvature of singly and doubly warped products.

For ``rho = phi1^2 sigma1 + phi2^2 sigma2 + dt^2`` on ``M1 x M2 x R`` the
sectional curvature of the plane spanned by the orthonormal pair
``a = u1 + v1 + s d/dt``, ``b = u2 + v2`` is a convex combination of five
terms::

    -phi1''/phi1,  -phi2''/phi2,
    (K1 - phi1'^2)/phi1^2,  (K2 - phi2'^2)/phi2^2,
    -phi1' phi2' / (phi1 phi2)

with weights given by :func:`convex_weights`.  Norms and inner products of
the ``u`` and ``v`` vectors are taken in ``rho``; ``K1``, ``K2`` are the
sectional curvatures of ``sigma1``, ``sigma2`` on the planes spanned by the
``u`` and ``v`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from .chart import ChartMetric, GeometryError, TangentPlane, christoffel_at, sectional_at, sectional_curvatures

FRAME_TOL = 1e-10

TERM_NAMES = ("d_u", "d_v", "u_u", "v_v", "u_v")


class FrameError(GeometryError):
    pass


@dataclass(frozen=True)
class WarpFunction:
    """A positive warping profile ``t -> phi(t)`` with two derivatives.

    ``value`` must be written with numpy ufuncs so it also accepts jets.
    Missing ``d1``/``d2`` are filled in by forward-mode differentiation.
    """

    value: Callable
    d1: Callable | None = None
    d2: Callable | None = None
    domain: tuple = (-np.inf, np.inf)
    name: str = ""

    def __call__(self, t):
        return self.value(t)

    def derivs(self, t):
        """``(phi, phi', phi'')`` as float arrays."""
        t = np.asarray(t, dtype=float)
        if self.d1 is not None and self.d2 is not None:
            return (
                np.asarray(self.value(t), float) + 0 * t,
                np.asarray(self.d1(t), float) + 0 * t,
                np.asarray(self.d2(t), float) + 0 * t,
            )
        (tj,) = jets.seed(t[..., None], order=2)
        out = self.value(tj)
        if not isinstance(out, jets.Jet):
            c = np.asarray(out, float) + 0 * t
            return c, np.zeros_like(c), np.zeros_like(c)
        return out.val + 0 * t, out.grad[..., 0] + 0 * t, out.hess[..., 0, 0] + 0 * t

    def rescaled(self, alpha):
        """``t -> phi(alpha t)``."""
        a = float(alpha)
        lo, hi = self.domain
        d1 = d2 = None
        if self.d1 is not None and self.d2 is not None:
            d1 = lambda t: a * self.d1(a * t)
            d2 = lambda t: a * a * self.d2(a * t)
        return WarpFunction(
            lambda t: self.value(a * t), d1, d2, (lo / a, hi / a), f"{self.name}({a:g} t)"
        )

    def consistency_error(self, ts, h=1e-5):
        """Max relative mismatch between ``d1``, ``d2`` and central differences."""
        ts = np.asarray(ts, float)
        f, f1, f2 = self.derivs(ts)
        fp, _, _ = self.derivs(ts + h)
        fm, _, _ = self.derivs(ts - h)
        n1 = (fp - fm) / (2 * h)
        f1p = self.derivs(ts + h)[1]
        f1m = self.derivs(ts - h)[1]
        n2 = (f1p - f1m) / (2 * h)
        e1 = np.abs(n1 - f1) / np.maximum(1.0, np.abs(f1))
        e2 = np.abs(n2 - f2) / np.maximum(1.0, np.abs(f2))
        return float(max(e1.max(), e2.max()))

    @staticmethod
    def exp():
        return WarpFunction(np.exp, np.exp, np.exp, name="exp")

    @staticmethod
    def cosh():
        return WarpFunction(np.cosh, np.sinh, np.cosh, name="cosh")

    @staticmethod
    def sinh():
        return WarpFunction(np.sinh, np.cosh, np.sinh, domain=(0.0, np.inf), name="sinh")

    @staticmethod
    def constant(c=1.0):
        c = float(c)
        return WarpFunction(
            lambda t: c + 0.0 * t, lambda t: 0.0 * t, lambda t: 0.0 * t, name=f"const{c:g}"
        )


WARPS = {
    "exp": WarpFunction.exp,
    "cosh": WarpFunction.cosh,
    "sinh": WarpFunction.sinh,
    "two_plus_sin": lambda: WarpFunction(lambda t: 2.0 + np.sin(t), name="2+sin"),
    "one_plus_square": lambda: WarpFunction(lambda t: 1.0 + t * t, name="1+t^2"),
    "constant": WarpFunction.constant,
}


def warp(name):
    """Look up a warp profile by its registry name."""
    try:
        return WARPS[name]()
    except KeyError:
        raise ValueError(f"unknown warp {name!r}; choose from {sorted(WARPS)}") from None


def warp_terms(phi1, phi2, t, K1=0.0, K2=0.0):
    """The five generating terms, in the order of :data:`TERM_NAMES`."""
    f1, f1p, f1pp = phi1.derivs(t)
    f2, f2p, f2pp = phi2.derivs(t)
    _check_positive(f1, f2)
    return np.stack(
        [
            -f1pp / f1,
            -f2pp / f2,
            (K1 - f1p * f1p) / (f1 * f1),
            (K2 - f2p * f2p) / (f2 * f2),
            -(f1p * f2p) / (f1 * f2),
        ],
        axis=-1,
    )


def _check_positive(*values):
    for v in values:
        if np.any(np.asarray(v) <= 0):
            raise GeometryError("non-positive warp")


@dataclass
class DoublyWarpedFrame:
    """Orthonormal plane data ``{u1 + v1 + s d/dt, u2 + v2}``.

    ``gram1``/``gram2`` are the inner products of ``rho`` restricted to the
    factor directions, i.e. ``phi1(t)^2 sigma1(x1)`` and ``phi2(t)^2 sigma2(x2)``.
    ``K1``/``K2`` are factor sectional curvatures of the ``u``/``v`` planes;
    they may be left as ``None`` when the corresponding pair is degenerate.
    """

    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    s: float
    gram1: np.ndarray
    gram2: np.ndarray
    K1: float | None = None
    K2: float | None = None

    def __post_init__(self):
        for name in ("u1", "u2", "v1", "v2"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        self.gram1 = np.atleast_2d(np.asarray(self.gram1, float))
        self.gram2 = np.atleast_2d(np.asarray(self.gram2, float))
        self.s = float(self.s)

    @property
    def dims(self):
        return len(self.u1), len(self.v1)

    def ip1(self, x, y):
        return float(x @ self.gram1 @ y)

    def ip2(self, x, y):
        return float(x @ self.gram2 @ y)

    def residuals(self):
        u1, u2, v1, v2 = self.u1, self.u2, self.v1, self.v2
        return (
            abs(self.s ** 2 + self.ip1(u1, u1) + self.ip2(v1, v1) - 1.0),
            abs(self.ip1(u2, u2) + self.ip2(v2, v2) - 1.0),
            abs(self.ip1(u1, u2) + self.ip2(v1, v2)),
        )

    def validated(self, tol=FRAME_TOL):
        """Check the orthonormality constraints and polish them by Gram-Schmidt."""
        if max(self.residuals()) > tol:
            raise FrameError(f"frame not orthonormal (residuals {self.residuals()})")
        n1, n2 = self.dims
        G = _block_gram(self.gram1, self.gram2)
        a = np.concatenate([self.u1, self.v1, [self.s]])
        b = np.concatenate([self.u2, self.v2, [0.0]])
        b = b / np.sqrt(b @ G @ b)
        a = a - (a @ G @ b) * b
        a = a / np.sqrt(a @ G @ a)
        return DoublyWarpedFrame(
            a[:n1], b[:n1], a[n1:n1 + n2], b[n1:n1 + n2], a[-1],
            self.gram1, self.gram2, self.K1, self.K2,
        )

    def plane(self):
        """Product-chart vectors ``(a, b)`` spanning the plane."""
        return (
            np.concatenate([self.u1, self.v1, [self.s]]),
            np.concatenate([self.u2, self.v2, [0.0]]),
        )


def _block_gram(gram1, gram2):
    n1, n2 = len(gram1), len(gram2)
    G = np.zeros((n1 + n2 + 1, n1 + n2 + 1))
    G[:n1, :n1] = gram1
    G[n1:n1 + n2, n1:n1 + n2] = gram2
    G[-1, -1] = 1.0
    return G


def frame_from_plane(a, b, gram1, gram2, K1=None, K2=None):
    """Rewrite an arbitrary plane of the product chart as a :class:`DoublyWarpedFrame`.

    Every 2-plane contains a unit vector with no ``d/dt`` part; that vector
    becomes ``u2 + v2``.  ``s`` is made non-negative.
    """
    gram1 = np.atleast_2d(np.asarray(gram1, float))
    gram2 = np.atleast_2d(np.asarray(gram2, float))
    n1, n2 = len(gram1), len(gram2)
    G = _block_gram(gram1, gram2)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if abs(a[-1]) < abs(b[-1]):
        a, b = b, a
    if a[-1] != 0.0:
        b = b - (b[-1] / a[-1]) * a
        b[-1] = 0.0
    nb = b @ G @ b
    if nb <= 0:
        raise FrameError("degenerate plane")
    b = b / np.sqrt(nb)
    a_norm = a @ G @ a
    a = a - (a @ G @ b) * b
    na = a @ G @ a
    if na <= 1e-14 * a_norm:
        raise FrameError("degenerate plane")
    a = a / np.sqrt(na)
    if a[-1] < 0:
        a = -a
    return DoublyWarpedFrame(
        a[:n1], b[:n1], a[n1:n1 + n2], b[n1:n1 + n2], a[-1], gram1, gram2, K1, K2
    )


def random_frame(rng, gram1, gram2, K1=None, K2=None):
    n = len(np.atleast_2d(gram1)) + len(np.atleast_2d(gram2)) + 1
    return frame_from_plane(rng.normal(size=n), rng.normal(size=n), gram1, gram2, K1, K2)


def convex_weights(frame):
    """Weights of the five terms; they sum to ``1 - (<u1,u2> + <v1,v2>)^2 = 1``.

    A 1-dimensional factor gets an exactly zero curvature weight.
    """
    f = frame.validated()
    n1, n2 = f.dims
    s2 = f.s * f.s
    uu1, uu2, uu12 = f.ip1(f.u1, f.u1), f.ip1(f.u2, f.u2), f.ip1(f.u1, f.u2)
    vv1, vv2, vv12 = f.ip2(f.v1, f.v1), f.ip2(f.v2, f.v2), f.ip2(f.v1, f.v2)
    w_uu = uu1 * uu2 - uu12 * uu12 if n1 > 1 else 0.0
    w_vv = vv1 * vv2 - vv12 * vv12 if n2 > 1 else 0.0
    return np.array(
        [
            s2 * uu2,
            s2 * vv2,
            w_uu,
            w_vv,
            uu1 * vv2 + vv1 * uu2 - 2.0 * uu12 * vv12,
        ]
    )


# below this weight a factor pair spans less than a 2-plane
_DEGENERATE_WEIGHT = 1e-13


def doubly_warped_K(phi1, phi2, t, frame):
    """Sectional curvature of ``phi1^2 sigma1 + phi2^2 sigma2 + dt^2`` on ``frame``."""
    w = convex_weights(frame)
    f1, f1p, f1pp = (float(v) for v in phi1.derivs(t))
    f2, f2p, f2pp = (float(v) for v in phi2.derivs(t))
    _check_positive(f1, f2)
    K = w[0] * (-f1pp / f1) + w[1] * (-f2pp / f2) + w[4] * (-(f1p * f2p) / (f1 * f2))
    if w[2] > _DEGENERATE_WEIGHT:
        if frame.K1 is None:
            raise FrameError("K1 required for a non-degenerate u-pair")
        K += w[2] * (frame.K1 - f1p * f1p) / (f1 * f1)
    if w[3] > _DEGENERATE_WEIGHT:
        if frame.K2 is None:
            raise FrameError("K2 required for a non-degenerate v-pair")
        K += w[3] * (frame.K2 - f2p * f2p) / (f2 * f2)
    return float(K)


def single_warp_K(phi, t, s, u, v, K_sigma, gram=None):
    """Bishop-O'Neill curvature of ``phi^2 sigma + dt^2`` on ``{u + s d/dt, v}``.

    ``gram`` is ``rho`` restricted to the fibre (default: identity, i.e. ``u``
    and ``v`` are already given in a rho-orthonormal basis).
    """
    u = np.atleast_1d(np.asarray(u, float))
    v = np.atleast_1d(np.asarray(v, float))
    G = np.eye(len(u)) if gram is None else np.atleast_2d(np.asarray(gram, float))
    uu, vv, uv = u @ G @ u, v @ G @ v, u @ G @ v
    if max(abs(s * s + uu - 1.0), abs(vv - 1.0), abs(uv)) > FRAME_TOL:
        raise FrameError("frame not orthonormal")
    f, fp, fpp = (float(x) for x in phi.derivs(t))
    _check_positive(f)
    return float(-(fpp / f) * s * s + ((K_sigma - fp * fp) / (f * f)) * uu)


# -- appendix structure: connection and curvature operator -----------------


def _split(point, n1, n2):
    point = np.asarray(point, float)
    return point[:n1], point[n1:n1 + n2], float(point[-1])


def warped_connection(sigma1, sigma2, phi1, phi2, point, X, Y):
    """Covariant derivative ``nabla_X Y`` of constant-coefficient fields.

    ``X`` and ``Y`` are tagged vectors ``("d", None)``, ``("u", vec)`` or
    ``("v", vec)``; the result is a product-chart vector.  The factor
    connections come from the chart engine on ``sigma1`` and ``sigma2``.
    """
    n1, n2 = sigma1.dim, sigma2.dim
    x1, x2, t = _split(point, n1, n2)
    f1, f1p, _ = (float(v) for v in phi1.derivs(t))
    f2, f2p, _ = (float(v) for v in phi2.derivs(t))
    out = np.zeros(n1 + n2 + 1)
    (tx, x), (ty, y) = X, Y
    tags = {tx, ty}
    if not tags <= {"d", "u", "v"}:
        raise ValueError(f"unknown tag combination {tx!r}, {ty!r}")
    if tx == ty == "d":
        return out
    if tags == {"d", "u"}:
        vec = x if tx == "u" else y
        out[:n1] = (f1p / f1) * np.asarray(vec, float)
        return out
    if tags == {"d", "v"}:
        vec = x if tx == "v" else y
        out[n1:n1 + n2] = (f2p / f2) * np.asarray(vec, float)
        return out
    if tags == {"u", "v"}:
        return out
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if tx == "u":
        sig = sigma1(x1)
        # <x, y>_rho = phi1^2 sigma1(x, y)
        out[-1] = -(f1p / f1) * (f1 * f1) * (x @ sig @ y)
        out[:n1] = np.einsum("kij,i,j->k", christoffel_at(sigma1, x1), x, y)
    else:
        sig = sigma2(x2)
        out[-1] = -(f2p / f2) * (f2 * f2) * (x @ sig @ y)
        out[n1:n1 + n2] = np.einsum("kij,i,j->k", christoffel_at(sigma2, x2), x, y)
    return out


@dataclass(frozen=True)
class CurvatureImage:
    """``R(omega) = coefficient * omega`` for a basis 2-vector of type ``kind``."""

    kind: str
    coefficient: float


def warped_curvature_images(phi1, phi2, t, kind, K1=None, K2=None):
    """Eigen-images of the curvature operator on the basic 2-vector types.

    ``kind`` is one of ``"du"``, ``"dv"``, ``"uv"``, ``"uu"``, ``"vv"``.  For
    the factor types the factor operator is taken to act on the given plane
    by its sectional curvature ``K1``/``K2`` (exact for 2-dimensional
    factors and for constant-curvature factors).
    """
    f1, f1p, f1pp = (float(v) for v in phi1.derivs(t))
    f2, f2p, f2pp = (float(v) for v in phi2.derivs(t))
    if kind == "du":
        c = -f1pp / f1
    elif kind == "dv":
        c = -f2pp / f2
    elif kind == "uv":
        c = -(f1p * f2p) / (f1 * f2)
    elif kind == "uu":
        if K1 is None:
            raise ValueError("K1 required for kind 'uu'")
        c = (K1 - f1p * f1p) / (f1 * f1)
    elif kind == "vv":
        if K2 is None:
            raise ValueError("K2 required for kind 'vv'")
        c = (K2 - f2p * f2p) / (f2 * f2)
    else:
        raise ValueError(f"unknown tag {kind!r}")
    return CurvatureImage(kind, float(c))


# -- assembly --------------------------------------------------------------


def assemble_doubly_warped(sigma1, sigma2, phi1, phi2, t_domain, dt_coefficient=1.0, name=""):
    """Product-chart :class:`ChartMetric` for ``phi1^2 sigma1 + phi2^2 sigma2 + c dt^2``.

    Coordinates are ``(x1, x2, t)`` with ``t`` last.
    """
    t_lo, t_hi = (float(v) for v in t_domain)
    for phi in (phi1, phi2):
        lo, hi = phi.domain
        if t_lo < lo or t_hi > hi:
            raise GeometryError(
                f"domain mismatch: t-domain {t_domain} not inside warp domain {phi.domain}"
            )
    n1, n2 = sigma1.dim, sigma2.dim
    n = n1 + n2 + 1
    c = float(dt_coefficient)

    def comps(x):
        t = x[-1]
        w1 = phi1(t) ** 2
        w2 = phi2(t) ** 2
        s1 = sigma1.components(x[:n1])
        s2 = sigma2.components(x[n1:n1 + n2])
        g = [[0.0] * n for _ in range(n)]
        for i in range(n1):
            for j in range(n1):
                g[i][j] = w1 * s1[i][j]
        for i in range(n2):
            for j in range(n2):
                g[n1 + i][n1 + j] = w2 * s2[i][j]
        g[-1][-1] = c
        return g

    meta = dict(kind="doubly_warped", sigma1=sigma1, sigma2=sigma2, phi1=phi1, phi2=phi2,
                dt_coefficient=c)
    return ChartMetric(
        n,
        comps,
        lower=sigma1.lower + sigma2.lower + (t_lo,),
        upper=sigma1.upper + sigma2.upper + (t_hi,),
        periodic=sigma1.periodic + sigma2.periodic + (False,),
        name=name or f"{phi1.name}^2 {sigma1.name} + {phi2.name}^2 {sigma2.name} + dt^2",
        meta=meta,
    )


def factor_curvature(sigma, x, a, b):
    """Sectional curvature of a factor metric, or ``None`` for a 1-D factor."""
    if sigma.dim < 2:
        return None
    return float(sectional_at(sigma, TangentPlane(np.asarray(x, float), np.asarray(a, float), np.asarray(b, float))))


def frame_at(metric, point, a, b, K1=None, K2=None):
    """Build the frame for plane ``(a, b)`` at ``point`` of an assembled metric.

    Factor curvatures default to the chart engine on the factor metrics
    whenever the projected pair spans a 2-plane.
    """
    m = metric.meta
    s1, s2 = m["sigma1"], m["sigma2"]
    n1, n2 = s1.dim, s2.dim
    x1, x2, t = _split(point, n1, n2)
    c = m["dt_coefficient"]
    f1 = float(m["phi1"].derivs(t)[0])
    f2 = float(m["phi2"].derivs(t)[0])
    # rescale d/dt to unit length so the frame lives in the orthonormal t-direction
    a = np.asarray(a, float).copy()
    b = np.asarray(b, float).copy()
    a[-1] *= np.sqrt(c)
    b[-1] *= np.sqrt(c)
    frame = frame_from_plane(a, b, f1 * f1 * s1(x1), f2 * f2 * s2(x2))
    if K1 is None and n1 > 1:
        w = convex_weights(frame)[2]
        K1 = factor_curvature(s1, x1, frame.u1, frame.u2) if w > _DEGENERATE_WEIGHT else None
    if K2 is None and n2 > 1:
        w = convex_weights(frame)[3]
        K2 = factor_curvature(s2, x2, frame.v1, frame.v2) if w > _DEGENERATE_WEIGHT else None
    frame.K1, frame.K2 = K1, K2
    return frame


def compare_with_engine(metric, n_frames, rng):
    """Closed-form versus chart-engine sectional curvature on random planes.

    Points are uniform in a bounded box of the chart; planes are Gaussian
    in chart coordinates.  Returns rows ``(point, K_closed, K_engine)``.
    """
    m = metric.meta
    if m.get("kind") != "doubly_warped" or m.get("dt_coefficient") != 1.0:
        raise ValueError("needs an assembled doubly warped metric with unit dt^2")
    lows, highs = [], []
    for lo, hi, p in zip(metric.lower, metric.upper, metric.periodic):
        if p:
            lows.append(lo), highs.append(hi)
        elif np.isfinite(lo) and np.isfinite(hi):
            span = hi - lo
            lows.append(lo + 0.1 * span), highs.append(hi - 0.1 * span)
        elif np.isfinite(lo):
            lows.append(lo + 0.5), highs.append(lo + 2.0)
        elif np.isfinite(hi):
            lows.append(hi - 2.0), highs.append(hi - 0.5)
        else:
            lows.append(-1.0), highs.append(1.0)
    pts = rng.uniform(lows, highs, size=(n_frames, metric.dim))
    A = rng.normal(size=(n_frames, metric.dim))
    B = rng.normal(size=(n_frames, metric.dim))
    K_engine = sectional_curvatures(metric, pts, A, B)
    rows = []
    for p, a, b, ke in zip(pts, A, B, K_engine):
        frame = frame_at(metric, p, a, b)
        kc = doubly_warped_K(m["phi1"], m["phi2"], p[-1], frame)
        rows.append((p, kc, float(ke)))
    return rows
