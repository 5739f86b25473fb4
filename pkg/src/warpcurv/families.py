"""Explicit metric families on ``N x S^1 x (0, 6)``.

Coordinates are ``(x_1 .. x_k, u, t)`` where ``x`` is a chart on the factor
``N`` (metric ``sigma_N``), ``u`` is the circle coordinate and ``t`` the
normal parameter.  With ``alpha = r / 6``:

* ``rho_r = cosh^2(alpha t) sigma_N + sinh^2(alpha t) du^2 + alpha^2 dt^2``
* ``lambda_r`` replaces ``rho_r`` on [2, 5] by four branches that open the
  circle factor from ``sinh`` to ``cosh`` (``delta1``), undo a twist ``f``
  of ``N x S^1`` (``delta2``) and close it again (``delta3``).
* ``(lambda_r)_s`` deforms ``lambda_r`` (s = 0) to ``rho_r`` (s = 1): first
  by an isotopy of the twist to the identity, then through ``eta``.

The cut along ``t = 3`` is kept inside one chart: branch 3 is written in
the coordinates that branch 2 sees after gluing by ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from .chart import ChartMetric, GeometryError, DegenerateMetricError
from .models import flat_circle
from .profiles import SmoothStep, delta_profiles, eta_profile, unit_step
from .warp import WarpFunction, assemble_doubly_warped

BREAKPOINTS = (2.0, 3.0, 4.0, 5.0)
T_MAX = 6.0


class GluingError(GeometryError):
    pass


# -- twists ----------------------------------------------------------------


@dataclass(frozen=True)
class GluingMap:
    """Diffeomorphism ``F`` of the ``N x S^1`` chart (coordinates ``(x, u)``).

    ``forward``, ``inverse`` and ``jacobian`` take a list of coordinates
    (plain arrays or jets); ``jacobian`` returns ``J[a][b] = dF_a / dy_b``.
    """

    dim: int
    forward: Callable
    inverse: Callable
    jacobian: Callable
    support: str = "everywhere"
    name: str = ""

    def roundtrip_error(self, points):
        y = [np.asarray(points, float)[..., k] for k in range(self.dim)]
        back = self.inverse(self.forward(y))
        return float(max(np.max(np.abs(np.asarray(b) - yk)) for b, yk in zip(back, y)))

    def jacobian_error(self, points, h=1e-6):
        points = np.asarray(points, float)
        y = [points[..., k] for k in range(self.dim)]
        J = self.jacobian(y)
        err = 0.0
        for b in range(self.dim):
            yp = [c.copy() for c in y]
            ym = [c.copy() for c in y]
            yp[b] = yp[b] + h
            ym[b] = ym[b] - h
            fp, fm = self.forward(yp), self.forward(ym)
            for a in range(self.dim):
                num = (np.asarray(fp[a]) - np.asarray(fm[a])) / (2 * h)
                err = max(err, float(np.max(np.abs(num - np.asarray(J[a][b]) - 0 * num))))
        return err


def _identity_jac(m):
    return lambda y: [[1.0 if a == b else 0.0 for b in range(m)] for a in range(m)]


def identity_twist(dim_n):
    m = dim_n + 1
    return GluingMap(m, lambda y: list(y), lambda y: list(y), _identity_jac(m), "nowhere", "identity")


def rotation_twist(dim_n, angle):
    """Rigid rotation of the circle factor, ``(x, u) -> (x, u + angle)``."""
    m = dim_n + 1
    return GluingMap(
        m,
        lambda y: list(y[:-1]) + [y[-1] + angle],
        lambda y: list(y[:-1]) + [y[-1] - angle],
        _identity_jac(m),
        "everywhere",
        f"rotation({angle:g})",
    )


def _ball_profile(q):
    """``exp(1 - 1/(1 - q))`` for ``q < 1`` (equals 1 at 0), zero beyond; jet-aware."""
    qv = jets.value(q)
    inside = qv < 1.0
    qc = jets.where(inside, q, 0.0)
    val = np.exp(1.0 - 1.0 / (1.0 - qc))
    return jets.where(inside, val, 0.0)


def _ball_profile_d(q):
    qv = jets.value(q)
    inside = qv < 1.0
    qc = jets.where(inside, q, 0.0)
    one_minus = 1.0 - qc
    val = -np.exp(1.0 - 1.0 / one_minus) / (one_minus * one_minus)
    return jets.where(inside, val, 0.0)


def bump_rotation_twist(dim_n, angle, center, radius):
    """Rotate the circle by ``angle * b(|x - center| / radius)``.

    ``b`` is a smooth bump equal to 1 at the centre and vanishing outside
    the ball, so the twist is the identity away from a small region of
    ``N`` (a Dehn-twist-like model).
    """
    center = np.asarray(center, float)
    if center.shape != (dim_n,):
        raise ValueError("center must be a point of N")
    m = dim_n + 1
    r2 = float(radius) ** 2

    def q_of(y):
        q = 0.0
        for i in range(dim_n):
            d = y[i] - center[i]
            q = q + d * d
        return q / r2

    def theta(y):
        return angle * _ball_profile(q_of(y))

    def forward(y):
        return list(y[:-1]) + [y[-1] + theta(y)]

    def inverse(y):
        return list(y[:-1]) + [y[-1] - theta(y)]

    def jacobian(y):
        dq = angle * _ball_profile_d(q_of(y))
        J = _identity_jac(m)(y)
        for i in range(dim_n):
            J[m - 1][i] = dq * (2.0 * (y[i] - center[i]) / r2)
        return J

    return GluingMap(m, forward, inverse, jacobian, f"ball({center.tolist()}, {radius:g})",
                     f"bump_rotation({angle:g})")


@dataclass(frozen=True)
class TwistIsotopy:
    """``s -> f_s`` on [0, 1/2] scaling a twist's angle from 1 down to 0.

    Constant near both ends: ``f_s = f`` for ``s <= margin`` and the identity
    for ``s >= 1/2 - margin``.
    """

    factory: Callable  # angle_scale -> GluingMap
    margin: float = 0.05

    def __call__(self, s):
        if not 0.0 <= s <= 0.5:
            raise ValueError("isotopy parameter must lie in [0, 1/2]")
        scale = 1.0 - float(SmoothStep(0.0, 0.5, 0.0, 1.0, self.margin)(s))
        return self.factory(scale)


def make_twist(dim_n, kind="identity", angle=0.0, center=None, radius=0.5):
    if kind == "identity":
        return identity_twist(dim_n)
    if kind == "rotation":
        return rotation_twist(dim_n, angle)
    if kind == "bump_rotation":
        if center is None:
            center = np.zeros(dim_n)
        return bump_rotation_twist(dim_n, angle, center, radius)
    raise ValueError(f"unknown twist kind {kind!r}")


def make_isotopy(dim_n, kind="identity", angle=0.0, center=None, radius=0.5, margin=0.05):
    return TwistIsotopy(lambda scale: make_twist(dim_n, kind, angle * scale, center, radius), margin)


# -- building blocks ---------------------------------------------------------


def _factor_block(sigma_N, xs):
    """``sigma_N + du^2`` on the ``(x, u)`` coordinates."""
    k = sigma_N.dim
    s = sigma_N.components(xs[:k])
    H = [[0.0] * (k + 1) for _ in range(k + 1)]
    for i in range(k):
        for j in range(k):
            H[i][j] = s[i][j]
    H[k][k] = 1.0
    return H


def _pullback(J, H):
    m = len(J)
    out = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            acc = 0.0
            for a in range(m):
                if _is_zero(J[a][i]):
                    continue
                for b in range(m):
                    if _is_zero(J[b][j]) or _is_zero(H[a][b]):
                        continue
                    acc = acc + J[a][i] * H[a][b] * J[b][j]
            out[i][j] = out[j][i] = acc
    return out


def _is_zero(v):
    return not isinstance(v, jets.Jet) and np.all(np.asarray(v) == 0.0)


def pulled_back_block(sigma_N, gluing, ys):
    """``f^*(sigma_N + du^2)`` at the ``(x, u)`` coordinates ``ys``."""
    return _pullback(gluing.jacobian(ys), _factor_block(sigma_N, gluing.forward(ys)))


def _assemble(k, A, B, alpha, block=None):
    """``A sigma_N + B du^2 + alpha^2 dt^2`` (or ``A * block`` on ``N x S^1``)."""
    n = k + 2
    g = [[0.0] * n for _ in range(n)]
    if block is not None:
        for i in range(k + 1):
            for j in range(k + 1):
                g[i][j] = A * block[i][j]
    else:
        raise ValueError("block required")
    if B is not None:
        g[k][k] = B
    g[n - 1][n - 1] = alpha * alpha
    return g


def _circle_coefficient(alpha, t, c):
    """``((e^{alpha t} + c e^{-alpha t}) / 2)^2``.

    Written as ``sinh + (1 + c) e^{-alpha t} / 2`` so that ``c = -1`` gives the
    tube coefficient bit for bit.
    """
    return (np.sinh(alpha * t) + (1.0 + c) * 0.5 * np.exp(-alpha * t)) ** 2


# -- piecewise metrics -------------------------------------------------------


@dataclass
class PiecewiseWarpMetric:
    """Five branch formulas on [0,2], [2,3], [3,4], [4,5], [5,6].

    ``branches[k](coords)`` returns metric components and is defined for all
    ``t`` (it is only *used* on its own interval).  ``gluing`` identifies the
    ``t = 3`` faces of branches 2 and 3.
    """

    branches: list
    alpha: float
    sigma_N: ChartMetric
    gluing: GluingMap | None = None
    label: str = ""
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.sigma_N.dim + 2

    def _domain(self):
        s = self.sigma_N
        return (
            s.lower + (0.0, 0.0),
            s.upper + (2.0 * np.pi, T_MAX),
            s.periodic + (True, False),
        )

    def branch_metric(self, k):
        lower, upper, periodic = self._domain()
        return ChartMetric(self.dim, self.branches[k], lower, upper, periodic,
                           name=f"{self.label}[branch {k + 1}]")

    @property
    def chart(self):
        lower, upper, periodic = self._domain()
        edges = (0.0,) + BREAKPOINTS + (T_MAX,)
        branches = self.branches

        def comps(x):
            t = np.asarray(jets.value(x[-1]))
            idx = np.clip(np.searchsorted(np.asarray(edges[1:-1]), t, side="right"), 0, 4)
            present = np.unique(idx)
            if present.size == 1:
                return branches[int(present[0])](x)
            out = None
            for k in present:
                g = branches[int(k)](x)
                mask = idx == k
                if out is None:
                    out = g
                    continue
                out = [[jets.where(mask, g[i][j], out[i][j]) for j in range(len(g))] for i in range(len(g))]
            return out

        return ChartMetric(self.dim, comps, lower, upper, periodic, name=self.label,
                           meta=dict(kind="piecewise", family=self))

    def __call__(self, points):
        return self.chart(points)


def build_tube(sigma_N, r):
    """``cosh^2(t) sigma_N + sinh^2(t) du^2 + dt^2`` on ``N x S^1 x (0, r)``."""
    return assemble_doubly_warped(
        sigma_N, flat_circle(), WarpFunction.cosh(), WarpFunction.sinh(), (0.0, r),
        name=f"tube(r={r:g})",
    )


def _alpha_of(r):
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    return r / 6.0


def _rho_branch(sigma_N, alpha):
    k = sigma_N.dim

    def comps(x):
        t = x[-1]
        block = _factor_block(sigma_N, x[:k + 1])
        return _assemble(k, np.cosh(alpha * t) ** 2, np.sinh(alpha * t) ** 2, alpha, block)

    return comps


def build_rho_r(r, sigma_N):
    """The tube metric in the rescaled parameter ``t in (0, 6)``; isometric to ``rho`` on (0, r)."""
    alpha = _alpha_of(r)
    k = sigma_N.dim
    comps = _rho_branch(sigma_N, alpha)
    return ChartMetric(
        k + 2, comps,
        lower=sigma_N.lower + (0.0, 0.0),
        upper=sigma_N.upper + (2.0 * np.pi, T_MAX),
        periodic=sigma_N.periodic + (True, False),
        name=f"rho_r(r={r:g})",
        meta=dict(kind="rho_r", r=r, alpha=alpha, sigma_N=sigma_N, sigma1=sigma_N,
                  sigma2=flat_circle(), phi1=WarpFunction.cosh().rescaled(alpha),
                  phi2=WarpFunction.sinh().rescaled(alpha), dt_coefficient=alpha * alpha),
    )


def _open_branch(sigma_N, alpha, coeff):
    """``cosh^2 sigma_N + ((e^{at} + coeff(t) e^{-at})/2)^2 du^2 + a^2 dt^2``."""
    k = sigma_N.dim

    def comps(x):
        t = x[-1]
        block = _factor_block(sigma_N, x[:k + 1])
        return _assemble(k, np.cosh(alpha * t) ** 2, _circle_coefficient(alpha, t, coeff(t)), alpha, block)

    return comps


def _twist_branch(sigma_N, alpha, gluing, delta2):
    k = sigma_N.dim

    def comps(x):
        t = x[-1]
        ys = x[:k + 1]
        plain = _factor_block(sigma_N, ys)
        if gluing is None or gluing.name == "identity":
            block = plain
        else:
            twisted = pulled_back_block(sigma_N, gluing, ys)
            d = delta2(t)
            block = [[(1.0 - d) * twisted[i][j] + d * plain[i][j] for j in range(k + 1)]
                     for i in range(k + 1)]
        return _assemble(k, np.cosh(alpha * t) ** 2, None, alpha, block)

    return comps


def build_lambda_r(r, sigma_N, f=None, margin=0.1, deltas=None, check=True):
    """The twisted family ``lambda_r``; ``f`` defaults to the identity twist."""
    alpha = _alpha_of(r)
    if f is None:
        f = identity_twist(sigma_N.dim)
    d1, d2, d3 = delta_profiles(margin) if deltas is None else deltas
    rho = _rho_branch(sigma_N, alpha)
    metric = PiecewiseWarpMetric(
        branches=[rho, _open_branch(sigma_N, alpha, d1), _twist_branch(sigma_N, alpha, f, d2),
                  _open_branch(sigma_N, alpha, d3), rho],
        alpha=alpha, sigma_N=sigma_N, gluing=f,
        label=f"lambda_r(r={r:g}, f={f.name})",
        params=dict(r=r, margin=margin, twist=f.name),
    )
    if f.name == "identity":
        metric.params["circle_coefficients"] = [_const(-1.0), d1, _const(1.0), d3, _const(-1.0)]
    if check:
        _check_gluing(metric)
    return metric


def build_lambda_r_s(r, s, isotopy, sigma_N, margin=0.1, eta_margin=0.05, check=True):
    """The two-stage deformation ``(lambda_r)_s`` for ``s`` in [0, 1]."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    f_end = isotopy(0.5)
    probe = _probe_points(sigma_N, 5)
    if f_end.name != "identity" and f_end.roundtrip_error(probe) > 1e-12:
        raise ValueError("isotopy endpoint violation")
    ys = [probe[..., i] for i in range(f_end.dim)]
    moved = f_end.forward(ys)
    if max(float(np.max(np.abs(np.asarray(a) - b))) for a, b in zip(moved, ys)) > 1e-12:
        raise ValueError("isotopy endpoint violation: f_{1/2} is not the identity")
    if s <= 0.5:
        metric = build_lambda_r(r, sigma_N, isotopy(s), margin, check=check)
        metric.label = f"lambda_r_s(r={r:g}, s={s:g})"
        metric.params.update(s=s)
        return metric
    alpha = _alpha_of(r)
    d1, _, d3 = delta_profiles(margin)
    eta = float(eta_profile(eta_margin)(s))
    rho = _rho_branch(sigma_N, alpha)
    coeffs = [
        _const(-1.0),
        lambda t: eta * (1.0 + d1(t)) - 1.0,
        _const(2.0 * eta - 1.0),
        lambda t: eta * (1.0 + d3(t)) - 1.0,
        _const(-1.0),
    ]
    branches = [rho] + [_open_branch(sigma_N, alpha, c) for c in coeffs[1:4]] + [rho]
    return PiecewiseWarpMetric(
        branches, alpha, sigma_N, identity_twist(sigma_N.dim),
        label=f"lambda_r_s(r={r:g}, s={s:g})",
        params=dict(r=r, s=s, margin=margin, eta=eta, circle_coefficients=coeffs),
    )


def _const(c):
    return lambda t: c + 0.0 * t


# -- smoothness across breakpoints -------------------------------------------


def _probe_points(sigma_N, count, seed=0):
    """Deterministic ``(x, u)`` samples inside the factor chart."""
    rng = np.random.default_rng(seed)
    k = sigma_N.dim
    pts = np.empty((count, k + 1))
    for i in range(k):
        lo, hi = sigma_N.lower[i], sigma_N.upper[i]
        if not np.isfinite(lo) and not np.isfinite(hi):
            lo, hi = -1.0, 1.0
        elif not np.isfinite(hi):
            lo, hi = lo + 0.5, lo + 2.0
        elif not np.isfinite(lo):
            lo, hi = hi - 2.0, hi - 0.5
        else:
            span = hi - lo
            lo, hi = lo + 0.05 * span, hi - 0.05 * span
        pts[:, i] = rng.uniform(lo, hi, count)
    pts[:, k] = rng.uniform(0.0, 2.0 * np.pi, count)
    return pts


@dataclass
class SmoothnessReport:
    order: int
    breakpoints: list
    tolerances: dict

    @property
    def passed(self):
        return all(b["passed"] for b in self.breakpoints)

    def failing(self):
        return [b["t"] for b in self.breakpoints if not b["passed"]]

    def to_dict(self):
        return dict(order=self.order, passed=self.passed, tolerances=self.tolerances,
                    breakpoints=self.breakpoints)


def _t_jets(comps, ys, t, k):
    """Metric and its first two t-derivatives at ``(ys, t)``."""
    batch = np.shape(ys[0])
    (tj,) = jets.seed(np.full(batch + (1,), t), order=2)
    g = comps(list(ys) + [tj])
    n = len(g)
    out = np.zeros((3,) + batch + (n, n))
    for i in range(n):
        for j in range(n):
            e = g[i][j]
            if isinstance(e, jets.Jet):
                out[0, ..., i, j] = e.val
                out[1, ..., i, j] = e.grad[..., 0]
                out[2, ..., i, j] = e.hess[..., 0, 0]
            else:
                out[0, ..., i, j] = e
    return out


def _glued_left(metric, comps):
    """Branch-2 components seen through the gluing map (pullback by ``f``)."""
    f = metric.gluing
    k = metric.sigma_N.dim

    def pulled(x):
        ys, t = x[:k + 1], x[-1]
        g = comps(list(f.forward(ys)) + [t])
        J = f.jacobian(ys)
        n = k + 2
        Jx = [[J[a][b] if a <= k and b <= k else (1.0 if a == b else 0.0) for b in range(n)]
              for a in range(n)]
        return _pullback(Jx, g)

    return pulled


def breakpoint_smoothness(metric, order=2, points=None, tol_low=1e-8, tol_high=1e-6):
    """Compare adjacent branches (through the gluing at ``t = 3``) up to ``order`` t-derivatives.

    Mismatches are relative to ``max(1, |g|)`` at each order.  Never raises
    on mismatch; the report carries the verdict.
    """
    if points is None:
        points = _probe_points(metric.sigma_N, 6)
    points = np.asarray(points, float)
    k = metric.sigma_N.dim
    ys = [points[:, i] for i in range(k + 1)]
    rows = []
    for idx, tb in enumerate(BREAKPOINTS):
        left = metric.branches[idx]
        right = metric.branches[idx + 1]
        if tb == 3.0 and metric.gluing is not None and metric.gluing.name != "identity":
            left = _glued_left(metric, left)
        L = _t_jets(left, ys, tb, k)
        R = _t_jets(right, ys, tb, k)
        mism = []
        for o in range(order + 1):
            scale = np.maximum(1.0, np.max(np.abs(L[o]), axis=(-2, -1)))
            mism.append(float(np.max(np.max(np.abs(L[o] - R[o]), axis=(-2, -1)) / scale)))
        tols = [tol_low if o < 2 else tol_high for o in range(order + 1)]
        rows.append(dict(
            t=tb,
            mismatch=mism,
            passed=all(m <= tl for m, tl in zip(mism, tols)),
            first_failing_order=next((o for o, (m, tl) in enumerate(zip(mism, tols)) if m > tl), None),
        ))
    return SmoothnessReport(order, rows, dict(orders_0_1=tol_low, order_2=tol_high))


def _check_gluing(metric):
    report = breakpoint_smoothness(metric, order=0, points=_probe_points(metric.sigma_N, 3))
    for row in report.breakpoints:
        if not row["passed"]:
            raise GluingError(f"branches disagree at t = {row['t']:g} (mismatch {row['mismatch'][0]:.2e})")


def positive_definite_on(metric, points):
    """True when the metric is positive definite at every row of ``points``."""
    g = metric(points)
    try:
        np.linalg.cholesky(g)
        return True
    except np.linalg.LinAlgError:
        return False
