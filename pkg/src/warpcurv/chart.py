"""Chart-based curvature engine.

Everything here starts from raw metric components ``g_ij(x)`` on a single
coordinate chart and produces Christoffel symbols, the fully lowered
Riemann tensor, sectional curvatures and the curvature operator on
2-vectors.  It is deliberately generic so it can serve as an independent
check on the closed-form warped-product formulas in :mod:`warpcurv.warp`.

Curvature sign convention
-------------------------
The (3,1) tensor is ``R_ab c = nabla_b nabla_a c - nabla_a nabla_b c -
nabla_[b,a] c`` and the stored 4-tensor is ``R[a, b, c, d] = <R_ab c, d>``.
With this choice ``<R(a^b), a^b> = R[a, b, a, b]`` is the usual sectional
curvature, so the unit sphere gives +1.  In terms of the textbook operator
``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]`` we have ``R_ab = R(b, a)``.

All functions accept a single point of shape ``(n,)`` or a batch of shape
``(..., n)`` and return arrays with the same leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import jets

__all__ = [
    "GeometryError",
    "DegenerateMetricError",
    "DegeneratePlaneError",
    "StencilOutOfDomainError",
    "DomainError",
    "ChartMetric",
    "TangentPlane",
    "CurvatureTensor4",
    "CurvatureOperator",
    "metric_derivatives",
    "christoffel_at",
    "riemann_at",
    "sectional_at",
    "sectional_curvatures",
    "curvature_operator_at",
    "koszul_residual",
    "orthonormal_frame",
    "wedge",
]


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class DegenerateMetricError(GeometryError):
    def __init__(self, point, min_eigenvalue):
        self.point = np.asarray(point)
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"degenerate metric at {self.point.tolist()} "
            f"(smallest eigenvalue {self.min_eigenvalue:.3e})"
        )


class DegeneratePlaneError(GeometryError):
    pass


class StencilOutOfDomainError(GeometryError):
    pass


class DomainError(GeometryError):
    pass


FORWARD = "forward"
CENTRAL = "central"


@dataclass(frozen=True)
class ChartMetric:
    """A Riemannian metric on an axis-aligned coordinate box.

    ``components(x)`` receives a list of ``n`` coordinates (plain arrays or
    :class:`~warpcurv.jets.Jet` objects, all of the same batch shape) and
    returns an ``n x n`` nested sequence of entries.  Entries may be plain
    numbers for constant components.  Only the upper triangle is read; the
    assembled matrix is symmetric by construction.

    With ``scheme="forward"`` derivatives come from jets and ``components``
    must be written with numpy ufuncs.  ``scheme="central"`` treats the
    metric as a black box and uses finite differences.
    """

    dim: int
    components: Callable[[Sequence], Sequence[Sequence]]
    lower: tuple = None
    upper: tuple = None
    periodic: tuple = None
    scheme: str = FORWARD
    step: float | None = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.dim
        lower = (-np.inf,) * n if self.lower is None else tuple(float(v) for v in self.lower)
        upper = (np.inf,) * n if self.upper is None else tuple(float(v) for v in self.upper)
        periodic = (False,) * n if self.periodic is None else tuple(bool(p) for p in self.periodic)
        if not (len(lower) == len(upper) == len(periodic) == n):
            raise ValueError("domain description does not match dim")
        for lo, hi, p in zip(lower, upper, periodic):
            if not lo < hi:
                raise ValueError("empty domain interval")
            if p and not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError("periodic axes need a finite interval")
        if self.scheme not in (FORWARD, CENTRAL):
            raise ValueError(f"unknown derivative scheme {self.scheme!r}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "periodic", periodic)

    @property
    def periods(self):
        return np.array(
            [hi - lo if p else np.inf for lo, hi, p in zip(self.lower, self.upper, self.periodic)]
        )

    def with_scheme(self, scheme, step=None):
        return ChartMetric(
            self.dim, self.components, self.lower, self.upper, self.periodic,
            scheme, step, self.name, dict(self.meta),
        )

    def check_domain(self, points):
        points = np.asarray(points, dtype=float)
        for k in range(self.dim):
            if self.periodic[k]:
                continue
            x = points[..., k]
            if np.any(x < self.lower[k]) or np.any(x > self.upper[k]):
                raise DomainError(
                    f"coordinate {k} outside [{self.lower[k]}, {self.upper[k]}]"
                )

    def _assemble(self, entries, batch):
        n = self.dim
        g = np.empty(batch + (n, n))
        for i in range(n):
            for j in range(i, n):
                g[..., i, j] = g[..., j, i] = np.broadcast_to(jets.value(entries[i][j]), batch)
        return g

    def __call__(self, points):
        """Metric matrices at ``points`` (shape ``(..., n)`` -> ``(..., n, n)``)."""
        points = np.asarray(points, dtype=float)
        batch = points.shape[:-1]
        coords = [points[..., k] for k in range(self.dim)]
        return self._assemble(self.components(coords), batch)

    def jet(self, points, order=2):
        """Metric with exact derivatives via jets.

        Returns ``g``, ``dg`` and (for ``order=2``) ``d2g`` with
        ``dg[..., i, j, k] = d_k g_ij`` and ``d2g[..., i, j, k, l] = d_k d_l g_ij``.
        """
        points = np.asarray(points, dtype=float)
        batch = points.shape[:-1]
        n = self.dim
        entries = self.components(jets.seed(points, order))
        g = np.empty(batch + (n, n))
        dg = np.zeros(batch + (n, n, n))
        d2g = np.zeros(batch + (n, n, n, n)) if order >= 2 else None
        for i in range(n):
            for j in range(i, n):
                e = entries[i][j]
                if isinstance(e, jets.Jet):
                    g[..., i, j] = np.broadcast_to(e.val, batch)
                    dg[..., i, j, :] = np.broadcast_to(e.grad, batch + (n,))
                    if order >= 2:
                        d2g[..., i, j, :, :] = np.broadcast_to(e.hess, batch + (n, n))
                else:
                    g[..., i, j] = np.broadcast_to(e, batch)
                if j != i:
                    g[..., j, i] = g[..., i, j]
                    dg[..., j, i, :] = dg[..., i, j, :]
                    if order >= 2:
                        d2g[..., j, i, :, :] = d2g[..., i, j, :, :]
        return g, dg, d2g


def _step_size(metric, points, second):
    if metric.step is not None:
        h = np.full(points.shape[:-1], float(metric.step))
    else:
        h = np.maximum(1e-5, np.linalg.norm(points, axis=-1) * 1e-7)
    return h * 10.0 if second else h


def _stencils(metric, points, h):
    """Per-axis, per-point offsets and weights for a first-derivative stencil.

    Central differences by default; second-order one-sided stencils near a
    non-periodic boundary.
    """
    batch = points.shape[:-1]
    offs, wts = [], []
    central_o, central_w = np.array([-1.0, 0.0, 1.0]), np.array([-0.5, 0.0, 0.5])
    fwd_o, fwd_w = np.array([0.0, 1.0, 2.0]), np.array([-1.5, 2.0, -0.5])
    bwd_o, bwd_w = -fwd_o[::-1], -fwd_w[::-1]
    for k in range(metric.dim):
        o = np.broadcast_to(central_o, batch + (3,)).copy()
        w = np.broadcast_to(central_w, batch + (3,)).copy()
        if not metric.periodic[k]:
            x = points[..., k]
            lo, hi = metric.lower[k], metric.upper[k]
            near_lo = x - h < lo
            near_hi = x + h > hi
            if np.any(near_lo & near_hi) or np.any(near_lo & (x + 2 * h > hi)) or np.any(
                near_hi & (x - 2 * h < lo)
            ):
                raise StencilOutOfDomainError(f"stencil out of domain along axis {k}")
            o[near_lo], w[near_lo] = fwd_o, fwd_w
            o[near_hi], w[near_hi] = bwd_o, bwd_w
        offs.append(o)
        wts.append(w)
    return offs, wts


def _central_derivatives(metric, points, order):
    points = np.asarray(points, dtype=float)
    n = metric.dim
    g = metric(points)
    h1 = _step_size(metric, points, second=False)
    offs, wts = _stencils(metric, points, h1)
    dg = np.zeros(g.shape + (n,))
    for k in range(n):
        for a in range(3):
            shifted = points.copy()
            shifted[..., k] += offs[k][..., a] * h1
            dg[..., k] += wts[k][..., a, None, None] * metric(shifted)
        dg[..., k] /= h1[..., None, None]
    if order < 2:
        return g, dg, None
    h2 = _step_size(metric, points, second=True)
    offs, wts = _stencils(metric, points, h2)
    d2g = np.zeros(g.shape + (n, n))
    for k in range(n):
        for l in range(k, n):
            acc = np.zeros_like(g)
            for a in range(3):
                for b in range(3):
                    w = wts[k][..., a] * wts[l][..., b]
                    if not np.any(w):
                        continue
                    shifted = points.copy()
                    shifted[..., k] += offs[k][..., a] * h2
                    shifted[..., l] += offs[l][..., b] * h2
                    acc += w[..., None, None] * metric(shifted)
            acc /= (h2 * h2)[..., None, None]
            d2g[..., k, l] = acc
            d2g[..., l, k] = acc
    return g, dg, d2g


def metric_derivatives(metric, points, order=2):
    """``g``, ``dg``, ``d2g`` at ``points`` using the metric's derivative scheme."""
    points = np.asarray(points, dtype=float)
    metric.check_domain(points)
    if metric.scheme == FORWARD:
        g, dg, d2g = metric.jet(points, order)
    else:
        g, dg, d2g = _central_derivatives(metric, points, order)
    _check_positive(g, points)
    return g, dg, d2g


def _check_positive(g, points):
    ok = np.all(np.isfinite(g))
    if ok:
        try:
            np.linalg.cholesky(g)
            return
        except np.linalg.LinAlgError:
            pass
    flat_g = g.reshape((-1,) + g.shape[-2:])
    flat_p = np.asarray(points).reshape((-1, points.shape[-1]))
    for gi, pi in zip(flat_g, flat_p):
        if not np.all(np.isfinite(gi)):
            raise DegenerateMetricError(pi, np.nan)
        eig = np.linalg.eigvalsh(gi)
        if eig[0] <= 0:
            raise DegenerateMetricError(pi, eig[0])


def _christoffel(g, dg):
    # first kind: G[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    first = 0.5 * (
        np.einsum("...jli->...lij", dg)
        + np.einsum("...ilj->...lij", dg)
        - np.einsum("...ijl->...lij", dg)
    )
    ginv = np.linalg.inv(g)
    return np.einsum("...kl,...lij->...kij", ginv, first), ginv, first


def christoffel_at(metric, point):
    """Christoffel symbols ``Gamma[k, i, j]`` (upper index first)."""
    g, dg, _ = metric_derivatives(metric, point, order=1)
    gamma, _, _ = _christoffel(g, dg)
    return gamma


def _riemann(g, dg, d2g):
    gamma, ginv, _ = _christoffel(g, dg)
    # d_m of first-kind symbols: dfirst[l, i, j, m]
    dfirst = 0.5 * (
        np.einsum("...jlim->...lijm", d2g)
        + np.einsum("...iljm->...lijm", d2g)
        - np.einsum("...ijlm->...lijm", d2g)
    )
    first = np.einsum("...kl,...kij->...lij", g, gamma)
    dginv = -np.einsum("...ka,...abm,...bl->...klm", ginv, dg, ginv)
    # dgamma[k, i, j, m] = d_m Gamma^k_ij
    dgamma = np.einsum("...klm,...lij->...kijm", dginv, first) + np.einsum(
        "...kl,...lijm->...kijm", ginv, dfirst
    )
    # textbook R(d_i, d_j) d_k = Rup[l, k, i, j] d_l
    rup = (
        np.einsum("...ljki->...lkij", dgamma)
        - np.einsum("...likj->...lkij", dgamma)
        + np.einsum("...lim,...mjk->...lkij", gamma, gamma)
        - np.einsum("...ljm,...mik->...lkij", gamma, gamma)
    )
    # textbook lowered: S[i, j, k, l] = <R(d_i, d_j) d_k, d_l>
    std = np.einsum("...lp,...pkij->...ijkl", g, rup)
    # stored convention: R_ab = R(b, a), so the round sphere has positive sectional curvature
    return np.swapaxes(std, -4, -3)


@dataclass
class CurvatureTensor4:
    """Lowered Riemann tensor ``values[a, b, c, d] = <R_ab c, d>`` at ``point``."""

    point: np.ndarray
    values: np.ndarray
    metric_matrix: np.ndarray

    def symmetry_residuals(self):
        """Residuals of the algebraic curvature identities.

        Scaled by ``max(1, max |R|)``: relative for large tensors, absolute
        for (nearly) flat ones where a relative residual is pure rounding.
        """
        R = self.values
        scale = np.maximum(np.max(np.abs(R), axis=(-4, -3, -2, -1)), 1.0)

        def rel(x):
            return np.max(np.abs(x), axis=(-4, -3, -2, -1)) / scale

        return {
            "antisym_ab": rel(R + np.swapaxes(R, -4, -3)),
            "antisym_cd": rel(R + np.swapaxes(R, -2, -1)),
            "pair": rel(R - np.moveaxis(R, (-4, -3), (-2, -1))),
            "bianchi": rel(
                R + np.einsum("...bcad->...abcd", R) + np.einsum("...cabd->...abcd", R)
            ),
        }


def riemann_at(metric, point):
    """Riemann tensor at ``point`` in the convention documented above."""
    point = np.asarray(point, dtype=float)
    g, dg, d2g = metric_derivatives(metric, point, order=2)
    return CurvatureTensor4(point=point, values=_riemann(g, dg, d2g), metric_matrix=g)


@dataclass(frozen=True)
class TangentPlane:
    point: np.ndarray
    a: np.ndarray
    b: np.ndarray


def _plane_gram(g, a, b):
    aa = np.einsum("...i,...ij,...j->...", a, g, a)
    bb = np.einsum("...i,...ij,...j->...", b, g, b)
    ab = np.einsum("...i,...ij,...j->...", a, g, b)
    return aa * bb - ab * ab, aa * bb


def _sectional_from(R, g, a, b):
    gram, scale = _plane_gram(g, a, b)
    if np.any(gram <= 1e-14 * scale):
        raise DegeneratePlaneError("degenerate plane: spanning vectors are dependent")
    num = np.einsum("...abcd,...a,...b,...c,...d->...", R, a, b, a, b)
    return num / gram


def sectional_at(metric, plane):
    """Sectional curvature of ``plane``; any spanning basis is accepted.

    The quadratic form ``R(a, b, a, b)`` is normalised by the Gram
    determinant ``<a,a><b,b> - <a,b>^2``.
    """
    R = riemann_at(metric, plane.point)
    return _sectional_from(R.values, R.metric_matrix, np.asarray(plane.a, float), np.asarray(plane.b, float))


def sectional_curvatures(metric, points, a, b):
    """Batched sectional curvature; ``a``, ``b`` broadcast against ``points``."""
    R = riemann_at(metric, points)
    return _sectional_from(R.values, R.metric_matrix, np.asarray(a, float), np.asarray(b, float))


def orthonormal_frame(g):
    """Columns ``E`` with ``E.T @ g @ E = I`` (inverse transpose of Cholesky)."""
    L = np.linalg.cholesky(g)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    return np.swapaxes(np.linalg.solve(L, eye), -1, -2)


def wedge(a, b):
    """Components of ``a ^ b`` on the basis ``e_i ^ e_j`` (``i < j``)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n = a.shape[-1]
    return np.stack([a[..., i] * b[..., j] - a[..., j] * b[..., i] for i, j in combinations(range(n), 2)], -1)


@dataclass
class CurvatureOperator:
    """Curvature operator on 2-vectors in a g-orthonormal basis.

    ``matrix[(ij), (kl)] = <R(e_i ^ e_j), e_k ^ e_l>`` where ``e = frame``
    columns are g-orthonormal, so the induced basis ``e_i ^ e_j`` of the
    2-vectors is orthonormal for the Lambda^2 inner product and the matrix
    is symmetric.
    """

    point: np.ndarray
    matrix: np.ndarray
    frame: np.ndarray
    pairs: list

    def coords(self, a, b):
        """Coordinates of ``a ^ b`` (chart vectors) in the orthonormal 2-vector basis."""
        a_hat = np.linalg.solve(self.frame, np.asarray(a, float))
        b_hat = np.linalg.solve(self.frame, np.asarray(b, float))
        return wedge(a_hat, b_hat)

    def apply(self, a, b):
        return self.matrix @ self.coords(a, b)

    def chart_form(self, g):
        """The operator's bilinear form in the coordinate basis ``d_i ^ d_j``."""
        Einv = np.linalg.inv(self.frame)
        n = self.frame.shape[-1]
        T = np.array([wedge(Einv[:, i], Einv[:, j]) for i, j in combinations(range(n), 2)])
        return T @ self.matrix @ T.T


def lambda2_gram(g):
    """Gram matrix of the coordinate basis ``d_i ^ d_j`` for <a^b, c^d>."""
    n = g.shape[-1]
    pairs = list(combinations(range(n), 2))
    G = np.empty(g.shape[:-2] + (len(pairs), len(pairs)))
    for p, (i, j) in enumerate(pairs):
        for q, (k, l) in enumerate(pairs):
            G[..., p, q] = g[..., i, k] * g[..., j, l] - g[..., i, l] * g[..., j, k]
    return G


def curvature_operator_at(metric, point):
    R = riemann_at(metric, point)
    E = orthonormal_frame(R.metric_matrix)
    Rf = np.einsum("...abcd,...ai,...bj,...ck,...dl->...ijkl", R.values, E, E, E, E)
    n = metric.dim
    pairs = list(combinations(range(n), 2))
    idx_i = [p[0] for p in pairs]
    idx_j = [p[1] for p in pairs]
    M = Rf[..., idx_i, idx_j, :, :][..., idx_i, idx_j]
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    return CurvatureOperator(point=np.asarray(point, float), matrix=M, frame=E, pairs=pairs)


def koszul_residual(metric, point):
    """Max over coordinate triples of the Koszul identity residual.

    For commuting coordinate fields ``2<Z, D_Y X> = X<Y,Z> + Y<X,Z> - Z<X,Y>``.
    """
    g, dg, _ = metric_derivatives(metric, point, order=1)
    gamma, _, _ = _christoffel(g, dg)
    # lhs[z, y, x] = 2 g_{z k} Gamma^k_{y x}
    lhs = 2.0 * np.einsum("...zk,...kyx->...zyx", g, gamma)
    # X<Y,Z> = d_x g_yz etc.
    rhs = (
        np.einsum("...yzx->...zyx", dg)
        + np.einsum("...xzy->...zyx", dg)
        - np.einsum("...xyz->...zyx", dg)
    )
    return float(np.max(np.abs(lhs - rhs)))
