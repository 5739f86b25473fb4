"""Pinching certificates: term bounds, thresholds and sampled curvature ranges.

Two complementary views of "all sectional curvatures lie in (-1-eps, -1+eps)":

* term certification (:func:`lemma22_terms`, :func:`find_alpha0`): the five
  generating terms of a doubly warped metric bracket every sectional
  curvature, so bounding the terms bounds all planes at once;
* sampling (:func:`curvature_range`, :func:`find_min_r`): sectional
  curvatures from the chart engine on a grid of points and planes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from .chart import (
    ChartMetric,
    _riemann,
    _sectional_from,
    metric_derivatives,
    orthonormal_frame,
)
from .families import BREAKPOINTS, T_MAX, PiecewiseWarpMetric
from .warp import TERM_NAMES, WarpFunction, assemble_doubly_warped, warp_terms

CSV_HEADER = "# warpcurv-csv v1"


# -- term certification --------------------------------------------------------


@dataclass
class WarpFamily:
    """``phi_i(., alpha)`` profiles with factor curvature bounds.

    ``phi1`` / ``phi2`` are either fixed :class:`WarpFunction` values or
    callables ``alpha -> WarpFunction``.  A bound of ``None`` marks a
    1-dimensional factor, whose curvature term never appears.
    """

    phi1: object
    phi2: object
    t_interval: tuple
    K1_bounds: tuple | None
    K2_bounds: tuple | None
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = (float(v) for v in self.t_interval)
        if not 0.0 < a < b:
            raise ValueError(f"t_interval must satisfy 0 < a < b, got {self.t_interval}")
        self.t_interval = (a, b)
        for bounds in (self.K1_bounds, self.K2_bounds):
            if bounds is not None and bounds[0] > bounds[1]:
                raise ValueError(f"empty curvature bounds {bounds}")
        # recorded, not enforced: the divergence hypothesis only acts through K / phi^2
        self.metadata.setdefault(
            "hypotheses", ["phi'/phi -> 1 and phi''/phi -> 1", "phi(alpha t, alpha) -> infinity"]
        )

    def warps(self, alpha):
        def pick(p):
            return p if isinstance(p, WarpFunction) else p(alpha)

        return pick(self.phi1), pick(self.phi2)


def lemma22_terms(family, alpha, t):
    """Term bounds at rescaled time ``alpha * t``; shape ``t.shape + (5, 2)``.

    Column 0 / 1 hold the low / high value over the factor curvature
    bounds; excluded terms (1-dimensional factors) are NaN.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    phi1, phi2 = family.warps(alpha)
    s = alpha * np.asarray(t, float)
    cases = []
    for k1 in (family.K1_bounds or (0.0, 0.0)):
        for k2 in (family.K2_bounds or (0.0, 0.0)):
            cases.append(warp_terms(phi1, phi2, s, k1, k2))
    cases = np.stack(cases, axis=-1)
    out = np.stack([cases.min(axis=-1), cases.max(axis=-1)], axis=-1)
    if family.K1_bounds is None:
        out[..., 2, :] = np.nan
    if family.K2_bounds is None:
        out[..., 3, :] = np.nan
    return out


def geometric_grid(start, stop, ratio=1.1):
    """``start * ratio^k`` up to and including the first value >= ``stop``."""
    if not (start > 0 and stop >= start and ratio > 1):
        raise ValueError("need 0 < start <= stop and ratio > 1")
    n = int(np.ceil(np.log(stop / start) / np.log(ratio) - 1e-12)) + 1
    return start * ratio ** np.arange(n)


def linear_grid(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


@dataclass
class Alpha0Report:
    alpha0: float | None
    eps: float
    table: list
    witness: dict | None = None

    @property
    def found(self):
        return self.alpha0 is not None

    def to_dict(self):
        return dict(alpha0=self.alpha0, found=self.found, eps=self.eps,
                    witness=self.witness, table=self.table)


def find_alpha0(family, eps, alpha_grid, n_t=256):
    """Smallest grid ``alpha`` whose terms stay in ``(-1-eps, -1+eps)`` from there on."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    alpha_grid = np.asarray(alpha_grid, float)
    if np.any(np.diff(alpha_grid) <= 0):
        raise ValueError("alpha grid must be increasing")
    ts = np.linspace(*family.t_interval, n_t)
    table = []
    for alpha in alpha_grid:
        dev = np.abs(lemma22_terms(family, alpha, ts) + 1.0)
        worst = np.nanmax(dev)
        flat = np.nanargmax(np.where(np.isnan(dev), -np.inf, dev))
        ti, term, _ = np.unravel_index(flat, dev.shape)
        table.append(dict(alpha=float(alpha), max_deviation=float(worst), passed=bool(worst < eps),
                          witness_term=TERM_NAMES[term], witness_t=float(ts[ti])))
    alpha0 = None
    for row in reversed(table):
        if not row["passed"]:
            break
        alpha0 = row["alpha"]
    witness = None
    if alpha0 is None and table:
        last = table[-1]
        witness = dict(alpha=last["alpha"], term=last["witness_term"], t=last["witness_t"],
                       deviation=last["max_deviation"])
    return Alpha0Report(alpha0, float(eps), table, witness)


def family_metric(family, alpha, sigma1, sigma2, rescaled=True):
    """``rho_alpha`` (``rescaled=True``: alpha^2 dt^2 on [a, b]) or its isometric
    unrescaled form on ``[alpha a, alpha b]`` with unit ``dt^2``."""
    phi1, phi2 = family.warps(alpha)
    a, b = family.t_interval
    if rescaled:
        return assemble_doubly_warped(sigma1, sigma2, phi1.rescaled(alpha), phi2.rescaled(alpha),
                                      (a, b), dt_coefficient=alpha * alpha, name=f"rho_alpha({alpha:g})")
    return assemble_doubly_warped(sigma1, sigma2, phi1, phi2, (alpha * a, alpha * b),
                                  name=f"rho_alpha_bar({alpha:g})")


# -- sampling ------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingGrid:
    """Where curvature is sampled.

    ``t_values`` overrides the automatic t grid (``n_t`` points per smooth
    interval, staying ``exclusion`` away from breakpoints).  The remaining
    coordinates take ``n_space`` seeded uniform samples from a bounded box
    inside the chart; each point gets every frame coordinate plane plus
    ``planes`` random planes.
    """

    n_t: int = 256
    n_space: int = 3
    planes: int = 20
    seed: int = 0
    t_values: tuple | None = None
    t_start: float = 0.5
    exclusion: float = 1e-3
    chunk: int = 2048

    def describe(self):
        d = dict(n_t=self.n_t, n_space=self.n_space, planes_per_point=self.planes, seed=self.seed,
                 exclusion=self.exclusion, t_start=self.t_start)
        if self.t_values is not None:
            d["t_values"] = [float(v) for v in self.t_values]
        return d


def _box(lo, hi, periodic):
    if periodic:
        return lo, hi
    if not np.isfinite(lo) and not np.isfinite(hi):
        return -1.0, 1.0
    if not np.isfinite(hi):
        return lo + 0.5, lo + 2.0
    if not np.isfinite(lo):
        return hi - 2.0, hi - 0.5
    span = hi - lo
    return lo + 0.1 * span, hi - 0.1 * span


def space_samples(metric, n, seed):
    """Seeded samples of all coordinates but the last."""
    rng = np.random.default_rng(seed)
    cols = []
    for k in range(metric.dim - 1):
        lo, hi = _box(metric.lower[k], metric.upper[k], metric.periodic[k])
        cols.append(rng.uniform(lo, hi, n))
    return np.stack(cols, axis=-1) if cols else np.zeros((n, 0))


def t_samples(metric, grid):
    if grid.t_values is not None:
        return np.asarray(grid.t_values, float)
    if isinstance(metric, PiecewiseWarpMetric):
        edges = (grid.t_start,) + BREAKPOINTS + (T_MAX - grid.t_start,)
        parts = [np.linspace(lo + grid.exclusion, hi - grid.exclusion, grid.n_t)
                 for lo, hi in zip(edges[:-1], edges[1:])]
        return np.concatenate(parts)
    lo, hi = _box(metric.lower[-1], metric.upper[-1], metric.periodic[-1])
    if metric.lower[-1] == 0.0 and not metric.periodic[-1]:
        lo = max(lo, grid.t_start)
    return np.linspace(lo, hi, grid.n_t)


def sample_sectional(metric, points, planes=20, seed=0, chunk=2048):
    """Sectional curvatures, shape ``(len(points), n_frame_pairs + planes)``."""
    chart = metric.chart if isinstance(metric, PiecewiseWarpMetric) else metric
    points = np.asarray(points, float)
    rng = np.random.default_rng(seed)
    n = chart.dim
    xi = rng.normal(size=(planes, n)) if planes else None
    zeta = rng.normal(size=(planes, n)) if planes else None
    out = []
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        g, dg, d2g = metric_derivatives(chart, p, order=2)
        R = _riemann(g, dg, d2g)
        E = orthonormal_frame(g)
        A, B = [], []
        for i in range(n):
            for j in range(i + 1, n):
                A.append(E[:, :, i])
                B.append(E[:, :, j])
        for q in range(planes):
            A.append(E @ xi[q])
            B.append(E @ zeta[q])
        A = np.stack(A, axis=1)
        B = np.stack(B, axis=1)
        out.append(_sectional_from(R[:, None], g[:, None], A, B))
    return np.concatenate(out, axis=0)


def _term_source(metric):
    """``t -> (n_t, 5, 2)`` term bounds for metrics with doubly warped structure, else None."""
    if isinstance(metric, PiecewiseWarpMetric):
        coeffs = metric.params.get("circle_coefficients")
        if coeffs is None:
            return None
        alpha = metric.alpha
        sigma1 = metric.sigma_N

        def source(ts, space):
            K1 = _factor_bounds(sigma1, space[:, :sigma1.dim])
            edges = np.asarray(BREAKPOINTS)
            idx = np.searchsorted(edges, ts, side="right")
            out = np.empty(ts.shape + (5, 2))
            for k in np.unique(idx):
                c = coeffs[int(k)]
                phi2 = WarpFunction(lambda t, c=c: np.sinh(alpha * t) + (1.0 + c(t)) * 0.5 * np.exp(-alpha * t))
                phi1 = WarpFunction(lambda t: np.cosh(alpha * t))
                mask = idx == k
                out[mask] = _arclength_terms(phi1, phi2, ts[mask], alpha * alpha, K1, None)
            return out

        return source
    meta = metric.meta or {}
    if meta.get("kind") not in ("doubly_warped", "rho_r"):
        return None
    s1, s2 = meta["sigma1"], meta["sigma2"]

    def source(ts, space):
        K1 = _factor_bounds(s1, space[:, :s1.dim])
        K2 = _factor_bounds(s2, space[:, s1.dim:s1.dim + s2.dim])
        return _arclength_terms(meta["phi1"], meta["phi2"], ts, meta["dt_coefficient"], K1, K2)

    return source


def _arclength_terms(phi1, phi2, ts, c, K1, K2):
    """Terms for ``phi1^2 s1 + phi2^2 s2 + c dt^2`` in unit-speed time."""
    root = np.sqrt(c)

    def unit(phi):
        return WarpFunction(phi, lambda t: phi.derivs(t)[1] / root, lambda t: phi.derivs(t)[2] / c)

    u1, u2 = unit(phi1), unit(phi2)
    cases = [warp_terms(u1, u2, ts, k1, k2) for k1 in (K1 or (0.0, 0.0)) for k2 in (K2 or (0.0, 0.0))]
    cases = np.stack(cases, axis=-1)
    out = np.stack([cases.min(axis=-1), cases.max(axis=-1)], axis=-1)
    if K1 is None:
        out[..., 2, :] = np.nan
    if K2 is None:
        out[..., 3, :] = np.nan
    return out


def _factor_bounds(sigma, points):
    """Sampled range of a factor's sectional curvature, ``None`` for 1-D factors."""
    if sigma.dim < 2:
        return None
    K = sample_sectional(sigma, points, planes=4 if sigma.dim > 2 else 0)
    return float(K.min()), float(K.max())


@dataclass
class PinchReport:
    parameter: dict
    K_min: float
    K_max: float
    term_extrema: list | None
    grid: dict
    n_points: int
    n_planes: int
    argmin: list
    argmax: list
    eps: float | None = None
    per_t: list = field(default_factory=list, repr=False)

    @property
    def worst_deviation(self):
        return max(abs(self.K_min + 1.0), abs(self.K_max + 1.0))

    @property
    def verdict(self):
        if self.eps is None:
            return None
        return bool(-1.0 - self.eps < self.K_min and self.K_max < -1.0 + self.eps)

    def brackets(self, tol=1e-6):
        """Convexity check: ``min term <= K_min`` and ``K_max <= max term``."""
        if self.term_extrema is None:
            return None
        lo = min(t[0] for t in self.term_extrema if t[0] is not None)
        hi = max(t[1] for t in self.term_extrema if t[1] is not None)
        return bool(lo - tol <= self.K_min and self.K_max <= hi + tol)

    def to_dict(self):
        return dict(parameter=self.parameter, K_min=self.K_min, K_max=self.K_max,
                    worst_deviation=self.worst_deviation, term_extrema=self.term_extrema,
                    grid=self.grid, n_points=self.n_points, n_planes=self.n_planes,
                    argmin=self.argmin, argmax=self.argmax, eps=self.eps, verdict=self.verdict)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def csv_rows(self):
        label = json.dumps(self.parameter, sort_keys=True)
        for t, kmin, kmax in self.per_t:
            yield (label, t, "K_min", kmin)
            yield (label, t, "K_max", kmax)

    def to_csv(self):
        return rows_to_csv(["parameter", "t", "series", "value"], self.csv_rows())


def rows_to_csv(columns, rows):
    buf = io.StringIO()
    buf.write(f"{CSV_HEADER} columns={','.join(columns)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def curvature_range(metric, grid=None, parameter=None, eps=None):
    """Sampled sectional-curvature extrema of ``metric`` (a chart or piecewise family)."""
    grid = grid or SamplingGrid()
    chart = metric.chart if isinstance(metric, PiecewiseWarpMetric) else metric
    ts = t_samples(metric, grid)
    space = space_samples(chart, grid.n_space, grid.seed)
    pts = np.concatenate(
        [np.repeat(space, len(ts), axis=0), np.tile(ts, len(space))[:, None]], axis=1
    )
    K = sample_sectional(chart, pts, grid.planes, grid.seed, grid.chunk)
    per_point_min = K.min(axis=1)
    per_point_max = K.max(axis=1)
    i_min = int(np.argmin(per_point_min))
    i_max = int(np.argmax(per_point_max))
    per_t = []
    kmin_t = per_point_min.reshape(len(space), len(ts)).min(axis=0)
    kmax_t = per_point_max.reshape(len(space), len(ts)).max(axis=0)
    for t, lo, hi in zip(ts, kmin_t, kmax_t):
        per_t.append((float(t), float(lo), float(hi)))
    terms = None
    source = _term_source(metric)
    if source is not None:
        T = source(ts, space)
        terms = []
        for k in range(5):
            col = T[:, k, :]
            if np.all(np.isnan(col)):
                terms.append([None, None])
            else:
                terms.append([float(np.nanmin(col)), float(np.nanmax(col))])
    return PinchReport(
        parameter=dict(parameter or {}),
        K_min=float(per_point_min[i_min]),
        K_max=float(per_point_max[i_max]),
        term_extrema=terms,
        grid=grid.describe(),
        n_points=len(pts),
        n_planes=K.shape[1],
        argmin=pts[i_min].tolist(),
        argmax=pts[i_max].tolist(),
        eps=eps,
        per_t=per_t,
    )


@dataclass
class MinRReport:
    r_star: float | None
    eps: float
    table: list

    @property
    def found(self):
        return self.r_star is not None

    def deviations(self):
        return [row["worst_deviation"] for row in self.table]

    def non_increasing(self, slack=0.0):
        d = self.deviations()
        return all(b <= a + slack for a, b in zip(d, d[1:]))

    def to_dict(self):
        return dict(r_star=self.r_star, found=self.found, eps=self.eps, table=self.table,
                    deviation_non_increasing=self.non_increasing())


def find_min_r(builder, eps, r_grid, grid=None, s_values=None):
    """Smallest grid ``r`` (persisting to the end of the grid) with range in ``(-1-eps, -1+eps)``.

    ``builder(r)`` or, when ``s_values`` is given, ``builder(r, s)`` returns
    the metric to sample.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    r_grid = np.asarray(r_grid, float)
    table = []
    for r in r_grid:
        reports = []
        for s in (s_values if s_values is not None else [None]):
            metric = builder(r) if s is None else builder(r, s)
            param = dict(r=float(r)) if s is None else dict(r=float(r), s=float(s))
            reports.append(curvature_range(metric, grid, param, eps))
        kmin = min(rep.K_min for rep in reports)
        kmax = max(rep.K_max for rep in reports)
        table.append(dict(
            r=float(r), K_min=kmin, K_max=kmax,
            worst_deviation=max(abs(kmin + 1.0), abs(kmax + 1.0)),
            passed=all(rep.verdict for rep in reports),
            per_s=[rep.to_dict() for rep in reports] if s_values is not None else None,
        ))
    r_star = None
    for row in reversed(table):
        if not row["passed"]:
            break
        r_star = row["r"]
    return MinRReport(r_star, float(eps), table)
