"""Heat flow for loops ``S^1 -> (target, g)`` in a 2-D chart.

The loop is stored as a lift: ``samples[i]`` approximates ``gamma(i h)`` with
``h = 2 pi / N``, and ``gamma(theta + 2 pi) = gamma(theta) + shift`` where
``shift = winding * periods``.  The discrete energy is the midpoint rule

    E = 1/2 sum_i  g(m_i)(D_i, D_i) / h,    D_i = gamma_{i+1} - gamma_i,
    m_i = (gamma_i + gamma_{i+1}) / 2,

and the tension is ``-(1/h) g(gamma_i)^{-1} dE/dgamma_i``, the exact
gradient of that energy raised by the metric.  It is a second-order
approximation of the covariant acceleration ``gamma'' + Gamma(gamma', gamma')``
(see :func:`covariant_acceleration`), and an Euler step along it never
increases the discrete energy under the diffusion step bound.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .chart import ChartMetric, GeometryError, christoffel_at

CFL_FACTOR = 0.4
ENERGY_SLACK = 1e-12
CSV_HEADER = "# warpcurv-csv v1"


class CFLError(ValueError):
    def __init__(self, dt, bound):
        super().__init__(f"time step {dt:g} exceeds the stability bound {bound:g}")
        self.dt = dt
        self.bound = bound


class BlowUpError(ArithmeticError):
    pass


def _periods(target):
    return np.where(np.asarray(target.periodic), target.periods, 0.0)


@dataclass(frozen=True)
class ClosedCurve:
    samples: np.ndarray
    target: ChartMetric
    winding: tuple

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != self.target.dim:
            raise ValueError("samples must have shape (Npts, target.dim)")
        if len(s) < 16:
            raise ValueError("a closed curve needs at least 16 samples")
        w = tuple(int(v) for v in self.winding)
        if len(w) != self.target.dim:
            raise ValueError("one winding number per target axis")
        for k, p in enumerate(self.target.periodic):
            if not p and w[k] != 0:
                raise ValueError(f"axis {k} is not periodic; its winding must be 0")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "winding", w)
        gaps = np.linalg.norm(self.increments(), axis=-1)
        if gaps.mean() > 0 and gaps.max() > 10.0 * gaps.mean():
            raise ValueError("sample gaps too uneven (max gap > 10x mean gap)")

    @classmethod
    def from_function(cls, f, npts, target, winding):
        """Sample the lift ``theta -> f(theta)`` (``f`` vectorised, returns (N, dim))."""
        theta = 2.0 * np.pi * np.arange(npts) / npts
        return cls(np.asarray(f(theta), float), target, winding)

    @property
    def npts(self):
        return len(self.samples)

    @property
    def h(self):
        return 2.0 * np.pi / self.npts

    @property
    def shift(self):
        return np.asarray(self.winding, float) * _periods(self.target)

    def increments(self):
        """``D_i = gamma_{i+1} - gamma_i`` with the closing increment through ``shift``."""
        nxt = np.roll(self.samples, -1, axis=0)
        nxt[-1] += self.shift
        return nxt - self.samples

    def with_samples(self, samples):
        return ClosedCurve(samples, self.target, self.winding)


def winding_numbers(curve):
    """Winding recomputed from the wrapped samples by summing unwrapped increments.

    Each increment is reduced to the shortest representative modulo the
    period, so the result is independent of the stored lift.
    """
    P = _periods(curve.target)
    wrapped = np.where(P > 0, np.mod(curve.samples, np.where(P > 0, P, 1.0)), curve.samples)
    d = np.roll(wrapped, -1, axis=0) - wrapped
    safe = np.where(P > 0, P, 1.0)
    d = np.where(P > 0, d - safe * np.round(d / safe), d)
    total = d.sum(axis=0)
    return tuple(int(round(t / p)) if p > 0 else 0 for t, p in zip(total, P))


def _midpoint_terms(curve):
    D = curve.increments()
    mid = curve.samples + 0.5 * D
    g, dg, _ = curve.target.jet(mid, order=1)
    return D, g, dg


def energy(curve):
    D, g, _ = _midpoint_terms(curve)
    return float(0.5 * np.einsum("ni,nij,nj->", D, g, D) / curve.h)


def _energy_and_tension(curve):
    D, g, dg = _midpoint_terms(curve)
    h = curve.h
    E = 0.5 * np.einsum("ni,nij,nj->", D, g, D) / h
    gD = np.einsum("nij,nj->ni", g, D)
    Q = np.einsum("ni,nijk,nj->nk", D, dg, D)
    grad = (np.roll(gD, 1, axis=0) - gD) / h + 0.25 * (np.roll(Q, 1, axis=0) + Q) / h
    G = curve.target(curve.samples)
    tau = -np.linalg.solve(G, grad[..., None])[..., 0] / h
    return float(E), tau, G


def tension(curve):
    """Discrete tension field, shape ``(Npts, dim)``."""
    return _energy_and_tension(curve)[1]


def tension_norm(tau, G):
    return np.sqrt(np.einsum("ni,nij,nj->n", tau, G, tau))


def covariant_acceleration(curve):
    """Central-difference ``gamma'' + Gamma(gamma)(gamma', gamma')`` with engine Christoffels."""
    s = curve.samples
    nxt = np.roll(s, -1, axis=0)
    nxt[-1] += curve.shift
    prv = np.roll(s, 1, axis=0)
    prv[0] -= curve.shift
    h = curve.h
    v = (nxt - prv) / (2.0 * h)
    a = (nxt - 2.0 * s + prv) / (h * h)
    gamma = christoffel_at(curve.target, s)
    return a + np.einsum("nkij,ni,nj->nk", gamma, v, v)


def stable_dt(curve):
    return CFL_FACTOR * curve.h ** 2


def flow_step(curve, dt):
    """One explicit Euler step ``gamma += dt * tau``."""
    bound = stable_dt(curve)
    if dt > bound * (1.0 + 1e-12):
        raise CFLError(dt, bound)
    new = curve.samples + dt * tension(curve)
    if not np.all(np.isfinite(new)):
        raise BlowUpError("blow-up: non-finite samples after flow step")
    return curve.with_samples(new)


@dataclass
class FlowTrace:
    steps: list = field(default_factory=list)  # (step, energy, tension_max, dt)
    status: str = "running"
    max_energy_increase: float = 0.0
    winding_preserved: bool = True
    n_steps: int = 0

    @property
    def energies(self):
        return np.array([row[1] for row in self.steps])

    @property
    def monotone(self):
        return self.max_energy_increase <= ENERGY_SLACK

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"{CSV_HEADER} columns=step,energy,tension_max,dt\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "energy", "tension_max", "dt"])
        for step, e, t, dt in self.steps:
            w.writerow([step, repr(float(e)), repr(float(t)), repr(float(dt))])
        return buf.getvalue()


def curve_to_csv(curve):
    buf = io.StringIO()
    cols = ["i", "theta"] + [f"x{k + 1}" for k in range(curve.target.dim)]
    buf.write(f"{CSV_HEADER} columns={','.join(cols)} winding={','.join(map(str, curve.winding))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, p in enumerate(curve.samples):
        w.writerow([i, repr(float(i * curve.h))] + [repr(float(v)) for v in p])
    return buf.getvalue()


def flow_until(curve, tol=1e-6, max_steps=200_000, dt=None, record_every=1):
    """Flow with the stable step until the max tension norm drops to ``tol``.

    Energy monotonicity and winding are checked on every step; the trace
    keeps every ``record_every``-th record plus the last one.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    dt = stable_dt(curve) if dt is None else dt
    bound = stable_dt(curve)
    if dt > bound * (1.0 + 1e-12):
        raise CFLError(dt, bound)
    trace = FlowTrace()
    start_winding = winding_numbers(curve)
    E, tau, G = _energy_and_tension(curve)
    step = 0
    while True:
        tmax = float(tension_norm(tau, G).max())
        if step % record_every == 0:
            trace.steps.append((step, E, tmax, dt))
        if tmax <= tol:
            trace.status = "converged"
            break
        if step >= max_steps:
            trace.status = "max-steps"
            break
        new = curve.samples + dt * tau
        if not np.all(np.isfinite(new)):
            trace.status = "blow-up"
            trace.n_steps = step
            raise BlowUpError(f"blow-up at step {step}")
        curve = curve.with_samples(new)
        step += 1
        E_new, tau, G = _energy_and_tension(curve)
        trace.max_energy_increase = max(trace.max_energy_increase, E_new - E)
        E = E_new
        if winding_numbers(curve) != start_winding:
            trace.winding_preserved = False
    if trace.steps[-1][0] != step:
        trace.steps.append((step, E, tmax, dt))
    trace.n_steps = step
    return curve, trace


# -- standard initial loops ---------------------------------------------------


def torus_loop(target, npts, winding=(1, 0), amplitude=0.0, offset=(0.0, 0.0)):
    """Affine loop of the given class on a flat 2-torus, optionally perturbed."""
    P = _periods(target)
    w = np.asarray(winding, float)

    def f(theta):
        base = np.asarray(offset)[None, :] + np.outer(theta / (2 * np.pi), w * P)
        pert = amplitude * np.stack([np.sin(theta), np.cos(2 * theta)], axis=-1)
        return base + pert

    return ClosedCurve.from_function(f, npts, target, winding)


def cylinder_circle(target, npts, offset=0.5, amplitude=0.0):
    """Loop around the periodic axis of the hyperbolic cylinder at height ``offset``."""
    P = _periods(target)[0]

    def f(theta):
        x = theta * P / (2 * np.pi)
        y = offset + amplitude * np.sin(theta)
        return np.stack([x, y], axis=-1)

    return ClosedCurve.from_function(f, npts, target, (1, 0))


def affine_deviation(curve):
    """Max distance from the best affine loop ``c + theta * shift / 2 pi`` (chart coordinates)."""
    theta = 2 * np.pi * np.arange(curve.npts) / curve.npts
    base = np.outer(theta / (2 * np.pi), curve.shift)
    r = curve.samples - base
    return float(np.max(np.abs(r - r.mean(axis=0))))
