"""Smooth monotone steps with exact plateaus, and the transition profiles built from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def bump(x):
    """``exp(-1/(x(1-x)))`` on (0, 1), zero elsewhere."""
    x = np.asarray(x, float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.where(inside, x, 0.5)
    return np.where(inside, np.exp(-1.0 / (xc * (1.0 - xc))), 0.0)


def _bump_d1(x):
    x = np.asarray(x, float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.where(inside, x, 0.5)
    q = xc * (1.0 - xc)
    return np.where(inside, bump(xc) * (1.0 - 2.0 * xc) / (q * q), 0.0)


def _bump_integral(x):
    """``int_0^x bump`` for ``x`` in [0, 1] by 64-point Gauss-Legendre."""
    x = np.asarray(x, float)
    nodes = 0.5 * x[..., None] * (_GL_NODES + 1.0)
    return 0.5 * x * np.sum(_GL_WEIGHTS * bump(nodes), axis=-1)


_BUMP_MASS = float(_bump_integral(np.array(1.0)))


def unit_step(x):
    """Normalised integral of the bump: 0 for x <= 0, 1 for x >= 1, C-infinity."""
    x = np.clip(np.asarray(x, float), 0.0, 1.0)
    # integrate from the nearer end for accuracy
    lo = _bump_integral(np.minimum(x, 1.0 - x)) / _BUMP_MASS
    return np.where(x <= 0.5, lo, 1.0 - lo)


@dataclass(frozen=True)
class SmoothStep:
    """Monotone C-infinity transition from ``y0`` to ``y1``.

    Equal to ``y0`` for ``t <= t0 + margin`` and to ``y1`` for
    ``t >= t1 - margin``; accepts plain arrays and jets.
    """

    t0: float
    t1: float
    y0: float
    y1: float
    margin: float = 0.0

    def __post_init__(self):
        if not self.t0 + self.margin < self.t1 - self.margin:
            raise ValueError("margin leaves no room for the transition")

    @property
    def _width(self):
        return (self.t1 - self.margin) - (self.t0 + self.margin)

    def _x(self, t):
        return (np.asarray(t, float) - (self.t0 + self.margin)) / self._width

    def _f0(self, t):
        return self.y0 + (self.y1 - self.y0) * unit_step(self._x(t))

    def _f1(self, t):
        return (self.y1 - self.y0) * bump(self._x(t)) / (_BUMP_MASS * self._width)

    def _f2(self, t):
        return (self.y1 - self.y0) * _bump_d1(self._x(t)) / (_BUMP_MASS * self._width ** 2)

    def __call__(self, t):
        return jets.smooth_apply(t, self._f0, self._f1, self._f2)

    def derivs(self, t):
        return self._f0(t), self._f1(t), self._f2(t)


@dataclass(frozen=True)
class LinearRamp:
    """Continuous but only piecewise-linear step; a deliberately non-smooth profile."""

    t0: float
    t1: float
    y0: float
    y1: float
    margin: float = 0.0

    def _x(self, t):
        return (np.asarray(t, float) - (self.t0 + self.margin)) / (
            (self.t1 - self.margin) - (self.t0 + self.margin)
        )

    def _f0(self, t):
        return self.y0 + (self.y1 - self.y0) * np.clip(self._x(t), 0.0, 1.0)

    def _f1(self, t):
        x = self._x(t)
        slope = (self.y1 - self.y0) / ((self.t1 - self.margin) - (self.t0 + self.margin))
        return np.where((x >= 0.0) & (x < 1.0), slope, 0.0)

    def _f2(self, t):
        return np.zeros_like(np.asarray(t, float))

    def __call__(self, t):
        return jets.smooth_apply(t, self._f0, self._f1, self._f2)

    def derivs(self, t):
        return self._f0(t), self._f1(t), self._f2(t)


def delta_profiles(margin=0.1):
    """The three transitions used by the twisted family.

    ``delta1``: -1 -> 1 across [2, 3]; ``delta2``: 0 -> 1 across [3, 4];
    ``delta3``: 1 -> -1 across [4, 5].  Each is constant within ``margin`` of
    the interval ends.
    """
    if not 0.0 < margin < 0.5:
        raise ValueError(f"margin must lie in (0, 1/2), got {margin}")
    return (
        SmoothStep(2.0, 3.0, -1.0, 1.0, margin),
        SmoothStep(3.0, 4.0, 0.0, 1.0, margin),
        SmoothStep(4.0, 5.0, 1.0, -1.0, margin),
    )


def ramp_profiles():
    """Piecewise-linear stand-ins for :func:`delta_profiles` (no plateaus)."""
    return (
        LinearRamp(2.0, 3.0, -1.0, 1.0),
        LinearRamp(3.0, 4.0, 0.0, 1.0),
        LinearRamp(4.0, 5.0, 1.0, -1.0),
    )


def eta_profile(margin=0.05):
    """Smooth ``eta`` on [1/2, 1] with ``eta(1/2) = 1`` and ``eta(1) = 0``.

    Values lie in [0, 1]; constant within ``margin`` of both ends.
    """
    if not 0.0 < margin < 0.25:
        raise ValueError(f"margin must lie in (0, 1/4), got {margin}")
    return SmoothStep(0.5, 1.0, 1.0, 0.0, margin)
