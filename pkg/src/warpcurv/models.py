"""Ready-made chart metrics: flat, round, hyperbolic and a few coordinate models."""

import numpy as np

from .chart import ChartMetric

TWO_PI = 2.0 * np.pi


def _diag(entries):
    n = len(entries)
    return [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]


def euclidean(n=2):
    return ChartMetric(n, lambda x: _diag([1.0] * n), name=f"euclidean{n}")


def flat_torus(n=2, period=TWO_PI):
    """Flat metric with every axis periodic."""
    return ChartMetric(
        n,
        lambda x: _diag([1.0] * n),
        lower=(0.0,) * n,
        upper=(period,) * n,
        periodic=(True,) * n,
        name=f"flat_torus{n}",
    )


def flat_circle(period=TWO_PI):
    """The canonical metric du^2 on a circle of length ``period``."""
    return ChartMetric(1, lambda x: [[1.0]], lower=(0.0,), upper=(period,), periodic=(True,), name="flat_circle")


def polar_plane():
    """dr^2 + r^2 dtheta^2 on r > 0."""
    return ChartMetric(
        2,
        lambda x: [[1.0, 0.0], [0.0, x[0] ** 2]],
        lower=(0.0, 0.0),
        upper=(np.inf, TWO_PI),
        periodic=(False, True),
        name="polar_plane",
    )


def round_sphere(radius=1.0):
    """radius^2 (dtheta^2 + sin^2 theta dphi^2) on 0 < theta < pi."""
    r2 = radius * radius
    return ChartMetric(
        2,
        lambda x: [[r2, 0.0], [0.0, r2 * np.sin(x[0]) ** 2]],
        lower=(0.0, 0.0),
        upper=(np.pi, TWO_PI),
        periodic=(False, True),
        name="round_sphere",
    )


def round_sphere3():
    """Unit 3-sphere in hyperspherical coordinates."""

    def comps(x):
        s0 = np.sin(x[0]) ** 2
        return _diag([1.0, s0, s0 * np.sin(x[1]) ** 2])

    return ChartMetric(
        3, comps, lower=(0.0, 0.0, 0.0), upper=(np.pi, np.pi, TWO_PI),
        periodic=(False, False, True), name="round_sphere3",
    )


def half_plane():
    """Upper half-plane (dx^2 + dy^2) / y^2, curvature -1."""

    def comps(x):
        w = 1.0 / x[1] ** 2
        return [[w, 0.0], [0.0, w]]

    return ChartMetric(2, comps, lower=(-np.inf, 0.0), upper=(np.inf, np.inf), name="half_plane")


def half_space(n=3):
    """Upper half-space model of hyperbolic n-space, curvature -1."""

    def comps(x):
        w = 1.0 / x[n - 1] ** 2
        return _diag([w] * n)

    lower = (-np.inf,) * (n - 1) + (0.0,)
    return ChartMetric(n, comps, lower=lower, name=f"half_space{n}")


def hyperbolic_cylinder(period=TWO_PI):
    """cosh^2(y) dx^2 + dy^2 with x periodic: a hyperbolic surface, curvature -1.

    The core circle ``y = 0`` is its unique closed geodesic.
    """
    return ChartMetric(
        2,
        lambda x: [[np.cosh(x[1]) ** 2, 0.0], [0.0, 1.0]],
        lower=(0.0, -np.inf),
        upper=(period, np.inf),
        periodic=(True, False),
        name="hyperbolic_cylinder",
    )


def tilted_metric():
    """A non-diagonal, non-constant-curvature 3-D metric used in stress tests."""

    def comps(x):
        a = 2.0 + np.sin(x[0]) * np.cos(x[1])
        b = 1.5 + 0.3 * np.cos(x[2])
        c = 0.3 * np.sin(x[0] + x[2])
        return [
            [a, c, 0.1 * np.cos(x[1])],
            [c, b, 0.2 * np.sin(x[0])],
            [0.1 * np.cos(x[1]), 0.2 * np.sin(x[0]), 1.0 + 0.25 * x[1] ** 2],
        ]

    return ChartMetric(3, comps, name="tilted3")


MODELS = {
    "euclidean2": lambda: euclidean(2),
    "euclidean3": lambda: euclidean(3),
    "flat_circle": flat_circle,
    "flat_torus2": lambda: flat_torus(2),
    "flat_torus3": lambda: flat_torus(3),
    "polar_plane": polar_plane,
    "round_sphere": round_sphere,
    "round_sphere3": round_sphere3,
    "half_plane": half_plane,
    "half_space3": lambda: half_space(3),
    "hyperbolic_cylinder": hyperbolic_cylinder,
    "tilted3": tilted_metric,
}


def model(name):
    """Look up a model metric by its registry name."""
    try:
        return MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
