"""Second-order forward-mode differentiation.

A :class:`Jet` carries a value together with its gradient and (optionally)
Hessian with respect to ``n`` seed variables.  It is the multivariate,
vectorised form of nested dual numbers ``(a + b e1) + (c + d e1) e2``:
every arithmetic step propagates exact first and second derivatives, so a
metric written with ordinary numpy calls yields ``g``, ``dg`` and ``d2g``
to rounding accuracy.

Shapes: ``val`` has some batch shape ``S``, ``grad`` has ``S + (n,)`` and
``hess`` has ``S + (n, n)``.  ``hess`` is ``None`` for first-order jets.

numpy ufuncs dispatch to jets through ``__array_ufunc__``, so metric
components can be written as ``np.cosh(t) ** 2`` and evaluated either on
plain arrays or on jets.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Jet", "seed", "value", "where", "smooth_apply"]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, val, grad, hess=None):
        self.val = val
        self.grad = grad
        self.hess = hess

    # -- helpers -----------------------------------------------------------
    @property
    def order(self):
        return 1 if self.hess is None else 2

    @property
    def nvars(self):
        return self.grad.shape[-1]

    def _lift(self, c):
        """Promote a constant to a jet compatible with ``self``."""
        c = np.asarray(c, dtype=float)
        shape = np.broadcast_shapes(c.shape, np.shape(self.val))
        c = np.broadcast_to(c, shape)
        n = self.nvars
        grad = np.zeros(shape + (n,))
        hess = None if self.hess is None else np.zeros(shape + (n, n))
        return Jet(c, grad, hess)

    def chain(self, f0, f1, f2):
        """Apply a scalar function given its value and first two derivatives."""
        grad = f1[..., None] * self.grad
        hess = None
        if self.hess is not None:
            hess = f1[..., None, None] * self.hess + f2[..., None, None] * _outer(
                self.grad, self.grad
            )
        return Jet(f0, grad, hess)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            hess = None
            if self.hess is not None and other.hess is not None:
                hess = self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, hess)
        other = np.asarray(other, dtype=float)
        val = self.val + other
        grad, hess = self.grad, self.hess
        if np.shape(val) != np.shape(self.val):
            grad = np.broadcast_to(grad, np.shape(val) + grad.shape[-1:])
            if hess is not None:
                hess = np.broadcast_to(hess, np.shape(val) + hess.shape[-2:])
        return Jet(val, grad, hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            val = a.val * b.val
            grad = a.grad * np.asarray(b.val)[..., None] + b.grad * np.asarray(a.val)[..., None]
            hess = None
            if a.hess is not None and b.hess is not None:
                hess = (
                    a.hess * np.asarray(b.val)[..., None, None]
                    + b.hess * np.asarray(a.val)[..., None, None]
                    + _outer(a.grad, b.grad)
                    + _outer(b.grad, a.grad)
                )
            return Jet(val, grad, hess)
        c = np.asarray(other, dtype=float)
        hess = None if self.hess is None else self.hess * c[..., None, None]
        return Jet(self.val * c, self.grad * c[..., None], hess)

    __rmul__ = __mul__

    def reciprocal(self):
        x = np.asarray(self.val, dtype=float)
        inv = 1.0 / x
        return self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return np.exp(p * np.log(self))
        p = float(p)
        x = np.asarray(self.val, dtype=float)
        if p == 2.0:
            return self.chain(x * x, 2.0 * x, np.full_like(x, 2.0))
        if p == 1.0:
            return self
        if p == 0.0:
            return self._lift(np.ones_like(x))
        return self.chain(
            np.power(x, p), p * np.power(x, p - 1.0), p * (p - 1.0) * np.power(x, p - 2.0)
        )

    def __rpow__(self, base):
        return np.exp(self * np.log(base))

    # comparisons act on the value part (used for branch selection)
    def __lt__(self, other):
        return self.val < value(other)

    def __le__(self, other):
        return self.val <= value(other)

    def __gt__(self, other):
        return self.val > value(other)

    def __ge__(self, other):
        return self.val >= value(other)

    def __repr__(self):
        return f"Jet(val={self.val!r}, order={self.order}, nvars={self.nvars})"

    # -- numpy dispatch ----------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        if len(inputs) == 2:
            binary = _BINARY.get(ufunc)
            if binary is None:
                return NotImplemented
            return binary(*inputs)
        if len(inputs) == 1:
            unary = _UNARY.get(ufunc)
            if unary is None:
                return NotImplemented
            x = inputs[0]
            if unary == "neg":
                return -x
            if unary == "pos":
                return x
            return x.chain(*unary(np.asarray(x.val, dtype=float)))
        return NotImplemented


def _sqrt(x):
    r = np.sqrt(x)
    return r, 0.5 / r, -0.25 / (r * x)


def _tan(x):
    t = np.tan(x)
    s = 1.0 + t * t
    return t, s, 2.0 * t * s


def _tanh(x):
    t = np.tanh(x)
    s = 1.0 - t * t
    return t, s, -2.0 * t * s


def _arctan(x):
    d = 1.0 / (1.0 + x * x)
    return np.arctan(x), d, -2.0 * x * d * d


def _abs(x):
    return np.abs(x), np.sign(x), np.zeros_like(x)


_UNARY = {
    np.negative: "neg",
    np.positive: "pos",
    np.exp: lambda x: (np.exp(x),) * 3,
    np.log: lambda x: (np.log(x), 1.0 / x, -1.0 / (x * x)),
    np.sin: lambda x: (np.sin(x), np.cos(x), -np.sin(x)),
    np.cos: lambda x: (np.cos(x), -np.sin(x), -np.cos(x)),
    np.tan: _tan,
    np.sinh: lambda x: (np.sinh(x), np.cosh(x), np.sinh(x)),
    np.cosh: lambda x: (np.cosh(x), np.sinh(x), np.cosh(x)),
    np.tanh: _tanh,
    np.sqrt: _sqrt,
    np.square: lambda x: (x * x, 2.0 * x, np.full_like(x, 2.0)),
    np.arctan: _arctan,
    np.absolute: _abs,
}

_BINARY = {
    np.add: lambda a, b: a + b if isinstance(a, Jet) else b + a,
    np.subtract: lambda a, b: a - b if isinstance(a, Jet) else b.__rsub__(a),
    np.multiply: lambda a, b: a * b if isinstance(a, Jet) else b * a,
    np.true_divide: lambda a, b: a / b if isinstance(a, Jet) else b.__rtruediv__(a),
    np.power: lambda a, b: a ** b if isinstance(a, Jet) else b.__rpow__(a),
}


def seed(points, order=2):
    """Split ``points`` of shape ``S + (n,)`` into ``n`` independent jets."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    batch = points.shape[:-1]
    eye = np.eye(n)
    out = []
    for i in range(n):
        grad = np.broadcast_to(eye[i], batch + (n,)).copy()
        hess = np.zeros(batch + (n, n)) if order >= 2 else None
        out.append(Jet(points[..., i].copy(), grad, hess))
    return out


def value(x):
    """Value part of a jet, or ``x`` itself for plain numbers/arrays."""
    return x.val if isinstance(x, Jet) else x


def where(cond, a, b):
    """Elementwise select that understands jets (``cond`` is a plain mask)."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.where(cond, a, b)
    ref = a if isinstance(a, Jet) else b
    a = a if isinstance(a, Jet) else ref._lift(a)
    b = b if isinstance(b, Jet) else ref._lift(b)
    c = np.asarray(cond)
    val = np.where(c, a.val, b.val)
    grad = np.where(c[..., None], a.grad, b.grad)
    hess = None
    if a.hess is not None and b.hess is not None:
        hess = np.where(c[..., None, None], a.hess, b.hess)
    return Jet(val, grad, hess)


def smooth_apply(x, f0, f1, f2):
    """Evaluate a scalar function from separately supplied derivative callables.

    ``f0``, ``f1``, ``f2`` map plain arrays to the function value and its
    first and second derivatives.  Plain inputs return ``f0(x)``.
    """
    if isinstance(x, Jet):
        v = np.asarray(x.val, dtype=float)
        return x.chain(f0(v), f1(v), f2(v))
    return f0(np.asarray(x, dtype=float))
