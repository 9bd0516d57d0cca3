"""Smooth bumps, ramps, and plateau windows.

Everything here is built from the standard bump exp(-1/(1 - r^2)).  The ramp
is its normalized antiderivative, cached on a dense grid once; its first and
second derivatives are available in closed form, which the singular casework
relies on.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, GridSpec


def bump(r):
    """exp(-1/(1-r^2)) for |r| < 1, else 0.  Vectorized."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ri * ri))
    return out


def bump_d1(r):
    """Derivative of bump with respect to r."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    denom = 1.0 - ri * ri
    out[inside] = np.exp(-1.0 / denom) * (-2.0 * ri / denom**2)
    return out


def _exp_side(t):
    """exp(-1/t) for t > 0, else 0; underflows cleanly to zero."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    with np.errstate(under="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def ramp(t):
    """Smooth monotone 0 -> 1 transition on [0, 1]; constant outside.

    Closed form e(t) / (e(t) + e(1-t)) with e(t) = exp(-1/t), so the first
    and second derivatives below are exact, not tabulated.
    """
    t = np.asarray(t, dtype=float)
    a = _exp_side(t)
    b = _exp_side(1.0 - t)
    return a / (a + b)


def _ramp_pieces(t):
    t = np.asarray(t, dtype=float)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    return mid, tm, a, b


def ramp_d1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid, tm, a, b = _ramp_pieces(t)
    w = 1.0 / tm**2 + 1.0 / (1.0 - tm) ** 2
    out[mid] = a * b * w / (a + b) ** 2
    return out


def ramp_d2(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid, tm, a, b = _ramp_pieces(t)
    s = 1.0 - tm
    u = a * b
    w = 1.0 / tm**2 + 1.0 / s**2
    du = u * (1.0 / tm**2 - 1.0 / s**2)
    dw = -2.0 / tm**3 + 2.0 / s**3
    d = (a + b) ** 2
    dd = 2.0 * (a + b) * (a / tm**2 - b / s**2)
    out[mid] = (du * w + u * dw) / d - u * w * dd / d**2
    return out


class Plateau:
    """Even C^inf profile: 1 on [-inner, inner], 0 outside [-outer, outer]."""

    def __init__(self, inner: float, outer: float):
        if not 0 < inner < outer:
            raise ValueError("need 0 < inner < outer")
        self.inner = inner
        self.outer = outer
        self._w = outer - inner

    def _t(self, x):
        return (self.outer - np.abs(x)) / self._w

    def __call__(self, x):
        return ramp(self._t(x))

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return ramp_d1(self._t(x)) * (-np.sign(x) / self._w)

    def d2(self, x):
        # sign(x)^2 = 1 wherever d1 is nonzero; the profile is flat at x = 0.
        return ramp_d2(self._t(x)) / self._w**2


def radial_window(grid: GridSpec, inner: float, outer: float) -> Field:
    """Scalar field: smooth plateau in |x| around the origin."""
    prof = Plateau(inner, outer)
    r = np.sqrt(np.sum(grid.coords().real ** 2, axis=-1))
    return Field(grid, prof(r)[..., None])


def box_window(grid: GridSpec, center, inner: float, outer: float) -> Field:
    """Tensor-product plateau around an arbitrary center, torus min-image."""
    prof = Plateau(inner, outer)
    center = np.asarray(center, dtype=float)
    coords = grid.coords().real
    vals = np.ones(grid.shape)
    period = 2.0 * grid.half_period
    for axis in range(grid.dim):
        d = coords[..., axis] - center[axis]
        d = (d + grid.half_period) % period - grid.half_period
        vals = vals * prof(d)
    return Field(grid, vals[..., None])


def box_mask(grid: GridSpec, center, halfwidth: float) -> np.ndarray:
    """Boolean mask of the cube of given halfwidth around center (min-image)."""
    center = np.asarray(center, dtype=float)
    coords = grid.coords().real
    period = 2.0 * grid.half_period
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        d = coords[..., axis] - center[axis]
        d = (d + grid.half_period) % period - grid.half_period
        mask &= np.abs(d) <= halfwidth
    return mask
