"""Besov norms on the whole smoothness scale, Bessel lifts, and multipliers.

Positive fractional orders use the second-difference functional

    u(. + x) - 2 u + u(. - x)

measured in L^p over a dyadic set of displacements; orders above one add the
Sobolev part and apply the functional to the top derivatives (integer orders
follow the strictly-less-than bracket, giving Zygmund-type norms); orders at
or below zero are lifted to order one with a Bessel potential first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularMultiplier
from .grid import (
    Field,
    apply_multiplier,
    lp_norm,
    spectral_derivative,
    translate,
)
from .pdo import multi_indices, mi_order, unit_directions

INF = math.inf


@dataclass(frozen=True)
class BesovParams:
    """A point (alpha, p, q) on the Besov scale; p, q may be math.inf."""

    alpha: float
    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1.0):
                raise ValueError(f"{name} must lie in [1, inf]")


@dataclass
class MultiplierSpec:
    """A matrix-valued symbol a(xi) with polynomial growth of given degree."""

    func: object  # callable xi-array (*shape, m) -> (*shape,) or (*shape, l, l)
    degree: float = 0.0


def bessel_lift(gamma: float, f: Field) -> Field:
    """Convolution with the Bessel potential: multiplier (1+|xi|^2)^(-gamma/2)."""
    xi = f.grid.freqs()
    mult = (1.0 + np.sum(xi**2, axis=-1)) ** (-gamma / 2.0)
    return apply_multiplier(f, mult.astype(np.complex128))


def fourier_multiplier(spec: MultiplierSpec, f: Field) -> Field:
    vals = np.asarray(spec.func(f.grid.freqs()), dtype=np.complex128)
    if not np.all(np.isfinite(vals)):
        raise SingularMultiplier("multiplier non-finite on the frequency lattice")
    return apply_multiplier(f, vals)


def sobolev_norm(f: Field, k: int, p: float) -> float:
    """W^{k,p} norm: sum of L^p norms of all derivatives up to order k."""
    total = 0.0
    for alpha in multi_indices(f.grid.dim, k):
        total += lp_norm(spectral_derivative(f, alpha), p)
    return total


def winfty_norm(f: Field, order: int) -> float:
    """W^{N,inf} norm via spectral derivatives."""
    return sobolev_norm(f, order, INF)


def _sphere_area(m: int) -> float:
    return 2.0 * np.pi ** (m / 2.0) / math.gamma(m / 2.0)


def displacement_shells(grid) -> list:
    """Dyadic radii from L/2 down to roughly the 2^-(log2 N - 1) floor."""
    j_max = int(np.log2(grid.points_per_axis)) - 1
    floor = 2.0 ** (-j_max)
    radii = []
    rho = grid.half_period / 2.0
    while rho >= floor and len(radii) < 40:
        radii.append(rho)
        rho *= 0.5
    if len(radii) < 2:  # tiny grids still get two shells
        radii = [grid.half_period / 2.0, grid.half_period / 4.0]
    return radii


def second_difference_seminorm(
    f: Field, alpha: float, p: float, q: float, directions: int = 8
) -> float:
    """The |x|^(-alpha)-weighted second-difference functional, 0 < alpha <= 1."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("second-difference seminorm needs alpha in (0, 1]")
    radii = displacement_shells(f.grid)
    dirs = unit_directions(f.grid.dim, directions)
    shell_vals = []
    for rho in radii:
        vals = []
        for omega in dirs:
            h = rho * omega
            diff = translate(f, h) - 2.0 * f + translate(f, -h)
            vals.append(lp_norm(diff, p) / rho**alpha)
        shell_vals.append(vals)
    arr = np.asarray(shell_vals)
    if np.isinf(q):
        return float(np.max(arr))
    # per-shell midpoint rule in log-radius against the measure dx / |x|^m
    area = _sphere_area(f.grid.dim)
    integral = np.sum(np.mean(arr**q, axis=1)) * area * math.log(2.0)
    return float(integral ** (1.0 / q))


def besov_norm(f: Field, params: BesovParams) -> float:
    alpha, p, q = params.alpha, params.p, params.q
    if alpha <= 0.0:
        # lift 1 - alpha orders up the scale, then measure at order one
        lifted = bessel_lift(1.0 - alpha, f)
        return besov_norm(lifted, BesovParams(1.0, p, q))
    if alpha <= 1.0:
        return lp_norm(f, p) + second_difference_seminorm(f, alpha, p, q)
    k = math.ceil(alpha) - 1  # strictly-less-than bracket: [alpha] < alpha
    frac = alpha - k  # in (0, 1]; equals 1 at integer alpha (Zygmund case)
    total = sobolev_norm(f, k, p)
    for beta in multi_indices(f.grid.dim, k):
        if mi_order(beta) == k:
            df = spectral_derivative(f, beta)
            total += second_difference_seminorm(df, frac, p, q)
    return total


def product_estimate_check(
    a: Field, f: Field, params: BesovParams, C: float = 32.0, N: int = 4
) -> dict:
    """Measure ||a f|| against C (||a||_inf ||f|| + ||a||_{W^N,inf} ||f||_{-1}).

    Diagnostic, not a theorem prover: reports both sides and their ratio for
    a configured (C, N).
    """
    af = Field(f.grid, a.samples[..., :1] * f.samples)
    lhs = besov_norm(af, params)
    a_inf = lp_norm(a, INF)
    a_wn = winfty_norm(a, N)
    f_b = besov_norm(f, params)
    f_lower = besov_norm(f, BesovParams(params.alpha - 1.0, params.p, params.q))
    rhs = C * (a_inf * f_b + a_wn * f_lower)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else math.inf,
        "C": C,
        "N": N,
        "a_inf": a_inf,
        "a_wn_inf": a_wn,
    }
