"""The explicit 1-D counterexample suite and regularity-gap measurements.

Centerpiece: the third-order operator -x d^3 + (x-1) d^2 whose graph space
contains u = phi(x) ln|x| (with phi(x) = x near zero).  That element is one
derivative short of the operator order and cannot be approximated by smooth
elements in the graph norm; both facts are measured here on refined
reference grids whose cells exclude the singular point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besov import BesovParams, besov_norm, sobolev_norm
from .grid import Field, GridSpec, lp_norm, spectral_derivative
from .pdo import PDOperator
from .profiles import Plateau, radial_window


# ---------------------------------------------------------------------------
# Example operator A = -x d^3 + (x - 1) d^2 on a 1-D torus grid
# ---------------------------------------------------------------------------


@dataclass
class ExampleAOperator:
    grid: GridSpec
    A: PDOperator
    phi: Field  # window with phi(x) = x near the origin


def build_example_a(grid: GridSpec, inner: float = 0.5, outer: float = 1.0) -> ExampleAOperator:
    if grid.dim != 1:
        raise ValueError("the example operator lives in one dimension")
    x = grid.coords().real[..., 0]
    coeffs = {
        (3,): (-x)[..., None, None].astype(np.complex128),
        (2,): (x - 1.0)[..., None, None].astype(np.complex128),
    }
    A = PDOperator(grid, 3, 1, 1, coeffs)
    prof = Plateau(inner, outer)
    phi = Field(grid, (x * prof(x))[..., None])
    return ExampleAOperator(grid, A, phi)


# ---------------------------------------------------------------------------
# Staggered reference line grids (cells exclude x = 0)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LineGrid:
    """Uniform staggered grid on [-L, L): x_j = -L + (j + 1/2) h."""

    n: int
    half_period: float

    @property
    def h(self) -> float:
        return 2.0 * self.half_period / self.n

    def points(self) -> np.ndarray:
        return -self.half_period + (np.arange(self.n) + 0.5) * self.h

    def quad(self, vals: np.ndarray, mask=None) -> float:
        if mask is not None:
            vals = vals[mask]
        return float(np.sum(vals) * self.h)

    def lp(self, vals: np.ndarray, p: float, mask=None) -> float:
        mag = np.abs(vals)
        if mask is not None:
            mag = mag[mask]
        if math.isinf(p):
            return float(np.max(mag)) if mag.size else 0.0
        return float((np.sum(mag**p) * self.h) ** (1.0 / p))

    def fd1(self, vals: np.ndarray) -> np.ndarray:
        return (np.roll(vals, -1) - np.roll(vals, 1)) / (2.0 * self.h)

    def fd2(self, vals: np.ndarray) -> np.ndarray:
        return (np.roll(vals, -1) - 2.0 * vals + np.roll(vals, 1)) / self.h**2

    def value_at_zero(self, vals: np.ndarray) -> float:
        # 0 falls between the two central staggered points
        i = self.n // 2
        return float(0.5 * (vals[i - 1] + vals[i]).real)

    def antiderivative_from_zero(self, vals: np.ndarray) -> np.ndarray:
        cum = np.concatenate([[0.0], np.cumsum((vals[1:] + vals[:-1]) * 0.5 * self.h)])[: self.n]
        return cum - self.value_at_zero(cum)


@dataclass
class SingularElement:
    """u = phi ln|x| with phi = x * plateau; all derivatives in closed form."""

    plateau: Plateau

    def u(self, x):
        x = np.asarray(x, dtype=float)
        return self.plateau(x) * x * np.log(np.abs(x))

    def du(self, x):
        x = np.asarray(x, dtype=float)
        c, c1 = self.plateau(x), self.plateau.d1(x)
        ln = np.log(np.abs(x))
        return (c1 * x + c) * ln + c

    def d2u(self, x):
        x = np.asarray(x, dtype=float)
        c, c1, c2 = self.plateau(x), self.plateau.d1(x), self.plateau.d2(x)
        ln = np.log(np.abs(x))
        return c2 * x * ln + 2.0 * c1 * (ln + 1.0) + c / x

    def v(self, x):
        """x * d2u: smooth everywhere, equals 1 near the origin."""
        x = np.asarray(x, dtype=float)
        c, c1, c2 = self.plateau(x), self.plateau.d1(x), self.plateau.d2(x)
        ln = np.log(np.abs(x))
        return c2 * x * x * ln + 2.0 * c1 * x * (ln + 1.0) + c


def _bump_samples(line: LineGrid, eps: float) -> np.ndarray:
    x = line.points()
    r = np.abs(x) / eps
    vals = np.zeros_like(x)
    inside = r < 1.0
    vals[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    mass = vals.sum() * line.h
    return vals / mass


def _circular_convolve(line: LineGrid, f: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    conv = np.fft.ifft(np.fft.fft(f) * np.fft.fft(np.fft.ifftshift(kernel)))
    return conv.real * line.h


# ---------------------------------------------------------------------------
# Hardy averaging on the spectral grid
# ---------------------------------------------------------------------------


@dataclass
class HardyReport:
    h: Field
    h_norm: float
    dg_norm: float
    ratio: float


def hardy_average(g: Field, p: float = 2.0) -> HardyReport:
    """h(x) = x^{-1} * integral_0^x dg, with h(0) = dg(0), plus the Hardy ratio."""
    if g.grid.dim != 1 or g.channels != 1:
        raise ValueError("hardy_average expects a scalar 1-D field")
    grid = g.grid
    x = grid.coords().real[..., 0]
    dg = spectral_derivative(g, (1,)).samples[..., 0]
    cum = np.concatenate(
        [[0.0 + 0.0j], np.cumsum((dg[1:] + dg[:-1]) * 0.5 * grid.spacing)]
    )
    zero_idx = grid.points_per_axis // 2  # x = 0 is a grid point
    cum = cum - cum[zero_idx]
    h = np.empty_like(cum)
    nonzero = x != 0.0
    h[nonzero] = cum[nonzero] / x[nonzero]
    h[~nonzero] = dg[~nonzero]
    h_field = Field(grid, h[..., None])
    h_norm = lp_norm(h_field, p)
    dg_norm = lp_norm(Field(grid, dg[..., None]), p)
    ratio = h_norm / dg_norm if dg_norm > 0 else math.inf
    return HardyReport(h_field, h_norm, dg_norm, ratio)


# ---------------------------------------------------------------------------
# Non-density witness
# ---------------------------------------------------------------------------


def _trace_constant(line: LineGrid, p: float) -> float:
    """Measured constant in |w(0)| <= C (||w||_p + ||w'||_p) over bump probes."""
    x = line.points()
    best = 0.0
    for width in (0.05, 0.1, 0.2, 0.5, 1.0, 2.0):
        r = x / width
        w = np.zeros_like(x)
        inside = np.abs(r) < 1.0
        w[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2)) * np.e
        denom = line.lp(w, p) + line.lp(line.fd1(w), p)
        if denom > 0:
            best = max(best, line.value_at_zero(w) / denom)
    return best


def nondensity_witness(
    p: float,
    eps_seq,
    n_ref: int = 8192,
    half_period: float = math.pi,
    inner: float = 0.5,
    outer: float = 1.0,
) -> dict:
    """Smooth candidates u_eps get L^p-close to u while the graph distance stays up.

    For u = phi ln|x|, v = x d2 u equals 1 at the origin but x d2 u_eps
    vanishes there for every smooth u_eps, so the W^{1,p} distance of
    v_eps to v is bounded below via the 1-D trace inequality.
    """
    line = LineGrid(n_ref, half_period)
    elem = SingularElement(Plateau(inner, outer))
    x = line.points()
    u = elem.u(x)
    v = elem.v(x)

    rows = []
    for eps in eps_seq:
        kern = _bump_samples(line, eps)
        u_eps = _circular_convolve(line, u, kern)
        v_eps = x * line.fd2(u_eps)
        w = v_eps - v
        graph_err = line.lp(w, p) + line.lp(line.fd1(w), p)
        rows.append(
            {
                "eps": float(eps),
                "v_eps_at_0": line.value_at_zero(v_eps),
                "u_lp_error": line.lp(u_eps - u, p),
                "graph_error": float(graph_err),
            }
        )
    c_trace = _trace_constant(line, p)
    finest = rows[-2:]
    floor = min(r["graph_error"] for r in finest)
    return {
        "p": p,
        "v_at_0": 1.0,  # closed form: v = 1 identically near the origin
        "rows": rows,
        "trace_constant": c_trace,
        "trace_lower_bound": 1.0 / c_trace if c_trace > 0 else math.inf,
        "graph_error_floor": floor,
        "u_lp_decay": rows[0]["u_lp_error"] / rows[-1]["u_lp_error"]
        if rows[-1]["u_lp_error"] > 0
        else math.inf,
    }


# ---------------------------------------------------------------------------
# W^{1,p} inclusion / W^{2,p} exclusion under refinement
# ---------------------------------------------------------------------------


def w1p_inclusion_check(
    p: float,
    resolutions=(2048, 4096, 8192),
    half_period: float = math.pi,
    window: float | None = None,
    inner: float = 0.5,
    outer: float = 1.0,
) -> dict:
    """Reconstruct du from g = x d2u and track L^p_loc norms under refinement.

    Since d2u = g(0)/x + h with h the averaged derivative (g(x) - g(0))/x,
    du is rebuilt as g(0) ln|x| + antiderivative of h + fitted Heaviside and
    constant terms; its windowed L^p norm must be refinement-stable while the
    windowed L^p norm of d2u (a principal-value 1/x) must grow.
    """
    if window is None:
        window = half_period / 4.0
    elem = SingularElement(Plateau(inner, outer))
    w1_norms, w2_norms, fits, recon_err = [], [], [], []
    for n in resolutions:
        line = LineGrid(n, half_period)
        x = line.points()
        g = elem.v(x)  # g = x d2u
        g0 = line.value_at_zero(g)
        h = (g - g0) / x
        anti = line.antiderivative_from_zero(h)
        base = g0 * np.log(np.abs(x)) + anti
        du_true = elem.du(x)
        fit_mask = np.abs(x) > half_period / 4.0
        design = np.stack([(x > 0).astype(float), np.ones_like(x)], axis=-1)
        coef, *_ = np.linalg.lstsq(design[fit_mask], (du_true - base)[fit_mask], rcond=None)
        a0, const = float(coef[0]), float(coef[1])
        du_rec = base + a0 * design[..., 0] + const
        win = np.abs(x) <= window
        w1_norms.append(line.lp(du_rec, p, mask=win))
        w2_norms.append(line.lp(elem.d2u(x), p, mask=win))
        fits.append({"a0": a0, "C": const})
        recon_err.append(line.lp(du_rec - du_true, p, mask=fit_mask))
    w1_changes = [abs(b / a - 1.0) for a, b in zip(w1_norms, w1_norms[1:])]
    w2_growth = [b / a for a, b in zip(w2_norms, w2_norms[1:])]
    return {
        "p": p,
        "resolutions": list(resolutions),
        "w1p_window_norms": w1_norms,
        "w1p_rel_changes": w1_changes,
        "w2p_window_seminorms": w2_norms,
        "w2p_growth_factors": w2_growth,
        "fits": fits,
        "reconstruction_error": recon_err,
    }


# ---------------------------------------------------------------------------
# Regularity-gap trajectories
# ---------------------------------------------------------------------------


def log_singular_field(grid: GridSpec, inner: float = 1.0, outer: float = 2.0) -> Field:
    """Windowed |x|^2 log|x| in m = 2: second derivatives are log-singular."""
    coords = grid.coords().real
    r2 = np.sum(coords**2, axis=-1)
    vals = np.zeros(grid.shape)
    nz = r2 > 0
    vals[nz] = r2[nz] * 0.5 * np.log(r2[nz])
    win = radial_window(grid, inner, outer).samples[..., 0].real
    return Field(grid, (vals * win)[..., None])


def regularity_gap_experiment(
    grid_sizes=(64, 128, 256),
    half_period: float = math.pi,
    order: int = 2,
    stability_tol: float = 0.05,
) -> dict:
    """Refinement trajectories of the windowed singular field's norms.

    The L^1-scale claim: the windowed field stays in W^{k-1,1} and in the
    Besov endpoint B^k_{1,inf}; for p = 2 the full W^{k,2} norm is stable.
    The W^{k,1} divergence seen in external counterexamples is deliberately
    not certified here.
    """
    k = order
    trajectories = {"w_k_2": [], "w_km1_1": [], "besov_k_1_inf": []}
    for n in grid_sizes:
        grid = GridSpec(2, n, half_period)
        f = log_singular_field(grid)
        trajectories["w_k_2"].append(sobolev_norm(f, k, 2.0))
        trajectories["w_km1_1"].append(sobolev_norm(f, k - 1, 1.0))
        trajectories["besov_k_1_inf"].append(
            besov_norm(f, BesovParams(float(k), 1.0, math.inf))
        )

    def rel_changes(vals):
        return [abs(b / a - 1.0) for a, b in zip(vals, vals[1:])]

    verdicts = {}
    for name, vals in trajectories.items():
        changes = rel_changes(vals)
        verdicts[name] = {
            "rel_changes": changes,
            "stable": bool(changes and max(changes[-1:]) <= stability_tol),
        }
    return {
        "grid_sizes": list(grid_sizes),
        "trajectories": trajectories,
        "verdicts": verdicts,
        "note": (
            "W^{k,1} divergence is not certified: no counterexample is "
            "constructed here, only the positive stability claims are measured."
        ),
    }
