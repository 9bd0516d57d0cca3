"""Linear partial differential operators with smooth matrix coefficients.

An operator is a finite map from multi-indices to matrix coefficient arrays
of shape (*grid.shape, out_channels, in_channels).  Derivatives of fields are
spectral (exact on band-limited data); coefficient multiplication is
pointwise.  Symbol calculus, adjoints, compositions, commutators with
cutoffs, and the clipped frozen-coefficient globalization live here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChannelMismatch, GridMismatch
from .grid import Field, GridSpec, dft, idft, spectral_derivative, SpectralField


def multi_indices(dim: int, max_order: int):
    """All alpha in N^dim with |alpha| <= max_order."""
    out = []
    for total in range(max_order + 1):
        for alpha in itertools.product(range(total + 1), repeat=dim):
            if sum(alpha) == total:
                out.append(alpha)
    return out


def mi_order(alpha) -> int:
    return sum(alpha)


def mi_binom(alpha, gamma) -> int:
    """Product of per-axis binomials C(alpha_i, gamma_i)."""
    return math.prod(math.comb(a, g) for a, g in zip(alpha, gamma))


def mi_leq(gamma, alpha) -> bool:
    return all(g <= a for g, a in zip(gamma, alpha))


def sub_indices(alpha, strict=False):
    """All gamma <= alpha componentwise; strict drops gamma == alpha."""
    ranges = [range(a + 1) for a in alpha]
    for gamma in itertools.product(*ranges):
        if strict and gamma == tuple(alpha):
            continue
        yield gamma


@dataclass(eq=False)
class PDOperator:
    """Sum over alpha of C_alpha(x) d^alpha, C_alpha an (l1 x l0) matrix field."""

    grid: GridSpec
    order: int
    in_channels: int
    out_channels: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for alpha, arr in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.grid.dim:
                raise ValueError("multi-index length must equal grid dimension")
            if mi_order(alpha) > self.order:
                raise ValueError(f"|{alpha}| exceeds declared order {self.order}")
            arr = np.asarray(arr, dtype=np.complex128)
            expected = self.grid.shape + (self.out_channels, self.in_channels)
            if arr.shape == (self.out_channels, self.in_channels):
                arr = np.broadcast_to(arr, expected).copy()
            if arr.shape != expected:
                raise ValueError(f"coefficient for {alpha} has shape {arr.shape}")
            clean[alpha] = arr
        self.coeffs = clean

    def coefficient(self, alpha) -> np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        expected = self.grid.shape + (self.out_channels, self.in_channels)
        return self.coeffs.get(alpha, np.zeros(expected, dtype=np.complex128))

    def principal_indices(self):
        return [a for a in self.coeffs if mi_order(a) == self.order]

    def is_constant_coefficient(self, tol: float = 1e-12) -> bool:
        for arr in self.coeffs.values():
            flat = arr.reshape(-1, self.out_channels, self.in_channels)
            if np.max(np.abs(flat - flat[0])) > tol * (1.0 + np.max(np.abs(flat))):
                return False
        return True

    def frozen_at(self, x_index) -> "PDOperator":
        """Constant-coefficient operator with all coefficients evaluated at x_index."""
        x_index = tuple(int(i) for i in x_index)
        coeffs = {a: np.array(arr[x_index]) for a, arr in self.coeffs.items()}
        return PDOperator(self.grid, self.order, self.in_channels, self.out_channels, coeffs)


def operator_from_constant(grid: GridSpec, coeffs: dict, order=None) -> PDOperator:
    """Build an operator from {alpha: scalar or matrix} constant coefficients."""
    mats = {}
    channels = None
    for alpha, val in coeffs.items():
        mat = np.atleast_2d(np.asarray(val, dtype=np.complex128))
        mats[tuple(alpha)] = mat
        channels = mat.shape
    l1, l0 = channels
    if order is None:
        order = max(mi_order(a) for a in mats)
    return PDOperator(grid, order, l0, l1, mats)


def laplacian(grid: GridSpec, channels: int = 1, sign: float = 1.0) -> PDOperator:
    eye = sign * np.eye(channels)
    coeffs = {}
    for axis in range(grid.dim):
        alpha = tuple(2 if a == axis else 0 for a in range(grid.dim))
        coeffs[alpha] = eye
    return operator_from_constant(grid, coeffs, order=2)


def apply(P: PDOperator, f: Field) -> Field:
    if f.grid != P.grid:
        raise GridMismatch("operator and field grids differ")
    if f.channels != P.in_channels:
        raise ChannelMismatch(
            f"field has {f.channels} channels, operator expects {P.in_channels}"
        )
    out = np.zeros(P.grid.shape + (P.out_channels,), dtype=np.complex128)
    F = dft(f)
    xi = P.grid.freqs()
    for alpha, coeff in P.coeffs.items():
        mult = np.ones(P.grid.shape, dtype=np.complex128)
        for axis, a in enumerate(alpha):
            if a:
                mult = mult * (1j * xi[..., axis]) ** a
        deriv = idft(SpectralField(P.grid, F.coefficients * mult[..., None]))
        out += np.einsum("...ij,...j->...i", coeff, deriv.samples)
    return Field(P.grid, out)


def principal_symbol(P: PDOperator, x_index, xi) -> np.ndarray:
    """Top-order symbol sum_{|alpha|=n} C_alpha(x) (i xi)^alpha."""
    x_index = tuple(int(i) for i in x_index)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((P.out_channels, P.in_channels), dtype=np.complex128)
    for alpha in P.principal_indices():
        factor = np.prod([(1j * xi[a]) ** alpha[a] for a in range(P.grid.dim)])
        out += factor * P.coeffs[alpha][x_index]
    return out


def symbol_field(P: PDOperator, xi, principal: bool = True) -> np.ndarray:
    """Symbol matrix at every grid point for a fixed frequency vector."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(P.grid.shape + (P.out_channels, P.in_channels), dtype=np.complex128)
    indices = P.principal_indices() if principal else list(P.coeffs)
    for alpha in indices:
        factor = np.prod([(1j * xi[a]) ** alpha[a] for a in range(P.grid.dim)])
        out += factor * P.coeffs[alpha]
    return out


def unit_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors; (count, dim)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    rng = np.random.default_rng(0)
    vecs = rng.standard_normal((count, dim))
    return vecs / np.linalg.norm(vecs, axis=-1, keepdims=True)


def _min_singular_values(mats: np.ndarray) -> np.ndarray:
    if mats.shape[-1] == 1:
        return np.abs(mats[..., 0, 0])
    return np.linalg.svd(mats, compute_uv=False)[..., -1]


def ellipticity_margin(P: PDOperator, sphere_samples: int = 64) -> float:
    """Min over x and unit xi of the smallest singular value of the symbol."""
    if P.in_channels != P.out_channels:
        raise ChannelMismatch("ellipticity requires square channel counts")
    margin = np.inf
    for xi in unit_directions(P.grid.dim, sphere_samples):
        sv = _min_singular_values(symbol_field(P, xi, principal=True))
        margin = min(margin, float(np.min(sv)))
    return max(margin, 0.0)


def parameter_ellipticity_constant(
    Q: PDOperator, theta0: float, sphere_samples: int = 64, arc_samples: int = 17
):
    """Least C with |(r^n e^{i theta0} - sigma(i xi))^-1| <= C (r+|xi|)^-n, sampled.

    Samples (xi, r) on the quarter-sphere r^2 + |xi|^2 = 1 (enough by joint
    homogeneity) and x over the grid; returns (C, ok) with ok False if any
    sampled matrix is singular.
    """
    if Q.in_channels != Q.out_channels:
        raise ChannelMismatch("parameter-ellipticity requires square channels")
    n = Q.order
    ell = Q.in_channels
    eye = np.eye(ell)
    worst = 0.0
    ok = True
    s_vals = np.linspace(0.0, np.pi / 2.0, arc_samples)
    dirs = unit_directions(Q.grid.dim, sphere_samples)
    for s in s_vals:
        r = float(np.sin(s))
        rho = float(np.cos(s))
        for omega in dirs:
            xi = rho * omega
            if r == 0.0 and rho == 0.0:
                continue
            sym = symbol_field(Q, xi, principal=True)
            mats = (r**n) * np.exp(1j * theta0) * eye - sym
            sv = _min_singular_values(mats)
            smin = float(np.min(sv))
            if smin <= 1e-12:
                ok = False
                continue
            worst = max(worst, (r + float(np.linalg.norm(xi))) ** n / smin)
            if rho == 0.0:
                break  # r = 1, xi = 0: direction-independent
    return worst, ok


def _coeff_derivative(arr: np.ndarray, grid: GridSpec, alpha) -> np.ndarray:
    """Spectral d^alpha of a matrix coefficient array, entrywise."""
    l1, l0 = arr.shape[-2:]
    flat = Field(grid, arr.reshape(grid.shape + (l1 * l0,)))
    d = spectral_derivative(flat, alpha)
    return d.samples.reshape(grid.shape + (l1, l0))


def formal_adjoint(P: PDOperator) -> PDOperator:
    """P-dagger: phi -> sum_alpha (-1)^{|alpha|} d^alpha (C_alpha^H phi)."""
    out: dict = {}
    shape = P.grid.shape + (P.in_channels, P.out_channels)
    for alpha, arr in P.coeffs.items():
        sign = (-1.0) ** mi_order(alpha)
        herm = np.conj(np.swapaxes(arr, -1, -2))
        for gamma in sub_indices(alpha):
            diff = tuple(a - g for a, g in zip(alpha, gamma))
            term = sign * mi_binom(alpha, gamma) * _coeff_derivative(herm, P.grid, diff)
            if gamma in out:
                out[gamma] = out[gamma] + term
            else:
                out[gamma] = term
    out = {g: a for g, a in out.items() if np.max(np.abs(a)) > 0.0}
    if not out:
        out = {(0,) * P.grid.dim: np.zeros(shape, dtype=np.complex128)}
    return PDOperator(P.grid, P.order, P.out_channels, P.in_channels, out)


def compose(P2: PDOperator, P1: PDOperator) -> PDOperator:
    """Symbolic composition P2 o P1 via the Leibniz rule."""
    if P2.grid != P1.grid:
        raise GridMismatch("operators live on different grids")
    if P2.in_channels != P1.out_channels:
        raise ChannelMismatch("channel counts do not chain")
    out: dict = {}
    for beta, b_arr in P2.coeffs.items():
        for alpha, a_arr in P1.coeffs.items():
            for gamma in sub_indices(beta):
                diff = tuple(b - g for b, g in zip(beta, gamma))
                da = _coeff_derivative(a_arr, P1.grid, diff)
                term = mi_binom(beta, gamma) * np.einsum("...ij,...jk->...ik", b_arr, da)
                key = tuple(g + a for g, a in zip(gamma, alpha))
                if key in out:
                    out[key] = out[key] + term
                else:
                    out[key] = term
    order = P1.order + P2.order
    out = {k: v for k, v in out.items() if np.max(np.abs(v)) > 1e-14}
    return PDOperator(P1.grid, order, P1.in_channels, P2.out_channels, out)


def compose_adjoint_self(P: PDOperator) -> PDOperator:
    """T = P-dagger P, the formally self-adjoint square of P."""
    return compose(formal_adjoint(P), P)


def commutator_with_cutoff(P: PDOperator, psi: Field) -> PDOperator:
    """[P, psi] for a smooth scalar cutoff; order drops by at least one."""
    if psi.channels != 1:
        raise ChannelMismatch("cutoff must be scalar")
    if psi.grid != P.grid:
        raise GridMismatch("cutoff grid differs")
    out: dict = {}
    for alpha, arr in P.coeffs.items():
        for gamma in sub_indices(alpha, strict=True):
            diff = tuple(a - g for a, g in zip(alpha, gamma))
            dpsi = spectral_derivative(psi, diff).samples[..., 0]
            term = mi_binom(alpha, gamma) * arr * dpsi[..., None, None]
            if gamma in out:
                out[gamma] = out[gamma] + term
            else:
                out[gamma] = term
    order = max(P.order - 1, 0)
    shape = P.grid.shape + (P.out_channels, P.in_channels)
    out = {g: a for g, a in out.items() if np.max(np.abs(a)) > 0.0}
    if not out:
        out = {(0,) * P.grid.dim: np.zeros(shape, dtype=np.complex128)}
    return PDOperator(P.grid, order, P.in_channels, P.out_channels, out)


def _chi_clip(z: np.ndarray, c: float) -> np.ndarray:
    """Smooth radial retraction: identity for |z| <= c, |chi(z)| < 2c globally."""
    if c == 0.0:
        return np.zeros_like(z)
    mag = np.abs(z)
    scale = np.ones_like(mag)
    over = mag > c
    mo = mag[over]
    scale[over] = (c + c * np.tanh((mo - c) / c)) / mo
    return z * scale


def clip_extend(T: PDOperator, x0_index, phi: Field, t: float) -> PDOperator:
    """Freeze T's coefficients at x0 and clip the windowed deviation.

    Coefficients become T(x0) + chi_t(phi (T - T(x0))) with the clip level
    C_t the local oscillation of T over the radius-t ball around x0; the
    output agrees with T where phi = 1 and the deviation is small, equals the
    frozen operator far away, and deviates from T(x0) by at most 2 C_t.
    """
    x0_index = tuple(int(i) for i in x0_index)
    coords = T.grid.coords().real
    x0 = coords[x0_index]
    period = 2.0 * T.grid.half_period
    d = coords - x0
    d = (d + T.grid.half_period) % period - T.grid.half_period
    ball = np.sqrt(np.sum(d**2, axis=-1)) <= t

    c_t = 0.0
    for arr in T.coeffs.values():
        dev = np.abs(arr - arr[x0_index])
        c_t = max(c_t, float(np.max(dev[ball])))

    phi_vals = phi.samples[..., 0].real
    out = {}
    for alpha, arr in T.coeffs.items():
        frozen = arr[x0_index]
        dev = phi_vals[..., None, None] * (arr - frozen)
        out[alpha] = frozen + _chi_clip(dev, c_t)
    return PDOperator(T.grid, T.order, T.in_channels, T.out_channels, out)


# ---------------------------------------------------------------------------
# Operator description files (JSON)
# ---------------------------------------------------------------------------

_TOKENS = ("x", "x-1", "const")


def _eval_token(grid: GridSpec, spec: dict) -> np.ndarray:
    token = spec["token"]
    axis = int(spec.get("axis", 0))
    scale = complex(spec.get("scale", 1.0))
    x = grid.coords().real[..., axis]
    if token == "x":
        vals = x
    elif token == "x-1":
        vals = x - 1.0
    elif token == "const":
        vals = np.ones(grid.shape)
    elif token == "product":
        vals = np.ones(grid.shape)
        for sub in spec["factors"]:
            vals = vals * _eval_token(grid, sub)[..., 0, 0]
    else:
        raise ValueError(f"unknown coefficient token {token!r}; allowed: {_TOKENS}")
    return (scale * vals)[..., None, None].astype(np.complex128)


def operator_from_description(grid: GridSpec, desc: dict) -> PDOperator:
    """Build an operator from {order, channels, entries: [{alpha, coeff}]}.

    A coeff is either a constant matrix (nested list of numbers or [re, im]
    pairs) or a token spec {"token": ..., "scale": ..., "axis": ...} drawn
    from a small closed-form whitelist.
    """
    order = int(desc["order"])
    channels = int(desc.get("channels", 1))
    coeffs: dict = {}
    for entry in desc["entries"]:
        alpha = tuple(int(a) for a in entry["alpha"])
        cspec = entry["coeff"]
        if isinstance(cspec, dict):
            arr = _eval_token(grid, cspec)
            if channels != 1:
                raise ValueError("token coefficients are scalar-channel only")
        else:
            mat = np.asarray(cspec, dtype=float)
            if mat.ndim == 3:  # [re, im] pairs
                mat = mat[..., 0] + 1j * mat[..., 1]
            arr = np.atleast_2d(mat).astype(np.complex128)
        if alpha in coeffs:
            coeffs[alpha] = coeffs[alpha] + np.broadcast_to(
                arr, grid.shape + (channels, channels)
            )
        else:
            coeffs[alpha] = arr
    return PDOperator(grid, order, channels, channels, coeffs)
