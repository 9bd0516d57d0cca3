"""Friedrichs mollifiers and the convergence experiments built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EpsilonOutOfRange
from .grid import Field, GridSpec, dft, idft, lp_norm, SpectralField
from .pdo import PDOperator, apply


@dataclass(frozen=True)
class MollifierKernel:
    """Radial profile h supported in the unit ball; unit mass after sampling."""

    profile: object  # callable r-array -> values, zero for r >= 1
    name: str = "bump"


def standard_bump_kernel() -> MollifierKernel:
    def profile(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
        return out

    return MollifierKernel(profile, "bump")


def polynomial_kernel() -> MollifierKernel:
    """C^4 piecewise-polynomial alternative profile (1 - r^2)^5."""

    def profile(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = (1.0 - r[inside] ** 2) ** 5
        return out

    return MollifierKernel(profile, "poly5")


def kernel_field(grid: GridSpec, eps: float, kernel: MollifierKernel) -> Field:
    """Sample h_eps on the grid, renormalized to exact unit discrete mass."""
    r = np.sqrt(np.sum(grid.coords().real ** 2, axis=-1)) / eps
    vals = kernel.profile(r)
    mass = vals.sum() * grid.spacing**grid.dim
    if mass <= 0:
        raise EpsilonOutOfRange(f"eps={eps} leaves no kernel samples")
    return Field(grid, (vals / mass)[..., None])


def mollify(f: Field, eps: float, kernel: MollifierKernel | None = None) -> Field:
    """Spectral convolution with the sampled, mass-renormalized dilate h_eps."""
    if kernel is None:
        kernel = standard_bump_kernel()
    grid = f.grid
    if not (2.0 * grid.spacing <= eps < grid.half_period / 4.0):
        raise EpsilonOutOfRange(
            f"eps={eps} outside [{2 * grid.spacing}, {grid.half_period / 4.0})"
        )
    h = kernel_field(grid, eps, kernel)
    Fh = dft(h).coefficients[..., 0]
    Ff = dft(f)
    conv = Ff.coefficients * (Fh * grid.volume)[..., None]
    return idft(SpectralField(grid, conv))


def admissible_eps_sequence(grid: GridSpec, count: int = 5, ratio: float = 0.5) -> list:
    """Geometric sweep from L/8 down, truncated at the 2*spacing floor."""
    eps = grid.half_period / 8.0
    out = []
    floor = 2.0 * grid.spacing
    for _ in range(count):
        if eps < floor:
            break
        out.append(eps)
        eps *= ratio
    return out


@dataclass
class ErrorTable:
    """Per-epsilon errors plus trend diagnostics."""

    rows: list = field(default_factory=list)  # [{"eps": ..., "error": ...}]
    norm_kind: str = "lp"

    def errors(self):
        return [row["error"] for row in self.rows]

    @property
    def final_over_first(self) -> float:
        e = self.errors()
        if not e or e[0] == 0.0:
            return 0.0
        return e[-1] / e[0]

    @property
    def converging(self) -> bool:
        return self.final_over_first < 0.25

    def rates(self):
        """log2 error ratios between consecutive epsilon halvings."""
        e = self.errors()
        out = []
        for a, b in zip(e, e[1:]):
            out.append(float(np.log2(a / b)) if b > 0 and a > 0 else np.inf)
        return out

    def as_dict(self):
        return {
            "rows": self.rows,
            "norm_kind": self.norm_kind,
            "final_over_first": self.final_over_first,
            "converging": self.converging,
            "rates": self.rates(),
        }


def _windowed_error(diff: Field, p: float, mask) -> float:
    return lp_norm(diff, p, mask=mask)


def mollifier_convergence_experiment(
    P: PDOperator,
    f: Field,
    p: float,
    eps_seq,
    window_mask,
    kernel: MollifierKernel | None = None,
    reference: Field | None = None,
) -> ErrorTable:
    """Errors ||P f_eps - P f||_{L^p(window)} along an epsilon sweep."""
    if reference is None:
        reference = apply(P, f)
    table = ErrorTable(norm_kind=f"L{p}(window)")
    for eps in eps_seq:
        feps = mollify(f, eps, kernel)
        err = _windowed_error(apply(P, feps) - reference, p, window_mask)
        table.rows.append({"eps": float(eps), "error": float(err)})
    return table


def uniform_convergence_experiment(
    P: PDOperator,
    f: Field,
    eps_seq,
    window_mask,
    kernel: MollifierKernel | None = None,
    reference: Field | None = None,
) -> ErrorTable:
    """Sup-norm version for C^k data (uniform convergence on the window)."""
    if reference is None:
        reference = apply(P, f)
    table = ErrorTable(norm_kind="Linf(window)")
    for eps in eps_seq:
        feps = mollify(f, eps, kernel)
        err = _windowed_error(apply(P, feps) - reference, np.inf, window_mask)
        table.rows.append({"eps": float(eps), "error": float(err)})
    return table
