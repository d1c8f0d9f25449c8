"""Norms as exact coefficient sums (Sobolev, directional, Gevrey-weighted) or
grid quadratures (Lp), in the normalized measure dx/(4 pi^2)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import SpectralField
from .operators import DissipParams, gevrey_multiplier

WEIGHT_CAP = 700.0  # keep exp() within double range; beyond it the result is flagged


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = False) -> float:
    """H^s norm with weight (1+|k|^2)^s, or the homogeneous |k|^{2s} sum (k=0 omitted)."""
    mod2 = np.abs(f.coeffs) ** 2
    if homogeneous:
        ksq = f.grid.k_sq.copy()
        ksq[0, 0] = 1.0  # dummy; the k=0 term is excluded below
        w = ksq**s
        w[0, 0] = 0.0
        return float(np.sqrt(np.sum(w * mod2)))
    w = (1.0 + f.grid.k_sq) ** s
    return float(np.sqrt(np.sum(w * mod2)))


def lp_norm(f: SpectralField, p: float) -> float:
    """L^p norm by grid quadrature of |f|^p in the normalized measure."""
    if not p > 1.0:
        raise ValueError(f"Lebesgue exponent must exceed 1, got {p}")
    v = np.abs(f.values())
    return float(np.mean(v**p) ** (1.0 / p))


def vector_lp_norm(f1: SpectralField, f2: SpectralField, p: float) -> float:
    """L^p norm of the pointwise magnitude of the vector field (f1, f2)."""
    if not p > 1.0:
        raise ValueError(f"Lebesgue exponent must exceed 1, got {p}")
    mag = np.sqrt(f1.values() ** 2 + f2.values() ** 2)
    return float(np.mean(mag**p) ** (1.0 / p))


def directional_seminorm(f: SpectralField, axis: int, exponent: float, s: float) -> float:
    """Homogeneous H^s norm of |d_axis|^exponent f."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    k = f.grid.k1 if axis == 1 else f.grid.k2
    weighted = np.abs(k) ** exponent * f.coeffs
    return sobolev_norm(SpectralField(f.grid, weighted), s, homogeneous=True)


class GevreyNorm(NamedTuple):
    value: float
    saturated: bool
    saturated_mode: tuple[int, int] | None


def gevrey_weighted_norm(f: SpectralField, t: float, s: float, p: DissipParams,
                         cap: float = WEIGHT_CAP) -> GevreyNorm:
    """H^s norm of exp((t/2) B(D)) f, flagged (not clipped) on weight overflow."""
    if t < 0:
        raise ValueError(f"weight time must be nonnegative, got {t}")
    exponent = 0.5 * t * gevrey_multiplier(f.grid, p)
    live = np.abs(f.coeffs) > 0.0

    def worst_mode(selector):
        idx = np.unravel_index(np.argmax(np.where(selector, exponent, -np.inf)),
                               exponent.shape)
        return (int(f.grid.k1[idx[0], 0]), int(f.grid.k2[0, idx[1]]))

    over = live & (exponent > cap)
    if np.any(over):
        return GevreyNorm(float("inf"), True, worst_mode(over))
    weighted = np.where(live, np.exp(np.where(live, exponent, 0.0)) * f.coeffs, 0.0)
    value = sobolev_norm(SpectralField(f.grid, weighted), s)
    if not math.isfinite(value):
        return GevreyNorm(float("inf"), True, worst_mode(live))
    return GevreyNorm(value, False, None)


@dataclass(frozen=True)
class NormRequest:
    """Selects one norm family; only the fields relevant to `kind` are read."""

    kind: str  # Hs | Hs_dot | Lp | directional | gevrey_weighted
    s: float = 0.0
    p: float = 2.0
    axis: int = 1
    exponent: float = 0.0
    weight_time: float = 0.0
    gevrey_params: DissipParams | None = field(default=None)

    KINDS = ("Hs", "Hs_dot", "Lp", "directional", "gevrey_weighted")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}; expected one of {self.KINDS}")


def evaluate_norm(f: SpectralField, req: NormRequest) -> float:
    if req.kind == "Hs":
        return sobolev_norm(f, req.s)
    if req.kind == "Hs_dot":
        return sobolev_norm(f, req.s, homogeneous=True)
    if req.kind == "Lp":
        return lp_norm(f, req.p)
    if req.kind == "directional":
        return directional_seminorm(f, req.axis, req.exponent, req.s)
    if req.gevrey_params is None:
        raise ValueError("gevrey_weighted norm needs gevrey_params")
    return gevrey_weighted_norm(f, req.weight_time, req.s, req.gevrey_params).value
