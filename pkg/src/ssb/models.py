"""Reaction models plugged into the split stepper.

A :class:`ReactionModel` bundles per-component diffusivities with the local
reaction rates. Rates are pure functions of the component fields (and time);
any static spatial dependence is baked in when the model is bound to a grid,
so repeated evaluations do not recompute coordinate functions.

Units for the cardiac model follow the usual convention for this model
family: time in milliseconds, space in centimeters, so D = 1 cm^2/s is
0.001 cm^2/ms. The membrane variable u is dimensionless in [0, ~1];
``voltage_mv`` maps it to millivolts for display.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import Field2, Grid2

__all__ = [
    "ReactionModel",
    "FentonKarmaParams",
    "heat_with_source",
    "heat_source_rate",
    "allen_cahn",
    "allen_cahn_rate",
    "allen_cahn_ic",
    "fenton_karma",
    "fenton_karma_currents",
    "fenton_karma_rates",
    "fenton_karma_rest_state",
    "voltage_mv",
]

RateFn = Callable[[Sequence[np.ndarray], float], tuple[np.ndarray, ...]]


@dataclass(frozen=True)
class ReactionModel:
    """Pluggable multi-component reaction specification.

    ``rate_builder(grid)`` returns the rate function for that grid; the
    returned callable maps (fields, t) to one rate array per component and
    must be pure. Callers must not mutate the returned arrays (they may be
    cached spatial profiles).
    """

    names: tuple[str, ...]
    diffusivities: tuple[float, ...]
    rate_builder: Callable[[Grid2], RateFn]
    dt_hint: float | None = None

    def __post_init__(self):
        if len(self.names) != len(self.diffusivities):
            raise ValueError("one diffusivity per component required")
        if any(d < 0 for d in self.diffusivities):
            raise ValueError("diffusivities must be nonnegative")

    @property
    def n_components(self) -> int:
        return len(self.names)

    def rates_on(self, grid: Grid2) -> RateFn:
        return self.rate_builder(grid)


# -- heat equation with angular source ----------------------------------------


def heat_source_rate(x: np.ndarray, y: np.ndarray, cx: float = 0.0, cy: float = 0.0) -> np.ndarray:
    """Source -r*cos(2*theta) in polar coordinates about (cx, cy).

    Equals -(dx^2 - dy^2)/r and is defined as 0 at the center.
    """
    dx = np.asarray(x, dtype=float) - cx
    dy = np.asarray(y, dtype=float) - cy
    r = np.hypot(dx, dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, -(dx * dx - dy * dy) / np.where(r > 0, r, 1.0), 0.0)
    return out


def heat_with_source(d: float, cx: float = 0.0, cy: float = 0.0) -> ReactionModel:
    """One-component heat equation du/dt = d*lap(u) - r*cos(2*theta)."""
    if d <= 0:
        raise ValueError(f"diffusivity must be positive, got {d}")

    def build(grid: Grid2) -> RateFn:
        source = heat_source_rate(grid.xg, grid.yg, cx, cy)

        def rates(fields: Sequence[np.ndarray], t: float) -> tuple[np.ndarray, ...]:
            return (source,)

        return rates

    return ReactionModel(names=("u",), diffusivities=(d,), rate_builder=build)


# -- Allen-Cahn ----------------------------------------------------------------


def allen_cahn_rate(u: np.ndarray) -> np.ndarray:
    """Bistable reaction u - u^3 (fixed points -1, 0, +1; the middle unstable)."""
    return u - u * u * u


def allen_cahn(eps: float) -> ReactionModel:
    """Allen-Cahn equation du/dt = eps^2*lap(u) + u - u^3."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    def build(grid: Grid2) -> RateFn:
        def rates(fields: Sequence[np.ndarray], t: float) -> tuple[np.ndarray, ...]:
            return (allen_cahn_rate(fields[0]),)

        return rates

    return ReactionModel(names=("u",), diffusivities=(eps * eps,), rate_builder=build)


_AC_BUMPS = (
    (+1.0, 1.5 * np.cos(np.pi / 4), 1.5 * np.sin(np.pi / 4)),
    (-1.0, 4.0 * np.cos(np.pi / 12), 4.0 * np.sin(np.pi / 12)),
    (+1.0, 4.5 * np.cos(np.pi / 4), 4.5 * np.sin(np.pi / 4)),
    (-1.0, 4.0 * np.cos(11 * np.pi / 24), 4.0 * np.sin(11 * np.pi / 24)),
)


def allen_cahn_ic(grid: Grid2) -> Field2:
    """Four alternating-sign Gaussian bumps used with the z-hole annulus preset."""
    u0 = np.zeros(grid.shape)
    for sign, bx, by in _AC_BUMPS:
        u0 += sign * np.exp(-20.0 * ((grid.xg - bx) ** 2 + (grid.yg - by) ** 2))
    return Field2(grid, u0)


# -- Fenton-Karma three-variable cardiac model ----------------------------------


@dataclass(frozen=True)
class FentonKarmaParams:
    """Time constants (ms), thresholds, and diffusivity (cm^2/ms).

    Defaults reproduce the standard published parameter set for this model
    variant. The tanh steepness k is not part of that set; 10 is the value
    commonly used in this model family and is configurable here.
    """

    tau_d: float = 0.25
    tau_r: float = 50.0
    tau_si: float = 45.0
    tau_0: float = 8.3
    tau_v_plus: float = 3.33
    tau_v1_minus: float = 1000.0
    tau_v2_minus: float = 19.2
    tau_w_plus: float = 667.0
    tau_w_minus: float = 11.0
    u_c: float = 0.13
    u_v: float = 0.055
    u_c_si: float = 0.85
    k: float = 10.0
    d: float = 0.001

    def __post_init__(self):
        taus = (
            self.tau_d,
            self.tau_r,
            self.tau_si,
            self.tau_0,
            self.tau_v_plus,
            self.tau_v1_minus,
            self.tau_v2_minus,
            self.tau_w_plus,
            self.tau_w_minus,
        )
        if any(tau <= 0 for tau in taus):
            raise ValueError("all time constants must be positive")
        if not 0 < self.u_c < 1:
            raise ValueError(f"u_c must lie in (0, 1), got {self.u_c}")
        if self.d < 0:
            raise ValueError("diffusivity must be nonnegative")


def _theta(x):
    """Heaviside step with theta(0) = 1."""
    return np.heaviside(x, 1.0)


def fenton_karma_currents(u, v, w, p: FentonKarmaParams):
    """Phenomenological membrane currents (J_fi, J_so, J_si).

    The two step factors theta(u - u_c) and theta(u_c - u) are independent,
    not complements: with theta(0) = 1 both are active at u = u_c exactly.
    """
    above = _theta(u - p.u_c)
    below = _theta(p.u_c - u)
    j_fi = -(v / p.tau_d) * above * (1.0 - u) * (u - p.u_c)
    j_so = (u / p.tau_0) * below + above / p.tau_r
    j_si = -(w / (2.0 * p.tau_si)) * (1.0 + np.tanh(p.k * (u - p.u_c_si)))
    return j_fi, j_so, j_si


def fenton_karma_rates(u, v, w, p: FentonKarmaParams):
    """Local rates (du, dv, dw) for the three-variable model."""
    above = _theta(u - p.u_c)
    below = _theta(p.u_c - u)
    j_fi, j_so, j_si = fenton_karma_currents(u, v, w, p)
    tau_v_minus = _theta(u - p.u_v) * p.tau_v1_minus + _theta(p.u_v - u) * p.tau_v2_minus
    du = -(j_fi + j_so + j_si)
    dv = below * (1.0 - v) / tau_v_minus - above * v / p.tau_v_plus
    dw = below * (1.0 - w) / p.tau_w_minus - above * w / p.tau_w_plus
    return du, dv, dw


def fenton_karma(params: FentonKarmaParams | None = None) -> ReactionModel:
    """Three-component model (u, v, w); only the membrane variable u diffuses."""
    p = params or FentonKarmaParams()

    def build(grid: Grid2) -> RateFn:
        def rates(fields: Sequence[np.ndarray], t: float) -> tuple[np.ndarray, ...]:
            return fenton_karma_rates(fields[0], fields[1], fields[2], p)

        return rates

    return ReactionModel(
        names=("u", "v", "w"),
        diffusivities=(p.d, 0.0, 0.0),
        rate_builder=build,
        dt_hint=0.02,
    )


def fenton_karma_rest_state(grid: Grid2) -> tuple[Field2, Field2, Field2]:
    """Quiescent tissue: u = 0 with both gates fully recovered (v = w = 1)."""
    return Field2.zeros(grid), Field2.full(grid, 1.0), Field2.full(grid, 1.0)


def voltage_mv(u: np.ndarray, scale: float = 100.0, offset: float = -85.0) -> np.ndarray:
    """Affine display map from dimensionless membrane variable to millivolts."""
    return np.asarray(u) * scale + offset
