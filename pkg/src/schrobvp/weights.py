"""Exponential spatial weights with a C^4 switch-on region.

The truncated weight equals 1 on the left half-line and e^(beta x) beyond
x = 10 beta, joined by exp(beta h(x)) where h is the unique degree-9
polynomial (in x / (10 beta)) whose values and first four derivatives
match both flat pieces.  Its logarithmic derivative therefore rises from 0
to beta across the transition and is available analytically together with
three more derivatives; none of these quantities is periodic, so nothing
here is ever differentiated spectrally except the compactly supported
first derivative of the log-derivative.

The pure exponential mode keeps e^(beta x) everywhere.  It jumps across
the periodic seam and is only safe for data that is compactly supported
well inside the domain; ``WeightProfile.periodic_safe`` records this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigError, ConstructionError
from .spectral import Grid1D, SpectralField, derivative

__all__ = [
    "WeightProfile",
    "build_weight",
    "unit_weight",
    "weight_multiply",
    "fourth_logderiv_spectral",
]

# Degree-9 switch polynomial on [0, 1]: S(0)=...=S''''(0)=0, S(1)=S'(1)=1,
# S''(1)=S'''(1)=S''''(1)=0.  The transition exponent is h = 10b * S(x/(10b)).
_SWITCH = Polynomial([0, 0, 0, 0, 0, 70, -224, 280, -160, 35])
_SWITCH_D1 = _SWITCH.deriv(1)
_SWITCH_D2 = _SWITCH.deriv(2)
_SWITCH_D3 = _SWITCH.deriv(3)
_SWITCH_D4 = _SWITCH.deriv(4)

_EXP_ARG_CAP = 690.0  # stay clear of double overflow in exp


@dataclass(frozen=True)
class WeightProfile:
    """Sampled weight, its log-derivative, and three derivatives of the latter.

    ``values`` holds the weight itself; ``logderiv`` its logarithmic
    derivative; ``logderiv_derivs`` the first three x-derivatives of the
    log-derivative (analytic, not spectral).  ``sup_logderiv`` is the
    measured sup of the log-derivative, which for the truncated mode
    overshoots the nominal rate (about 1.79 beta); every consumer that
    needs a rate bound uses this measured value.
    """

    grid: Grid1D
    beta: float
    mode: str
    values: np.ndarray
    logderiv: np.ndarray
    logderiv_derivs: tuple[np.ndarray, np.ndarray, np.ndarray]
    sup_logderiv: float
    monotone: bool
    periodic_safe: bool

    def summary(self) -> dict:
        return {
            "beta": self.beta,
            "mode": self.mode,
            "sup_logderiv": self.sup_logderiv,
            "monotone": self.monotone,
        }


def _transition_exponent(x: np.ndarray, beta: float) -> tuple[np.ndarray, ...]:
    """h and the log-derivative family on the full axis, truncated mode."""
    width = 10.0 * beta
    tau = np.clip(x / width, 0.0, 1.0)
    mid = (x > 0.0) & (x < width)
    right = x >= width

    h = np.zeros_like(x)
    h[mid] = width * _SWITCH(tau[mid])
    h[right] = x[right]

    ld = np.zeros_like(x)  # beta * h'
    ld[mid] = beta * _SWITCH_D1(tau[mid])
    ld[right] = beta

    d1 = np.zeros_like(x)
    d1[mid] = _SWITCH_D2(tau[mid]) / 10.0
    d2 = np.zeros_like(x)
    d2[mid] = _SWITCH_D3(tau[mid]) / (100.0 * beta)
    d3 = np.zeros_like(x)
    d3[mid] = _SWITCH_D4(tau[mid]) / (1000.0 * beta**2)
    return h, ld, d1, d2, d3


def build_weight(beta: float, grid: Grid1D, mode: str = "truncated", margin: float | None = None) -> WeightProfile:
    """Construct the weight profile on ``grid``.

    ``margin`` is the clearance required between the end of the transition
    region and the domain edge in truncated mode (default L/4).
    """
    if not (beta > 0.0 and np.isfinite(beta)):
        raise ConfigError(f"decay rate must be positive and finite, got {beta}")
    if beta * grid.half_length > _EXP_ARG_CAP:
        raise ConfigError(
            f"beta * L = {beta * grid.half_length:.3g} would overflow the weight; reduce beta or L"
        )
    if mode == "truncated":
        if margin is None:
            margin = grid.half_length / 4.0
        if 10.0 * beta + margin >= grid.half_length:
            raise ConfigError(
                f"transition region [0, {10 * beta:g}] plus margin {margin:g} exceeds the half-domain {grid.half_length:g}"
            )
        h, ld, d1, d2, d3 = _transition_exponent(grid.x, beta)

        # strict growth of the exponent across the transition, on grid nodes
        # and on an oversampled lattice (catches any non-monotone interpolant)
        inside = (grid.x >= 0.0) & (grid.x <= 10.0 * beta)
        if np.any(np.diff(h[inside]) <= 0.0):
            raise ConstructionError("transition exponent is not strictly increasing at grid nodes")
        tau_fine = np.linspace(0.0, 1.0, 20001)[1:-1]
        if np.min(_SWITCH_D1(tau_fine)) < -1e-12:
            raise ConstructionError("switch polynomial has a decreasing segment")

        vals = np.exp(beta * h)
        sup_ld = float(np.max(_SWITCH_D1(tau_fine))) * beta
        return WeightProfile(
            grid=grid,
            beta=beta,
            mode=mode,
            values=vals,
            logderiv=ld,
            logderiv_derivs=(d1, d2, d3),
            sup_logderiv=sup_ld,
            monotone=True,
            periodic_safe=True,
        )
    if mode == "pure_exponential":
        zeros = np.zeros(grid.n)
        return WeightProfile(
            grid=grid,
            beta=beta,
            mode=mode,
            values=np.exp(beta * grid.x),
            logderiv=np.full(grid.n, beta),
            logderiv_derivs=(zeros, zeros.copy(), zeros.copy()),
            sup_logderiv=beta,
            monotone=True,
            periodic_safe=False,
        )
    raise ConfigError(f"unknown weight mode {mode!r}")


def unit_weight(grid: Grid1D) -> WeightProfile:
    """Trivial weight (identically 1) for unweighted evolution."""
    zeros = np.zeros(grid.n)
    return WeightProfile(
        grid=grid,
        beta=0.0,
        mode="unit",
        values=np.ones(grid.n),
        logderiv=zeros,
        logderiv_derivs=(zeros.copy(), zeros.copy(), zeros.copy()),
        sup_logderiv=0.0,
        monotone=True,
        periodic_safe=True,
    )


def weight_multiply(f: SpectralField, w: WeightProfile, direction: str = "apply") -> SpectralField:
    """Pointwise weight application (``apply``) or removal (``invert``)."""
    if f.grid != w.grid:
        raise ConfigError("field and weight live on different grids")
    if direction == "apply":
        return SpectralField(f.grid, f.values * w.values)
    if direction == "invert":
        return SpectralField(f.grid, f.values / w.values)
    raise ConfigError(f"direction must be 'apply' or 'invert', got {direction!r}")


def fourth_logderiv_spectral(w: WeightProfile) -> np.ndarray:
    """Seam-safe spectral proxy for the 4th x-derivative of log(weight).

    log(weight) itself is not periodic, but its second derivative (the
    first derivative of the log-derivative) is compactly supported inside
    the domain in truncated mode, so two spectral derivatives of that
    sampled function converge to the analytic quantity.
    """
    f = SpectralField(w.grid, w.logderiv_derivs[0].astype(complex))
    return derivative(f, 2).values.real
