"""Time integration of the uncoupled weighted sub-problems.

The equation advanced here is

    dv/dt = i d/dx(a dv/dx) - 2i a q dv/dx + F(x, t),

with q the weight's log-derivative, regularized by a fourth-order
artificial viscosity -eps d^4/dx^4.  Forward problems carry the datum at
t = 0; backward problems carry it at t = horizon and are integrated in
the reversed variable s = horizon - t, which flips the sign of the
dispersive, drift, and source terms while the viscosity stays
dissipative.

Default scheme: integrating-factor RK4.  The diagonal symbol
-eps xi^4 - i abar xi^2 (abar = spatial mean of a at the step midpoint)
is integrated exactly; the remainder i d/dx((a - abar) dv/dx)
- 2i a q dv/dx + F is treated explicitly with classical RK4 stages.  All
coefficient products are 2/3-rule dealiased through the shared masked
product primitive, so the stepper, the coupling source, and the residual
monitor all realize the same discrete operator.

An alternative `duhamel_picard` scheme iterates the integral form of the
same regularized flow on short chunks; it exists for cross-validation at
coarse tolerance, not production use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField
from .errors import ConfigError, GridMismatchError, StabilityError
from .spectral import (
    Grid1D,
    Multiplier,
    SpaceTimeField,
    SpectralField,
    coeff_product,
    masked_samples,
)
from .weights import WeightProfile

__all__ = [
    "StepperConfig",
    "LinearProblem",
    "EpsilonStudyReport",
    "heat_quartic",
    "solve_linear",
    "epsilon_study",
]

_STIFF_EXPONENT_CAP = 50.0
_BLOWUP_FACTOR = 1e12


def heat_quartic(f: SpectralField, s: float) -> SpectralField:
    """Apply the fourth-order dissipative semigroup symbol e^(-s xi^4)."""
    if s < 0:
        raise ConfigError(f"quartic semigroup time must be >= 0, got {s}")
    return Multiplier(f.grid, np.exp(-s * f.grid.xi**4), "heat4").apply(f)


@dataclass
class StepperConfig:
    """Viscosity, step size, and scheme for one linear solve.

    Exactly one of ``dt``/``n_steps`` may be given; with neither, the
    horizon is split into 2048 steps.  ``epsilon_schedule`` drives
    :func:`epsilon_study` only.
    """

    epsilon: float = 1e-3
    dt: float | None = None
    n_steps: int | None = None
    scheme: str = "etd_rk4"
    epsilon_schedule: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ConfigError(f"viscosity must be >= 0, got {self.epsilon}")
        if self.scheme not in ("etd_rk4", "duhamel_picard"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and self.n_steps is not None:
            raise ConfigError("give either dt or n_steps, not both")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")

    def resolve_steps(self, horizon: float) -> int:
        if self.n_steps is not None:
            return self.n_steps
        if self.dt is None:
            return 2048
        ratio = horizon / self.dt
        n = int(round(ratio))
        if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"dt {self.dt:g} does not evenly divide the horizon {horizon:g}")
        return n

    def check_stability(self, grid: Grid1D, horizon: float) -> None:
        dt = horizon / self.resolve_steps(horizon)
        stiff = self.epsilon * grid.xi_max**4 * dt
        if stiff > _STIFF_EXPONENT_CAP:
            raise ConfigError(
                f"eps xi_max^4 dt = {stiff:.3g} exceeds the cap {_STIFF_EXPONENT_CAP:g}; shrink dt or eps"
            )


@dataclass
class LinearProblem:
    """One uncoupled sub-problem: direction, coefficients, weight, source, datum.

    ``zero_mean`` restricts the evolution to the paired-mode class: the mean
    mode of the datum, the source, and every remainder evaluation is
    annihilated.  The coupled solver uses this class throughout, since the
    half-line frequency projections resolve the identity only there.
    """

    direction: str
    coeffs: CoefficientField
    weight: WeightProfile
    source: SpaceTimeField | None
    datum: SpectralField
    horizon: float
    zero_mean: bool = False

    def __post_init__(self) -> None:
        if self.direction not in ("forward", "backward"):
            raise ConfigError(f"direction must be 'forward' or 'backward', got {self.direction!r}")
        if not (self.horizon > 0):
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.weight.grid != self.datum.grid:
            raise GridMismatchError("weight and datum grids differ")
        if self.source is not None:
            if self.source.grid != self.datum.grid:
                raise GridMismatchError("source and datum grids differ")
            if self.source.times[0] > 1e-12 or self.source.times[-1] < self.horizon - 1e-9:
                raise ConfigError("source time grid must cover [0, horizon]")

    @property
    def grid(self) -> Grid1D:
        return self.datum.grid


class _SourceInterpolant:
    """Masked source coefficients, linearly interpolated in time."""

    def __init__(self, source: SpaceTimeField | None, grid: Grid1D, zero_mean: bool = False) -> None:
        self.grid = grid
        if source is None:
            self.hats = None
            return
        hats = np.fft.fft(source.values, axis=1)
        hats[:, ~grid.dealias_mask] = 0.0
        if zero_mean:
            hats[:, 0] = 0.0
        self.hats = hats
        self.times = source.times

    def at(self, t: float) -> np.ndarray | float:
        if self.hats is None:
            return 0.0
        ts = self.times
        if t <= ts[0]:
            return self.hats[0]
        if t >= ts[-1]:
            return self.hats[-1]
        j = int(np.searchsorted(ts, t) - 1)
        w = (t - ts[j]) / (ts[j + 1] - ts[j])
        return (1.0 - w) * self.hats[j] + w * self.hats[j + 1]


class _Operator:
    """Dealiased evaluation of the non-diagonal remainder, in hat space."""

    def __init__(self, p: LinearProblem, orientation: float) -> None:
        self.grid = p.grid
        self.coeffs = p.coeffs
        self.logderiv = p.weight.logderiv
        self.orientation = orientation  # +1 forward, -1 backward
        self.zero_mean = p.zero_mean
        self.ixi = 1j * p.grid.xi
        self._cache_t = None
        self._cache = None

    def coefficients_at(self, t: float):
        if self._cache_t is not None and abs(t - self._cache_t) < 1e-14:
            return self._cache
        a = self.coeffs.a_values(self.grid.x, t)
        abar = float(np.mean(a))
        a_dev = masked_samples(self.grid, a - abar)
        drift = masked_samples(self.grid, a * self.logderiv)
        self._cache_t = t
        self._cache = (abar, a_dev, drift)
        return self._cache

    def remainder_hat(self, v_hat: np.ndarray, t: float, src_hat) -> np.ndarray:
        """tau * [i d/dx((a-abar) v_x) - 2i a q v_x + F] as masked hat values."""
        _, a_dev, drift = self.coefficients_at(t)
        vx = np.fft.ifft(self.ixi * v_hat)
        disp = 1j * self.ixi * coeff_product(self.grid, a_dev, vx)
        drag = -2j * coeff_product(self.grid, drift, vx)
        out = disp + drag
        if src_hat is not None and not np.isscalar(src_hat):
            out = out + src_hat
        elif src_hat:
            out = out + src_hat
        if self.zero_mean:
            out[0] = 0.0
        return self.orientation * out


def solve_linear(p: LinearProblem, cfg: StepperConfig) -> SpaceTimeField:
    """Integrate the sub-problem; returns slices on the ascending time grid.

    Backward problems are solved in reversed time and flipped back, so the
    returned field always has times[0] = 0, times[-1] = horizon, with the
    datum reproduced at the appropriate end.
    """
    cfg.check_stability(p.grid, p.horizon)
    n_steps = cfg.resolve_steps(p.horizon)
    if cfg.scheme == "etd_rk4":
        values = _march_etd_rk4(p, cfg, n_steps)
    else:
        values = _march_duhamel(p, cfg, n_steps)
    times = np.linspace(0.0, p.horizon, n_steps + 1)
    if p.direction == "backward":
        values = values[::-1]
    return SpaceTimeField(p.grid, times, values)


def _physical_time(p: LinearProblem, sigma: float) -> float:
    return sigma if p.direction == "forward" else p.horizon - sigma


def _check_state(hat: np.ndarray, step: int, scale: float) -> None:
    if not np.all(np.isfinite(hat)):
        raise StabilityError(f"non-finite state at step {step}")
    if np.max(np.abs(hat)) > _BLOWUP_FACTOR * scale:
        raise StabilityError(f"state grew past {_BLOWUP_FACTOR:g} x datum at step {step}")


def _march_etd_rk4(p: LinearProblem, cfg: StepperConfig, n_steps: int) -> np.ndarray:
    grid = p.grid
    orientation = 1.0 if p.direction == "forward" else -1.0
    op = _Operator(p, orientation)
    src = _SourceInterpolant(p.source, grid, p.zero_mean)
    dt = p.horizon / n_steps
    xi = grid.xi

    out = np.empty((n_steps + 1, grid.n), dtype=np.complex128)
    v_hat = np.where(grid.dealias_mask, p.datum.hat, 0.0)
    if p.zero_mean:
        v_hat[0] = 0.0
    out[0] = np.fft.ifft(v_hat)
    scale = max(float(np.max(np.abs(v_hat))), 1e-30)
    if p.source is not None:
        scale = max(scale, float(np.max(np.abs(p.source.values))) * grid.n)

    for step in range(n_steps):
        sigma = step * dt
        t0 = _physical_time(p, sigma)
        t_half = _physical_time(p, sigma + dt / 2)
        t1 = _physical_time(p, sigma + dt)

        abar = op.coefficients_at(t_half)[0]
        ell = -cfg.epsilon * xi**4 - orientation * 1j * abar * xi**2
        E = np.exp(0.5 * dt * ell)
        E2 = E * E

        f0 = src.at(t0)
        f_half = src.at(t_half)
        f1 = src.at(t1)

        a1 = op.remainder_hat(v_hat, t0, f0)
        ua = E * (v_hat + 0.5 * dt * a1)
        a2 = op.remainder_hat(ua, t_half, f_half)
        ub = E * v_hat + 0.5 * dt * a2
        a3 = op.remainder_hat(ub, t_half, f_half)
        uc = E2 * v_hat + dt * E * a3
        a4 = op.remainder_hat(uc, t1, f1)

        v_hat = E2 * v_hat + (dt / 6.0) * (E2 * a1 + 2.0 * E * (a2 + a3) + a4)
        _check_state(v_hat, step + 1, scale)
        out[step + 1] = np.fft.ifft(v_hat)
    return out


def _march_duhamel(p: LinearProblem, cfg: StepperConfig, n_steps: int) -> np.ndarray:
    """Chunked fixed-point iteration on the integral form of the same flow."""
    grid = p.grid
    orientation = 1.0 if p.direction == "forward" else -1.0
    src = _SourceInterpolant(p.source, grid, p.zero_mean)
    dt = p.horizon / n_steps
    xi = grid.xi
    q = np.exp(-cfg.epsilon * dt * xi**4)

    # the full spatial operator (no abar split) evaluated with masked products
    logderiv = p.weight.logderiv
    ixi = 1j * xi

    def full_hat(v_hat: np.ndarray, t: float) -> np.ndarray:
        a = p.coeffs.a_values(grid.x, t)
        a_m = masked_samples(grid, a)
        drift_m = masked_samples(grid, a * logderiv)
        vx = np.fft.ifft(ixi * v_hat)
        out = 1j * ixi * coeff_product(grid, a_m, vx) - 2j * coeff_product(grid, drift_m, vx)
        s = src.at(t)
        if not np.isscalar(s):
            out = out + s
        if p.zero_mean:
            out[0] = 0.0
        return orientation * out

    a_sup = float(np.max(np.abs(p.coeffs.a_values(grid.x, 0.0)))) + 1e-30
    band_edge = grid.xi_max * 2.0 / 3.0
    chunk = max(1, min(64, int(0.4 / (dt * band_edge**2 * a_sup))))

    out = np.empty((n_steps + 1, grid.n), dtype=np.complex128)
    v_hat = np.where(grid.dealias_mask, p.datum.hat, 0.0)
    if p.zero_mean:
        v_hat[0] = 0.0
    out[0] = np.fft.ifft(v_hat)
    scale = max(float(np.max(np.abs(v_hat))), 1e-30)

    step = 0
    while step < n_steps:
        width = min(chunk, n_steps - step)
        sigmas = (step + np.arange(width + 1)) * dt
        t_phys = [_physical_time(p, s) for s in sigmas]
        # initial guess: pure semigroup propagation of the chunk datum
        states = [v_hat * q**j for j in range(width + 1)]
        for iteration in range(60):
            phis = [full_hat(states[j], t_phys[j]) for j in range(width + 1)]
            worst = 0.0
            integral = np.zeros(grid.n, dtype=np.complex128)
            for j in range(1, width + 1):
                integral = q * integral + 0.5 * dt * (q * phis[j - 1] + phis[j])
                new = v_hat * q**j + integral
                worst = max(worst, float(np.max(np.abs(new - states[j]))))
                states[j] = new
            if worst <= 1e-10 * scale:
                break
        else:
            raise StabilityError(f"integral-form iteration stalled at step {step}")
        for j in range(1, width + 1):
            _check_state(states[j], step + j, scale)
            out[step + j] = np.fft.ifft(states[j])
        v_hat = states[width]
        step += width
    return out


@dataclass(frozen=True)
class EpsilonStudyReport:
    epsilons: tuple[float, ...]
    differences: tuple[float, ...]   # sup_t L2 distance between consecutive solves
    cauchy: bool                     # each difference at most half the previous
    order_estimates: tuple[float, ...]


def epsilon_study(p: LinearProblem, cfg: StepperConfig) -> EpsilonStudyReport:
    """Solve along the decreasing viscosity schedule and compare neighbours."""
    sched = tuple(cfg.epsilon_schedule)
    if len(sched) < 3:
        raise ConfigError("viscosity schedule needs at least 3 entries")
    if any(e2 >= e1 for e1, e2 in zip(sched, sched[1:])) or any(e <= 0 for e in sched):
        raise ConfigError("viscosity schedule must be positive and strictly decreasing")
    solutions = []
    for eps in sched:
        sub = StepperConfig(
            epsilon=eps, dt=cfg.dt, n_steps=cfg.n_steps, scheme=cfg.scheme
        )
        solutions.append(solve_linear(p, sub))
    diffs = []
    for s1, s2 in zip(solutions, solutions[1:]):
        delta = s1.values - s2.values
        diffs.append(float(np.max(np.sqrt(p.grid.dx * np.sum(np.abs(delta) ** 2, axis=1)))))
    orders = []
    for i in range(len(diffs) - 1):
        if diffs[i + 1] > 0 and diffs[i] > 0:
            orders.append(float(np.log(diffs[i] / diffs[i + 1]) / np.log(sched[i] / sched[i + 1])))
        else:
            orders.append(float("nan"))
    cauchy = all(d2 <= 0.5 * d1 for d1, d2 in zip(diffs, diffs[1:])) and len(diffs) >= 2
    return EpsilonStudyReport(
        epsilons=sched,
        differences=tuple(diffs),
        cauchy=cauchy,
        order_estimates=tuple(orders),
    )
