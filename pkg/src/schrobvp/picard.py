"""Coupled two-endpoint solver built on frozen-source sweeps.

The unknown is a pair of fields: the negative-frequency carrier gets its
datum at t = 0 and is integrated forward, the positive-frequency carrier
gets its datum at the horizon and is integrated backward.  Each sweep
freezes the coupling source evaluated on the previous pair, solves the two
uncoupled linear problems, and measures the update in the norm

    |||v||| = sup_t ||v_plus(t)||_2 + sup_t ||v_minus(t)||_2.

Under the contraction-admissible horizon the update shrinks by at least a
factor 1/2 per sweep from the second sweep on; that factor, the confinement
bound |||v||| <= 4 (||f|| + ||g||), the cross-frequency leakage, and the
final PDE residual are all recorded in the report rather than assumed.

Everything runs on the paired-mode class (zero mean, no unpaired Nyquist
content): the half-line projections resolve the identity only there, so
data, coupling outputs, and the evolution itself are kept in that class.
The assembled sum then satisfies the projected equation exactly at the
fixed point, which is what `pde_residual` measures.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField, NormBundle, norm_bundle, select_horizon
from .errors import (
    ConfigError,
    DivergenceError,
    GridMismatchError,
    HorizonError,
    ValidationError,
)
from .spectral import (
    Grid1D,
    SpaceTimeField,
    SpectralField,
    coeff_product,
    dealias_hat,
    masked_samples,
    projection_multiplier,
)
from .stepper import LinearProblem, StepperConfig, solve_linear
from .weights import WeightProfile

__all__ = [
    "BvpProblem",
    "PicardReport",
    "AssembledSolution",
    "ResidualProfile",
    "coupling_lambda",
    "picard_solve",
    "assemble_solution",
    "pde_residual",
]

_CHUNK_ROWS = 256


def _require_one_sided(f: SpectralField, sign: str, label: str) -> None:
    norm = f.norm_l2()
    scale = max(norm, 1e-300)
    hat = f.hat
    if abs(hat[0]) > 1e-12 * scale * f.grid.n:
        raise ValidationError(f"{label} must have zero mean")
    wrong = "-" if sign == "+" else "+"
    sym = projection_multiplier(f.grid, wrong).symbol
    leak = float(np.sqrt(f.grid.dx / f.grid.n * np.sum(np.abs(sym * hat) ** 2)))
    if leak > 1e-12 * scale:
        raise ValidationError(
            f"{label} carries {leak:.3g} of mass on the {wrong} frequency side"
        )


@dataclass
class BvpProblem:
    """Two-endpoint data, coefficients, weight, and stepper settings.

    ``horizon`` must pass the contraction admissibility check computed from
    the measured coefficient norms, unless ``override_horizon`` is set (a
    warning is emitted and convergence is no longer guaranteed).
    """

    f: SpectralField
    g: SpectralField
    coeffs: CoefficientField
    weight: WeightProfile
    horizon: float
    stepper_cfg: StepperConfig
    beta: float | None = None
    override_horizon: bool = False

    def __post_init__(self) -> None:
        if self.f.grid != self.g.grid or self.f.grid != self.weight.grid:
            raise GridMismatchError("data and weight must share one grid")
        if not (self.horizon > 0):
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.beta is None:
            self.beta = self.weight.beta
        _require_one_sided(self.f, "-", "low-endpoint datum")
        _require_one_sided(self.g, "+", "high-endpoint datum")

    @property
    def grid(self) -> Grid1D:
        return self.f.grid

    def data_norm(self) -> float:
        return self.f.norm_l2() + self.g.norm_l2()


@dataclass
class PicardReport:
    """Per-sweep diagnostics and final residuals of one coupled solve."""

    delta: float
    horizon: float = 0.0
    iterations: int = 0
    converged: bool = False
    sup_norms_plus: list[float] = field(default_factory=list)
    sup_norms_minus: list[float] = field(default_factory=list)
    triple_norms: list[float] = field(default_factory=list)
    diff_norms: list[float] = field(default_factory=list)
    contraction_factors: list[float] = field(default_factory=list)
    lambda_ratios: list[float] = field(default_factory=list)
    leakages: list[float] = field(default_factory=list)
    confinement_ok: bool = True
    boundary_residual_low: float = 0.0
    boundary_residual_high: float = 0.0
    final_leakage: float = 0.0
    residual_sup: float = 0.0
    residual_profile: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "delta": self.delta,
            "horizon": self.horizon,
            "iterations": self.iterations,
            "converged": self.converged,
            "sup_norms_plus": list(self.sup_norms_plus),
            "sup_norms_minus": list(self.sup_norms_minus),
            "triple_norms": list(self.triple_norms),
            "diff_norms": list(self.diff_norms),
            "contraction_factors": list(self.contraction_factors),
            "lambda_ratios": list(self.lambda_ratios),
            "leakages": list(self.leakages),
            "confinement_ok": self.confinement_ok,
            "boundary_residual_low": self.boundary_residual_low,
            "boundary_residual_high": self.boundary_residual_high,
            "final_leakage": self.final_leakage,
            "residual_sup": self.residual_sup,
        }
        if self.residual_profile is not None:
            out["residual_profile"] = [float(r) for r in self.residual_profile]
        return out


def _coefficient_rows(
    coeffs: CoefficientField, weight: WeightProfile, grid: Grid1D, ts: np.ndarray
):
    """Masked coefficient stacks (rows = times): a, a*q, and the zeroth-order lump."""
    phi = weight.logderiv
    dphi = weight.logderiv_derivs[0]
    a = np.stack([coeffs.a_values(grid.x, t) for t in ts])
    ax = np.stack([coeffs.a_x(grid.x, t) for t in ts])
    w = np.stack([coeffs.w_values(grid.x, t) for t in ts])
    zeroth = 1j * ((phi**2 - dphi) * a - phi * ax) + 1j * w
    return (
        masked_samples(grid, a),
        masked_samples(grid, a * phi),
        masked_samples(grid, zeroth),
    )


def _lambda_rows(
    grid: Grid1D,
    v_sum: np.ndarray,
    ts: np.ndarray,
    coeffs: CoefficientField,
    weight: WeightProfile,
):
    """Coupling source rows for both signs from the summed field rows."""
    am, aqm, zwm = _coefficient_rows(coeffs, weight, grid, ts)
    ixi = 1j * grid.xi
    v_hat = dealias_hat(grid, np.fft.fft(v_sum, axis=-1))
    hv_hat = ixi * v_hat
    hv = np.fft.ifft(hv_hat, axis=-1)
    v_band = np.fft.ifft(v_hat, axis=-1)

    zw_v = coeff_product(grid, zwm, v_band)   # zeroth-order and potential terms
    a_hv = coeff_product(grid, am, hv)        # a * v_x
    q_hv = coeff_product(grid, aqm, hv)       # a q * v_x

    out = {}
    for sign in ("+", "-"):
        sym = projection_multiplier(grid, sign).symbol
        proj_hv = np.fft.ifft(sym * hv_hat, axis=-1)
        comm_a = sym * a_hv - coeff_product(grid, am, proj_hv)
        comm_q = sym * q_hv - coeff_product(grid, aqm, proj_hv)
        lam = sym * zw_v + 1j * ixi * comm_a - 2j * comm_q
        lam[..., 0] = 0.0  # paired-mode class
        out[sign] = np.fft.ifft(lam, axis=-1)
    return out["+"], out["-"]


def coupling_lambda(
    v_plus: SpectralField,
    v_minus: SpectralField,
    coeffs: CoefficientField,
    weight: WeightProfile,
    t: float,
) -> tuple[SpectralField, SpectralField]:
    """Both coupling-source components at one time slice."""
    if v_plus.grid != v_minus.grid or v_plus.grid != weight.grid:
        raise GridMismatchError("coupling inputs must share one grid")
    grid = v_plus.grid
    v_sum = (v_plus.values + v_minus.values)[None, :]
    lp, lm = _lambda_rows(grid, v_sum, np.array([t]), coeffs, weight)
    return SpectralField(grid, lp[0]), SpectralField(grid, lm[0])


def coupling_stacks(
    vp: SpaceTimeField,
    vm: SpaceTimeField,
    coeffs: CoefficientField,
    weight: WeightProfile,
) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Both coupling-source stacks evaluated on the carriers' time grid."""
    return _lambda_stacks(vp, vm, coeffs, weight)


def _lambda_stacks(
    vp: SpaceTimeField,
    vm: SpaceTimeField,
    coeffs: CoefficientField,
    weight: WeightProfile,
) -> tuple[SpaceTimeField, SpaceTimeField]:
    grid = vp.grid
    times = vp.times
    out_p = np.empty_like(vp.values)
    out_m = np.empty_like(vm.values)
    for lo in range(0, len(times), _CHUNK_ROWS):
        rows = slice(lo, min(lo + _CHUNK_ROWS, len(times)))
        v_sum = vp.values[rows] + vm.values[rows]
        out_p[rows], out_m[rows] = _lambda_rows(grid, v_sum, times[rows], coeffs, weight)
    return SpaceTimeField(grid, times, out_p), SpaceTimeField(grid, times, out_m)


def _sup_l2_diff(a: SpaceTimeField, b: SpaceTimeField) -> float:
    worst = 0.0
    for lo in range(0, len(a.times), _CHUNK_ROWS):
        rows = slice(lo, min(lo + _CHUNK_ROWS, len(a.times)))
        d = a.values[rows] - b.values[rows]
        worst = max(worst, float(np.max(np.sqrt(a.grid.dx * np.sum(np.abs(d) ** 2, axis=1)))))
    return worst


def _leakage(vp: SpaceTimeField, vm: SpaceTimeField) -> float:
    """sup_t of the wrong-side mass: P- on the plus carrier, P+ on the minus."""
    grid = vp.grid
    total = 0.0
    for stack, wrong in ((vp, "-"), (vm, "+")):
        sym = projection_multiplier(grid, wrong).symbol
        worst = 0.0
        for lo in range(0, len(stack.times), _CHUNK_ROWS):
            rows = slice(lo, min(lo + _CHUNK_ROWS, len(stack.times)))
            hat = np.fft.fft(stack.values[rows], axis=1)
            mass = np.sqrt(grid.dx / grid.n * np.sum(np.abs(sym * hat) ** 2, axis=1))
            worst = max(worst, float(np.max(mass)))
        total += worst
    return total


def _lambda_ratio(
    lp: SpaceTimeField,
    lm: SpaceTimeField,
    vp: SpaceTimeField,
    vm: SpaceTimeField,
    bundle: NormBundle,
    delta: float,
) -> float:
    lam_norm = np.maximum(lp.norm_series(), lm.norm_series())
    v_norm = vp.norm_series() + vm.norm_series()
    denom = bundle.coupling_rate * v_norm
    keep = denom > 1e-14 * max(delta, 1e-300)
    if not np.any(keep):
        return 0.0
    return float(np.max(lam_norm[keep] / denom[keep]))


def _check_horizon(p: BvpProblem, bundle: NormBundle) -> None:
    limit = 0.0
    try:
        sel = select_horizon(bundle)
        limit = sel.horizon
    except HorizonError:
        pass
    if p.horizon <= limit * (1 + 1e-12):
        return
    msg = (
        f"horizon {p.horizon:g} exceeds the contraction-admissible limit {limit:g} "
        f"for these coefficients"
    )
    if p.override_horizon:
        warnings.warn(msg + "; proceeding on explicit override", stacklevel=3)
    else:
        raise HorizonError(msg + "; shrink the horizon or set override_horizon=True")


def picard_solve(
    p: BvpProblem,
    tol: float = 1e-8,
    m_max: int = 50,
    solve_hook: Callable[[str, LinearProblem, SpaceTimeField], None] | None = None,
) -> tuple[SpaceTimeField, SpaceTimeField, PicardReport]:
    """Frozen-source sweeps from the zero pair until the update stalls below tol.

    Returns (plus carrier, minus carrier, report).  Raises DivergenceError
    after three consecutive non-contracting sweeps; stepper errors propagate.
    ``solve_hook``, when given, observes every linear sub-solve as
    ``(sign, problem, solution)`` right after it finishes, so bound monitors
    can audit the sweep internals without the solver storing them all.
    """
    grid = p.grid
    n_steps = p.stepper_cfg.resolve_steps(p.horizon)
    times = np.linspace(0.0, p.horizon, n_steps + 1)
    delta = p.data_norm()
    bundle = norm_bundle(p.coeffs, p.weight.sup_logderiv, times, grid)
    _check_horizon(p, bundle)

    report = PicardReport(delta=delta, horizon=p.horizon)
    zeros = np.zeros((n_steps + 1, grid.n), dtype=np.complex128)
    vp = SpaceTimeField(grid, times, zeros)
    vm = SpaceTimeField(grid, times, zeros.copy())

    prev_diff = None
    streak = 0
    for m in range(1, m_max + 1):
        if m == 1:
            src_p = src_m = None
        else:
            src_p, src_m = _lambda_stacks(vp, vm, p.coeffs, p.weight)
            report.lambda_ratios.append(_lambda_ratio(src_p, src_m, vp, vm, bundle, delta))
        prob_m = LinearProblem(
            direction="forward",
            coeffs=p.coeffs,
            weight=p.weight,
            source=src_m,
            datum=p.f,
            horizon=p.horizon,
            zero_mean=True,
        )
        prob_p = LinearProblem(
            direction="backward",
            coeffs=p.coeffs,
            weight=p.weight,
            source=src_p,
            datum=p.g,
            horizon=p.horizon,
            zero_mean=True,
        )
        new_vm = solve_linear(prob_m, p.stepper_cfg)
        new_vp = solve_linear(prob_p, p.stepper_cfg)
        if solve_hook is not None:
            solve_hook("-", prob_m, new_vm)
            solve_hook("+", prob_p, new_vp)
        diff = _sup_l2_diff(new_vp, vp) + _sup_l2_diff(new_vm, vm)
        vp, vm = new_vp, new_vm

        sup_p = vp.sup_norm()
        sup_m = vm.sup_norm()
        report.iterations = m
        report.sup_norms_plus.append(sup_p)
        report.sup_norms_minus.append(sup_m)
        report.triple_norms.append(sup_p + sup_m)
        report.diff_norms.append(diff)
        report.leakages.append(_leakage(vp, vm))
        if sup_p + sup_m > 4.0 * delta * (1 + 1e-9):
            report.confinement_ok = False
        if prev_diff is not None and prev_diff > 0:
            rho = diff / prev_diff
            report.contraction_factors.append(rho)
            streak = streak + 1 if rho >= 1.0 else 0
            if streak >= 3:
                raise DivergenceError(
                    f"no contraction for 3 consecutive sweeps (last factor {rho:.3g}); "
                    f"shrink the horizon"
                )
        prev_diff = diff
        if diff <= tol * delta:
            report.converged = True
            break

    v0 = vp.values[0] + vm.values[0]
    vT = vp.values[-1] + vm.values[-1]
    report.boundary_residual_low = _projection_residual(grid, v0, p.f, "-")
    report.boundary_residual_high = _projection_residual(grid, vT, p.g, "+")
    report.final_leakage = report.leakages[-1] if report.leakages else 0.0

    total = SpaceTimeField(grid, times, vp.values + vm.values)
    profile = pde_residual(total, p.coeffs, p.weight)
    report.residual_profile = profile.norms
    report.residual_sup = profile.sup
    return vp, vm, report


def _projection_residual(grid: Grid1D, v_slice: np.ndarray, datum: SpectralField, sign: str) -> float:
    sym = projection_multiplier(grid, sign).symbol
    hat = sym * np.fft.fft(v_slice) - dealias_hat(grid, datum.hat)
    return float(np.sqrt(grid.dx / grid.n * np.sum(np.abs(hat) ** 2)))


@dataclass(frozen=True)
class AssembledSolution:
    """Total field, unweighted solution, and its decay-certified transform."""

    v: SpaceTimeField
    u: SpaceTimeField
    w: SpaceTimeField
    window: np.ndarray
    w_norms: np.ndarray
    boundary_residual_low: float | None
    boundary_residual_high: float | None


def assemble_solution(
    v_plus: SpaceTimeField,
    v_minus: SpaceTimeField,
    weight: WeightProfile,
    f: SpectralField | None = None,
    g: SpectralField | None = None,
) -> AssembledSolution:
    """v = sum of carriers; u = v / weight; w = e^(beta x) u on the central window.

    The exponential transform is only evaluated on |x| <= L/2: data are
    supported there, and outside the window a seam-crossing exponential
    would amplify wrap-around garbage.
    """
    if v_plus.grid != v_minus.grid or v_plus.grid != weight.grid:
        raise GridMismatchError("carriers and weight must share one grid")
    grid = v_plus.grid
    times = v_plus.times
    v_vals = v_plus.values + v_minus.values
    u_vals = v_vals / weight.values[None, :]
    window = np.abs(grid.x) <= 0.5 * grid.half_length
    ratio = np.exp(weight.beta * grid.x) / weight.values
    w_vals = v_vals * (ratio * window)[None, :]
    v = SpaceTimeField(grid, times, v_vals)
    u = SpaceTimeField(grid, times, u_vals)
    w = SpaceTimeField(grid, times, w_vals)
    res_low = None if f is None else _projection_residual(grid, v_vals[0], f, "-")
    res_high = None if g is None else _projection_residual(grid, v_vals[-1], g, "+")
    return AssembledSolution(
        v=v,
        u=u,
        w=w,
        window=window,
        w_norms=w.norm_series(),
        boundary_residual_low=res_low,
        boundary_residual_high=res_high,
    )


@dataclass(frozen=True)
class ResidualProfile:
    times: np.ndarray   # interior slice times
    norms: np.ndarray   # discrete H^{-2} norm of the equation residual
    sup: float


def pde_residual(
    v: SpaceTimeField, coeffs: CoefficientField, weight: WeightProfile
) -> ResidualProfile:
    """Centered-difference time derivative minus the realized spatial operator.

    The spatial operator uses exactly the dealiased product primitive the
    solver itself steps with, projected to the paired-mode class, so a
    converged fixed point leaves only the time-discretization error and the
    artificial-viscosity tail.  Norms are measured in the discrete H^{-2}
    metric (symbol (1 + xi^2)^{-1}).
    """
    if len(v.times) < 3:
        raise ConfigError("residual needs at least 3 time slices")
    grid = v.grid
    dt = v.dt
    ixi = 1j * grid.xi
    jm2 = 1.0 / (1.0 + grid.xi**2)
    norms = np.empty(len(v.times) - 2)
    for lo in range(1, len(v.times) - 1, _CHUNK_ROWS):
        hi = min(lo + _CHUNK_ROWS, len(v.times) - 1)
        rows = slice(lo, hi)
        ts = v.times[rows]
        am, aqm, zwm = _coefficient_rows(coeffs, weight, grid, ts)
        v_hat = dealias_hat(grid, np.fft.fft(v.values[rows], axis=1))
        vx = np.fft.ifft(ixi * v_hat, axis=1)
        v_band = np.fft.ifft(v_hat, axis=1)
        e_hat = (
            1j * ixi * coeff_product(grid, am, vx)
            - 2j * coeff_product(grid, aqm, vx)
            + coeff_product(grid, zwm, v_band)
        )
        e_hat[:, 0] = 0.0
        dt_hat = dealias_hat(
            grid,
            np.fft.fft((v.values[lo + 1 : hi + 1] - v.values[lo - 1 : hi - 1]) / (2 * dt), axis=1),
        )
        r = (dt_hat - e_hat) * jm2
        norms[lo - 1 : hi - 1] = np.sqrt(grid.dx / grid.n * np.sum(np.abs(r) ** 2, axis=1))
    return ResidualProfile(times=v.times[1:-1], norms=norms, sup=float(np.max(norms)))
