"""Periodic pseudospectral core: grid, fields, Fourier multipliers, dyadic blocks.

Conventions
-----------
The spatial domain is the periodic interval [-L, L) sampled at n equispaced
nodes x_j = -L + j*(2L/n).  Discrete frequencies are xi_k = pi*k/L for
integer k in [-n/2, n/2), stored in the usual FFT layout.  All norms are
quadrature norms: ||f||_p = (sum |f_j|^p dx)^(1/p).

Frequency ownership: the half-line projections own strictly positive and
strictly negative frequencies respectively; the zero mode and the unpaired
Nyquist mode form a separate two-dimensional projection (``pi0``).  The
sign multiplier ``hilbert`` has symbol i*sgn(xi) on paired modes and
annihilates the zero/Nyquist pair, so on that class the exact operator
identities

    hilbert = i*(project(+) - project(-))        and
    d/dx    = fractional(1/2) o hilbert o fractional(1/2)

hold mode by mode.

Products of gridded functions are dealiased with the 2/3 rule: the top
third of the spectrum of each factor is zeroed before pointwise
multiplication and the product spectrum is masked again afterwards.
"""

from __future__ import annotations

import math
from typing import Iterable, Literal

import numpy as np

from .errors import GridMismatchError, ResolvableRangeError, SingularOperatorError

__all__ = [
    "Grid1D",
    "SpectralField",
    "SpaceTimeField",
    "Multiplier",
    "apply_multiplier",
    "project",
    "hilbert",
    "fractional",
    "lp_block",
    "lp_norm",
    "identity_multiplier",
    "derivative_multiplier",
    "projection_multiplier",
    "hilbert_multiplier",
    "fractional_multiplier",
    "lp_block_multiplier",
    "pi0",
    "remove_pi0",
    "derivative",
    "dealiased_product",
    "coeff_product",
    "boundary_mass",
    "gaussian_field",
    "mode_field",
    "random_band_field",
    "smooth_bump",
    "annulus_bump",
    "block_symbol",
]


class Grid1D:
    """Uniform periodic grid on [-L, L) with 2^m nodes.

    Parameters
    ----------
    n : int
        Number of nodes; must be a power of two, at least 16.
    half_length : float
        L; the period is 2L.

    Attributes
    ----------
    x : ndarray
        Node coordinates, ascending from -L.
    xi : ndarray
        Angular frequencies pi*k/L in FFT layout (k = 0..n/2-1, -n/2..-1).
    k_index : ndarray of int
        The signed integer mode index k for each slot.
    dealias_mask : ndarray of bool
        True on the modes kept by the 2/3 rule (|k| < n/3).
    """

    __slots__ = ("n", "half_length", "dx", "x", "xi", "k_index", "dealias_mask")

    def __init__(self, n: int, half_length: float) -> None:
        n = int(n)
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {n}")
        if not (half_length > 0.0 and math.isfinite(half_length)):
            raise ValueError(f"half_length must be positive and finite, got {half_length}")
        self.n = n
        self.half_length = float(half_length)
        self.dx = 2.0 * self.half_length / n
        self.x = -self.half_length + self.dx * np.arange(n)
        self.k_index = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
        self.xi = (np.pi / self.half_length) * self.k_index
        self.dealias_mask = np.abs(self.k_index) < (n / 3.0)

    @property
    def xi_min(self) -> float:
        return np.pi / self.half_length

    @property
    def xi_max(self) -> float:
        return (self.n // 2) * np.pi / self.half_length

    def resolvable_block_range(self) -> tuple[int, int]:
        """Dyadic indices [k_min, k_max] for which the block family partitions the grid spectrum."""
        k_min = math.floor(math.log2(self.xi_min))
        k_max = math.ceil(math.log2(self.xi_max))
        return k_min, k_max

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Grid1D)
            and other.n == self.n
            and other.half_length == self.half_length
        )

    def __hash__(self) -> int:
        return hash((self.n, self.half_length))

    def __repr__(self) -> str:
        return f"Grid1D(n={self.n}, half_length={self.half_length})"


def _as_complex(values: np.ndarray, n: int) -> np.ndarray:
    out = np.asarray(values, dtype=np.complex128)
    if out.shape != (n,):
        raise GridMismatchError(f"expected {n} samples, got shape {out.shape}")
    return out


class SpectralField:
    """A complex field on a :class:`Grid1D`, with a lazily cached transform."""

    __slots__ = ("grid", "values", "_hat")

    def __init__(self, grid: Grid1D, values: np.ndarray, *, hat: np.ndarray | None = None) -> None:
        self.grid = grid
        self.values = _as_complex(values, grid.n)
        self._hat = None if hat is None else _as_complex(hat, grid.n)

    @classmethod
    def from_hat(cls, grid: Grid1D, hat: np.ndarray) -> "SpectralField":
        hat = _as_complex(hat, grid.n)
        return cls(grid, np.fft.ifft(hat), hat=hat)

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = np.fft.fft(self.values)
        return self._hat

    def norm_l2(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def norm_lp(self, p: float) -> float:
        if p == np.inf:
            return float(np.max(np.abs(self.values)))
        if p <= 0:
            raise ValueError(f"norm exponent must be positive, got {p}")
        return float((self.grid.dx * np.sum(np.abs(self.values) ** p)) ** (1.0 / p))

    def mean(self) -> complex:
        return complex(np.mean(self.values))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.values + other.values)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def _check(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def __repr__(self) -> str:
        return f"SpectralField(n={self.grid.n}, L={self.grid.half_length}, ||f||_2={self.norm_l2():.3e})"


class Multiplier:
    """Diagonal Fourier operator: (M f)^hat(xi_k) = symbol[k] * f^hat(xi_k)."""

    __slots__ = ("grid", "symbol", "label")

    def __init__(self, grid: Grid1D, symbol: np.ndarray, label: str = "") -> None:
        self.grid = grid
        self.symbol = _as_complex(symbol, grid.n)
        self.label = label

    def apply(self, f: SpectralField) -> SpectralField:
        if f.grid != self.grid:
            raise GridMismatchError(f"multiplier {self.label!r} applied to a field on a different grid")
        return SpectralField.from_hat(self.grid, self.symbol * f.hat)

    def compose(self, other: "Multiplier") -> "Multiplier":
        if other.grid != self.grid:
            raise GridMismatchError("composing multipliers on different grids")
        return Multiplier(self.grid, self.symbol * other.symbol, f"{self.label}*{other.label}")

    def __repr__(self) -> str:
        return f"Multiplier({self.label!r}, n={self.grid.n})"


def apply_multiplier(f: SpectralField, m: Multiplier) -> SpectralField:
    return m.apply(f)


# --- symbol builders -------------------------------------------------------

def identity_multiplier(grid: Grid1D) -> Multiplier:
    return Multiplier(grid, np.ones(grid.n), "1")


def derivative_multiplier(grid: Grid1D, order: int = 1) -> Multiplier:
    return Multiplier(grid, (1j * grid.xi) ** order, f"d/dx^{order}")


def _nyquist_slot(grid: Grid1D) -> int:
    return grid.n // 2


def projection_multiplier(grid: Grid1D, sign: str) -> Multiplier:
    """Sharp half-line frequency cutoff.  ``sign`` is '+' or '-'.

    The zero mode is excluded from both; the unpaired Nyquist mode is
    grouped with it (see :func:`pi0`), so project(+) + project(-) + pi0 = 1.
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if sign == "+":
        mask = grid.xi > 0
    else:
        mask = grid.xi < 0
        mask[_nyquist_slot(grid)] = False
    return Multiplier(grid, mask.astype(np.complex128), f"P{sign}")


def hilbert_multiplier(grid: Grid1D) -> Multiplier:
    """Symbol i*sgn(xi) on paired modes; zero and Nyquist modes are annihilated."""
    sym = 1j * np.sign(grid.xi)
    sym[_nyquist_slot(grid)] = 0.0
    return Multiplier(grid, sym, "H")


def fractional_multiplier(grid: Grid1D, s: float, kind: str = "D") -> Multiplier:
    """|xi|^s (kind 'D') or (1+xi^2)^(s/2) (kind 'J').

    For kind 'D' with s < 0 the zero-mode symbol is set to 0; applying the
    operator to a field with nonvanishing mean is rejected in
    :func:`fractional`.
    """
    if kind == "D":
        sym = np.zeros(grid.n, dtype=np.complex128)
        nz = grid.xi != 0
        sym[nz] = np.abs(grid.xi[nz]) ** s
        if s == 0:
            sym[~nz] = 1.0
        return Multiplier(grid, sym, f"|D|^{s}")
    if kind == "J":
        return Multiplier(grid, (1.0 + grid.xi**2) ** (s / 2.0), f"J^{s}")
    raise ValueError(f"fractional kind must be 'D' or 'J', got {kind!r}")


def pi0(f: SpectralField) -> SpectralField:
    """Projection onto the zero and Nyquist modes."""
    hat = np.zeros(f.grid.n, dtype=np.complex128)
    ny = _nyquist_slot(f.grid)
    hat[0] = f.hat[0]
    hat[ny] = f.hat[ny]
    return SpectralField.from_hat(f.grid, hat)


def remove_pi0(f: SpectralField) -> SpectralField:
    """Project onto the paired-mode class (zero and Nyquist content removed)."""
    hat = f.hat.copy()
    hat[0] = 0.0
    hat[_nyquist_slot(f.grid)] = 0.0
    return SpectralField.from_hat(f.grid, hat)


def project(f: SpectralField, sign: str) -> SpectralField:
    return projection_multiplier(f.grid, sign).apply(f)


def hilbert(f: SpectralField) -> SpectralField:
    return hilbert_multiplier(f.grid).apply(f)


def fractional(f: SpectralField, s: float, kind: str = "D") -> SpectralField:
    if kind == "D" and s < 0:
        scale = float(np.max(np.abs(f.hat))) or 1.0
        if abs(f.hat[0]) > 1e-13 * scale:
            raise SingularOperatorError(
                f"|D|^{s} needs a zero-mean input; relative mean magnitude {abs(f.hat[0]) / scale:.2e}"
            )
    return fractional_multiplier(f.grid, s, kind).apply(f)


def derivative(f: SpectralField, order: int = 1) -> SpectralField:
    return derivative_multiplier(f.grid, order).apply(f)


# --- smooth dyadic family --------------------------------------------------

def _smooth_step(y: np.ndarray) -> np.ndarray:
    """C^infinity step: 0 for y<=0, 1 for y>=1, strictly increasing between."""
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros_like(y)
    out[y >= 1.0] = 1.0
    mid = (y > 0.0) & (y < 1.0)
    if np.any(mid):
        ym = y[mid]
        a = np.exp(-1.0 / ym)
        b = np.exp(-1.0 / (1.0 - ym))
        out[mid] = a / (a + b)
    return out


def smooth_bump(xi: np.ndarray) -> np.ndarray:
    """Even C^infinity bump: 1 on [-1, 1], support [-2, 2]."""
    return _smooth_step(2.0 - np.abs(np.asarray(xi, dtype=np.float64)))


def annulus_bump(xi: np.ndarray) -> np.ndarray:
    """smooth_bump(xi) - smooth_bump(2 xi): supported on 1/2 <= |xi| <= 2.

    Dilates of this function telescope: summing over dyadic scales
    reproduces 1 at every nonzero frequency.
    """
    xi = np.asarray(xi, dtype=np.float64)
    return smooth_bump(xi) - smooth_bump(2.0 * xi)


BlockKind = Literal["Q", "P", "Qtilde", "Ptilde"]


def block_symbol(zeta: np.ndarray, kind: str) -> np.ndarray:
    """Evaluate the dyadic family's profile at rescaled frequency zeta = xi / 2^k.

    Q      : annulus bump, support 1/2 <= |zeta| <= 2
    P      : low-pass below the block, equals the telescoped sum of Q over
             scales <= k-3; support |zeta| < 1/4, value 1 at zeta = 0
    Qtilde : 1 on 1/4 <= |zeta| <= 4, support 1/8 < |zeta| < 8
    Ptilde : 1 on |zeta| <= 10, compactly supported
    """
    zeta = np.asarray(zeta, dtype=np.float64)
    if kind == "Q":
        return annulus_bump(zeta)
    if kind == "P":
        return smooth_bump(8.0 * zeta)
    if kind == "Qtilde":
        return smooth_bump(zeta / 4.0) * (1.0 - smooth_bump(8.0 * zeta))
    if kind == "Ptilde":
        return smooth_bump(zeta / 10.0)
    raise ValueError(f"unknown block kind {kind!r}")


def lp_block_multiplier(grid: Grid1D, k: int, kind: str = "Q") -> Multiplier:
    k_min, k_max = grid.resolvable_block_range()
    if not (k_min <= k <= k_max):
        raise ResolvableRangeError(
            f"block index {k} outside resolvable range [{k_min}, {k_max}] for this grid"
        )
    zeta = grid.xi * 2.0 ** (-k)
    return Multiplier(grid, block_symbol(zeta, kind).astype(np.complex128), f"{kind}_{k}")


def lp_block(f: SpectralField, k: int, kind: str = "Q") -> SpectralField:
    return lp_block_multiplier(f.grid, k, kind).apply(f)


def lp_norm(f: SpectralField, p: float) -> float:
    """Quadrature L^p norm (sum |f(x_j)|^p dx)^(1/p); p = inf gives max |f|."""
    if p != np.inf and p <= 1:
        raise ValueError(f"norm exponent must lie in (1, inf], got {p}")
    return f.norm_lp(p)


# --- dealiased products ----------------------------------------------------

def dealias_hat(grid: Grid1D, hat: np.ndarray) -> np.ndarray:
    return np.where(grid.dealias_mask, hat, 0.0)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """2/3-rule product of two fields: mask both factors, multiply, mask again."""
    if f.grid != g.grid:
        raise GridMismatchError("product of fields on different grids")
    fm = np.fft.ifft(dealias_hat(f.grid, f.hat))
    gm = np.fft.ifft(dealias_hat(g.grid, g.hat))
    hat = dealias_hat(f.grid, np.fft.fft(fm * gm))
    return SpectralField.from_hat(f.grid, hat)


def masked_samples(grid: Grid1D, samples: np.ndarray) -> np.ndarray:
    """Physical samples of a coefficient after the 2/3-rule pre-mask.

    Used for gridded coefficients that are not band-limited by
    construction; the returned array can be reused across many products.
    """
    hat = np.fft.fft(np.asarray(samples, dtype=np.complex128))
    return np.fft.ifft(dealias_hat(grid, hat))


def coeff_product(grid: Grid1D, masked_coeff: np.ndarray, field_values: np.ndarray) -> np.ndarray:
    """Product (already-masked coefficient) * field, returned as masked hat values.

    ``field_values`` are physical samples assumed to be in-band (the 2/3
    mask is idempotent on every field the solvers produce); the product is
    masked after multiplication.  Works on stacks via broadcasting over the
    leading axes.
    """
    hat = np.fft.fft(masked_coeff * field_values, axis=-1)
    return np.where(grid.dealias_mask, hat, 0.0)


# --- space-time stacks ------------------------------------------------------

class SpaceTimeField:
    """A field sampled on a uniform time grid: values[i] is the slice at times[i]."""

    __slots__ = ("grid", "times", "values")

    def __init__(self, grid: Grid1D, times: np.ndarray, values: np.ndarray) -> None:
        times = np.asarray(times, dtype=np.float64)
        values = np.asarray(values, dtype=np.complex128)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("need at least two time nodes")
        steps = np.diff(times)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-14):
            raise ValueError("time nodes must be uniformly spaced and increasing")
        if values.shape != (len(times), grid.n):
            raise GridMismatchError(
                f"expected slice stack of shape {(len(times), grid.n)}, got {values.shape}"
            )
        self.grid = grid
        self.times = times
        self.values = values

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def slice(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.values[i])

    def norm_series(self) -> np.ndarray:
        return np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2, axis=1))

    def sup_norm(self) -> float:
        return float(np.max(self.norm_series()))

    def __repr__(self) -> str:
        return (
            f"SpaceTimeField(n={self.grid.n}, slices={len(self.times)}, "
            f"t in [{self.times[0]:g}, {self.times[-1]:g}])"
        )


# --- diagnostics and data helpers -----------------------------------------

def boundary_mass(f: SpectralField) -> float:
    """L^2 mass in the outer quarter |x| > 3L/4 (wrap-around indicator)."""
    grid = f.grid
    outer = np.abs(grid.x) > 0.75 * grid.half_length
    return float(np.sqrt(grid.dx * np.sum(np.abs(f.values[outer]) ** 2)))


def gaussian_field(grid: Grid1D, center: float = 0.0, width: float = 1.0, amplitude: float = 1.0) -> SpectralField:
    vals = amplitude * np.exp(-((grid.x - center) ** 2) / (2.0 * width**2))
    return SpectralField(grid, vals.astype(np.complex128))


def mode_field(grid: Grid1D, k: int) -> SpectralField:
    """The single Fourier mode exp(i * (pi k / L) x)."""
    if not (-grid.n // 2 <= k < grid.n // 2):
        raise ValueError(f"mode index {k} not representable on this grid")
    xi = np.pi * k / grid.half_length
    return SpectralField(grid, np.exp(1j * xi * grid.x))


def random_band_field(
    grid: Grid1D,
    band: int,
    rng: np.random.Generator | int,
    *,
    real: bool = False,
    zero_mean: bool = True,
    band_lo: int = 1,
) -> SpectralField:
    """Band-limited field with i.i.d. complex Gaussian coefficients.

    Coefficients are drawn mode-by-mode for |k| in [band_lo, band] in a
    fixed order, so the same seed yields the same function on any grid
    that resolves the band (refinement studies rely on this).
    """
    if band >= grid.n // 2:
        raise ValueError(f"band {band} not below the Nyquist index {grid.n // 2}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    hat = np.zeros(grid.n, dtype=np.complex128)
    for k in range(band_lo, band + 1):
        zp = complex(rng.standard_normal(), rng.standard_normal())
        zm = complex(rng.standard_normal(), rng.standard_normal())
        hat[k] = zp
        hat[-k] = np.conj(zp) if real else zm
    if not zero_mean:
        z0 = rng.standard_normal()
        hat[0] = z0
    hat *= grid.n  # unit-scale physical values regardless of n
    return SpectralField.from_hat(grid, hat)
