"""Smoothed wavelet coherence and relative phase between two transforms.

Coherence is the normalized magnitude-squared smoothed cross-spectrum:

    C = |S(Wi . conj(Wj))|^2 / ( S(|Wi|^2) . S(|Wj|^2) )

with S a separable smoothing operator: a per-scale Gaussian along time
(standard deviation proportional to the scale) followed by a boxcar across
scale bins. Without smoothing the quotient is identically one, so S is what
makes the statistic informative. Phase is the argument of the smoothed
cross-spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as _fft

from .errors import DimensionMismatch, EmptyBand, KernelTooWide
from .wavelet import CwtArray, ScaleGrid, next_pow2

# denominator cells below UNDERFLOW_REL x (field max) produce coherence 0
UNDERFLOW_REL = 1e-12
CLAMP_ANOMALY = 1e-6


@dataclass(frozen=True)
class SmoothingSpec:
    """Separable smoothing kernels, both normalized to unit sum.

    time_sigma_scales: Gaussian sigma in samples per unit scale (sigma at
    scale s is ``time_sigma_scales * s``). scale_octaves: boxcar span across
    scales, in octaves of the grid. ``identity()`` disables both, which makes
    the coherence quotient degenerate to 1.
    """

    time_sigma_scales: float = 1.0 / np.sqrt(2.0)
    scale_octaves: float = 0.6
    truncate: float = 4.0

    def __post_init__(self):
        if self.time_sigma_scales < 0 or self.scale_octaves < 0:
            raise ValueError("smoothing widths must be non-negative")
        if self.truncate <= 0:
            raise ValueError("truncate must be positive")

    @classmethod
    def identity(cls) -> "SmoothingSpec":
        return cls(time_sigma_scales=0.0, scale_octaves=0.0)


def time_kernel(sigma: float, n: int, truncate: float = 4.0) -> np.ndarray:
    """Unit-sum Gaussian taps; radius capped at n//2 so reflection stays valid."""
    radius = min(int(np.ceil(truncate * sigma)), n // 2) if sigma > 0 else 0
    if radius == 0:
        return np.ones(1)
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (k / sigma) ** 2)
    return g / g.sum()


def scale_kernel_width(grid: ScaleGrid, octaves: float) -> int:
    """Odd boxcar width covering ``octaves`` of the grid, at least one bin."""
    step = grid.log_step_octaves
    if octaves <= 0 or step <= 0:
        return 1
    w = int(round(octaves / step))
    if w % 2 == 0:
        w += 1
    return max(w, 1)


class SmoothingPlan:
    """Precomputed smoothing for fields of one (grid, width) shape.

    Time smoothing runs as one batched FFT convolution: rows are extended by
    whole-sample reflection (which preserves row sums under unit-sum
    kernels), zero-extended to ``2 * next_pow2(n)`` and multiplied by each
    row's kernel transform. The fixed convolution length means runtime steps
    only at power-of-two boundaries of n. Scale smoothing is a reflected
    cumulative-sum boxcar.
    """

    def __init__(self, grid: ScaleGrid, n: int, spec: SmoothingSpec):
        self.grid = grid
        self.n = n
        self.spec = spec
        sigmas = spec.time_sigma_scales * grid.scales
        self.radii = np.array(
            [0 if s <= 0 else min(int(np.ceil(spec.truncate * s)), n // 2) for s in sigmas],
            dtype=np.int64,
        )
        self.rmax = int(self.radii.max()) if len(self.radii) else 0
        self.width = scale_kernel_width(grid, spec.scale_octaves)
        if (self.width - 1) // 2 > grid.q:
            raise KernelTooWide(
                f"scale boxcar of {self.width} bins exceeds the {grid.q}-row grid"
            )
        self.conv_len = 2 * next_pow2(n)
        if self.rmax > 0:
            taps = np.zeros((grid.q, self.conv_len))
            for i, (sigma, radius) in enumerate(zip(sigmas, self.radii)):
                g = time_kernel(float(sigma), n, spec.truncate)
                r = (len(g) - 1) // 2
                assert r == radius
                taps[i, 0] = g[r]
                if r:
                    taps[i, 1:r + 1] = g[r + 1:]
                    taps[i, self.conv_len - r:] = g[:r]
            self._kernel_rfft = _fft.rfft(taps, axis=1)
        else:
            self._kernel_rfft = None

    def _smooth_time(self, rows: np.ndarray) -> np.ndarray:
        if self._kernel_rfft is None:
            return rows.copy()
        n, r, length = self.n, self.rmax, self.conv_len
        buf = np.empty((rows.shape[0], length))
        buf[:, r:r + n] = rows
        buf[:, :r] = rows[:, r - 1::-1]
        buf[:, r + n:r + n + r] = rows[:, :n - r - 1:-1]
        buf[:, 2 * r + n:] = 0.0
        out = _fft.irfft(_fft.rfft(buf, axis=1) * self._kernel_rfft, n=length, axis=1)
        return out[:, r:r + n]

    def _smooth_scale(self, rows: np.ndarray) -> np.ndarray:
        w = self.width
        if w == 1:
            return rows
        half = (w - 1) // 2
        padded = np.pad(rows, ((half, half), (0, 0)), mode="symmetric")
        csum = np.cumsum(padded, axis=0)
        out = np.empty_like(rows)
        out[0] = csum[w - 1] / w
        out[1:] = (csum[w:] - csum[:-w]) / w
        return out

    def apply_real(self, rows: np.ndarray) -> np.ndarray:
        return self._smooth_scale(self._smooth_time(rows))

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Smooth a real or complex Q x N field (linear, so parts separately)."""
        if rows.shape != (self.grid.q, self.n):
            raise DimensionMismatch(
                f"plan built for {(self.grid.q, self.n)}, got {rows.shape}"
            )
        if np.iscomplexobj(rows):
            return self.apply_real(rows.real) + 1j * self.apply_real(rows.imag)
        return self.apply_real(rows)


_PLAN_CACHE: dict[tuple, SmoothingPlan] = {}


def _plan_for(grid: ScaleGrid, n: int, spec: SmoothingSpec) -> SmoothingPlan:
    key = (grid.cache_key(), n, spec.time_sigma_scales, spec.scale_octaves, spec.truncate)
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        plan = SmoothingPlan(grid, n, spec)
        if len(_PLAN_CACHE) > 32:
            _PLAN_CACHE.clear()
        _PLAN_CACHE[key] = plan
    return plan


def smooth(field: np.ndarray, grid: ScaleGrid, spec: SmoothingSpec) -> np.ndarray:
    """Smooth one Q x N field in time then across scales."""
    field = np.asarray(field)
    if field.ndim != 2 or field.shape[0] != grid.q:
        raise DimensionMismatch(
            f"field must be (Q={grid.q}, N), got {field.shape}"
        )
    return _plan_for(grid, field.shape[1], spec).apply(field)


@dataclass(frozen=True)
class CoherenceField:
    """Per-(time, scale) coherence in [0, 1] and relative phase in (-pi, pi].

    Phase of pair (i, j) is the lead of i over j; swapping the pair negates
    it. ``underflow_cells`` counts denominator cells too silent to trust
    (reported as coherence 0, phase 0); ``clamp_excess`` is the largest
    rounding overshoot removed by clamping.
    """

    coherence: np.ndarray
    phase: np.ndarray
    pair: tuple[str, str]
    grid: ScaleGrid
    boundary_flags: np.ndarray
    underflow_cells: int = 0
    clamp_excess: float = 0.0

    def __post_init__(self):
        self.coherence.setflags(write=False)
        self.phase.setflags(write=False)
        self.boundary_flags.setflags(write=False)

    @property
    def q(self) -> int:
        return self.coherence.shape[0]

    @property
    def n(self) -> int:
        return self.coherence.shape[1]


def wavelet_coherence(
    wi: CwtArray,
    wj: CwtArray,
    spec: SmoothingSpec = SmoothingSpec(),
    pair: Optional[tuple[str, str]] = None,
) -> CoherenceField:
    """Smoothed coherence and phase of two transforms on the same grid."""
    if wi.values.shape != wj.values.shape:
        raise DimensionMismatch(
            f"transform shapes differ: {wi.values.shape} vs {wj.values.shape}"
        )
    if wi.grid.cache_key() != wj.grid.cache_key():
        raise DimensionMismatch("transforms were built on different scale grids")
    plan = _plan_for(wi.grid, wi.n, spec)

    a, b = wi.values, wj.values
    cross = a * np.conj(b)
    power_i = np.square(a.real) + np.square(a.imag)
    power_j = np.square(b.real) + np.square(b.imag)

    s_cross_re = plan.apply_real(cross.real)
    s_cross_im = plan.apply_real(cross.imag)
    s_power_i = plan.apply_real(power_i)
    s_power_j = plan.apply_real(power_j)

    eps_i = UNDERFLOW_REL * float(np.max(s_power_i, initial=0.0))
    eps_j = UNDERFLOW_REL * float(np.max(s_power_j, initial=0.0))
    silent = (s_power_i <= eps_i) | (s_power_j <= eps_j)

    num = np.square(s_cross_re) + np.square(s_cross_im)
    den = s_power_i * s_power_j
    coherence = num / np.where(silent, 1.0, den)
    coherence[silent] = 0.0

    peak = float(np.max(coherence, initial=0.0))
    excess = max(peak - 1.0, 0.0)
    np.clip(coherence, 0.0, 1.0, out=coherence)

    phase = np.arctan2(s_cross_im, s_cross_re)
    phase[silent] = 0.0

    if pair is None:
        pair = (wi.source or "i", wj.source or "j")
    return CoherenceField(
        coherence=coherence,
        phase=phase,
        pair=pair,
        grid=wi.grid,
        boundary_flags=(wi.boundary_flags | wj.boundary_flags),
        underflow_cells=int(np.count_nonzero(silent)),
        clamp_excess=excess,
    )


def reduce_band(field: CoherenceField, f_lo_hz: float, f_hi_hz: float) -> np.ndarray:
    """Per-time mean coherence over scale rows inside the band."""
    freqs = field.grid.frequencies_hz
    rows = (freqs >= f_lo_hz) & (freqs <= f_hi_hz)
    if not rows.any():
        raise EmptyBand(
            f"band [{f_lo_hz}, {f_hi_hz}] Hz misses the grid "
            f"[{freqs.min():g}, {freqs.max():g}] Hz"
        )
    return field.coherence[rows].mean(axis=0)
