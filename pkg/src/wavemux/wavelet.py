"""FFT-based continuous wavelet transform with an analytic Morlet mother.

The transform correlates the window with scaled wavelets entirely in the
frequency domain: multiply the window's transform by each scale's (real,
non-negative) frequency response and invert. Input is zero-padded to the
next power of two and trimmed back, so runtime steps at power-of-two
boundaries. Each scale's response is normalized to unit discrete L2 energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as _fft

from .errors import InvalidLength, InvalidRange, NonFiniteInput

MIN_SCALE_SAMPLES = 2.0  # below two samples per cycle the response aliases


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


@dataclass(frozen=True)
class MorletParams:
    """Analytic Morlet mother wavelet parameters.

    ``omega0`` is the dimensionless center frequency; values below 5 leave
    the admissibility approximation regime and are rejected.
    """

    omega0: float = 6.0

    def __post_init__(self):
        if self.omega0 < 5.0:
            raise InvalidRange(f"omega0 must be >= 5, got {self.omega0}")


@dataclass(frozen=True)
class ScaleGrid:
    """Log-spaced scales (samples per cycle unit) and their pseudo-frequencies.

    Scales ascend strictly, so ``frequencies_hz`` descends from fmax to fmin.
    The scale for a frequency f is  s = omega0 * fs / (2 pi f).
    """

    scales: np.ndarray
    frequencies_hz: np.ndarray
    sample_rate_hz: float
    omega0: float

    def __post_init__(self):
        self.scales.setflags(write=False)
        self.frequencies_hz.setflags(write=False)

    @property
    def q(self) -> int:
        return self.scales.shape[0]

    @property
    def log_step_octaves(self) -> float:
        """Octaves between adjacent scale bins."""
        if self.q < 2:
            return 0.0
        return float(np.log2(self.scales[1] / self.scales[0]))

    def cache_key(self) -> tuple:
        return (
            self.q,
            float(self.frequencies_hz[0]),
            float(self.frequencies_hz[-1]),
            self.sample_rate_hz,
            self.omega0,
        )

    def nearest_row(self, f_hz: float) -> int:
        return int(np.argmin(np.abs(self.frequencies_hz - f_hz)))


def build_scale_grid(
    fmin_hz: float,
    fmax_hz: float,
    q: int,
    sample_rate_hz: float,
    params: MorletParams = MorletParams(),
) -> ScaleGrid:
    """Q log-spaced pseudo-frequencies from fmin to fmax, inclusive."""
    if q < 2:
        raise InvalidRange(f"need q >= 2 scales, got {q}")
    if not (0.0 < fmin_hz < fmax_hz <= sample_rate_hz / 2.0):
        raise InvalidRange(
            f"need 0 < fmin < fmax <= fs/2, got fmin={fmin_hz}, fmax={fmax_hz}, "
            f"fs={sample_rate_hz}"
        )
    freqs = np.geomspace(fmax_hz, fmin_hz, q)
    scales = params.omega0 * sample_rate_hz / (2.0 * np.pi * freqs)
    if scales[0] < MIN_SCALE_SAMPLES:
        raise InvalidRange(
            f"fmax={fmax_hz} Hz puts the smallest scale at {scales[0]:.3f} samples; "
            f"the grid requires >= {MIN_SCALE_SAMPLES}"
        )
    return ScaleGrid(
        scales=scales,
        frequencies_hz=freqs,
        sample_rate_hz=sample_rate_hz,
        omega0=params.omega0,
    )


def default_grid(n: int, sample_rate_hz: float, q: int = 64,
                 params: MorletParams = MorletParams()) -> ScaleGrid:
    """Two full cycles per window at the low end, 0.45 fs at the high end."""
    fmin = 2.0 * sample_rate_hz / n
    fmax = 0.45 * sample_rate_hz
    return build_scale_grid(fmin, fmax, q, sample_rate_hz, params)


@dataclass(frozen=True)
class CwtArray:
    """Q x N complex transform of one window, trimmed back after padding.

    ``boundary_flags`` marks columns within one largest-scale envelope width
    of either window edge; clients may de-emphasize them.
    """

    values: np.ndarray
    grid: ScaleGrid
    n_pad: int
    boundary_flags: np.ndarray
    source: Optional[str] = None

    def __post_init__(self):
        self.values.setflags(write=False)
        self.boundary_flags.setflags(write=False)

    @property
    def q(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def _boundary_flags(n: int, grid: ScaleGrid) -> np.ndarray:
    radius = min(int(np.ceil(grid.scales[-1])), n // 2)
    flags = np.zeros(n, dtype=bool)
    if radius > 0:
        flags[:radius] = True
        flags[n - radius:] = True
    return flags


class MorletTransform:
    """Reusable transform context for one scale grid.

    Holds the per-(padded length, scale) frequency responses, built once and
    then read-only, so repeated transforms allocate only their outputs. One
    instance per thread; the cache itself is guarded for concurrent builds.
    """

    def __init__(self, grid: ScaleGrid, params: Optional[MorletParams] = None):
        self.grid = grid
        self.params = params or MorletParams(omega0=grid.omega0)
        if self.params.omega0 != grid.omega0:
            raise InvalidRange(
                "grid was built for omega0="
                f"{grid.omega0}, transform given {self.params.omega0}"
            )
        self._responses: dict[int, np.ndarray] = {}

    def _response_matrix(self, n_pad: int) -> np.ndarray:
        """(Q, n_pad) real responses, unit discrete L2 energy per scale."""
        cached = self._responses.get(n_pad)
        if cached is not None:
            return cached
        omega = 2.0 * np.pi * np.fft.fftfreq(n_pad)
        pos = omega > 0.0
        resp = np.zeros((self.grid.q, n_pad))
        arg = self.grid.scales[:, None] * omega[None, pos] - self.params.omega0
        resp[:, pos] = np.exp(-0.5 * arg * arg)
        energy = np.sum(resp * resp, axis=1)
        resp *= np.sqrt(n_pad / energy)[:, None]
        resp.setflags(write=False)
        self._responses[n_pad] = resp
        return resp

    def transform(self, row: np.ndarray, source: Optional[str] = None) -> CwtArray:
        row = np.asarray(row, dtype=np.float64)
        if row.ndim != 1 or row.shape[0] < 4:
            raise InvalidLength(f"window must be 1-d with >= 4 samples, got {row.shape}")
        if not np.all(np.isfinite(row)):
            raise NonFiniteInput("window contains NaN or infinity")
        n = row.shape[0]
        n_pad = next_pow2(n)
        spectrum = _fft.fft(row, n=n_pad)
        resp = self._response_matrix(n_pad)
        values = _fft.ifft(spectrum[None, :] * resp, axis=1)[:, :n]
        return CwtArray(
            values=values,
            grid=self.grid,
            n_pad=n_pad,
            boundary_flags=_boundary_flags(n, self.grid),
            source=source,
        )


def cwt(row: np.ndarray, grid: ScaleGrid,
        params: Optional[MorletParams] = None,
        source: Optional[str] = None) -> CwtArray:
    """One-shot transform; engine paths hold a MorletTransform instead."""
    return MorletTransform(grid, params).transform(row, source=source)
