"""Frequency-domain features: truncated real-input DFT and cosine similarity.

Real windows have Hermitian-symmetric transforms, so only the first
``L = N/2 + 1`` bins are kept. Pairwise cosine similarity over those bins
(either the complex vectors or their magnitudes) forms the dense first-layer
weights of the relationship graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy import fft as _fft

from .errors import DimensionMismatch, InvalidLength, NonFiniteInput, ZeroVector

# overshoot beyond [0, 1] larger than this is reported as an anomaly
CLAMP_ANOMALY = 1e-6


class SimilarityMode(Enum):
    MAGNITUDE = "magnitude"
    COMPLEX = "complex"


@dataclass(frozen=True)
class Spectrum:
    """Truncated transform of one window: L = N/2 + 1 complex bins."""

    bins: np.ndarray
    magnitudes: np.ndarray
    source: Optional[str] = None

    def __post_init__(self):
        self.bins.setflags(write=False)
        self.magnitudes.setflags(write=False)

    @property
    def l(self) -> int:
        return self.bins.shape[0]


def _check_window(row: np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise InvalidLength("window must be one-dimensional")
    n = row.shape[0]
    if n < 4 or n % 2 != 0:
        raise InvalidLength(f"window length must be even and >= 4, got {n}")
    if not np.all(np.isfinite(row)):
        raise NonFiniteInput("window contains NaN or infinity")
    return row


def rfft(row: np.ndarray, source: Optional[str] = None) -> Spectrum:
    """Transform one real window to its L non-redundant bins."""
    row = _check_window(row)
    bins = _fft.rfft(row)
    return Spectrum(bins=bins, magnitudes=np.abs(bins), source=source)


def hann_window(n: int) -> np.ndarray:
    return np.hanning(n)


class SpectralWorkspace:
    """Batch transformer with reusable output buffers.

    After the first call the same arrays are rewritten in place, so the
    steady-state tick path performs no per-call output allocation. The
    returned arrays are views of the workspace; copy before storing.
    """

    def __init__(self, m: int, n: int, window: Optional[str] = None):
        if n < 4 or n % 2 != 0:
            raise InvalidLength(f"window length must be even and >= 4, got {n}")
        self.m = m
        self.n = n
        self.l = n // 2 + 1
        self._bins = np.empty((m, self.l), dtype=np.complex128)
        self._mags = np.empty((m, self.l), dtype=np.float64)
        if window is None or window == "none":
            self._taper = None
        elif window == "hann":
            self._taper = hann_window(n)
        else:
            raise ValueError(f"unknown window {window!r}")

    def transform(self, matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All rows at once; returns (bins, magnitudes) workspace views."""
        if matrix.shape != (self.m, self.n):
            raise DimensionMismatch(
                f"expected {(self.m, self.n)}, got {matrix.shape}"
            )
        if self._taper is not None:
            matrix = matrix * self._taper
        np.copyto(self._bins, _fft.rfft(matrix, axis=1))
        np.abs(self._bins, out=self._mags)
        return self._bins, self._mags


def _as_vector(x: Union[Spectrum, np.ndarray], mode: SimilarityMode) -> np.ndarray:
    if isinstance(x, Spectrum):
        return x.magnitudes if mode is SimilarityMode.MAGNITUDE else x.bins
    x = np.asarray(x)
    return np.abs(x) if mode is SimilarityMode.MAGNITUDE else x


def cosine_similarity(
    a: Union[Spectrum, np.ndarray],
    b: Union[Spectrum, np.ndarray],
    mode: SimilarityMode = SimilarityMode.MAGNITUDE,
    exclude_dc: bool = False,
) -> float:
    """Cosine similarity of two spectra in [0, 1].

    MAGNITUDE mode compares magnitude vectors (insensitive to phase and to
    circular time shifts); COMPLEX mode uses |<a, b>| / (|a| |b|) on the
    complex bins. Raises ZeroVector when either norm vanishes.
    """
    va, vb = _as_vector(a, mode), _as_vector(b, mode)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"spectra lengths differ: {va.shape} vs {vb.shape}")
    if exclude_dc:
        va, vb = va[1:], vb[1:]
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for an all-zero spectrum")
    num = abs(np.vdot(va, vb))
    return float(min(1.0, num / (na * nb)))


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise similarity with unit diagonal for nonzero signals.

    ``zero_signals[i]`` marks all-zero windows; their rows and columns are
    reported as 0 (including the diagonal) rather than raising mid-stream.
    ``clamp_excess`` is the largest overshoot removed when clamping to [0, 1].
    """

    values: np.ndarray
    zero_signals: np.ndarray
    clamp_excess: float

    def __post_init__(self):
        self.values.setflags(write=False)
        self.zero_signals.setflags(write=False)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def zero_pair_mask(self) -> np.ndarray:
        """(M, M) bool mask of pairs whose similarity was forced to 0."""
        return self.zero_signals[:, None] | self.zero_signals[None, :]


def similarity_matrix(
    spectra: Union[Sequence[Spectrum], np.ndarray],
    mode: SimilarityMode = SimilarityMode.MAGNITUDE,
    exclude_dc: bool = False,
) -> SimilarityMatrix:
    """All-pairs cosine similarity via one Gram product, O(M^2 L).

    Accepts a sequence of :class:`Spectrum` or a pre-stacked (M, L) array of
    complex bins (or magnitudes, for MAGNITUDE mode).
    """
    if isinstance(spectra, np.ndarray):
        stacked = spectra
    else:
        if len(spectra) < 2:
            raise DimensionMismatch("need at least 2 spectra")
        stacked = np.stack([s.bins for s in spectra])
    if stacked.ndim != 2:
        raise DimensionMismatch("expected a 2-d stack of spectra")
    if exclude_dc:
        stacked = stacked[:, 1:]

    if mode is SimilarityMode.MAGNITUDE:
        a = np.abs(stacked) if np.iscomplexobj(stacked) else stacked
        gram = a @ a.T
    else:
        gram = np.abs(stacked @ stacked.conj().T)
    diag = np.sqrt(np.maximum(np.diag(gram).real, 0.0))
    zero = diag == 0.0
    safe = np.where(zero, 1.0, diag)
    values = gram.real / np.outer(safe, safe)

    excess = max(float(np.max(values, initial=0.0)) - 1.0, -float(np.min(values, initial=0.0)), 0.0)
    np.clip(values, 0.0, 1.0, out=values)
    values[zero, :] = 0.0
    values[:, zero] = 0.0
    idx = np.arange(values.shape[0])
    values[idx[~zero], idx[~zero]] = 1.0
    return SimilarityMatrix(values=values, zero_signals=zero, clamp_excess=excess)
