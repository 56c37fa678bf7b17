"""Shared test utilities: event-log normalization and independent oracles."""

import json

import numpy as np


def dft_oracle(row: np.ndarray) -> np.ndarray:
    """Direct O(N^2) summation of the transform definition, first N/2+1 bins."""
    n = len(row)
    k = np.arange(n // 2 + 1)
    angles = -2j * np.pi * np.outer(k, np.arange(n)) / n
    return np.exp(angles) @ row


def dft_oracle_matrix(n: int) -> np.ndarray:
    """(N/2+1, N) direct-summation matrix for repeated O(N^2) evaluations."""
    k = np.arange(n // 2 + 1)
    return np.exp(-2j * np.pi * np.outer(k, np.arange(n)) / n)


def periodized_morlet(scale: float, n_pad: int, omega0: float = 6.0) -> np.ndarray:
    """Time-sampled analytic Morlet wrapped onto n_pad points, unit L2 norm."""
    m = np.arange(n_pad)
    psi = np.zeros(n_pad, dtype=complex)
    for wrap in range(-4, 5):
        u = (m + wrap * n_pad) / scale
        psi += np.exp(1j * omega0 * u) * np.exp(-0.5 * u * u)
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2))


def cwt_direct(row: np.ndarray, grid) -> np.ndarray:
    """O(Q N^2) circular correlation against the sampled wavelet bank."""
    from wavemux.wavelet import next_pow2

    n = len(row)
    n_pad = next_pow2(n)
    padded = np.concatenate([row, np.zeros(n_pad - n)])
    idx = (np.arange(n_pad)[None, :] - np.arange(n_pad)[:, None]) % n_pad
    out = np.zeros((grid.q, n_pad), dtype=complex)
    for k, scale in enumerate(grid.scales):
        psi = periodized_morlet(float(scale), n_pad, grid.omega0)
        out[k] = np.conj(psi)[idx] @ padded
    return out[:, :n]


def strip_timing(event: str, data: str) -> tuple[str, str]:
    """Normalize one event for run-to-run comparison (drop wall-clock fields)."""
    if event != "tick":
        return event, data
    obj = json.loads(data)
    obj.pop("timings_us", None)
    obj.pop("deadline_missed", None)
    return event, json.dumps(obj, separators=(",", ":"), sort_keys=True)


class EventLog:
    """Collects (event, payload) pairs from an engine sink."""

    def __init__(self):
        self.entries: list[tuple[str, str]] = []

    def __call__(self, event: str, data: str) -> None:
        self.entries.append((event, data))

    def normalized(self) -> list[tuple[str, str]]:
        return [strip_timing(e, d) for e, d in self.entries]

    def of_type(self, event: str) -> list[dict]:
        return [json.loads(d) for e, d in self.entries if e == event]
