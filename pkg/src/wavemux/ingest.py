"""Signal ingestion: sliding buffers, the data matrix, and sample sources.

Each monitored signal keeps a causal ring buffer of its most recent ``n``
samples. Snapshots of all buffers form the data matrix consumed by the
frequency-domain stages. Samples come from either the deterministic
synthetic generator or an external newline-delimited JSON stream.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import IO, Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import (
    MalformedRecord,
    NonFiniteSample,
    NyquistViolation,
    UnknownSignal,
    WarmupIncomplete,
)

DEFAULT_LABELS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def default_labels(m: int) -> tuple[str, ...]:
    """Short unique labels: A..Z, then A1, B1, ..."""
    out = []
    for i in range(m):
        base = DEFAULT_LABELS[i % 26]
        cycle = i // 26
        out.append(base if cycle == 0 else f"{base}{cycle}")
    return tuple(out)


@dataclass(frozen=True)
class SignalId:
    index: int
    label: str


class RingBuffer:
    """Fixed-capacity sliding window over one signal.

    Writes are constant time with no reallocation; the logical content is
    always the last ``min(count, capacity)`` samples in push order.
    """

    __slots__ = ("capacity", "_data", "_head", "filled")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._data = np.zeros(capacity, dtype=np.float64)
        self._head = 0
        self.filled = 0

    def push(self, x: float) -> None:
        """Append one sample, evicting the oldest once full.

        Non-finite input is rejected before any state changes so a poisoned
        sample cannot corrupt the window.
        """
        if not math.isfinite(x):
            raise NonFiniteSample(f"rejected sample {x!r}")
        self._data[self._head] = x
        self._head = (self._head + 1) % self.capacity
        if self.filled < self.capacity:
            self.filled += 1

    @property
    def full(self) -> bool:
        return self.filled == self.capacity

    def view(self) -> np.ndarray:
        """Logical content oldest-to-newest (a copy)."""
        if self.filled < self.capacity:
            start = (self._head - self.filled) % self.capacity
            idx = (start + np.arange(self.filled)) % self.capacity
            return self._data[idx].copy()
        return np.concatenate((self._data[self._head:], self._data[: self._head]))


@dataclass(frozen=True)
class DataMatrix:
    """Immutable snapshot of all buffers at one instant.

    Row ``i`` is signal ``i``'s window read oldest-to-newest.
    """

    values: np.ndarray
    labels: tuple[str, ...]
    tick: int

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


class BufferBank:
    """All signal buffers advanced in lockstep, one column write per tick.

    Semantically equivalent to one :class:`RingBuffer` per signal; kept as a
    single matrix so the per-tick write and the snapshot are vectorized.
    """

    def __init__(self, m: int, n: int, labels: Optional[Sequence[str]] = None):
        self.m = m
        self.n = n
        self.labels = tuple(labels) if labels is not None else default_labels(m)
        if len(self.labels) != m or len(set(self.labels)) != m:
            raise ValueError("labels must be unique and match the signal count")
        self._data = np.zeros((m, n), dtype=np.float64)
        self._head = 0
        self.filled = 0

    def push_column(self, samples: np.ndarray) -> None:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape != (self.m,):
            raise ValueError(f"expected {self.m} samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise NonFiniteSample(f"non-finite sample for signal {self.labels[bad]!r}")
        self._data[:, self._head] = samples
        self._head = (self._head + 1) % self.n
        if self.filled < self.n:
            self.filled += 1

    @property
    def warm(self) -> bool:
        return self.filled == self.n

    def snapshot(self, tick: int) -> DataMatrix:
        """Copy-out snapshot; later pushes never mutate it."""
        if not self.warm:
            raise WarmupIncomplete(
                f"buffers hold {self.filled}/{self.n} samples; snapshot needs a full window"
            )
        ordered = np.concatenate(
            (self._data[:, self._head:], self._data[:, : self._head]), axis=1
        )
        return DataMatrix(values=ordered, labels=self.labels, tick=tick)


def snapshot(buffers: Sequence[RingBuffer], labels: Optional[Sequence[str]] = None,
             tick: int = 0) -> DataMatrix:
    """Assemble a data matrix from standalone ring buffers."""
    if not buffers:
        raise ValueError("no buffers")
    n = buffers[0].capacity
    for i, b in enumerate(buffers):
        if not b.full:
            raise WarmupIncomplete(f"buffer {i} holds {b.filled}/{b.capacity} samples")
        if b.capacity != n:
            raise ValueError("buffers must share one capacity")
    rows = np.stack([b.view() for b in buffers])
    lab = tuple(labels) if labels is not None else default_labels(len(buffers))
    return DataMatrix(values=rows, labels=lab, tick=tick)


# --- synthetic generator ---

@dataclass(frozen=True)
class SineComponent:
    amplitude: float
    frequency_hz: float
    phase_rad: float


@dataclass(frozen=True)
class SharedEvent:
    """A component injected into both members of a pair for a tick interval."""

    pair: tuple[int, int]
    component: SineComponent
    start_tick: int
    duration_ticks: int

    def active(self, tick: int) -> bool:
        return self.start_tick <= tick < self.start_tick + self.duration_ticks


@dataclass(frozen=True)
class SynthSpec:
    """Deterministic multi-signal sine-mixture specification.

    The same (seed, tick) always yields bit-identical samples. Component
    frequencies must stay strictly below half the sample rate.
    """

    signals: tuple[tuple[SineComponent, ...], ...]
    shared_events: tuple[SharedEvent, ...]
    sample_rate_hz: float
    seed: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        nyquist = self.sample_rate_hz / 2.0
        for comps in self.signals:
            for c in comps:
                if c.amplitude <= 0:
                    raise ValueError("component amplitude must be positive")
                if c.frequency_hz >= nyquist:
                    raise NyquistViolation(
                        f"component at {c.frequency_hz} Hz >= Nyquist {nyquist} Hz"
                    )
        for ev in self.shared_events:
            if ev.component.frequency_hz >= nyquist:
                raise NyquistViolation(
                    f"event component at {ev.component.frequency_hz} Hz >= Nyquist {nyquist} Hz"
                )
            i, j = ev.pair
            if i == j or not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"bad event pair {ev.pair}")

    @property
    def m(self) -> int:
        return len(self.signals)

    @classmethod
    def random(
        cls,
        m: int,
        seed: int,
        sample_rate_hz: float = 100.0,
        components_per_signal: int = 3,
        event_lanes: int = 3,
        event_duration: tuple[int, int] = (100, 500),
        event_gap: tuple[int, int] = (0, 400),
        horizon_ticks: int = 200_000,
    ) -> "SynthSpec":
        """Randomized mixture with intermittent shared components.

        Shared events are laid out on ``event_lanes`` independent lanes so a
        handful of pair couplings are typically active at any instant. Event
        components carry larger amplitudes than the per-signal components so
        an active pair's spectra visibly align.
        """
        rng = np.random.default_rng(seed)
        f_lo, f_hi = 0.01 * sample_rate_hz, 0.2 * sample_rate_hz
        signals = []
        for _ in range(m):
            comps = tuple(
                SineComponent(
                    amplitude=float(rng.uniform(0.4, 1.2)),
                    frequency_hz=float(rng.uniform(f_lo, f_hi)),
                    phase_rad=float(rng.uniform(0.0, 2.0 * np.pi)),
                )
                for _ in range(components_per_signal)
            )
            signals.append(comps)
        events = []
        for _ in range(event_lanes):
            t = int(rng.integers(0, max(event_gap[1], 1) + 1))
            while t < horizon_ticks:
                dur = int(rng.integers(event_duration[0], event_duration[1] + 1))
                i, j = map(int, rng.choice(m, size=2, replace=False))
                comp = SineComponent(
                    amplitude=float(rng.uniform(2.0, 4.0)),
                    frequency_hz=float(rng.uniform(f_lo, f_hi)),
                    phase_rad=float(rng.uniform(0.0, 2.0 * np.pi)),
                )
                events.append(SharedEvent((min(i, j), max(i, j)), comp, t, dur))
                t += dur + int(rng.integers(event_gap[0], event_gap[1] + 1))
        return cls(
            signals=tuple(signals),
            shared_events=tuple(sorted(events, key=lambda e: (e.start_tick, e.pair))),
            sample_rate_hz=sample_rate_hz,
            seed=seed,
        )


class SynthStream:
    """Vectorized evaluator for a :class:`SynthSpec`.

    Caches stacked component arrays; ``column(tick)`` is a pure function of
    the spec and tick.
    """

    def __init__(self, spec: SynthSpec):
        self.spec = spec
        m = spec.m
        cmax = max((len(c) for c in spec.signals), default=0)
        self._amp = np.zeros((m, cmax))
        self._omega = np.zeros((m, cmax))
        self._phase = np.zeros((m, cmax))
        for i, comps in enumerate(spec.signals):
            for k, c in enumerate(comps):
                self._amp[i, k] = c.amplitude
                self._omega[i, k] = 2.0 * np.pi * c.frequency_hz
                self._phase[i, k] = c.phase_rad
        # sorted by start so the scan can stop at the first future event
        self._events = tuple(sorted(spec.shared_events, key=lambda e: e.start_tick))

    def column(self, tick: int) -> np.ndarray:
        if tick < 0:
            raise ValueError("tick must be >= 0")
        t = tick / self.spec.sample_rate_hz
        out = np.sum(self._amp * np.sin(self._omega * t + self._phase), axis=1)
        for ev in self._events:
            if ev.active(tick):
                c = ev.component
                v = c.amplitude * math.sin(2.0 * np.pi * c.frequency_hz * t + c.phase_rad)
                out[ev.pair[0]] += v
                out[ev.pair[1]] += v
            elif ev.start_tick > tick:
                break
        return out


@lru_cache(maxsize=8)
def _stream_for(spec: SynthSpec) -> SynthStream:
    return SynthStream(spec)


def generate_tick(spec: SynthSpec, tick: int) -> np.ndarray:
    """One sample per signal at ``tick``; sum of each signal's active sines."""
    return _stream_for(spec).column(tick)


# --- external stream records ---

class SignalRegistry:
    """Label -> SignalId lookup for one session."""

    def __init__(self, labels: Sequence[str]):
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        self.ids = tuple(SignalId(i, lab) for i, lab in enumerate(labels))
        self._by_label = {s.label: s for s in self.ids}

    def __len__(self) -> int:
        return len(self.ids)

    def lookup(self, label: str) -> SignalId:
        try:
            return self._by_label[label]
        except KeyError:
            raise UnknownSignal(f"unregistered signal label {label!r}") from None


def parse_record(line: str, registry: SignalRegistry) -> tuple[SignalId, float]:
    """Parse one ``{"id": <label>, "v": <number>}`` record.

    Raises MalformedRecord for syntax or shape problems, UnknownSignal for
    unregistered labels, NonFiniteSample for NaN or infinity.
    """
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedRecord(f"bad JSON: {exc}") from None
    if not isinstance(obj, dict) or "id" not in obj or "v" not in obj:
        raise MalformedRecord("record must be an object with 'id' and 'v'")
    label, v = obj["id"], obj["v"]
    if not isinstance(label, str):
        raise MalformedRecord("'id' must be a string")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedRecord("'v' must be a number")
    sig = registry.lookup(label)
    value = float(v)
    if not math.isfinite(value):
        raise NonFiniteSample(f"non-finite sample for {label!r}")
    return sig, value


class LockstepStreamSource:
    """Replay-style source: one tick per complete round of fresh samples.

    A round completes once every registered signal has received at least one
    new sample; the latest value per signal wins within a round. Signals
    missing at end-of-stream simply never complete the final round.
    """

    def __init__(self, lines: Iterable[str], registry: SignalRegistry,
                 strict: bool = True):
        self._lines: Iterator[str] = iter(lines)
        self.registry = registry
        self.strict = strict
        self.line_no = 0
        self.malformed_count = 0
        self._latest = np.zeros(len(registry), dtype=np.float64)
        self._seen_ever = np.zeros(len(registry), dtype=bool)
        self.staleness = np.zeros(len(registry), dtype=np.int64)

    def next_column(self) -> Optional[np.ndarray]:
        """Next complete round, or None at end-of-stream."""
        fresh = np.zeros(len(self.registry), dtype=bool)
        for raw in self._lines:
            self.line_no += 1
            line = raw.strip()
            if not line:
                continue
            try:
                sig, value = parse_record(line, self.registry)
            except (MalformedRecord, UnknownSignal, NonFiniteSample) as exc:
                if self.strict:
                    raise MalformedRecord(f"line {self.line_no}: {exc}") from exc
                self.malformed_count += 1
                continue
            self._latest[sig.index] = value
            self._seen_ever[sig.index] = True
            fresh[sig.index] = True
            if fresh.all():
                self.staleness[:] = 0
                return self._latest.copy()
        return None


class RealtimeStreamSource:
    """Live source: a reader thread tracks the latest value per signal.

    ``poll()`` returns the current column with last-value-hold semantics and
    bumps a per-signal staleness counter when no fresh sample arrived since
    the previous poll.
    """

    def __init__(self, stream: IO[str], registry: SignalRegistry):
        self.registry = registry
        self._lock = threading.Lock()
        self._latest = np.zeros(len(registry), dtype=np.float64)
        self._fresh = np.zeros(len(registry), dtype=bool)
        self.staleness = np.zeros(len(registry), dtype=np.int64)
        self.malformed_count = 0
        self.eof = False
        self._thread = threading.Thread(
            target=self._reader, args=(stream,), daemon=True
        )
        self._thread.start()

    def _reader(self, stream: IO[str]) -> None:
        for raw in stream:
            line = raw.strip()
            if not line:
                continue
            try:
                sig, value = parse_record(line, self.registry)
            except (MalformedRecord, UnknownSignal, NonFiniteSample):
                with self._lock:
                    self.malformed_count += 1
                continue
            with self._lock:
                self._latest[sig.index] = value
                self._fresh[sig.index] = True
        with self._lock:
            self.eof = True

    def poll(self) -> np.ndarray:
        with self._lock:
            self.staleness[self._fresh] = 0
            self.staleness[~self._fresh] += 1
            self._fresh[:] = False
            return self._latest.copy()
