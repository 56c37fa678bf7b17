"""Per-tick pipeline orchestration.

Each tick: drain control commands, harvest coherence jobs dispatched on the
previous tick, append one sample per signal, then (once warm) transform all
rows, rebuild the similarity matrix, re-gate the sparse layer, dispatch new
coherence jobs, and publish events. Coherence runs on a bounded worker pool
and is joined at the start of the next tick, which keeps the event log a
pure function of (config, seed) while the tick loop itself never waits on
a job it just started.

A failed stage is contained: the tick finishes with the previous tick's
product for that stage and an anomaly counter records the failure.
"""

from __future__ import annotations

import base64
import json
import math
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from threading import Lock
from typing import Callable, IO, Optional, Sequence

import numpy as np

from . import coherence as coh
from . import graph as graphmod
from . import ingest, snapshots, spectral, wavelet
from .config import EngineConfig
from .errors import (
    EdgeNotAdmitted,
    InvalidCommand,
    NonFiniteSample,
    UnknownPair,
    WavemuxError,
)

EventSink = Callable[[str, str], None]

STAGES = ("buffering", "fft", "similarity", "gating", "dispatch")


@dataclass
class TickReport:
    tick: int
    timings: dict[str, float] = field(default_factory=dict)
    deadline_missed: bool = False
    anomalies: dict[str, int] = field(default_factory=dict)
    warm: bool = True

    @property
    def total(self) -> float:
        return sum(self.timings.values())

    def payload(self) -> dict:
        return {
            "tick": self.tick,
            "warm": self.warm,
            "timings_us": {k: round(v * 1e6, 1) for k, v in self.timings.items()},
            "deadline_missed": self.deadline_missed,
            "anomalies": self.anomalies,
        }


@dataclass(frozen=True)
class RunSummary:
    ticks: int
    warm_ticks: int
    missed: int
    mean_stage_seconds: float
    anomaly_totals: dict[str, int]


def _b64_f32(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def _b64_u8(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype=np.uint8).tobytes()).decode("ascii")


def _round6(arr: np.ndarray) -> list:
    return np.round(arr, 6).tolist()


class _CoherenceResult:
    __slots__ = ("pair", "field", "summary", "dispatched_at", "error", "attached")

    def __init__(self, pair, field_, summary, dispatched_at, error=None):
        self.pair = pair
        self.field = field_
        self.summary = summary
        self.dispatched_at = dispatched_at
        self.error = error
        self.attached = False


class Engine:
    """Single-writer tick driver; see module docstring for the tick order."""

    def __init__(
        self,
        config: EngineConfig,
        sinks: Sequence[EventSink] = (),
        record_stream: Optional[IO[str]] = None,
    ):
        self.config = config.validate()
        cfg = self.config
        self.labels = ingest.default_labels(cfg.m)
        self.registry = ingest.SignalRegistry(self.labels)
        self.bank = ingest.BufferBank(cfg.m, cfg.n, self.labels)
        self.graph = graphmod.MultiplexGraph(self.labels)
        self.workspace = spectral.SpectralWorkspace(cfg.m, cfg.n, window=cfg.window)
        self.grid = wavelet.build_scale_grid(
            cfg.grid_fmin(), cfg.grid_fmax(), cfg.q, cfg.sample_rate_hz,
            wavelet.MorletParams(omega0=cfg.omega0),
        )
        self.transform = wavelet.MorletTransform(self.grid)
        self.smoothing = coh.SmoothingSpec(
            time_sigma_scales=cfg.time_smoothing,
            scale_octaves=cfg.scale_smoothing_octaves,
        )

        self._sinks: list[EventSink] = list(sinks)
        self._record = record_stream
        self._synth: Optional[ingest.SynthStream] = None
        self._lockstep: Optional[ingest.LockstepStreamSource] = None
        self._realtime_src: Optional[ingest.RealtimeStreamSource] = None
        if cfg.source == "synth":
            spec = ingest.SynthSpec.random(
                cfg.m,
                seed=cfg.seed,
                sample_rate_hz=cfg.sample_rate_hz,
                components_per_signal=cfg.components_per_signal,
                event_lanes=cfg.event_lanes,
                event_duration=(cfg.event_min_duration, cfg.event_max_duration),
                event_gap=(0, cfg.event_max_gap),
            )
            self._synth = ingest.SynthStream(spec)

        # mutable control state (folded from the command queue at tick start)
        self.theta_on = cfg.theta_on
        self.theta_off = cfg.theta_off
        self.alpha = cfg.alpha
        self.mode = spectral.SimilarityMode(cfg.similarity_mode)
        self.paused = False
        self.pinned: set[graphmod.Pair] = set()
        self._commands: list[dict] = []
        self._control_lock = Lock()

        self._executor = ThreadPoolExecutor(max_workers=max(1, cfg.coherence_budget))
        self._inflight: list[tuple[graphmod.Pair, int, Future]] = []
        self._pair_recency: dict[graphmod.Pair, int] = {}

        self._graph_lock = Lock()
        self.tick = -1
        self.reports: list[TickReport] = []
        self.anomaly_totals: dict[str, int] = {}
        self._last_bins: Optional[np.ndarray] = None
        self._last_mags: Optional[np.ndarray] = None
        self._last_similarity: Optional[spectral.SimilarityMatrix] = None
        self._stop = False

    # --- sources ---

    def attach_lockstep(self, source: ingest.LockstepStreamSource) -> None:
        self._lockstep = source

    def attach_realtime_stream(self, source: ingest.RealtimeStreamSource) -> None:
        self._realtime_src = source

    def add_sink(self, sink: EventSink) -> None:
        self._sinks.append(sink)

    def _next_column(self, tick: int) -> Optional[np.ndarray]:
        if self._synth is not None:
            return self._synth.column(tick)
        if self._lockstep is not None:
            return self._lockstep.next_column()
        if self._realtime_src is not None:
            return self._realtime_src.poll()
        raise WavemuxError("engine has no sample source attached")

    def _staleness(self) -> Optional[np.ndarray]:
        if self._lockstep is not None:
            return self._lockstep.staleness
        if self._realtime_src is not None:
            return self._realtime_src.staleness
        return None

    # --- control ---

    def submit_control(self, cmd: dict) -> dict:
        """Validate and enqueue one command; applied at the next tick start."""
        applied = self._validate_command(cmd)
        with self._control_lock:
            self._commands.append(applied)
        return {"ok": True, "cmd": applied["cmd"], "effective_next_tick": self.tick + 1}

    def _validate_command(self, cmd: dict) -> dict:
        if not isinstance(cmd, dict) or "cmd" not in cmd:
            raise InvalidCommand("command must be an object with a 'cmd' field")
        verb = cmd["cmd"]
        if verb == "set_threshold":
            try:
                on, off = float(cmd["theta_on"]), float(cmd["theta_off"])
            except (KeyError, TypeError, ValueError):
                raise InvalidCommand("set_threshold needs numeric theta_on and theta_off") from None
            if not (0.0 <= off <= on):
                raise InvalidCommand(f"need 0 <= theta_off <= theta_on, got {off}, {on}")
            return {"cmd": verb, "theta_on": on, "theta_off": off}
        if verb in ("pin_pair", "unpin_pair"):
            pair = cmd.get("pair")
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise InvalidCommand(f"{verb} needs a two-label 'pair'")
            try:
                a, b = (self.registry.lookup(str(p)).index for p in pair)
            except WavemuxError:
                raise UnknownPair(f"unknown pair {pair}") from None
            if a == b:
                raise UnknownPair("a pair needs two distinct signals")
            return {"cmd": verb, "pair_idx": graphmod.ordered_pair(a, b)}
        if verb == "set_similarity_mode":
            mode = cmd.get("mode")
            if mode not in ("magnitude", "complex"):
                raise InvalidCommand(f"mode must be magnitude or complex, got {mode!r}")
            return {"cmd": verb, "mode": mode}
        if verb in ("pause", "resume"):
            return {"cmd": verb}
        raise InvalidCommand(f"unknown command {verb!r}")

    def _apply_command(self, cmd: dict) -> None:
        verb = cmd["cmd"]
        if verb == "set_threshold":
            self.theta_on, self.theta_off = cmd["theta_on"], cmd["theta_off"]
        elif verb == "pin_pair":
            self.pinned.add(cmd["pair_idx"])
        elif verb == "unpin_pair":
            self.pinned.discard(cmd["pair_idx"])
        elif verb == "set_similarity_mode":
            self.mode = spectral.SimilarityMode(cmd["mode"])
        elif verb == "pause":
            self.paused = True
        elif verb == "resume":
            self.paused = False

    # --- coherence jobs ---

    def _job(self, rows: np.ndarray, pair: graphmod.Pair, dispatched_at: int) -> _CoherenceResult:
        try:
            la, lb = self.graph.label_pair(pair)
            wi = self.transform.transform(rows[0], source=la)
            wj = self.transform.transform(rows[1], source=lb)
            field_ = coh.wavelet_coherence(wi, wj, self.smoothing, pair=(la, lb))
            summary = field_.coherence.mean(axis=0)
            return _CoherenceResult(pair, field_, summary, dispatched_at)
        except Exception as exc:  # contained: reported as an anomaly
            return _CoherenceResult(pair, None, None, dispatched_at, error=exc)

    def _harvest(self, tick: int, anomalies: dict[str, int]) -> list[_CoherenceResult]:
        done: list[_CoherenceResult] = []
        for pair, dispatched_at, future in self._inflight:
            result = future.result()
            if result.error is not None:
                anomalies["coherence_failures"] = anomalies.get("coherence_failures", 0) + 1
                continue
            with self._graph_lock:
                try:
                    self.graph.attach_coherence(pair, result.field, tick)
                    result.attached = True
                except EdgeNotAdmitted:
                    anomalies["dropped_payloads"] = anomalies.get("dropped_payloads", 0) + 1
                    result.attached = False
            done.append(result)
        self._inflight = []
        return done

    # --- the tick ---

    def tick_once(self, prefetched: Optional[np.ndarray] = None) -> TickReport:
        """One pipeline pass. Lockstep callers prefetch the column so that
        end-of-stream is detected before a tick starts, not mid-tick."""
        self.tick += 1
        tick = self.tick
        cfg = self.config
        anomalies: dict[str, int] = {}
        timings = dict.fromkeys(STAGES, 0.0)

        with self._control_lock:
            commands, self._commands = self._commands, []
        for cmd in commands:
            self._apply_command(cmd)

        harvested = self._harvest(tick, anomalies)

        # stage 1: buffering
        t0 = time.perf_counter()
        data: Optional[ingest.DataMatrix] = None
        if not self.paused:
            try:
                column = prefetched if prefetched is not None else self._next_column(tick)
            except NonFiniteSample:
                column = None
                anomalies["bad_samples"] = anomalies.get("bad_samples", 0) + 1
            if column is None:
                if self._lockstep is not None:
                    self._stop = True  # end of stream
            else:
                self.bank.push_column(column)
                if self._record is not None:
                    for lab, v in zip(self.labels, column):
                        self._record.write(json.dumps({"id": lab, "v": float(v)}, separators=(",", ":")) + "\n")
        if self.bank.warm:
            data = self.bank.snapshot(tick)
        timings["buffering"] = time.perf_counter() - t0

        if data is None:
            report = TickReport(tick=tick, timings=timings, anomalies=anomalies, warm=False)
            self.reports.append(report)
            self._tally(anomalies)
            return report

        # stage 2+3: transform and magnitudes
        t0 = time.perf_counter()
        try:
            bins, mags = self.workspace.transform(data.values)
            self._last_bins, self._last_mags = bins, mags
        except Exception:
            anomalies["stage_failures"] = anomalies.get("stage_failures", 0) + 1
            bins, mags = self._last_bins, self._last_mags
        timings["fft"] = time.perf_counter() - t0

        # stage 4: pairwise similarity
        t0 = time.perf_counter()
        sim = self._last_similarity
        if bins is not None:
            try:
                stack = mags if self.mode is spectral.SimilarityMode.MAGNITUDE else bins
                sim = spectral.similarity_matrix(stack, self.mode, exclude_dc=cfg.exclude_dc)
                self._last_similarity = sim
                if sim.clamp_excess > spectral.CLAMP_ANOMALY:
                    anomalies["clamp_excess"] = anomalies.get("clamp_excess", 0) + 1
                nz = int(np.count_nonzero(sim.zero_signals))
                if nz:
                    anomalies["zero_signals"] = nz
            except Exception:
                anomalies["stage_failures"] = anomalies.get("stage_failures", 0) + 1
        timings["similarity"] = time.perf_counter() - t0

        # stage 5: gating
        t0 = time.perf_counter()
        events = graphmod.GateEvents((), ())
        if sim is not None:
            try:
                with self._graph_lock:
                    self.graph.update_layer1(sim.values)
                    events = self.graph.gate_layer2(self.theta_on, self.theta_off, self.alpha, tick)
            except Exception:
                anomalies["stage_failures"] = anomalies.get("stage_failures", 0) + 1
        timings["gating"] = time.perf_counter() - t0

        # stages 6+7: select pairs and dispatch transform+coherence jobs
        t0 = time.perf_counter()
        if data is not None:
            try:
                pairs = self.graph.select_coherence_pairs(
                    budget=cfg.coherence_budget,
                    interval=cfg.coherence_interval,
                    tick=tick,
                    pinned=self.pinned,
                    pinned_recency=self._pair_recency,
                )
                for pair in pairs:
                    rows = data.values[list(pair)]
                    self._pair_recency[pair] = tick
                    edge = self.graph.edges.get(pair)
                    if edge is not None:
                        edge.last_coherence_at = tick
                    self._inflight.append((pair, tick, self._executor.submit(self._job, rows, pair, tick)))
            except Exception:
                anomalies["stage_failures"] = anomalies.get("stage_failures", 0) + 1
        timings["dispatch"] = time.perf_counter() - t0

        if cfg.snapshot_dir and tick > 0 and tick % cfg.snapshot_interval == 0:
            try:
                snapshots.write_snapshot(self.build_snapshot(data), cfg.snapshot_dir)
            except OSError:
                anomalies["snapshot_failures"] = anomalies.get("snapshot_failures", 0) + 1

        report = TickReport(
            tick=tick,
            timings=timings,
            deadline_missed=sum(timings.values()) > cfg.tick_period_s,
            anomalies=anomalies,
        )
        self.reports.append(report)
        self._tally(anomalies)

        self._publish(tick, data, mags, sim, events, harvested, report)
        return report

    def _tally(self, anomalies: dict[str, int]) -> None:
        for k, v in anomalies.items():
            self.anomaly_totals[k] = self.anomaly_totals.get(k, 0) + v

    # --- events ---

    def _emit(self, name: str, payload: dict) -> None:
        data = json.dumps(payload, separators=(",", ":"))
        for sink in self._sinks:
            sink(name, data)

    def _publish(
        self,
        tick: int,
        data: ingest.DataMatrix,
        mags: Optional[np.ndarray],
        sim: Optional[spectral.SimilarityMatrix],
        events: graphmod.GateEvents,
        harvested: list[_CoherenceResult],
        report: TickReport,
    ) -> None:
        if not self._sinks:
            return
        stride = max(1, math.ceil(self.config.n / 128))
        staleness = self._staleness()
        self._emit("signals", {
            "tick": tick,
            "labels": list(self.labels),
            "stride": stride,
            "window": [_round6(row[::stride]) for row in data.values],
            "staleness": staleness.tolist() if staleness is not None else [0] * self.config.m,
        })
        if mags is not None:
            freqs = np.fft.rfftfreq(self.config.n, d=1.0 / self.config.sample_rate_hz)
            self._emit("spectra", {
                "tick": tick,
                "labels": list(self.labels),
                "freq_hz": _round6(freqs),
                "magnitudes": [_round6(row) for row in mags],
            })
        if sim is not None:
            iu = np.triu_indices(self.config.m, k=1)
            layer1 = [
                [int(i), int(j), float(self.graph.layer1[i, j])]
                for i, j in zip(*iu)
            ]
            layer2 = [
                [e.pair[0], e.pair[1], e.ema,
                 -1 if e.last_coherence_at is None else e.last_coherence_at]
                for e in (self.graph.edges[p] for p in self.graph.layer2_pairs)
            ]
            self._emit("graph", {
                "tick": tick,
                "nodes": list(self.labels),
                "theta_on": self.theta_on,
                "theta_off": self.theta_off,
                "alpha": self.alpha,
                "mode": self.mode.value,
                "paused": self.paused,
                "pinned": sorted(list(p) for p in self.pinned),
                "layer1": layer1,
                "layer2": layer2,
                "admitted": [list(p) for p in events.admissions],
                "evicted": [list(p) for p in events.evictions],
            })
        for result in harvested:
            f = result.field
            self._emit("coherence", {
                "tick": tick,
                "computed_at": result.dispatched_at,
                "pair": list(f.pair),
                "attached": bool(getattr(result, "attached", False)),
                "q": f.q,
                "n": f.n,
                "frequencies_hz": _round6(f.grid.frequencies_hz),
                "scales": _round6(f.grid.scales),
                "coherence_b64": _b64_f32(f.coherence),
                "phase_b64": _b64_f32(f.phase),
                "boundary_b64": _b64_u8(f.boundary_flags),
                "band_mean": _round6(result.summary),
                "underflow_cells": f.underflow_cells,
            })
        self._emit("tick", report.payload())

    # --- snapshots ---

    def build_snapshot(self, data: Optional[ingest.DataMatrix] = None) -> snapshots.Snapshot:
        with self._graph_lock:
            edges = []
            for pair in self.graph.layer2_pairs:
                e = self.graph.edges[pair]
                summary = None
                if e.coherence is not None:
                    summary = e.coherence.coherence.mean(axis=0)
                edges.append(snapshots.SnapshotEdge(
                    i=pair[0], j=pair[1], ema=e.ema, admitted_at=e.admitted_at,
                    last_coherence_at=e.last_coherence_at, summary=summary,
                ))
            digest = snapshots.data_digest(data.values) if data is not None else b""
            return snapshots.Snapshot(
                tick=max(self.tick, 0),
                digest=digest,
                labels=self.labels,
                similarity=self.graph.layer1.copy(),
                edges=tuple(edges),
            )

    def latest_snapshot_bytes(self) -> bytes:
        data = self.bank.snapshot(self.tick) if self.bank.warm else None
        return snapshots.to_bytes(self.build_snapshot(data))

    # --- run loops ---

    def run(
        self,
        max_ticks: Optional[int] = None,
        duration_s: Optional[float] = None,
        realtime: bool = False,
    ) -> RunSummary:
        """Drive ticks until a limit is reached or the stream ends."""
        period = self.config.tick_period_s
        start = time.monotonic()
        executed = 0
        self._stop = False
        next_deadline = start
        while not self._stop:
            if max_ticks is not None and executed >= max_ticks:
                break
            if duration_s is not None and time.monotonic() - start >= duration_s:
                break
            prefetched = None
            if self._lockstep is not None and not self.paused:
                prefetched = self._lockstep.next_column()
                if prefetched is None:
                    break
            self.tick_once(prefetched)
            executed += 1
            if realtime:
                next_deadline += period
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                elif delay < -1.0:  # fell far behind; re-anchor instead of spinning
                    next_deadline = time.monotonic()
        return self.summarize()

    def summarize(self) -> RunSummary:
        warm = [r for r in self.reports if r.warm]
        missed = sum(1 for r in warm if r.deadline_missed)
        mean_stage = float(np.mean([r.total for r in warm])) if warm else 0.0
        return RunSummary(
            ticks=len(self.reports),
            warm_ticks=len(warm),
            missed=missed,
            mean_stage_seconds=mean_stage,
            anomaly_totals=dict(self.anomaly_totals),
        )

    def close(self) -> None:
        self._executor.shutdown(wait=True)
