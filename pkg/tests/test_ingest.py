"""Buffering, synthetic generation, and stream record parsing."""

import io
import json
import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavemux import ingest
from wavemux.errors import (
    MalformedRecord,
    NonFiniteSample,
    NyquistViolation,
    UnknownSignal,
    WarmupIncomplete,
)


class TestRingBuffer:
    def test_push_into_empty(self):
        buf = ingest.RingBuffer(4)
        buf.push(1.0)
        assert buf.view().tolist() == [1.0]
        assert buf.filled == 1

    def test_push_evicts_oldest_when_full(self):
        buf = ingest.RingBuffer(4)
        for x in (1, 2, 3, 4):
            buf.push(float(x))
        buf.push(5.0)
        assert buf.view().tolist() == [2.0, 3.0, 4.0, 5.0]
        assert buf.filled == 4

    def test_ramp_matches_naive_shift_array(self):
        n = 16
        buf = ingest.RingBuffer(n)
        naive: list[float] = []
        for x in range(n + 3):
            buf.push(float(x))
            naive.append(float(x))
            del naive[:-n]
        assert buf.view().tolist() == naive

    def test_nonfinite_rejected_without_corruption(self):
        buf = ingest.RingBuffer(3)
        for x in (1.0, 2.0, 3.0):
            buf.push(x)
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(NonFiniteSample):
                buf.push(bad)
        assert buf.view().tolist() == [1.0, 2.0, 3.0]

    @given(
        st.integers(min_value=1, max_value=16),
        st.lists(st.floats(allow_nan=False, allow_infinity=False, width=32), max_size=64),
    )
    def test_equivalent_to_list_model(self, capacity, pushes):
        buf = ingest.RingBuffer(capacity)
        model: list[float] = []
        for x in pushes:
            buf.push(x)
            model.append(x)
            del model[:-capacity]
        assert buf.view().tolist() == model
        assert buf.filled == len(model)


class TestSnapshot:
    def test_two_buffers(self):
        bufs = [ingest.RingBuffer(4) for _ in range(2)]
        for x in (1, 2, 3, 4):
            bufs[0].push(float(x))
        for x in (5, 6, 7, 8):
            bufs[1].push(float(x))
        snap = ingest.snapshot(bufs)
        assert snap.values.tolist() == [[1, 2, 3, 4], [5, 6, 7, 8]]

    def test_snapshot_isolated_from_later_pushes(self):
        bufs = [ingest.RingBuffer(4) for _ in range(2)]
        for b in bufs:
            for x in range(4):
                b.push(float(x))
        snap = ingest.snapshot(bufs)
        before = snap.values.copy()
        bufs[0].push(99.0)
        assert np.array_equal(snap.values, before)
        with pytest.raises(ValueError):
            snap.values[0, 0] = -1.0  # snapshot is read-only

    def test_warmup_incomplete(self):
        bufs = [ingest.RingBuffer(4), ingest.RingBuffer(4)]
        bufs[0].push(1.0)
        with pytest.raises(WarmupIncomplete):
            ingest.snapshot(bufs)

    def test_bank_matches_independent_window_tracker(self):
        m, n = 8, 256
        spec = ingest.SynthSpec.random(m, seed=11)
        stream = ingest.SynthStream(spec)
        bank = ingest.BufferBank(m, n)
        windows = [[] for _ in range(m)]
        for tick in range(n + 57):
            col = stream.column(tick)
            bank.push_column(col)
            for i in range(m):
                windows[i].append(col[i])
                del windows[i][:-n]
        snap = bank.snapshot(tick)
        assert np.array_equal(snap.values, np.array(windows))

    def test_bank_warmup_and_nonfinite(self):
        bank = ingest.BufferBank(2, 4)
        with pytest.raises(WarmupIncomplete):
            bank.snapshot(0)
        with pytest.raises(NonFiniteSample):
            bank.push_column(np.array([1.0, np.nan]))
        assert bank.filled == 0


class TestSyntheticGenerator:
    def test_zero_frequency_is_constant(self):
        spec = ingest.SynthSpec(
            signals=((ingest.SineComponent(1.0, 0.0, math.pi / 2),),),
            shared_events=(),
            sample_rate_hz=100.0,
            seed=0,
        )
        for tick in (0, 1, 7, 1000):
            assert ingest.generate_tick(spec, tick)[0] == pytest.approx(1.0)

    def test_quarter_rate_cycles(self):
        fs = 100.0
        spec = ingest.SynthSpec(
            signals=((ingest.SineComponent(2.0, fs / 4.0, 0.0),),),
            shared_events=(),
            sample_rate_hz=fs,
            seed=0,
        )
        got = [ingest.generate_tick(spec, t)[0] for t in range(4)]
        assert got == pytest.approx([0.0, 2.0, 0.0, -2.0], abs=1e-12)

    def test_matches_closed_form_sum(self):
        spec = ingest.SynthSpec.random(8, seed=5)
        for tick in range(0, 256, 7):
            got = ingest.generate_tick(spec, tick)
            t = tick / spec.sample_rate_hz
            for i in range(8):
                expected = sum(
                    c.amplitude * math.sin(2 * math.pi * c.frequency_hz * t + c.phase_rad)
                    for c in spec.signals[i]
                )
                for ev in spec.shared_events:
                    if i in ev.pair and ev.start_tick <= tick < ev.start_tick + ev.duration_ticks:
                        c = ev.component
                        expected += c.amplitude * math.sin(
                            2 * math.pi * c.frequency_hz * t + c.phase_rad
                        )
                assert got[i] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_shared_events_hit_both_members(self):
        spec = ingest.SynthSpec.random(8, seed=3)
        assert spec.shared_events, "seeded spec should schedule events"
        ev = spec.shared_events[0]
        tick = ev.start_tick
        with_event = ingest.generate_tick(spec, tick)
        base = ingest.SynthSpec(
            signals=spec.signals, shared_events=(), sample_rate_hz=spec.sample_rate_hz,
            seed=spec.seed,
        )
        without = ingest.generate_tick(base, tick)
        changed = np.flatnonzero(~np.isclose(with_event, without))
        assert set(ev.pair) <= set(changed.tolist())

    def test_determinism(self):
        a = ingest.SynthSpec.random(8, seed=123)
        b = ingest.SynthSpec.random(8, seed=123)
        cols_a = np.stack([ingest.generate_tick(a, t) for t in range(300)])
        cols_b = np.stack([ingest.generate_tick(b, t) for t in range(300)])
        assert np.array_equal(cols_a, cols_b)

    def test_nyquist_rejected(self):
        with pytest.raises(NyquistViolation):
            ingest.SynthSpec(
                signals=((ingest.SineComponent(1.0, 50.0, 0.0),),),
                shared_events=(),
                sample_rate_hz=100.0,
                seed=0,
            )


class TestStreamRecords:
    @pytest.fixture
    def registry(self):
        return ingest.SignalRegistry(ingest.default_labels(8))

    def test_parse_valid(self, registry):
        sig, v = ingest.parse_record('{"id":"A","v":0.75}', registry)
        assert (sig.index, sig.label, v) == (0, "A", 0.75)

    def test_unknown_label(self, registry):
        with pytest.raises(UnknownSignal):
            ingest.parse_record('{"id":"Z","v":1.0}', registry)

    def test_nonfinite_value(self, registry):
        with pytest.raises(NonFiniteSample):
            ingest.parse_record('{"id":"A","v":1e999}', registry)

    @pytest.mark.parametrize("line", [
        "", "{", "[]", "null", '{"id":"A"}', '{"v":1.0}',
        '{"id":1,"v":1.0}', '{"id":"A","v":"x"}', '{"id":"A","v":true}',
    ])
    def test_malformed(self, registry, line):
        with pytest.raises(MalformedRecord):
            ingest.parse_record(line, registry)

    def test_fuzzed_truncations_never_crash(self, registry):
        valid = json.dumps({"id": "C", "v": -1.25})
        rng = np.random.default_rng(0)
        for _ in range(200):
            cut = int(rng.integers(0, len(valid)))
            mutated = valid[:cut] + ("x" if rng.random() < 0.5 else "")
            try:
                ingest.parse_record(mutated, registry)
            except (MalformedRecord, UnknownSignal, NonFiniteSample):
                pass

    def test_lockstep_rounds(self, registry):
        lines = []
        for tick in range(3):
            for i, lab in enumerate(ingest.default_labels(8)):
                lines.append(json.dumps({"id": lab, "v": tick * 10.0 + i}))
        src = ingest.LockstepStreamSource(iter(lines), registry)
        cols = []
        while (col := src.next_column()) is not None:
            cols.append(col)
        assert len(cols) == 3
        assert cols[1].tolist() == [10.0 + i for i in range(8)]

    def test_lockstep_strict_names_line(self, registry):
        lines = ['{"id":"A","v":1.0}', "garbage"]
        src = ingest.LockstepStreamSource(iter(lines), registry)
        with pytest.raises(MalformedRecord, match="line 2"):
            src.next_column()

    def test_lockstep_lenient_skips(self, registry):
        lines = []
        for lab in ingest.default_labels(8):
            lines.append(json.dumps({"id": lab, "v": 1.0}))
        lines.insert(3, "%%%")
        src = ingest.LockstepStreamSource(iter(lines), registry, strict=False)
        assert src.next_column() is not None
        assert src.malformed_count == 1

    def test_realtime_source_holds_last_value(self, registry):
        lines = io.StringIO('{"id":"A","v":2.5}\n{"id":"B","v":1.5}\n')
        src = ingest.RealtimeStreamSource(lines, registry)
        deadline = time.time() + 2.0
        while not src.eof and time.time() < deadline:
            time.sleep(0.01)
        col = src.poll()
        assert col[0] == 2.5 and col[1] == 1.5
        col2 = src.poll()
        assert col2[0] == 2.5  # held
        assert src.staleness[0] >= 1
