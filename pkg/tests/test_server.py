"""HTTP surface: SSE stream, control, snapshot, health, backpressure."""

import json
import threading
import time

import httpx
import pytest

from wavemux import snapshots
from wavemux.config import EngineConfig
from wavemux.engine import Engine
from wavemux.server import EngineServer, Publisher


@pytest.fixture
def live_server():
    cfg = EngineConfig(m=4, n=64, q=8, tick_period_ms=5.0, sample_rate_hz=100.0,
                       seed=4, theta_on=0.6, theta_off=0.5, port=0)
    engine = Engine(cfg)
    server = EngineServer(engine)
    server.start()
    thread = threading.Thread(
        target=engine.run, kwargs=dict(max_ticks=4000, realtime=True), daemon=True
    )
    thread.start()
    deadline = time.time() + 5.0
    while not engine.bank.warm and time.time() < deadline:
        time.sleep(0.01)
    assert engine.bank.warm, "engine failed to warm up in time"
    yield engine, server
    engine._stop = True
    thread.join(timeout=5.0)
    server.stop()
    engine.close()


def sse_events(url: str, want: int, timeout: float = 10.0) -> list[tuple[str, dict]]:
    """Read the first ``want`` events from an SSE stream."""
    out: list[tuple[str, dict]] = []
    with httpx.stream("GET", url, timeout=timeout) as response:
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/event-stream")
        event = None
        for line in response.iter_lines():
            if line.startswith("event: "):
                event = line[len("event: "):]
            elif line.startswith("data: ") and event is not None:
                out.append((event, json.loads(line[len("data: "):])))
                if len(out) >= want:
                    break
    return out


class TestEndpoints:
    def test_healthz(self, live_server):
        engine, server = live_server
        r = httpx.get(f"{server.url}/healthz", timeout=5.0)
        body = r.json()
        assert r.status_code == 200
        assert body["status"] == "ok" and body["warm"] is True
        assert body["m"] == 4 and body["n"] == 64

    def test_events_stream_monotone_ticks(self, live_server):
        engine, server = live_server
        events = sse_events(f"{server.url}/events", want=40)
        names = {e for e, _ in events}
        assert {"signals", "spectra", "graph", "tick"} <= names
        ticks = [d["tick"] for e, d in events if e == "tick"]
        assert ticks == sorted(ticks)
        assert all(b - a == 1 for a, b in zip(ticks, ticks[1:]))

    def test_connect_burst_replays_latest(self, live_server):
        engine, server = live_server
        events = sse_events(f"{server.url}/events", want=4)
        assert {e for e, _ in events[:4]} >= {"signals", "spectra", "graph"}

    def test_control_round_trip(self, live_server):
        engine, server = live_server
        r = httpx.post(
            f"{server.url}/control",
            json={"cmd": "set_threshold", "theta_on": 0.97, "theta_off": 0.87},
            timeout=5.0,
        )
        assert r.status_code == 200 and r.json()["ok"] is True
        deadline = time.time() + 3.0
        applied = False
        while time.time() < deadline and not applied:
            events = sse_events(f"{server.url}/events", want=6)
            graphs = [d for e, d in events if e == "graph"]
            applied = any(g["theta_on"] == 0.97 for g in graphs)
        assert applied

    def test_control_validation_errors(self, live_server):
        engine, server = live_server
        bad = [
            {"cmd": "set_threshold", "theta_on": 0.5, "theta_off": 0.9},
            {"cmd": "pin_pair", "pair": ["A", "Z"]},
            {"cmd": "bogus"},
        ]
        for cmd in bad:
            r = httpx.post(f"{server.url}/control", json=cmd, timeout=5.0)
            assert r.status_code == 400
            assert r.json()["ok"] is False
        r = httpx.post(f"{server.url}/control", content=b"{not json", timeout=5.0,
                       headers={"Content-Type": "application/json"})
        assert r.status_code == 400

    def test_snapshot_endpoint(self, live_server):
        engine, server = live_server
        r = httpx.get(f"{server.url}/snapshot", timeout=5.0)
        assert r.status_code == 200
        assert r.content[:4] == b"CMX1"
        snap = snapshots.from_bytes(r.content)
        assert snap.labels == ("A", "B", "C", "D")

    def test_root_without_static_dir(self, live_server):
        engine, server = live_server
        r = httpx.get(f"{server.url}/", timeout=5.0)
        assert r.status_code == 200
        assert "/events" in r.json()["endpoints"]

    def test_static_dir_serving(self, tmp_path):
        (tmp_path / "index.html").write_text("<html>dash</html>")
        cfg = EngineConfig(m=4, n=64, q=8, port=0, static_dir=str(tmp_path))
        engine = Engine(cfg)
        server = EngineServer(engine)
        server.start()
        try:
            r = httpx.get(f"{server.url}/", timeout=5.0)
            assert r.status_code == 200 and "dash" in r.text
            assert "text/html" in r.headers["content-type"]
            r2 = httpx.get(f"{server.url}/../etc/passwd", timeout=5.0)
            assert r2.status_code == 404
            r3 = httpx.get(f"{server.url}/missing.js", timeout=5.0)
            assert r3.status_code == 404
        finally:
            server.stop()
            engine.close()


class TestPublisherBackpressure:
    def test_overflow_disconnects_stalled_subscriber(self):
        pub = Publisher(queue_depth=16)
        sid, q = pub.subscribe()
        assert pub.subscriber_count == 1
        for k in range(20):
            pub.publish("tick", json.dumps({"tick": k}))
        assert pub.disconnects == 1
        assert pub.subscriber_count == 0
        # drained entries end with the disconnect pill
        items = []
        while not q.empty():
            items.append(q.get_nowait())
        assert items[-1][1] is not None or items[-1][0] is None

    def test_publish_never_blocks_on_dead_queue(self):
        pub = Publisher(queue_depth=8)
        pub.subscribe()
        t0 = time.perf_counter()
        for k in range(2000):
            pub.publish("tick", "{}")
        elapsed = time.perf_counter() - t0
        assert elapsed < 0.5  # pure queue ops, no waiting on consumers

    def test_healthy_subscriber_keeps_all_events(self):
        pub = Publisher(queue_depth=64)
        sid, q = pub.subscribe()
        for k in range(50):
            pub.publish("tick", str(k))
            event, data = q.get_nowait()
            assert data == str(k)
        assert pub.subscriber_count == 1
