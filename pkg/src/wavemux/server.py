"""HTTP surface: server-sent events, control, snapshots, health, static files.

Fan-out uses one bounded queue per subscriber. A subscriber that stops
reading overflows its queue and is disconnected; the tick loop never blocks
on a slow client. The latest payload of each event type is cached and
replayed to new subscribers so panels populate immediately on connect.
"""

from __future__ import annotations

import json
import mimetypes
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .engine import Engine
from .errors import InvalidCommand, UnknownPair, WarmupIncomplete

_REPLAY_ORDER = ("signals", "spectra", "graph", "coherence", "tick")
_DISCONNECT = object()


class Publisher:
    """Bounded fan-out of serialized events to SSE subscribers."""

    def __init__(self, queue_depth: int = 64):
        self.queue_depth = queue_depth
        self._lock = threading.Lock()
        self._subscribers: dict[int, queue.Queue] = {}
        self._next_id = 0
        self._latest: dict[str, str] = {}
        self.disconnects = 0

    def publish(self, event: str, data: str) -> None:
        with self._lock:
            self._latest[event] = data
            dead = []
            for sid, q in self._subscribers.items():
                try:
                    q.put_nowait((event, data))
                except queue.Full:
                    dead.append(sid)
            for sid in dead:
                q = self._subscribers.pop(sid)
                self.disconnects += 1
                try:
                    q.put_nowait((None, _DISCONNECT))
                except queue.Full:
                    # drain one slot so the poison pill always fits
                    try:
                        q.get_nowait()
                    except queue.Empty:
                        pass
                    q.put_nowait((None, _DISCONNECT))

    def subscribe(self) -> tuple[int, queue.Queue]:
        # depth + 1 leaves room for the disconnect pill
        q: queue.Queue = queue.Queue(maxsize=self.queue_depth + 1)
        with self._lock:
            sid = self._next_id
            self._next_id += 1
            for event in _REPLAY_ORDER:
                if event in self._latest:
                    q.put_nowait((event, self._latest[event]))
            self._subscribers[sid] = q
        return sid, q

    def unsubscribe(self, sid: int) -> None:
        with self._lock:
            self._subscribers.pop(sid, None)

    @property
    def subscriber_count(self) -> int:
        with self._lock:
            return len(self._subscribers)


class EngineServer:
    """Binds an :class:`Engine` to an HTTP listener."""

    def __init__(self, engine: Engine, host: Optional[str] = None, port: Optional[int] = None):
        self.engine = engine
        cfg = engine.config
        self.publisher = Publisher(queue_depth=cfg.queue_depth)
        engine.add_sink(self.publisher.publish)
        self.static_dir = Path(cfg.static_dir) if cfg.static_dir else None

        outer = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"
            server_version = "wavemux"

            def log_message(self, fmt, *args):  # quiet by default
                pass

            def _cors(self):
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

            def _json(self, code: int, obj: dict):
                body = json.dumps(obj).encode()
                self.send_response(code)
                self._cors()
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_OPTIONS(self):
                self.send_response(204)
                self._cors()
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_GET(self):
                path = self.path.split("?", 1)[0]
                if path == "/events":
                    outer._serve_events(self)
                elif path == "/healthz":
                    self._json(200, outer._health())
                elif path == "/snapshot":
                    outer._serve_snapshot(self)
                else:
                    outer._serve_static(self, path)

            def do_POST(self):
                path = self.path.split("?", 1)[0]
                if path != "/control":
                    self._json(404, {"ok": False, "error": "not found"})
                    return
                try:
                    length = int(self.headers.get("Content-Length", "0"))
                    body = self.rfile.read(length)
                    cmd = json.loads(body)
                except (ValueError, json.JSONDecodeError) as exc:
                    self._json(400, {"ok": False, "error": f"bad request body: {exc}"})
                    return
                try:
                    ack = outer.engine.submit_control(cmd)
                except (InvalidCommand, UnknownPair) as exc:
                    self._json(400, {"ok": False, "error": str(exc)})
                    return
                self._json(200, ack)

        self._handler_cls = Handler
        self.httpd = ThreadingHTTPServer((host or cfg.host, port if port is not None else cfg.port), Handler)
        self.httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    # --- handlers ---

    def _health(self) -> dict:
        return {
            "status": "ok",
            "tick": self.engine.tick,
            "warm": self.engine.bank.warm,
            "subscribers": self.publisher.subscriber_count,
            "m": self.engine.config.m,
            "n": self.engine.config.n,
        }

    def _serve_events(self, handler: BaseHTTPRequestHandler) -> None:
        sid, q = self.publisher.subscribe()
        handler.send_response(200)
        handler.send_header("Content-Type", "text/event-stream")
        handler.send_header("Cache-Control", "no-cache")
        handler.send_header("Connection", "close")
        handler.send_header("Access-Control-Allow-Origin", "*")
        handler.end_headers()
        try:
            while True:
                try:
                    event, data = q.get(timeout=30.0)
                except queue.Empty:
                    handler.wfile.write(b": keepalive\n\n")
                    handler.wfile.flush()
                    continue
                if data is _DISCONNECT:
                    break
                handler.wfile.write(f"event: {event}\ndata: {data}\n\n".encode())
                handler.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            self.publisher.unsubscribe(sid)

    def _serve_snapshot(self, handler: BaseHTTPRequestHandler) -> None:
        try:
            blob = self.engine.latest_snapshot_bytes()
        except WarmupIncomplete as exc:
            body = json.dumps({"ok": False, "error": str(exc)}).encode()
            handler.send_response(409)
            handler.send_header("Content-Type", "application/json")
            handler.send_header("Content-Length", str(len(body)))
            handler.end_headers()
            handler.wfile.write(body)
            return
        handler.send_response(200)
        handler.send_header("Content-Type", "application/octet-stream")
        handler.send_header("Content-Length", str(len(blob)))
        handler.send_header("Access-Control-Allow-Origin", "*")
        handler.end_headers()
        handler.wfile.write(blob)

    def _serve_static(self, handler: BaseHTTPRequestHandler, path: str) -> None:
        if self.static_dir is None:
            body = json.dumps({
                "service": "wavemux",
                "endpoints": ["/events", "/control", "/snapshot", "/healthz"],
            }).encode()
            handler.send_response(200 if path == "/" else 404)
            handler.send_header("Content-Type", "application/json")
            handler.send_header("Content-Length", str(len(body)))
            handler.end_headers()
            handler.wfile.write(body)
            return
        rel = "index.html" if path == "/" else path.lstrip("/")
        target = (self.static_dir / rel).resolve()
        root = self.static_dir.resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            handler.send_response(404)
            handler.send_header("Content-Length", "0")
            handler.end_headers()
            return
        blob = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        handler.send_response(200)
        handler.send_header("Content-Type", ctype)
        handler.send_header("Content-Length", str(len(blob)))
        handler.end_headers()
        handler.wfile.write(blob)
