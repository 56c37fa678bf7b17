"""Command-line entry points.

Verbs: ``run`` (configured engine), ``demo`` (synthetic prototype defaults),
``replay`` (recorded stream file), ``bench`` (coherence benchmark CSV),
``validate-config``. Exit codes: 0 ok, 1 usage, 2 config, 3 runtime. Every
error path prints a single ``error[<kind>]: <message>`` line to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import signal
import sys
from pathlib import Path
from typing import Optional

from .config import EngineConfig, load_config
from .engine import Engine
from .errors import ConfigError, MalformedRecord, WavemuxError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # route through our exit-code policy
        raise UsageError(message)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_engine_flags(p: argparse.ArgumentParser, demo: bool = False) -> None:
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--m", type=int, default=None, help="signal count")
    p.add_argument("--n", type=int, default=None, help="window length (even)")
    p.add_argument("--seed", type=int, default=None, help="synthetic generator seed")
    p.add_argument("--tick-ms", type=float, default=None, dest="tick_ms", help="tick period in ms")
    p.add_argument("--theta-on", type=float, default=None, dest="theta_on")
    p.add_argument("--theta-off", type=float, default=None, dest="theta_off")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--budget", type=int, default=None, help="coherence pairs per cycle")
    p.add_argument("--interval", type=int, default=None, help="coherence refresh interval (ticks)")
    p.add_argument("--q", type=int, default=None, help="scale count")
    p.add_argument("--similarity-mode", choices=("magnitude", "complex"), default=None)
    p.add_argument("--snapshot-dir", default=None)
    p.add_argument("--snapshot-interval", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static-dir", default=None, help="serve dashboard assets from this directory")
    p.add_argument("--no-server", action="store_true", help="run headless (no HTTP listener)")
    p.add_argument("--max-ticks", type=int, default=None, help="stop after this many ticks")
    p.add_argument("--duration-s", type=float, default=None, help="stop after this many seconds")
    p.add_argument("--max-rate", action="store_true", help="run as fast as possible (no tick sleeping)")
    p.add_argument("--log-events", default=None, help="append 'event<TAB>json' lines to this file")
    if demo:
        p.add_argument("--record", default=None, help="record generated samples as NDJSON")


def _overrides_from_args(args: argparse.Namespace) -> dict:
    mapping = {
        "m": args.m,
        "n": args.n,
        "seed": args.seed,
        "tick_period_ms": args.tick_ms,
        "theta_on": args.theta_on,
        "theta_off": args.theta_off,
        "alpha": args.alpha,
        "coherence_budget": args.budget,
        "coherence_interval": args.interval,
        "q": args.q,
        "similarity_mode": args.similarity_mode,
        "snapshot_dir": args.snapshot_dir,
        "snapshot_interval": args.snapshot_interval,
        "host": args.host,
        "port": args.port,
        "static_dir": args.static_dir,
    }
    return {k: v for k, v in mapping.items() if v is not None}


def _build_parser() -> _Parser:
    parser = _Parser(prog="wavemux", description="Streaming spectral-similarity and wavelet-coherence engine")
    sub = parser.add_subparsers(dest="verb", required=True)

    demo = sub.add_parser("demo", help="run the synthetic 8-signal prototype")
    _add_engine_flags(demo, demo=True)

    run = sub.add_parser("run", help="run against a configured source")
    _add_engine_flags(run)
    run.add_argument("--source", default=None, help="synth | stdin | tcp://host:port")

    replay = sub.add_parser("replay", help="feed a recorded NDJSON file through the engine")
    replay.add_argument("file", help="NDJSON records file")
    _add_engine_flags(replay)
    replay.add_argument("--realtime", action="store_true", help="pace replay at the tick period")

    bench = sub.add_parser("bench", help="benchmark the coherence path")
    bench.add_argument("--n", type=_int_list, default=[1024, 1025, 2048, 2049, 4096, 8192],
                       dest="n_list", help="comma-separated window lengths")
    bench.add_argument("--q", type=_int_list, default=[32], dest="q_list",
                       help="comma-separated scale counts")
    bench.add_argument("--reps", type=_positive_int, default=5)
    bench.add_argument("--fs", type=float, default=8000.0)
    bench.add_argument("--fmin", type=float, default=None)
    bench.add_argument("--fmax", type=float, default=None)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None, help="CSV path (default stdout)")

    vc = sub.add_parser("validate-config", help="check a config file and exit")
    vc.add_argument("file")
    return parser


def _load_engine_config(args: argparse.Namespace, extra: Optional[dict] = None) -> EngineConfig:
    overrides = _overrides_from_args(args)
    if extra:
        overrides.update(extra)
    return load_config(path=args.config, overrides=overrides)


@contextlib.contextmanager
def _event_log(path: Optional[str]):
    if path is None:
        yield None
        return
    with open(path, "w") as fh:
        yield lambda event, data: fh.write(f"{event}\t{data}\n")


def _serve_and_run(engine: Engine, args: argparse.Namespace) -> int:
    from .server import EngineServer  # late import keeps headless paths light

    server = None
    if not args.no_server:
        server = EngineServer(engine)
        server.start()
        print(f"serving events at {server.url}/events (dashboard at {server.url}/)")
    realtime = not args.max_rate
    try:
        if args.max_ticks is None and args.duration_s is None and realtime:
            signal.signal(signal.SIGINT, lambda *_: setattr(engine, "_stop", True))
        summary = engine.run(
            max_ticks=args.max_ticks,
            duration_s=args.duration_s,
            realtime=realtime,
        )
        print(
            f"ran {summary.ticks} ticks ({summary.warm_ticks} warm), "
            f"{summary.missed} missed deadlines, "
            f"mean stage time {summary.mean_stage_seconds * 1e3:.3f} ms"
        )
    finally:
        if server is not None:
            server.stop()
        engine.close()
    return 0


def _cmd_demo(args: argparse.Namespace) -> int:
    cfg = _load_engine_config(args, extra={"source": "synth"})
    record_cm = open(args.record, "w") if getattr(args, "record", None) else contextlib.nullcontext()
    with record_cm as record_stream, _event_log(args.log_events) as sink:
        engine = Engine(cfg, sinks=(sink,) if sink else (), record_stream=record_stream)
        return _serve_and_run(engine, args)


def _cmd_run(args: argparse.Namespace) -> int:
    extra = {}
    if args.source is not None:
        extra["source"] = args.source
    cfg = _load_engine_config(args, extra=extra)
    with _event_log(args.log_events) as sink:
        engine = Engine(cfg, sinks=(sink,) if sink else ())
        if cfg.source == "synth":
            pass
        elif cfg.source == "stdin":
            from .ingest import RealtimeStreamSource
            engine.attach_realtime_stream(RealtimeStreamSource(sys.stdin, engine.registry))
        elif cfg.source.startswith("tcp://"):
            import socket

            hostport = cfg.source[len("tcp://"):]
            host, _, port = hostport.rpartition(":")
            try:
                conn = socket.create_connection((host or "127.0.0.1", int(port)), timeout=10)
            except (OSError, ValueError) as exc:
                raise WavemuxError(f"cannot connect to {cfg.source}: {exc}") from None
            from .ingest import RealtimeStreamSource
            engine.attach_realtime_stream(
                RealtimeStreamSource(conn.makefile("r", encoding="utf-8"), engine.registry)
            )
        else:
            raise ConfigError(f"unknown source {cfg.source!r}")
        return _serve_and_run(engine, args)


def _cmd_replay(args: argparse.Namespace) -> int:
    cfg = _load_engine_config(args, extra={"source": "synth"})
    path = Path(args.file)
    if not path.is_file():
        raise WavemuxError(f"replay file not found: {path}")
    from .ingest import LockstepStreamSource

    with open(path) as fh, _event_log(args.log_events) as sink:
        engine = Engine(cfg, sinks=(sink,) if sink else ())
        engine._synth = None
        engine.attach_lockstep(LockstepStreamSource(fh, engine.registry, strict=True))
        args.max_rate = not args.realtime
        code = _serve_and_run(engine, args)
        if not engine.bank.warm:
            print(
                f"warning: stream ended before warm-up "
                f"({engine.bank.filled}/{cfg.n} samples buffered)",
                file=sys.stderr,
            )
        return code


def _cmd_bench(args: argparse.Namespace) -> int:
    from . import bench

    fmin = args.fmin if args.fmin is not None else bench.DEFAULT_FMIN
    fmax = args.fmax if args.fmax is not None else bench.DEFAULT_FMAX
    rows = bench.benchmark_coherence(
        args.n_list, args.q_list, args.reps,
        sample_rate_hz=args.fs, fmin_hz=fmin, fmax_hz=fmax, seed=args.seed,
    )
    if args.out:
        bench.write_csv_path(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        bench.write_csv(rows, sys.stdout)
    return 0


def _cmd_validate_config(args: argparse.Namespace) -> int:
    load_config(path=args.file)
    print(f"{args.file}: ok")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 1
    try:
        if args.verb == "demo":
            return _cmd_demo(args)
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "replay":
            return _cmd_replay(args)
        if args.verb == "bench":
            return _cmd_bench(args)
        if args.verb == "validate-config":
            return _cmd_validate_config(args)
        raise UsageError(f"unknown verb {args.verb!r}")
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    except MalformedRecord as exc:
        print(f"error[runtime]: {exc}", file=sys.stderr)
        return 3
    except WavemuxError as exc:
        print(f"error[runtime]: {exc}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        return 0


if __name__ == "__main__":
    sys.exit(main())
