"""CLI verbs, exit codes, and the machine-parseable error prefix."""

import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "wavemux.cli"]


def run_cli(*args, timeout=120):
    return subprocess.run(
        CLI + list(args), capture_output=True, text=True, timeout=timeout
    )


def normalize_log(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        event, _, data = line.partition("\t")
        if event == "tick":
            obj = json.loads(data)
            obj.pop("timings_us", None)
            obj.pop("deadline_missed", None)
            data = json.dumps(obj, sort_keys=True)
        out.append(f"{event}\t{data}")
    return out


class TestExitCodes:
    def test_no_verb_is_usage_error(self):
        r = run_cli()
        assert r.returncode == 1
        assert r.stderr.startswith("error[usage]:")

    def test_unknown_verb(self):
        r = run_cli("explode")
        assert r.returncode == 1
        assert r.stderr.startswith("error[usage]:")

    def test_odd_window_rejected_as_config_error(self):
        r = run_cli("demo", "--n", "255", "--max-ticks", "1", "--no-server")
        assert r.returncode == 2
        assert r.stderr.startswith("error[config]:")
        assert len(r.stderr.strip().splitlines()) == 1

    def test_bench_zero_reps_is_usage_error(self):
        r = run_cli("bench", "--reps", "0")
        assert r.returncode == 1
        assert r.stderr.startswith("error[usage]:")

    def test_bench_bad_list_is_usage_error(self):
        r = run_cli("bench", "--n", "12,x")
        assert r.returncode == 1
        assert r.stderr.startswith("error[usage]:")

    def test_missing_replay_file_is_runtime_error(self):
        r = run_cli("replay", "/nonexistent.ndjson", "--no-server")
        assert r.returncode == 3
        assert r.stderr.startswith("error[runtime]:")


class TestDemo:
    def test_short_headless_run(self):
        r = run_cli("demo", "--max-ticks", "80", "--no-server", "--max-rate",
                    "--m", "4", "--n", "64", "--q", "8")
        assert r.returncode == 0
        assert "ran 80 ticks" in r.stdout

    def test_determinism_across_runs(self, tmp_path):
        logs = []
        for run in range(2):
            path = tmp_path / f"log{run}.tsv"
            r = run_cli(
                "demo", "--m", "3", "--seed", "7", "--n", "64", "--q", "8",
                "--max-ticks", "400", "--max-rate", "--no-server",
                "--theta-on", "0.6", "--theta-off", "0.5",
                "--log-events", str(path),
            )
            assert r.returncode == 0
            logs.append(normalize_log(path.read_text()))
        assert logs[0] and logs[0] == logs[1]


class TestReplay:
    def _record_session(self, tmp_path, ticks=150):
        rec = tmp_path / "session.ndjson"
        r = run_cli(
            "demo", "--m", "4", "--n", "64", "--q", "8", "--seed", "3",
            "--max-ticks", str(ticks), "--max-rate", "--no-server",
            "--record", str(rec),
        )
        assert r.returncode == 0
        return rec

    def test_replay_recorded_session(self, tmp_path):
        rec = self._record_session(tmp_path)
        r = run_cli("replay", str(rec), "--m", "4", "--n", "64", "--q", "8",
                    "--no-server")
        assert r.returncode == 0
        assert "ran 150 ticks" in r.stdout

    def test_replay_matches_live_final_products(self, tmp_path):
        rec = self._record_session(tmp_path, ticks=200)
        live_log = tmp_path / "live.tsv"
        r = run_cli(
            "demo", "--m", "4", "--n", "64", "--q", "8", "--seed", "3",
            "--max-ticks", "200", "--max-rate", "--no-server",
            "--theta-on", "0.6", "--theta-off", "0.5",
            "--log-events", str(live_log),
        )
        assert r.returncode == 0
        replay_log = tmp_path / "replay.tsv"
        r = run_cli(
            "replay", str(rec), "--m", "4", "--n", "64", "--q", "8",
            "--no-server", "--theta-on", "0.6", "--theta-off", "0.5",
            "--log-events", str(replay_log),
        )
        assert r.returncode == 0
        assert normalize_log(live_log.read_text()) == normalize_log(replay_log.read_text())

    def test_corrupt_line_names_line_number(self, tmp_path):
        rec = self._record_session(tmp_path, ticks=30)
        lines = rec.read_text().splitlines()
        lines[49] = '{"id":"A","v":'
        rec.write_text("\n".join(lines) + "\n")
        r = run_cli("replay", str(rec), "--m", "4", "--n", "64", "--q", "8",
                    "--no-server")
        assert r.returncode == 3
        assert r.stderr.startswith("error[runtime]:")
        assert "line 50" in r.stderr

    def test_empty_file_warns_about_warmup(self, tmp_path):
        empty = tmp_path / "empty.ndjson"
        empty.write_text("")
        r = run_cli("replay", str(empty), "--m", "4", "--n", "64", "--q", "8",
                    "--no-server")
        assert r.returncode == 0
        assert "warm-up" in r.stderr


class TestRunSources:
    def test_stdin_source(self, tmp_path):
        lines = []
        for tick in range(90):
            for i, lab in enumerate("ABCD"):
                lines.append(json.dumps({"id": lab, "v": float(tick + i)}))
        feed = "\n".join(lines) + "\n"
        r = subprocess.run(
            CLI + ["run", "--source", "stdin", "--m", "4", "--n", "64", "--q", "8",
                   "--max-ticks", "80", "--no-server", "--tick-ms", "1"],
            input=feed, capture_output=True, text=True, timeout=120,
        )
        assert r.returncode == 0
        assert "ran 80 ticks" in r.stdout

    def test_tcp_source(self):
        import socket
        import threading

        lines = b"".join(
            json.dumps({"id": lab, "v": float(k)}).encode() + b"\n"
            for k in range(200) for lab in "ABCD"
        )
        server = socket.create_server(("127.0.0.1", 0))
        port = server.getsockname()[1]

        def serve():
            conn, _ = server.accept()
            with conn:
                conn.sendall(lines)
                import time as _t
                _t.sleep(3)

        thread = threading.Thread(target=serve, daemon=True)
        thread.start()
        r = run_cli("run", "--source", f"tcp://127.0.0.1:{port}", "--m", "4",
                    "--n", "64", "--q", "8", "--max-ticks", "80", "--no-server",
                    "--tick-ms", "1")
        server.close()
        assert r.returncode == 0
        assert "ran 80 ticks" in r.stdout

    def test_unknown_source_is_config_error(self):
        r = run_cli("run", "--source", "carrier-pigeon", "--max-ticks", "1", "--no-server")
        assert r.returncode == 2
        assert r.stderr.startswith("error[config]:")

    def test_unreachable_tcp_is_runtime_error(self):
        r = run_cli("run", "--source", "tcp://127.0.0.1:1", "--max-ticks", "1",
                    "--no-server")
        assert r.returncode == 3
        assert r.stderr.startswith("error[runtime]:")


class TestBench:
    def test_csv_to_file(self, tmp_path):
        out = tmp_path / "bench.csv"
        r = run_cli("bench", "--n", "4096,8192", "--q", "32", "--reps", "2",
                    "--out", str(out))
        assert r.returncode == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "n,q,mean_s,stddev_s,reps"
        assert len(lines) == 3

    def test_csv_to_stdout(self):
        r = run_cli("bench", "--n", "512", "--q", "8", "--reps", "1",
                    "--fmin", "100", "--fmax", "2000")
        assert r.returncode == 0
        assert r.stdout.startswith("n,q,mean_s,stddev_s,reps")


class TestValidateConfig:
    def test_accepts_valid(self, tmp_path):
        path = tmp_path / "ok.ini"
        path.write_text("[engine]\nm = 4\nn = 128\n")
        r = run_cli("validate-config", str(path))
        assert r.returncode == 0
        assert "ok" in r.stdout

    def test_rejects_invalid(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[engine]\nn = 255\n")
        r = run_cli("validate-config", str(path))
        assert r.returncode == 2
        assert r.stderr.startswith("error[config]:")

    @pytest.mark.parametrize("body,ok", [
        ("[engine]\nm = 2\n", True),
        ("[engine]\nm = 1\n", False),
        ("[gating]\ntheta_on = 0.9\ntheta_off = 0.9\n", True),
        ("[gating]\ntheta_on = 0.8\ntheta_off = 0.9\n", False),
        ("[wavelet]\nfmax_hz = 45\n", True),
        ("[wavelet]\nfmax_hz = 60\n", False),
        ("[mystery]\nx = 1\n", False),
    ])
    def test_parity_with_engine_acceptance(self, tmp_path, body, ok):
        # the validator is shared, so validate-config and the engine agree
        path = tmp_path / "cfg.ini"
        path.write_text(body)
        vc = run_cli("validate-config", str(path))
        demo = run_cli("demo", "--config", str(path), "--max-ticks", "1",
                       "--no-server", "--max-rate")
        assert (vc.returncode == 0) == ok
        assert (demo.returncode == 0) == ok
        assert (vc.returncode == 0) == (demo.returncode == 0)
