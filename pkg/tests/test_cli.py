from __future__ import annotations

import json
import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from gazeforge.cli import main
from gazeforge.compositor import image_hash
from gazeforge.imaging import Image, encode_png_rgb

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def test_replay_prints_hashes(capsys):
    code = main(["replay", "--trace", str(FIXTURES / "fixture_trace.jsonl"), "--config", str(FIXTURES / "engine_256.json")])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.splitlines() == (GOLDEN / "replay_hashes.txt").read_text().splitlines()
    assert "final state:" in captured.err


def test_replay_missing_trace_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["replay", "--config", str(FIXTURES / "engine_256.json")])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["replay", "--nonsense"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_seed_override_changes_output(capsys):
    args = ["replay", "--trace", str(FIXTURES / "fixture_trace.jsonl"), "--config", str(FIXTURES / "engine_256.json")]
    main(args)
    base = capsys.readouterr().out
    main(args + ["--seed", "999"])
    overridden = capsys.readouterr().out
    assert base != overridden


def test_config_env_var_fallback(capsys, monkeypatch):
    monkeypatch.setenv("GAZEFORGE_CONFIG", str(FIXTURES / "engine_256.json"))
    code = main(["catalog-check"])
    captured = capsys.readouterr()
    assert code == 0
    assert "destruction:" in captured.out and "pristine:" in captured.out


def test_catalog_check_counts(capsys):
    code = main(["catalog-check", "--config", str(FIXTURES / "engine_256.json")])
    captured = capsys.readouterr()
    assert code == 0
    lines = captured.out.splitlines()
    counts = dict(line.split(": ") for line in lines)
    assert int(counts["destruction"]) >= 8
    assert int(counts["pristine"]) >= 4


def test_catalog_check_invalid_is_runtime_error(tmp_path, capsys):
    bad_catalog = tmp_path / "catalog.json"
    bad_catalog.write_text('{"destruction":[],"pristine":[{"text":"x"}]}')
    config = tmp_path / "engine.json"
    config.write_text(json.dumps({"prompt_catalog": str(bad_catalog)}))
    code = main(["catalog-check", "--config", str(config)])
    captured = capsys.readouterr()
    assert code == 2
    assert "empty category" in captured.err


def test_malformed_config_is_runtime_error(tmp_path, capsys):
    config = tmp_path / "engine.json"
    config.write_text("{broken")
    code = main(["catalog-check", "--config", str(config)])
    assert code == 2


def test_hash_command_prints_canonical_digest(tmp_path, capsys):
    rng = np.random.default_rng(5)
    img = Image(pixels=rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
    path = tmp_path / "image.png"
    path.write_bytes(encode_png_rgb(img))
    code = main(["hash", "--image", str(path)])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.strip() == image_hash(img)


def test_hash_missing_file_is_runtime_error(tmp_path, capsys):
    code = main(["hash", "--image", str(tmp_path / "nope.png")])
    assert code == 2


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_run_headless_records_and_shuts_down_cleanly(tmp_path):
    port = _free_port()
    config_path = tmp_path / "engine.json"
    config_path.write_text(
        json.dumps(
            {
                "render_width": 64,
                "render_height": 64,
                "tick_hz": 50,
                "seed": 3,
                "listen": f"127.0.0.1:{port}",
            }
        )
    )
    record_path = tmp_path / "record.jsonl"
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "gazeforge.cli",
            "run",
            "--config",
            str(config_path),
            "--record",
            str(record_path),
            "--headless",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    try:
        deadline = time.monotonic() + 10
        ready = False
        while time.monotonic() < deadline:
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                    ready = True
                    break
            except OSError:
                time.sleep(0.05)
        assert ready, "server did not start listening"
        time.sleep(0.3)
        proc.send_signal(signal.SIGINT)
        proc.wait(timeout=10)
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()
    assert proc.returncode == 0
    records = [json.loads(line) for line in record_path.read_text().splitlines()]
    assert records, "session log is empty"
    assert records[0]["kind"] == "config_snapshot"
