"""Deterministic trace replay: session logs or bare gaze traces in, hashes out.

A replay runs the same engine and runtime as a live session, but on a virtual
clock driven by trace timestamps, with the mock backend forced. Replaying a
recorded session reproduces its commit-hash sequence exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace as dc_replace

from .backend import MockBackend
from .config import EngineConfig
from .runtime import SessionRuntime, VirtualSession


class ReplayTraceError(ValueError):
    """Trace file failed to parse; the message names the offending line."""


@dataclass(frozen=True)
class ParsedTrace:
    gaze_events: list  # (t, x, y, valid) tuples
    completion_times: list | None  # recorded job_completed times, if a session log
    end_ms: float


@dataclass(frozen=True)
class ReplayResult:
    pristine_hash: str
    commit_hashes: list[str]
    regen_hashes: list[str]
    final_mode: str

    def stdout_lines(self) -> list[str]:
        return [self.pristine_hash] + list(self.commit_hashes)


def parse_trace(path: str) -> ParsedTrace:
    gaze: list[tuple[float, float, float, bool]] = []
    completions: list[float] = []
    is_session_log = False
    end_ms = 0.0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReplayTraceError(f"line {lineno}: malformed JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ReplayTraceError(f"line {lineno}: record must be an object")
            if "kind" in record:
                is_session_log = True
                t = record.get("t_ms")
                if not isinstance(t, (int, float)):
                    raise ReplayTraceError(f"line {lineno}: missing numeric t_ms")
                end_ms = max(end_ms, float(t))
                kind = record["kind"]
                payload = record.get("payload", {})
                if kind == "gaze":
                    try:
                        gaze.append(
                            (
                                float(payload["t"]),
                                float(payload["x"]),
                                float(payload["y"]),
                                bool(payload["valid"]),
                            )
                        )
                    except (KeyError, TypeError, ValueError) as exc:
                        raise ReplayTraceError(f"line {lineno}: bad gaze payload: {exc}") from exc
                elif kind == "job_completed":
                    completions.append(float(t))
            else:
                try:
                    t = float(record["t"])
                    gaze.append((t, float(record["x"]), float(record["y"]), bool(record["valid"])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ReplayTraceError(
                        f"line {lineno}: bare gaze record needs t, x, y, valid: {exc}"
                    ) from exc
                end_ms = max(end_ms, t)
    return ParsedTrace(
        gaze_events=gaze,
        completion_times=completions if is_session_log else None,
        end_ms=end_ms,
    )


def replay(trace_path: str, config: EngineConfig) -> ReplayResult:
    """Replay a trace under the mock backend and return the hash record."""
    trace = parse_trace(trace_path)
    if config.backend != "mock":
        config = dc_replace(config, backend="mock", backend_url=None)
    runtime = SessionRuntime(config, MockBackend())
    session = VirtualSession(runtime, completion_times=trace.completion_times)
    session.run(trace.gaze_events, trace.end_ms)
    return ReplayResult(
        pristine_hash=runtime.pristine_hash,
        commit_hashes=list(runtime.commit_hashes),
        regen_hashes=list(runtime.regen_hashes),
        final_mode=runtime.state.mode,
    )
