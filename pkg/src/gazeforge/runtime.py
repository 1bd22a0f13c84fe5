"""Session runtime: executes engine actions and owns the session log.

The runtime is clock-agnostic. The gateway drives it from an asyncio tick
task in live mode; `VirtualSession` drives it from a trace with a virtual
clock for replay and tests. Both paths deliver events in the same per-tick
order (gaze batch, due job results, tick), which is what makes a recorded
session replayable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable

from .backend import BackendError, GenerateRequest, InpaintRequest
from .compositor import image_hash
from .config import EngineConfig
from .engine import (
    Action,
    CommitImage,
    DispatchInpaint,
    EmitStateChange,
    Event,
    GazeBatch,
    GenerateFresh,
    JobCompleted,
    JobFailed,
    LogEvent,
    PopHistoryCrossfade,
    PushHistory,
    SessionState,
    StartCrossfade,
    Tick,
    initial_scheduler,
    initial_state,
    plan_initial_generation,
    step,
)
from .gaze import GazeIngestor, GazeSample, StaleSampleError
from .heatmap import mask_hash
from .imaging import Image
from .prompts import PromptCatalog


class SessionLog:
    """JSONL session log; one {t_ms, kind, payload} object per line."""

    def __init__(self, path: str):
        self._fh = open(path, "w", encoding="utf-8")
        self._last_t = None

    def write(self, t_ms: float, kind: str, payload: dict) -> None:
        if self._last_t is not None and t_ms < self._last_t:
            t_ms = self._last_t  # log time never runs backwards
        self._last_t = t_ms
        record = {"t_ms": t_ms, "kind": kind, "payload": payload}
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def close(self) -> None:
        self._fh.flush()
        self._fh.close()


@dataclass
class PendingJob:
    request: object  # InpaintRequest | GenerateRequest
    result: Image | None = None
    error: BackendError | None = None


class SessionRuntime:
    """Owns engine state, executes actions, and fans effects out to sinks.

    frame_sink receives crossfade plans; state_sink receives mode strings;
    mask_sink receives the mask of each dispatched inpaint (debug overlay).
    """

    def __init__(
        self,
        config: EngineConfig,
        backend,
        catalog: PromptCatalog | None = None,
        log: SessionLog | None = None,
        frame_sink: Callable | None = None,
        state_sink: Callable | None = None,
        mask_sink: Callable | None = None,
    ):
        self.config = config
        self.backend = backend
        self.catalog = catalog if catalog is not None else config.load_catalog()
        self.log = log
        self.frame_sink = frame_sink
        self.state_sink = state_sink
        self.mask_sink = mask_sink
        self.commit_hashes: list[str] = []
        self.regen_hashes: list[str] = []
        self.pending: PendingJob | None = None
        self._submit = self._submit_blocking

        if self.log:
            self.log.write(0, "config_snapshot", config.to_json())

        scheduler = initial_scheduler(config)
        request, scheduler = plan_initial_generation(config, self.catalog, scheduler)
        pristine = backend.generate(request)
        self.pristine_hash = image_hash(pristine)
        self.state: SessionState = initial_state(config, pristine, self.pristine_hash, scheduler)

    # -- gaze ingestion ------------------------------------------------------

    def make_ingestor(self) -> GazeIngestor:
        return GazeIngestor()

    # -- event handling ------------------------------------------------------

    def handle_event(self, event: Event, now_ms: float) -> list[Action]:
        state, actions = step(self.state, event, now_ms, self.config, self.catalog)
        self.state = state
        for action in actions:
            self._execute(action, now_ms)
        return actions

    def deliver_gaze(self, samples: Iterable[GazeSample], now_ms: float) -> None:
        samples = tuple(samples)
        if not samples:
            return
        if self.log:
            for s in samples:
                self.log.write(s.t_ms, "gaze", {"t": s.t_ms, "x": s.x, "y": s.y, "valid": s.valid})
        self.handle_event(GazeBatch(samples), now_ms)

    def deliver_tick(self, now_ms: float) -> None:
        self.handle_event(Tick(), now_ms)

    def deliver_job_result(self, now_ms: float) -> None:
        """Hand a finished backend job to the engine (no-op when none is ready)."""
        job = self.pending
        if job is None or (job.result is None and job.error is None):
            return
        self.pending = None
        if job.error is not None:
            self.handle_event(JobFailed(job.error), now_ms)
        else:
            if self.log:
                self.log.write(now_ms, "job_completed", {"image_hash": image_hash(job.result)})
            self.handle_event(JobCompleted(job.result), now_ms)

    def job_ready(self) -> bool:
        return self.pending is not None and (
            self.pending.result is not None or self.pending.error is not None
        )

    # -- action execution ----------------------------------------------------

    def _execute(self, action: Action, now_ms: float) -> None:
        if isinstance(action, DispatchInpaint):
            req = action.request
            if self.log:
                self.log.write(
                    now_ms,
                    "job_dispatched",
                    {"prompt": req.prompt, "seed": req.seed, "mask_hash": mask_hash(req.mask)},
                )
            if self.mask_sink:
                self.mask_sink(req.mask)
            self._submit(req)
        elif isinstance(action, GenerateFresh):
            req = action.request
            if self.log:
                self.log.write(
                    now_ms, "job_dispatched", {"prompt": req.prompt, "seed": req.seed, "mask_hash": None}
                )
            self._submit(req)
        elif isinstance(action, StartCrossfade):
            if self.frame_sink:
                self.frame_sink(action.plan)
        elif isinstance(action, CommitImage):
            digest = image_hash(action.image)
            if action.kind == "commit":
                self.commit_hashes.append(digest)
                if self.log:
                    self.log.write(now_ms, "commit", {"image_hash": digest})
            else:
                self.regen_hashes.append(digest)
                if self.log:
                    self.log.write(now_ms, "regen_step", {"image_hash": digest})
        elif isinstance(action, PopHistoryCrossfade):
            digest = image_hash(action.snapshot)
            self.regen_hashes.append(digest)
            if self.log:
                self.log.write(now_ms, "regen_step", {"image_hash": digest})
            if self.frame_sink:
                self.frame_sink(action.plan)
        elif isinstance(action, EmitStateChange):
            if self.log:
                self.log.write(now_ms, "state_change", {"mode": action.mode})
            if self.state_sink:
                self.state_sink(action.mode)
        elif isinstance(action, LogEvent):
            if self.log:
                self.log.write(now_ms, "event", {"detail": action.detail})
        elif isinstance(action, PushHistory):
            pass  # bookkeeping already captured in engine state

    def _submit_blocking(self, request) -> None:
        """Default executor: run the backend call inline (mock/virtual mode)."""
        job = PendingJob(request=request)
        self.pending = job
        try:
            if isinstance(request, InpaintRequest):
                job.result = self.backend.inpaint(request)
            else:
                job.result = self.backend.generate(request)
        except BackendError as exc:
            job.error = exc

    def set_submitter(self, submit: Callable) -> None:
        """Replace the job executor (the live gateway submits to a worker thread)."""
        self._submit = submit

    def displayed_hash(self) -> str:
        return image_hash(self.state.current_image)

    def close(self) -> None:
        if self.log:
            self.log.close()


class VirtualSession:
    """Drives a runtime on a virtual clock: no wall-time waits, fully ordered.

    Gaze samples are delivered in the batch of the first tick at or after
    their timestamp; job results are delivered at explicitly scheduled times
    when a recorded session log provides them, otherwise on the tick after
    dispatch. Per tick the order is: gaze batch, due job results, tick.
    """

    def __init__(self, runtime: SessionRuntime, completion_times: list[float] | None = None):
        self.runtime = runtime
        self.completion_times = list(completion_times) if completion_times else None
        self._ingestor = runtime.make_ingestor()

    def run(self, gaze_events: list[tuple[float, float, float, bool]], end_ms: float) -> None:
        config = self.runtime.config
        samples: list[GazeSample] = []
        for t, x, y, valid in sorted(gaze_events, key=lambda e: e[0]):
            try:
                samples.append(self._ingestor.ingest_sample(x, y, t, valid, 1.0, 1.0))
            except StaleSampleError:
                continue
        cursor = 0
        k = 0
        while True:
            now = config.tick_time_ms(k)
            if now > end_ms:
                break
            batch = []
            while cursor < len(samples) and samples[cursor].t_ms <= now:
                batch.append(samples[cursor])
                cursor += 1
            if batch:
                self.runtime.deliver_gaze(batch, now)
            self._deliver_due_jobs(now)
            self.runtime.deliver_tick(now)
            k += 1

    def _deliver_due_jobs(self, now_ms: float) -> None:
        if not self.runtime.job_ready():
            return
        if self.completion_times is None:
            self.runtime.deliver_job_result(now_ms)
            return
        if self.completion_times and now_ms >= self.completion_times[0]:
            self.completion_times.pop(0)
            self.runtime.deliver_job_result(now_ms)
