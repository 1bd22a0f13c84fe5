"""Session state machine: observation, transformation, and regeneration.

`step` is a pure transition function over immutable state values; everything
with side effects (backend calls, frame streaming, logging) is described by
the returned actions and executed by the runtime. That is what makes a whole
session replayable from its event trace.

State machine summary:
  PRISTINE_IDLE --valid gaze--> OBSERVED
  OBSERVED --dwell + mask area + cooldown--> TRANSFORMING (inpaint dispatched)
  TRANSFORMING --job done--> OBSERVED (commit, history push, heatmap reset)
  OBSERVED --idle timeout--> REGENERATING (history rewound step by step)
  REGENERATING --valid gaze--> OBSERVED (regeneration interrupted)
  REGENERATING --history exhausted--> PRISTINE_IDLE (fresh pristine landscape)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .backend import GenerateRequest, InpaintRequest
from .compositor import CrossfadePlan, commit
from .config import EngineConfig
from .gaze import Fixation, FixationDetector, GazeSample
from .heatmap import (
    AttentionMask,
    Heatmap,
    area_fraction,
    clip_to_area,
    decay,
    extract_mask,
    splat,
)
from .imaging import Image
from .prompts import PromptCatalog, SchedulerState, next_prompt, splitmix64_next

PRISTINE_IDLE = "PRISTINE_IDLE"
OBSERVED = "OBSERVED"
TRANSFORMING = "TRANSFORMING"
REGENERATING = "REGENERATING"

MODES = (PRISTINE_IDLE, OBSERVED, TRANSFORMING, REGENERATING)


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class GazeBatch:
    samples: tuple[GazeSample, ...]


@dataclass(frozen=True)
class JobCompleted:
    image: Image


@dataclass(frozen=True)
class JobFailed:
    error: Exception


@dataclass(frozen=True)
class Tick:
    pass


Event = Union[GazeBatch, JobCompleted, JobFailed, Tick]


# ---------------------------------------------------------------------------
# actions


@dataclass(frozen=True)
class DispatchInpaint:
    request: InpaintRequest


@dataclass(frozen=True)
class StartCrossfade:
    plan: CrossfadePlan


@dataclass(frozen=True)
class CommitImage:
    image: Image
    kind: str = "commit"  # commit | regen_step


@dataclass(frozen=True)
class PushHistory:
    snapshot: Image


@dataclass(frozen=True)
class PopHistoryCrossfade:
    plan: CrossfadePlan
    snapshot: Image


@dataclass(frozen=True)
class GenerateFresh:
    request: GenerateRequest


@dataclass(frozen=True)
class EmitStateChange:
    mode: str


@dataclass(frozen=True)
class LogEvent:
    detail: str


Action = Union[
    DispatchInpaint,
    StartCrossfade,
    CommitImage,
    PushHistory,
    PopHistoryCrossfade,
    GenerateFresh,
    EmitStateChange,
    LogEvent,
]


# ---------------------------------------------------------------------------
# history


class HistoryExhausted(Exception):
    """Rewind requested on an empty history; the caller generates a fresh scene."""


@dataclass(frozen=True)
class HistoryEntry:
    snapshot: Image  # the displayed image just before this commit
    prompt: str
    seed: int
    commit_ms: float
    mask: AttentionMask


@dataclass(frozen=True)
class TransformationHistory:
    capacity: int = 32
    entries: tuple[HistoryEntry, ...] = ()

    def push(self, entry: HistoryEntry) -> "TransformationHistory":
        entries = self.entries + (entry,)
        if len(entries) > self.capacity:
            entries = entries[len(entries) - self.capacity :]
        return replace(self, entries=entries)

    def rewind_step(self) -> tuple[HistoryEntry, "TransformationHistory"]:
        if not self.entries:
            raise HistoryExhausted("history exhausted")
        return self.entries[-1], replace(self, entries=self.entries[:-1])

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class InpaintJob:
    request: InpaintRequest
    prompt_text: str
    seed: int
    mask: AttentionMask
    dispatched_ms: float
    purpose: str = "destroy"  # destroy | regen


@dataclass(frozen=True)
class SessionState:
    mode: str
    current_image: Image
    pristine_hash: str
    heatmap: Heatmap
    detector: FixationDetector
    scheduler: SchedulerState
    history: TransformationHistory
    last_presence_ms: float | None = None
    last_commit_ms: float = 0.0
    last_decay_ms: float = 0.0
    last_preview_ms: float = float("-inf")
    accum_start_ms: float | None = None
    job: InpaintJob | None = None
    pending_fresh: bool = False
    next_regen_ms: float | None = None


def initial_scheduler(config: EngineConfig) -> SchedulerState:
    return SchedulerState(rng_state=config.seed)


def plan_initial_generation(
    config: EngineConfig, catalog: PromptCatalog, scheduler: SchedulerState
) -> tuple[GenerateRequest, SchedulerState]:
    """Pristine-landscape request for session start; advances the scheduler."""
    prompt, sched = next_prompt(catalog, "pristine", scheduler)
    rng, seed = splitmix64_next(sched.rng_state)
    sched = SchedulerState(rng_state=rng, last_index=sched.last_index)
    req = GenerateRequest(
        prompt=prompt.text,
        negative=prompt.negative,
        seed=seed,
        width=config.render_width,
        height=config.render_height,
        steps=config.steps,
    )
    return req, sched


def initial_state(
    config: EngineConfig, pristine: Image, pristine_hash: str, scheduler: SchedulerState
) -> SessionState:
    return SessionState(
        mode=PRISTINE_IDLE,
        current_image=pristine,
        pristine_hash=pristine_hash,
        heatmap=Heatmap.zeros(config.render_width, config.render_height),
        detector=FixationDetector(config.fixation),
        scheduler=scheduler,
        history=TransformationHistory(capacity=config.history_capacity),
    )


# ---------------------------------------------------------------------------
# transition function


def step(
    state: SessionState,
    event: Event,
    now_ms: float,
    config: EngineConfig,
    catalog: PromptCatalog,
) -> tuple[SessionState, list[Action]]:
    if isinstance(event, GazeBatch):
        return _on_gaze(state, event, now_ms, config)
    if isinstance(event, Tick):
        return _on_tick(state, now_ms, config, catalog)
    if isinstance(event, JobCompleted):
        return _on_job_completed(state, event, now_ms, config)
    if isinstance(event, JobFailed):
        return _on_job_failed(state, event, now_ms)
    return state, [LogEvent(f"unknown event {type(event).__name__} ignored")]


def _on_gaze(
    state: SessionState, event: GazeBatch, now_ms: float, config: EngineConfig
) -> tuple[SessionState, list[Action]]:
    detector = state.detector.clone()
    heat = state.heatmap
    accum = state.accum_start_ms
    last_presence = state.last_presence_ms
    any_valid = False
    for sample in event.samples:
        if sample.valid:
            any_valid = True
            last_presence = sample.t_ms
        for fixation in detector.push(sample):
            heat = splat(heat, fixation, config.mask)
            if accum is None:
                accum = now_ms

    actions: list[Action] = []
    mode = state.mode
    next_regen = state.next_regen_ms
    if any_valid and mode == PRISTINE_IDLE:
        mode = OBSERVED
        actions.append(EmitStateChange(OBSERVED))
    elif any_valid and mode == REGENERATING:
        # the regeneration journey is interrupted by renewed attention
        mode = OBSERVED
        next_regen = None
        actions.append(EmitStateChange(OBSERVED))

    return (
        replace(
            state,
            detector=detector,
            heatmap=heat,
            accum_start_ms=accum,
            last_presence_ms=last_presence,
            mode=mode,
            next_regen_ms=next_regen,
        ),
        actions,
    )


def _dwell_preview(
    state: SessionState, heat: Heatmap, accum: float | None, now_ms: float, config: EngineConfig
) -> tuple[Heatmap, float | None, float]:
    """Splat the still-open dwell window so a motionless viewer also transforms
    the scene; the window itself stays open and I-DT semantics are untouched.

    Fires only while the dwell is live (a sample within the last two ticks),
    so a window left open by sudden silence stops contributing.
    """
    last_preview = state.last_preview_ms
    params = config.fixation
    if now_ms - last_preview < params.min_duration_ms:
        return heat, accum, last_preview
    window = state.detector.open_window()
    if len(window) < 2:
        return heat, accum, last_preview
    if now_ms - window[-1].t_ms > 2 * config.tick_interval_ms:
        return heat, accum, last_preview
    span = window[-1].t_ms - window[0].t_ms
    if span < params.min_duration_ms:
        return heat, accum, last_preview
    sx = 0.0
    sy = 0.0
    for s in window:
        sx += s.x
        sy += s.y
    fixation = Fixation(
        cx=sx / len(window),
        cy=sy / len(window),
        start_ms=window[0].t_ms,
        end_ms=window[-1].t_ms,
        n=len(window),
    )
    heat = splat(heat, fixation, config.mask)
    return heat, (accum if accum is not None else now_ms), now_ms


def _on_tick(
    state: SessionState, now_ms: float, config: EngineConfig, catalog: PromptCatalog
) -> tuple[SessionState, list[Action]]:
    actions: list[Action] = []
    heat = state.heatmap
    accum = state.accum_start_ms
    dt = now_ms - state.last_decay_ms
    if dt > 0 and heat.peak() > 0.0:
        heat = decay(heat, dt, config.mask)
    last_decay = now_ms

    last_preview = state.last_preview_ms
    if state.mode in (OBSERVED, TRANSFORMING):
        heat, accum, last_preview = _dwell_preview(state, heat, accum, now_ms, config)

    updated = replace(
        state, heatmap=heat, accum_start_ms=accum, last_decay_ms=last_decay, last_preview_ms=last_preview
    )

    if updated.mode == OBSERVED:
        return _observed_tick(updated, now_ms, config, catalog, actions)
    if updated.mode == REGENERATING:
        return _regenerating_tick(updated, now_ms, config, catalog, actions)
    return updated, actions


def _observed_tick(
    state: SessionState,
    now_ms: float,
    config: EngineConfig,
    catalog: PromptCatalog,
    actions: list[Action],
) -> tuple[SessionState, list[Action]]:
    policy = config.trigger
    idle = state.last_presence_ms is None or now_ms - state.last_presence_ms >= policy.idle_timeout_ms
    if idle:
        actions.append(EmitStateChange(REGENERATING))
        return (
            replace(
                state,
                mode=REGENERATING,
                heatmap=Heatmap.zeros(config.render_width, config.render_height),
                accum_start_ms=None,
                next_regen_ms=now_ms + policy.regen_step_interval_ms,
            ),
            actions,
        )

    ready = (
        state.job is None
        and state.accum_start_ms is not None
        and now_ms - state.accum_start_ms >= policy.accumulate_window_ms
        and now_ms - state.last_commit_ms >= policy.cooldown_ms
    )
    if not ready:
        return state, actions

    mask = extract_mask(state.heatmap, config.mask)
    if area_fraction(mask) < policy.min_area_fraction:
        return state, actions
    mask = clip_to_area(mask, policy.max_area_fraction)

    prompt, sched = next_prompt(catalog, "destruction", state.scheduler)
    rng, seed = splitmix64_next(sched.rng_state)
    sched = SchedulerState(rng_state=rng, last_index=sched.last_index)
    request = InpaintRequest(
        prompt=prompt.text,
        negative=prompt.negative,
        seed=seed,
        steps=config.steps,
        strength=config.strength,
        source=state.current_image,
        mask=mask,
    )
    job = InpaintJob(
        request=request,
        prompt_text=prompt.text,
        seed=seed,
        mask=mask,
        dispatched_ms=now_ms,
        purpose="destroy",
    )
    actions.append(DispatchInpaint(request))
    actions.append(EmitStateChange(TRANSFORMING))
    return replace(state, mode=TRANSFORMING, scheduler=sched, job=job), actions


def _regenerating_tick(
    state: SessionState,
    now_ms: float,
    config: EngineConfig,
    catalog: PromptCatalog,
    actions: list[Action],
) -> tuple[SessionState, list[Action]]:
    due = state.next_regen_ms is not None and now_ms >= state.next_regen_ms
    if not due or state.job is not None or state.pending_fresh:
        return state, actions
    policy = config.trigger

    if len(state.history) == 0:
        return _dispatch_fresh(state, now_ms, config, catalog, actions)

    if config.regen_mode == "rewind":
        entry, history = state.history.rewind_step()
        plan = CrossfadePlan(
            src=state.current_image,
            dst=entry.snapshot,
            mask=AttentionMask.full(config.render_width, config.render_height),
            n_frames=config.n_frames,
        )
        actions.append(PopHistoryCrossfade(plan=plan, snapshot=entry.snapshot))
        return (
            replace(
                state,
                current_image=entry.snapshot,
                history=history,
                next_regen_ms=now_ms + policy.regen_step_interval_ms,
            ),
            actions,
        )

    # regen_mode == "generate": restore the previously destroyed region by
    # inpainting it with a pristine prompt
    entry, history = state.history.rewind_step()
    prompt, sched = next_prompt(catalog, "pristine", state.scheduler)
    rng, seed = splitmix64_next(sched.rng_state)
    sched = SchedulerState(rng_state=rng, last_index=sched.last_index)
    request = InpaintRequest(
        prompt=prompt.text,
        negative=prompt.negative,
        seed=seed,
        steps=config.steps,
        strength=config.strength,
        source=state.current_image,
        mask=entry.mask,
    )
    job = InpaintJob(
        request=request,
        prompt_text=prompt.text,
        seed=seed,
        mask=entry.mask,
        dispatched_ms=now_ms,
        purpose="regen",
    )
    actions.append(DispatchInpaint(request))
    return (
        replace(
            state,
            scheduler=sched,
            history=history,
            job=job,
            next_regen_ms=now_ms + policy.regen_step_interval_ms,
        ),
        actions,
    )


def _dispatch_fresh(
    state: SessionState,
    now_ms: float,
    config: EngineConfig,
    catalog: PromptCatalog,
    actions: list[Action],
) -> tuple[SessionState, list[Action]]:
    prompt, sched = next_prompt(catalog, "pristine", state.scheduler)
    rng, seed = splitmix64_next(sched.rng_state)
    sched = SchedulerState(rng_state=rng, last_index=sched.last_index)
    request = GenerateRequest(
        prompt=prompt.text,
        negative=prompt.negative,
        seed=seed,
        width=config.render_width,
        height=config.render_height,
        steps=config.steps,
    )
    actions.append(GenerateFresh(request))
    actions.append(EmitStateChange(PRISTINE_IDLE))
    return (
        replace(
            state,
            mode=PRISTINE_IDLE,
            scheduler=sched,
            pending_fresh=True,
            next_regen_ms=None,
        ),
        actions,
    )


def _on_job_completed(
    state: SessionState, event: JobCompleted, now_ms: float, config: EngineConfig
) -> tuple[SessionState, list[Action]]:
    if state.job is not None and state.mode == TRANSFORMING and state.job.purpose == "destroy":
        job = state.job
        committed = commit(state.current_image, event.image, job.mask)
        plan = CrossfadePlan(src=state.current_image, dst=committed, mask=job.mask, n_frames=config.n_frames)
        entry = HistoryEntry(
            snapshot=state.current_image,
            prompt=job.prompt_text,
            seed=job.seed,
            commit_ms=now_ms,
            mask=job.mask,
        )
        actions: list[Action] = [
            StartCrossfade(plan),
            CommitImage(committed, kind="commit"),
            PushHistory(state.current_image),
            EmitStateChange(OBSERVED),
        ]
        return (
            replace(
                state,
                mode=OBSERVED,
                current_image=committed,
                history=state.history.push(entry),
                heatmap=Heatmap.zeros(config.render_width, config.render_height),
                accum_start_ms=None,
                job=None,
                last_commit_ms=now_ms,
            ),
            actions,
        )

    if state.job is not None and state.mode == REGENERATING and state.job.purpose == "regen":
        job = state.job
        committed = commit(state.current_image, event.image, job.mask)
        plan = CrossfadePlan(src=state.current_image, dst=committed, mask=job.mask, n_frames=config.n_frames)
        return (
            replace(state, current_image=committed, job=None),
            [StartCrossfade(plan), CommitImage(committed, kind="regen_step")],
        )

    if state.pending_fresh and state.mode == PRISTINE_IDLE:
        plan = CrossfadePlan(
            src=state.current_image,
            dst=event.image,
            mask=AttentionMask.full(config.render_width, config.render_height),
            n_frames=config.n_frames,
        )
        return (
            replace(state, current_image=event.image, pending_fresh=False),
            [StartCrossfade(plan), CommitImage(event.image, kind="regen_step")],
        )

    return state, [LogEvent(f"JobCompleted ignored in mode {state.mode}")]


def _on_job_failed(
    state: SessionState, event: JobFailed, now_ms: float
) -> tuple[SessionState, list[Action]]:
    detail = f"job failed: {event.error}"
    if state.job is not None and state.mode == TRANSFORMING:
        # gaze accumulation is preserved so the next attempt needs no new dwell
        return (
            replace(state, mode=OBSERVED, job=None),
            [LogEvent(detail), EmitStateChange(OBSERVED)],
        )
    if state.job is not None and state.mode == REGENERATING:
        return replace(state, job=None), [LogEvent(detail)]
    if state.pending_fresh:
        return replace(state, pending_fresh=False), [LogEvent(detail)]
    return state, [LogEvent(f"JobFailed ignored in mode {state.mode}: {event.error}")]
