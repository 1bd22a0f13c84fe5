"""Gaze ingestion, smoothing, presence, and dispersion-threshold fixation detection.

Fixations are found with classic I-DT: a window grows over consecutive valid
samples while its bounding-box dispersion (dx + dy) stays under the threshold,
and is emitted once its time span reaches the minimum duration. Invalid
samples terminate any open window so tracker dropout cannot bridge two dwells.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence


class StaleSampleError(Exception):
    """Raised when a sample does not advance the stream clock; the sample is dropped."""


@dataclass(frozen=True)
class GazeSample:
    t_ms: float
    x: float
    y: float
    valid: bool


@dataclass(frozen=True)
class Fixation:
    cx: float
    cy: float
    start_ms: float
    end_ms: float
    n: int

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class FixationParams:
    dispersion_threshold: float = 0.05
    min_duration_ms: float = 150.0
    smoothing_window: int = 3

    def __post_init__(self):
        if self.dispersion_threshold <= 0:
            raise ValueError("dispersion_threshold must be > 0")
        if self.min_duration_ms <= 0:
            raise ValueError("min_duration_ms must be > 0")
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be >= 1")


class GazeIngestor:
    """Normalizes raw device samples into a monotonic unit-square stream."""

    def __init__(self):
        self._last_t: float | None = None

    def ingest_sample(
        self,
        raw_x: float,
        raw_y: float,
        t_ms: float,
        valid: bool,
        canvas_w: float,
        canvas_h: float,
    ) -> GazeSample:
        if canvas_w <= 0 or canvas_h <= 0:
            raise ValueError("canvas dimensions must be positive")
        if self._last_t is not None and t_ms <= self._last_t:
            raise StaleSampleError(
                f"stale sample: t={t_ms} does not advance past t={self._last_t}"
            )
        self._last_t = t_ms
        if valid and (math.isnan(raw_x) or math.isnan(raw_y)):
            valid = False
        if not valid:
            return GazeSample(t_ms, 0.0, 0.0, False)
        x = min(max(raw_x / canvas_w, 0.0), 1.0)
        y = min(max(raw_y / canvas_h, 0.0), 1.0)
        return GazeSample(t_ms, x, y, True)


class _MeanWindow:
    """Running mean over the k most recent valid positions."""

    def __init__(self, k: int):
        self._window: deque[tuple[float, float]] = deque(maxlen=k)

    def clone(self) -> "_MeanWindow":
        out = _MeanWindow(self._window.maxlen)
        out._window.extend(self._window)
        return out

    def feed(self, sample: GazeSample) -> GazeSample:
        if not sample.valid:
            return sample
        self._window.append((sample.x, sample.y))
        sx = 0.0
        sy = 0.0
        for px, py in self._window:
            sx += px
            sy += py
        n = len(self._window)
        return GazeSample(sample.t_ms, sx / n, sy / n, True)


def smooth(samples: Sequence[GazeSample], k: int) -> list[GazeSample]:
    """Moving-average pre-filter: each valid position becomes the mean of the
    up-to-k most recent valid positions; timestamps and validity pass through."""
    if k < 1:
        raise ValueError("smoothing window must be >= 1")
    window = _MeanWindow(k)
    return [window.feed(s) for s in samples]


def presence(window: Iterable[GazeSample], now_ms: float, presence_window_ms: float) -> bool:
    """True iff any valid sample arrived within the presence window."""
    if presence_window_ms <= 0:
        raise ValueError("presence_window_ms must be > 0")
    return any(s.valid and now_ms - s.t_ms <= presence_window_ms for s in window)


def _centroid(window: Sequence[GazeSample]) -> tuple[float, float]:
    sx = 0.0
    sy = 0.0
    for s in window:
        sx += s.x
        sy += s.y
    return sx / len(window), sy / len(window)


class FixationDetector:
    """Streaming I-DT detector.

    push() emits fixations as soon as their windows are irrevocably closed by a
    dispersion break or an invalid sample; flush() finalizes the open tail.
    Pushing a whole trace and flushing equals detect_fixations on that trace.
    """

    def __init__(self, params: FixationParams):
        self.params = params
        self._smoother = _MeanWindow(params.smoothing_window)
        self._pending: deque[GazeSample] = deque()

    def clone(self) -> "FixationDetector":
        out = FixationDetector(self.params)
        out._smoother = self._smoother.clone()
        out._pending.extend(self._pending)
        return out

    def push(self, sample: GazeSample) -> list[Fixation]:
        self._pending.append(self._smoother.feed(sample))
        return self._resolve(final=False)

    def flush(self) -> list[Fixation]:
        return self._resolve(final=True)

    def open_window(self) -> list[GazeSample]:
        """The samples of the still-growing window at the front of the buffer
        (empty when the front window is already closed or no window is open)."""
        if not self._pending or not self._pending[0].valid:
            return []
        j, closed = self._scan_prefix()
        if closed:
            return []
        return list(self._pending)[:j]

    def _scan_prefix(self) -> tuple[int, bool]:
        """Maximal dispersion-bounded prefix of the pending buffer.

        Returns (length, closed): closed is True when the window cannot grow
        further because the next sample is invalid or breaks the dispersion
        bound; False means it still ends at the buffer edge.
        """
        buf = self._pending
        first = buf[0]
        min_x = max_x = first.x
        min_y = max_y = first.y
        j = 1
        while j < len(buf):
            s = buf[j]
            if not s.valid:
                return j, True
            nmin_x = min(min_x, s.x)
            nmax_x = max(max_x, s.x)
            nmin_y = min(min_y, s.y)
            nmax_y = max(max_y, s.y)
            if (nmax_x - nmin_x) + (nmax_y - nmin_y) > self.params.dispersion_threshold:
                return j, True
            min_x, max_x, min_y, max_y = nmin_x, nmax_x, nmin_y, nmax_y
            j += 1
        return j, False

    def _resolve(self, final: bool) -> list[Fixation]:
        emitted: list[Fixation] = []
        while self._pending:
            if not self._pending[0].valid:
                self._pending.popleft()
                continue
            j, closed = self._scan_prefix()
            if not closed and not final:
                break
            window = [self._pending[i] for i in range(j)]
            span = window[-1].t_ms - window[0].t_ms
            if span >= self.params.min_duration_ms and len(window) >= 2:
                cx, cy = _centroid(window)
                emitted.append(
                    Fixation(cx=cx, cy=cy, start_ms=window[0].t_ms, end_ms=window[-1].t_ms, n=len(window))
                )
                for _ in range(j):
                    self._pending.popleft()
            else:
                self._pending.popleft()
        return emitted


def detect_fixations(samples: Sequence[GazeSample], params: FixationParams) -> list[Fixation]:
    """Batch I-DT over a whole trace (applies the moving-average pre-filter first)."""
    smoothed = smooth(samples, params.smoothing_window)
    out: list[Fixation] = []
    n = len(smoothed)
    i = 0
    while i < n:
        first = smoothed[i]
        if not first.valid:
            i += 1
            continue
        min_x = max_x = first.x
        min_y = max_y = first.y
        j = i + 1
        while j < n:
            s = smoothed[j]
            if not s.valid:
                break
            nmin_x = min(min_x, s.x)
            nmax_x = max(max_x, s.x)
            nmin_y = min(min_y, s.y)
            nmax_y = max(max_y, s.y)
            if (nmax_x - nmin_x) + (nmax_y - nmin_y) > params.dispersion_threshold:
                break
            min_x, max_x, min_y, max_y = nmin_x, nmax_x, nmin_y, nmax_y
            j += 1
        window = smoothed[i:j]
        span = window[-1].t_ms - window[0].t_ms
        if span >= params.min_duration_ms and len(window) >= 2:
            cx, cy = _centroid(window)
            out.append(
                Fixation(cx=cx, cy=cy, start_ms=window[0].t_ms, end_ms=window[-1].t_ms, n=len(window))
            )
            i = j
        else:
            i += 1
    return out
