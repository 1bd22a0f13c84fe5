"""Engine configuration: JSON loading, defaults, and validation."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .gaze import FixationParams
from .heatmap import MaskParams
from .prompts import PromptCatalog, load_catalog_file, load_default_catalog

ENV_CONFIG_PATH = "GAZEFORGE_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TriggerPolicy:
    accumulate_window_ms: float = 1200.0
    min_area_fraction: float = 0.005
    max_area_fraction: float = 0.20
    cooldown_ms: float = 2000.0
    idle_timeout_ms: float = 5000.0
    regen_step_interval_ms: float = 1500.0

    def __post_init__(self):
        for name in (
            "accumulate_window_ms",
            "min_area_fraction",
            "max_area_fraction",
            "cooldown_ms",
            "idle_timeout_ms",
            "regen_step_interval_ms",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.min_area_fraction >= self.max_area_fraction:
            raise ConfigError("min_area_fraction must be below max_area_fraction")


@dataclass(frozen=True)
class EngineConfig:
    render_width: int = 768
    render_height: int = 768
    tick_hz: int = 30
    seed: int = 2023
    trigger: TriggerPolicy = field(default_factory=TriggerPolicy)
    fixation: FixationParams = field(default_factory=FixationParams)
    mask: MaskParams = field(default_factory=MaskParams)
    regen_mode: str = "rewind"
    history_capacity: int = 32
    n_frames: int = 45
    steps: int = 30
    strength: float = 0.85
    backend: str = "mock"
    backend_url: str | None = None
    backend_deadline_s: float = 60.0
    backend_retries: int = 2
    backend_token: str | None = None
    prompt_catalog: str | None = None
    listen: str = "127.0.0.1:8765"
    debug: bool = False

    def __post_init__(self):
        if self.render_width < 8 or self.render_width % 8:
            raise ConfigError("render_width must be a positive multiple of 8")
        if self.render_height < 8 or self.render_height % 8:
            raise ConfigError("render_height must be a positive multiple of 8")
        if self.tick_hz < 1:
            raise ConfigError("tick_hz must be >= 1")
        if self.regen_mode not in ("rewind", "generate"):
            raise ConfigError("regen_mode must be 'rewind' or 'generate'")
        if self.history_capacity < 1:
            raise ConfigError("history_capacity must be >= 1")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if self.backend not in ("mock", "http"):
            raise ConfigError("backend must be 'mock' or 'http'")
        if self.backend == "http" and not self.backend_url:
            raise ConfigError("backend_url required for the http backend")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def tick_interval_ms(self) -> int:
        return 1000 // self.tick_hz

    def tick_time_ms(self, k: int) -> int:
        return (k * 1000) // self.tick_hz

    def load_catalog(self) -> PromptCatalog:
        if self.prompt_catalog:
            return load_catalog_file(self.prompt_catalog)
        return load_default_catalog()

    def to_json(self, redact_seed: bool = False) -> dict:
        doc = {
            "render_width": self.render_width,
            "render_height": self.render_height,
            "tick_hz": self.tick_hz,
            "seed": None if redact_seed else self.seed,
            "accumulate_window_ms": self.trigger.accumulate_window_ms,
            "min_area_fraction": self.trigger.min_area_fraction,
            "max_area_fraction": self.trigger.max_area_fraction,
            "cooldown_ms": self.trigger.cooldown_ms,
            "idle_timeout_ms": self.trigger.idle_timeout_ms,
            "regen_step_interval_ms": self.trigger.regen_step_interval_ms,
            "dispersion_threshold": self.fixation.dispersion_threshold,
            "min_duration_ms": self.fixation.min_duration_ms,
            "smoothing_window": self.fixation.smoothing_window,
            "sigma_px": self.mask.sigma_px,
            "decay_lambda": self.mask.decay_lambda,
            "threshold_tau": self.mask.threshold_tau,
            "dilation_px": self.mask.dilation_px,
            "feather_sigma_px": self.mask.feather_sigma_px,
            "regen_mode": self.regen_mode,
            "history_capacity": self.history_capacity,
            "n_frames": self.n_frames,
            "steps": self.steps,
            "strength": self.strength,
            "backend": self.backend,
            "backend_url": self.backend_url,
            "backend_deadline_s": self.backend_deadline_s,
            "backend_retries": self.backend_retries,
            "prompt_catalog": self.prompt_catalog,
            "listen": self.listen,
            "debug": self.debug,
        }
        return doc


_TRIGGER_KEYS = (
    "accumulate_window_ms",
    "min_area_fraction",
    "max_area_fraction",
    "cooldown_ms",
    "idle_timeout_ms",
    "regen_step_interval_ms",
)
_FIXATION_KEYS = ("dispersion_threshold", "min_duration_ms", "smoothing_window")
_MASK_KEYS = ("sigma_px", "decay_lambda", "threshold_tau", "dilation_px", "feather_sigma_px")
_TOP_KEYS = (
    "render_width",
    "render_height",
    "tick_hz",
    "seed",
    "regen_mode",
    "history_capacity",
    "n_frames",
    "steps",
    "strength",
    "backend",
    "backend_url",
    "backend_deadline_s",
    "backend_retries",
    "backend_token",
    "prompt_catalog",
    "listen",
    "debug",
)


def config_from_dict(doc: dict) -> EngineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    known = set(_TOP_KEYS) | set(_TRIGGER_KEYS) | set(_FIXATION_KEYS) | set(_MASK_KEYS)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        trigger = TriggerPolicy(**{k: doc[k] for k in _TRIGGER_KEYS if k in doc})
        fixation = FixationParams(**{k: doc[k] for k in _FIXATION_KEYS if k in doc})
        mask = MaskParams(**{k: doc[k] for k in _MASK_KEYS if k in doc})
        return EngineConfig(
            trigger=trigger,
            fixation=fixation,
            mask=mask,
            **{k: doc[k] for k in _TOP_KEYS if k in doc},
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> EngineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config JSON in {path}: {exc}") from exc
    return config_from_dict(doc)


def resolve_config_path(cli_path: str | None) -> str | None:
    """CLI --config wins; the GAZEFORGE_CONFIG environment variable is the fallback."""
    if cli_path:
        return cli_path
    return os.environ.get(ENV_CONFIG_PATH) or None
