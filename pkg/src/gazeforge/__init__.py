"""Gaze-driven landscape transformation engine.

A viewer's gaze (or pointer standing in for it) accumulates into an attention
heatmap; dwells carve out feathered masks that drive diffusion inpainting with
artist-defined prompts, and when nobody is watching the landscape rewinds
toward its pristine origin. Everything is deterministic under the mock
backend, so whole sessions can be recorded and replayed bit for bit.
"""

from .backend import (
    BackendError,
    GenerateRequest,
    HttpBackend,
    InpaintRequest,
    MockBackend,
    decode_inpaint_response,
    encode_inpaint_request,
)
from .compositor import CrossfadePlan, commit, frame_at, image_hash
from .config import EngineConfig, TriggerPolicy, config_from_dict, load_config
from .engine import (
    OBSERVED,
    PRISTINE_IDLE,
    REGENERATING,
    TRANSFORMING,
    SessionState,
    TransformationHistory,
    step,
)
from .gaze import (
    Fixation,
    FixationDetector,
    FixationParams,
    GazeIngestor,
    GazeSample,
    StaleSampleError,
    detect_fixations,
    presence,
    smooth,
)
from .heatmap import (
    AttentionMask,
    Heatmap,
    MaskParams,
    area_fraction,
    decay,
    extract_mask,
    splat,
)
from .imaging import Image, decode_png_rgb, encode_png_rgb
from .prompts import (
    CatalogError,
    Prompt,
    PromptCatalog,
    SchedulerState,
    next_prompt,
    parse_catalog,
    splitmix64_next,
)
from .replay import ReplayResult, ReplayTraceError, replay
from .runtime import SessionLog, SessionRuntime, VirtualSession

__version__ = "0.1.0"

__all__ = [
    "AttentionMask",
    "BackendError",
    "CatalogError",
    "CrossfadePlan",
    "EngineConfig",
    "Fixation",
    "FixationDetector",
    "FixationParams",
    "GazeIngestor",
    "GazeSample",
    "GenerateRequest",
    "Heatmap",
    "HttpBackend",
    "Image",
    "InpaintRequest",
    "MaskParams",
    "MockBackend",
    "OBSERVED",
    "PRISTINE_IDLE",
    "Prompt",
    "PromptCatalog",
    "REGENERATING",
    "ReplayResult",
    "ReplayTraceError",
    "SchedulerState",
    "SessionLog",
    "SessionRuntime",
    "SessionState",
    "StaleSampleError",
    "TRANSFORMING",
    "TransformationHistory",
    "TriggerPolicy",
    "VirtualSession",
    "area_fraction",
    "commit",
    "config_from_dict",
    "decay",
    "decode_inpaint_response",
    "decode_png_rgb",
    "detect_fixations",
    "encode_inpaint_request",
    "encode_png_rgb",
    "extract_mask",
    "frame_at",
    "image_hash",
    "load_config",
    "next_prompt",
    "parse_catalog",
    "presence",
    "replay",
    "smooth",
    "splat",
    "splitmix64_next",
    "step",
]
