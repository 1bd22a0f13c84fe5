"""Prompt catalog parsing and reproducible weighted prompt selection.

Selection is driven by a SplitMix64 stream so a session can be replayed
prompt-for-prompt from its seed. A category with two or more entries never
repeats the previously chosen prompt; redraws consume PRNG states like any
other draw, which keeps replay logs auditable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

MASK64 = (1 << 64) - 1

CATEGORIES = ("destruction", "pristine")


def splitmix64_next(state: int) -> tuple[int, int]:
    """One step of the published SplitMix64 recurrence: (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, (z ^ (z >> 31)) & MASK64


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


class CatalogError(ValueError):
    """Catalog file failed validation; the message names the offending entry."""


@dataclass(frozen=True)
class Prompt:
    text: str
    negative: str = ""
    weight: float = 1.0
    category: str = "destruction"


@dataclass(frozen=True)
class PromptCatalog:
    destruction: tuple[Prompt, ...]
    pristine: tuple[Prompt, ...]

    def entries(self, category: str) -> tuple[Prompt, ...]:
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        return getattr(self, category)


@dataclass(frozen=True)
class SchedulerState:
    rng_state: int
    last_index: dict[str, int] = field(default_factory=dict)


def parse_catalog(text: str) -> PromptCatalog:
    """Parse the JSON prompt catalog, filling defaults and validating entries."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CatalogError("catalog root must be an object")

    parsed: dict[str, tuple[Prompt, ...]] = {}
    for category in CATEGORIES:
        raw = doc.get(category)
        if not raw:
            raise CatalogError(f"{category}: empty category")
        if not isinstance(raw, list):
            raise CatalogError(f"{category}: must be a list")
        entries = []
        for i, item in enumerate(raw):
            if not isinstance(item, dict):
                raise CatalogError(f"{category}[{i}]: entry must be an object")
            text_val = item.get("text")
            if not isinstance(text_val, str) or not text_val:
                raise CatalogError(f"{category}[{i}]: text must be a nonempty string")
            negative = item.get("negative", "")
            if not isinstance(negative, str):
                raise CatalogError(f"{category}[{i}]: negative must be a string")
            weight = item.get("weight", 1.0)
            if not isinstance(weight, (int, float)) or isinstance(weight, bool) or weight <= 0:
                raise CatalogError(f"{category}[{i}]: weight must be > 0")
            entries.append(Prompt(text=text_val, negative=negative, weight=float(weight), category=category))
        parsed[category] = tuple(entries)
    return PromptCatalog(destruction=parsed["destruction"], pristine=parsed["pristine"])


def load_catalog_file(path: str) -> PromptCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_catalog(fh.read())


def load_default_catalog() -> PromptCatalog:
    """The starter catalog shipped with the package."""
    text = resources.files("gazeforge").joinpath("data/catalog.json").read_text("utf-8")
    return parse_catalog(text)


def next_prompt(
    catalog: PromptCatalog, category: str, state: SchedulerState
) -> tuple[Prompt, SchedulerState]:
    """Weighted draw from a category, redrawing on an immediate repeat."""
    entries = catalog.entries(category)
    if not entries:
        raise ValueError(f"{category}: empty category")
    total = 0.0
    for p in entries:
        total += p.weight
    last = state.last_index.get(category)
    rng = state.rng_state
    while True:
        rng, out = splitmix64_next(rng)
        u = out / 2.0**64
        x = u * total
        cum = 0.0
        idx = len(entries) - 1
        for i, p in enumerate(entries):
            cum += p.weight
            if x < cum:
                idx = i
                break
        if last is None or len(entries) == 1 or idx != last:
            break
    new_last = dict(state.last_index)
    new_last[category] = idx
    return entries[idx], SchedulerState(rng_state=rng, last_index=new_last)
