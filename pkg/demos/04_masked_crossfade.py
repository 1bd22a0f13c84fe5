"""The smooth transformation, frame by frame.

Inpaints a masked region of one mock landscape with another prompt, then
renders the masked smoothstep crossfade as a film strip. Outside the mask
nothing moves; inside, pixels glide monotonically to the new content.
Output: demos/out/crossfade_strip.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gazeforge import (
    CrossfadePlan,
    Fixation,
    GenerateRequest,
    Heatmap,
    InpaintRequest,
    MaskParams,
    MockBackend,
    commit,
    extract_mask,
    frame_at,
    splat,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

backend = MockBackend()
size = 256
scene = backend.generate(GenerateRequest(prompt="untouched valley", seed=9, width=size, height=size))

params = MaskParams(sigma_px=36.0)
heat = splat(Heatmap.zeros(size, size), Fixation(cx=0.6, cy=0.45, start_ms=0, end_ms=600, n=18), params)
mask = extract_mask(heat, params)

inpainted = backend.inpaint(
    InpaintRequest(prompt="open-pit mine", seed=77, source=scene, mask=mask, strength=0.95)
)
committed = commit(scene, inpainted, mask)
plan = CrossfadePlan(src=scene, dst=committed, mask=mask, n_frames=45)

steps = [0, 9, 18, 27, 36, 45]
fig, axes = plt.subplots(1, len(steps) + 1, figsize=(16, 3))
axes[0].imshow(mask.alpha, cmap="gray")
axes[0].set_title("mask", fontsize=9)
for ax, i in zip(axes[1:], steps):
    ax.imshow(frame_at(plan, i).pixels)
    ax.set_title(f"frame {i}/45", fontsize=9)
for ax in axes:
    ax.set_xticks([])
    ax.set_yticks([])
fig.savefig(OUT / "crossfade_strip.png", dpi=120, bbox_inches="tight")
print(f"wrote {OUT / 'crossfade_strip.png'}")
