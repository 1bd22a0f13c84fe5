"""From dwells to an inpainting mask.

Splats a few fixations into the attention heatmap, lets part of it decay,
extracts the feathered mask, and saves the three stages side by side.
Output: demos/out/heatmap_mask.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gazeforge import Fixation, Heatmap, MaskParams, area_fraction, decay, extract_mask, splat

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

params = MaskParams(sigma_px=28.0)  # a touch smaller than production for a 384px canvas
heat = Heatmap.zeros(384, 384)

# an early dwell that will have faded by the time the mask is cut
heat = splat(heat, Fixation(cx=0.25, cy=0.7, start_ms=0, end_ms=400, n=12), params)
faded = decay(heat, 2500, params)

# two fresh overlapping dwells: their sum saturates into one region
for fix in (
    Fixation(cx=0.62, cy=0.38, start_ms=2500, end_ms=2900, n=12),
    Fixation(cx=0.68, cy=0.42, start_ms=2950, end_ms=3400, n=14),
):
    faded = splat(faded, fix, params)

mask = extract_mask(faded, params)
print(f"mask area fraction: {area_fraction(mask):.4f}")

fig, axes = plt.subplots(1, 3, figsize=(13, 4.4))
axes[0].imshow(heat.values, cmap="inferno", vmin=0, vmax=1)
axes[0].set_title("splat at t=0")
axes[1].imshow(faded.values, cmap="inferno", vmin=0, vmax=1)
axes[1].set_title("decayed + two fresh dwells")
axes[2].imshow(mask.alpha, cmap="gray", vmin=0, vmax=1)
axes[2].set_title("feathered inpainting mask")
for ax in axes:
    ax.set_xticks([])
    ax.set_yticks([])
fig.savefig(OUT / "heatmap_mask.png", dpi=120, bbox_inches="tight")
print(f"wrote {OUT / 'heatmap_mask.png'}")
