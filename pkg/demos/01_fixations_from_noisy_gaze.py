"""Fixation detection walkthrough.

Synthesizes a noisy gaze path that dwells on three spots, runs the
dispersion-threshold detector, and plots the raw samples with the detected
fixations on top. Output: demos/out/fixations.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gazeforge import FixationParams, GazeSample, detect_fixations

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(42)

# a viewer scans: dwell, saccade, dwell, saccade, dwell
samples = []
t = 0.0
for cx, cy, dwell_ms in ((0.25, 0.3, 900), (0.7, 0.35, 700), (0.5, 0.75, 1100)):
    stop = t + dwell_ms
    while t < stop:
        t += rng.integers(25, 40)
        samples.append(
            GazeSample(t, cx + rng.normal(0, 0.008), cy + rng.normal(0, 0.008), True)
        )
    # saccade: a couple of fast transit samples the detector should discard
    for _ in range(3):
        t += 30
        samples.append(GazeSample(t, rng.random(), rng.random(), True))

params = FixationParams()  # dispersion 0.05, min duration 150 ms, smoothing 3
fixations = detect_fixations(samples, params)

print(f"{len(samples)} samples -> {len(fixations)} fixations")
for f in fixations:
    print(f"  centroid ({f.cx:.3f}, {f.cy:.3f})  dwell {f.duration_ms:.0f} ms  n={f.n}")

fig, ax = plt.subplots(figsize=(6, 6))
xs = [s.x for s in samples if s.valid]
ys = [s.y for s in samples if s.valid]
ax.plot(xs, ys, ".-", color="lightgray", linewidth=0.5, markersize=3, label="gaze samples")
for f in fixations:
    ax.add_patch(plt.Circle((f.cx, f.cy), 0.03, fill=False, color="crimson", linewidth=2))
    ax.annotate(f"{f.duration_ms:.0f} ms", (f.cx + 0.035, f.cy), color="crimson")
ax.set_xlim(0, 1)
ax.set_ylim(1, 0)
ax.set_title("I-DT fixations on a synthetic scanpath")
ax.legend(loc="lower right")
fig.savefig(OUT / "fixations.png", dpi=120, bbox_inches="tight")
print(f"wrote {OUT / 'fixations.png'}")
