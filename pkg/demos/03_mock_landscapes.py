"""A gallery of mock-backend "landscapes".

The mock diffusion backend renders smooth deterministic color fields from
(prompt, seed): same inputs, same bytes, on any machine. This grid shows a
few prompts at a few seeds. Output: demos/out/mock_gallery.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gazeforge import GenerateRequest, MockBackend, image_hash

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

backend = MockBackend()
prompts = ["alpine valley at dawn", "flooded lowlands", "industrial zone"]
seeds = [1, 2, 3, 4]

fig, axes = plt.subplots(len(prompts), len(seeds), figsize=(10, 7.5))
for row, prompt in enumerate(prompts):
    for col, seed in enumerate(seeds):
        img = backend.generate(GenerateRequest(prompt=prompt, seed=seed, width=192, height=192))
        axes[row, col].imshow(img.pixels)
        axes[row, col].set_xticks([])
        axes[row, col].set_yticks([])
        if col == 0:
            axes[row, col].set_ylabel(prompt, fontsize=8)
        axes[row, col].set_title(f"seed {seed} · {image_hash(img)[:8]}", fontsize=7)
fig.suptitle("mock backend: deterministic color fields stand in for diffusion output")
fig.savefig(OUT / "mock_gallery.png", dpi=120, bbox_inches="tight")
print(f"wrote {OUT / 'mock_gallery.png'}")
