"""Synthetic scene generation and the binary cube/abundance file formats.

Builds a blocky ground-truth abundance map, smooths it into mixed
pixels, mixes it into a reflectance cube, and round-trips both arrays
through the on-disk formats plus PNG quicklooks.
"""

import tempfile
from pathlib import Path

import numpy as np

from unmixlab import (
    MixingModelSpec,
    SceneRecipe,
    load_abundance,
    load_cube,
    normalize_cube,
    save_abundance,
    save_abundance_png,
    save_cube,
    synthesize_scene,
    synthetic_endmembers,
)

names = ("alunite", "calcite", "kaolinite")
recipe = SceneRecipe(64, 64, names, block_size=16, smoothing_radius=4, seed=11)
library = synthetic_endmembers(names, num_bands=64, seed=3)
cube, truth = synthesize_scene(recipe, library, MixingModelSpec(kind="lmm"), snr_db=30.0)

purity = truth.data.max(axis=2)
print(f"scene: cube {cube.data.shape}, truth {truth.data.shape}")
print(f"pure pixels (max abundance > 0.9): {float((purity > 0.9).mean()):.2%}")
print(f"per-pixel sums within 1e-6 of 1: {bool(np.allclose(truth.data.sum(axis=2), 1.0, atol=1e-6))}")
print(f"annotated SNR: {cube.snr_db} dB")

# --- round-trip through the binary formats ---------------------------------
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    save_cube(out / "scene.hsc", cube)
    save_abundance(out / "scene.abn", truth)
    cube_back = load_cube(out / "scene.hsc")
    truth_back = load_abundance(out / "scene.abn")
    print(f"\ncube file: {(out / 'scene.hsc').stat().st_size / 1e6:.1f} MB, "
          f"max round-trip error {float(np.abs(cube_back.data - cube.data).max()):.1e}")
    print(f"truth round-trip exact: {bool(np.array_equal(truth_back.data, truth.data))}")

    for channel in range(truth.num_endmembers):
        save_abundance_png(out / f"truth_{names[channel]}.png", truth, channel)
    print(f"quicklooks written: {sorted(p.name for p in out.glob('*.png'))}")

# --- global min-max normalization for the trainer --------------------------
normalized = normalize_cube(cube)
print(f"\nnormalized range: [{normalized.data.min():.3f}, {normalized.data.max():.3f}] "
      f"(was [{cube.data.min():.3f}, {cube.data.max():.3f}])")
