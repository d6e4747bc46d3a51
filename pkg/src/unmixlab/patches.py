"""Overlapping patch extraction and overlap-averaged stitching.

Training and inference run on square patches cut from the cube on a regular
stride grid; a final patch per axis is clamped to the image boundary so every
pixel is covered without padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DataError
from .types import FloatArray, SpectralCube


def patch_origins(extent: int, size: int, stride: int) -> list[int]:
    """1-D origin grid: multiples of ``stride`` plus a clamped final origin."""
    if extent < size:
        raise DataError(f"extent {extent} smaller than patch size {size}")
    origins = list(range(0, extent - size + 1, stride))
    if origins[-1] != extent - size:
        origins.append(extent - size)
    return origins


@dataclass(frozen=True)
class PatchSet:
    """Stack of square patches plus their origin grid."""

    patches: FloatArray               # (count, size, size, channels)
    origins: tuple[tuple[int, int], ...]
    stride: int
    source_shape: tuple[int, int]     # (height, width) of the source image

    def __post_init__(self):
        arr = np.asarray(self.patches, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[1] != arr.shape[2]:
            raise DataError(f"patches must be (count, size, size, channels), got {arr.shape}")
        object.__setattr__(self, "patches", arr)
        object.__setattr__(self, "origins", tuple((int(r), int(c)) for r, c in self.origins))
        if len(self.origins) != arr.shape[0]:
            raise DataError(f"{len(self.origins)} origins for {arr.shape[0]} patches")
        size = arr.shape[1]
        h, w = self.source_shape
        rows = sorted({r for r, _ in self.origins})
        cols = sorted({c for _, c in self.origins})
        for axis_vals, extent in ((rows, h), (cols, w)):
            for v in axis_vals:
                if v < 0 or v + size > extent:
                    raise DataError(f"patch at origin {v} leaves the {extent}-pixel image")
            # regular stride grid, except a final clamped origin
            diffs = [b - a for a, b in zip(axis_vals, axis_vals[1:])]
            for d in diffs[:-1]:
                if d != self.stride:
                    raise DataError(f"origins {axis_vals} do not follow stride {self.stride}")
            if diffs and not (0 < diffs[-1] <= self.stride):
                raise DataError(f"final origin in {axis_vals} is not a boundary clamp")

    @property
    def size(self) -> int:
        return int(self.patches.shape[1])

    @property
    def count(self) -> int:
        return int(self.patches.shape[0])


def extract_patches(
    cube: Union[SpectralCube, np.ndarray],
    size: int = 32,
    overlap_fraction: Union[float, Fraction] = Fraction(1, 3),
) -> PatchSet:
    """Cut overlapping ``size`` x ``size`` patches covering the whole image.

    The stride is ``round(size * (1 - overlap_fraction))``; the last patch per
    axis is clamped to the boundary rather than padded, so every pixel falls
    inside at least one patch.
    """
    data = cube.data if isinstance(cube, SpectralCube) else np.asarray(cube, dtype=np.float64)
    if data.ndim != 3:
        raise DataError(f"expected (height, width, channels) array, got shape {data.shape}")
    h, w, _ = data.shape
    if size < 1:
        raise DataError(f"patch size must be >= 1, got {size}")
    if h < size or w < size:
        raise DataError(f"cube {h}x{w} smaller than patch size {size}")
    stride = int(round(size * (1.0 - float(overlap_fraction))))
    if stride < 1:
        raise DataError(f"overlap fraction {overlap_fraction} leaves a non-positive stride")

    row_origins = patch_origins(h, size, stride)
    col_origins = patch_origins(w, size, stride)
    origins = [(r, c) for r in row_origins for c in col_origins]
    stack = np.stack([data[r : r + size, c : c + size, :] for r, c in origins])
    return PatchSet(stack, tuple(origins), stride, (h, w))


def stitch_average(
    patches: np.ndarray,
    origins: tuple[tuple[int, int], ...],
    shape: tuple[int, int],
) -> np.ndarray:
    """Blend per-patch predictions back to image shape by overlap averaging."""
    patches = np.asarray(patches, dtype=np.float64)
    count, size, _, channels = patches.shape
    if count != len(origins):
        raise DataError(f"{count} patches for {len(origins)} origins")
    acc = np.zeros((shape[0], shape[1], channels))
    hits = np.zeros((shape[0], shape[1], 1))
    for patch, (r, c) in zip(patches, origins):
        acc[r : r + size, c : c + size, :] += patch
        hits[r : r + size, c : c + size, :] += 1.0
    if np.any(hits == 0):
        raise DataError("stitch target has uncovered pixels")
    return acc / hits
