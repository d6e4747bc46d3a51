"""Synthetic scene generation with spatial correlation.

The abundance recipe is the classical one for benchmarking unmixers:
tile the image into square blocks, assign each block a pure endmember
uniformly at random, low-pass the channels with a normalized box filter,
and renormalize every pixel onto the simplex.  Smoothing turns block
boundaries into genuinely mixed pixels while block interiors stay nearly
pure, giving the spatial correlation real scenes exhibit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError
from .mixing import add_noise, mix_cube
from .types import AbundanceMap, EndmemberMatrix, MixingModelSpec, SpectralCube


@dataclass(frozen=True)
class SceneRecipe:
    """Parameters of one synthetic scene.

    ``dirichlet_alpha`` is carried here because the same recipe seeds the
    abundance prior used elsewhere; ``generate_abundance`` itself only
    consumes the spatial fields.
    """

    height: int
    width: int
    endmember_names: Tuple[str, ...]
    block_size: int = 25
    smoothing_radius: int = 6
    dirichlet_alpha: Tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "endmember_names", tuple(self.endmember_names))
        alpha = tuple(float(a) for a in self.dirichlet_alpha) or (1.0,) * len(
            self.endmember_names
        )
        object.__setattr__(self, "dirichlet_alpha", alpha)
        if self.height < 1 or self.width < 1:
            raise ConfigError(f"scene extent must be positive, got {self.height}x{self.width}")
        if not self.endmember_names:
            raise ConfigError("recipe needs at least one endmember name")
        if len(set(self.endmember_names)) != len(self.endmember_names):
            raise ConfigError(f"duplicate endmember names: {self.endmember_names}")
        if self.block_size < 1:
            raise ConfigError(f"block_size must be >= 1, got {self.block_size}")
        if self.smoothing_radius < 0:
            raise ConfigError(f"smoothing_radius must be >= 0, got {self.smoothing_radius}")
        if self.smoothing_radius >= min(self.height, self.width):
            raise ConfigError(
                f"smoothing_radius {self.smoothing_radius} too large for "
                f"{self.height}x{self.width} scene"
            )
        if len(self.dirichlet_alpha) != len(self.endmember_names):
            raise ConfigError(
                f"dirichlet_alpha has {len(self.dirichlet_alpha)} entries for "
                f"{len(self.endmember_names)} endmembers"
            )
        if any(a <= 0.0 for a in self.dirichlet_alpha):
            raise ConfigError(f"dirichlet_alpha must be positive, got {self.dirichlet_alpha}")

    @property
    def num_endmembers(self) -> int:
        return len(self.endmember_names)


def generate_abundance(recipe: SceneRecipe) -> AbundanceMap:
    """Spatially correlated ground-truth abundances for ``recipe``.

    Blocks of ``block_size``² pixels each get one pure endmember; channels
    are then smoothed by a box filter of half-width ``smoothing_radius``
    (reflected at borders) and renormalized per pixel.  With radius 0 the
    map stays blockwise one-hot.  Deterministic in ``recipe.seed``.
    """
    h, w, r = recipe.height, recipe.width, recipe.num_endmembers
    rng = np.random.default_rng(recipe.seed)
    rows = -(-h // recipe.block_size)
    cols = -(-w // recipe.block_size)
    blocks = rng.integers(0, r, size=(rows, cols))
    assignment = np.repeat(np.repeat(blocks, recipe.block_size, axis=0), recipe.block_size, axis=1)
    assignment = assignment[:h, :w]
    abundance = smooth_simplex_field(np.eye(r)[assignment], recipe.smoothing_radius)
    return AbundanceMap(abundance, provenance=f"blocks={recipe.block_size} radius={recipe.smoothing_radius} seed={recipe.seed}")


def smooth_simplex_field(field: np.ndarray, radius: int) -> np.ndarray:
    """Box-filter an (H, W, R) simplex field spatially and renormalize.

    Each channel is low-passed with a ``2*radius+1`` square box filter
    (reflect padding) and every pixel is projected back onto the simplex
    by clipping at zero and renormalizing.  ``radius=0`` returns the
    input unchanged.  Strided convolutional encoders cannot propagate
    spatially white fields, so any abundance field fed to them should
    carry at least this much spatial correlation.
    """
    if radius <= 0:
        return field
    window = 2 * radius + 1
    smoothed = ndimage.uniform_filter(field, size=(window, window, 1), mode="reflect")
    smoothed = np.maximum(smoothed, 0.0)
    return smoothed / smoothed.sum(axis=2, keepdims=True)


def sample_dirichlet(
    alpha: Sequence[float],
    count: int,
    seed: Union[int, np.random.Generator] = 0,
) -> np.ndarray:
    """Draw ``count`` i.i.d. Dirichlet(alpha) vectors, shape (count, R).

    Uses the gamma-ratio construction: independent Gamma(alpha_i, 1)
    variates normalized by their sum.  Accepts a seed or an existing
    Generator (so training loops can share one stream).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size == 0:
        raise DataError(f"alpha must be a non-empty vector, got shape {alpha.shape}")
    if np.any(alpha <= 0.0) or not np.all(np.isfinite(alpha)):
        raise DataError(f"alpha must be positive and finite, got {alpha}")
    if count < 1:
        raise DataError(f"count must be >= 1, got {count}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    gammas = rng.standard_gamma(alpha, size=(count, alpha.size))
    totals = gammas.sum(axis=1, keepdims=True)
    # All-zero rows are theoretically possible for tiny alpha via underflow.
    while np.any(totals == 0.0):
        bad = totals[:, 0] == 0.0
        gammas[bad] = rng.standard_gamma(alpha, size=(int(bad.sum()), alpha.size))
        totals = gammas.sum(axis=1, keepdims=True)
    return gammas / totals


def synthesize_scene(
    recipe: SceneRecipe,
    M: EndmemberMatrix,
    spec: MixingModelSpec,
    snr_db: float = float("inf"),
) -> Tuple[SpectralCube, AbundanceMap]:
    """Full scene: abundances → forward mixing → sensor noise.

    Returns the (possibly noisy) cube and the noiseless ground-truth
    abundance.  The noise stream is seeded with ``recipe.seed + 1`` so it
    is decoupled from the block-assignment stream.
    """
    if recipe.num_endmembers != M.num_endmembers:
        raise ConfigError(
            f"recipe names {recipe.num_endmembers} endmembers, matrix has {M.num_endmembers}"
        )
    abundance = generate_abundance(recipe)
    cube = mix_cube(abundance, M, spec)
    if np.isfinite(snr_db):
        cube = add_noise(cube, snr_db, seed=recipe.seed + 1)
    else:
        cube = SpectralCube(cube.data, snr_db=float("inf"), provenance=cube.provenance)
    return cube, abundance


def synthetic_endmembers(
    names: Sequence[str],
    num_bands: int = 420,
    seed: int = 7,
    wavelengths: Optional[np.ndarray] = None,
) -> EndmemberMatrix:
    """Smooth, distinct reflectance signatures for tests and demos.

    Each signature is a seeded mixture of Gaussian bumps over a gentle
    baseline, rescaled into [0.05, 0.95]; spectra are continuous like
    library minerals but carry no physical meaning.
    """
    names = tuple(names)
    if num_bands < max(2, len(names)):
        raise ConfigError(f"{num_bands} bands cannot host {len(names)} distinct signatures")
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, num_bands)
    signatures = np.empty((num_bands, len(names)))
    for k in range(len(names)):
        centers = rng.uniform(0.0, 1.0, size=4)
        widths = rng.uniform(0.04, 0.25, size=4)
        heights = rng.uniform(0.3, 1.0, size=4)
        slope = rng.uniform(-0.5, 0.5)
        s = slope * grid + sum(
            h * np.exp(-0.5 * ((grid - c) / w) ** 2) for c, w, h in zip(centers, widths, heights)
        )
        s = (s - s.min()) / (s.max() - s.min())
        signatures[:, k] = 0.05 + 0.9 * s
    if wavelengths is None:
        wavelengths = np.linspace(400.0, 2500.0, num_bands)
    return EndmemberMatrix(signatures, names, wavelengths=np.asarray(wavelengths, dtype=np.float64))
