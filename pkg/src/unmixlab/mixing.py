"""Forward spectral mixing simulators.

All four models map a per-pixel abundance vector ``a`` and the endmember
matrix ``M`` to a spectrum, writing ``x = M a`` for the linear mixture:

* LMM:   ``y = x``
* GBM:   ``y = x + sum_{i<j} gamma_ij a_i a_j (m_i * m_j)`` (generalized
  bilinear; BMM is accepted as an alias)
* PNMM:  ``y = x + b * x * x``
* MLM:   ``y = (1 - P) x / (1 - P x)`` elementwise, P in [0, 1)

Simulated spectra are not clipped; normalization happens downstream.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import DataError
from .types import AbundanceMap, EndmemberMatrix, MixingModelSpec, SpectralCube

SIMPLEX_TOL = 1e-6


def _check_simplex(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise DataError(f"abundance vector must be 1-D, got shape {a.shape}")
    if a.min() < -SIMPLEX_TOL or abs(a.sum() - 1.0) > SIMPLEX_TOL:
        raise DataError(f"abundance vector off the simplex: {a}")
    return a


def pair_indices(count: int) -> list[tuple[int, int]]:
    """Upper-triangle (i, j) pairs in the order gamma coefficients are stored."""
    return [(i, j) for i in range(count) for j in range(i + 1, count)]


def _bilinear_term(a: np.ndarray, m: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    pairs = pair_indices(a.shape[0])
    if gamma.shape[0] != len(pairs):
        raise DataError(f"expected {len(pairs)} gamma coefficients, got {gamma.shape[0]}")
    out = np.zeros(m.shape[0])
    for g, (i, j) in zip(gamma, pairs):
        out += g * a[i] * a[j] * (m[:, i] * m[:, j])
    return out


def mlm_transform(x: np.ndarray, p) -> np.ndarray:
    """Multilinear map ``(1-P)x / (1-Px)``; keeps [0,1] when x and P do."""
    return (1.0 - p) * x / (1.0 - p * x)


def mix_pixel(a, M: EndmemberMatrix, spec: MixingModelSpec) -> np.ndarray:
    """Forward-mix one pixel.  Nonlinearity parameters come from ``spec``.

    For per-pixel sampled parameters use :func:`mix_cube`; this function
    requires them to be explicit.
    """
    a = _check_simplex(a)
    m = M.signatures
    if a.shape[0] != M.num_endmembers:
        raise DataError(f"{a.shape[0]}-endmember abundance vs {M.num_endmembers}-column matrix")
    x = m @ a
    if spec.kind == "LMM":
        return x
    if spec.kind == "GBM":
        if spec.gamma is None:
            raise DataError("mix_pixel needs explicit gamma for GBM (per-pixel draws live in mix_cube)")
        return x + _bilinear_term(a, m, spec.gamma)
    if spec.kind == "PNMM":
        return x + spec.b * x * x
    if spec.kind == "MLM":
        if spec.p is None:
            raise DataError("mix_pixel needs explicit p for MLM (per-pixel draws live in mix_cube)")
        return mlm_transform(x, spec.p)
    raise DataError(f"unhandled mixing model kind {spec.kind!r}")


def _per_pixel_params(spec: MixingModelSpec, h: int, w: int, num_pairs: int):
    """Vectorized per-pixel parameter draws; deterministic in spec.seed."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "GBM":
        return rng.uniform(0.0, 1.0, size=(h, w, num_pairs))
    if spec.kind == "MLM":
        return rng.uniform(0.0, 0.5, size=(h, w))
    return None


def mix_cube(A: AbundanceMap, M: EndmemberMatrix, spec: MixingModelSpec) -> SpectralCube:
    """Forward-mix a whole abundance map into a reflectance cube.

    With ``spec.per_pixel`` (default), GBM gamma coefficients are drawn
    Uniform[0,1] and MLM P Uniform[0,0.5] independently per pixel from
    ``spec.seed``; PNMM b is always a fixed per-scene scalar.  Identical
    (A, M, spec) inputs give identical cubes.
    """
    if A.num_endmembers != M.num_endmembers:
        raise DataError(
            f"abundance has {A.num_endmembers} endmembers, matrix has {M.num_endmembers}"
        )
    if M.num_endmembers < 2:
        raise DataError("mixing needs at least two endmembers")
    a = A.data
    m = M.signatures
    h, w, r = a.shape
    x = np.einsum("hwr,lr->hwl", a, m)

    if spec.kind == "LMM":
        y = x
    elif spec.kind == "PNMM":
        y = x + spec.b * x * x
    elif spec.kind == "GBM":
        pairs = pair_indices(r)
        if spec.per_pixel:
            gamma = _per_pixel_params(spec, h, w, len(pairs))
        else:
            gamma = np.broadcast_to(spec.gamma, (h, w, len(pairs)))
        y = x.copy()
        for k, (i, j) in enumerate(pairs):
            y += (gamma[:, :, k] * a[:, :, i] * a[:, :, j])[:, :, None] * (
                m[:, i] * m[:, j]
            )[None, None, :]
    elif spec.kind == "MLM":
        p = _per_pixel_params(spec, h, w, 0) if spec.per_pixel else np.full((h, w), spec.p)
        y = mlm_transform(x, p[:, :, None])
    else:
        raise DataError(f"unhandled mixing model kind {spec.kind!r}")

    provenance = f"model={spec.kind} seed={spec.seed} per_pixel={spec.per_pixel}"
    return SpectralCube(y, provenance=provenance)


def add_noise(cube: SpectralCube, snr_db: float, seed: int = 0) -> SpectralCube:
    """Add i.i.d. zero-mean Gaussian noise at the requested SNR.

    Noise variance is ``mean(signal^2) / 10^(snr_db/10)``.  An infinite
    ``snr_db`` is the no-noise sentinel and returns the cube unchanged
    (annotated).  Deterministic per seed.
    """
    if np.isnan(snr_db):
        raise DataError("snr_db must not be NaN")
    if np.isinf(snr_db):
        return SpectralCube(cube.data.copy(), snr_db=float("inf"), provenance=cube.provenance)
    signal_power = float(np.mean(cube.data**2))
    sigma = np.sqrt(signal_power / (10.0 ** (snr_db / 10.0)))
    rng = np.random.default_rng(seed)
    noisy = cube.data + rng.normal(0.0, sigma, size=cube.data.shape)
    provenance = cube.provenance + (" " if cube.provenance else "") + f"snr_db={snr_db:g} noise_seed={seed}"
    return SpectralCube(noisy, snr_db=float(snr_db), provenance=provenance)


def empirical_snr_db(clean: SpectralCube, noisy: SpectralCube) -> float:
    """Realized SNR in dB: 10 log10(mean(signal^2) / mean(noise^2))."""
    noise = noisy.data - clean.data
    return float(10.0 * np.log10(np.mean(clean.data**2) / np.mean(noise**2)))


def tile_pure_pixels(
    M: EndmemberMatrix, assignment: np.ndarray, spec: Optional[MixingModelSpec] = None
) -> SpectralCube:
    """Cube whose pixel (r, c) is the pure spectrum of ``assignment[r, c]``."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.ndim != 2:
        raise DataError(f"assignment must be 2-D, got {assignment.shape}")
    eye = np.eye(M.num_endmembers)
    amap = AbundanceMap(eye[assignment])
    return mix_cube(amap, M, spec or MixingModelSpec("LMM"))
