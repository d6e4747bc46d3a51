"""Core data containers: endmember libraries, reflectance cubes, abundance maps.

Shapes follow the remote-sensing convention: cubes are (height, width, bands),
abundance maps are (height, width, endmembers), and an endmember matrix is
(bands, endmembers) so that a linear mixture is ``signatures @ a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DataError

FloatArray = NDArray[np.floating]

SUM_TO_ONE_TOL = 1e-6


def _as_float_array(x, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != ndim:
        raise DataError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class EndmemberMatrix:
    """Library of pure-material reflectance signatures, one per column."""

    signatures: FloatArray            # (bands, endmembers), entries in [0, 1]
    names: tuple[str, ...]
    wavelengths: Optional[FloatArray] = None   # (bands,) in nm

    def __post_init__(self):
        sig = _as_float_array(self.signatures, "signatures", 2)
        object.__setattr__(self, "signatures", sig)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        bands, count = sig.shape
        if count < 1:
            raise DataError("endmember matrix needs at least one column")
        if len(self.names) != count:
            raise DataError(f"{len(self.names)} names for {count} signatures")
        if len(set(self.names)) != count:
            raise DataError("endmember names must be unique")
        if bands < count:
            raise DataError(f"need at least as many bands ({bands}) as endmembers ({count})")
        if sig.min() < 0.0 or sig.max() > 1.0:
            raise DataError("signatures must lie in [0, 1]")
        for i in range(count):
            for j in range(i + 1, count):
                if np.array_equal(sig[:, i], sig[:, j]):
                    raise DataError(f"duplicate signatures: {self.names[i]!r} and {self.names[j]!r}")
        if self.wavelengths is not None:
            wl = _as_float_array(self.wavelengths, "wavelengths", 1)
            if wl.shape[0] != bands:
                raise DataError(f"{wl.shape[0]} wavelengths for {bands} bands")
            object.__setattr__(self, "wavelengths", wl)

    @property
    def num_bands(self) -> int:
        return self.signatures.shape[0]

    @property
    def num_endmembers(self) -> int:
        return self.signatures.shape[1]

    def select(self, names: Sequence[str]) -> "EndmemberMatrix":
        """Sub-library with the given columns, in the given order."""
        index = {n: i for i, n in enumerate(self.names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise DataError(f"unknown endmember name(s): {missing}")
        cols = [index[n] for n in names]
        return EndmemberMatrix(self.signatures[:, cols], tuple(names), self.wavelengths)


@dataclass
class SpectralCube:
    """Reflectance cube (height, width, bands) plus provenance annotations."""

    data: FloatArray
    snr_db: Optional[float] = None    # noise annotation; None = not annotated
    provenance: str = ""

    def __post_init__(self):
        self.data = _as_float_array(self.data, "cube data", 3)
        h, w, _ = self.data.shape
        if h < 1 or w < 1:
            raise DataError(f"cube spatial dims must be >= 1, got {self.data.shape}")
        if self.snr_db is not None:
            self.snr_db = float(self.snr_db)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def num_bands(self) -> int:
        return self.data.shape[2]

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return self.data.min() >= -tol and self.data.max() <= 1.0 + tol


@dataclass
class AbundanceMap:
    """Per-pixel endmember fractions (height, width, endmembers) on the simplex."""

    data: FloatArray
    provenance: str = ""

    def __post_init__(self):
        self.data = _as_float_array(self.data, "abundance data", 3)
        if self.data.min() < -SUM_TO_ONE_TOL:
            raise DataError(f"abundances must be nonnegative (min {self.data.min():.3g})")
        sums = self.data.sum(axis=2)
        worst = float(np.abs(sums - 1.0).max())
        if worst > SUM_TO_ONE_TOL:
            raise DataError(f"abundances must sum to one per pixel (worst deviation {worst:.3g})")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def num_endmembers(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class MixingModelSpec:
    """Forward mixing model selector with its nonlinearity parameters.

    ``gamma`` (pairwise interaction strengths, GBM), ``b`` (quadratic
    coefficient, PNMM) and ``p`` (multiple-scattering probability, MLM) are
    only meaningful for their own model kind.  With ``per_pixel=True`` (the
    default) GBM gamma and MLM p are drawn per pixel from ``seed`` by
    ``mix_cube``; explicit values and per-pixel sampling are mutually
    exclusive.  ``b`` is always a fixed per-scene scalar.
    """

    kind: str                         # LMM | GBM | PNMM | MLM (BMM = alias of GBM)
    gamma: Optional[FloatArray] = None   # (R*(R-1)/2,) upper-triangle order, each in [0, 1]
    b: Optional[float] = None
    p: Optional[float] = None
    per_pixel: bool = True
    seed: int = 0

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind == "BMM":
            kind = "GBM"
        if kind not in {"LMM", "GBM", "PNMM", "MLM"}:
            raise DataError(f"unknown mixing model kind: {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))

        if self.gamma is not None:
            if kind != "GBM":
                raise DataError(f"gamma is only valid for GBM, not {kind}")
            g = _as_float_array(self.gamma, "gamma", 1)
            if g.min() < 0.0 or g.max() > 1.0:
                raise DataError("gamma coefficients must lie in [0, 1]")
            object.__setattr__(self, "gamma", g)
        if self.b is not None:
            if kind != "PNMM":
                raise DataError(f"b is only valid for PNMM, not {kind}")
            if not np.isfinite(self.b):
                raise DataError("b must be finite")
            object.__setattr__(self, "b", float(self.b))
        if self.p is not None:
            if kind != "MLM":
                raise DataError(f"p is only valid for MLM, not {kind}")
            if not np.isfinite(self.p) or not (0.0 <= self.p < 1.0):
                raise DataError(f"p must lie in [0, 1), got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        if kind == "PNMM" and self.b is None:
            raise DataError("PNMM requires the polynomial coefficient b")
        if kind == "GBM" and not self.per_pixel and self.gamma is None:
            raise DataError("GBM with per_pixel=False requires explicit gamma")
        if kind == "MLM" and not self.per_pixel and self.p is None:
            raise DataError("MLM with per_pixel=False requires explicit p")
        if kind == "GBM" and self.per_pixel and self.gamma is not None:
            raise DataError("explicit gamma and per_pixel sampling are mutually exclusive")
        if kind == "MLM" and self.per_pixel and self.p is not None:
            raise DataError("explicit p and per_pixel sampling are mutually exclusive")

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "gamma": None if self.gamma is None else [float(g) for g in self.gamma],
            "b": self.b,
            "p": self.p,
            "per_pixel": self.per_pixel,
            "seed": self.seed,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "MixingModelSpec":
        known = {"kind", "gamma", "b", "p", "per_pixel", "seed"}
        unknown = set(cfg) - known
        if unknown:
            raise DataError(f"unknown mixing-model config keys: {sorted(unknown)}")
        if "kind" not in cfg:
            raise DataError("mixing-model config needs a 'kind'")
        return cls(
            kind=cfg["kind"],
            gamma=None if cfg.get("gamma") is None else np.asarray(cfg["gamma"], dtype=np.float64),
            b=cfg.get("b"),
            p=cfg.get("p"),
            per_pixel=bool(cfg.get("per_pixel", True)),
            seed=int(cfg.get("seed", 0)),
        )
