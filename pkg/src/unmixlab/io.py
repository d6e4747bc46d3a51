"""File I/O: endmember libraries (CSV), cubes and abundance maps (binary).

Cube files: magic ``HSC1``, little-endian uint32 height/width/bands, then
height*width*bands float32 values in row-major (row, col, band) order, then a
uint16-length-prefixed UTF-8 provenance string.  Abundance files use magic
``ABN1`` with the endmember count in place of the band count.
"""

from __future__ import annotations

import csv
import struct
import warnings
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image, PngImagePlugin

from .errors import CorruptFileError, DataError
from .types import AbundanceMap, EndmemberMatrix, SpectralCube

CUBE_MAGIC = b"HSC1"
ABUNDANCE_MAGIC = b"ABN1"

_HEADER = struct.Struct("<III")
_PROVENANCE_LEN = struct.Struct("<H")


class ConstantCubeWarning(UserWarning):
    """Raised when a constant cube is normalized (output is all zeros)."""


def load_endmember_library(path: Union[str, Path], selection: Sequence[str]) -> EndmemberMatrix:
    """Read named signatures from a plain-text CSV spectral library.

    The file has one row per wavelength: first column the wavelength in nm,
    remaining columns one named signature each.  ``selection`` picks columns,
    in order; duplicates are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"endmember library not found: {path}")
    selection = [str(s) for s in selection]
    if len(set(selection)) != len(selection):
        raise DataError(f"duplicate names in selection: {selection}")

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorruptFileError(f"empty library file: {path}") from None
        names = [h.strip() for h in header[1:]]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CorruptFileError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise CorruptFileError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise CorruptFileError(f"library has no data rows: {path}")

    table = np.asarray(rows, dtype=np.float64)
    wavelengths = table[:, 0]
    index = {n: i for i, n in enumerate(names)}
    missing = [s for s in selection if s not in index]
    if missing:
        raise DataError(f"names not in library {path.name}: {missing} (available: {names})")
    cols = np.array([index[s] + 1 for s in selection])
    return EndmemberMatrix(table[:, cols], tuple(selection), wavelengths)


def normalize_cube(cube: SpectralCube) -> SpectralCube:
    """Rescale a cube so the global minimum maps to 0 and the maximum to 1.

    Scaling is whole-cube, not per-band, so relative spectral shape is kept.
    A constant cube maps to all zeros and emits :class:`ConstantCubeWarning`.
    """
    lo = float(cube.data.min())
    hi = float(cube.data.max())
    if hi == lo:
        warnings.warn("constant cube normalized to all zeros", ConstantCubeWarning)
        data = np.zeros_like(cube.data)
    else:
        data = (cube.data - lo) / (hi - lo)
    return SpectralCube(data, snr_db=cube.snr_db, provenance=cube.provenance)


def _write_array_file(path: Path, magic: bytes, data: np.ndarray, provenance: str) -> None:
    payload = np.ascontiguousarray(data, dtype="<f4")
    blob = provenance.encode("utf-8")
    if len(blob) > 0xFFFF:
        raise DataError(f"provenance string too long to serialize ({len(blob)} bytes)")
    with path.open("wb") as fh:
        fh.write(magic)
        fh.write(_HEADER.pack(*data.shape))
        fh.write(payload.tobytes())
        fh.write(_PROVENANCE_LEN.pack(len(blob)))
        fh.write(blob)


def _read_array_file(path: Path, magic: bytes) -> tuple[np.ndarray, str]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 4 + _HEADER.size:
        raise CorruptFileError(f"{path}: truncated header")
    if raw[:4] != magic:
        raise CorruptFileError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")
    h, w, c = _HEADER.unpack_from(raw, 4)
    offset = 4 + _HEADER.size
    nbytes = h * w * c * 4
    if len(raw) < offset + nbytes + _PROVENANCE_LEN.size:
        raise CorruptFileError(
            f"{path}: payload shorter than header promises ({h}x{w}x{c})"
        )
    data = np.frombuffer(raw, dtype="<f4", count=h * w * c, offset=offset)
    data = data.reshape(h, w, c).astype(np.float64)
    offset += nbytes
    (plen,) = _PROVENANCE_LEN.unpack_from(raw, offset)
    offset += _PROVENANCE_LEN.size
    if len(raw) != offset + plen:
        raise CorruptFileError(f"{path}: trailing or missing provenance bytes")
    provenance = raw[offset:].decode("utf-8")
    return data, provenance


def save_cube(path: Union[str, Path], cube: SpectralCube) -> None:
    _write_array_file(Path(path), CUBE_MAGIC, cube.data, cube.provenance)


def load_cube(path: Union[str, Path]) -> SpectralCube:
    data, provenance = _read_array_file(Path(path), CUBE_MAGIC)
    return SpectralCube(data, provenance=provenance)


def save_abundance(path: Union[str, Path], amap: AbundanceMap) -> None:
    _write_array_file(Path(path), ABUNDANCE_MAGIC, amap.data, amap.provenance)


def load_abundance(path: Union[str, Path]) -> AbundanceMap:
    data, provenance = _read_array_file(Path(path), ABUNDANCE_MAGIC)
    return AbundanceMap(data, provenance=provenance)


def bundled_library_path() -> Path:
    """Path of the packaged 420-band, five-signature demo library.

    The signatures are synthetic smooth spectra standing in for library
    minerals, suitable for tests and demos; converted field libraries
    load through :func:`load_endmember_library` the same way.
    """
    with resources.as_file(
        resources.files("unmixlab").joinpath("data/endmembers_420x5.csv")
    ) as path:
        return Path(path)


def save_abundance_png(
    path: Union[str, Path],
    amap: AbundanceMap,
    channel: int,
    annotation: Optional[str] = None,
) -> None:
    """Render one abundance channel as an 8-bit grayscale PNG.

    Values are clipped to [0, 1] and scaled to 0-255.  ``annotation``
    (typically a manifest hash) is stored in a PNG text chunk.
    """
    if not 0 <= channel < amap.num_endmembers:
        raise DataError(f"channel {channel} out of range for {amap.num_endmembers} endmembers")
    plane = np.clip(amap.data[:, :, channel], 0.0, 1.0)
    image = Image.fromarray(np.round(plane * 255.0).astype(np.uint8), mode="L")
    info = PngImagePlugin.PngInfo()
    if annotation:
        info.add_text("provenance", annotation)
    image.save(Path(path), pnginfo=info)
