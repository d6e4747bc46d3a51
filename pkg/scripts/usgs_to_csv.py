"""Convert USGS spectral-library ASCII records to the toolkit's CSV layout.

Each input file is one signature exported from the library software as
plain text: a header line (kept as the signature name unless --name is
given) followed by one reflectance value per line, with the deleted-band
sentinel -1.23e34 marked invalid.  All inputs are resampled onto a common
wavelength grid and written as a single CSV: first column wavelength in
nm, remaining columns one named signature each.

Usage:
    python3 scripts/usgs_to_csv.py out.csv alunite.txt calcite.txt ... \
        --wavelengths wavelengths.txt [--clip 0 1]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

SENTINEL = -1.23e34


def read_record(path: Path) -> tuple[str, np.ndarray]:
    lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    if not lines:
        raise SystemExit(f"{path}: empty file")
    name = lines[0].strip() or path.stem
    values = []
    for line in lines[1:]:
        line = line.strip()
        if not line:
            continue
        values.append(float(line))
    data = np.asarray(values)
    data[np.isclose(data, SENTINEL, rtol=1e-3)] = np.nan
    return name, data


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", type=Path)
    parser.add_argument("records", nargs="+", type=Path)
    parser.add_argument(
        "--wavelengths",
        type=Path,
        required=True,
        help="text file with one wavelength (micrometers or nm) per line",
    )
    parser.add_argument("--name", action="append", default=[], help="override signature names, in order")
    parser.add_argument("--clip", nargs=2, type=float, default=(0.0, 1.0))
    args = parser.parse_args(argv)

    wavelengths = np.loadtxt(args.wavelengths, ndmin=1)
    if wavelengths.max() < 100:  # micrometers -> nm
        wavelengths = wavelengths * 1000.0

    columns, names = [], []
    for i, record in enumerate(args.records):
        name, data = read_record(record)
        if i < len(args.name):
            name = args.name[i]
        if data.shape != wavelengths.shape:
            raise SystemExit(
                f"{record}: {data.size} samples vs {wavelengths.size} wavelengths"
            )
        valid = ~np.isnan(data)
        data = np.interp(wavelengths, wavelengths[valid], data[valid])
        columns.append(np.clip(data, *args.clip))
        names.append(name)

    lines = ["wavelength_nm," + ",".join(names)]
    for i, wl in enumerate(wavelengths):
        lines.append(f"{wl:.2f}," + ",".join(f"{c[i]:.6f}" for c in columns))
    args.output.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.output} ({wavelengths.size} bands x {len(names)} signatures)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
