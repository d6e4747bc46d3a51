"""Regenerate the packaged demo endmember library.

Writes src/unmixlab/data/endmembers_420x5.csv: 420 bands (400-2500 nm),
five synthetic smooth signatures named after common library minerals.
The file is deterministic; rerunning this script reproduces it exactly.
"""

from pathlib import Path

from unmixlab.scene import synthetic_endmembers

NAMES = ("Alunite", "Calcite", "Epidote", "Kaolinite", "Buddingtonite")
OUT = Path(__file__).resolve().parents[1] / "src" / "unmixlab" / "data" / "endmembers_420x5.csv"


def main() -> None:
    library = synthetic_endmembers(NAMES, num_bands=420, seed=7)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    lines = ["wavelength_nm," + ",".join(library.names)]
    for i in range(library.num_bands):
        row = [f"{library.wavelengths[i]:.2f}"]
        row += [f"{library.signatures[i, j]:.6f}" for j in range(library.num_endmembers)]
        lines.append(",".join(row))
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({library.num_bands} bands x {library.num_endmembers} signatures)")


if __name__ == "__main__":
    main()
