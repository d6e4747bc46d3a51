"""Command-line entry point: the experiment pipeline as replayable runs.

Each subcommand reads one self-contained JSON config (sections per
concern), resolves overrides (flags beat config keys; the
``UNMIXLAB_SEED`` environment variable beats both), performs its step,
and writes a ``manifest.json`` recording the config hash, inputs,
outputs, seed, and wall clock.  Every emitted file references that hash:
binary formats in their provenance field, PNGs in a text chunk, CSV and
JSON outputs in a comment line or key.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .baselines import BASELINES
from .errors import ConfigError, DataError, NumericalError
from .io import (
    bundled_library_path,
    load_abundance,
    load_cube,
    load_endmember_library,
    normalize_cube,
    save_abundance,
    save_abundance_png,
    save_cube,
)
from .metrics import EvalReport, evaluate
from .mixing import add_noise, mix_cube
from .scene import SceneRecipe, synthesize_scene
from .trainer import TrainingConfig, config_hash, load_checkpoint, train, unmix_cube
from .types import AbundanceMap, EndmemberMatrix, MixingModelSpec, SpectralCube

SEED_ENV_VAR = "UNMIXLAB_SEED"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _load_config(path: Optional[str]) -> Dict[str, object]:
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {config_path}")
    try:
        payload = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{config_path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{config_path}: config must be a JSON object")
    return payload


def _resolve_seed(config: Dict[str, object], args: argparse.Namespace) -> int:
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(config.get("seed", 0))


def _seed_section(section: Dict[str, object], seed: int, forced: bool) -> Dict[str, object]:
    """Fill a section's seed from the run seed; env override wins everywhere."""
    section = dict(section)
    if forced or "seed" not in section:
        section["seed"] = seed
    return section


def _canonical_hash(payload: Dict[str, object]) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _out_dir(config: Dict[str, object], args: argparse.Namespace) -> Path:
    out = getattr(args, "out", None) or config.get("out_dir")
    if not out:
        raise ConfigError("no output directory: set 'out_dir' in the config or pass --out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_library(config: Dict[str, object], args: argparse.Namespace) -> EndmemberMatrix:
    section = config.get("library", {})
    if not isinstance(section, dict):
        raise ConfigError("'library' section must be an object")
    path = getattr(args, "endmembers", None) or section.get("path")
    if path in (None, "", "bundled"):
        path = bundled_library_path()
    selection = getattr(args, "select", None) or section.get("selection")
    if not selection:
        raise ConfigError("no endmember selection: set library.selection or pass --select")
    return load_endmember_library(path, list(selection))


def _mixing_spec(config: Dict[str, object], seed: int, forced: bool) -> MixingModelSpec:
    section = config.get("mixing", {"kind": "LMM"})
    if not isinstance(section, dict):
        raise ConfigError("'mixing' section must be an object")
    try:
        return MixingModelSpec.from_config(_seed_section(section, seed, forced))
    except DataError as exc:
        raise ConfigError(f"mixing section: {exc}") from exc


def _write_manifest(
    out_dir: Path,
    command: str,
    config: Dict[str, object],
    seed: int,
    inputs: Dict[str, str],
    outputs: Dict[str, str],
    started: float,
) -> str:
    run_hash = _canonical_hash(config)
    manifest = {
        "command": command,
        "config": config,
        "config_hash": run_hash,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "toolkit_version": __version__,
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return run_hash


def cmd_synth(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    seed = _resolve_seed(config, args)
    forced = os.environ.get(SEED_ENV_VAR) is not None or getattr(args, "seed", None) is not None
    out_dir = _out_dir(config, args)
    library = _load_library(config, args)

    scene_section = config.get("scene")
    if not isinstance(scene_section, dict):
        raise ConfigError("synth needs a 'scene' section")
    scene_section = _seed_section(scene_section, seed, forced)
    scene_section.setdefault("endmember_names", list(library.names))
    try:
        recipe = SceneRecipe(**scene_section)
    except TypeError as exc:
        raise ConfigError(f"scene section: {exc}") from exc
    M = library.select(recipe.endmember_names)
    spec = _mixing_spec(config, seed, forced)
    noise = config.get("noise", {})
    snr_db = float(noise.get("snr_db", float("inf")))

    cube, truth = synthesize_scene(recipe, M, spec, snr_db)
    run_hash = _canonical_hash(config)
    cube = SpectralCube(cube.data, snr_db=cube.snr_db, provenance=f"{cube.provenance} config={run_hash}")
    truth = AbundanceMap(truth.data, provenance=f"{truth.provenance} config={run_hash}")
    cube_path = out_dir / "cube.hsc"
    truth_path = out_dir / "truth.abn"
    save_cube(cube_path, cube)
    save_abundance(truth_path, truth)
    library_path = config.get("library", {}).get("path") or str(bundled_library_path())
    _write_manifest(
        out_dir,
        "synth",
        config,
        seed,
        inputs={"library": str(library_path)},
        outputs={"cube": str(cube_path), "truth": str(truth_path)},
        started=started,
    )
    print(f"synth: wrote {cube_path} {cube.data.shape} and {truth_path} {truth.data.shape}")
    return EXIT_OK


def cmd_mix(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    seed = _resolve_seed(config, args)
    forced = os.environ.get(SEED_ENV_VAR) is not None or getattr(args, "seed", None) is not None
    out_dir = _out_dir(config, args)
    library = _load_library(config, args)
    abundance_path = args.abundance or config.get("abundance")
    if not abundance_path:
        raise ConfigError("mix needs an abundance file: set 'abundance' or pass --abundance")
    amap = load_abundance(abundance_path)
    if amap.num_endmembers != library.num_endmembers:
        raise DataError(
            f"abundance has {amap.num_endmembers} channels, library selection has "
            f"{library.num_endmembers}"
        )
    spec = _mixing_spec(config, seed, forced)
    cube = mix_cube(amap, library, spec)
    noise = config.get("noise", {})
    snr_db = float(noise.get("snr_db", float("inf")))
    if np.isfinite(snr_db):
        cube = add_noise(cube, snr_db, seed=int(noise.get("seed", seed + 1)))
    run_hash = _canonical_hash(config)
    cube = SpectralCube(cube.data, snr_db=cube.snr_db, provenance=f"{cube.provenance} config={run_hash}")
    cube_path = out_dir / "cube.hsc"
    save_cube(cube_path, cube)
    _write_manifest(
        out_dir, "mix", config, seed,
        inputs={"abundance": str(abundance_path)},
        outputs={"cube": str(cube_path)},
        started=started,
    )
    print(f"mix: wrote {cube_path} {cube.data.shape} (model {spec.kind})")
    return EXIT_OK


def _training_config(config: Dict[str, object], seed: int, forced: bool) -> TrainingConfig:
    section = config.get("training", {})
    if not isinstance(section, dict):
        raise ConfigError("'training' section must be an object")
    return TrainingConfig.from_config(_seed_section(section, seed, forced))


def cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    seed = _resolve_seed(config, args)
    forced = os.environ.get(SEED_ENV_VAR) is not None or getattr(args, "seed", None) is not None
    out_dir = _out_dir(config, args)
    library = _load_library(config, args)
    cube_path = args.cube or config.get("cube")
    if not cube_path:
        raise ConfigError("train needs a cube: set 'cube' or pass --cube")
    cube = load_cube(cube_path)
    if bool(config.get("normalize", True)):
        cube = normalize_cube(cube)
    training_config = _training_config(config, seed, forced)
    checkpoint_dir = out_dir / "checkpoints"
    state, log = train(cube, library, training_config, out_dir=checkpoint_dir)
    run_hash = _canonical_hash(config)
    log_path = out_dir / "training_log.csv"
    log.to_csv(log_path)
    # Prepend the manifest reference as a comment line.
    log_path.write_text(f"# config={run_hash}\n" + log_path.read_text(encoding="utf-8"), encoding="utf-8")
    _write_manifest(
        out_dir, "train", config, seed,
        inputs={"cube": str(cube_path)},
        outputs={
            "checkpoints": str(checkpoint_dir),
            "final_checkpoint": str(checkpoint_dir / f"epoch_{state.epochs_completed:03d}"),
            "training_log": str(log_path),
            "training_config_hash": config_hash(training_config),
        },
        started=started,
    )
    print(
        f"train: {state.epochs_completed} epochs, {len(log)} steps, "
        f"checkpoints in {checkpoint_dir}"
    )
    return EXIT_OK


def cmd_unmix(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    seed = _resolve_seed(config, args)
    forced = os.environ.get(SEED_ENV_VAR) is not None or getattr(args, "seed", None) is not None
    out_dir = _out_dir(config, args)
    library = _load_library(config, args)
    cube_path = args.cube or config.get("cube")
    checkpoint = args.checkpoint or config.get("checkpoint")
    if not cube_path or not checkpoint:
        raise ConfigError("unmix needs 'cube' and 'checkpoint' (config keys or flags)")
    cube = load_cube(cube_path)
    if bool(config.get("normalize", True)):
        cube = normalize_cube(cube)
    expected = None
    if isinstance(config.get("training"), dict):
        expected = config_hash(_training_config(config, seed, forced))
    state = load_checkpoint(checkpoint, library, expected_hash=expected)
    amap = unmix_cube(cube, state)
    run_hash = _canonical_hash(config)
    amap = AbundanceMap(amap.data, provenance=f"{amap.provenance} config={run_hash}")
    abundance_path = out_dir / "abundance.abn"
    save_abundance(abundance_path, amap)
    png_paths = []
    for channel, name in enumerate(library.names):
        png = out_dir / f"abundance_{channel}_{name}.png"
        save_abundance_png(png, amap, channel, annotation=f"config={run_hash}")
        png_paths.append(str(png))
    _write_manifest(
        out_dir, "unmix", config, seed,
        inputs={"cube": str(cube_path), "checkpoint": str(checkpoint)},
        outputs={"abundance": str(abundance_path), "png": ",".join(png_paths)},
        started=started,
    )
    print(f"unmix: wrote {abundance_path} {amap.data.shape}")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    seed = _resolve_seed(config, args)
    out_dir = _out_dir(config, args)
    method = args.method or config.get("baseline", {}).get("method")
    if method not in BASELINES:
        raise ConfigError(f"--method must be one of {sorted(BASELINES)}, got {method!r}")
    library = _load_library(config, args)
    cube_path = args.cube or config.get("cube")
    if not cube_path:
        raise ConfigError("baseline needs a cube: set 'cube' or pass --cube")
    cube = load_cube(cube_path)
    result = BASELINES[method](cube, library)
    run_hash = _canonical_hash(config)
    amap = AbundanceMap(
        result.abundance.data, provenance=f"{result.abundance.provenance} config={run_hash}"
    )
    abundance_path = out_dir / f"abundance_{method}.abn"
    save_abundance(abundance_path, amap)
    outputs = {"abundance": str(abundance_path)}
    if result.nonlinearity is not None:
        nl_path = out_dir / f"nonlinearity_{method}.hsc"
        save_cube(
            nl_path,
            SpectralCube(
                result.nonlinearity[:, :, None],
                provenance=f"method={method} parameter-map config={run_hash}",
            ),
        )
        outputs["nonlinearity"] = str(nl_path)
    _write_manifest(
        out_dir, "baseline", config, seed,
        inputs={"cube": str(cube_path)},
        outputs=outputs,
        started=started,
    )
    print(
        f"baseline: {method} mean residual {float(result.residual.mean()):.6f}, "
        f"wrote {abundance_path}"
    )
    return EXIT_OK


def _matrix_csv(
    path: Path,
    labels: List[str],
    columns: List[str],
    cells: Dict[tuple, float],
    run_hash: str,
) -> None:
    lines = [f"# config={run_hash}", "method," + ",".join(columns)]
    for label in labels:
        row = [label]
        for column in columns:
            value = cells.get((label, column))
            row.append("" if value is None else f"{value:.6f}")
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    seed = _resolve_seed(config, args)
    out_dir = _out_dir(config, args)
    section = config.get("eval")
    if not isinstance(section, dict):
        raise ConfigError("eval needs an 'eval' section")
    truth_path = section.get("truth")
    if not truth_path:
        raise ConfigError("eval section needs a 'truth' abundance path")
    truth = load_abundance(truth_path)
    estimates = section.get("estimates")
    if not isinstance(estimates, list) or not estimates:
        raise ConfigError("eval section needs a non-empty 'estimates' list")
    run_hash = _canonical_hash(config)

    reports: List[EvalReport] = []
    cells_aad: Dict[tuple, float] = {}
    cells_aid: Dict[tuple, float] = {}
    labels: List[str] = []
    columns: List[str] = []
    png_outputs: List[str] = []
    for entry in estimates:
        if not isinstance(entry, dict) or "abundance" not in entry or "label" not in entry:
            raise ConfigError("each estimate needs at least 'label' and 'abundance'")
        estimate = load_abundance(entry["abundance"])
        cube = load_cube(entry["cube"]) if entry.get("cube") else None
        reconstruction = load_cube(entry["reconstruction"]) if entry.get("reconstruction") else None
        column = f"{entry.get('model', 'LMM')}@{entry.get('snr_db', 'inf')}dB"
        label = str(entry["label"])
        report = evaluate(
            truth,
            estimate,
            cube=cube,
            reconstruction=reconstruction,
            label=f"{label}:{column}",
        )
        reports.append(report)
        if label not in labels:
            labels.append(label)
        if column not in columns:
            columns.append(column)
        cells_aad[(label, column)] = report.aad
        cells_aid[(label, column)] = report.aid
        if bool(section.get("png", True)):
            for channel in range(estimate.num_endmembers):
                png = out_dir / f"{label}_{column.replace('@', '_')}_ch{channel}.png"
                save_abundance_png(png, estimate, channel, annotation=f"config={run_hash}")
                png_outputs.append(str(png))

    report_path = out_dir / "report.json"
    report_path.write_text(
        json.dumps(
            {"config_hash": run_hash, "reports": [json.loads(r.to_json()) for r in reports]},
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    aad_path = out_dir / "matrix_aad.csv"
    aid_path = out_dir / "matrix_aid.csv"
    _matrix_csv(aad_path, labels, columns, cells_aad, run_hash)
    _matrix_csv(aid_path, labels, columns, cells_aid, run_hash)
    _write_manifest(
        out_dir, "eval", config, seed,
        inputs={"truth": str(truth_path)},
        outputs={
            "report": str(report_path),
            "matrix_aad": str(aad_path),
            "matrix_aid": str(aid_path),
            "png": ",".join(png_outputs),
        },
        started=started,
    )
    for report in reports:
        print(f"eval: {report.label} aad={report.aad:.6f} aid={report.aid:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unmixlab",
        description="Hyperspectral unmixing toolkit: scene synthesis, baselines, "
        "adversarial training, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"unmixlab {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--out", help="output directory (overrides config out_dir)")
        sub.add_argument("--seed", type=int, help="override the config seed")
        sub.add_argument("--endmembers", help="endmember library CSV (overrides config)")
        sub.add_argument(
            "--select", nargs="+", help="endmember names to use (overrides config)"
        )

    synth = subparsers.add_parser("synth", help="generate a synthetic scene + ground truth")
    add_common(synth)
    synth.set_defaults(func=cmd_synth)

    mix = subparsers.add_parser("mix", help="forward-mix an abundance file into a cube")
    add_common(mix)
    mix.add_argument("--abundance", help="input abundance file (ABN1)")
    mix.set_defaults(func=cmd_mix)

    train_cmd = subparsers.add_parser("train", help="train the adversarial unmixer")
    add_common(train_cmd)
    train_cmd.add_argument("--cube", help="input cube file (HSC1)")
    train_cmd.set_defaults(func=cmd_train)

    unmix = subparsers.add_parser("unmix", help="unmix a cube with a trained checkpoint")
    add_common(unmix)
    unmix.add_argument("--cube", help="input cube file (HSC1)")
    unmix.add_argument("--checkpoint", help="checkpoint directory")
    unmix.set_defaults(func=cmd_unmix)

    baseline = subparsers.add_parser("baseline", help="run a classical unmixing method")
    add_common(baseline)
    baseline.add_argument("--method", choices=sorted(BASELINES), help="unmixing method")
    baseline.add_argument("--cube", help="input cube file (HSC1)")
    baseline.set_defaults(func=cmd_baseline)

    eval_cmd = subparsers.add_parser("eval", help="score estimates against ground truth")
    add_common(eval_cmd)
    eval_cmd.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
