"""End-to-end training: batching, optimization schedule, checkpoints.

Each step updates, in order: the abundance discriminator, the image
discriminator (bi-directional runs only), the mutual-information
statistics network (semantic runs only), and finally both generators
jointly.  Runs are fully deterministic given the config seed: network
initialization, patch order, Dirichlet draws, and sub-window locations
all derive from it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .errors import ConfigError, DataError, NumericalError
from .losses import (
    LOSS_TERMS,
    LcguConfig,
    LcguNets,
    gan_loss_abundance,
    gan_loss_image,
    linear_remix,
    total_loss,
)
from .mine import MineStatistics, dv_bound, subpatch_pairs
from .networks import (
    MixGenerator,
    PatchAutoencoder,
    PatchDiscriminator,
    UnmixGenerator,
    patches_to_tensor,
    tensor_to_patches,
)
from .patches import extract_patches, stitch_average
from .scene import sample_dirichlet, smooth_simplex_field
from .types import AbundanceMap, EndmemberMatrix, SpectralCube

CHECKPOINT_FORMAT = "lcgu-checkpoint-v1"
_NORMALIZED_TOL = 1e-9


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters of one training run (defaults follow the protocol)."""

    epochs: int = 25
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 16
    patch_size: int = 32
    overlap_fraction: Fraction = Fraction(1, 3)
    generator_widths: Tuple[int, int, int] = (64, 128, 256)
    discriminator_widths: Tuple[int, int, int] = (64, 128, 256)
    mine_hidden: int = 64
    ae_epochs: int = 20
    ae_holdout_threshold: float = 0.25
    dirichlet_alpha: Tuple[float, ...] = ()
    prior_grid_step: int = 4
    prior_smoothing_radius: int = 2
    loss: LcguConfig = LcguConfig()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "overlap_fraction", Fraction(self.overlap_fraction))
        object.__setattr__(
            self, "generator_widths", tuple(int(w) for w in self.generator_widths)
        )
        object.__setattr__(
            self, "discriminator_widths", tuple(int(w) for w in self.discriminator_widths)
        )
        object.__setattr__(
            self, "dirichlet_alpha", tuple(float(a) for a in self.dirichlet_alpha)
        )
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.beta1 < 1.0:
            raise ConfigError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ConfigError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        if self.ae_epochs < 0:
            raise ConfigError(f"ae_epochs must be >= 0, got {self.ae_epochs}")
        if self.ae_holdout_threshold <= 0.0:
            raise ConfigError(
                f"ae_holdout_threshold must be > 0, got {self.ae_holdout_threshold}"
            )
        if any(a <= 0 for a in self.dirichlet_alpha):
            raise ConfigError(f"dirichlet_alpha must be positive, got {self.dirichlet_alpha}")
        if self.prior_grid_step < 1:
            raise ConfigError(f"prior_grid_step must be >= 1, got {self.prior_grid_step}")
        if self.prior_smoothing_radius < 0:
            raise ConfigError(
                f"prior_smoothing_radius must be >= 0, got {self.prior_smoothing_radius}"
            )

    def to_config(self) -> Dict[str, object]:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "batch_size": self.batch_size,
            "patch_size": self.patch_size,
            "overlap_fraction": str(self.overlap_fraction),
            "generator_widths": list(self.generator_widths),
            "discriminator_widths": list(self.discriminator_widths),
            "mine_hidden": self.mine_hidden,
            "ae_epochs": self.ae_epochs,
            "ae_holdout_threshold": self.ae_holdout_threshold,
            "dirichlet_alpha": list(self.dirichlet_alpha),
            "prior_grid_step": self.prior_grid_step,
            "prior_smoothing_radius": self.prior_smoothing_radius,
            "loss": {
                "weights": list(self.loss.weights),
                "bidirectional": self.loss.bidirectional,
                "semantic": self.loss.semantic,
                "mi_mode": self.loss.mi_mode,
                "negate_mi": self.loss.negate_mi,
                "saturating_gan": self.loss.saturating_gan,
                "subpatch_size": self.loss.subpatch_size,
            },
            "seed": self.seed,
        }

    @staticmethod
    def from_config(payload: Dict[str, object]) -> "TrainingConfig":
        payload = dict(payload)
        loss_payload = dict(payload.pop("loss", {}))
        known_loss = {
            "weights",
            "bidirectional",
            "semantic",
            "mi_mode",
            "negate_mi",
            "saturating_gan",
            "subpatch_size",
        }
        unknown = set(loss_payload) - known_loss
        if unknown:
            raise ConfigError(f"unknown loss config keys: {sorted(unknown)}")
        if "weights" in loss_payload:
            loss_payload["weights"] = tuple(loss_payload["weights"])
        loss = LcguConfig(**loss_payload)
        known = {f.name for f in TrainingConfig.__dataclass_fields__.values()} - {"loss"}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        if "overlap_fraction" in payload:
            payload["overlap_fraction"] = Fraction(str(payload["overlap_fraction"]))
        for key in ("generator_widths", "discriminator_widths", "dirichlet_alpha"):
            if key in payload:
                payload[key] = tuple(payload[key])
        return TrainingConfig(loss=loss, **payload)


def config_hash(config: TrainingConfig) -> str:
    """Stable hash of a training config, stamped into artifacts."""
    canonical = json.dumps(config.to_config(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class TrainingLog:
    """Append-only per-step record of every loss term."""

    COLUMNS: Tuple[str, ...] = ("step", "epoch") + LOSS_TERMS + ("total",)

    def __init__(self) -> None:
        self.rows: List[Dict[str, float]] = []

    def append(self, step: int, epoch: int, breakdown: Dict[str, float], total: float) -> None:
        row = {"step": float(step), "epoch": float(epoch), "total": float(total)}
        for term in LOSS_TERMS:
            row[term] = float(breakdown[term])
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def term(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise DataError(f"unknown log column {name!r}")
        return np.array([row[name] for row in self.rows])

    def epoch_mean(self, name: str, epoch: int) -> float:
        values = [row[name] for row in self.rows if int(row["epoch"]) == epoch]
        if not values:
            raise DataError(f"no rows logged for epoch {epoch}")
        return float(np.mean(values))

    def to_csv(self, path: Union[str, Path]) -> None:
        lines = [",".join(self.COLUMNS)]
        for row in self.rows:
            lines.append(",".join(repr(row[c]) for c in self.COLUMNS))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def from_csv(path: Union[str, Path]) -> "TrainingLog":
        text = Path(path).read_text(encoding="utf-8").strip().splitlines()
        if not text or text[0].split(",") != list(TrainingLog.COLUMNS):
            raise DataError(f"{path} is not a training log")
        log = TrainingLog()
        for line in text[1:]:
            values = [float(v) for v in line.split(",")]
            log.rows.append(dict(zip(TrainingLog.COLUMNS, values)))
        return log


@dataclass
class LcguState:
    """Trained (or initialized) networks plus the config that shaped them."""

    nets: LcguNets
    config: TrainingConfig
    M: EndmemberMatrix
    epochs_completed: int = 0

    @property
    def trained(self) -> bool:
        return self.epochs_completed > 0


def _check_normalized(cube: SpectralCube) -> None:
    if cube.data.min() < -_NORMALIZED_TOL or cube.data.max() > 1.0 + _NORMALIZED_TOL:
        raise DataError(
            "expected a normalized cube in [0, 1]; run normalize_cube first "
            f"(range [{cube.data.min():.4g}, {cube.data.max():.4g}])"
        )


def pretrain_ae(
    cube: SpectralCube,
    epochs: int = 20,
    patch_size: int = 32,
    overlap_fraction: Fraction = Fraction(1, 3),
    widths: Sequence[int] = (64, 128, 256),
    learning_rate: float = 2e-4,
    betas: Tuple[float, float] = (0.5, 0.999),
    batch_size: int = 16,
    holdout_threshold: float = 0.25,
    seed: int = 0,
) -> Tuple[PatchAutoencoder, List[float]]:
    """Train the patch autoencoder, freeze it, and report epoch losses.

    Every fifth patch is held out; after training, the held-out L1
    reconstruction error must fall below ``holdout_threshold`` or a
    numerical error is raised.  Returns the frozen autoencoder and the
    per-epoch mean training losses (for convergence checks).
    """
    _check_normalized(cube)
    torch.manual_seed(seed + 1)
    ae = PatchAutoencoder(cube.num_bands, widths)
    patch_set = extract_patches(cube, patch_size, overlap_fraction)
    tensor = patches_to_tensor(patch_set.patches)
    count = tensor.shape[0]
    if count >= 5:
        holdout_mask = np.zeros(count, dtype=bool)
        holdout_mask[::5] = True
    else:
        holdout_mask = np.ones(count, dtype=bool)
    train_tensor = tensor[torch.from_numpy(~holdout_mask)] if count >= 5 else tensor
    holdout_tensor = tensor[torch.from_numpy(holdout_mask)]
    optimizer = torch.optim.Adam(ae.parameters(), lr=learning_rate, betas=betas)
    rng = np.random.default_rng(seed + 1)
    epoch_losses: List[float] = []
    n_train = train_tensor.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, batch_size):
            batch = train_tensor[torch.from_numpy(order[start : start + batch_size])]
            loss = (ae(batch) - batch).abs().mean()
            if not torch.isfinite(loss):
                raise NumericalError(
                    f"autoencoder pretraining diverged at epoch {epoch + 1}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch_losses.append(loss.item())
        epoch_losses.append(float(np.mean(batch_losses)))
    ae.eval()
    with torch.no_grad():
        holdout_loss = float((ae(holdout_tensor) - holdout_tensor).abs().mean())
    if epochs > 0 and holdout_loss > holdout_threshold:
        raise NumericalError(
            f"autoencoder held-out L1 {holdout_loss:.4f} above threshold {holdout_threshold}"
        )
    ae.mark_pretrained()
    return ae, epoch_losses


def _abundance_batch(
    alpha: Tuple[float, ...],
    count: int,
    size: int,
    rng: Union[int, np.random.Generator],
    grid_step: int,
    radius: int,
) -> torch.Tensor:
    """Sample ``count`` abundance patches from the spatially correlated prior.

    Dirichlet vectors are drawn on a coarse ``grid_step``-pixel grid,
    nearest-upsampled, low-passed with :func:`smooth_simplex_field`, and
    cropped at a random sub-grid offset — the same block-then-blur
    construction used for synthetic scenes, made stationary so block
    seams fall anywhere inside a patch.  Drawing per pixel instead would
    give a spatially white field, which neither fools the abundance
    discriminator nor survives the strided generators, and over-blurring
    white draws collapses the prior's variance; the coarse grid keeps
    full per-vector variance at low spatial frequency.
    """
    r = len(alpha)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    margin = radius  # smoothing halo, trimmed after the low-pass
    field = size + 2 * margin
    cells = -(-(field + grid_step) // grid_step)
    draws = sample_dirichlet(alpha, count * cells * cells, rng).reshape(
        count, cells, cells, r
    )
    grids = np.repeat(np.repeat(draws, grid_step, axis=1), grid_step, axis=2)
    offsets = rng.integers(0, grid_step, size=(count, 2))
    fields = np.stack(
        [g[i : i + field, j : j + field, :] for g, (i, j) in zip(grids, offsets)]
    )
    if radius > 0:
        fields = np.stack([smooth_simplex_field(f, radius) for f in fields])
    center = fields[:, margin : margin + size, margin : margin + size, :]
    return patches_to_tensor(np.ascontiguousarray(center))


def _build_nets(config: TrainingConfig, M: EndmemberMatrix, num_bands: int) -> LcguNets:
    torch.manual_seed(config.seed)
    g_unmix = UnmixGenerator(num_bands, M.num_endmembers, config.generator_widths)
    g_mix = MixGenerator(M, config.patch_size, config.generator_widths)
    d_a = PatchDiscriminator(M.num_endmembers, config.patch_size, config.discriminator_widths)
    d_y = PatchDiscriminator(num_bands, config.patch_size, config.discriminator_widths)
    mine = None
    if config.loss.semantic and config.loss.mi_mode == "mine":
        window = min(config.loss.subpatch_size, config.patch_size)
        dim = num_bands * window * window
        mine = MineStatistics(dim, dim, hidden=config.mine_hidden)
    return LcguNets(g_unmix=g_unmix, g_mix=g_mix, d_a=d_a, d_y=d_y, ae_p=None, mine=mine)


def train(
    cube: SpectralCube,
    M: EndmemberMatrix,
    config: TrainingConfig = TrainingConfig(),
    out_dir: Optional[Union[str, Path]] = None,
) -> Tuple[LcguState, TrainingLog]:
    """Run the full adversarial training schedule on one scene.

    Returns the trained state and the per-step loss log.  When
    ``out_dir`` is given, a checkpoint directory is written after every
    epoch.  ``epochs == 0`` returns the initialized state untouched.
    """
    _check_normalized(cube)
    if cube.num_bands != M.num_bands:
        raise DataError(f"cube has {cube.num_bands} bands, matrix has {M.num_bands}")
    r = M.num_endmembers
    alpha = config.dirichlet_alpha or (1.0,) * r
    if len(alpha) != r:
        raise ConfigError(f"dirichlet_alpha has {len(alpha)} entries for {r} endmembers")

    nets = _build_nets(config, M, cube.num_bands)
    log = TrainingLog()
    state = LcguState(nets=nets, config=config, M=M, epochs_completed=0)
    if config.epochs == 0:
        return state, log

    if config.loss.semantic:
        nets.ae_p, _ = pretrain_ae(
            cube,
            epochs=config.ae_epochs,
            patch_size=config.patch_size,
            overlap_fraction=config.overlap_fraction,
            widths=config.generator_widths,
            learning_rate=config.learning_rate,
            betas=(config.beta1, config.beta2),
            batch_size=config.batch_size,
            holdout_threshold=config.ae_holdout_threshold,
            seed=config.seed,
        )

    patch_set = extract_patches(cube, config.patch_size, config.overlap_fraction)
    tensor = patches_to_tensor(patch_set.patches)
    count = tensor.shape[0]
    betas = (config.beta1, config.beta2)
    generator_params = list(nets.g_unmix.parameters()) + list(nets.g_mix.parameters())
    g_opt = torch.optim.Adam(generator_params, lr=config.learning_rate, betas=betas)
    d_a_opt = torch.optim.Adam(nets.d_a.parameters(), lr=config.learning_rate, betas=betas)
    d_y_opt = (
        torch.optim.Adam(nets.d_y.parameters(), lr=config.learning_rate, betas=betas)
        if config.loss.bidirectional
        else None
    )
    mine_opt = (
        torch.optim.Adam(nets.mine.parameters(), lr=config.learning_rate, betas=betas)
        if nets.mine is not None
        else None
    )

    rng = np.random.default_rng(config.seed)
    torch_gen = torch.Generator().manual_seed(config.seed)
    s = config.patch_size
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(count)
        for start in range(0, count, config.batch_size):
            step += 1
            idx = torch.from_numpy(order[start : start + config.batch_size])
            y_batch = tensor[idx]
            b = y_batch.shape[0]
            a_batch = _abundance_batch(
                alpha, b, s, rng, config.prior_grid_step, config.prior_smoothing_radius
            )

            _, d_a_loss = gan_loss_abundance(
                nets.d_a, a_batch, nets.g_unmix(y_batch), config.loss.saturating_gan
            )
            d_a_opt.zero_grad()
            d_a_loss.backward()
            d_a_opt.step()

            if d_y_opt is not None:
                _, d_y_loss = gan_loss_image(
                    nets.d_y, y_batch, nets.g_mix(a_batch), config.loss.saturating_gan
                )
                d_y_opt.zero_grad()
                d_y_loss.backward()
                d_y_opt.step()

            if mine_opt is not None:
                with torch.no_grad():
                    reconstruction = nets.ae_p(linear_remix(nets.g_unmix(y_batch), M))
                window = min(config.loss.subpatch_size, s)
                x_flat, y_flat = subpatch_pairs(reconstruction, y_batch, window, torch_gen)
                shuffle = torch.randperm(y_flat.shape[0], generator=torch_gen)
                mine_loss = -dv_bound(
                    nets.mine(x_flat, y_flat), nets.mine(x_flat, y_flat[shuffle])
                )
                if not torch.isfinite(mine_loss):
                    raise NumericalError(f"statistics network diverged at step {step}")
                mine_opt.zero_grad()
                mine_loss.backward()
                mine_opt.step()

            try:
                total, breakdown = total_loss(
                    y_batch, a_batch, nets, M, config.loss, torch_gen
                )
            except NumericalError as error:
                raise NumericalError(f"epoch {epoch} step {step}: {error}") from error
            g_opt.zero_grad()
            total.backward()
            g_opt.step()

            log.append(
                step, epoch, {k: v.item() for k, v in breakdown.items()}, total.item()
            )
        state.epochs_completed = epoch
        if out_dir is not None:
            save_checkpoint(state, Path(out_dir) / f"epoch_{epoch:03d}")
    return state, log


def unmix_cube(cube: SpectralCube, state: LcguState) -> AbundanceMap:
    """Unmix a full scene with a trained state: patch, infer, stitch.

    Overlapping patch predictions are averaged and each pixel is
    renormalized back onto the simplex.
    """
    if not state.trained:
        raise DataError("state has no completed epochs; train before unmixing")
    _check_normalized(cube)
    if cube.num_bands != state.nets.g_unmix.num_bands:
        raise DataError(
            f"cube has {cube.num_bands} bands, model expects {state.nets.g_unmix.num_bands}"
        )
    patch_set = extract_patches(cube, state.config.patch_size, state.config.overlap_fraction)
    tensor = patches_to_tensor(patch_set.patches)
    state.nets.g_unmix.eval()
    with torch.no_grad():
        outputs = []
        for start in range(0, tensor.shape[0], state.config.batch_size):
            outputs.append(state.nets.g_unmix(tensor[start : start + state.config.batch_size]))
    predicted = tensor_to_patches(torch.cat(outputs, dim=0))
    state.nets.g_unmix.train()
    stitched = stitch_average(predicted, patch_set.origins, cube.data.shape[:2])
    stitched = np.maximum(stitched, 0.0)
    stitched /= stitched.sum(axis=2, keepdims=True)
    return AbundanceMap(stitched, provenance=f"lcgu config={config_hash(state.config)[:12]}")


def evaluate_cycle(
    state: LcguState, cube: SpectralCube, seed: int = 0
) -> Dict[str, float]:
    """Post-hoc cycle losses of a trained state over a whole scene.

    Evaluates both directions with frozen parameters on every patch plus
    one seeded Dirichlet batch of equal size; useful for comparing runs
    whose training-time logs cover different terms (ablations).
    """
    _check_normalized(cube)
    patch_set = extract_patches(cube, state.config.patch_size, state.config.overlap_fraction)
    tensor = patches_to_tensor(patch_set.patches)
    r = state.M.num_endmembers
    s = state.config.patch_size
    alpha = state.config.dirichlet_alpha or (1.0,) * r
    a_batch = _abundance_batch(
        alpha,
        tensor.shape[0],
        s,
        seed,
        state.config.prior_grid_step,
        state.config.prior_smoothing_radius,
    )
    nets = state.nets
    was_training = nets.g_unmix.training
    nets.g_unmix.eval()
    nets.g_mix.eval()
    with torch.no_grad():
        image_term = float((nets.g_mix(nets.g_unmix(tensor)) - tensor).abs().mean())
        abundance_term = float((nets.g_unmix(nets.g_mix(a_batch)) - a_batch).abs().mean())
    nets.g_unmix.train(was_training)
    nets.g_mix.train(was_training)
    return {
        "cycle_image": image_term,
        "cycle_abundance": abundance_term,
        "cycle_total": image_term + abundance_term,
    }


def _state_tensors(state: LcguState) -> Dict[str, torch.Tensor]:
    tensors: Dict[str, torch.Tensor] = {}
    bundles = {
        "g_unmix": state.nets.g_unmix,
        "g_mix": state.nets.g_mix,
        "d_a": state.nets.d_a,
        "d_y": state.nets.d_y,
    }
    if state.nets.ae_p is not None:
        bundles["ae_p"] = state.nets.ae_p
    if state.nets.mine is not None:
        bundles["mine"] = state.nets.mine
    for prefix, module in bundles.items():
        for name, tensor in module.state_dict().items():
            tensors[f"{prefix}.{name}"] = tensor
    return tensors


def save_checkpoint(state: LcguState, directory: Union[str, Path]) -> Path:
    """Write one binary file per named tensor plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tensors = _state_tensors(state)
    manifest: Dict[str, object] = {
        "format": CHECKPOINT_FORMAT,
        "config_hash": config_hash(state.config),
        "config": state.config.to_config(),
        "epochs_completed": state.epochs_completed,
        "num_bands": state.M.num_bands,
        "num_endmembers": state.M.num_endmembers,
        "tensors": {},
    }
    for index, (name, tensor) in enumerate(sorted(tensors.items())):
        filename = f"t{index:04d}.bin"
        array = tensor.detach().cpu().numpy().astype("<f4")
        (directory / filename).write_bytes(array.tobytes())
        manifest["tensors"][name] = {"file": filename, "shape": list(array.shape)}
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return directory


def load_checkpoint(
    directory: Union[str, Path],
    M: EndmemberMatrix,
    expected_hash: Optional[str] = None,
) -> LcguState:
    """Rebuild a state from a checkpoint directory and endmember matrix.

    The manifest's embedded config reconstructs the architecture; shapes
    are verified tensor by tensor.  ``expected_hash`` (e.g., from a run
    manifest) must match the checkpoint's config hash when given.
    """
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{directory} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"unsupported checkpoint format {manifest.get('format')!r}")
    config = TrainingConfig.from_config(manifest["config"])
    if config_hash(config) != manifest["config_hash"]:
        raise DataError("checkpoint manifest hash does not match its embedded config")
    if expected_hash is not None and expected_hash != manifest["config_hash"]:
        raise DataError(
            f"config hash mismatch: expected {expected_hash}, "
            f"checkpoint has {manifest['config_hash']}"
        )
    if M.num_bands != manifest["num_bands"] or M.num_endmembers != manifest["num_endmembers"]:
        raise DataError(
            f"endmember matrix {M.signatures.shape} does not match checkpoint "
            f"({manifest['num_bands']} bands, {manifest['num_endmembers']} endmembers)"
        )
    nets = _build_nets(config, M, manifest["num_bands"])
    if config.loss.semantic:
        nets.ae_p = PatchAutoencoder(manifest["num_bands"], config.generator_widths)
    state = LcguState(
        nets=nets, config=config, M=M, epochs_completed=int(manifest["epochs_completed"])
    )
    available = _state_tensors(state)
    listed = manifest["tensors"]
    if set(listed) != set(available):
        missing = sorted(set(available) - set(listed))
        extra = sorted(set(listed) - set(available))
        raise DataError(f"tensor mismatch: missing {missing}, unexpected {extra}")
    loaded: Dict[str, Dict[str, torch.Tensor]] = {}
    for name, entry in listed.items():
        raw = (directory / entry["file"]).read_bytes()
        shape = tuple(entry["shape"])
        expected_bytes = int(np.prod(shape, dtype=np.int64)) * 4 if shape else 4
        if len(raw) != expected_bytes:
            raise DataError(f"tensor {name}: file has {len(raw)} bytes, expected {expected_bytes}")
        array = np.frombuffer(raw, dtype="<f4").reshape(shape)
        if available[name].shape != torch.Size(shape):
            raise DataError(
                f"tensor {name}: shape {shape} does not match model {tuple(available[name].shape)}"
            )
        prefix, _, param = name.partition(".")
        loaded.setdefault(prefix, {})[param] = torch.from_numpy(array.copy())
    modules = {
        "g_unmix": state.nets.g_unmix,
        "g_mix": state.nets.g_mix,
        "d_a": state.nets.d_a,
        "d_y": state.nets.d_y,
        "ae_p": state.nets.ae_p,
        "mine": state.nets.mine,
    }
    for prefix, tensors in loaded.items():
        modules[prefix].load_state_dict(tensors)
    if state.nets.ae_p is not None and state.nets.ae_p.is_pretrained:
        for parameter in state.nets.ae_p.parameters():
            parameter.requires_grad_(False)
    return state
