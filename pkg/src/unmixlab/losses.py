"""Loss terms of the bi-directional adversarial unmixer.

The objective decomposes into six named terms:

* ``gan_abundance`` — adversarial loss pushing unmixed abundances toward
  Dirichlet samples (generator view; the discriminator sub-loss is
  returned separately by :func:`gan_loss_abundance`)
* ``gan_image`` — adversarial loss pushing mixed images toward raw
  patches
* ``cycle_image`` — L1(G_mix(G_unmix(y)) − y)
* ``cycle_abundance`` — L1(G_unmix(G_mix(a)) − a)
* ``semantic_recon`` — L1 between the linear remix M·â and its
  autoencoder reconstruction
* ``semantic_mi`` — negated mutual-information lower bound between the
  autoencoder reconstruction and the raw patch (an RMSE swap-in is
  available for ablation)

All terms are nonnegative except ``semantic_mi``, which is a negated
lower bound (finite, either sign).  :func:`total_loss` returns the
weighted sum plus the per-term weighted contributions, which sum to the
total exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import torch

from .errors import ConfigError, NumericalError
from .mine import MineStatistics, dv_bound, subpatch_pairs
from .networks import MixGenerator, PatchAutoencoder, PatchDiscriminator, UnmixGenerator
from .types import EndmemberMatrix

LOSS_TERMS: Tuple[str, ...] = (
    "gan_abundance",
    "gan_image",
    "cycle_image",
    "cycle_abundance",
    "semantic_recon",
    "semantic_mi",
)

_LOG_EPS = 1e-7


@dataclass(frozen=True)
class LcguConfig:
    """Loss weighting and ablation switches.

    ``weights`` follows the order of :data:`LOSS_TERMS`.  Disabling
    ``bidirectional`` drops the mixing-unmixing branch (``gan_image`` and
    ``cycle_abundance``); disabling ``semantic`` drops both semantic
    terms and guarantees the autoencoder and statistics network are never
    evaluated.  ``negate_mi`` controls whether the MI bound enters
    negated (so minimizing the total maximizes it) or literally.
    """

    weights: Tuple[float, ...] = (1.0,) * 6
    bidirectional: bool = True
    semantic: bool = True
    mi_mode: str = "mine"
    negate_mi: bool = True
    saturating_gan: bool = False
    subpatch_size: int = 8

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != len(LOSS_TERMS):
            raise ConfigError(f"need {len(LOSS_TERMS)} weights, got {len(self.weights)}")
        if not all(np.isfinite(w) for w in self.weights):
            raise ConfigError(f"weights must be finite, got {self.weights}")
        if self.mi_mode not in ("mine", "rmse"):
            raise ConfigError(f"mi_mode must be 'mine' or 'rmse', got {self.mi_mode!r}")
        if self.subpatch_size < 1:
            raise ConfigError(f"subpatch_size must be >= 1, got {self.subpatch_size}")

    def weight(self, term: str) -> float:
        return self.weights[LOSS_TERMS.index(term)]

    def enabled_terms(self) -> Tuple[str, ...]:
        terms = list(LOSS_TERMS)
        if not self.bidirectional:
            terms.remove("gan_image")
            terms.remove("cycle_abundance")
        if not self.semantic:
            terms.remove("semantic_recon")
            terms.remove("semantic_mi")
        return tuple(terms)


@dataclass
class LcguNets:
    """The trainable pieces, bundled for loss evaluation."""

    g_unmix: UnmixGenerator
    g_mix: MixGenerator
    d_a: PatchDiscriminator
    d_y: PatchDiscriminator
    ae_p: Optional[PatchAutoencoder] = None
    mine: Optional[MineStatistics] = None


def _safe_log(t: torch.Tensor) -> torch.Tensor:
    return torch.log(torch.clamp(t, _LOG_EPS, 1.0))


def _gan_pair(
    discriminator: PatchDiscriminator,
    real: torch.Tensor,
    fake: torch.Tensor,
    saturating: bool,
) -> Tuple[torch.Tensor, torch.Tensor]:
    disc_loss = -(_safe_log(discriminator(real)).mean() + _safe_log(1.0 - discriminator(fake.detach())).mean())
    if saturating:
        generator_loss = _safe_log(1.0 - discriminator(fake)).mean()
    else:
        generator_loss = -_safe_log(discriminator(fake)).mean()
    return generator_loss, disc_loss


def gan_loss_abundance(
    d_a: PatchDiscriminator,
    real_a: torch.Tensor,
    fake_a: torch.Tensor,
    saturating: bool = False,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """(generator, discriminator) adversarial sub-losses in abundance space.

    The discriminator sub-loss is the cross-entropy
    ``−E log D(real) − E log(1 − D(fake))`` with the fake batch detached.
    The default generator sub-loss is the non-saturating ``−E log D(fake)``;
    ``saturating`` switches to the minimax form ``E log(1 − D(fake))``.
    """
    return _gan_pair(d_a, real_a, fake_a, saturating)


def gan_loss_image(
    d_y: PatchDiscriminator,
    real_y: torch.Tensor,
    fake_y: torch.Tensor,
    saturating: bool = False,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """(generator, discriminator) adversarial sub-losses in image space."""
    return _gan_pair(d_y, real_y, fake_y, saturating)


def cycle_loss(
    y_batch: torch.Tensor,
    a_batch: torch.Tensor,
    g_unmix: UnmixGenerator,
    g_mix: MixGenerator,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, image term, abundance term) cycle-consistency L1 losses."""
    image_term = (g_mix(g_unmix(y_batch)) - y_batch).abs().mean()
    abundance_term = (g_unmix(g_mix(a_batch)) - a_batch).abs().mean()
    return image_term + abundance_term, image_term, abundance_term


def linear_remix(a_hat: torch.Tensor, M: EndmemberMatrix) -> torch.Tensor:
    """Per-pixel linear mixture M·â of an (N, R, H, W) abundance batch."""
    signatures = torch.from_numpy(M.signatures).to(dtype=a_hat.dtype, device=a_hat.device)
    return torch.einsum("nrhw,lr->nlhw", a_hat, signatures)


def semantic_losses(
    a_hat: torch.Tensor,
    M: EndmemberMatrix,
    y_batch: torch.Tensor,
    ae_p: PatchAutoencoder,
    mine_net: Optional[MineStatistics] = None,
    config: LcguConfig = LcguConfig(),
    generator: Optional[torch.Generator] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """(reconstruction term, information term) of the semantic constraint.

    The linear remix ``x = M·â`` is pushed through the frozen
    autoencoder; the first term is ``L1(AE(x) − x)``.  The second is the
    negated DV mutual-information bound between matched local windows of
    ``AE(x)`` and the raw batch (or, in ``rmse`` mode, the RMSE between
    them).  ``generator`` pins the window locations and the marginal
    shuffle so evaluations are reproducible.
    """
    if not ae_p.is_pretrained:
        raise ConfigError("semantic losses need a pre-trained autoencoder; run pretraining first")
    x = linear_remix(a_hat, M)
    reconstruction = ae_p(x)
    recon_term = (reconstruction - x).abs().mean()
    if config.mi_mode == "rmse":
        info_term = torch.sqrt(((reconstruction - y_batch) ** 2).mean())
        return recon_term, info_term
    if mine_net is None:
        raise ConfigError("mi_mode='mine' needs a statistics network")
    size = min(config.subpatch_size, y_batch.shape[2], y_batch.shape[3])
    x_flat, y_flat = subpatch_pairs(reconstruction, y_batch, size, generator)
    if generator is None:
        shuffle = torch.roll(torch.arange(y_flat.shape[0]), shifts=1)
    else:
        shuffle = torch.randperm(y_flat.shape[0], generator=generator)
    bound = dv_bound(mine_net(x_flat, y_flat), mine_net(x_flat, y_flat[shuffle]))
    info_term = -bound if config.negate_mi else bound
    return recon_term, info_term


def total_loss(
    y_batch: torch.Tensor,
    a_batch: torch.Tensor,
    nets: LcguNets,
    M: EndmemberMatrix,
    config: LcguConfig = LcguConfig(),
    generator: Optional[torch.Generator] = None,
) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
    """Full generator-side objective with its per-term breakdown.

    The breakdown maps each of :data:`LOSS_TERMS` to its weighted
    contribution (zero tensor for disabled terms), and the contributions
    sum to the returned total exactly.  Discriminator sub-losses are not
    included; they come from the ``gan_loss_*`` pair functions.
    """
    zero = y_batch.new_zeros(())
    enabled = config.enabled_terms()
    breakdown: Dict[str, torch.Tensor] = {term: zero for term in LOSS_TERMS}

    fake_a = nets.g_unmix(y_batch)
    gen_gan_a, _ = gan_loss_abundance(nets.d_a, a_batch, fake_a, config.saturating_gan)
    breakdown["gan_abundance"] = config.weight("gan_abundance") * gen_gan_a
    breakdown["cycle_image"] = (
        config.weight("cycle_image") * (nets.g_mix(fake_a) - y_batch).abs().mean()
    )

    if "gan_image" in enabled:
        fake_y = nets.g_mix(a_batch)
        gen_gan_y, _ = gan_loss_image(nets.d_y, y_batch, fake_y, config.saturating_gan)
        breakdown["gan_image"] = config.weight("gan_image") * gen_gan_y
        breakdown["cycle_abundance"] = (
            config.weight("cycle_abundance") * (nets.g_unmix(fake_y) - a_batch).abs().mean()
        )

    if "semantic_recon" in enabled:
        if nets.ae_p is None:
            raise ConfigError("semantic terms enabled but no autoencoder provided")
        recon_term, info_term = semantic_losses(
            fake_a, M, y_batch, nets.ae_p, nets.mine, config, generator
        )
        breakdown["semantic_recon"] = config.weight("semantic_recon") * recon_term
        breakdown["semantic_mi"] = config.weight("semantic_mi") * info_term

    for term, value in breakdown.items():
        if not torch.isfinite(value):
            raise NumericalError(f"loss term {term!r} is non-finite: {value}")
    total = sum(breakdown.values(), start=zero)
    return total, breakdown
