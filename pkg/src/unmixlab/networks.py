"""Network components: generators, discriminators, and the autoencoder.

All modules take channels-first float tensors (N, C, H, W).  Generators
share one encoder-decoder trunk: two stride-2 convolutions, a stride-1
bottleneck, two stride-2 deconvolutions, and an output head — five
convolutional stages plus the head.  Patch sizes must be divisible by 4
(the trunk downsamples twice).

The unmixing generator ends in a per-pixel channel softmax, so emitted
abundances are simplex-valid by construction; the mixing generator and
the autoencoder end in a sigmoid, so outputs live in [0, 1].
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, DataError
from .types import EndmemberMatrix

DEFAULT_WIDTHS: Tuple[int, int, int] = (64, 128, 256)


def _check_patch_size(size: int) -> None:
    if size < 4 or size % 4 != 0:
        raise ConfigError(f"patch size must be a positive multiple of 4, got {size}")


class ConvEncoderDecoder(nn.Module):
    """Shared trunk: conv(s2) ×2, conv(s1) bottleneck, deconv(s2) ×2, head."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        widths: Sequence[int] = DEFAULT_WIDTHS,
        head: str = "linear",
    ) -> None:
        super().__init__()
        if len(widths) != 3 or any(w < 1 for w in widths):
            raise ConfigError(f"widths must be three positive ints, got {widths}")
        if head not in ("linear", "softmax", "sigmoid"):
            raise ConfigError(f"unknown head {head!r}")
        w0, w1, w2 = widths
        self.head = head
        self.trunk = nn.Sequential(
            nn.Conv2d(in_channels, w0, 4, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(w0, w1, 4, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(w1, w2, 3, stride=1, padding=1),
            nn.ReLU(),
            nn.ConvTranspose2d(w2, w1, 4, stride=2, padding=1),
            nn.ReLU(),
            nn.ConvTranspose2d(w1, w0, 4, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(w0, out_channels, 3, stride=1, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4:
            raise DataError(f"expected (N, C, H, W) input, got shape {tuple(x.shape)}")
        if x.shape[2] % 4 != 0 or x.shape[3] % 4 != 0 or min(x.shape[2:]) < 4:
            raise DataError(f"spatial extent must be a multiple of 4, got {tuple(x.shape[2:])}")
        out = self.trunk(x)
        if self.head == "softmax":
            return torch.softmax(out, dim=1)
        if self.head == "sigmoid":
            return torch.sigmoid(out)
        return out


class UnmixGenerator(nn.Module):
    """G_unmix: L-band patch -> R-channel abundance patch (softmax head)."""

    def __init__(
        self, num_bands: int, num_endmembers: int, widths: Sequence[int] = DEFAULT_WIDTHS
    ) -> None:
        super().__init__()
        self.num_bands = num_bands
        self.num_endmembers = num_endmembers
        self.net = ConvEncoderDecoder(num_bands, num_endmembers, widths, head="softmax")

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        if y.shape[1] != self.num_bands:
            raise DataError(f"expected {self.num_bands} channels, got {y.shape[1]}")
        return self.net(y)


def endmember_plane(M: EndmemberMatrix, patch_size: int) -> np.ndarray:
    """Deterministic (patch, patch, L) spatial encoding of the endmembers.

    Band l's channel carries that band's R endmember values resampled
    across the patch width by linear interpolation and repeated down the
    rows, so concatenating the plane with an R-channel abundance patch
    gives the L+R input channels the mixing generator expects.
    """
    _check_patch_size(patch_size)
    columns = np.linspace(0.0, 1.0, patch_size)
    anchors = np.linspace(0.0, 1.0, M.num_endmembers) if M.num_endmembers > 1 else np.array([0.5])
    plane = np.empty((patch_size, patch_size, M.num_bands))
    for band in range(M.num_bands):
        row = np.interp(columns, anchors, M.signatures[band])
        plane[:, :, band] = row[None, :]
    return plane


class MixGenerator(nn.Module):
    """G_mix: abundance patch + endmember plane -> L-band patch (sigmoid).

    The plane is a fixed buffer derived from the endmember matrix, so a
    saved state dict restores the exact conditioning.
    """

    def __init__(
        self,
        M: EndmemberMatrix,
        patch_size: int,
        widths: Sequence[int] = DEFAULT_WIDTHS,
    ) -> None:
        super().__init__()
        _check_patch_size(patch_size)
        self.num_bands = M.num_bands
        self.num_endmembers = M.num_endmembers
        self.patch_size = patch_size
        plane = endmember_plane(M, patch_size)
        self.register_buffer(
            "plane", torch.from_numpy(np.ascontiguousarray(plane.transpose(2, 0, 1))).float()
        )
        self.net = ConvEncoderDecoder(
            M.num_bands + M.num_endmembers, M.num_bands, widths, head="sigmoid"
        )

    def forward(self, a: torch.Tensor) -> torch.Tensor:
        if a.shape[1] != self.num_endmembers:
            raise DataError(f"expected {self.num_endmembers} channels, got {a.shape[1]}")
        if a.shape[2] != self.patch_size or a.shape[3] != self.patch_size:
            raise DataError(
                f"expected {self.patch_size}x{self.patch_size} patches, got {tuple(a.shape[2:])}"
            )
        plane = self.plane.to(dtype=a.dtype).expand(a.shape[0], -1, -1, -1)
        return self.net(torch.cat([a, plane], dim=1))


class PatchDiscriminator(nn.Module):
    """Three convolution stages plus a fully connected sigmoid head.

    Stages use stride-2 4x4 kernels while the running spatial extent is
    at least 8 and stride-1 3x3 kernels below that, so the same recipe
    covers full-size and miniature patches.
    """

    def __init__(
        self, in_channels: int, patch_size: int, widths: Sequence[int] = DEFAULT_WIDTHS
    ) -> None:
        super().__init__()
        if patch_size < 4:
            raise ConfigError(f"discriminator patches must be >= 4 px, got {patch_size}")
        if len(widths) != 3 or any(w < 1 for w in widths):
            raise ConfigError(f"widths must be three positive ints, got {widths}")
        self.in_channels = in_channels
        self.patch_size = patch_size
        layers = []
        channels = in_channels
        spatial = patch_size
        for width in widths:
            if spatial >= 8:
                layers += [nn.Conv2d(channels, width, 4, stride=2, padding=1)]
                spatial //= 2
            else:
                layers += [nn.Conv2d(channels, width, 3, stride=1, padding=1)]
            layers += [nn.LeakyReLU(0.2)]
            channels = width
        self.features = nn.Sequential(*layers)
        self.classifier = nn.Linear(channels * spatial * spatial, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels or x.shape[2] != self.patch_size:
            raise DataError(
                f"expected (N, {self.in_channels}, {self.patch_size}, {self.patch_size}), "
                f"got {tuple(x.shape)}"
            )
        features = self.features(x)
        return torch.sigmoid(self.classifier(features.flatten(1)))


class PatchAutoencoder(nn.Module):
    """Convolutional autoencoder over image patches (sigmoid output).

    The semantic losses require a pre-trained, frozen autoencoder; the
    ``pretrained_flag`` buffer records that state and travels with the
    state dict.
    """

    def __init__(self, num_bands: int, widths: Sequence[int] = DEFAULT_WIDTHS) -> None:
        super().__init__()
        self.num_bands = num_bands
        self.net = ConvEncoderDecoder(num_bands, num_bands, widths, head="sigmoid")
        self.register_buffer("pretrained_flag", torch.zeros(1))

    @property
    def is_pretrained(self) -> bool:
        return bool(self.pretrained_flag.item() > 0.5)

    def mark_pretrained(self) -> None:
        """Freeze parameters and record that pre-training completed."""
        self.pretrained_flag.fill_(1.0)
        for parameter in self.parameters():
            parameter.requires_grad_(False)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        if y.shape[1] != self.num_bands:
            raise DataError(f"expected {self.num_bands} channels, got {y.shape[1]}")
        return self.net(y)


def patches_to_tensor(patches: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """(N, H, W, C) numpy stack -> (N, C, H, W) torch tensor."""
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 4:
        raise DataError(f"expected (N, H, W, C) patches, got shape {patches.shape}")
    return torch.from_numpy(np.ascontiguousarray(patches.transpose(0, 3, 1, 2))).to(dtype)


def tensor_to_patches(tensor: torch.Tensor) -> np.ndarray:
    """(N, C, H, W) torch tensor -> (N, H, W, C) float64 numpy stack."""
    if tensor.ndim != 4:
        raise DataError(f"expected (N, C, H, W) tensor, got shape {tuple(tensor.shape)}")
    return tensor.detach().cpu().double().numpy().transpose(0, 2, 3, 1)


def unmix_patch(patch: np.ndarray, model: UnmixGenerator) -> np.ndarray:
    """Run G_unmix on one (H, W, L) patch, returning (H, W, R)."""
    tensor = patches_to_tensor(patch[None, ...], dtype=next(model.parameters()).dtype)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        out = model(tensor)
    model.train(was_training)
    return tensor_to_patches(out)[0]


def mix_patch(a: np.ndarray, model: MixGenerator) -> np.ndarray:
    """Run G_mix on one (H, W, R) abundance patch, returning (H, W, L)."""
    tensor = patches_to_tensor(a[None, ...], dtype=next(model.parameters()).dtype)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        out = model(tensor)
    model.train(was_training)
    return tensor_to_patches(out)[0]
