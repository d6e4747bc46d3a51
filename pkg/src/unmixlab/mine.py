"""Mutual-information estimation via a trained statistics network.

The estimator maximizes the Donsker-Varadhan lower bound
``E_joint[T(x, y)] - log E_marginal[exp T(x, y)]`` over a small
fully connected network T.  The marginal expectation uses in-batch
shuffling of the second argument, and the log-mean-exp is computed with
a log-sum-exp for stability.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, DataError, NumericalError


class MineStatistics(nn.Module):
    """Two-layer fully connected statistics network T(x, y) -> scalar."""

    def __init__(self, x_dim: int, y_dim: int, hidden: int = 64) -> None:
        super().__init__()
        if x_dim < 1 or y_dim < 1 or hidden < 1:
            raise ConfigError(f"dimensions must be positive, got {(x_dim, y_dim, hidden)}")
        self.x_dim = x_dim
        self.y_dim = y_dim
        self.net = nn.Sequential(
            nn.Linear(x_dim + y_dim, hidden),
            nn.ReLU(),
            nn.Linear(hidden, 1),
        )

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DataError(f"expected matching (N, d) inputs, got {tuple(x.shape)} and {tuple(y.shape)}")
        if x.shape[1] != self.x_dim or y.shape[1] != self.y_dim:
            raise DataError(
                f"expected dims ({self.x_dim}, {self.y_dim}), got ({x.shape[1]}, {y.shape[1]})"
            )
        return self.net(torch.cat([x, y], dim=1)).squeeze(1)


def dv_bound(t_joint: torch.Tensor, t_marginal: torch.Tensor) -> torch.Tensor:
    """Donsker-Varadhan lower bound from statistics-network outputs."""
    if t_joint.ndim != 1 or t_marginal.ndim != 1:
        raise DataError("dv_bound expects 1-D score vectors")
    log_mean_exp = torch.logsumexp(t_marginal, dim=0) - np.log(t_marginal.shape[0])
    return t_joint.mean() - log_mean_exp


def mi_lower_bound(
    net: MineStatistics,
    x: torch.Tensor,
    y: torch.Tensor,
    permutation: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """DV bound for paired samples; marginal via shuffling y.

    ``permutation`` pins the shuffle for reproducible evaluations; when
    omitted a derangement-ish roll by one is used (deterministic and
    sufficient for the in-batch marginal).
    """
    if permutation is None:
        permutation = torch.roll(torch.arange(y.shape[0]), shifts=1)
    return dv_bound(net(x, y), net(x, y[permutation]))


def subpatch_pairs(
    x_img: torch.Tensor,
    y_img: torch.Tensor,
    size: int,
    generator: Optional[torch.Generator] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Flattened local windows at matched random locations.

    Crops one ``size``×``size`` window per sample, at the same origin in
    both images, and flattens it — the paired local patches whose mutual
    information the semantic loss estimates.
    """
    if x_img.ndim != 4 or y_img.ndim != 4:
        raise DataError("expected (N, C, H, W) image batches")
    if x_img.shape[0] != y_img.shape[0] or x_img.shape[2:] != y_img.shape[2:]:
        raise DataError(
            f"mismatched batches: {tuple(x_img.shape)} vs {tuple(y_img.shape)}"
        )
    n, _, h, w = x_img.shape
    if size > h or size > w:
        raise DataError(f"window {size} exceeds patch extent {(h, w)}")
    rows = torch.randint(0, h - size + 1, (n,), generator=generator)
    cols = torch.randint(0, w - size + 1, (n,), generator=generator)
    x_flat = torch.stack(
        [x_img[i, :, r : r + size, c : c + size].reshape(-1) for i, (r, c) in enumerate(zip(rows, cols))]
    )
    y_flat = torch.stack(
        [y_img[i, :, r : r + size, c : c + size].reshape(-1) for i, (r, c) in enumerate(zip(rows, cols))]
    )
    return x_flat, y_flat


def estimate_mutual_information(
    x: np.ndarray,
    y: np.ndarray,
    hidden: int = 64,
    steps: int = 600,
    batch_size: int = 512,
    learning_rate: float = 1e-3,
    seed: int = 0,
) -> float:
    """Train a statistics network and return the converged MI estimate (nats).

    Stochastic DV maximization over minibatches, then one full-data bound
    evaluation with the trained network.  Deterministic per seed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise DataError(f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise DataError("need at least two samples")
    torch.manual_seed(seed)
    net = MineStatistics(x.shape[1], y.shape[1], hidden=hidden)
    optimizer = torch.optim.Adam(net.parameters(), lr=learning_rate)
    rng = np.random.default_rng(seed)
    x_t = torch.from_numpy(x).float()
    y_t = torch.from_numpy(y).float()
    n = x.shape[0]
    for _ in range(steps):
        idx = torch.from_numpy(rng.integers(0, n, size=min(batch_size, n)))
        shuffle = torch.from_numpy(rng.permutation(idx.shape[0]))
        bound = mi_lower_bound(net, x_t[idx], y_t[idx], permutation=shuffle)
        loss = -bound
        if not torch.isfinite(loss):
            raise NumericalError("statistics-network training diverged (non-finite bound)")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    with torch.no_grad():
        shuffle = torch.from_numpy(rng.permutation(n))
        estimate = mi_lower_bound(net, x_t, y_t, permutation=shuffle)
    return float(estimate)
