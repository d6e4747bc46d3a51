"""Evaluation metrics: AAD, AID, SAD, RE, and report serialization.

Angle metrics are reported in radians; AID is the per-pixel symmetrized
KL divergence in nats with entries floored at 1e-9 before the logs.
Metrics assume abundance channels already correspond between the two
arguments; :func:`align_endmembers` provides an optional assignment for
workflows where they do not.
"""

from __future__ import annotations

import csv
import io as _stringio
import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DataError
from .types import AbundanceMap, EndmemberMatrix, SpectralCube

AID_FLOOR = 1e-9

ArrayLike = Union[np.ndarray, AbundanceMap, SpectralCube]


def _vectors(x: ArrayLike, name: str) -> np.ndarray:
    """Flatten (H, W, C) or (N, C) input (or wrapper) to (N, C) float64."""
    if isinstance(x, (AbundanceMap, SpectralCube)):
        x = x.data
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x.reshape(-1, x.shape[2])
    if x.ndim != 2:
        raise DataError(f"{name} must have 2 or 3 dims, got shape {x.shape}")
    return x


def _pairwise(a: ArrayLike, b: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    va, vb = _vectors(a, "first argument"), _vectors(b, "second argument")
    if va.shape != vb.shape:
        raise DataError(f"shape mismatch: {va.shape} vs {vb.shape}")
    return va, vb


def _mean_angle(va: np.ndarray, vb: np.ndarray) -> float:
    norms_a = np.linalg.norm(va, axis=1, keepdims=True)
    norms_b = np.linalg.norm(vb, axis=1, keepdims=True)
    if np.any(norms_a == 0.0) or np.any(norms_b == 0.0):
        raise DataError("zero-norm vector; angle undefined")
    # arctan2 of the chord lengths instead of arccos of the cosine: exact
    # at 0 and pi and stable where arccos loses half the significand.
    ua, ub = va / norms_a, vb / norms_b
    opposite = np.linalg.norm(ua - ub, axis=1)
    adjacent = np.linalg.norm(ua + ub, axis=1)
    return float(np.mean(2.0 * np.arctan2(opposite, adjacent)))


def aad(a: ArrayLike, a_hat: ArrayLike) -> float:
    """Abundance angle distance: mean per-pixel angle, radians."""
    return _mean_angle(*_pairwise(a, a_hat))


def sad(y: ArrayLike, y_hat: ArrayLike) -> float:
    """Spectral angle distance: mean per-pixel angle between spectra."""
    return _mean_angle(*_pairwise(y, y_hat))


def aid(a: ArrayLike, a_hat: ArrayLike) -> float:
    """Abundance information divergence: mean symmetrized KL, nats."""
    va, vb = _pairwise(a, a_hat)
    va = np.maximum(va, AID_FLOOR)
    vb = np.maximum(vb, AID_FLOOR)
    log_ratio = np.log(va / vb)
    return float(np.mean(np.sum((va - vb) * log_ratio, axis=1)))


def re(y: ArrayLike, y_hat: ArrayLike) -> float:
    """Reconstruction error: RMSE over all pixels and bands."""
    va, vb = _pairwise(y, y_hat)
    return float(np.sqrt(np.mean((va - vb) ** 2)))


def align_endmembers(M: EndmemberMatrix, reference: EndmemberMatrix) -> Tuple[int, ...]:
    """Permutation mapping columns of ``M`` onto ``reference`` columns.

    Solves the assignment minimizing total spectral angle; ``result[j]``
    is the column of ``M`` matched to reference column ``j``.  Useful on
    real data where channel order is arbitrary.  Accepts either library
    objects or plain (bands, endmembers) arrays.
    """
    m_sig = M.signatures if hasattr(M, "signatures") else np.asarray(M, dtype=np.float64)
    ref_sig = (
        reference.signatures
        if hasattr(reference, "signatures")
        else np.asarray(reference, dtype=np.float64)
    )
    if m_sig.shape != ref_sig.shape:
        raise DataError(f"library shapes differ: {m_sig.shape} vs {ref_sig.shape}")
    a = m_sig / np.linalg.norm(m_sig, axis=0)
    b = ref_sig / np.linalg.norm(ref_sig, axis=0)
    angles = np.arccos(np.clip(a.T @ b, -1.0, 1.0))
    rows, cols = linear_sum_assignment(angles)
    permutation = np.empty(m_sig.shape[1], dtype=np.int64)
    permutation[cols] = rows
    return tuple(int(i) for i in permutation)


def permute_channels(a: AbundanceMap, permutation: Tuple[int, ...]) -> AbundanceMap:
    """Reorder abundance channels by ``permutation`` (from align_endmembers)."""
    if sorted(permutation) != list(range(a.num_endmembers)):
        raise DataError(f"{permutation} is not a permutation of {a.num_endmembers} channels")
    return AbundanceMap(a.data[:, :, list(permutation)], provenance=a.provenance)


@dataclass(frozen=True)
class EvalReport:
    """One evaluation row: abundance metrics plus reconstruction metrics."""

    aad: float
    aid: float
    re: Optional[float] = None
    sad: Optional[float] = None
    per_endmember: Dict[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self) -> None:
        if not (0.0 <= self.aad <= np.pi):
            raise DataError(f"aad out of [0, pi]: {self.aad}")
        if self.aid < 0.0:
            raise DataError(f"aid must be >= 0: {self.aid}")
        if self.sad is not None and not (0.0 <= self.sad <= np.pi):
            raise DataError(f"sad out of [0, pi]: {self.sad}")
        if self.re is not None and self.re < 0.0:
            raise DataError(f"re must be >= 0: {self.re}")

    def to_json(self) -> str:
        payload = {"label": self.label, "aad": self.aad, "aid": self.aid}
        if self.re is not None:
            payload["re"] = self.re
        if self.sad is not None:
            payload["sad"] = self.sad
        if self.per_endmember:
            payload["per_endmember"] = dict(self.per_endmember)
        return json.dumps(payload, sort_keys=True)

    def to_csv_row(self) -> str:
        """Header line + one data row, for pasting into benchmark tables."""
        buffer = _stringio.StringIO()
        writer = csv.writer(buffer)
        fields = ["label", "aad", "aid", "re", "sad"]
        values = [self.label, self.aad, self.aid, self.re, self.sad]
        writer.writerow(fields)
        writer.writerow(["" if v is None else v for v in values])
        return buffer.getvalue()

    @staticmethod
    def from_json(text: str) -> "EvalReport":
        payload = json.loads(text)
        return EvalReport(
            aad=payload["aad"],
            aid=payload["aid"],
            re=payload.get("re"),
            sad=payload.get("sad"),
            per_endmember=payload.get("per_endmember", {}),
            label=payload.get("label", ""),
        )


def evaluate(
    truth: AbundanceMap,
    estimate: AbundanceMap,
    cube: Optional[SpectralCube] = None,
    reconstruction: Optional[SpectralCube] = None,
    label: str = "",
    endmember_names: Optional[Tuple[str, ...]] = None,
) -> EvalReport:
    """Bundle the four metrics into one report.

    Reconstruction metrics are filled only when both cubes are given.
    ``endmember_names`` keys an optional per-channel AAD breakdown.
    """
    report_re = report_sad = None
    if (cube is None) != (reconstruction is None):
        raise DataError("re/sad need both the raw cube and the reconstruction")
    if cube is not None and reconstruction is not None:
        report_re = re(cube, reconstruction)
        report_sad = sad(cube, reconstruction)
    per_endmember: Dict[str, float] = {}
    if endmember_names is not None:
        if len(endmember_names) != truth.num_endmembers:
            raise DataError(
                f"{len(endmember_names)} names for {truth.num_endmembers} channels"
            )
        for k, name in enumerate(endmember_names):
            diff = truth.data[:, :, k] - estimate.data[:, :, k]
            per_endmember[name] = float(np.sqrt(np.mean(diff**2)))
    return EvalReport(
        aad=aad(truth, estimate),
        aid=aid(truth, estimate),
        re=report_re,
        sad=report_sad,
        per_endmember=per_endmember,
        label=label,
    )
