"""Classical model-based unmixers used as comparison oracles.

``fcls`` solves the fully constrained (nonnegative, sum-to-one) least
squares problem per pixel with an active-set method; ``fit_ppnm`` and
``fit_mlm`` wrap it in alternating minimization over the respective
nonlinearity parameter.  All solvers return simplex-feasible abundances
and enforce a non-increasing objective across alternating iterations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import DataError, NumericalError
from .mixing import mlm_transform
from .types import AbundanceMap, EndmemberMatrix, SpectralCube

CONDITION_LIMIT = 1e10
STATIONARITY_TOL = 1e-8
OBJECTIVE_TOL = 1e-9
MAX_OUTER = 200
_FEAS_TOL = 1e-12
_MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class FitResult:
    """Per-pixel unmixing output of one baseline method."""

    abundance: AbundanceMap
    residual: np.ndarray
    nonlinearity: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        residual = np.asarray(self.residual, dtype=np.float64)
        object.__setattr__(self, "residual", residual)
        h, w = self.abundance.data.shape[:2]
        if residual.shape != (h, w):
            raise DataError(f"residual shape {residual.shape} != image extent {(h, w)}")
        if residual.min() < 0.0 or not np.all(np.isfinite(residual)):
            raise DataError("residual must be finite and >= 0")
        if self.nonlinearity is not None:
            nonlinearity = np.asarray(self.nonlinearity, dtype=np.float64)
            object.__setattr__(self, "nonlinearity", nonlinearity)
            if nonlinearity.shape != (h, w):
                raise DataError(
                    f"nonlinearity shape {nonlinearity.shape} != image extent {(h, w)}"
                )


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DataError(f"project_to_simplex expects a vector, got shape {v.shape}")
    sorted_desc = np.sort(v)[::-1]
    cumulative = np.cumsum(sorted_desc) - 1.0
    ranks = np.arange(1, v.size + 1)
    support = sorted_desc - cumulative / ranks > 0
    rho = int(np.nonzero(support)[0][-1])
    theta = cumulative[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def _check_conditioning(M: EndmemberMatrix) -> None:
    condition = np.linalg.cond(M.signatures)
    if condition > CONDITION_LIMIT:
        raise NumericalError(
            f"endmember matrix is nearly collinear (condition number {condition:.3e})"
        )


def _kkt_solve(MtM: np.ndarray, mty: np.ndarray, passive: np.ndarray) -> np.ndarray:
    """Sum-to-one equality-constrained least squares on the passive set."""
    idx = np.nonzero(passive)[0]
    k = idx.size
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = MtM[np.ix_(idx, idx)]
    system[:k, k] = 1.0
    system[k, :k] = 1.0
    rhs = np.concatenate([mty[idx], [1.0]])
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular KKT system on passive set {idx}") from exc
    full = np.zeros(passive.size)
    full[idx] = solution[:k]
    return full


def _fcls_active_set(MtM: np.ndarray, mty: np.ndarray) -> np.ndarray:
    """Active-set iteration for min ||y - Ma|| s.t. a >= 0, sum a = 1."""
    r = MtM.shape[0]
    passive = np.ones(r, dtype=bool)
    x = np.full(r, 1.0 / r)
    for _ in range(30 * r * r + 10):
        z = _kkt_solve(MtM, mty, passive)
        if np.all(z[passive] >= -_FEAS_TOL):
            x = np.maximum(z, 0.0)
            gradient = MtM @ x - mty
            nu = -float(np.mean(gradient[passive]))
            active = ~passive
            if not np.any(active):
                return x
            multipliers = gradient[active] + nu
            worst = np.min(multipliers)
            if worst >= -STATIONARITY_TOL:
                return x
            free_me = np.nonzero(active)[0][int(np.argmin(multipliers))]
            passive[free_me] = True
            continue
        # Step from the feasible x toward z until the first coordinate
        # hits zero, then clamp that coordinate (Lawson-Hanson step).
        negatives = passive & (z < -_FEAS_TOL)
        ratios = x[negatives] / (x[negatives] - z[negatives])
        alpha = float(np.min(ratios))
        x = x + alpha * (z - x)
        hit = np.nonzero(negatives)[0][int(np.argmin(ratios))]
        x[hit] = 0.0
        passive[hit] = False
        x = np.maximum(x, 0.0)
        if not np.any(passive):
            raise NumericalError("active-set iteration emptied the passive set")
    raise NumericalError("active-set iteration failed to converge")


def fcls_pixel(y: np.ndarray, M: EndmemberMatrix) -> np.ndarray:
    """Fully constrained least-squares abundance of a single spectrum."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (M.num_bands,):
        raise DataError(f"spectrum shape {y.shape} vs {M.num_bands} bands")
    _check_conditioning(M)
    MtM = M.signatures.T @ M.signatures
    return _fcls_active_set(MtM, M.signatures.T @ y)


def _fcls_flat(y_flat: np.ndarray, M: EndmemberMatrix) -> np.ndarray:
    """FCLS for (N, L) spectra: vectorized interior solve + active-set fallback.

    The sum-to-one equality solution with no active constraints is shared
    by all pixels up to the right-hand side, so one batched linear solve
    handles every pixel whose unconstrained-sign solution is feasible.
    """
    m = M.signatures
    r = M.num_endmembers
    MtM = m.T @ m
    system = np.zeros((r + 1, r + 1))
    system[:r, :r] = MtM
    system[:r, r] = 1.0
    system[r, :r] = 1.0
    rhs = np.concatenate([m.T @ y_flat.T, np.ones((1, y_flat.shape[0]))], axis=0)
    try:
        interior = np.linalg.solve(system, rhs)[:r].T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular sum-to-one system; check endmember matrix") from exc
    a_flat = np.maximum(interior, 0.0)
    needs_active_set = np.nonzero(np.min(interior, axis=1) < -_FEAS_TOL)[0]
    mty_all = y_flat @ m
    for i in needs_active_set:
        a_flat[i] = _fcls_active_set(MtM, mty_all[i])
    a_flat /= a_flat.sum(axis=1, keepdims=True)
    return a_flat


def _to_result(
    cube: SpectralCube,
    a_flat: np.ndarray,
    reconstruction_flat: np.ndarray,
    nonlinearity: Optional[np.ndarray],
    label: str,
) -> FitResult:
    h, w, l = cube.data.shape
    y_flat = cube.data.reshape(-1, l)
    residual = np.sqrt(np.mean((reconstruction_flat - y_flat) ** 2, axis=1)).reshape(h, w)
    abundance = AbundanceMap(
        a_flat.reshape(h, w, -1), provenance=f"method={label} source={cube.provenance}"
    )
    return FitResult(abundance=abundance, residual=residual, nonlinearity=nonlinearity)


def fcls(cube: SpectralCube, M: EndmemberMatrix) -> FitResult:
    """Fully constrained least squares, pixel by pixel."""
    if cube.num_bands != M.num_bands:
        raise DataError(f"cube has {cube.num_bands} bands, matrix has {M.num_bands}")
    _check_conditioning(M)
    y_flat = cube.data.reshape(-1, cube.num_bands)
    a_flat = _fcls_flat(y_flat, M)
    return _to_result(cube, a_flat, a_flat @ M.signatures.T, None, "fcls")


def _projected_gradient(
    a: np.ndarray,
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    steps: int = 15,
) -> np.ndarray:
    """Armijo-backtracked projected gradient descent on the simplex."""
    value = objective(a)
    for _ in range(steps):
        g = gradient(a)
        accepted = False
        t = 1.0
        for _ in range(30):
            candidate = project_to_simplex(a - t * g)
            candidate_value = objective(candidate)
            if candidate_value <= value - 1e-4 * float(g @ (a - candidate)) and candidate_value <= value:
                a, value, accepted = candidate, candidate_value, True
                break
            t *= 0.5
        if not accepted:
            break
    return a


def _golden_section(h: Callable[[float], float], lo: float, hi: float, iters: int = 60) -> float:
    """Golden-section search for the minimizer of a unimodal h on [lo, hi]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    hc, hd = h(c), h(d)
    for _ in range(iters):
        if hc < hd:
            b, d, hd = d, c, hc
            c = b - inv_phi * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + inv_phi * (b - a)
            hd = h(d)
    return (a + b) / 2.0


def _alternate(
    a0: np.ndarray,
    theta0: float,
    update_theta: Callable[[np.ndarray, float], float],
    objective: Callable[[np.ndarray, float], float],
    gradient_a: Callable[[np.ndarray, float], np.ndarray],
) -> Tuple[np.ndarray, float, float]:
    """Alternating minimization with a hard monotonicity check."""
    a, theta = a0, theta0
    value = objective(a, theta)
    for _ in range(MAX_OUTER):
        theta_candidate = update_theta(a, theta)
        if objective(a, theta_candidate) <= value:
            theta = theta_candidate
        a = _projected_gradient(
            a, lambda v: objective(v, theta), lambda v: gradient_a(v, theta)
        )
        new_value = objective(a, theta)
        if new_value > value + _MONOTONE_SLACK:
            raise NumericalError(
                f"alternating objective increased: {value} -> {new_value}"
            )
        if value - new_value < OBJECTIVE_TOL:
            value = new_value
            break
        value = new_value
    return a, theta, value


def fit_ppnm(cube: SpectralCube, M: EndmemberMatrix) -> FitResult:
    """Pixelwise fit of the polynomial post-nonlinear model y = x + b*x*x.

    Alternates a closed-form update of b (1-D least squares given the
    linear mixture x = M a) with projected gradient steps on a; starts
    from the FCLS abundance with b = 0 so the objective begins at the
    linear optimum.
    """
    if cube.num_bands != M.num_bands:
        raise DataError(f"cube has {cube.num_bands} bands, matrix has {M.num_bands}")
    _check_conditioning(M)
    m = M.signatures
    h, w, l = cube.data.shape
    y_flat = cube.data.reshape(-1, l)
    a_flat = _fcls_flat(y_flat, M)
    b_map = np.zeros(y_flat.shape[0])
    reconstruction = np.empty_like(y_flat)

    for i, y in enumerate(y_flat):
        def objective(a: np.ndarray, b: float) -> float:
            x = m @ a
            r = x + b * x * x - y
            return 0.5 * float(r @ r)

        def gradient_a(a: np.ndarray, b: float) -> np.ndarray:
            x = m @ a
            r = x + b * x * x - y
            return m.T @ ((1.0 + 2.0 * b * x) * r)

        def update_b(a: np.ndarray, b: float) -> float:
            x = m @ a
            x2 = x * x
            denominator = float(x2 @ x2)
            if denominator == 0.0:
                return 0.0
            return float((y - x) @ x2) / denominator

        a, b, _ = _alternate(a_flat[i], 0.0, update_b, objective, gradient_a)
        a_flat[i] = a
        b_map[i] = b
        x = m @ a
        reconstruction[i] = x + b * x * x

    return _to_result(cube, a_flat, reconstruction, b_map.reshape(h, w), "ppnm")


def fit_mlm(cube: SpectralCube, M: EndmemberMatrix) -> FitResult:
    """Pixelwise fit of the multilinear model y = (1-P)x / (1-Px).

    Alternates a golden-section search for P on [0, 0.99] with projected
    gradient steps on the abundance; starts from FCLS with P = 0.
    """
    if cube.num_bands != M.num_bands:
        raise DataError(f"cube has {cube.num_bands} bands, matrix has {M.num_bands}")
    _check_conditioning(M)
    m = M.signatures
    h, w, l = cube.data.shape
    y_flat = cube.data.reshape(-1, l)
    a_flat = _fcls_flat(y_flat, M)
    p_map = np.zeros(y_flat.shape[0])
    reconstruction = np.empty_like(y_flat)

    for i, y in enumerate(y_flat):
        def objective(a: np.ndarray, p: float) -> float:
            r = mlm_transform(m @ a, p) - y
            return 0.5 * float(r @ r)

        def gradient_a(a: np.ndarray, p: float) -> np.ndarray:
            x = m @ a
            r = mlm_transform(x, p) - y
            return m.T @ (r * (1.0 - p) / (1.0 - p * x) ** 2)

        def update_p(a: np.ndarray, p: float) -> float:
            x = m @ a

            def h_of_p(candidate: float) -> float:
                r = mlm_transform(x, candidate) - y
                return 0.5 * float(r @ r)

            return _golden_section(h_of_p, 0.0, 0.99)

        a, p, _ = _alternate(a_flat[i], 0.0, update_p, objective, gradient_a)
        a_flat[i] = a
        p_map[i] = p
        reconstruction[i] = mlm_transform(m @ a, p)

    return _to_result(cube, a_flat, reconstruction, p_map.reshape(h, w), "mlm")


BASELINES: Dict[str, Callable[[SpectralCube, EndmemberMatrix], FitResult]] = {
    "fcls": fcls,
    "ppnm": fit_ppnm,
    "mlm": fit_mlm,
}
