"""Golub-Kahan-Lanczos bidiagonalization over a Hankel operator, and model-order selection."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NoSignalEnergy, ValidationError
from .hankel import HankelOperator

BREAKDOWN = 1e-300
# a new Lanczos vector this small relative to ||H|| is rounding noise, not a direction
RELATIVE_BREAKDOWN = 1e3 * np.finfo(float).eps
K_CAP = 40
ORDER_RULES = ("energy", "detect")


@dataclass(frozen=True)
class LanczosConfig:
    """``k_max`` defaults to ``2 * expected_components + 5`` (capped at 40).

    ``expected_components`` counts real tones. ``reorth_threshold`` defaults to
    ``sqrt(eps)``; it decides when a second Gram-Schmidt pass is needed.
    """

    expected_components: int = 5
    k_max: int | None = None
    eps: float = 1e-6
    reorth_threshold: float | None = None
    rng_seed: int = 0
    min_iterations: int = 3

    def __post_init__(self):
        if self.k_max is None:
            object.__setattr__(self, "k_max", min(2 * self.expected_components + 5, K_CAP))
        if self.reorth_threshold is None:
            object.__setattr__(self, "reorth_threshold", math.sqrt(self.eps))
        if not 2 <= self.k_max <= K_CAP:
            raise ValidationError(f"k_max must lie in [2, {K_CAP}], got {self.k_max}")
        if not 0 < self.eps < 1:
            raise ValidationError("eps must lie in (0, 1)")
        if self.reorth_threshold <= 0:
            raise ValidationError("reorth_threshold must be > 0")


@dataclass
class LanczosResult:
    """Outputs of k steps: ``H^T U = V C`` with C the (k+1) x k lower-bidiagonal matrix."""

    alphas: np.ndarray
    betas: np.ndarray
    U: np.ndarray  # L x k
    V: np.ndarray  # M x (k+1)
    iterations: int
    converged: bool = False
    breakdown: bool = False
    reorth_passes: int = 0
    rng_seed: int = 0


@dataclass
class SubspaceDecomposition:
    alphas: np.ndarray
    betas: np.ndarray
    U_k: np.ndarray
    V_k: np.ndarray
    singular_values: np.ndarray
    left_rot: np.ndarray
    right_rot: np.ndarray
    k_used: int
    p: int
    signal_order: int
    frobenius_sq: float
    rows: int
    converged: bool = False
    breakdown: bool = False
    rng_seed: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def noise_floor(self) -> float:
        """Mean energy per dimension not captured by the k Ritz values."""
        k = self.k_used
        resid = max(self.frobenius_sq - float(np.sum(self.singular_values ** 2)), 0.0)
        return resid / max(self.rows - k, 1)


def _orthogonalize(w, basis, threshold):
    # Classical Gram-Schmidt, repeated once when the result is still visibly
    # non-orthogonal (DGKS criterion).
    passes = 0
    if basis.shape[1] == 0:
        return w, passes
    for _ in range(2):
        norm_before = np.linalg.norm(w)
        h = basis.T @ w
        w = w - basis @ h
        passes += 1
        norm_after = np.linalg.norm(w)
        if norm_after == 0 or np.max(np.abs(basis.T @ w)) <= threshold * norm_after:
            break
        if norm_after > 0.7071 * norm_before:
            break
    return w, passes


def lanczos_bidiag(op: HankelOperator, cfg: LanczosConfig = LanczosConfig()) -> LanczosResult:
    """k steps of Golub-Kahan bidiagonalization driven by FFT Hankel products.

    Recurrence (start v_1 random, unit norm)::

        alpha_j u_j     = H v_j   - beta_j u_{j-1}
        beta_{j+1} v_{j+1} = H^T u_j - alpha_j v_j

    Every new vector is orthogonalized against all earlier ones. Iteration
    stops early once consecutive alphas and betas change by less than
    ``cfg.eps`` relative (after ``cfg.min_iterations`` steps), or on breakdown:
    a norm below 1e-300, or at rounding level relative to the largest alpha or
    beta seen so far (the Krylov space is exhausted).
    """
    L, M = op.shape
    k_max = min(cfg.k_max, L, M)
    rng = np.random.default_rng(cfg.rng_seed)
    v = rng.standard_normal(M)
    v /= np.linalg.norm(v)

    U = np.zeros((L, k_max))
    V = np.zeros((M, k_max + 1))
    V[:, 0] = v
    alphas = np.zeros(k_max)
    betas = np.zeros(k_max)
    passes = 0
    converged = breakdown = False
    scale = 0.0  # running lower bound on ||H||_2
    j = 0
    while j < k_max:
        u = op.hv(V[:, j])
        if j > 0:
            u -= betas[j - 1] * U[:, j - 1]
        u, n_p = _orthogonalize(u, U[:, :j], cfg.reorth_threshold)
        passes += n_p
        a = np.linalg.norm(u)
        if a < BREAKDOWN or a <= RELATIVE_BREAKDOWN * scale:
            breakdown = True
            break
        alphas[j] = a
        U[:, j] = u / a

        w = op.htu(U[:, j]) - a * V[:, j]
        w, n_p = _orthogonalize(w, V[:, :j + 1], cfg.reorth_threshold)
        passes += n_p
        scale = max(scale, a)
        b = np.linalg.norm(w)
        j += 1
        if b < BREAKDOWN or b <= RELATIVE_BREAKDOWN * max(scale, b):
            breakdown = True
            break
        betas[j - 1] = b
        scale = max(scale, b)
        V[:, j] = w / b

        if j >= max(cfg.min_iterations, 2):
            da = abs(alphas[j - 1] - alphas[j - 2]) / alphas[j - 1]
            db = abs(betas[j - 1] - betas[j - 2]) / betas[j - 1]
            if da < cfg.eps and db < cfg.eps:
                converged = True
                break

    k = j
    if breakdown and k == 0:
        # operator is numerically zero
        return LanczosResult(np.zeros(0), np.zeros(0), U[:, :0], V[:, :1], 0,
                             breakdown=True, rng_seed=cfg.rng_seed)
    return LanczosResult(alphas[:k].copy(), betas[:k].copy(), U[:, :k].copy(),
                         V[:, :k + 1].copy(), k, converged, breakdown, passes, cfg.rng_seed)


def bidiag_matrix(alphas, betas) -> np.ndarray:
    """(k+1) x k lower-bidiagonal matrix: alphas on the diagonal, betas below it.

    A zero trailing beta (breakdown) still yields the (k+1) x k shape.
    """
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    k = alphas.size
    if k < 1:
        raise ValidationError("need at least one bidiagonal step")
    if betas.size not in (k - 1, k):
        raise ValidationError("betas must have k or k-1 entries")
    C = np.zeros((k + 1, k))
    C[np.arange(k), np.arange(k)] = alphas
    C[np.arange(1, betas.size + 1), np.arange(betas.size)] = betas
    return C


def bidiag_svd(alphas, betas):
    """Singular values (descending) and rotations of the small bidiagonal matrix.

    Returns ``(s, P, Q)`` with ``C = P[:, :k] diag(s) Q^T``; P is (k+1) x (k+1),
    Q is k x k.
    """
    C = bidiag_matrix(alphas, betas)
    P, s, Qt = np.linalg.svd(C, full_matrices=True)
    return s, P, Qt.T


def select_order(singular_values, threshold: float = 0.9) -> int:
    """Smallest k whose leading singular values hold ``threshold`` of the energy."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or np.any(s < 0):
        raise ValidationError("singular values must be non-empty and >= 0")
    if np.any(np.diff(s) > 1e-12 * max(s[0], 1.0)):
        raise ValidationError("singular values must be non-increasing")
    if not 0 < threshold <= 1:
        raise ValidationError("threshold must lie in (0, 1]")
    e = s ** 2
    total = e.sum()
    if total <= 0:
        raise NoSignalEnergy("no signal energy")
    ratio = np.cumsum(e) / total
    # guard the comparison against rounding in the last cumulative term
    return int(np.argmax(ratio >= threshold * (1 - 1e-12)) + 1)


def _even_up(p: int) -> int:
    return p + (p % 2)


def decompose(op: HankelOperator, cfg: LanczosConfig = LanczosConfig(),
              order_threshold: float = 0.9, detect_ratio: float | None = 10.0,
              pair_real: bool = True, order_rule: str = "energy") -> SubspaceDecomposition:
    """Run Lanczos, rotate to Ritz vectors, and pick the model order.

    ``p`` is the cumulative-energy order. ``signal_order`` additionally rounds
    up to whole real-tone pairs and drops components whose energy is below
    ``detect_ratio`` times the residual per-dimension noise floor; it may be 0.
    With ``order_rule="detect"`` the energy rule is bypassed and the order is
    the gated count alone, so a weak tone next to a dominant one survives.
    """
    if order_rule not in ORDER_RULES:
        raise ValidationError(f"order_rule must be one of {ORDER_RULES}")
    res = lanczos_bidiag(op, cfg)
    fro = op.frobenius_sq()
    notes = []
    if res.iterations == 0:
        raise NoSignalEnergy("no signal energy")
    s, P, Q = bidiag_svd(res.alphas, res.betas)
    k = res.iterations
    p = select_order(s, order_threshold)
    dec = SubspaceDecomposition(
        alphas=res.alphas, betas=res.betas, U_k=res.U, V_k=res.V,
        singular_values=s, left_rot=Q, right_rot=P, k_used=k, p=p,
        signal_order=p, frobenius_sq=fro, rows=min(op.L, op.M),
        converged=res.converged, breakdown=res.breakdown, rng_seed=res.rng_seed,
        warnings=notes,
    )
    order = _even_up(p) if pair_real else p
    if detect_ratio is not None:
        floor = dec.noise_floor
        detected = int(np.sum(s ** 2 > detect_ratio * floor)) if floor > 0 else s.size
        detected = _even_up(detected) if pair_real else detected
        order = detected if order_rule == "detect" else min(order, detected)
    order = min(order, k)
    if order >= k:
        notes.append("signal order equals Krylov dimension; no noise directions resolved")
    dec.signal_order = order
    return dec


def signal_basis(dec: SubspaceDecomposition, order: int | None = None) -> np.ndarray:
    """Orthonormal M x p basis of the dominant right singular subspace of H."""
    p = dec.signal_order if order is None else order
    if p >= dec.k_used:
        warnings.warn("signal order equals Krylov dimension", RuntimeWarning, stacklevel=2)
    # H^T U Q = V P S  =>  right singular vectors are V P
    return dec.V_k @ dec.right_rot[:, :p]


def left_basis(dec: SubspaceDecomposition, order: int | None = None) -> np.ndarray:
    p = dec.signal_order if order is None else order
    return dec.U_k @ dec.left_rot[:, :p]


def estimate_snr(dec: SubspaceDecomposition, order: int | None = None) -> float:
    """Frame SNR (signal power over noise power) from the subspace energy split.

    Noise per dimension is the residual energy outside the top ``order``
    values spread over the remaining dimensions; the part of it that leaks into
    the signal subspace is removed before forming the ratio.
    """
    p = dec.signal_order if order is None else order
    if p == 0:
        return 0.0
    sig = float(np.sum(dec.singular_values[:p] ** 2))
    resid = max(dec.frobenius_sq - sig, 0.0)
    per_dim = resid / max(dec.rows - p, 1)
    noise_total = per_dim * dec.rows
    if noise_total <= 0:
        return math.inf
    return max(sig - p * per_dim, 0.0) / noise_total
