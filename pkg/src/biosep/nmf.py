"""KL-divergence NMF with multiplicative updates.

Factorizes a non-negative matrix V (typically an STFT magnitude) into
W @ H by minimizing the generalized Kullback-Leibler divergence

    D(V || WH) = sum_ij [ v_ij * log(v_ij / (WH)_ij) - v_ij + (WH)_ij ]

with the standard multiplicative update rules, which keep both factors
non-negative and the divergence non-increasing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, ShapeMismatchError


@dataclass(frozen=True)
class NmfConfig:
    rank: int = 4
    max_iters: int = 500
    rel_tol: float = 1e-5
    epsilon: float = 1e-12
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class NmfModel:
    """Factor pair with the optimization trace that produced it."""

    W: np.ndarray  # (m, rank) mixing matrix
    H: np.ndarray  # (rank, n) source activation matrix
    rank: int
    divergence_trace: tuple[float, ...]
    seed: int

    def to_json(self) -> str:
        doc = {
            "rank": self.rank,
            "seed": self.seed,
            "shape": [int(self.W.shape[0]), int(self.H.shape[1])],
            "W": self.W.ravel().tolist(),  # row-major
            "H": self.H.ravel().tolist(),
            "divergence_trace": list(self.divergence_trace),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NmfModel":
        doc = json.loads(text)
        m, n = doc["shape"]
        r = doc["rank"]
        return cls(
            W=np.asarray(doc["W"], dtype=np.float64).reshape(m, r),
            H=np.asarray(doc["H"], dtype=np.float64).reshape(r, n),
            rank=r,
            divergence_trace=tuple(doc["divergence_trace"]),
            seed=doc["seed"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def init_factors(
    m: int, n: int, config: NmfConfig, v_mean: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Strictly positive seeded uniform factors on (0, 1].

    When v_mean is given, both factors are rescaled so that
    mean(W @ H) == v_mean.
    """
    if m < 1 or n < 1:
        raise ShapeMismatchError(f"bad factor dimensions {m}x{n}")
    rng = np.random.default_rng(config.seed)
    # 1 - random() lies in (0, 1]; random() itself can return 0.
    W = 1.0 - rng.random((m, config.rank))
    H = 1.0 - rng.random((config.rank, n))
    if v_mean is not None and v_mean > 0:
        scale = np.sqrt(v_mean / (W @ H).mean())
        W = W * scale
        H = H * scale
    return W, H


def _check_shapes(V: np.ndarray, W: np.ndarray, H: np.ndarray) -> None:
    if W.shape[1] != H.shape[0] or (W.shape[0], H.shape[1]) != V.shape:
        raise ShapeMismatchError(
            f"V{V.shape} cannot equal W{W.shape} @ H{H.shape}"
        )


def kl_divergence(
    V: np.ndarray, W: np.ndarray, H: np.ndarray, epsilon: float = 1e-12
) -> float:
    """Generalized KL divergence D(V || WH), with 0*log(0/x) = 0."""
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    _check_shapes(V, W, H)
    WH = np.maximum(W @ H, epsilon)
    pos = V > 0
    log_term = np.zeros_like(WH)
    log_term[pos] = V[pos] * np.log(V[pos] / WH[pos])
    return float(log_term.sum() - V.sum() + WH.sum())


def mu_step(
    V: np.ndarray, W: np.ndarray, H: np.ndarray, epsilon: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """One multiplicative update: H first, then W against the new H.

    H' = H * (W^T (V / WH)) / (W^T 1)
    W' = W * ((V / WH') H'^T) / (1 H'^T)

    Denominators and the reconstruction WH are floored at epsilon.
    """
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    _check_shapes(V, W, H)
    WH = np.maximum(W @ H, epsilon)
    H = H * (W.T @ (V / WH)) / np.maximum(W.sum(axis=0)[:, None], epsilon)
    WH = np.maximum(W @ H, epsilon)
    W = W * ((V / WH) @ H.T) / np.maximum(H.sum(axis=1)[None, :], epsilon)
    return W, H


def factorize(V: np.ndarray, config: NmfConfig | None = None) -> NmfModel:
    """Run multiplicative updates from a seeded init until convergence.

    Stops at max_iters or when the relative divergence improvement over
    one iteration drops below rel_tol. The recorded trace starts with
    the divergence of the initial factors.
    """
    if config is None:
        config = NmfConfig()
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ShapeMismatchError(f"V must be a matrix, got shape {V.shape}")
    if V.size == 0 or not np.any(V > 0):
        raise EmptyInputError("V has no positive entries; nothing to factorize")
    W, H = init_factors(V.shape[0], V.shape[1], config, v_mean=float(V.mean()))
    trace = [kl_divergence(V, W, H, config.epsilon)]
    for _ in range(config.max_iters):
        W, H = mu_step(V, W, H, config.epsilon)
        div = kl_divergence(V, W, H, config.epsilon)
        prev = trace[-1]
        trace.append(div)
        # rel_tol = 0 disables early stopping (tests rely on exact counts)
        if config.rel_tol > 0 and prev > 0 and (prev - div) / prev < config.rel_tol:
            break
    return NmfModel(W, H, config.rank, tuple(trace), config.seed)
