"""Observables read off a Gaussian state: variances, squeezing, EPR variance, negativity."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import InvalidArgument
from .gstate import GaussianState, ModeKind, symmetrize, symplectic_eigenvalues


def quadrature_variance(state: GaussianState, mode_label: str, quad: str = "p") -> float:
    i, j = state.layout.quadratures(mode_label)
    if quad not in ("x", "p"):
        raise InvalidArgument(f"quad must be 'x' or 'p', got {quad!r}")
    q = i if quad == "x" else j
    return float(state.cov[q, q] / 2.0)


def squeezing_db(var, var_ref=0.5):
    var = np.asarray(var, dtype=float)
    if np.any(var <= 0):
        raise InvalidArgument("variance must be positive")
    return -10.0 * np.log10(var / var_ref)


def linear_combination_variance(cov: np.ndarray, weights) -> float:
    """Variance of ``sum_k w_k y_k`` for a gamma-convention covariance."""
    w = np.asarray(weights, dtype=float)
    return float(w @ cov @ w / 2.0)


def epr_variance(state: GaussianState, label1: str, label2: str, signs=(-1, 1)) -> float:
    """``Var(x1 + sx x2) + Var(p1 + sp p2)``; the default signs give ``Var(x1-x2) + Var(p1+p2)``.

    Separable states satisfy ``>= 2`` for either choice of signs.
    """
    for l in (label1, label2):
        if state.layout.kind(l) is not ModeKind.ATOMIC:
            raise InvalidArgument(f"mode {l!r} is not atomic")
    sx, sp = signs
    x1, p1 = state.layout.quadratures(label1)
    x2, p2 = state.layout.quadratures(label2)
    wx = np.zeros(state.cov.shape[0])
    wp = np.zeros_like(wx)
    wx[x1], wx[x2] = 1.0, sx
    wp[p1], wp[p2] = 1.0, sp
    return linear_combination_variance(state.cov, wx) + linear_combination_variance(state.cov, wp)


def partial_transpose(cov: np.ndarray, quad_indices: Iterable[int]) -> np.ndarray:
    """Flip the sign of the listed ``p`` quadratures (time reversal on one party)."""
    flip = np.ones(cov.shape[0])
    flip[list(quad_indices)] = -1.0
    return cov * np.outer(flip, flip)


def log_negativity_cov(cov: np.ndarray, flip_p: Iterable[int]) -> float:
    """Logarithmic negativity in bits of a (sub-)covariance matrix.

    ``flip_p`` are the indices of the ``p`` quadratures of one party within ``cov``.
    """
    nu = symplectic_eigenvalues(partial_transpose(symmetrize(cov), flip_p))
    return float(np.sum(np.maximum(0.0, -np.log2(nu))))


def log_negativity(state: GaussianState, partition, other=None) -> float:
    """Negativity of the bipartition ``partition | other`` of atomic modes.

    ``other`` defaults to every remaining atomic mode. Non-listed modes are traced out.
    """
    part = list(partition)
    atomic = state.layout.labels_of(ModeKind.ATOMIC)
    rest = [l for l in atomic if l not in part] if other is None else list(other)
    if not part or not rest or set(part) & set(rest):
        raise InvalidArgument(f"invalid bipartition {part} | {rest}")
    for l in part + rest:
        if state.layout.kind(l) is not ModeKind.ATOMIC:
            raise InvalidArgument(f"mode {l!r} is not atomic")
    labels = part + rest
    cov = state.block(*labels)
    flip = [2 * k + 1 for k in range(len(part))]
    return log_negativity_cov(cov, flip)


def min_variance_mode(atomic_cov_block):
    """Smallest eigenvalue of an atomic covariance block, as a variance, and its eigenvector."""
    block = symmetrize(np.asarray(atomic_cov_block, dtype=float))
    w, V = np.linalg.eigh(block)
    return float(w[0] / 2.0), V[:, 0]


def atomic_block(state: GaussianState) -> np.ndarray:
    return state.block(*state.layout.labels_of(ModeKind.ATOMIC))
