"""Deterministic propagation: symplectic maps, loss/noise channels and the step-matrix builders.

All interaction matrices are the first-order (in the segment duration) Heisenberg
maps ``S = 1 + K`` for the bilinear Faraday and Larmor Hamiltonians. Couplings are
dimensionless per-segment numbers (``kappa_tau``, ``mu_tau``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .gstate import GaussianState, ModeKind, ModeLayout, symmetrize, symplectic_form

SYMPLECTIC_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StepMatrices:
    S: np.ndarray
    L: np.ndarray
    N: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        l = np.diag(self.L)
        if np.any(l > 1 + 1e-15) or np.any(l <= 0):
            raise InvalidArgument("loss entries must lie in (0, 1]")
        if np.any(np.diag(self.N) < 0):
            raise InvalidArgument("noise entries must be nonnegative")


@dataclass(frozen=True)
class SpinTracker:
    """Decay bookkeeping for the macroscopic spin ``<J_x>``.

    ``atom_noise_factor`` is ``hbar N_at / <J_x(t)>``; it starts at 2 and stays equal
    to ``2 / jx_fraction``.
    """

    kappa_tau: float
    eta_tau: float = 0.0
    jx_fraction: float = 1.0
    atom_noise_factor: float = 2.0

    @property
    def coupling_scale(self) -> float:
        return float(np.sqrt(self.jx_fraction))


def advance_tracker(tracker: SpinTracker) -> SpinTracker:
    keep = 1.0 - tracker.eta_tau
    return replace(tracker,
                   jx_fraction=tracker.jx_fraction * keep,
                   atom_noise_factor=tracker.atom_noise_factor / keep,
                   kappa_tau=tracker.kappa_tau * np.sqrt(keep))


def _check_dim(state: GaussianState, M: np.ndarray, name: str):
    d = state.cov.shape[0]
    if M.shape != (d, d):
        raise InvalidArgument(f"{name} has shape {M.shape}, state needs ({d},{d})")


def apply_symplectic(state: GaussianState, S) -> GaussianState:
    S = np.asarray(S, dtype=float)
    _check_dim(state, S, "S")
    return state.replace(mean=S @ state.mean, cov=symmetrize(S @ state.cov @ S.T))


def apply_loss_noise(state: GaussianState, L, N) -> GaussianState:
    L = np.asarray(L, dtype=float)
    N = np.asarray(N, dtype=float)
    _check_dim(state, L, "L")
    _check_dim(state, N, "N")
    l = np.diag(L)
    cov = state.cov * np.outer(l, l) + N
    return state.replace(mean=l * state.mean, cov=symmetrize(cov))


def step(state: GaussianState, mats: StepMatrices) -> GaussianState:
    return apply_loss_noise(apply_symplectic(state, mats.S), mats.L, mats.N)


def is_symplectic(S, layout: ModeLayout, tol: float = SYMPLECTIC_TOL) -> bool:
    """``S Omega S^T == Omega`` restricted to the quantum quadratures."""
    S = np.asarray(S, dtype=float)
    omega = symplectic_form(len(layout))
    q = layout.quantum_indices()
    lhs = (S @ omega @ S.T)[np.ix_(q, q)]
    return bool(np.max(np.abs(lhs - omega[np.ix_(q, q)])) <= tol)


def _require(layout: ModeLayout, kinds: Sequence, what: str):
    got = tuple(m.kind for m in layout)
    if got != tuple(ModeKind(k) for k in kinds):
        raise InvalidArgument(f"{what} expects mode kinds {[ModeKind(k).value for k in kinds]}, "
                              f"got {[k.value for k in got]}")


def build_faraday_S(layout: ModeLayout, kappa_tau_per_slice) -> np.ndarray:
    """Faraday coupling ``sum_i kappa_i p_at,i p_ph`` for slices followed by one field mode.

    Extra field modes are not allowed; the field must be the last mode.
    """
    kappas = np.atleast_1d(np.asarray(kappa_tau_per_slice, dtype=float))
    n = len(kappas)
    _require(layout, [ModeKind.ATOMIC] * n + [ModeKind.FIELD], "build_faraday_S")
    S = np.eye(2 * (n + 1))
    xph, pph = 2 * n, 2 * n + 1
    for i, k in enumerate(kappas):
        S[2 * i, pph] = k          # x_at,i += k p_ph
        S[xph, 2 * i + 1] = k      # x_ph += k p_at,i
    return S


def build_two_ensemble_S(layout: ModeLayout, kappa_tau: float) -> np.ndarray:
    """``S_1 S_2`` for two oppositely polarized gasses sharing one beam.

    The second gas uses ``x = -J_y / sqrt(hbar |J_x|)`` so both gasses couple through
    ``kappa p_at,i p_ph`` with the same sign.
    """
    _require(layout, [ModeKind.ATOMIC, ModeKind.ATOMIC, ModeKind.FIELD], "build_two_ensemble_S")
    S1 = np.eye(6)
    S1[0, 5] = kappa_tau
    S1[4, 1] = kappa_tau
    S2 = np.eye(6)
    S2[2, 5] = kappa_tau
    S2[4, 3] = kappa_tau
    return S1 @ S2


def build_magnetometer_S(layout: ModeLayout, kappa_tau: float, mu_tau: float) -> np.ndarray:
    """Scalar magnetometer on the layout ``(B, atom, field)``.

    Embeds the printed 5x5 map over ``(B, x_at, p_at, x_ph, p_ph)`` into the 6x6
    interleaved layout; the conjugate slot of ``B`` stays untouched.
    """
    _require(layout, [ModeKind.CLASSICAL, ModeKind.ATOMIC, ModeKind.FIELD], "build_magnetometer_S")
    S = np.eye(6)
    B, xat, pat, xph, pph = 0, 2, 3, 4, 5
    S[pat, B] = -mu_tau
    S[xat, pph] = kappa_tau
    S[xph, pat] = kappa_tau
    return S


VECTOR_KINDS = [ModeKind.CLASSICAL, ModeKind.CLASSICAL, ModeKind.ATOMIC, ModeKind.ATOMIC,
                ModeKind.FIELD, ModeKind.FIELD]


def build_vector_mag_S(layout: ModeLayout, kappa_tau, mu_tau: float,
                       scheme: str = "entangled") -> np.ndarray:
    """Two-component magnetometer on ``(B_z, B_y, at1, at2, ph1, ph2)``.

    Field part: ``mu B_y (x1 - x2) + mu B_z (p1 + p2)``. Light part, entangled scheme:
    ``k1 (p1 - p2) p_ph1 + k2 (x1 + x2) x_ph2`` (both beams cross both gasses). The
    separate scheme has each beam probe one gas: ``k1 p1 p_ph1 + k2 x2 x_ph2``.
    ``kappa_tau`` may be a scalar or a per-beam pair.
    """
    _require(layout, VECTOR_KINDS, "build_vector_mag_S")
    k1, k2 = np.broadcast_to(np.asarray(kappa_tau, dtype=float), (2,))
    Bz, By = 0, 2
    x1, p1, x2, p2 = 4, 5, 6, 7
    xa, pa, xb, pb = 8, 9, 10, 11
    S = np.eye(12)
    # Larmor terms
    S[p1, By] = -mu_tau
    S[p2, By] = mu_tau
    S[x1, Bz] = mu_tau
    S[x2, Bz] = mu_tau
    if scheme == "entangled":
        S[x1, pa] = k1
        S[x2, pa] = -k1
        S[xa, p1] = k1
        S[xa, p2] = -k1
        S[p1, xb] = -k2
        S[p2, xb] = -k2
        S[pb, x1] = -k2
        S[pb, x2] = -k2
    elif scheme == "separate":
        S[x1, pa] = k1
        S[xa, p1] = k1
        S[p2, xb] = -k2
        S[pb, x2] = -k2
    else:
        raise InvalidArgument(f"unknown vector magnetometer scheme {scheme!r}")
    return S


def build_decay_LN(layout: ModeLayout, tracker: SpinTracker, epsilon: float):
    """Loss and noise matrices for atomic decay and photon absorption.

    Atomic quadratures: ``L = sqrt(1 - eta_tau)``, ``N = f eta_tau`` with ``f`` the
    tracker's noise factor. Field quadratures: ``L = sqrt(1 - eps)``, ``N = eps``.
    Classical parameters and cavity modes are left alone.
    """
    eta = tracker.eta_tau
    if not (0.0 <= eta < 1.0) or not (0.0 <= epsilon < 1.0):
        raise InvalidArgument(f"rates must lie in [0, 1): eta_tau={eta}, epsilon={epsilon}")
    l = np.ones(2 * len(layout))
    n = np.zeros(2 * len(layout))
    for i, mode in enumerate(layout):
        sl = slice(2 * i, 2 * i + 2)
        if mode.kind is ModeKind.ATOMIC:
            l[sl] = np.sqrt(1.0 - eta)
            n[sl] = tracker.atom_noise_factor * eta
        elif mode.kind is ModeKind.FIELD:
            l[sl] = np.sqrt(1.0 - epsilon)
            n[sl] = epsilon
    return np.diag(l), np.diag(n)


def phase_rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])
