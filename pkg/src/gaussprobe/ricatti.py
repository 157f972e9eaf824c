"""Continuous-measurement limit: the matrix Ricatti equation and its closed-form solutions.

``A' = G - D A - A E - A F A``. A system carries the unit convention of ``A``:
``"gamma"`` (vacuum = 1) or ``"var"`` (vacuum = 1/2). Converting between them maps
``(G, D, E, F) -> (G/2, D, E, 2F)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import expm

from .errors import DivergenceError, InvalidArgument, LinearizationBreakdown


@dataclass(frozen=True, eq=False)
class RicattiSystem:
    G: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    units: str = "gamma"

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in (self.G, self.D, self.E, self.F)]
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise InvalidArgument(f"inconsistent shapes {[m.shape for m in mats]}")
        if self.units not in ("gamma", "var"):
            raise InvalidArgument(f"units must be 'gamma' or 'var', got {self.units!r}")
        for name, m in zip("GDEF", mats):
            object.__setattr__(self, name, m)

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def in_var_units(self) -> "RicattiSystem":
        if self.units == "var":
            return self
        return RicattiSystem(self.G / 2, self.D, self.E, 2 * self.F, units="var")

    def in_gamma_units(self) -> "RicattiSystem":
        if self.units == "gamma":
            return self
        return RicattiSystem(2 * self.G, self.D, self.E, self.F / 2, units="gamma")


def gamma_to_var(A):
    return np.asarray(A, dtype=float) / 2.0


def var_to_gamma(A):
    return 2.0 * np.asarray(A, dtype=float)


def ricatti_rhs(A, sys: RicattiSystem) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape != (sys.dim, sys.dim):
        raise InvalidArgument(f"A has shape {A.shape}, system is {sys.dim}x{sys.dim}")
    return sys.G - sys.D @ A - A @ sys.E - A @ sys.F @ A


@numba.njit(cache=True)
def _rhs_into(out, G, D, E, F, A, tmp):
    d = A.shape[0]
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += F[i, k] * A[k, j]
            tmp[i, j] = s
    for i in range(d):
        for j in range(d):
            s = G[i, j]
            for k in range(d):
                s -= D[i, k] * A[k, j] + A[i, k] * E[k, j] + A[i, k] * tmp[k, j]
            out[i, j] = s


@numba.njit(cache=True)
def _rk4(G, D, E, F, A, h, n):
    A = A.copy()
    d = A.shape[0]
    k1 = np.empty((d, d))
    k2 = np.empty((d, d))
    k3 = np.empty((d, d))
    k4 = np.empty((d, d))
    B = np.empty((d, d))
    tmp = np.empty((d, d))
    for _ in range(n):
        _rhs_into(k1, G, D, E, F, A, tmp)
        for i in range(d):
            for j in range(d):
                B[i, j] = A[i, j] + 0.5 * h * k1[i, j]
        _rhs_into(k2, G, D, E, F, B, tmp)
        for i in range(d):
            for j in range(d):
                B[i, j] = A[i, j] + 0.5 * h * k2[i, j]
        _rhs_into(k3, G, D, E, F, B, tmp)
        for i in range(d):
            for j in range(d):
                B[i, j] = A[i, j] + h * k3[i, j]
        _rhs_into(k4, G, D, E, F, B, tmp)
        for i in range(d):
            for j in range(d):
                A[i, j] += (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return A


@numba.njit(cache=True)
def _wu(P, Y, n, d):
    """Apply ``P`` ``n`` times; also return the smallest ``sigma_min(U) / |Y|`` seen.

    A sign change of ``det U`` between samples means ``U`` passed through a singular
    point, reported as 0.
    """
    worst = np.inf
    sign = np.sign(np.linalg.det(Y[d:, :]))
    for _ in range(n):
        Y = P @ Y
        U = Y[d:, :]
        sv = np.linalg.svd(U)[1]
        scale = np.abs(Y).max()
        ratio = sv[-1] / scale if scale > 0.0 else 0.0
        new_sign = np.sign(np.linalg.det(U))
        if new_sign != sign:
            ratio = 0.0
        sign = new_sign
        worst = min(worst, ratio)
    return Y, worst


def default_dt(sys: RicattiSystem) -> float:
    """Step with ``rate * dt <= 1e-3`` where rate is the largest coefficient norm."""
    rate = max(np.linalg.norm(m, 2) for m in (sys.F, sys.D, sys.E, sys.G))
    return 1e-3 / rate if rate > 0 else np.inf


def solve_ricatti(sys: RicattiSystem, A0, times, dt: float | None = None,
                  method: str = "rk4") -> np.ndarray:
    """``A`` at each of the (nondecreasing, nonnegative) ``times``; shape ``(len(times), d, d)``.

    ``rk4`` integrates the nonlinear equation with fixed steps no longer than ``dt``.
    ``wu`` propagates ``W' = -D W + G U``, ``U' = F W + E U`` from ``W = A0``, ``U = 1``
    with the exact per-step propagator and returns ``W U^-1``; its steps only set how
    often ``U`` is checked for singularity (default 256 per output interval). Passing
    through a singular ``U`` raises ``LinearizationBreakdown``.
    """
    A0 = np.atleast_2d(np.asarray(A0, dtype=float))
    d = sys.dim
    if A0.shape != (d, d):
        raise InvalidArgument(f"A0 has shape {A0.shape}, system is {d}x{d}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise InvalidArgument("times must be nonnegative and nondecreasing")
    if dt is None:
        dt = default_dt(sys) if method == "rk4" else np.inf
    dt = float(dt)
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    out = np.empty((len(times), d, d))
    t_prev = 0.0
    if method == "rk4":
        A = A0.copy()
        for i, t in enumerate(times):
            span = t - t_prev
            if span > 0:
                n = max(1, int(np.ceil(span / dt - 1e-9)))
                A = _rk4(sys.G, sys.D, sys.E, sys.F, A, span / n, n)
            if not np.all(np.isfinite(A)):
                raise DivergenceError(f"Ricatti solution diverged before t={t:g}")
            out[i] = A
            t_prev = t
        return out
    if method == "wu":
        H = np.block([[-sys.D, sys.G], [sys.F, sys.E]])
        Y = np.vstack([A0, np.eye(d)])
        for i, t in enumerate(times):
            span = t - t_prev
            if span > 0:
                n = 256 if np.isinf(dt) else max(1, int(np.ceil(span / dt - 1e-9)))
                Y, worst = _wu(expm(H * (span / n)), Y, n, d)
                if worst < 1e-14:
                    raise LinearizationBreakdown(f"U became singular before t={t:g}")
            if not np.all(np.isfinite(Y)):
                raise DivergenceError(f"W/U diverged before t={t:g}")
            out[i] = Y[:d] @ np.linalg.inv(Y[d:])
            t_prev = t
        return out
    raise InvalidArgument(f"unknown method {method!r}")


def integrate_ricatti(sys: RicattiSystem, A0, t_end: float, dt: float | None = None,
                      method: str = "rk4") -> np.ndarray:
    return solve_ricatti(sys, A0, [t_end], dt=dt, method=method)[0]


def analytic_spin_var(kappa_sq, t, var0=0.5, var_x0=0.5):
    """Noiseless squeezing: ``Var(p) = 1 / (2 k^2 t + 1/var0)``, ``Var(x) = k^2 t / 2 + var_x0``.

    Returns ``(var_p, var_x)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(np.asarray(kappa_sq) < 0) or np.any(np.asarray(var0) <= 0):
        raise InvalidArgument("need kappa_sq >= 0 and var0 > 0")
    var_p = 1.0 / (2.0 * kappa_sq * t + 1.0 / var0)
    var_x = kappa_sq * t / 2.0 + var_x0
    return var_p, var_x


def analytic_B_var(kappa_sq, mu, t, varB0=1.0):
    """Posterior field variance of the noiseless scalar magnetometer (Var units)."""
    t = np.asarray(t, dtype=float)
    k2, v = kappa_sq, varB0
    num = v * (k2 * t + 1.0)
    den = (k2 ** 2 * mu ** 2 * v * t ** 4 / 6.0 + 2.0 / 3.0 * k2 * mu ** 2 * v * t ** 3
           + k2 * t + 1.0)
    return num / den


def analytic_B_var_asymptote(kappa_sq, mu, t):
    return 6.0 / (kappa_sq * mu ** 2 * np.asarray(t, dtype=float) ** 3)


def magnetometer_ricatti(kappa_sq: float, mu: float, eta: float = 0.0,
                         epsilon: float = 0.0) -> RicattiSystem:
    """System for ``(B, p_at)`` in gamma units.

    With ``eta = epsilon = 0`` this is ``G = 0``, ``D = [[0, 0], [mu, 0]]``, ``E = D^T``,
    ``F = diag(0, kappa^2)``. Nonzero ``eta`` adds damping of ``p_at`` with the initial
    noise factor 2 (no depolarization feedback); ``epsilon`` scales the information rate.
    """
    D = np.array([[0.0, 0.0], [mu, eta / 2.0]])
    F = np.diag([0.0, (1.0 - epsilon) * kappa_sq])
    G = np.diag([0.0, 2.0 * eta])
    return RicattiSystem(G, D, D.T.copy(), F, units="gamma")


def spin_ricatti(kappa_sq: float) -> RicattiSystem:
    """Single squeezed quadrature in Var units: ``Var' = -2 k^2 Var^2``."""
    z = np.zeros((1, 1))
    return RicattiSystem(z, z, z, np.array([[2.0 * kappa_sq]]), units="var")
