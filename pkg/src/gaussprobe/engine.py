"""Compiled in-place stepping loop for long probe runs.

The loop performs, per segment, exactly the composite of ``attach_mode``, ``step``,
``homodyne_x`` (on each probe beam) and ``advance_tracker``; the pure functions in
``measure`` are the reference it is tested against. Interaction matrices enter as
``S(k) = S0 + c_k * K`` where ``c_k`` is the current coupling scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateMeasurement, DivergenceError, NumericalFailure
from .gstate import SYMPLECTIC_SLACK

DEGENERATE_TOL = 1e-12


@numba.njit(cache=True)
def _min_max_symplectic(cov, idx):
    m = idx.shape[0]
    sub = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            sub[a, b] = 0.5 * (cov[idx[a], idx[b]] + cov[idx[b], idx[a]])
    # scale-free: nu(s * cov) = s * nu(cov)
    scale = np.abs(sub).max()
    sub /= scale
    w = np.linalg.eigvalsh(sub)
    if w[0] <= 0.0:
        return w[0] * scale, w[0] * scale
    # M = L^T Omega L is antisymmetric with eigenvalues +-i nu; Cholesky keeps this
    # accurate for strongly squeezed blocks where a matrix square root does not
    Lc = np.linalg.cholesky(sub)
    omega = np.zeros((m, m))
    for k in range(m // 2):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    Mx = Lc.T @ omega @ Lc
    nu2 = np.linalg.eigvalsh(Mx.T @ Mx)
    lo = np.sqrt(max(nu2[0], 0.0)) * scale
    hi = np.sqrt(max(nu2[-1], 0.0)) * scale
    return lo, hi


@numba.njit(cache=True, nogil=True)
def _probe_chunk(cov_p, cov_lo_p, mean_p, seg_cov, S0, K, coupling, coupling_decay,
                 l, n_fixed, n_atomic, noise_factor, noise_growth,
                 meas_idx, z, record_every, step_offset,
                 q_full, q_persist, check):
    dp = cov_p.shape[0]
    d = S0.shape[0]
    n_steps = z.shape[0]
    n_meas = meas_idx.shape[0]
    n_rec = (step_offset + n_steps) // record_every - step_offset // record_every
    rec_cov = np.empty((n_rec, dp, dp))
    rec_mean = np.empty((n_rec, dp))
    rec_chi = np.zeros((n_rec, n_meas))
    chi_acc = np.zeros(n_meas)
    nu_min = np.inf
    nu_max_cond = 0.0
    status = 0

    g = np.zeros((d, d))
    m = np.zeros(d)
    cov = cov_p.copy()
    cov_lo = cov_lo_p.copy()
    mean = mean_p.copy()
    D0 = S0 - np.eye(d)
    lm1 = l - 1.0
    r = 0
    for k in range(n_steps):
        g[:, :] = 0.0
        g[:dp, :dp] = cov
        g[dp:, dp:] = seg_cov
        m[:] = 0.0
        m[:dp] = mean
        # increments are formed directly from D = S - I and accumulated with compensation,
        # so small per-step changes to large entries keep their low-order bits
        D = D0 + coupling * K
        DG = D @ g
        delta = DG + DG.T + DG @ D.T
        m = m + D @ m
        for a in range(d):
            m[a] *= l[a]
            for b in range(d):
                f = lm1[a] + lm1[b] + lm1[a] * lm1[b]
                delta[a, b] += f * (g[a, b] + delta[a, b])
            delta[a, a] += n_fixed[a] + noise_factor * n_atomic[a]
        g = g + delta
        if not np.isfinite(g.sum()):
            status = 2
            break
        if check:
            lo, hi = _min_max_symplectic(g, q_full)
            nu_min = min(nu_min, lo)
        for j in range(n_meas):
            q = meas_idx[j]
            b11 = g[q, q]
            if not b11 > 1e-12:
                status = 1
                break
            chi = z[k, j] * np.sqrt(0.5 * b11)
            chi_acc[j] += chi
            c = g[:, q].copy()
            for a in range(d):
                m[a] += c[a] * chi / b11
                for b in range(d):
                    upd = c[a] * c[b] / b11
                    g[a, b] -= upd
                    delta[a, b] -= upd
        if status != 0:
            break
        for a in range(dp):
            mean[a] = m[a]
            for b in range(dp):
                y = 0.5 * (delta[a, b] + delta[b, a]) + cov_lo[a, b]
                t = cov[a, b] + y
                cov_lo[a, b] = y - (t - cov[a, b])
                cov[a, b] = t
        if check:
            lo, hi = _min_max_symplectic(cov, q_persist)
            nu_min = min(nu_min, lo)
            nu_max_cond = max(nu_max_cond, hi)
        coupling *= coupling_decay
        noise_factor *= noise_growth
        if (step_offset + k + 1) % record_every == 0:
            rec_cov[r] = cov
            rec_mean[r] = mean
            rec_chi[r] = chi_acc
            chi_acc[:] = 0.0
            r += 1
    return (cov, cov_lo, mean, coupling, noise_factor, rec_cov[:r], rec_mean[:r], rec_chi[:r],
            chi_acc, nu_min, nu_max_cond, status)


@dataclass
class ProbeLoop:
    """Everything the compiled loop needs, in full-layout (persistent + segments) coordinates.

    Attributes:
        S0: coupling-independent part of the per-step map (identity, or beam rotations).
        K: part of the map that scales with the coupling factor.
        coupling_decay: per-step multiplier of the coupling factor.
        l: diagonal of the loss matrix.
        n_fixed, n_atomic: noise diagonal is ``n_fixed + f * n_atomic``.
        noise_growth: per-step multiplier of the atomic noise factor ``f``.
        meas_idx: quadratures measured, in order, after each interaction.
    """

    seg_cov: np.ndarray
    S0: np.ndarray
    K: np.ndarray
    l: np.ndarray
    n_fixed: np.ndarray
    n_atomic: np.ndarray
    meas_idx: np.ndarray
    q_full: np.ndarray
    q_persist: np.ndarray
    coupling_decay: float = 1.0
    noise_factor: float = 2.0
    noise_growth: float = 1.0


@dataclass
class LoopOutput:
    steps: np.ndarray
    covs: np.ndarray
    means: np.ndarray
    chi: np.ndarray
    final_cov: np.ndarray
    final_mean: np.ndarray
    nu_min: float
    nu_max: float


def run_loop(loop: ProbeLoop, cov0, mean0, n_steps: int, rng=None, record_every: int = 1,
             check: bool = False, chunk_steps: int = 1_000_000) -> LoopOutput:
    """Run ``n_steps`` segments. Records the initial state and every ``record_every``-th step.

    Standard normals for the outcomes are drawn from ``rng`` in step-major order (one per
    measured beam per step), so a given (seed, step) always sees the same variate. With
    ``rng=None`` every deviation is zero.
    With ``check`` the quantum block's symplectic eigenvalues are tracked and a value
    below ``1 - SYMPLECTIC_SLACK`` raises ``NumericalFailure``.
    """
    record_every = int(record_every)
    n_meas = len(loop.meas_idx)
    cov = np.ascontiguousarray(cov0, dtype=float)
    mean = np.ascontiguousarray(mean0, dtype=float)
    cov_lo = np.zeros_like(cov)
    chunk = max(record_every, (chunk_steps // record_every) * record_every)
    covs, means, chis, steps = [cov.copy()], [mean.copy()], [np.zeros(n_meas)], [0]
    coupling, noise = 1.0, float(loop.noise_factor)
    nu_min, nu_max = np.inf, 0.0
    done = 0
    carry = np.zeros(n_meas)
    args = [np.ascontiguousarray(a, dtype=float) for a in
            (loop.seg_cov, loop.S0, loop.K)]
    vecs = [np.ascontiguousarray(a, dtype=float) for a in (loop.l, loop.n_fixed, loop.n_atomic)]
    idx = [np.ascontiguousarray(a, dtype=np.int64) for a in (loop.meas_idx, loop.q_full, loop.q_persist)]
    while done < n_steps:
        n = min(chunk, n_steps - done)
        if rng is None:
            z = np.zeros((n, n_meas))
        else:
            z = rng.standard_normal((n, n_meas))
        (cov, cov_lo, mean, coupling, noise, rc, rm, rx, acc, lo, hi, status) = _probe_chunk(
            cov, cov_lo, mean, args[0], args[1], args[2], coupling, float(loop.coupling_decay),
            vecs[0], vecs[1], vecs[2], noise, float(loop.noise_growth),
            idx[0], z, record_every, done, idx[1], idx[2], check)
        if status == 1:
            raise DegenerateMeasurement("measured quadrature has vanishing variance")
        if status == 2:
            raise DivergenceError("covariance became non-finite")
        if len(rx):
            rx = rx.copy()
            rx[0] += carry
            carry = np.zeros(n_meas)
        carry = carry + acc
        nu_min, nu_max = min(nu_min, lo), max(nu_max, hi)
        if check and nu_min < 1.0 - SYMPLECTIC_SLACK:
            raise NumericalFailure(f"symplectic eigenvalue {nu_min:.12g} < 1 by step {done + n}",
                                   value=nu_min)
        first = done // record_every + 1
        covs.extend(rc)
        means.extend(rm)
        chis.extend(rx)
        steps.extend(range(first * record_every, (first + len(rc)) * record_every, record_every))
        done += n
    if n_steps % record_every:
        covs.append(cov.copy())
        means.append(mean.copy())
        chis.append(carry)
        steps.append(n_steps)
    return LoopOutput(np.asarray(steps), np.asarray(covs), np.asarray(means), np.asarray(chis),
                      cov, mean, float(nu_min) if check else float("nan"),
                      float(nu_max) if check else float("nan"))
