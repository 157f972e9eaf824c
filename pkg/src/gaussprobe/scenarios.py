"""End-to-end experiment drivers: spin squeezing, inhomogeneous slices, magnetometry, entanglement.

Each driver builds a :class:`~gaussprobe.engine.ProbeLoop` from the step-matrix builders in
``channels`` and runs it for ``duration / tau`` segments. The loop is tested step-for-step
against :func:`gaussprobe.measure.probe_cycle`.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import constants

from .channels import (build_faraday_S, build_magnetometer_S, build_two_ensemble_S,
                       build_vector_mag_S)
from .engine import LoopOutput, ProbeLoop, run_loop
from .errors import ConfigError, InvalidArgument
from .gstate import ModeKind, ModeLayout
from .measure import make_segment, trajectory_rng
from .metrics import log_negativity_cov

SCENARIOS = ("spin_squeezing", "inhomogeneous", "scalar_magnetometry", "entanglement",
             "vector_magnetometry")


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters; SI units except ``var_b0`` (pT^2).

    Attributes:
        gamma: excited-state decay rate (rad/s).
        lam: probe wavelength (m).
        delta: detuning (rad/s).
        area: beam cross-section (m^2).
        phi: photon flux (1/s).
        n_atoms: number of atoms.
        tau: segment duration (s).
        beta: magnetic moment (J/T).
        var_b0: prior field variance (pT^2).
    """

    gamma: float
    lam: float
    delta: float
    area: float
    phi: float
    n_atoms: float
    tau: float
    beta: float = constants.physical_constants["Bohr magneton"][0]
    var_b0: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "lam", "delta", "area", "phi", "n_atoms", "tau", "beta", "var_b0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidArgument(f"{name} must be positive, got {v}")

    @property
    def sigma(self) -> float:
        return self.lam ** 2 / (2.0 * np.pi)


@dataclass(frozen=True)
class Couplings:
    kappa_tau: float
    eta: float
    epsilon: float
    mu_tau: float


def derive_couplings(p: PhysicalParams) -> Couplings:
    """Per-segment couplings from laboratory parameters.

    ``eta`` is a rate (1/s); ``epsilon`` is a per-photon absorption probability;
    ``mu_tau`` is per segment for a field measured in pT.
    """
    lorentz = (p.gamma ** 2 / 4.0) / (p.gamma ** 2 / 4.0 + p.delta ** 2)
    n_ph = p.phi * p.tau
    kappa_tau = 3.0 * p.gamma * p.sigma / (p.delta * p.area) * np.sqrt(n_ph / 2.0) \
        * np.sqrt(p.n_atoms / 2.0)
    eta = p.phi * p.sigma / p.area * lorentz
    epsilon = p.n_atoms * p.sigma / p.area * lorentz
    mu_tau = p.tau * p.beta * np.sqrt(p.n_atoms / 2.0) / constants.hbar * 1e-12
    return Couplings(float(abs(kappa_tau)), float(eta), float(epsilon), float(mu_tau))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one run.

    ``kappa_tau_sq`` is the per-segment coupling squared of a single slice; slice ``i``
    couples with ``sqrt(kappa_tau_sq) * kappa_weights[i]``. ``eta`` is the atomic decay
    rate in 1/s, ``epsilon`` the per-segment light absorption.
    """

    scenario: str = "spin_squeezing"
    tau: float = 1e-8
    duration: float = 1e-3
    kappa_tau_sq: float = 0.0
    mu_tau: float = 0.0
    eta: float = 0.0
    epsilon: float = 0.0
    n_slices: int = 1
    kappa_weights: tuple = ()
    seed: int = 0
    segment: str = "coherent"
    squeeze_r: float = 1.0
    decay: bool = True
    kappa_feedback: bool = True
    record_every: int = 1000
    var_b0: float = 1.0
    b_conj_var: float = 1e6
    vector_mode: str = "entangled"
    physical: PhysicalParams | None = None
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if not (self.tau > 0 and self.duration > 0):
            raise ConfigError("tau and duration must be positive")
        n = self.duration / self.tau
        if abs(n - round(n)) > 1e-6 * max(1.0, n) or round(n) < 1:
            raise ConfigError(f"duration/tau = {n!r} is not a positive integer")
        if self.kappa_tau_sq < 0 or self.eta < 0 or not (0 <= self.epsilon < 1):
            raise ConfigError("need kappa_tau_sq >= 0, eta >= 0 and 0 <= epsilon < 1")
        if self.n_slices < 1:
            raise ConfigError("n_slices must be >= 1")
        if self.kappa_weights and len(self.kappa_weights) != self.n_slices:
            raise ConfigError(f"{len(self.kappa_weights)} kappa weights for {self.n_slices} slices")
        if not (self.var_b0 > 0 and self.b_conj_var > 0):
            raise ConfigError("var_b0 and b_conj_var must be positive")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.eta * self.tau >= 1:
            raise ConfigError("eta * tau must be < 1")
        if self.segment not in ("coherent", "squeezed"):
            raise ConfigError(f"unknown segment kind {self.segment!r}")
        if self.vector_mode not in ("entangled", "separate"):
            raise ConfigError(f"unknown vector mode {self.vector_mode!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.tau))

    @property
    def kappa_tau(self) -> float:
        return float(np.sqrt(self.kappa_tau_sq))

    @property
    def kappa_sq(self) -> float:
        """Rate ``kappa^2 = kappa_tau^2 / tau`` of one slice (1/s)."""
        return self.kappa_tau_sq / self.tau

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.kappa_weights or (1.0,) * self.n_slices, dtype=float)

    @property
    def eta_tau(self) -> float:
        return self.eta * self.tau if self.decay else 0.0

    @property
    def epsilon_eff(self) -> float:
        return self.epsilon if self.decay else 0.0


@dataclass
class TrajectoryResult:
    """Recorded series of one stochastic run.

    ``outcomes`` holds, per record and per measured beam, the sum of homodyne deviations
    since the previous record. ``covs`` are the persistent-mode covariances (gamma units).
    """

    times: np.ndarray
    variances: dict
    means: dict
    outcomes: np.ndarray
    seed: int
    trajectory: int
    labels: tuple
    covs: np.ndarray
    nu_min: float = float("nan")
    nu_max: float = float("nan")


def _quantum_indices(layout: ModeLayout) -> np.ndarray:
    return np.asarray(layout.quantum_indices(), dtype=np.int64)


def _make_loop(cfg: ScenarioConfig, persist: ModeLayout, n_beams: int,
               builder: Callable[[ModeLayout], np.ndarray], meas_idx) -> ProbeLoop:
    """Assemble the compiled loop for ``persist`` followed by ``n_beams`` field segments."""
    beams = [(f"ph{b + 1}" if n_beams > 1 else "ph", ModeKind.FIELD) for b in range(n_beams)]
    full = ModeLayout.of(*[(m.label, m.kind) for m in persist], *beams)
    d = 2 * len(full)
    _, seg = make_segment(cfg.segment, cfg.squeeze_r)
    seg_cov = np.kron(np.eye(n_beams), seg)
    S = builder(full)
    eta_tau, eps = cfg.eta_tau, cfg.epsilon_eff
    l, n_fixed, n_atomic = np.ones(d), np.zeros(d), np.zeros(d)
    for i, mode in enumerate(full):
        sl = slice(2 * i, 2 * i + 2)
        if mode.kind is ModeKind.ATOMIC:
            l[sl] = np.sqrt(1.0 - eta_tau)
            n_atomic[sl] = eta_tau
        elif mode.kind is ModeKind.FIELD:
            l[sl] = np.sqrt(1.0 - eps)
            n_fixed[sl] = eps
    keep = 1.0 - eta_tau
    return ProbeLoop(
        seg_cov=seg_cov, S0=np.eye(d), K=S - np.eye(d), l=l, n_fixed=n_fixed,
        n_atomic=n_atomic, meas_idx=np.asarray(meas_idx, dtype=np.int64),
        q_full=_quantum_indices(full), q_persist=_quantum_indices(persist),
        coupling_decay=np.sqrt(keep) if cfg.kappa_feedback else 1.0,
        noise_factor=2.0, noise_growth=1.0 / keep)


def _initial(persist: ModeLayout, var_b0: float, b_conj_var: float):
    # the conjugate slot of a classical parameter is carried but never coupled
    d = 2 * len(persist)
    cov = np.eye(d)
    for i, mode in enumerate(persist):
        if mode.kind is ModeKind.CLASSICAL:
            cov[2 * i, 2 * i] = 2.0 * var_b0
            cov[2 * i + 1, 2 * i + 1] = 2.0 * b_conj_var
    return cov, np.zeros(d)


def _run(cfg: ScenarioConfig, persist: ModeLayout, loop: ProbeLoop, rng, trajectory: int,
         check: bool) -> LoopOutput:
    if rng is None:
        rng = trajectory_rng(cfg.seed, trajectory)
    cov0, mean0 = _initial(persist, cfg.var_b0, cfg.b_conj_var)
    return run_loop(loop, cov0, mean0, cfg.n_steps, rng=rng, record_every=cfg.record_every,
                    check=check)


def _result(cfg, out: LoopOutput, persist: ModeLayout, variances: dict, means: dict,
            trajectory: int) -> TrajectoryResult:
    return TrajectoryResult(times=out.steps * cfg.tau, variances=variances, means=means,
                            outcomes=out.chi, seed=cfg.seed, trajectory=trajectory,
                            labels=persist.labels, covs=out.covs,
                            nu_min=out.nu_min, nu_max=out.nu_max)


def _var(covs, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return np.einsum("i,kij,j->k", w, covs, w) / 2.0


def _unit(d, entries) -> np.ndarray:
    w = np.zeros(d)
    for i, v in entries.items():
        w[i] = v
    return w


def _slices_run(cfg: ScenarioConfig, rng, trajectory: int, check: bool) -> TrajectoryResult:
    n = cfg.n_slices
    labels = ["at"] if n == 1 else [f"at{i + 1}" for i in range(n)]
    persist = ModeLayout.of(*[(l, ModeKind.ATOMIC) for l in labels])
    kappas = cfg.kappa_tau * cfg.weights
    loop = _make_loop(cfg, persist, 1, lambda lay: build_faraday_S(lay, kappas), [2 * n])
    out = _run(cfg, persist, loop, rng, trajectory, check)
    covs = out.covs
    if n == 1:
        variances = {"var_p": covs[:, 1, 1] / 2.0, "var_x": covs[:, 0, 0] / 2.0}
        means = {"x": out.means[:, 0], "p": out.means[:, 1]}
        return _result(cfg, out, persist, variances, means, trajectory)
    d = 2 * n
    sym = _unit(d, {2 * i + 1: 1.0 / np.sqrt(n) for i in range(n)})
    w = cfg.weights / np.linalg.norm(cfg.weights) if np.any(cfg.weights) else np.zeros(n)
    weighted = _unit(d, {2 * i + 1: w[i] for i in range(n)})
    variances = {
        "var_p_sym": _var(covs, sym),
        "var_p_weighted": _var(covs, weighted),
        "var_min_eig": np.linalg.eigvalsh(0.5 * (covs + covs.transpose(0, 2, 1)))[:, 0] / 2.0,
    }
    means = {"p_sym": out.means @ sym}
    return _result(cfg, out, persist, variances, means, trajectory)


def run_spin_squeezing(cfg: ScenarioConfig, rng=None, trajectory: int = 0,
                       check: bool = False) -> TrajectoryResult:
    """Single gas probed by a Faraday beam; records ``var_p`` and ``var_x`` of the atoms.

    Args:
        cfg: run configuration; ``n_slices`` must be 1.
        rng: Generator for the homodyne outcomes. Defaults to the stream of
            ``(cfg.seed, trajectory)``.
        trajectory: index of the stream within a seeded batch.
        check: also track symplectic eigenvalues after every step.

    Returns:
        The recorded series.
    """
    if cfg.n_slices != 1:
        raise InvalidArgument("spin squeezing uses a single atomic mode; see run_inhomogeneous")
    return _slices_run(cfg, rng, trajectory, check)


def run_inhomogeneous(cfg: ScenarioConfig, rng=None, trajectory: int = 0,
                      check: bool = False) -> TrajectoryResult:
    """Gas cut into ``n_slices`` slices with relative couplings ``kappa_weights``.

    Records the symmetric collective ``p`` variance, the variance of the mode the beam
    actually reads (weights proportional to the couplings) and the smallest eigenvalue
    of the atomic covariance. With one slice this is :func:`run_spin_squeezing`.
    """
    return _slices_run(cfg, rng, trajectory, check)


def run_scalar_magnetometry(cfg: ScenarioConfig, rng=None, trajectory: int = 0,
                            check: bool = False) -> TrajectoryResult:
    """Field ``B`` (pT) precessing the atomic spin, read out through the Faraday beam."""
    persist = ModeLayout.of(("B", ModeKind.CLASSICAL), ("at", ModeKind.ATOMIC))
    loop = _make_loop(cfg, persist, 1,
                      lambda lay: build_magnetometer_S(lay, cfg.kappa_tau, cfg.mu_tau), [4])
    out = _run(cfg, persist, loop, rng, trajectory, check)
    var_b = out.covs[:, 0, 0] / 2.0
    variances = {"var_B": var_b, "sd_B": np.sqrt(var_b), "var_p": out.covs[:, 3, 3] / 2.0,
                 "var_x": out.covs[:, 2, 2] / 2.0}
    means = {"B": out.means[:, 0], "x": out.means[:, 2], "p": out.means[:, 3]}
    return _result(cfg, out, persist, variances, means, trajectory)


def run_entanglement(cfg: ScenarioConfig, rng=None, trajectory: int = 0,
                     check: bool = False) -> TrajectoryResult:
    """Two oppositely polarized gasses crossed by one beam.

    The second gas's ``x`` is defined with a flipped sign, so the beam reads
    ``p1 + p2`` and leaves ``x1 - x2`` untouched. Records the joint variances, the EPR
    variance ``Var(x1 - x2) + Var(p1 + p2)`` and the log-negativity (bits).
    """
    persist = ModeLayout.of(("at1", ModeKind.ATOMIC), ("at2", ModeKind.ATOMIC))
    loop = _make_loop(cfg, persist, 1, lambda lay: build_two_ensemble_S(lay, cfg.kappa_tau), [4])
    out = _run(cfg, persist, loop, rng, trajectory, check)
    covs = out.covs
    v = {
        "var_p_sum": _var(covs, [0, 1, 0, 1]),
        "var_p_diff": _var(covs, [0, 1, 0, -1]),
        "var_x_sum": _var(covs, [1, 0, 1, 0]),
        "var_x_diff": _var(covs, [1, 0, -1, 0]),
    }
    v["epr"] = v["var_x_diff"] + v["var_p_sum"]
    v["log_neg"] = np.array([log_negativity_cov(c, [1]) for c in covs])
    means = {"p_sum": out.means[:, 1] + out.means[:, 3], "x_diff": out.means[:, 0] - out.means[:, 2]}
    return _result(cfg, out, persist, v, means, trajectory)


def run_vector_magnetometry(cfg: ScenarioConfig, rng=None, mode: str | None = None,
                            trajectory: int = 0, check: bool = False) -> TrajectoryResult:
    """Two field components sensed by two gasses and two beams.

    ``mode="entangled"`` sends both beams through both gasses and homodynes ``x`` of
    beam 1 and ``p`` of beam 2; ``"separate"`` gives each gas its own beam.
    """
    mode = mode or cfg.vector_mode
    persist = ModeLayout.of(("Bz", ModeKind.CLASSICAL), ("By", ModeKind.CLASSICAL),
                            ("at1", ModeKind.ATOMIC), ("at2", ModeKind.ATOMIC))
    loop = _make_loop(cfg, persist, 2,
                      lambda lay: build_vector_mag_S(lay, cfg.kappa_tau, cfg.mu_tau, mode),
                      [8, 11])
    out = _run(cfg, persist, loop, rng, trajectory, check)
    covs = out.covs
    variances = {"var_Bz": covs[:, 0, 0] / 2.0, "var_By": covs[:, 2, 2] / 2.0}
    means = {"Bz": out.means[:, 0], "By": out.means[:, 2]}
    return _result(cfg, out, persist, variances, means, trajectory)


RUNNERS: dict[str, Callable[..., TrajectoryResult]] = {
    "spin_squeezing": run_spin_squeezing,
    "inhomogeneous": run_inhomogeneous,
    "scalar_magnetometry": run_scalar_magnetometry,
    "entanglement": run_entanglement,
    "vector_magnetometry": run_vector_magnetometry,
}


def run_scenario(cfg: ScenarioConfig, trajectory: int = 0, check: bool = False) -> TrajectoryResult:
    return RUNNERS[cfg.scenario](cfg, None, trajectory=trajectory, check=check)


def run_batch(cfg: ScenarioConfig, n_trajectories: int, workers: int = 1,
              check: bool = False) -> list[TrajectoryResult]:
    """Independent trajectories ``0..n-1``; results do not depend on ``workers``."""
    if workers <= 1:
        return [run_scenario(cfg, k, check) for k in range(n_trajectories)]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda k: run_scenario(cfg, k, check), range(n_trajectories)))


def analytic_series(cfg: ScenarioConfig, times) -> dict:
    """Closed-form noiseless curves for the scenarios that have one."""
    from .ricatti import analytic_B_var, analytic_spin_var

    t = np.asarray(times, dtype=float)
    k2 = cfg.kappa_sq
    if cfg.scenario in ("spin_squeezing", "inhomogeneous"):
        k2_eff = k2 * float(np.sum(cfg.weights ** 2))
        var_p, var_x = analytic_spin_var(k2_eff, t)
        return {"var_p_analytic": var_p} if cfg.n_slices > 1 else \
            {"var_p_analytic": var_p, "var_x_analytic": var_x}
    if cfg.scenario == "scalar_magnetometry":
        return {"var_B_analytic": analytic_B_var(k2, cfg.mu_tau / cfg.tau, t, cfg.var_b0)}
    if cfg.scenario == "entanglement":
        return {"var_p_sum_analytic": 2.0 * analytic_spin_var(2.0 * k2, t)[0]}
    return {}
