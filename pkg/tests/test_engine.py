import numpy as np
import pytest

from gaussprobe.channels import (SpinTracker, StepMatrices, advance_tracker, build_decay_LN,
                                 build_faraday_S, build_magnetometer_S, build_two_ensemble_S,
                                 build_vector_mag_S, step)
from gaussprobe.engine import ProbeLoop, run_loop
from gaussprobe.errors import DegenerateMeasurement, DivergenceError
from gaussprobe.gstate import GaussianState, ModeKind, ModeLayout, attach_mode
from gaussprobe.measure import homodyne_quadrature, homodyne_x, make_segment, probe_cycle
from gaussprobe.scenarios import ScenarioConfig, _initial, _make_loop

N_STEPS = 40


def reference(persist, cfg, builder, n_beams, thetas, seed):
    """Pure-function composite, one segment at a time."""
    cov0, mean0 = _initial(persist, cfg.var_b0, cfg.b_conj_var)
    state = GaussianState(persist, mean0, cov0)
    tracker = SpinTracker(cfg.kappa_tau, cfg.eta_tau)
    rng = np.random.default_rng(seed)
    _, seg = make_segment(cfg.segment, cfg.squeeze_r)
    labels = ["ph"] if n_beams == 1 else [f"ph{b + 1}" for b in range(n_beams)]
    for _ in range(N_STEPS):
        full = state
        for lab in labels:
            full = attach_mode(full, lab, ModeKind.FIELD, (0, 0), seg)
        scale = tracker.coupling_scale if cfg.kappa_feedback else 1.0
        L, N = build_decay_LN(full.layout, tracker, cfg.epsilon_eff)
        full = step(full, StepMatrices(builder(full.layout, scale), L, N))
        for lab, th in zip(labels, thetas):
            full, _ = homodyne_quadrature(full, lab, th, rng) if th else homodyne_x(full, lab, rng)
        state = full
        tracker = advance_tracker(tracker)
    return state


CASES = {
    "faraday": (ModeLayout.of(("at", "atomic")), 1, [0.0], [2],
                lambda cfg: lambda lay, c: build_faraday_S(lay, [cfg.kappa_tau * c])),
    "slices": (ModeLayout.of(("a1", "atomic"), ("a2", "atomic"), ("a3", "atomic")), 1, [0.0], [6],
               lambda cfg: lambda lay, c: build_faraday_S(lay, cfg.kappa_tau * c * np.array([2, 1, .5]))),
    "magnetometer": (ModeLayout.of(("B", "classical-parameter"), ("at", "atomic")), 1, [0.0], [4],
                     lambda cfg: lambda lay, c: build_magnetometer_S(lay, cfg.kappa_tau * c,
                                                                     cfg.mu_tau * c)),
    "two_ensembles": (ModeLayout.of(("at1", "atomic"), ("at2", "atomic")), 1, [0.0], [4],
                      lambda cfg: lambda lay, c: build_two_ensemble_S(lay, cfg.kappa_tau * c)),
    "vector": (ModeLayout.of(("Bz", "classical-parameter"), ("By", "classical-parameter"),
                             ("at1", "atomic"), ("at2", "atomic")), 2, [0.0, np.pi / 2], [8, 11],
               lambda cfg: lambda lay, c: build_vector_mag_S(lay, cfg.kappa_tau * c,
                                                             cfg.mu_tau * c)),
}


@pytest.mark.parametrize("feedback", [True, False])
@pytest.mark.parametrize("case", sorted(CASES))
def test_kernel_matches_pure_reference(case, feedback):
    persist, n_beams, thetas, meas, make_builder = CASES[case]
    cfg = ScenarioConfig(tau=1e-3, duration=1.0, kappa_tau_sq=0.09, mu_tau=0.05, eta=5.0,
                         epsilon=0.03, segment="squeezed", squeeze_r=1.7,
                         kappa_feedback=feedback)
    builder = make_builder(cfg)
    loop = _make_loop(cfg, persist, n_beams, lambda lay: builder(lay, 1.0), meas)
    cov0, mean0 = _initial(persist, cfg.var_b0, cfg.b_conj_var)
    out = run_loop(loop, cov0, mean0, N_STEPS, rng=np.random.default_rng(9))
    ref = reference(persist, cfg, builder, n_beams, thetas, 9)
    np.testing.assert_allclose(out.final_cov, ref.cov, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(out.final_mean, ref.mean, rtol=1e-10, atol=1e-12)


def test_probe_cycle_and_kernel_agree_for_faraday():
    cfg = ScenarioConfig(tau=1e-3, duration=1.0, kappa_tau_sq=0.25, eta=3.0, epsilon=0.1)
    persist = ModeLayout.of(("at", "atomic"))
    loop = _make_loop(cfg, persist, 1, lambda lay: build_faraday_S(lay, [cfg.kappa_tau]), [2])
    out = run_loop(loop, np.eye(2), np.zeros(2), 10, rng=np.random.default_rng(4))
    state, tr = GaussianState(persist, np.zeros(2), np.eye(2)), SpinTracker(0.5, cfg.eta_tau)
    rng = np.random.default_rng(4)
    for _ in range(10):
        state, tr, _ = probe_cycle(state, tr, lambda lay, t: build_faraday_S(lay, [t.kappa_tau]),
                                   cfg.epsilon, rng=rng)
    np.testing.assert_allclose(out.final_cov, state.cov, rtol=1e-12)
    np.testing.assert_allclose(out.final_mean, state.mean, rtol=1e-12, atol=1e-14)


def simple_loop(**kw):
    base = dict(seg_cov=np.eye(2), S0=np.eye(4), K=build_faraday_S(
        ModeLayout.of(("at", "atomic"), ("ph", "field-segment")), [0.1]) - np.eye(4),
        l=np.ones(4), n_fixed=np.zeros(4), n_atomic=np.zeros(4),
        meas_idx=np.array([2]), q_full=np.arange(4), q_persist=np.arange(2))
    base.update(kw)
    return ProbeLoop(**base)


def test_recording_cadence_and_outcome_sums():
    out = run_loop(simple_loop(), np.eye(2), np.zeros(2), 25, rng=np.random.default_rng(0),
                   record_every=10)
    np.testing.assert_array_equal(out.steps, [0, 10, 20, 25])
    full = run_loop(simple_loop(), np.eye(2), np.zeros(2), 25, rng=np.random.default_rng(0))
    np.testing.assert_array_equal(out.covs[-1], full.covs[-1])
    np.testing.assert_allclose(out.chi.sum(), full.chi.sum(), rtol=1e-12)
    np.testing.assert_allclose(out.chi[1], full.chi[1:11].sum(), rtol=1e-12)


def test_chunking_does_not_change_results():
    a = run_loop(simple_loop(), np.eye(2), np.zeros(2), 1000, rng=np.random.default_rng(1),
                 record_every=7)
    b = run_loop(simple_loop(), np.eye(2), np.zeros(2), 1000, rng=np.random.default_rng(1),
                 record_every=7, chunk_steps=70)
    assert np.array_equal(a.covs, b.covs) and np.array_equal(a.means, b.means)
    np.testing.assert_allclose(a.chi, b.chi, rtol=1e-12, atol=1e-14)
    np.testing.assert_array_equal(a.steps, b.steps)


def test_zero_rng_gives_zero_means():
    out = run_loop(simple_loop(), np.eye(2), np.zeros(2), 50)
    np.testing.assert_array_equal(out.final_mean, 0)


def test_degenerate_and_divergent_status():
    with pytest.raises(DegenerateMeasurement):
        run_loop(simple_loop(seg_cov=np.diag([0.0, 1.0]), K=np.zeros((4, 4))),
                 np.eye(2), np.zeros(2), 3)
    with pytest.raises(DivergenceError):
        run_loop(simple_loop(n_atomic=np.array([1.0, 1.0, 0, 0]), noise_growth=1e200,
                             noise_factor=1e200),
                 np.eye(2), np.zeros(2), 5)


def test_check_tracks_symplectic_extremes():
    out = run_loop(simple_loop(), np.eye(2), np.zeros(2), 200, check=True)
    assert out.nu_min == pytest.approx(1.0, abs=1e-12)
    assert out.nu_max == pytest.approx(1.0, abs=1e-12)
    assert np.isnan(run_loop(simple_loop(), np.eye(2), np.zeros(2), 2).nu_min)
