import dataclasses

import numpy as np
import pytest

from gaussprobe.channels import build_vector_mag_S
from gaussprobe.engine import run_loop
from gaussprobe.errors import ConfigError
from gaussprobe.gstate import ModeLayout
from gaussprobe.ricatti import analytic_spin_var
from gaussprobe.scenarios import (PhysicalParams, ScenarioConfig, _initial, _make_loop,
                                  analytic_series, derive_couplings, run_batch,
                                  run_entanglement, run_inhomogeneous, run_scalar_magnetometry,
                                  run_spin_squeezing, run_vector_magnetometry)

K2 = 1.83e6
TAU = 1e-8
LAB = dict(gamma=2 * np.pi * 5e6, lam=852e-9, delta=2 * np.pi * 10e9, area=2e-6, phi=5e14,
               n_atoms=2e12, tau=TAU)


def spin_cfg(**kw):
    base = dict(scenario="spin_squeezing", tau=TAU, duration=1e-4, kappa_tau_sq=K2 * TAU,
                decay=False, record_every=500)
    base.update(kw)
    return ScenarioConfig(**base)


def mag_cfg(**kw):
    base = dict(scenario="scalar_magnetometry", tau=TAU, duration=1e-4, kappa_tau_sq=0.0183,
                mu_tau=8.8e-4, decay=False, record_every=500)
    base.update(kw)
    return ScenarioConfig(**base)


def test_couplings_vanish_far_detuned():
    c = derive_couplings(PhysicalParams(**{**LAB, "delta": 1e30}))
    assert c.eta < 1e-30 and c.epsilon < 1e-30


def test_couplings_from_lab_inputs():
    c = derive_couplings(PhysicalParams(**LAB))
    assert 1.7577 / 2 <= c.eta <= 1.7577 * 2
    assert 0.028 / 4 <= c.epsilon <= 0.028 * 4
    assert c.kappa_tau ** 2 / TAU == pytest.approx(K2, rel=0.1)
    assert c.mu_tau == pytest.approx(8.8e-4, rel=0.01)


def test_kappa_tau_scales_with_sqrt_tau():
    a = derive_couplings(PhysicalParams(**LAB))
    b = derive_couplings(PhysicalParams(**{**LAB, "tau": 2 * TAU}))
    assert b.kappa_tau / a.kappa_tau == pytest.approx(np.sqrt(2), rel=1e-12)


def test_physical_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(**{**LAB, "area": -1.0})


def test_spin_noiseless_value_at_1ms():
    r = run_spin_squeezing(spin_cfg(duration=1e-3, record_every=10_000))
    assert r.variances["var_p"][-1] == pytest.approx(2.7307e-4, abs=1e-6)
    assert r.variances["var_p"][-1] == pytest.approx(analytic_spin_var(K2, 1e-3)[0], rel=1e-10)


def test_spin_without_coupling_is_flat():
    r = run_spin_squeezing(spin_cfg(kappa_tau_sq=0.0))
    np.testing.assert_array_equal(r.variances["var_p"], 0.5)


def test_spin_noisy_has_interior_minimum():
    r = run_spin_squeezing(spin_cfg(duration=5e-3, decay=True, eta=1.7577, epsilon=0.028,
                                    record_every=5000))
    v = r.variances["var_p"]
    i = int(np.argmin(v))
    assert 0 < i < len(v) - 1


def test_inhomogeneous_equal_slices_match_homogeneous():
    n = 4
    r = run_inhomogeneous(spin_cfg(scenario="inhomogeneous", n_slices=n))
    expected = analytic_spin_var(n * K2, r.times)[0]
    np.testing.assert_allclose(r.variances["var_min_eig"], expected, rtol=1e-6)
    np.testing.assert_allclose(r.variances["var_p_sym"], expected, rtol=1e-6)


def test_inhomogeneous_single_slice_is_spin_squeezing():
    cfg = spin_cfg()
    a = run_spin_squeezing(cfg)
    b = run_inhomogeneous(dataclasses.replace(cfg, scenario="inhomogeneous"))
    assert np.array_equal(a.covs, b.covs)
    assert np.array_equal(a.outcomes, b.outcomes)


def test_inhomogeneous_min_eig_below_symmetric_mode():
    r = run_inhomogeneous(spin_cfg(scenario="inhomogeneous", n_slices=2, kappa_weights=(2, 1)))
    v = r.variances
    # eigensolver roundoff is relative to the largest (anti-squeezed) entry
    tol = 1e-15 * np.abs(r.covs).max()
    assert np.all(v["var_min_eig"] <= v["var_p_sym"] + tol)
    assert np.all(v["var_min_eig"] <= v["var_p_weighted"] + tol)
    assert v["var_min_eig"][-1] < v["var_p_sym"][-1]


def test_equal_slices_min_mode_is_symmetric():
    from gaussprobe.metrics import min_variance_mode
    r = run_inhomogeneous(spin_cfg(scenario="inhomogeneous", n_slices=2))
    _, vec = min_variance_mode(r.covs[-1])
    np.testing.assert_allclose(np.abs(vec), [0, 1 / np.sqrt(2), 0, 1 / np.sqrt(2)], atol=1e-8)


def test_magnetometry_without_mu_keeps_b_variance():
    r = run_scalar_magnetometry(mag_cfg(mu_tau=0.0))
    np.testing.assert_array_equal(r.variances["var_B"], 1.0)


def test_magnetometry_prior_variance_and_conjugate_slot():
    r = run_scalar_magnetometry(mag_cfg(var_b0=2.5, b_conj_var=7.0))
    assert r.variances["var_B"][0] == 2.5
    assert r.covs[-1][1, 1] == 14.0


def test_entanglement_without_coupling_is_separable():
    r = run_entanglement(spin_cfg(scenario="entanglement", kappa_tau_sq=0.0))
    np.testing.assert_allclose(r.variances["epr"], 2.0)
    np.testing.assert_array_equal(r.variances["log_neg"], 0.0)


def test_entanglement_sum_mode_follows_closed_form():
    r = run_entanglement(spin_cfg(scenario="entanglement"))
    v = r.variances
    np.testing.assert_allclose(v["var_p_sum"], 2 * analytic_spin_var(2 * K2, r.times)[0],
                               rtol=1e-9)
    np.testing.assert_allclose(v["var_p_diff"], 1.0, rtol=1e-12)
    np.testing.assert_allclose(v["var_x_diff"], 1.0, rtol=1e-12)
    assert v["epr"][-1] < 2 and v["log_neg"][-1] > 0


def vec_cfg(**kw):
    return mag_cfg(scenario="vector_magnetometry", **kw)


def test_vector_without_mu_constant():
    for mode in ("entangled", "separate"):
        r = run_vector_magnetometry(vec_cfg(mu_tau=0.0), mode=mode)
        np.testing.assert_array_equal(r.variances["var_By"], 1.0)
        np.testing.assert_array_equal(r.variances["var_Bz"], 1.0)


def test_vector_entangled_beats_separate():
    a = run_vector_magnetometry(vec_cfg(duration=1e-3, record_every=10_000), mode="entangled")
    b = run_vector_magnetometry(vec_cfg(duration=1e-3, record_every=10_000), mode="separate")
    for k in ("var_By", "var_Bz"):
        assert np.all(a.variances[k] <= b.variances[k])
        assert a.variances[k][-1] < b.variances[k][-1]


def test_vector_channels_decouple():
    """Switching off beam 1 freezes the B_y uncertainty only."""
    cfg = vec_cfg()
    persist = ModeLayout.of(("Bz", "classical-parameter"), ("By", "classical-parameter"),
                            ("at1", "atomic"), ("at2", "atomic"))
    loop = _make_loop(cfg, persist, 2,
                      lambda lay: build_vector_mag_S(lay, (0.0, cfg.kappa_tau), cfg.mu_tau),
                      [8, 11])
    cov0, mean0 = _initial(persist, 1.0, 1e6)
    out = run_loop(loop, cov0, mean0, 10_000, record_every=1000)
    np.testing.assert_array_equal(out.covs[:, 2, 2], 2.0)
    assert out.covs[-1, 0, 0] < 2.0


def test_seed_determinism_and_trajectory_independence():
    cfg = mag_cfg(seed=11)
    a, b = run_scalar_magnetometry(cfg), run_scalar_magnetometry(cfg)
    assert np.array_equal(a.covs, b.covs) and np.array_equal(a.outcomes, b.outcomes)
    for k in a.means:
        assert np.array_equal(a.means[k], b.means[k])
    c = run_scalar_magnetometry(dataclasses.replace(cfg, seed=12))
    for k in a.variances:
        assert np.array_equal(a.variances[k], c.variances[k])
    assert not np.array_equal(a.means["B"], c.means["B"])


def test_batch_is_independent_of_workers():
    cfg = mag_cfg(duration=2e-5, record_every=100)
    a = run_batch(cfg, 3)
    b = run_batch(cfg, 3, workers=3)
    for x, y in zip(a, b):
        assert np.array_equal(x.outcomes, y.outcomes)
    assert not np.array_equal(a[0].outcomes, a[1].outcomes)


def test_variances_positive_and_monotone_when_noiseless():
    r = run_scalar_magnetometry(mag_cfg(duration=1e-3, record_every=1000))
    for k in ("var_B", "var_p"):
        v = r.variances[k]
        assert np.all(v > 0)
        assert np.all(np.diff(v) <= 0)


def test_squeezed_input_improves_field_estimate():
    a = run_scalar_magnetometry(mag_cfg(duration=1e-3))
    b = run_scalar_magnetometry(mag_cfg(duration=1e-3, segment="squeezed", squeeze_r=4.0))
    assert np.all(b.variances["var_B"] <= a.variances["var_B"])


def test_analytic_series():
    cfg = mag_cfg()
    r = run_scalar_magnetometry(cfg)
    np.testing.assert_allclose(analytic_series(cfg, r.times)["var_B_analytic"][1:],
                               r.variances["var_B"][1:], rtol=1e-2)
    assert analytic_series(vec_cfg(), r.times) == {}


@pytest.mark.parametrize("kw", [
    dict(duration=1.5e-8), dict(tau=-1.0), dict(scenario="bogus"), dict(n_slices=0),
    dict(n_slices=2, kappa_weights=(1.0,)), dict(epsilon=1.0), dict(record_every=0),
    dict(segment="thermal"), dict(vector_mode="x"), dict(var_b0=0.0),
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        spin_cfg(**kw)


def test_decay_toggle_zeroes_rates():
    cfg = spin_cfg(eta=2.0, epsilon=0.1, decay=False)
    assert cfg.eta_tau == 0.0 and cfg.epsilon_eff == 0.0


def test_unequal_slices_stay_physical_over_long_runs():
    """Small increments to large anti-squeezed entries must not erode the uncertainty bound."""
    cfg = spin_cfg(scenario="inhomogeneous", n_slices=3, kappa_weights=(1.5, 1.0, 0.5),
                   kappa_tau_sq=0.0183, duration=1e-3, record_every=100_000)
    r = run_inhomogeneous(cfg, check=True)
    assert abs(r.nu_min - 1) < 1e-11 and abs(r.nu_max - 1) < 1e-11
