import numpy as np
import pytest
from hypothesis import given

from gaussprobe.errors import InvalidArgument
from gaussprobe.gstate import GaussianState, ModeKind, ModeLayout, new_vacuum
from gaussprobe.metrics import (epr_variance, log_negativity, log_negativity_cov,
                                min_variance_mode, quadrature_variance, squeezing_db)

from helpers import random_symplectic, seeds

TWO = ModeLayout.of(("a", ModeKind.ATOMIC), ("b", ModeKind.ATOMIC))


def tmsv(r):
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    Z = np.diag([1.0, -1.0])
    return np.block([[c * np.eye(2), s * Z], [s * Z, c * np.eye(2)]])


def test_quadrature_variance_examples():
    assert quadrature_variance(new_vacuum(TWO), "a", "x") == 0.5
    s = GaussianState(TWO, np.zeros(4), np.diag([1, 2 * 2.73e-4, 1, 1]))
    assert quadrature_variance(s, "a", "p") == pytest.approx(2.73e-4)
    lay = ModeLayout.of(("B", ModeKind.CLASSICAL), ("a", ModeKind.ATOMIC))
    s = GaussianState(lay, np.zeros(4), np.diag([2.0, 1, 1, 1]))
    assert quadrature_variance(s, "B", "x") == 1.0
    with pytest.raises(InvalidArgument):
        quadrature_variance(s, "zz", "x")
    with pytest.raises(InvalidArgument):
        quadrature_variance(s, "a", "y")


def test_squeezing_db_examples():
    assert squeezing_db(0.5) == 0.0
    assert squeezing_db(0.05) == pytest.approx(10.0)
    # -10 log10(2.7307e-4 / 0.5)
    assert squeezing_db(2.7307e-4) == pytest.approx(32.63, abs=0.01)
    with pytest.raises(InvalidArgument):
        squeezing_db(0.0)


def test_epr_vacuum_and_tmsv():
    assert epr_variance(new_vacuum(TWO), "a", "b") == pytest.approx(2.0)
    for r in (0.1, 0.5, 1.0):
        s = GaussianState(TWO, np.zeros(4), tmsv(r))
        assert epr_variance(s, "a", "b") == pytest.approx(2 * np.exp(-2 * r), rel=1e-12)


def test_epr_rejects_non_atomic():
    lay = ModeLayout.of(("a", ModeKind.ATOMIC), ("ph", ModeKind.FIELD))
    with pytest.raises(InvalidArgument):
        epr_variance(new_vacuum(lay), "a", "ph")


def test_log_negativity_examples():
    assert log_negativity(new_vacuum(TWO), ["a"]) == 0.0
    for r in (0.1, 0.5, 1.0):
        s = GaussianState(TWO, np.zeros(4), tmsv(r))
        assert log_negativity(s, ["a"]) == pytest.approx(2 * r / np.log(2), abs=1e-9)
    assert log_negativity_cov(tmsv(1.0), [1]) == pytest.approx(2 / np.log(2), abs=1e-9)


def test_log_negativity_brute_force_oracle():
    """Eigenvalues of i Omega gamma^T_B computed independently."""
    r = 0.7
    g = tmsv(r)
    P = np.diag([1, 1, 1, -1.0])
    omega = np.kron(np.eye(2), [[0, 1], [-1, 0]])
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ P @ g @ P)))[::2]
    brute = np.sum(np.maximum(0, -np.log2(ev)))
    assert log_negativity(GaussianState(TWO, np.zeros(4), g), ["a"]) == pytest.approx(brute,
                                                                                     abs=1e-9)


def test_log_negativity_bad_partitions():
    s = new_vacuum(TWO)
    with pytest.raises(InvalidArgument):
        log_negativity(s, [])
    with pytest.raises(InvalidArgument):
        log_negativity(s, ["a", "b"])
    with pytest.raises(InvalidArgument):
        log_negativity(s, ["a"], ["a"])


@given(seeds)
def test_log_negativity_local_symplectic_invariance(seed):
    rng = np.random.default_rng(seed)
    g = tmsv(rng.uniform(0, 1.2))
    S = np.zeros((4, 4))
    S[:2, :2] = random_symplectic(rng, 1)
    S[2:, 2:] = random_symplectic(rng, 1)
    a = log_negativity_cov(g, [1])
    b = log_negativity_cov(S @ g @ S.T, [1])
    assert b == pytest.approx(a, abs=1e-8)


def test_min_variance_mode_vacuum():
    val, vec = min_variance_mode(np.eye(4))
    assert val == pytest.approx(0.5)
    assert np.linalg.norm(vec) == pytest.approx(1.0)


@given(seeds)
def test_min_eigenvalue_bounds_every_mode(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4))
    block = M @ M.T + np.eye(4)
    val, _ = min_variance_mode(block)
    w = rng.normal(size=4)
    w /= np.linalg.norm(w)
    assert val <= w @ block @ w / 2 + 1e-12
