"""Random physical states and symplectic maps for property tests."""

import numpy as np
from hypothesis import strategies as st
from scipy.linalg import expm

from gaussprobe.gstate import GaussianState, ModeKind, ModeLayout, symplectic_form


def random_symplectic(rng, n, scale=0.6):
    """``exp(Omega H)`` for a random symmetric ``H`` is symplectic."""
    H = rng.normal(size=(2 * n, 2 * n)) * scale
    return expm(symplectic_form(n) @ (H + H.T) / 2)


def random_cov(rng, n, mixed=True):
    nu = 1.0 + (rng.exponential(0.5, size=n) if mixed else np.zeros(n))
    S = random_symplectic(rng, n)
    cov = S @ np.diag(np.repeat(nu, 2)) @ S.T
    return 0.5 * (cov + cov.T)


def random_state(rng, n, kinds=None, mixed=True):
    kinds = kinds or [ModeKind.FIELD] * n
    layout = ModeLayout.of(*[(f"m{i}", k) for i, k in enumerate(kinds)])
    return GaussianState(layout, rng.normal(size=2 * n), random_cov(rng, n, mixed))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
