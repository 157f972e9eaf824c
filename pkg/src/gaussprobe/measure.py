"""Homodyne conditioning and the segment-by-segment probe cycle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .channels import (SpinTracker, StepMatrices, advance_tracker, apply_symplectic,
                       build_decay_LN, phase_rotation, step)
from .errors import DegenerateMeasurement, InvalidArgument
from .gstate import GaussianState, ModeKind, attach_mode, embed, remove_mode, symmetrize

DEGENERATE_TOL = 1e-12

ChiSource = Union[np.random.Generator, float]


@dataclass(frozen=True)
class MeasurementOutcome:
    chi: float
    prior_mean: float
    prior_variance: float

    @property
    def value(self) -> float:
        """Absolute homodyne reading."""
        return self.prior_mean + self.chi


def trajectory_rng(seed: int, trajectory: int = 0) -> np.random.Generator:
    """Independent PCG64 stream for one trajectory of a seeded batch."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(trajectory,))))


def _draw_chi(source: ChiSource, variance: float) -> float:
    if isinstance(source, np.random.Generator):
        return float(source.standard_normal() * np.sqrt(variance))
    if source is None:
        raise InvalidArgument("need a Generator or a fixed chi value")
    return float(source)


def homodyne_x(state: GaussianState, mode_label: str, chi: ChiSource):
    """Measure ``x`` of ``mode_label``, condition the rest and drop the measured mode.

    ``chi`` is either a Generator (draws the deviation from the prior mean) or a fixed
    deviation. The covariance update does not depend on it.
    """
    i, _ = state.layout.quadratures(mode_label)
    cov, mean = state.cov, state.mean
    b11 = cov[i, i]
    if not b11 > DEGENERATE_TOL:
        raise DegenerateMeasurement(f"x-variance of {mode_label!r} is {b11:.3e}")
    value = _draw_chi(chi, b11 / 2.0)
    c = cov[:, i]
    new_cov = symmetrize(cov - np.outer(c, c) / b11)
    new_mean = mean + c * (value / b11)
    outcome = MeasurementOutcome(value, float(mean[i]), float(b11 / 2.0))
    conditioned = remove_mode(state.replace(mean=new_mean, cov=new_cov), mode_label)
    return conditioned, outcome


def homodyne_quadrature(state: GaussianState, mode_label: str, theta: float, chi: ChiSource):
    """Homodyne of ``cos(theta) x + sin(theta) p`` on one mode."""
    i, j = state.layout.quadratures(mode_label)
    R = embed(phase_rotation(theta), (i, j), state.cov.shape[0])
    return homodyne_x(apply_symplectic(state, R), mode_label, chi)


def make_segment(kind: str = "coherent", r: float = 1.0):
    """Mean and covariance of an incoming beam segment: coherent or ``diag(1/r, r)``."""
    if kind == "coherent":
        return np.zeros(2), np.eye(2)
    if kind == "squeezed":
        if not r > 0:
            raise InvalidArgument(f"squeezing parameter must be positive, got {r}")
        return np.zeros(2), np.diag([1.0 / r, r])
    raise InvalidArgument(f"unknown segment kind {kind!r}")


def probe_cycle(state: GaussianState, tracker: SpinTracker,
                s_builder: Callable, epsilon: float = 0.0,
                segment=("coherent", 1.0), rng: ChiSource = 0.0,
                label: str = "ph", theta: float = 0.0):
    """One segment: attach, interact, lose, measure, discard, then age the tracker.

    ``s_builder(layout, tracker)`` returns the interaction matrix for the layout with
    the segment appended. Returns ``(state, tracker, outcome)``.
    """
    seg_mean, seg_cov = make_segment(*segment)
    full = attach_mode(state, label, ModeKind.FIELD, seg_mean, seg_cov)
    S = s_builder(full.layout, tracker)
    L, N = build_decay_LN(full.layout, tracker, epsilon)
    full = step(full, StepMatrices(S, L, N))
    if theta:
        out, outcome = homodyne_quadrature(full, label, theta, rng)
    else:
        out, outcome = homodyne_x(full, label, rng)
    return out, advance_tracker(tracker), outcome
