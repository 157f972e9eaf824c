"""Multimode Gaussian states: layout, validity checks, attaching and tracing out modes.

Quadratures are interleaved as ``(x_1, p_1, ..., x_n, p_n)`` with ``[x, p] = i``.
Covariances follow ``gamma_ij = 2 Re <dy_i dy_j>`` so the vacuum has ``gamma = I``
and a quadrature variance is ``gamma_qq / 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidArgument

SYMMETRY_TOL = 1e-10
SYMPLECTIC_SLACK = 1e-9


class ModeKind(str, enum.Enum):
    ATOMIC = "atomic"
    FIELD = "field-segment"
    CLASSICAL = "classical-parameter"
    CAVITY = "cavity"


@dataclass(frozen=True)
class Mode:
    label: str
    kind: ModeKind

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))


@dataclass(frozen=True)
class ModeLayout:
    """Ordered, uniquely labelled modes. Mode ``i`` owns quadratures ``2i`` and ``2i+1``."""

    modes: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        modes = tuple(m if isinstance(m, Mode) else Mode(*m) for m in self.modes)
        if not modes:
            raise InvalidArgument("layout needs at least one mode")
        labels = [m.label for m in modes]
        if len(set(labels)) != len(labels):
            dup = sorted({l for l in labels if labels.count(l) > 1})
            raise InvalidArgument(f"duplicate mode labels: {dup}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(labels)})

    @classmethod
    def of(cls, *specs) -> "ModeLayout":
        """Build from ``(label, kind)`` pairs."""
        return cls(tuple(Mode(label, kind) for label, kind in specs))

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __contains__(self, label):
        return label in self._index

    @property
    def labels(self):
        return tuple(m.label for m in self.modes)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidArgument(f"unknown mode label {label!r}") from None

    def quadratures(self, label: str) -> tuple:
        i = self.index(label)
        return 2 * i, 2 * i + 1

    def kind(self, label: str) -> ModeKind:
        return self.modes[self.index(label)].kind

    def labels_of(self, kind) -> tuple:
        kind = ModeKind(kind)
        return tuple(m.label for m in self.modes if m.kind is kind)

    def quantum_indices(self) -> np.ndarray:
        """Quadrature indices of every mode that is not a classical parameter."""
        idx = [q for i, m in enumerate(self.modes) if m.kind is not ModeKind.CLASSICAL
               for q in (2 * i, 2 * i + 1)]
        return np.asarray(idx, dtype=np.int64)

    def appended(self, label: str, kind) -> "ModeLayout":
        return ModeLayout(self.modes + (Mode(label, kind),))

    def without(self, label: str) -> "ModeLayout":
        i = self.index(label)
        return ModeLayout(self.modes[:i] + self.modes[i + 1:])


@dataclass(frozen=True, eq=False)
class GaussianState:
    layout: ModeLayout
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        dim = 2 * len(self.layout)
        if mean.shape != (dim,) or cov.shape != (dim, dim):
            raise InvalidArgument(
                f"layout of {len(self.layout)} modes needs mean ({dim},) and cov ({dim},{dim}), "
                f"got {mean.shape} and {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return len(self.layout)

    def block(self, *labels) -> np.ndarray:
        """Covariance sub-block over the given modes, in the order given."""
        idx = [q for l in labels for q in self.layout.quadratures(l)]
        return self.cov[np.ix_(idx, idx)]

    def mode_mean(self, label: str) -> np.ndarray:
        i, j = self.layout.quadratures(label)
        return self.mean[[i, j]]

    def replace(self, mean=None, cov=None) -> "GaussianState":
        return GaussianState(self.layout,
                             self.mean if mean is None else mean,
                             self.cov if cov is None else cov)


def symmetrize(cov: np.ndarray) -> np.ndarray:
    return 0.5 * (cov + cov.T)


def symplectic_form(n: int) -> np.ndarray:
    """Block-diagonal ``Omega`` with per-mode ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def new_vacuum(layout) -> GaussianState:
    if not isinstance(layout, ModeLayout):
        layout = ModeLayout(tuple(layout))
    dim = 2 * len(layout)
    return GaussianState(layout, np.zeros(dim), np.eye(dim))


def attach_mode(state: GaussianState, label: str, kind, mode_mean=(0.0, 0.0),
                mode_cov=None) -> GaussianState:
    """Append an uncorrelated mode; the new cross-covariance block is zero."""
    kind = ModeKind(kind)
    mode_mean = np.asarray(mode_mean, dtype=float).reshape(2)
    mode_cov = np.eye(2) if mode_cov is None else np.asarray(mode_cov, dtype=float)
    if mode_cov.shape != (2, 2):
        raise InvalidArgument(f"mode_cov must be 2x2, got {mode_cov.shape}")
    if abs(mode_cov[0, 1] - mode_cov[1, 0]) > SYMMETRY_TOL:
        raise InvalidArgument("mode_cov is not symmetric")
    if kind is ModeKind.CLASSICAL:
        if np.linalg.eigvalsh(mode_cov).min() <= 0:
            raise InvalidArgument("classical-parameter covariance must be positive definite")
    elif symplectic_eigenvalues(mode_cov)[0] < 1 - SYMPLECTIC_SLACK:
        raise InvalidArgument("mode_cov violates the uncertainty relation")
    layout = state.layout.appended(label, kind)
    d = state.cov.shape[0]
    cov = np.zeros((d + 2, d + 2))
    cov[:d, :d] = state.cov
    cov[d:, d:] = mode_cov
    return GaussianState(layout, np.concatenate([state.mean, mode_mean]), cov)


def remove_mode(state: GaussianState, label: str) -> GaussianState:
    """Partial trace: delete the mode's rows/columns and mean entries."""
    if state.n_modes < 2:
        raise InvalidArgument("cannot remove the last remaining mode")
    i, j = state.layout.quadratures(label)
    keep = np.r_[0:i, j + 1:state.cov.shape[0]]
    return GaussianState(state.layout.without(label), state.mean[keep],
                         state.cov[np.ix_(keep, keep)])


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Sorted symplectic eigenvalues (moduli of the eigenvalues of ``i Omega gamma``, each once)."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise InvalidArgument(f"covariance must be square with even dimension, got {cov.shape}")
    n = cov.shape[0] // 2
    cov = symmetrize(cov)
    omega = symplectic_form(n)
    try:
        # L^T Omega L is antisymmetric with spectrum +-i nu; better conditioned than i Omega gamma
        L = np.linalg.cholesky(cov)
        M = L.T @ omega @ L
        ev = np.sqrt(np.clip(np.linalg.eigvalsh(M.T @ M), 0.0, None))
    except np.linalg.LinAlgError:
        ev = np.abs(np.linalg.eigvals(1j * omega @ cov))
    # eigenvalues come in pairs; keep every other one of the sorted moduli
    return np.sort(ev)[::2]


@dataclass
class ValidationReport:
    ok: bool
    symmetry_residual: float
    finite: bool
    min_symplectic: Optional[float]
    problems: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def validate(state: GaussianState, slack: float = SYMPLECTIC_SLACK) -> ValidationReport:
    """Check symmetry, finiteness and the uncertainty relation on quantum modes."""
    problems = []
    cov = state.cov
    finite = bool(np.all(np.isfinite(cov)) and np.all(np.isfinite(state.mean)))
    if not finite:
        problems.append("non-finite entries in mean or covariance")
        return ValidationReport(False, float("nan"), False, None, problems)
    residual = float(np.max(np.abs(cov - cov.T))) if cov.size else 0.0
    if residual > SYMMETRY_TOL:
        problems.append(f"symmetry residual {residual:.3e} > {SYMMETRY_TOL:g}")
    q = state.layout.quantum_indices()
    nu_min = None
    if q.size:
        nu_min = float(symplectic_eigenvalues(cov[np.ix_(q, q)])[0])
        if nu_min < 1 - slack:
            problems.append(f"symplectic eigenvalue {nu_min:.12g} < 1")
    return ValidationReport(not problems, residual, finite, nu_min, problems)


def embed(small: np.ndarray, index: Iterable[int], dim: int) -> np.ndarray:
    """Place a square matrix on the given quadrature indices of an identity of size ``dim``."""
    out = np.eye(dim)
    idx = list(index)
    out[np.ix_(idx, idx)] = small
    return out
