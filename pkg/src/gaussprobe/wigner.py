"""Phase-space layer: Gaussian Wigner functions and single-photon conditioning.

Coordinates are the quadratures themselves (vacuum variance 1/2), where the Gaussian
Wigner function is ``pi^-n det(gamma)^-1/2 exp(-(xi - m)^T gamma^-1 (xi - m))``.
Detecting one photon in a mode applies the kernel ``2 exp(-|d|^2) (2|d|^2 - 1)``, which
is ``2 pi`` times the Wigner function of ``|1><1|`` in these coordinates, so that
``integral W * kernel`` is the detection probability.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import CoverageError, InvalidArgument, NumericalFailure
from .gstate import GaussianState, ModeKind, symmetrize

PROB_TOL = 1e-10
EDGE_MASS_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Values of a two-dimensional quasi-distribution on a uniform ``(x, p)`` grid.

    ``values[i, j]`` sits at ``(axes[0][i], axes[1][j])``.
    """

    axes: tuple
    values: np.ndarray
    cell_volume: float

    @property
    def spacing(self) -> tuple:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    def mesh(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def total_mass(self) -> float:
        """Trapezoid integral over the grid."""
        dx, dp = self.spacing
        return float(np.trapezoid(np.trapezoid(self.values, dx=dp, axis=1), dx=dx))


def eval_gaussian_wigner(state: GaussianState, xi) -> np.ndarray:
    """Wigner density of ``state`` at points ``xi`` of shape ``(..., 2n)``."""
    xi = np.asarray(xi, dtype=float)
    cov = symmetrize(state.cov)
    d = cov.shape[0]
    if xi.shape[-1] != d:
        raise InvalidArgument(f"points have dimension {xi.shape[-1]}, state has {d}")
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        raise InvalidArgument("covariance is singular; Wigner function undefined")
    diff = xi - state.mean
    quad = np.einsum("...i,...i->...", diff, np.linalg.solve(cov, diff.reshape(-1, d).T).T
                     .reshape(diff.shape))
    return np.exp(-quad - 0.5 * logdet - (d // 2) * np.log(np.pi))


def _gauss(x, cov) -> np.ndarray:
    """Density of ``N(0, cov)`` at points ``x`` of shape ``(..., 2)``."""
    inv = np.linalg.inv(cov)
    q = np.einsum("...i,ij,...j->...", x, inv, x)
    return np.exp(-0.5 * q) / (2.0 * np.pi * np.sqrt(np.linalg.det(cov)))


def photon_kernel(delta) -> np.ndarray:
    """Single-photon detection kernel at points ``delta`` of shape ``(..., 2)``."""
    r2 = np.sum(np.asarray(delta, dtype=float) ** 2, axis=-1)
    return 2.0 * np.exp(-r2) * (2.0 * r2 - 1.0)


def _kernel_overlap(mu, cond_cov):
    """``integral N(d; mu, cond_cov / 2) * photon_kernel(d) dd`` for points ``mu`` (..., 2)."""
    eye = np.eye(2)
    inv = np.linalg.inv(eye + cond_cov)
    sigma = inv @ cond_cov / 2.0
    mu_p = mu @ inv.T
    poly = 2.0 * (np.trace(sigma) + np.sum(mu_p ** 2, axis=-1)) - 1.0
    return 2.0 * np.pi * _gauss(mu, (cond_cov + eye) / 2.0) * poly


def photon_probability(state: GaussianState, label: str) -> float:
    """Probability of exactly one photon in mode ``label`` (others traced out)."""
    i, j = state.layout.quadratures(label)
    B = symmetrize(state.cov[np.ix_([i, j], [i, j])])
    return float(_kernel_overlap(state.mean[[i, j]], B))


def _split(state: GaussianState, label: str):
    labels = state.layout.labels
    if len(labels) != 2:
        raise InvalidArgument(f"conditioning needs exactly two modes, got {len(labels)}")
    for l in labels:
        if state.layout.kind(l) is ModeKind.CLASSICAL:
            raise InvalidArgument("classical parameters cannot be photon-conditioned")
    kept = labels[0] if labels[1] == label else labels[1]
    if label not in labels:
        raise InvalidArgument(f"unknown mode {label!r}")
    a = list(state.layout.quadratures(kept))
    b = list(state.layout.quadratures(label))
    cov = symmetrize(state.cov)
    return (cov[np.ix_(a, a)], cov[np.ix_(a, b)], cov[np.ix_(b, b)],
            state.mean[a], state.mean[b])


def _kept_axes(A, m1, half_width_sigma, points):
    sd = np.sqrt(np.diag(A) / 2.0)
    return tuple(np.linspace(m1[k] - half_width_sigma * sd[k], m1[k] + half_width_sigma * sd[k],
                             points) for k in range(2))


def _quadrature_values(state, label, g, delta_half_width, delta_points):
    """Reference path: direct Riemann sum over the detected mode's phase space."""
    A, C, B, m1, m2 = _split(state, label)
    full = np.block([[A, C], [C.T, B]])
    d = np.linspace(-delta_half_width, delta_half_width, delta_points)
    dd = (d[1] - d[0]) ** 2
    D = np.stack(np.meshgrid(d, d, indexing="ij"), axis=-1).reshape(-1, 2)
    K = photon_kernel(D) * dd
    inv = np.linalg.inv(full)
    norm = 1.0 / (np.pi ** 2 * np.sqrt(np.linalg.det(full)))
    mean = np.concatenate([m1, m2])
    out = np.empty(g.shape[:-1])
    flat_g = g.reshape(-1, 2)
    flat_out = out.reshape(-1)
    for k, point in enumerate(flat_g):
        xi = np.concatenate([np.broadcast_to(point, D.shape), D], axis=1) - mean
        q = np.einsum("ni,ij,nj->n", xi, inv, xi)
        flat_out[k] = norm * np.exp(-q) @ K
    return out


def condition_single_photon(state: GaussianState, measured_label: str,
                            half_width_sigma: float = 6.0, points: int = 256,
                            method: str = "analytic", delta_half_width: float = 8.0,
                            delta_points: int = 161):
    """Wigner function of the kept mode after one photon is detected in ``measured_label``.

    Args:
        state: two-mode Gaussian state.
        measured_label: the mode hitting the photon counter.
        half_width_sigma: grid half width per axis, in standard deviations of the kept
            mode's prior marginal. Must be at least 5.
        points: grid points per axis.
        method: ``"analytic"`` (closed Gaussian-moment form) or ``"quadrature"``
            (direct sum over the detected mode, slow; used as a cross-check).
        delta_half_width, delta_points: integration grid for ``"quadrature"``.

    Returns:
        ``(WignerGrid, P)`` with ``P`` the detection probability.

    Raises:
        NumericalFailure: ``P`` vanishes within tolerance.
        CoverageError: more than 1e-4 of the mass sits in the outer band of the grid.
    """
    if half_width_sigma < 5:
        raise InvalidArgument("grid must cover at least 5 standard deviations")
    A, C, B, m1, m2 = _split(state, measured_label)
    P = float(_kernel_overlap(m2, B))
    if not P > PROB_TOL:
        raise NumericalFailure(f"single-photon probability {P:.3e} vanishes", value=P)
    axes = _kept_axes(A, m1, half_width_sigma, points)
    g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    if method == "analytic":
        T = np.linalg.solve(A, C).T          # C^T A^-1
        Bc = symmetrize(B - T @ C)
        mu = m2 + (g - m1) @ T.T
        values = _gauss(g - m1, A / 2.0) * _kernel_overlap(mu, Bc) / P
    elif method == "quadrature":
        values = _quadrature_values(state, measured_label, g, delta_half_width, delta_points) / P
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    cell = float((axes[0][1] - axes[0][0]) * (axes[1][1] - axes[1][0]))
    grid = WignerGrid(axes, values, cell)
    band = max(1, points // 16)
    inner = np.zeros_like(values, dtype=bool)
    inner[band:-band, band:-band] = True
    edge = float(np.abs(values[~inner]).sum() * cell)
    if edge > EDGE_MASS_TOL:
        raise CoverageError(f"{edge:.2e} of the mass lies in the grid's outer band")
    return grid, P


def condition_gaussian_kernel(state: GaussianState, measured_label: str, kernel_cov,
                              center) -> GaussianState:
    """Condition on a Gaussian kernel ``N(center, kernel_cov / 2)`` over the measured mode.

    A kernel narrow in ``x`` and wide in ``p`` reproduces homodyne detection of ``x``.
    Returns the kept mode as a one-mode state.
    """
    A, C, B, m1, m2 = _split(state, measured_label)
    K = np.asarray(kernel_cov, dtype=float)
    gain = C @ np.linalg.inv(B + K)
    layout = state.layout.without(measured_label)
    return GaussianState(layout, m1 + gain @ (np.asarray(center, dtype=float) - m2),
                         symmetrize(A - gain @ C.T))


def gaussian_grid(state: GaussianState, half_width_sigma: float = 6.0,
                  points: int = 256) -> WignerGrid:
    """One-mode Gaussian Wigner function tabulated on a grid."""
    if state.n_modes != 1:
        raise InvalidArgument("gaussian_grid needs a one-mode state")
    axes = _kept_axes(state.cov, state.mean, half_width_sigma, points)
    g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    cell = float((axes[0][1] - axes[0][0]) * (axes[1][1] - axes[1][0]))
    return WignerGrid(axes, eval_gaussian_wigner(state, g), cell)


def marginal(grid: WignerGrid, axis: int = 0):
    """Distribution of the quadrature on ``axis``; returns ``(coordinates, density)``."""
    if axis not in (0, 1):
        raise InvalidArgument(f"axis must be 0 or 1, got {axis}")
    other = 1 - axis
    density = np.trapezoid(grid.values, dx=grid.spacing[other], axis=other)
    return grid.axes[axis], density


def count_peaks(density) -> int:
    """Number of strict interior local maxima."""
    y = np.asarray(density)
    return int(np.sum((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])))


def wigner_negativity(grid: WignerGrid):
    """``(minimum value, integrated negative volume)``."""
    v = grid.values
    return float(v.min()), float(-v[v < 0].sum() * grid.cell_volume)


def rotate_grid(grid: WignerGrid, theta: float) -> WignerGrid:
    """Resample for a phase rotation ``(x, p) -> R(theta)(x, p)`` about the grid centre."""
    cx, cp = (float(a.mean()) for a in grid.axes)
    X, Pm = grid.mesh()
    c, s = np.cos(theta), np.sin(theta)
    # value at a point comes from its pre-image under the rotation
    xs = c * (X - cx) - s * (Pm - cp) + cx
    ps = s * (X - cx) + c * (Pm - cp) + cp
    dx, dp = grid.spacing
    coords = np.stack([(xs - grid.axes[0][0]) / dx, (ps - grid.axes[1][0]) / dp])
    values = map_coordinates(grid.values, coords, order=3, mode="constant", cval=0.0)
    return WignerGrid(grid.axes, values, grid.cell_volume)


def write_grid_csv(grid: WignerGrid, path) -> None:
    """Rows ``x, p, value`` with 17 significant digits."""
    X, Pm = grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "p", "value"])
        for row in zip(X.ravel(), Pm.ravel(), grid.values.ravel()):
            w.writerow([f"{v:.16e}" for v in row])
