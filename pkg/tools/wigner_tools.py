"""
Wigner Tools

Phase-space reconstruction of the oscillator state in the quadratures
x = (b + b^+)/sqrt(2), p = i(b^+ - b)/sqrt(2), where the vacuum is
exp(-(x^2 + p^2))/pi. Diagonal states are summed with the forward Laguerre
recurrence in r^2; density matrices with coherences go through qutip.wigner.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import qutip
from scipy.ndimage import gaussian_filter

from tools.errors import ExtentError, StateIndexError, TruncationError

logger = logging.getLogger(__name__)

DEFAULT_EXTENT = 6.0
DEFAULT_RESOLUTION = 241
SIGN_TOL = 1e-14
BOUNDARY_TOL = 1e-6
NORMALIZATION_TOL = 5e-3
OCCUPIED_TOL = 1e-6


@dataclass(frozen=True)
class WignerGrid:
    """W sampled on a square grid with trapezoidal quadrature weights."""

    x: np.ndarray
    p: np.ndarray
    W: np.ndarray
    weights: np.ndarray
    source: str
    extent: float
    resolution: int
    angle: float = 0.0

    @property
    def normalization(self) -> float:
        return float(np.sum(self.weights * self.W))

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.W).max())

    def subsampled(self) -> 'WignerGrid':
        """Every other grid point on the same extent (half resolution)."""
        x, p, W = self.x[::2], self.p[::2], self.W[::2, ::2]
        return replace(self, x=x, p=p, W=W, weights=quadrature_weights(x, p), resolution=len(x))


def quadrature_weights(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Outer product of 1-D trapezoid weights."""
    def axis_weights(axis):
        weights = np.gradient(axis)
        weights[0] = (axis[1] - axis[0]) / 2.0
        weights[-1] = (axis[-1] - axis[-2]) / 2.0
        return weights
    return np.outer(axis_weights(x), axis_weights(p))


def _grid(extent: float, resolution: int, angle: float = 0.0):
    axis = np.linspace(-extent, extent, resolution)
    X, P = np.meshgrid(axis, axis, indexing='ij')
    if angle:
        X, P = X * np.cos(angle) - P * np.sin(angle), X * np.sin(angle) + P * np.cos(angle)
    return axis, X, P


def _diagonal_layers(weights: np.ndarray, r2: np.ndarray) -> np.ndarray:
    """sum_n weights_n (-1)^n L_n(2 r^2) by forward recurrence."""
    x = 2.0 * r2
    previous = np.ones_like(x)
    total = weights[0] * previous
    if len(weights) == 1:
        return total
    current = 1.0 - x
    total = total - weights[1] * current
    for n in range(1, len(weights) - 1):
        previous, current = current, ((2 * n + 1 - x) * current - n * previous) / (n + 1)
        if weights[n + 1] != 0:
            total = total + (-1) ** (n + 1) * weights[n + 1] * current
    return total


def wigner_fock(n: int, x, p):
    """W_n(x, p) = ((-1)^n/pi) exp(-(x^2+p^2)) L_n(2(x^2+p^2))."""
    if n < 0:
        raise StateIndexError(f'Fock index must be non-negative, got {n}')
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = x ** 2 + p ** 2
    weights = np.zeros(n + 1)
    weights[n] = 1.0
    value = np.exp(-r2) / np.pi * _diagonal_layers(weights, r2)
    return float(value) if value.ndim == 0 else value


def occupied_extent(populations: np.ndarray, default: float = DEFAULT_EXTENT) -> float:
    """Half-width covering r > sqrt(2 n_eff) + 3, n_eff the last level above 1e-6."""
    occupied = np.nonzero(np.asarray(populations) > OCCUPIED_TOL)[0]
    n_eff = int(occupied[-1]) if occupied.size else 0
    return max(default, float(np.sqrt(2.0 * n_eff) + 3.0))


def matching_resolution(extent: float, default_extent: float, default_resolution: int) -> int:
    """Keep the default spacing when the extent grows; always odd so the origin is sampled."""
    if extent <= default_extent:
        return default_resolution
    intervals = int(np.ceil((default_resolution - 1) * extent / default_extent))
    return intervals + 1 + intervals % 2


def _finish(W: np.ndarray, axis: np.ndarray, source: str, extent: float, angle: float) -> WignerGrid:
    grid = WignerGrid(x=axis, p=axis.copy(), W=W, weights=quadrature_weights(axis, axis), source=source,
                      extent=extent, resolution=len(axis), angle=angle)
    boundary = max(np.abs(W[0, :]).max(), np.abs(W[-1, :]).max(), np.abs(W[:, 0]).max(), np.abs(W[:, -1]).max())
    if boundary > BOUNDARY_TOL * grid.max_abs:
        raise ExtentError(f'|W| on the grid boundary is {boundary:.3e} '
                          f'(> {BOUNDARY_TOL:g} max|W|); enlarge the extent beyond {extent:g}')
    if abs(grid.normalization - 1.0) > NORMALIZATION_TOL:
        raise ExtentError(f'Wigner grid integrates to {grid.normalization:.6f}; refine the grid')
    return grid


def wigner_from_pn(P_n, extent: Optional[float] = None, resolution: Optional[int] = None,
                   angle: float = 0.0) -> WignerGrid:
    """
    W = sum_n P_n W_n on a square grid.

    Args:
        P_n: Normalized phonon distribution
        extent: Half-width of the grid (default: covers the occupied levels, at least 6)
        resolution: Points per axis (default 241 at extent 6, same spacing beyond)
        angle: Rotation of the sampling axes in radians

    Returns:
        WignerGrid
    """
    populations = np.asarray(P_n, dtype=float)
    if extent is None:
        extent = occupied_extent(populations)
    if resolution is None:
        resolution = matching_resolution(extent, DEFAULT_EXTENT, DEFAULT_RESOLUTION)
    axis, X, P = _grid(extent, resolution, angle)
    r2 = X ** 2 + P ** 2
    W = np.exp(-r2) / np.pi * _diagonal_layers(populations, r2)
    return _finish(W, axis, 'Pn', extent, angle)


def wigner_from_dm(rho_phonon, extent: Optional[float] = None, resolution: Optional[int] = None,
                   angle: float = 0.0, leakage_tol: float = 1e-6) -> WignerGrid:
    """
    W of a reduced oscillator density matrix, coherences included.

    Evaluated with qutip.wigner (Clenshaw summation, g = sqrt(2) so the
    quadratures match wigner_from_pn). A nonzero angle rotates the state by
    exp(-i angle n) instead of the sampling axes.

    Raises:
        TruncationError: weight in the top 10% of Fock levels exceeds leakage_tol
    """
    rho = rho_phonon.full() if isinstance(rho_phonon, qutip.Qobj) else np.asarray(rho_phonon, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f'density matrix must be square, got shape {rho.shape}')
    if np.abs(rho - rho.conj().T).max() > 1e-8:
        raise ValueError('density matrix is not Hermitian')
    trace = np.trace(rho).real
    if abs(trace - 1.0) > 1e-6:
        raise ValueError(f'density matrix trace is {trace:.8f}, expected 1')

    dim = rho.shape[0]
    populations = np.clip(np.diag(rho).real, 0.0, None)
    levels = np.arange(dim)
    leakage = float(populations[levels > 0.9 * (dim - 1)].sum())
    if leakage > leakage_tol:
        raise TruncationError(f'Fock-basis leakage {leakage:.3e} above level {int(0.9 * (dim - 1))}; '
                              f'increase the working dimension')

    if extent is None:
        extent = occupied_extent(populations)
    if resolution is None:
        resolution = matching_resolution(extent, DEFAULT_EXTENT, DEFAULT_RESOLUTION)
    state = qutip.Qobj(rho)
    if angle:
        rotation = (-1j * angle * qutip.num(dim)).expm()
        state = rotation * state * rotation.dag()
    axis = np.linspace(-extent, extent, resolution)
    # qutip returns W[p, x]
    W = qutip.wigner(state, axis, axis, g=np.sqrt(2.0)).T
    return _finish(W, axis, 'density matrix', extent, angle)


def _eta(grid: WignerGrid) -> float:
    weighted = grid.weights * grid.W
    negative = grid.W < -SIGN_TOL
    positive_mass = weighted[~negative].sum()
    return float(-weighted[negative].sum() / positive_mass)


def negativity(grid: WignerGrid) -> Tuple[float, float]:
    """
    eta = -int_- W / int_+ W with cells |W| < 1e-14 counted as positive.

    Returns:
        (eta, error estimate) where the estimate is the change against the
        half-resolution subgrid
    """
    eta = _eta(grid)
    coarse = _eta(grid.subsampled())
    return eta, abs(eta - coarse)


def thermal_smear(grid: WignerGrid, sigma: float) -> WignerGrid:
    """
    Gaussian additive-noise channel: W convolved with a Gaussian of variance sigma^2
    in each quadrature. Negativity vanishes once sigma^2 >= 1/2.
    """
    if sigma < 0:
        raise ValueError(f'sigma must be non-negative, got {sigma}')
    if sigma == 0:
        return grid
    spacing = grid.x[1] - grid.x[0]
    smeared = gaussian_filter(grid.W, sigma=sigma / spacing, mode='constant', cval=0.0)
    return replace(grid, W=smeared, source=f'{grid.source} smeared sigma={sigma:g}')
