"""
Counting Solver

Full counting statistics of the emitted photons: the counting-field tilted
generator, its leading eigenvalue (the scaled cumulant generating function),
and the flux / zero-frequency noise / Fano factor from two independent
methods (finite-differenced eigenvalue and group-inverse resolvent).
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
import scipy.linalg

from config.settings import Settings
from solvers.steady_state_solver import StationaryState, solve_stationary
from tools.dressed_rate_tools import RateMatrix
from tools.errors import BranchAmbiguity, SimulationError, SingularSystem

logger = logging.getLogger(__name__)

STENCIL_WIDTHS = (1e-3, 5e-4, 2.5e-4)
GAP_TOL = 1e-10


@dataclass(frozen=True)
class TiltedGenerator:
    """M(chi) = M + (exp(i chi) - 1) J with J the counted emissions."""

    base: RateMatrix
    chi: float

    @property
    def matrix(self) -> np.ndarray:
        generator = self.base.generator.astype(complex)
        if self.chi == 0:
            return generator
        return generator + np.expm1(1j * self.chi) * self.base.photon_rates


@dataclass(frozen=True)
class CountingResult:
    """Zero-frequency photon statistics from one method."""

    flux: float
    noise: float
    fano: float
    method: str
    err_estimate: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {'I_bar': self.flux, 'S_II': self.noise, 'F': self.fano,
                'method': self.method, 'err_estimate': self.err_estimate}


def cgf_rate(rates: RateMatrix, chi: float) -> complex:
    """
    Leading eigenvalue lambda_0(chi) of the tilted generator.

    The eigenvalue with the largest real part is selected and then evaluated
    through 1^T M(chi) v = lambda 1^T v, i.e. lambda = (e^{i chi}-1) c.v / 1.v with
    c the column sums of J; this keeps relative accuracy near chi = 0 and gives
    lambda_0(0) = 0 exactly.
    """
    if chi == 0:
        return 0j
    tilted = TiltedGenerator(rates, chi).matrix
    values, vectors = scipy.linalg.eig(tilted)
    order = np.argsort(-values.real)
    if values.size > 1 and values[order[0]].real - values[order[1]].real < GAP_TOL:
        raise BranchAmbiguity(f'leading eigenvalues of M(chi={chi:g}) within {GAP_TOL:g}: '
                              f'{values[order[0]]:.3e}, {values[order[1]]:.3e}')
    vector = vectors[:, order[0]]
    weight = vector.sum()
    if abs(weight) < 1e-8 * np.abs(vector).sum():
        raise BranchAmbiguity(f'leading eigenvector at chi={chi:g} is not connected to the stationary branch')
    emission = rates.photon_rates.sum(axis=0)
    return complex(np.expm1(1j * chi) * (emission @ vector) / weight)


def _richardson(levels: Sequence[float]):
    """Two Richardson steps over stencils halving each time (h^2 then h^4 errors)."""
    first = [(4.0 * levels[k + 1] - levels[k]) / 3.0 for k in range(len(levels) - 1)]
    best = (16.0 * first[1] - first[0]) / 15.0
    return best, abs(best - first[1])


def flux_noise_eigen(rates: RateMatrix, widths: Sequence[float] = STENCIL_WIDTHS) -> CountingResult:
    """
    I_bar = d lambda/d(i chi), S_II = d^2 lambda/d(i chi)^2 at chi = 0.

    Central differences at each stencil width, then Richardson extrapolation;
    err_estimate is the spread between the last two extrapolation levels.
    """
    first, second = [], []
    for h in widths:
        forward = cgf_rate(rates, h)
        backward = cgf_rate(rates, -h)
        first.append(((forward - backward) / (2.0 * h) / 1j).real)
        second.append(-((forward + backward) / h ** 2).real)
    flux, flux_err = _richardson(first)
    noise, noise_err = _richardson(second)
    fano = noise / flux if flux > 0 else float('nan')
    error = max(flux_err / abs(flux), noise_err / abs(noise)) if flux > 0 and noise != 0 else max(flux_err, noise_err)
    return CountingResult(flux=float(flux), noise=float(noise), fano=float(fano),
                          method='eigen-derivative', err_estimate=float(error))


def flux_noise_pseudoinverse(rates: RateMatrix, state: Optional[StationaryState] = None) -> CountingResult:
    """
    I_bar = 1^T J v0 and S_II = I_bar - 2 1^T J D J v0 with D the group inverse of M.

    D J v0 is obtained from the bordered system [[M, v0], [1^T, 0]] [x; mu] = [J v0 - I_bar v0; 0].
    """
    if state is None:
        state = solve_stationary(rates, tail_mass_limit=np.inf)
    v0 = np.asarray(state.populations, dtype=float)
    generator = rates.generator
    counted = rates.photon_rates
    flux = float(counted.sum(axis=0) @ v0)
    source = counted @ v0 - flux * v0

    size = rates.dim
    bordered = np.zeros((size + 1, size + 1))
    bordered[:size, :size] = generator
    bordered[:size, size] = v0
    bordered[size, :size] = 1.0
    rhs = np.concatenate([source, [0.0]])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
            solution = scipy.linalg.solve(bordered, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f'Group-inverse solve failed: {str(e)}') from e

    noise = flux - 2.0 * float(counted.sum(axis=0) @ solution[:size])
    fano = noise / flux if flux > 0 else float('nan')
    return CountingResult(flux=flux, noise=float(noise), fano=float(fano), method='pseudoinverse')


class CountingSolver:
    """Stage computing the photon Fano factor with both methods."""

    def __init__(self, settings: Settings):
        self.settings = settings

    def process(self, rates: RateMatrix, state: Optional[StationaryState] = None) -> Dict[str, Any]:
        """
        Evaluate flux, noise and Fano factor and compare the two methods.

        Args:
            rates: Pauli rate matrix of the point
            state: Its stationary state, if already solved

        Returns:
            Dictionary with status, both CountingResults and their relative difference
        """
        try:
            logger.info('Step 1: Eigenvalue-derivative counting statistics')
            eigen = flux_noise_eigen(rates)

            logger.info('Step 2: Group-inverse counting statistics')
            resolvent = flux_noise_pseudoinverse(rates, state)

            difference = abs(eigen.noise - resolvent.noise) / max(abs(resolvent.noise), 1e-300)
            if difference > 1e-6:
                logger.warning(f'Counting methods disagree: relative S_II difference {difference:.2e}')
            return {
                'status': 'success',
                'eigen': eigen,
                'pseudoinverse': resolvent,
                'relative_difference': difference,
            }
        except SimulationError as e:
            logger.error(f'Error in counting statistics: {str(e)}')
            return {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
