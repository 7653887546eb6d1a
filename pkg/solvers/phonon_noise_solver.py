"""
Phonon Noise Solver

Phonon-number noise spectrum S_nn(omega) of the Pauli dynamics from the
resolvent formula, its thermal reference, the variance sum rule and the
photon Fano-factor proxy built from it.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import quad

from config.settings import Settings
from solvers.steady_state_solver import PauliSolution, StationaryState, phonon_content, solve_pauli, solve_stationary
from tools.dressed_rate_tools import DoubletBasis, RateMatrix
from tools.errors import ConvergenceError, DivisionGuard, SimulationError, SingularSystem
from tools.franck_condon_tools import bose_occupation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumberObservable:
    """Phonon number as a diagonal observable over dressed states."""

    values: np.ndarray

    def mean(self, populations: np.ndarray) -> float:
        return float(self.values @ populations)

    def variance(self, populations: np.ndarray) -> float:
        delta = self.values - self.mean(populations)
        return float((delta ** 2) @ populations)


def number_observable(basis: DoubletBasis) -> NumberObservable:
    """n-hat with value alpha^2 n + beta^2 (n-1) on (mu, n) and 0 on |e,0>."""
    values = phonon_content(basis)
    values.setflags(write=False)
    return NumberObservable(values=values)


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(matrix, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f'{what} solve failed: {str(e)}') from e


def _fluctuation(rates: RateMatrix, observable: NumberObservable, state: Optional[StationaryState]):
    if state is None:
        state = solve_stationary(rates, tail_mass_limit=np.inf)
    v0 = np.asarray(state.populations, dtype=float)
    delta = observable.values - observable.mean(v0)
    return v0, delta, delta * v0


def s_nn(rates: RateMatrix, observable: NumberObservable, omega: float,
         state: Optional[StationaryState] = None) -> float:
    """
    S_nn(omega) = -2 (1, dn M/(M^2 + omega^2) dn v0).

    At omega = 0 the resolvent becomes the group inverse, obtained from the
    bordered system [[M, v0], [1^T, 0]].
    """
    if omega < 0:
        raise ValueError(f'omega must be non-negative, got {omega}')
    v0, delta, source = _fluctuation(rates, observable, state)
    generator = rates.generator
    size = rates.dim
    if omega == 0:
        bordered = np.zeros((size + 1, size + 1))
        bordered[:size, :size] = generator
        bordered[:size, size] = v0
        bordered[size, :size] = 1.0
        response = _solve(bordered, np.concatenate([source, [0.0]]), 'Complement')[:size]
    else:
        shifted = generator @ generator + omega ** 2 * np.eye(size)
        response = _solve(shifted, generator @ source, 'Resolvent')
    return float(-2.0 * delta @ response)


def snn_spectrum(rates: RateMatrix, observable: NumberObservable, omegas: Sequence[float],
                 state: Optional[StationaryState] = None) -> np.ndarray:
    """S_nn sampled at several frequencies."""
    if state is None:
        state = solve_stationary(rates, tail_mass_limit=np.inf)
    return np.array([s_nn(rates, observable, w, state) for w in omegas])


def variance_sum_rule(rates: RateMatrix, observable: NumberObservable,
                      state: Optional[StationaryState] = None, rtol: float = 1e-6) -> Dict[str, float]:
    """
    (1/pi) int_0^inf S_nn d omega compared with the stationary variance.

    Integrated in log-frequency between the slowest and fastest relaxation
    scales; the low end uses S_nn(0) and the high end the omega^-2 tail.
    """
    if state is None:
        state = solve_stationary(rates, tail_mass_limit=np.inf)
    v0, delta, source = _fluctuation(rates, observable, state)
    generator = rates.generator
    spectrum = scipy.linalg.eigvals(generator)
    relaxation = np.abs(spectrum.real[np.abs(spectrum) > 1e-12 * np.abs(generator).max()])
    low = 1e-4 * relaxation.min()
    high = 1e4 * relaxation.max()

    integral, error = quad(lambda u: s_nn(rates, observable, np.exp(u), state) * np.exp(u),
                           np.log(low), np.log(high), limit=400, epsrel=rtol)
    head = s_nn(rates, observable, 0.0, state) * low
    # large-omega limit S_nn -> -2 dn.M.dn v0 / omega^2
    tail = -2.0 * float(delta @ (generator @ source)) / high
    total = (integral + head + tail) / np.pi
    if error > 1e-2 * abs(integral):
        raise ConvergenceError(f'S_nn quadrature error {error:.2e} exceeds 1% of {integral:.3e}')
    return {'integral': total, 'variance': observable.variance(v0), 'quad_error': error / np.pi}


def fano_proxy(rates: RateMatrix, params, state: Optional[StationaryState] = None,
               settings: Optional[Settings] = None) -> Dict[str, float]:
    """
    gamma (S_nn(0) - S_nn^th(0)) / (n_bar - n_B), with S_nn^th from the same model at Omega = 0.

    Raises DivisionGuard when n_bar - n_B < 1e-12.
    """
    if state is None:
        state = solve_stationary(rates, tail_mass_limit=np.inf)
    observable = number_observable(rates.basis)
    n_bar = observable.mean(state.populations)
    n_b = bose_occupation(params.kT, params.omega_m)
    if n_bar - n_b < 1e-12:
        raise DivisionGuard(f'n_bar - n_B = {n_bar - n_b:.3e}; proxy undefined')
    noise = s_nn(rates, observable, 0.0, state)

    thermal = solve_pauli(params.updated(Omega=0.0), settings)
    thermal_noise = s_nn(thermal.rates, number_observable(thermal.basis), 0.0, thermal.state)
    return {
        'S_nn0': noise,
        'S_nn0_th': thermal_noise,
        'proxy': params.gamma * (noise - thermal_noise) / (n_bar - n_b),
    }


class PhononNoiseSolver:
    """Stage evaluating the zero-frequency phonon noise and the Fano proxy."""

    def __init__(self, settings: Settings):
        self.settings = settings

    def process(self, solution: PauliSolution) -> Dict[str, Any]:
        """
        Compute S_nn(0), its thermal reference and the proxy.

        Args:
            solution: Pauli solution of the point

        Returns:
            Dictionary with status and the noise columns; proxy is None when guarded
        """
        try:
            observable = number_observable(solution.basis)
            noise = s_nn(solution.rates, observable, 0.0, solution.state)
            try:
                proxy = fano_proxy(solution.rates, solution.params, solution.state, self.settings)
            except DivisionGuard as e:
                logger.info(f'Fano proxy undefined: {str(e)}')
                thermal = solve_pauli(solution.params.updated(Omega=0.0), self.settings)
                proxy = {
                    'S_nn0': noise,
                    'S_nn0_th': s_nn(thermal.rates, number_observable(thermal.basis), 0.0, thermal.state),
                    'proxy': None,
                }
            return {'status': 'success', **proxy}
        except SimulationError as e:
            logger.error(f'Error in phonon noise: {str(e)}')
            return {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
