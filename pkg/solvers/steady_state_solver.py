"""
Steady-State Solver

Stationary solution of the dressed-state Pauli equation, phonon marginals,
photon-flux decomposition by phonon change p, and the closed-form
mean-phonon estimate with its critical drive.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg

from config.settings import Settings
from tools.dressed_rate_tools import RateMatrix, build_doublets, build_rate_matrix, DoubletBasis
from tools.errors import SimulationError, SingularSystem, TruncationError
from tools.franck_condon_tools import FranckCondonTable, bose_occupation, build_fc_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FluxDecomposition:
    """Photon flux split by the phonon change p of the emitting transition."""

    p_values: np.ndarray
    fluxes: np.ndarray
    remainder: float
    total: float
    gamma_op: float

    def flux(self, p: int) -> float:
        hits = np.flatnonzero(self.p_values == p)
        return float(self.fluxes[hits[0]]) if hits.size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'I_p': {int(p): float(v) for p, v in zip(self.p_values, self.fluxes)},
            'I_remainder': self.remainder,
            'I_bar': self.total,
            'Gamma_op': self.gamma_op,
        }


@dataclass(frozen=True)
class StationaryState:
    """Stationary populations over dressed states and derived phonon quantities."""

    populations: np.ndarray
    phonon_marginal: Optional[np.ndarray]
    n_bar: float
    flux: FluxDecomposition
    residual: float
    tail_mass: float
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def flux_total(self) -> float:
        return self.flux.total

    @property
    def flux_resolved(self) -> np.ndarray:
        return self.flux.fluxes

    @property
    def lone_population(self) -> float:
        return float(self.populations[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'populations': self.populations.tolist(),
            'P_n': None if self.phonon_marginal is None else self.phonon_marginal.tolist(),
            'n_bar': self.n_bar,
            **self.flux.to_dict(),
            'residual': self.residual,
            'tail_mass': self.tail_mass,
            'lone_population': self.lone_population,
            'notes': list(self.notes),
        }


def phonon_content(basis: DoubletBasis) -> np.ndarray:
    """Mean phonon number alpha^2 n + beta^2 (n-1) of every dressed state (0 for |e,0>)."""
    labels = basis.state_n.astype(float)
    content = basis.state_alpha ** 2 * labels + basis.state_beta ** 2 * (labels - 1.0)
    content[0] = 0.0
    return content


def phonon_marginal(populations: np.ndarray, basis: DoubletBasis) -> np.ndarray:
    """P_n: state (mu, n) puts alpha^2 on phonon n and beta^2 on phonon n-1."""
    labels = basis.state_n
    excited = np.bincount(labels, weights=populations * basis.state_alpha ** 2, minlength=basis.n_max + 1)
    dressed = labels >= 1
    ground = np.bincount(labels[dressed] - 1, weights=populations[dressed] * basis.state_beta[dressed] ** 2,
                         minlength=basis.n_max + 1)
    return excited + ground


def _flux_decomposition(populations: np.ndarray, rates: RateMatrix, p_max: int) -> FluxDecomposition:
    currents = rates.photon_rates * populations[None, :]
    p_values = np.arange(-p_max, p_max + 1)
    fluxes = np.array([currents[rates.photon_p == p].sum() for p in p_values])
    total = float(currents.sum())
    return FluxDecomposition(
        p_values=p_values,
        fluxes=fluxes,
        remainder=float(total - fluxes.sum()),
        total=total,
        gamma_op=float(np.sum(currents * rates.photon_p)),
    )


def solve_stationary(rates: RateMatrix, tail_mass_limit: float = 1e-6, p_max: int = 5,
                     clip_tol: float = 1e-12, residual_tol: float = 1e-10) -> StationaryState:
    """
    Normalized kernel of the generator by row replacement and dense LU.

    Args:
        rates: Pauli rate matrix
        tail_mass_limit: Largest allowed P_n weight above 0.9 n_max
        p_max: Largest |p| resolved in the flux decomposition
        clip_tol: Negative populations down to -clip_tol are round-off
        residual_tol: Allowed max|M P| relative to max|M|

    Returns:
        StationaryState with marginal, mean phonon number and fluxes
    """
    generator = rates.generator
    system = generator.copy()
    system[0, :] = 1.0
    rhs = np.zeros(rates.dim)
    rhs[0] = 1.0
    try:
        with warnings.catch_warnings():
            # rates span many decades; conditioning is judged by the residual below
            warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
            populations = scipy.linalg.solve(system, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f'Stationary solve failed: {str(e)}') from e

    notes = []
    lowest = float(populations.min())
    if lowest < -clip_tol:
        raise SingularSystem(f'Stationary populations negative beyond round-off ({lowest:.3e})')
    if lowest < 0:
        notes.append(f'clipped negative populations down to {lowest:.3e}')
        populations = np.clip(populations, 0.0, None)
    populations = populations / populations.sum()

    scale = float(np.abs(generator).max()) or 1.0
    residual = float(np.abs(generator @ populations).max())
    if residual > residual_tol * scale:
        raise SingularSystem(f'Stationary residual {residual:.3e} exceeds {residual_tol:g} max|M|; '
                             'kernel is not one-dimensional')

    marginal = None
    n_bar = float('nan')
    tail = 0.0
    if rates.basis is not None:
        marginal = phonon_marginal(populations, rates.basis)
        n_values = np.arange(marginal.size)
        n_bar = float(n_values @ marginal)
        tail = float(marginal[n_values > 0.9 * rates.basis.n_max].sum())
        if tail >= tail_mass_limit:
            raise TruncationError(f'Stationary tail mass {tail:.3e} above n > 0.9 n_max={rates.basis.n_max}; '
                                  'increase n_max')
        if populations[0] > 1e-4:
            notes.append(f'lone state |e,0> carries {populations[0]:.3e} of the population')

    for note in notes:
        logger.info(note)
    populations.setflags(write=False)
    return StationaryState(
        populations=populations,
        phonon_marginal=marginal,
        n_bar=n_bar,
        flux=_flux_decomposition(populations, rates, p_max),
        residual=residual,
        tail_mass=tail,
        notes=tuple(notes),
    )


def flux_resolved(state: StationaryState, rates: RateMatrix, p_max: int = 5) -> FluxDecomposition:
    """Per-p photon fluxes I^(p), the total I_bar and Gamma_op = sum_p p I^(p)."""
    return _flux_decomposition(state.populations, rates, p_max)


@dataclass(frozen=True)
class PhononBalance:
    """Stationary bookkeeping of the mean dressed phonon content."""

    mechanical: float
    optical: float
    gamma_op: float
    relaxation: float

    @property
    def total(self) -> float:
        return self.mechanical + self.optical


def phonon_balance(state: StationaryState, rates: RateMatrix, params) -> PhononBalance:
    """
    Exact rate of change of the phonon content from bath and emission processes.

    The two parts cancel at stationarity; gamma_op is the counted-p source and
    relaxation is the thermal-bath estimate -gamma (n_bar - n_B).
    """
    content = phonon_content(rates.basis)
    jump = content[:, None] - content[None, :]
    currents = rates.rates * state.populations[None, :]
    optical_currents = rates.photon_rates * state.populations[None, :]
    optical = float(np.sum(optical_currents * jump))
    mechanical = float(np.sum((currents - optical_currents) * jump))
    n_b = bose_occupation(params.kT, params.omega_m)
    return PhononBalance(
        mechanical=mechanical,
        optical=optical,
        gamma_op=state.flux.gamma_op,
        relaxation=-params.gamma * (state.n_bar - n_b),
    )


@dataclass(frozen=True)
class AnalyticNbar:
    """Weak-coupling mean phonon number and critical drive."""

    n_bar: Optional[float]
    omega_star: Optional[float]
    A: float
    above_threshold: bool


def analytic_nbar(params) -> AnalyticNbar:
    """
    n_bar = (Gamma A + gamma n_B)/(gamma - Gamma A), A = (Omega g0/(epsilon omega_m))^2.

    Above threshold (gamma <= Gamma A) n_bar is None and the marker is set.
    """
    n_b = bose_occupation(params.kT, params.omega_m)
    drive = params.Omega * params.g0
    if params.epsilon == 0:
        A = float('inf') if drive > 0 else 0.0
    else:
        A = (drive / (params.epsilon * params.omega_m)) ** 2

    omega_star = None
    if params.g0 > 0 and params.Gamma > 0:
        omega_star = abs(params.epsilon) * params.omega_m * np.sqrt(params.gamma) / (params.g0 * np.sqrt(params.Gamma))

    gain = params.Gamma * A
    if params.gamma <= gain:
        return AnalyticNbar(n_bar=None, omega_star=omega_star, A=A, above_threshold=True)
    return AnalyticNbar(n_bar=float((gain + params.gamma * n_b) / (params.gamma - gain)),
                        omega_star=omega_star, A=A, above_threshold=False)


def boltzmann_distribution(kT: float, n_max: int, omega: float = 1.0) -> np.ndarray:
    """Thermal phonon distribution over 0..n_max, normalized on the truncation."""
    if kT == 0:
        dist = np.zeros(n_max + 1)
        dist[0] = 1.0
        return dist
    weights = np.exp(-np.arange(n_max + 1) * omega / kT)
    return weights / weights.sum()


def kolmogorov_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Largest difference between the cumulative distributions of p and q."""
    size = max(len(p), len(q))
    p = np.pad(np.asarray(p, dtype=float), (0, size - len(p)))
    q = np.pad(np.asarray(q, dtype=float), (0, size - len(q)))
    return float(np.max(np.abs(np.cumsum(p) - np.cumsum(q))))


def thermal_temperature(n_bar: float, omega: float = 1.0) -> float:
    """kT of the Bose distribution with mean n_bar (0 for n_bar <= 0)."""
    if n_bar <= 0:
        return 0.0
    return float(omega / np.log1p(1.0 / n_bar))


def pointwise_deviation(p: np.ndarray, reference: np.ndarray, floor: float = 1e-4) -> float:
    """max |p_n - q_n| / q_n over the levels where p_n > floor."""
    size = min(len(p), len(reference))
    p, reference = np.asarray(p[:size], dtype=float), np.asarray(reference[:size], dtype=float)
    occupied = p > floor
    if not occupied.any():
        return 0.0
    return float(np.max(np.abs(p[occupied] - reference[occupied]) / reference[occupied]))


@dataclass(frozen=True)
class PauliSolution:
    """Everything produced by one secular Pauli solve."""

    params: Any
    fc: FranckCondonTable
    basis: DoubletBasis
    rates: RateMatrix
    state: StationaryState


def solve_pauli(params, settings: Optional[Settings] = None) -> PauliSolution:
    """Franck-Condon table, doublets, generator and stationary state in one call."""
    settings = settings or Settings()
    fc = build_fc_table(params)
    basis = build_doublets(params, fc)
    rates = build_rate_matrix(params, basis, fc)
    state = solve_stationary(rates, tail_mass_limit=settings.tail_mass_limit, p_max=settings.p_max,
                             clip_tol=settings.clip_tol, residual_tol=settings.residual_tol)
    return PauliSolution(params=params, fc=fc, basis=basis, rates=rates, state=state)


class SteadyStateSolver:
    """Stage that solves the Pauli equation for one parameter point."""

    def __init__(self, settings: Settings):
        self.settings = settings

    def process(self, params) -> Dict[str, Any]:
        """
        Solve the stationary Pauli equation and compare with the closed form.

        Args:
            params: SystemParams of the point

        Returns:
            Dictionary with status, stationary quantities and diagnostics
        """
        logger.info(f'Steady state for Omega={params.Omega:g}, g0={params.g0:g}, epsilon={params.epsilon:g}')
        try:
            solution = solve_pauli(params, self.settings)
            state = solution.state
            analytic = analytic_nbar(params)
            balance = phonon_balance(state, solution.rates, params)
            return {
                'status': 'success',
                'solution': solution,
                'n_bar': state.n_bar,
                'n_bar_analytic': analytic.n_bar,
                'omega_star': analytic.omega_star,
                'above_threshold': analytic.above_threshold,
                **state.flux.to_dict(),
                'phonon_balance': balance.total,
                'relaxation': balance.relaxation,
                'tail_mass': state.tail_mass,
                'residual': state.residual,
                'lone_population': state.lone_population,
                'notes': list(solution.rates.notes + state.notes),
            }
        except SimulationError as e:
            logger.error(f'Error in steady-state solve: {str(e)}')
            return {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
