"""
Lindblad Solver

Full master equation of the driven emitter and oscillator in the frame
rotating at the drive, keeping every coherence. Provides the stationary
density matrix, g2(t) from the quantum regression theorem and the Mandel
Fano factor (time-integrated and resolvent forms).
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import qutip
from scipy.integrate import trapezoid

from config.settings import Settings
from tools.errors import ConvergenceError, SimulationError
from tools.franck_condon_tools import bose_occupation
from tools.liouvillian_tools import (
    DensityMatrixState,
    Liouvillian,
    as_operator,
    bordered_solve,
    check_dimension,
    collapse_list,
    lindblad_superoperator,
    stationary_dm,
    vec,
)

logger = logging.getLogger(__name__)

# emitter basis order: ground, excited
SIGMA_MINUS = qutip.destroy(2)
SIGMA_Z = 2.0 * qutip.num(2) - qutip.qeye(2)


@dataclass(frozen=True)
class PhotonCorrelation:
    """Normalized two-time emission correlation on a time grid."""

    times: np.ndarray
    g2: np.ndarray
    I_bar: float


@dataclass(frozen=True)
class MandelResult:
    """F = 1 + 2 I_bar int_0^inf (g2 - 1) dt with the pieces that built it."""

    fano: float
    flux: float
    integral: float
    tail: float
    method: str


def displacement(lam: float, levels: int, drop_tol: float = 1e-12) -> qutip.Qobj:
    """Truncated exp(lam (a^+ - a)) with entries below drop_tol removed."""
    return qutip.displace(levels, lam).tidyup(atol=drop_tol)


def build_liouvillian(params, settings: Optional[Settings] = None) -> Liouvillian:
    """
    Superoperator of the emitter-oscillator master equation.

    H = -(1 + epsilon)/2 sigma_z + omega_m a^+a + Omega/2 (sigma_+ D(lam_drive) + h.c.),
    with dissipators gamma(n_B+1) D(a), gamma n_B D(a^+), Gamma D(sigma_- D(-lam_jump))
    and gamma_phi D(sigma_z).
    """
    settings = settings or Settings()
    levels = params.n_max + 1
    check_dimension(2 * levels, settings.max_hilbert_dim)

    a = qutip.tensor(qutip.qeye(2), qutip.destroy(levels))
    coupling = qutip.tensor(SIGMA_MINUS.dag(), displacement(params.fc_lambda, levels, settings.fc_drop_tol))
    hamiltonian = (-(params.omega_m + params.epsilon) / 2.0 * qutip.tensor(SIGMA_Z, qutip.qeye(levels))
                   + params.omega_m * a.dag() * a
                   + params.Omega / 2.0 * (coupling + coupling.dag()))

    n_b = bose_occupation(params.kT, params.omega_m)
    jump = qutip.tensor(SIGMA_MINUS, displacement(-params.jump_lambda, levels, settings.fc_drop_tol))
    collapse = collapse_list([
        (params.gamma * (n_b + 1.0), a),
        (params.gamma * n_b, a.dag()),
        (params.Gamma, jump),
        (params.gamma_phi, qutip.tensor(SIGMA_Z, qutip.qeye(levels))),
    ])
    generator = lindblad_superoperator(hamiltonian, collapse)
    logger.debug(f'Liouvillian built: d={2 * levels}, nnz={generator.data.nnz}')
    return Liouvillian(generator=generator, hamiltonian=hamiltonian, jump=jump,
                       jump_rate=params.Gamma, emitter_levels=2, phonon_levels=levels)


def _emission_pieces(liouvillian: Liouvillian, state: DensityMatrixState):
    jump = liouvillian.jump
    counted = jump.dag() * jump
    emitted = float(qutip.expect(counted, state.density))
    if emitted <= 0:
        raise ConvergenceError('no stationary emission: <L^+L> vanishes')
    after_jump = jump * state.density * jump.dag()
    return counted, emitted, after_jump


def _tail_estimate(times: np.ndarray, excess: np.ndarray):
    """Remaining integral beyond the grid from the decay of the last 10% of samples."""
    start = int(0.9 * len(times))
    window_t, window = times[start:], excess[start:]
    if np.max(np.abs(window)) < 1e-12:
        return 0.0, 0.0
    half = len(window) // 2
    early = np.sqrt(np.mean(window[:half] ** 2))
    late = np.sqrt(np.mean(window[half:] ** 2))
    spacing = np.mean(window_t[half:]) - np.mean(window_t[:half])
    if late >= early or spacing <= 0:
        raise ConvergenceError('g2 - 1 does not decay over the last 10% of the time grid; extend t_max')
    rate = np.log(early / late) / spacing
    return float(np.mean(window[half:]) / rate), float(late / rate)


def g2_and_mandel(liouvillian: Liouvillian, state: DensityMatrixState, t_max: float, n_steps: int = 2000,
                  method: str = 'adams'):
    """
    g2(t) = Tr(L^+L e^{Lt}[L rho L^+]) / <L^+L>^2 and the Mandel Fano factor.

    The post-jump operator is propagated with qutip.mesolve under the full
    Liouvillian (quantum regression theorem).

    Args:
        liouvillian: Master-equation superoperator
        state: Its stationary density matrix
        t_max: Last delay of the grid
        n_steps: Number of intervals of the uniform grid
        method: mesolve integrator ('adams' or 'bdf')

    Returns:
        (PhotonCorrelation, MandelResult)
    """
    counted, emitted, after_jump = _emission_pieces(liouvillian, state)
    times = np.linspace(0.0, t_max, n_steps + 1)
    options = qutip.Options(method=method, rtol=1e-8, atol=1e-12, nsteps=100000)
    try:
        evolution = qutip.mesolve(liouvillian.generator, after_jump, times, [], [counted], options=options)
    except Exception as e:
        raise ConvergenceError(f'g2 propagation failed: {str(e)}') from e

    g2 = np.real(evolution.expect[0]) / emitted ** 2
    if g2.min() > -1e-8:
        g2 = np.clip(g2, 0.0, None)
    excess = g2 - 1.0
    integral = float(trapezoid(excess, times))
    tail, tail_bound = _tail_estimate(times, excess)
    if tail_bound > 1e-2 * max(abs(integral), 1e-300):
        raise ConvergenceError(f'Mandel tail {tail_bound:.3e} exceeds 1% of the integral {integral:.3e}')

    flux = liouvillian.jump_rate * emitted
    correlation = PhotonCorrelation(times=times, g2=g2, I_bar=flux)
    mandel = MandelResult(fano=1.0 + 2.0 * flux * (integral + tail), flux=flux, integral=integral, tail=tail,
                          method='time-integrated')
    return correlation, mandel


def g2_zero(liouvillian: Liouvillian, state: DensityMatrixState) -> float:
    """Equal-time g2(0) = Tr(L^+L L rho L^+) / <L^+L>^2."""
    counted, emitted, after_jump = _emission_pieces(liouvillian, state)
    return float(np.real(qutip.expect(counted, after_jump)) / emitted ** 2)


def mandel_fano_resolvent(liouvillian: Liouvillian, state: DensityMatrixState) -> MandelResult:
    """
    Mandel Fano factor with int_0^inf (g2 - 1) dt = -Tr(L^+L y)/<L^+L>^2,
    where y is the trace-free solution of L y = L rho L^+ - <L^+L> rho.
    """
    counted, emitted, after_jump = _emission_pieces(liouvillian, state)
    source = vec(after_jump - emitted * state.density)
    response = as_operator(bordered_solve(liouvillian, state, source), liouvillian)
    integral = float(-np.real((counted * response).tr()) / emitted ** 2)
    flux = liouvillian.jump_rate * emitted
    return MandelResult(fano=1.0 + 2.0 * flux * integral, flux=flux, integral=integral, tail=0.0, method='resolvent')


class LindbladSolver:
    """Stage solving the full master equation for one parameter point."""

    def __init__(self, settings: Settings):
        self.settings = settings

    def process(self, params, with_g2: bool = False, t_max: Optional[float] = None,
                n_steps: int = 2000) -> Dict[str, Any]:
        """
        Stationary state, emission flux and Mandel Fano factor.

        Args:
            params: SystemParams of the point
            with_g2: Also propagate g2(t) on a time grid
            t_max: Grid length (default 20/Gamma)
            n_steps: Grid intervals

        Returns:
            Dictionary with status, the density-matrix state and photon statistics
        """
        logger.info(f'Master equation for Omega={params.Omega:g}, g0={params.g0:g}, n_max={params.n_max}')
        try:
            logger.info('Step 1: Building Liouvillian')
            liouvillian = build_liouvillian(params, self.settings)

            logger.info('Step 2: Stationary density matrix')
            state = stationary_dm(liouvillian, method=self.settings.lindblad_method,
                                  tail_mass_limit=self.settings.tail_mass_limit)

            logger.info('Step 3: Photon statistics')
            mandel = mandel_fano_resolvent(liouvillian, state)
            result = {
                'status': 'success',
                'liouvillian': liouvillian,
                'state': state,
                'n_bar': state.n_bar,
                'I_bar': mandel.flux,
                'F_mandel': mandel.fano,
                'g2_0': g2_zero(liouvillian, state),
                'tail_mass': state.tail_mass,
                'residual': state.residual,
                'notes': list(state.notes),
            }
            if with_g2:
                horizon = t_max if t_max is not None else 20.0 / params.Gamma
                correlation, timed = g2_and_mandel(liouvillian, state, horizon, n_steps)
                result.update({'g2': correlation, 'F_mandel_time': timed.fano})
            return result
        except SimulationError as e:
            logger.error(f'Error in master-equation solve: {str(e)}')
            return {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
