"""
Cavity Solver

Driven optical cavity with radiation-pressure coupling to the oscillator,
in the polaron frame and rotating at the drive. With a strong Kerr shift the
cavity is blockaded to 0 or 1 photon and the model maps onto the emitter
problem: photon number 0/1 plays ground/excited, kappa plays Gamma and the
photon flip displaces the oscillator by g_O (single, not doubled).
"""

import logging
from typing import Any, Dict, Optional

import numpy as np
import qutip

from config.params import CavityParams, SystemParams
from config.settings import Settings
from solvers.lindblad_solver import displacement, g2_zero, mandel_fano_resolvent
from solvers.steady_state_solver import PauliSolution, solve_pauli
from tools.dressed_rate_tools import RateMatrix, build_doublets, build_rate_matrix
from tools.errors import BlockadeViolation, SimulationError
from tools.franck_condon_tools import bose_occupation, build_fc_table, fc_table
from tools.liouvillian_tools import (
    DensityMatrixState,
    Liouvillian,
    check_dimension,
    collapse_list,
    lindblad_superoperator,
    stationary_dm,
)

logger = logging.getLogger(__name__)

PHOTON_LEVELS = 3
BLOCKADE_LIMIT = 1e-3
AGREEMENT_FLOOR = 1e-3


def cavity_to_system(params: CavityParams) -> SystemParams:
    """
    Emitter parameters reproducing the cavity doublets.

    The cavity coupling Omega <1,n|a^+ D|0,n-1> enters the splitting as
    sqrt(eps^2 + 4 (Omega W)^2), so the emitter drive is 2 Omega.
    """
    return SystemParams(
        g0=params.g_O,
        Gamma=params.kappa,
        gamma=params.gamma,
        gamma_phi=0.0,
        epsilon=params.epsilon,
        Omega=2.0 * params.Omega,
        kT=params.kT,
        n_max=params.n_max,
        fc_displacement_multiplier=1.0,
        jump_displacement_multiplier=1.0,
        tail_tol=params.tail_tol,
    )


def cavity_rate_matrix(params: CavityParams) -> RateMatrix:
    """Pauli generator of the blockaded cavity over the 0/1-photon doublets."""
    system = cavity_to_system(params)
    fc = build_fc_table(system)
    basis = build_doublets(system, fc)
    return build_rate_matrix(system, basis, fc)


def secular_ratio(params: CavityParams) -> float:
    """max_n sqrt(eps^2 + 4 (Omega W_{n,n-1})^2) / min(kappa, gamma)."""
    table = fc_table(params.g_O, params.n_max, params.tail_tol)
    n = np.arange(1, params.n_max + 1)
    splitting = np.sqrt(params.epsilon ** 2 + 4.0 * (params.Omega * table.entries[n, n - 1]) ** 2)
    slowest = min(params.kappa, params.gamma)
    return float('inf') if slowest == 0 else float(splitting.max() / slowest)


def cavity_liouvillian(params: CavityParams, settings: Optional[Settings] = None) -> Liouvillian:
    """
    H = -delta a^+a - K (a^+a)^2 + b^+b + Omega (a^+ D(g_O) + h.c.), delta = omega_m - K + epsilon,
    with kappa D(a D(-g_O)), gamma (n_B+1) D(b) and gamma n_B D(b^+); photons truncated at 2.
    """
    settings = settings or Settings()
    levels = params.n_max + 1
    check_dimension(PHOTON_LEVELS * levels, settings.max_hilbert_dim)

    photon = qutip.destroy(PHOTON_LEVELS)
    photon_number = qutip.num(PHOTON_LEVELS)
    b = qutip.tensor(qutip.qeye(PHOTON_LEVELS), qutip.destroy(levels))
    drive = displacement(params.g_O, levels, settings.fc_drop_tol)

    detuning = 1.0 - params.kerr + params.epsilon
    coupling = qutip.tensor(photon.dag(), drive)
    hamiltonian = (qutip.tensor(-detuning * photon_number - params.kerr * photon_number * photon_number,
                                qutip.qeye(levels))
                   + b.dag() * b
                   + params.Omega * (coupling + coupling.dag()))

    n_b = bose_occupation(params.kT)
    jump = qutip.tensor(photon, displacement(-params.g_O, levels, settings.fc_drop_tol))
    collapse = collapse_list([
        (params.kappa, jump),
        (params.gamma * (n_b + 1.0), b),
        (params.gamma * n_b, b.dag()),
    ])
    return Liouvillian(generator=lindblad_superoperator(hamiltonian, collapse), hamiltonian=hamiltonian,
                       jump=jump, jump_rate=params.kappa, emitter_levels=PHOTON_LEVELS, phonon_levels=levels)


def cavity_stationary(params: CavityParams, settings: Optional[Settings] = None,
                      liouvillian: Optional[Liouvillian] = None) -> DensityMatrixState:
    """Stationary density matrix of the cavity model with the blockade check."""
    settings = settings or Settings()
    liouvillian = liouvillian or cavity_liouvillian(params, settings)
    state = stationary_dm(liouvillian, method=settings.lindblad_method,
                          tail_mass_limit=settings.tail_mass_limit)
    two_photons = float(state.emitter_populations[2])
    if two_photons >= BLOCKADE_LIMIT:
        raise BlockadeViolation(f'P(2 photons) = {two_photons:.3e} >= {BLOCKADE_LIMIT:g}; '
                                'the 0/1-photon mapping does not hold')
    return state


def pn_agreement(pauli: np.ndarray, full: np.ndarray, floor: float = AGREEMENT_FLOOR) -> float:
    """Largest relative deviation of two phonon distributions where the reference exceeds floor."""
    size = min(len(pauli), len(full))
    reference, other = np.asarray(full[:size]), np.asarray(pauli[:size])
    mask = reference > floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(other[mask] - reference[mask]) / reference[mask]))


class CavitySolver:
    """Stage solving the cavity model by the Pauli map and/or the full master equation."""

    def __init__(self, settings: Settings):
        self.settings = settings

    def process(self, params: CavityParams, full: bool = True) -> Dict[str, Any]:
        """
        Solve one cavity point.

        Args:
            params: CavityParams of the point
            full: Also solve the three-photon-level master equation

        Returns:
            Dictionary with status, the Pauli solution, optional density-matrix
            state, the secular ratio and the P_n agreement
        """
        logger.info(f'Cavity point g_O={params.g_O:g}, Omega={params.Omega:g}, K={params.kerr:.4g}')
        try:
            logger.info('Step 1: Pauli map')
            solution: PauliSolution = solve_pauli(cavity_to_system(params), self.settings)
            ratio = secular_ratio(params)
            side = 'above' if ratio > 1 else 'below'
            notes = list(solution.rates.notes + solution.state.notes)
            notes.append(f'doublet splitting / min(kappa, gamma) = {ratio:.3g} ({side} 1)')
            logger.info(notes[-1])
            result = {
                'status': 'success',
                'solution': solution,
                'P_n': solution.state.phonon_marginal,
                'n_bar': solution.state.n_bar,
                'I_bar': solution.state.flux_total,
                'secular_ratio': ratio,
                'tail_mass': solution.state.tail_mass,
                'residual': solution.state.residual,
                'notes': notes,
            }
            if full:
                logger.info('Step 2: Full master equation')
                liouvillian = cavity_liouvillian(params, self.settings)
                state = cavity_stationary(params, self.settings, liouvillian)
                mandel = mandel_fano_resolvent(liouvillian, state)
                result.update({
                    'liouvillian': liouvillian,
                    'state': state,
                    'F_mandel': mandel.fano,
                    'I_bar_full': mandel.flux,
                    'g2_0': g2_zero(liouvillian, state),
                    'P_n_full': state.phonon_marginal,
                    'n_bar_full': state.n_bar,
                    'photon_populations': state.emitter_populations,
                    'pn_deviation': pn_agreement(solution.state.phonon_marginal, state.phonon_marginal),
                })
                result['notes'].extend(state.notes)
            return result
        except SimulationError as e:
            logger.error(f'Error in cavity solve: {str(e)}')
            return {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
