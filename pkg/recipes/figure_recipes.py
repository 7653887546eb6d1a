"""
Figure Recipes

Canned parameter sets and reproduction runs for the published figures. Each
recipe writes its data files under <out>/<figure>/ together with a
summary.json listing the acceptance checks (measured value, expected value,
pass flag). The summary is always written, with status 'error' when a
computation failed.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from config.params import CavityParams, SystemParams, load_sweep_spec
from solvers.steady_state_solver import (
    analytic_nbar,
    boltzmann_distribution,
    kolmogorov_distance,
    pointwise_deviation,
    thermal_temperature,
)
from tools.franck_condon_tools import bose_occupation
from tools.output_tools import write_json, write_pn, write_wigner
from tools.wigner_tools import negativity, wigner_from_pn

logger = logging.getLogger(__name__)

_FIG2 = {'g0': 0.1, 'Gamma': 0.01, 'gamma': 1e-4, 'gamma_phi': 1e-4, 'epsilon': 0.01, 'Omega': 1e-3,
         'kT': 1.0, 'n_max': 150}
_FIG3 = {'g0': 0.58, 'Gamma': 0.01, 'gamma': 1e-4, 'gamma_phi': 1e-4, 'epsilon': 0.05, 'Omega': 0.16,
         'kT': 1.0, 'n_max': 150}

FIGURE_PARAMS: Dict[str, Dict[str, Any]] = {
    'fig2a': dict(_FIG2),
    'fig2b': dict(_FIG2),
    'fig3': dict(_FIG3),
    'fig4': dict(_FIG3),
    'figS1': dict(_FIG2),
    'figS2': {'g0': 0.5, 'Gamma': 0.1, 'gamma': 1e-4, 'gamma_phi': 1e-4, 'epsilon': 0.05, 'Omega': 0.05,
              'kT': 1.0, 'n_max': 60},
    'figS3': {'g_O': 0.8, 'Omega': 0.1, 'kappa': 0.01, 'gamma': 1e-4, 'epsilon': 0.05, 'kT': 1.0, 'n_max': 80},
}
FIGURES = tuple(FIGURE_PARAMS)

FIG2A_DRIVES = (1e-3, 5e-3, 1e-2, 2e-2)
ETA_TOLERANCE = 0.003
FANO_PEAK_MIN = 5.0


class RecipeFailure(Exception):
    """A recipe computation failed; the bundle is written with status 'error'."""


def check(name: str, measured: Optional[float], expected: str, passed: bool) -> Dict[str, Any]:
    return {'name': name, 'measured': measured, 'expected': expected, 'pass': bool(passed)}


def _eta_check(name: str, eta: float, target: float) -> Dict[str, Any]:
    return check(name, eta, f'{target} +/- {ETA_TOLERANCE}', abs(eta - target) <= ETA_TOLERANCE)


def _point(simulator, params, quantities, solver: str = 'pauli') -> Dict[str, Any]:
    result = simulator.evaluate(params, quantities, solver)
    if result['row'].get('error'):
        raise RecipeFailure(result['row']['error'])
    return result


def _require(result: Dict[str, Any]) -> Dict[str, Any]:
    if result.get('status') != 'success':
        raise RecipeFailure(f"{result.get('error_type', 'Error')}: {result.get('message')}")
    return result


def _thermal_limit(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    params = SystemParams(**FIGURE_PARAMS['fig2a'])
    checks = []
    for omega in FIG2A_DRIVES:
        result = _point(simulator, params.updated(Omega=omega), ('Pn', 'nbar'))
        path = write_pn(result['P_n'], out / f'pn_Omega_{omega:g}.csv', simulator.settings)
        files.append(path.name)
        if omega == FIG2A_DRIVES[0]:
            populations = result['P_n']
            reference = boltzmann_distribution(params.kT, params.n_max)
            files.append(write_pn(reference, out / 'pn_boltzmann.csv', simulator.settings).name)
            distance = kolmogorov_distance(populations, reference)
            matched = boltzmann_distribution(thermal_temperature(result['row']['n_bar']), params.n_max)
            bath = pointwise_deviation(populations, reference)
            shape = pointwise_deviation(populations, matched)
            checks.append(check('kolmogorov_distance_to_boltzmann', distance, '< 0.02', distance < 0.02))
            checks.append(check('max_pointwise_deviation_from_thermal_at_n_bar', shape, '< 0.02', shape < 0.02))
            # the drive heats n_bar above n_B by Gamma A (n_bar + 1) / gamma, so this one is only reported
            checks.append(check('max_pointwise_deviation_from_bath_boltzmann', bath, 'reported', True))
    return checks


def _fano_transition(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    spec = load_sweep_spec({
        'variable': 'Omega',
        'range': {'start': 2e-3, 'stop': 4e-2, 'count': 25, 'spacing': 'log'},
        'quantities': ['nbar', 'flux', 'fano', 'proxy'],
    }, FIGURE_PARAMS['fig2b'])
    sweep = simulator.run_sweep(spec, out)
    files.append('sweep.csv')
    table = sweep['table']
    if table['F'].isna().all():
        raise RecipeFailure('no sweep point produced a Fano factor')

    omega_star = analytic_nbar(spec.system).omega_star
    fano = table['F'].to_numpy(dtype=float)
    proxy = table['proxy'].to_numpy(dtype=float)
    drives = table['Omega'].to_numpy(dtype=float)
    peak = int(np.nanargmax(fano))
    location = max(drives[peak] / omega_star, omega_star / drives[peak])
    checks = [
        check('fano_peak_drive_over_omega_star', float(drives[peak] / omega_star), 'within a factor 2',
              location <= 2.0),
        check('fano_peak_value', float(fano[peak]), f'>= {FANO_PEAK_MIN:g}', fano[peak] >= FANO_PEAK_MIN),
        check('min_fano', float(np.nanmin(fano)), '>= 1', np.nanmin(fano) >= 1.0 - 1e-9),
    ]
    if np.isnan(proxy).all():
        checks.append(check('proxy_peak_index_offset', None, '<= 1', False))
    else:
        proxy_peak = int(np.nanargmax(proxy))
        checks.append(check('proxy_peak_index_offset', abs(proxy_peak - peak), '<= 1', abs(proxy_peak - peak) <= 1))
        # S_II and S_nn are both full-line zero-frequency spectra; the proxy overshoots F above threshold
        ratio = float(proxy[peak] / fano[peak]) if fano[peak] else None
        checks.append(check('proxy_over_fano_at_peak', ratio, 'in [1.5, 3.5]',
                            ratio is not None and 1.5 <= ratio <= 3.5))
    agreement = float(np.nanmax(table['fcs_rel_diff'].to_numpy(dtype=float)))
    checks.append(check('counting_methods_max_relative_difference', agreement, '<= 1e-6', agreement <= 1e-6))
    return checks


def _wigner_secular(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    params = SystemParams(**FIGURE_PARAMS['fig3'])
    result = _point(simulator, params, ('Pn', 'nbar', 'wigner'))
    grid, eta, eta_error = result['wigner']
    files.append(write_pn(result['P_n'], out / 'pn.csv', simulator.settings).name)
    files.append(write_wigner(grid, eta, eta_error, out / 'wigner.csv', simulator.settings).name)

    refined = wigner_from_pn(result['P_n'], extent=grid.extent, resolution=2 * (grid.resolution - 1) + 1)
    eta_fine, _ = negativity(refined)
    change = abs(eta_fine - eta) / eta if eta > 0 else None
    return [
        _eta_check('eta', eta, 0.013),
        check('eta_change_on_doubled_resolution', change, '< 0.05', change is not None and change < 0.05),
    ]


def _count_bands(flags: np.ndarray) -> int:
    """Number of maximal runs of True."""
    flags = np.asarray(flags, dtype=bool)
    return int(np.count_nonzero(flags[1:] & ~flags[:-1]) + int(flags[0])) if flags.size else 0


def _negativity_landscape(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    spec = load_sweep_spec({
        'variable': 'g0',
        'range': {'start': 0.2, 'stop': 0.9, 'count': 12},
        'variable2': 'Omega',
        'range2': {'start': 0.02, 'stop': 0.3, 'count': 12},
        'quantities': ['eta'],
    }, FIGURE_PARAMS['fig4'])
    sweep = simulator.run_sweep(spec, out)
    files.append('sweep.csv')
    landscape = sweep['table'].pivot(index='g0', columns='Omega', values='eta')
    if landscape.isna().all().all():
        raise RecipeFailure('no landscape point produced a negativity')
    peak = float(np.nanmax(landscape.to_numpy(dtype=float)))
    bands = _count_bands(landscape.max(axis=1).to_numpy(dtype=float) > 0.005)
    return [
        check('max_eta', peak, 'in [0.015, 0.03]', 0.015 <= peak <= 0.03),
        check('g0_bands_with_eta_above_0.005', bands, '>= 2', bands >= 2),
    ]


def _flux_identities(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    spec = load_sweep_spec({
        'variable': 'Omega',
        'range': {'start': 1e-3, 'stop': 8e-3, 'count': 10},
        'quantities': ['nbar', 'flux'],
    }, FIGURE_PARAMS['figS1'])
    sweep = simulator.run_sweep(spec, out)
    files.append('sweep.csv')
    table = sweep['table'].dropna(subset=['n_bar', 'I_bar'])
    if table.empty:
        raise RecipeFailure('no sweep point produced a flux')

    params = spec.system
    n_b = bose_occupation(params.kT, params.omega_m)
    flux = table['I_bar'].to_numpy(dtype=float)
    n_bar = table['n_bar'].to_numpy(dtype=float)
    drive_weight = (table['Omega'].to_numpy(dtype=float) * params.g0 / (params.epsilon * params.omega_m)) ** 2
    relaxation = params.gamma * (n_bar - n_b)
    bath = float(np.max(np.abs(flux - relaxation) / flux))
    # each photon moves 1 + lam^2 phonons on average, which is the whole gap of the line above
    source = float(np.max(np.abs(flux * (1.0 + params.fc_lambda ** 2) - relaxation) / relaxation))
    emission = np.abs(flux - params.Gamma * drive_weight * (n_bar + 1.0)) / flux
    return [
        check('flux_vs_bath_relaxation', bath, '< 0.05', bath < 0.05),
        check('emission_source_vs_bath_relaxation', source, '< 0.02', source < 0.02),
        # small-coupling form: misses the O(lam^2 n) Franck-Condon and O(A n) saturation corrections
        check('flux_vs_weak_coupling_emission_lowest_drive', float(emission[0]), '< 0.10', emission[0] < 0.10),
        check('flux_vs_weak_coupling_emission_max', float(emission.max()), 'reported', True),
    ]


def _beyond_secular(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    spec = load_sweep_spec({
        'variable': 'Omega',
        'range': {'start': 5e-3, 'stop': 1e-1, 'count': 8, 'spacing': 'log'},
        'quantities': ['nbar', 'fano'],
        'solver': 'lindblad',
        'system': {'g0': 0.1, 'n_max': 40},
    }, FIGURE_PARAMS['figS2'])
    sweep = simulator.run_sweep(spec, out / 'fano')
    files.append('fano/sweep.csv')
    fano = sweep['table']['F'].to_numpy(dtype=float)
    peak = float(np.nanmax(fano)) if not np.isnan(fano).all() else None

    params = SystemParams(**FIGURE_PARAMS['figS2'])
    result = _point(simulator, params, ('Pn', 'nbar', 'wigner'), solver='lindblad')
    grid, eta, eta_error = result['wigner']
    files.append(write_pn(result['P_n'], out / 'pn.csv', simulator.settings).name)
    files.append(write_wigner(grid, eta, eta_error, out / 'wigner.csv', simulator.settings).name)
    return [
        check('max_mandel_fano', peak, '> 1', peak is not None and peak > 1.0),
        _eta_check('eta', eta, 0.013),
    ]


def _cavity(simulator, out: Path, files: List[str]) -> List[Dict[str, Any]]:
    params = CavityParams(**FIGURE_PARAMS['figS3'])
    result = _require(simulator.cavity_solver.process(params, full=True))
    wigner = _require(simulator.wigner_solver.process(P_n=result['P_n']))
    files.append(write_pn(result['P_n'], out / 'pn_pauli.csv', simulator.settings).name)
    files.append(write_pn(result['P_n_full'], out / 'pn_full.csv', simulator.settings).name)
    files.append(write_wigner(wigner['grid'], wigner['eta'], wigner['eta_error'], out / 'wigner.csv',
                              simulator.settings).name)
    deviation = result['pn_deviation']
    two_photons = float(result['photon_populations'][2])
    return [
        _eta_check('eta', wigner['eta'], 0.0142),
        check('pauli_vs_master_equation_pn', deviation, '< 0.05 where P_n > 1e-3', deviation < 0.05),
        check('two_photon_population', two_photons, '< 1e-3', two_photons < 1e-3),
        check('secular_ratio', result['secular_ratio'], 'reported', True),
    ]


RECIPES: Dict[str, Callable[..., List[Dict[str, Any]]]] = {
    'fig2a': _thermal_limit,
    'fig2b': _fano_transition,
    'fig3': _wigner_secular,
    'fig4': _negativity_landscape,
    'figS1': _flux_identities,
    'figS2': _beyond_secular,
    'figS3': _cavity,
}


def reproduce(figure_id: str, simulator, out: Path) -> Dict[str, Any]:
    """
    Run one figure recipe.

    Args:
        figure_id: One of FIGURES
        simulator: SidebandSimulator providing the solver stages
        out: Root output directory; files go to out/<figure_id>/

    Returns:
        The summary written to out/<figure_id>/summary.json
    """
    if figure_id not in RECIPES:
        raise KeyError(f'unknown figure {figure_id!r}; choose from {", ".join(FIGURES)}')
    target = Path(out) / figure_id
    target.mkdir(parents=True, exist_ok=True)
    files: List[str] = []
    logger.info(f'Reproducing {figure_id} into {target}')
    try:
        checks = RECIPES[figure_id](simulator, target, files)
        summary = {'figure': figure_id, 'status': 'success', 'checks': checks,
                   'pass': all(item['pass'] for item in checks)}
    except Exception as e:
        logger.error(f'Error in {figure_id} recipe: {str(e)}')
        summary = {'figure': figure_id, 'status': 'error', 'message': str(e), 'checks': [], 'pass': False}
    summary['files'] = files
    write_json(summary, target / 'summary.json')
    for item in summary['checks']:
        logger.info(f"{figure_id} {item['name']}: {item['measured']} (expected {item['expected']}) "
                    f"{'pass' if item['pass'] else 'FAIL'}")
    return summary
