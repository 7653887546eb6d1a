"""
Sideband Phonon Lab

Simulation of a two-level emitter coupled to a mechanical oscillator and
driven on the first blue sideband, where each emitted photon leaves a phonon
behind and the oscillator is pumped towards a limit cycle.

The simulator chains the solver stages:
1. Steady state: dressed-state Pauli equation, phonon distribution, photon flux
2. Counting statistics: photon Fano factor by two independent methods
3. Phonon noise: S_nn(0) and the Fano-factor proxy
4. Master equation: full Lindblad solution, g2 and the Mandel factor
5. Wigner: phase-space reconstruction and negativity
6. Cavity: the optomechanical-cavity variant

and exposes them through a command-line interface with parameter sweeps and
figure-reproduction recipes.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.params import (
    CavityParams,
    SweepSpec,
    SystemParams,
    load_cavity_params,
    load_sweep_spec,
    load_system_params,
    read_config,
)
from config.settings import Settings
from recipes.figure_recipes import FIGURE_PARAMS, FIGURES, reproduce
from solvers.cavity_solver import CavitySolver
from solvers.counting_solver import CountingSolver
from solvers.lindblad_solver import LindbladSolver
from solvers.phonon_noise_solver import PhononNoiseSolver, number_observable, snn_spectrum, variance_sum_rule
from solvers.steady_state_solver import SteadyStateSolver
from solvers.wigner_solver import WignerSolver
from tools.dressed_rate_tools import dump_rate_triplets
from tools.errors import ConfigError, SimulationError
from tools.output_tools import to_jsonable, write_g2, write_json, write_pn, write_table, write_wigner

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_POINT_ERROR = 2

QUANTITY_COLUMNS = {
    'pauli': {
        'Pn': (),
        'nbar': ('n_bar',),
        'flux': ('I_bar',),
        'fano': ('F', 'F_eigen', 'fcs_rel_diff'),
        'snn': ('S_nn0', 'S_nn0_th'),
        'proxy': ('S_nn0', 'S_nn0_th', 'proxy'),
        'wigner': ('eta', 'eta_error'),
        'eta': ('eta', 'eta_error'),
    },
    'lindblad': {
        'Pn': (),
        'nbar': ('n_bar',),
        'flux': ('I_bar',),
        'fano': ('F',),
        'g2': ('F_mandel', 'g2_0'),
        'wigner': ('eta', 'eta_error'),
        'eta': ('eta', 'eta_error'),
    },
}
DIAGNOSTIC_COLUMNS = ('tail_mass', 'residual', 'error')
INTERNAL_KEYS = frozenset({'solution', 'state', 'liouvillian', 'grid', 'g2'})
NOISE_FREQUENCIES = np.geomspace(1e-6, 1.0, 61)

Params = Union[SystemParams, CavityParams]


def quantity_columns(quantities: Iterable[str], solver: str) -> List[str]:
    """Result columns of the requested quantities, in a fixed order."""
    columns: List[str] = []
    table = QUANTITY_COLUMNS[solver]
    for quantity in table:
        if quantity in quantities:
            columns.extend(c for c in table[quantity] if c not in columns)
    return columns


def public(result: Dict[str, Any]) -> Dict[str, Any]:
    """Stage result without the heavy internal objects."""
    return {key: value for key, value in result.items() if key not in INTERNAL_KEYS}


def _require(result: Dict[str, Any]) -> Dict[str, Any]:
    if result.get('status') != 'success':
        raise SimulationError(f"{result.get('error_type', 'Error')}: {result.get('message')}")
    return result


def _nan_if_none(value: Optional[float]) -> float:
    return float('nan') if value is None else float(value)


class SidebandSimulator:
    """Main orchestrator for the sideband-cooling-in-reverse simulations."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.steady_solver = SteadyStateSolver(self.settings)
        self.counting_solver = CountingSolver(self.settings)
        self.noise_solver = PhononNoiseSolver(self.settings)
        self.lindblad_solver = LindbladSolver(self.settings)
        self.wigner_solver = WignerSolver(self.settings)
        self.cavity_solver = CavitySolver(self.settings)

    # ------------------------------------------------------------------ points

    def evaluate(self, params: Params, quantities: Sequence[str], solver: str = 'pauli') -> Dict[str, Any]:
        """
        Evaluate one parameter point.

        Args:
            params: SystemParams or CavityParams
            quantities: Requested quantities (see SweepSpec)
            solver: 'pauli' or 'lindblad'

        Returns:
            Dictionary with the result 'row' and optional 'P_n' / 'wigner' artifacts
        """
        requested = set(quantities)
        row: Dict[str, Any] = {'tail_mass': float('nan'), 'residual': float('nan'), 'error': ''}
        artifacts: Dict[str, Any] = {}
        try:
            if solver == 'pauli':
                self._evaluate_pauli(params, requested, row, artifacts)
            elif solver == 'lindblad':
                self._evaluate_lindblad(params, requested, row, artifacts)
            else:
                raise ValueError(f'unknown solver {solver!r}')
        except SimulationError as e:
            logger.error(f'Error in point evaluation: {str(e)}')
            row['error'] = str(e)
        except Exception as e:
            logger.error(f'Error in point evaluation: {str(e)}')
            row['error'] = f'{type(e).__name__}: {str(e)}'
        return {'row': row, **artifacts}

    def _phase_space(self, requested, row, artifacts, **source) -> None:
        if not requested & {'eta', 'wigner'}:
            return
        wigner = _require(self.wigner_solver.process(**source))
        row.update(eta=wigner['eta'], eta_error=wigner['eta_error'])
        if 'wigner' in requested:
            artifacts['wigner'] = (wigner['grid'], wigner['eta'], wigner['eta_error'])

    def _evaluate_pauli(self, params: Params, requested, row, artifacts) -> None:
        if isinstance(params, CavityParams):
            base = _require(self.cavity_solver.process(params, full=False))
        else:
            base = _require(self.steady_solver.process(params))
        solution = base['solution']
        state = solution.state
        row.update(n_bar=state.n_bar, I_bar=state.flux_total, tail_mass=state.tail_mass, residual=state.residual)

        if 'fano' in requested:
            counting = _require(self.counting_solver.process(solution.rates, state))
            row.update(F=counting['pseudoinverse'].fano, F_eigen=counting['eigen'].fano,
                       fcs_rel_diff=counting['relative_difference'])
        if requested & {'snn', 'proxy'}:
            noise = _require(self.noise_solver.process(solution))
            row.update(S_nn0=noise['S_nn0'], S_nn0_th=noise['S_nn0_th'], proxy=_nan_if_none(noise['proxy']))
        if 'Pn' in requested:
            artifacts['P_n'] = state.phonon_marginal
        self._phase_space(requested, row, artifacts, P_n=state.phonon_marginal)

    def _evaluate_lindblad(self, params: Params, requested, row, artifacts) -> None:
        if isinstance(params, CavityParams):
            base = _require(self.cavity_solver.process(params, full=True))
            flux = base['I_bar_full']
        else:
            base = _require(self.lindblad_solver.process(params))
            flux = base['I_bar']
        state = base['state']
        row.update(n_bar=state.n_bar, I_bar=flux, F=base['F_mandel'], F_mandel=base['F_mandel'],
                   g2_0=base['g2_0'], tail_mass=state.tail_mass, residual=state.residual)
        if 'Pn' in requested:
            artifacts['P_n'] = state.phonon_marginal
        self._phase_space(requested, row, artifacts, rho_phonon=state.rho_phonon)

    # ------------------------------------------------------------------ sweeps

    def run_sweep(self, spec: SweepSpec, out: Optional[Path] = None, workers: Optional[int] = None) -> Dict[str, Any]:
        """
        Evaluate every sweep point and collect one row per point in sweep order.

        Args:
            spec: Validated sweep specification
            out: Directory for sweep.csv and per-point files (nothing written if None)
            workers: Process count (default from settings; 1 runs in-process)

        Returns:
            Dictionary with status, the result table and the error count
        """
        workers = max(1, int(workers or self.settings.workers))
        points = spec.points()
        logger.info(f'Sweep over {len(points)} points ({spec.solver} solver, {workers} worker(s))')
        tasks = [(self.settings, spec, point) for point in points]
        if workers == 1:
            results = [evaluate_point(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(evaluate_point, tasks))

        variables = [spec.variable] + ([spec.variable2] if spec.variable2 else [])
        columns = ['index'] + variables + quantity_columns(spec.quantities, spec.solver) + list(DIAGNOSTIC_COLUMNS)
        rows = [{'index': index, **point, **result['row']} for index, (point, result) in enumerate(zip(points, results))]
        table = pd.DataFrame(rows).reindex(columns=columns)
        table['error'] = table['error'].fillna('')
        errors = int((table['error'] != '').sum())

        if out is not None:
            out = Path(out)
            write_table(table, out / 'sweep.csv', self.settings)
            for index, result in enumerate(results):
                if result.get('P_n') is not None:
                    write_pn(result['P_n'], out / f'pn_{index}.csv', self.settings)
                if result.get('wigner') is not None:
                    grid, eta, eta_error = result['wigner']
                    write_wigner(grid, eta, eta_error, out / f'wigner_{index}.csv', self.settings)
        if errors:
            logger.warning(f'{errors} of {len(points)} sweep points failed')
        return {'status': 'success' if errors == 0 else 'error', 'table': table, 'errors': errors}

    # ---------------------------------------------------------- single points

    def run_steady(self, params: SystemParams, out: Path) -> Dict[str, Any]:
        """Stationary Pauli solution with P_n, rate triplets and a summary."""
        result = self.steady_solver.process(params)
        if result['status'] == 'success':
            solution = result['solution']
            write_pn(solution.state.phonon_marginal, out / 'pn.csv', self.settings)
            dump_rate_triplets(solution.rates, out / 'rates.csv')
        return self._finish(result, out)

    def run_fcs(self, params: SystemParams, out: Path) -> Dict[str, Any]:
        """Photon counting statistics of the stationary Pauli dynamics."""
        steady = self.steady_solver.process(params)
        if steady['status'] != 'success':
            return self._finish(steady, out)
        solution = steady['solution']
        counting = self.counting_solver.process(solution.rates, solution.state)
        if counting['status'] == 'success':
            counting = {
                'status': 'success',
                'eigen': counting['eigen'].to_dict(),
                'pseudoinverse': counting['pseudoinverse'].to_dict(),
                'relative_difference': counting['relative_difference'],
                'n_bar': solution.state.n_bar,
            }
        return self._finish(counting, out)

    def run_noise(self, params: SystemParams, out: Path) -> Dict[str, Any]:
        """Phonon noise at zero frequency, its spectrum and the Fano proxy."""
        steady = self.steady_solver.process(params)
        if steady['status'] != 'success':
            return self._finish(steady, out)
        solution = steady['solution']
        noise = self.noise_solver.process(solution)
        if noise['status'] == 'success':
            try:
                observable = number_observable(solution.basis)
                spectrum = snn_spectrum(solution.rates, observable, NOISE_FREQUENCIES, solution.state)
                write_table(pd.DataFrame({'omega': NOISE_FREQUENCIES, 'S_nn': spectrum}), out / 'snn.csv',
                            self.settings)
                noise['sum_rule'] = variance_sum_rule(solution.rates, observable, solution.state)
            except SimulationError as e:
                logger.error(f'Error in noise spectrum: {str(e)}')
                noise = {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
        return self._finish(noise, out)

    def run_lindblad(self, params: SystemParams, out: Path, with_g2: bool = False,
                     t_max: Optional[float] = None, n_steps: int = 2000) -> Dict[str, Any]:
        """Full master-equation solution, optionally with g2(t) on a time grid."""
        result = self.lindblad_solver.process(params, with_g2=with_g2, t_max=t_max, n_steps=n_steps)
        if result['status'] == 'success':
            write_pn(result['state'].phonon_marginal, out / 'pn.csv', self.settings)
            if with_g2:
                correlation = result['g2']
                write_g2(correlation.times, correlation.g2, out / 'g2.csv', self.settings)
        return self._finish(result, out)

    def run_wigner(self, params: SystemParams, out: Path, from_dm: bool = False) -> Dict[str, Any]:
        """Wigner grid and negativity from the Pauli P_n or the master-equation density matrix."""
        if from_dm:
            base = self.lindblad_solver.process(params)
            source = {'rho_phonon': base['state'].rho_phonon} if base['status'] == 'success' else None
        else:
            base = self.steady_solver.process(params)
            source = {'P_n': base['solution'].state.phonon_marginal} if base['status'] == 'success' else None
        if source is None:
            return self._finish(base, out)
        result = self.wigner_solver.process(**source)
        if result['status'] == 'success':
            write_wigner(result['grid'], result['eta'], result['eta_error'], out / 'wigner.csv', self.settings)
        return self._finish(result, out)

    def run_cavity(self, params: CavityParams, out: Path, full: bool = True) -> Dict[str, Any]:
        """Cavity variant: Pauli map, optional master equation and the negativity of P_n."""
        result = self.cavity_solver.process(params, full=full)
        if result['status'] == 'success':
            write_pn(result['P_n'], out / 'pn.csv', self.settings)
            if full:
                write_pn(result['P_n_full'], out / 'pn_full.csv', self.settings)
            wigner = self.wigner_solver.process(P_n=result['P_n'])
            if wigner['status'] == 'success':
                result.update(eta=wigner['eta'], eta_error=wigner['eta_error'])
                write_wigner(wigner['grid'], wigner['eta'], wigner['eta_error'], out / 'wigner.csv', self.settings)
            else:
                result = wigner
        return self._finish(result, out)

    def reproduce(self, figure_id: str, out: Path) -> Dict[str, Any]:
        """Run a canned figure recipe and write its summary bundle."""
        return reproduce(figure_id, self, out)

    def _finish(self, result: Dict[str, Any], out: Path) -> Dict[str, Any]:
        summary = public(result)
        write_json(summary, Path(out) / 'summary.json')
        return summary


def evaluate_point(task: Tuple[Settings, SweepSpec, Dict[str, float]]) -> Dict[str, Any]:
    """Worker entry point: one sweep point, errors captured in the row."""
    settings, spec, point = task
    try:
        params = spec.point_params(point)
    except ValueError as e:
        return {'row': {'error': f'ConfigError: {str(e)}'}}
    return SidebandSimulator(settings).evaluate(params, spec.quantities, spec.solver)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON parameter document')
    common.add_argument('--out', help='Output directory (default: SIDEBAND_OUTPUT_DIR or ./output)')
    common.add_argument('--workers', type=int, help='Worker processes for sweeps')
    common.add_argument('--seed-figure', choices=sorted(FIGURE_PARAMS), help='Start from a figure parameter set')

    parser = argparse.ArgumentParser(prog='sideband-phonon-lab',
                                     description='Blue-sideband driven emitter and mechanical oscillator simulations')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('steady', parents=[common], help='Stationary Pauli solution')
    commands.add_parser('fcs', parents=[common], help='Photon counting statistics')
    commands.add_parser('noise', parents=[common], help='Phonon noise and Fano proxy')
    lindblad = commands.add_parser('lindblad', parents=[common], help='Full master equation')
    lindblad.add_argument('--g2', action='store_true', help='Propagate g2(t) on a time grid')
    lindblad.add_argument('--t-max', type=float, help='Last delay of the g2 grid (default 20/Gamma)')
    lindblad.add_argument('--n-steps', type=int, default=2000, help='Intervals of the g2 grid')
    wigner = commands.add_parser('wigner', parents=[common], help='Wigner function and negativity')
    wigner.add_argument('--from-dm', action='store_true', help='Use the master-equation density matrix')
    cavity = commands.add_parser('cavity', parents=[common], help='Optomechanical cavity variant')
    cavity.add_argument('--pauli-only', action='store_true', help='Skip the master equation')
    commands.add_parser('sweep', parents=[common], help='Parameter sweep from a SweepSpec document')
    figure = commands.add_parser('reproduce', parents=[common], help='Figure reproduction recipe')
    figure.add_argument('figure', choices=FIGURES)
    return parser


def run_command(args: argparse.Namespace, simulator: SidebandSimulator) -> Dict[str, Any]:
    """Dispatch a parsed command; raises ConfigError for bad documents."""
    document = read_config(args.config)
    seed = FIGURE_PARAMS.get(args.seed_figure) if args.seed_figure else None
    out = Path(args.out) if args.out else simulator.settings.output_path
    target = out / args.command

    if args.command == 'sweep':
        result = simulator.run_sweep(load_sweep_spec(document, seed), target, args.workers)
        return {'status': result['status'], 'errors': result['errors'], 'rows': len(result['table'])}
    if args.command == 'reproduce':
        return simulator.reproduce(args.figure, out)
    if args.command == 'cavity':
        return simulator.run_cavity(load_cavity_params(document, seed), target, full=not args.pauli_only)

    params = load_system_params(document, seed)
    if args.command == 'steady':
        return simulator.run_steady(params, target)
    if args.command == 'fcs':
        return simulator.run_fcs(params, target)
    if args.command == 'noise':
        return simulator.run_noise(params, target)
    if args.command == 'lindblad':
        return simulator.run_lindblad(params, target, with_g2=args.g2, t_max=args.t_max, n_steps=args.n_steps)
    return simulator.run_wigner(params, target, from_dm=args.from_dm)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    settings = Settings()
    logging.basicConfig(level=settings.log_level, format='%(asctime)s %(name)s %(levelname)s %(message)s')
    if args.workers:
        settings.workers = max(1, args.workers)

    simulator = SidebandSimulator(settings)
    try:
        summary = run_command(args, simulator)
    except ConfigError as e:
        logger.error(f'Configuration error: {str(e)}')
        return EXIT_CONFIG_ERROR

    print(json.dumps(to_jsonable(summary), indent=2))
    return EXIT_OK if summary.get('status') == 'success' else EXIT_POINT_ERROR


if __name__ == '__main__':
    sys.exit(main())
