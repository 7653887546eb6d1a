"""
Wigner Solver

Stage turning a stationary oscillator state (phonon distribution or reduced
density matrix) into a Wigner grid and its negativity.
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from config.settings import Settings
from tools.errors import SimulationError
from tools.wigner_tools import matching_resolution, negativity, occupied_extent, wigner_from_dm, wigner_from_pn

logger = logging.getLogger(__name__)


class WignerSolver:
    """Phase-space reconstruction and negativity for one stationary state."""

    def __init__(self, settings: Settings):
        self.settings = settings

    def _grid_shape(self, populations: np.ndarray, extent: Optional[float], resolution: Optional[int]):
        if extent is None:
            extent = occupied_extent(populations, default=self.settings.wigner_extent)
        if resolution is None:
            resolution = matching_resolution(extent, self.settings.wigner_extent, self.settings.wigner_resolution)
        return extent, resolution

    def process(self, P_n: Optional[np.ndarray] = None, rho_phonon: Optional[np.ndarray] = None,
                extent: Optional[float] = None, resolution: Optional[int] = None) -> Dict[str, Any]:
        """
        Build the Wigner grid and evaluate eta.

        Args:
            P_n: Phonon distribution (secular path)
            rho_phonon: Reduced oscillator density matrix (full master-equation path)
            extent: Grid half-width; defaults to covering the occupied levels
            resolution: Points per axis

        Returns:
            Dictionary with status, the grid, eta and its error estimate
        """
        if (P_n is None) == (rho_phonon is None):
            return {'status': 'error', 'message': 'exactly one of P_n or rho_phonon is required',
                    'error_type': 'ValueError'}
        try:
            if P_n is not None:
                logger.info('Step 1: Wigner grid from the phonon distribution')
                populations = np.asarray(P_n, dtype=float)
                grid = wigner_from_pn(populations, *self._grid_shape(populations, extent, resolution))
            else:
                logger.info('Step 1: Wigner grid from the reduced density matrix')
                populations = np.diag(np.asarray(rho_phonon)).real
                grid = wigner_from_dm(rho_phonon, *self._grid_shape(populations, extent, resolution))

            logger.info('Step 2: Negativity')
            eta, eta_error = negativity(grid)
            logger.info(f'eta = {eta:.5f} (+/- {eta_error:.1e}) on a {grid.resolution}^2 grid, extent {grid.extent:g}')
            return {
                'status': 'success',
                'grid': grid,
                'eta': eta,
                'eta_error': eta_error,
                'normalization': grid.normalization,
                'max_abs_W': grid.max_abs,
            }
        except (SimulationError, ValueError) as e:
            logger.error(f'Error in Wigner reconstruction: {str(e)}')
            return {'status': 'error', 'message': str(e), 'error_type': type(e).__name__}
