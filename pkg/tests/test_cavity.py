"""
Tests for the optomechanical cavity variant.
"""

import numpy as np
import pytest
from unittest.mock import Mock, patch

from config.params import CavityParams
from config.settings import Settings
from solvers.cavity_solver import (
    PHOTON_LEVELS,
    CavitySolver,
    cavity_liouvillian,
    cavity_rate_matrix,
    cavity_stationary,
    cavity_to_system,
    pn_agreement,
    secular_ratio,
)
from solvers.steady_state_solver import boltzmann_distribution
from tools.dressed_rate_tools import build_doublets
from tools.errors import BlockadeViolation, DimensionError
from tools.franck_condon_tools import build_fc_table, fc_table


class TestCavityMapping:
    """Test cases for the blockaded-cavity to emitter mapping."""

    def setup_method(self):
        """Set up test fixtures."""
        self.params = CavityParams(g_O=0.4, Omega=0.002, n_max=20)

    def test_mapped_fields(self):
        """Test that kappa plays Gamma and the displacement is not doubled."""
        system = cavity_to_system(self.params)
        assert system.g0 == 0.4
        assert system.Gamma == self.params.kappa
        assert system.Omega == pytest.approx(0.004)
        assert system.gamma_phi == 0.0
        assert system.fc_lambda == pytest.approx(0.4)
        assert system.jump_lambda == pytest.approx(0.4)

    def test_doublet_splitting(self):
        """Test Omega_n = sqrt(epsilon^2 + 4 (Omega W_{n,n-1})^2)."""
        system = cavity_to_system(self.params)
        basis = build_doublets(system, build_fc_table(system))
        table = fc_table(self.params.g_O, self.params.n_max)
        n = np.arange(1, self.params.n_max + 1)
        expected = np.sqrt(self.params.epsilon ** 2 + 4.0 * (self.params.Omega * table.entries[n, n - 1]) ** 2)
        np.testing.assert_allclose(basis.rabi[1:], expected, rtol=1e-12)

    def test_rate_matrix(self):
        """Test the cavity generator conserves probability."""
        rates = cavity_rate_matrix(self.params)
        assert rates.dim == 2 * self.params.n_max + 1
        np.testing.assert_allclose(rates.generator.sum(axis=0), 0.0, atol=1e-15)

    def test_secular_ratio(self):
        """Test the splitting over the slowest rate and the gamma = 0 limit."""
        ratio = secular_ratio(self.params)
        assert ratio > 1
        assert ratio == pytest.approx(cavity_rate_matrix(self.params).basis.rabi[1:].max() / self.params.gamma)
        assert secular_ratio(self.params.updated(gamma=0.0)) == float('inf')

    def test_kerr_shift(self):
        """Test K = g_O^2 and the blockade warning."""
        assert self.params.kerr == pytest.approx(0.16)
        assert CavityParams(g_O=0.1).validity_warnings


class TestCavityMasterEquation:
    """Test cases for the three-photon-level master equation."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = Settings()
        self.params = CavityParams(g_O=0.4, Omega=0.002, n_max=20)

    def test_liouvillian_dimensions(self):
        """Test the photon truncation and the jump rate."""
        liouvillian = cavity_liouvillian(self.params, self.settings)
        assert liouvillian.emitter_levels == PHOTON_LEVELS
        assert liouvillian.hilbert_dim == 3 * 21
        assert liouvillian.jump_rate == self.params.kappa

    def test_undriven_cavity_is_empty(self):
        """Test Omega = 0: no photons and a thermal oscillator."""
        params = self.params.updated(Omega=0.0)
        state = cavity_stationary(params, self.settings)
        np.testing.assert_allclose(state.emitter_populations, [1.0, 0.0, 0.0], atol=1e-10)
        np.testing.assert_allclose(state.phonon_marginal, boltzmann_distribution(params.kT, 20), atol=1e-8)

    def test_dimension_budget(self):
        """Test that the cavity Liouvillian respects the Hilbert budget."""
        with pytest.raises(DimensionError):
            cavity_liouvillian(self.params, Settings(max_hilbert_dim=50))

    @patch('solvers.cavity_solver.stationary_dm')
    def test_blockade_violation(self, mock_stationary):
        """Test that two-photon population above 1e-3 is refused."""
        mock_stationary.return_value = Mock(emitter_populations=np.array([0.9, 0.09, 0.01]))
        with pytest.raises(BlockadeViolation):
            cavity_stationary(self.params, self.settings, liouvillian=Mock())

    def test_pn_agreement(self):
        """Test the relative deviation above the floor."""
        full = np.array([0.5, 0.4, 0.1, 1e-4])
        pauli = np.array([0.55, 0.4, 0.1, 1e-3])
        assert pn_agreement(pauli, full) == pytest.approx(0.1)
        assert pn_agreement(pauli, np.zeros(4)) == 0.0


class TestCavitySolver:
    """Test cases for the cavity stage."""

    def setup_method(self):
        """Set up test fixtures."""
        self.solver = CavitySolver(Settings())
        self.params = CavityParams(g_O=0.4, Omega=0.002, n_max=20)

    def test_pauli_only(self):
        """Test the secular map without the master equation."""
        result = self.solver.process(self.params, full=False)
        assert result['status'] == 'success'
        assert result['P_n'].sum() == pytest.approx(1.0)
        assert 'state' not in result
        assert any('above 1' in note for note in result['notes'])

    def test_full_solution(self):
        """Test that both descriptions agree for a weakly driven blockaded cavity."""
        result = self.solver.process(self.params, full=True)
        assert result['status'] == 'success'
        assert result['photon_populations'][2] < 1e-3
        assert result['pn_deviation'] < 0.1
        assert result['I_bar_full'] == pytest.approx(result['I_bar'], rel=0.1)

    @patch('solvers.cavity_solver.cavity_stationary')
    def test_blockade_error(self, mock_stationary):
        """Test that a violated blockade becomes an error dictionary."""
        mock_stationary.side_effect = BlockadeViolation('two photons')
        result = self.solver.process(self.params, full=True)
        assert result['status'] == 'error'
        assert result['error_type'] == 'BlockadeViolation'
