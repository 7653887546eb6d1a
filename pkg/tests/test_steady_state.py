"""
Tests for the stationary Pauli solution.
"""

import numpy as np
import pytest
from unittest.mock import patch

from config.params import SystemParams
from config.settings import Settings
from solvers.steady_state_solver import (
    SteadyStateSolver,
    analytic_nbar,
    boltzmann_distribution,
    flux_resolved,
    kolmogorov_distance,
    phonon_balance,
    pointwise_deviation,
    solve_pauli,
    solve_stationary,
    thermal_temperature,
)
from tools.dressed_rate_tools import RateMatrix
from tools.errors import SingularSystem, TruncationError
from tools.franck_condon_tools import bose_occupation


class TestStationaryState:
    """Test cases for solve_stationary and the derived quantities."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = Settings()
        self.params = SystemParams(Omega=5e-3, n_max=40)

    def test_undriven_state_is_thermal(self):
        """Test that Omega = 0 reproduces the Boltzmann distribution."""
        params = self.params.updated(Omega=0.0)
        solution = solve_pauli(params, self.settings)
        reference = boltzmann_distribution(params.kT, params.n_max)
        np.testing.assert_allclose(solution.state.phonon_marginal, reference, atol=1e-10)
        assert solution.state.n_bar == pytest.approx(bose_occupation(params.kT), rel=1e-6)
        assert solution.state.flux_total == pytest.approx(0.0, abs=1e-15)

    def test_weak_drive_matches_closed_form(self):
        """Test n_bar against the weak-coupling estimate below threshold."""
        solution = solve_pauli(self.params, self.settings)
        analytic = analytic_nbar(self.params)
        assert not analytic.above_threshold
        assert analytic.n_bar == pytest.approx(1.109, abs=1e-3)
        assert solution.state.n_bar == pytest.approx(analytic.n_bar, rel=0.1)

    def test_state_is_normalized(self):
        """Test populations and phonon marginal sum to one."""
        state = solve_pauli(self.params, self.settings).state
        assert state.populations.sum() == pytest.approx(1.0, abs=1e-12)
        assert state.phonon_marginal.sum() == pytest.approx(1.0, abs=1e-12)
        assert (state.populations >= 0).all()

    def test_flux_decomposition_adds_up(self):
        """Test that the per-p fluxes and the remainder give the total."""
        solution = solve_pauli(self.params, self.settings)
        decomposition = flux_resolved(solution.state, solution.rates, p_max=5)
        assert decomposition.fluxes.sum() + decomposition.remainder == pytest.approx(decomposition.total, rel=1e-12)
        assert decomposition.flux(1) > decomposition.flux(-1)
        assert decomposition.flux(99) == 0.0

    def test_phonon_content_balances(self):
        """Test that bath and emission changes of the phonon content cancel."""
        solution = solve_pauli(self.params, self.settings)
        balance = phonon_balance(solution.state, solution.rates, self.params)
        assert abs(balance.total) < 1e-6 * abs(balance.mechanical)
        assert balance.optical > 0

    def test_small_truncation_raises(self):
        """Test that a limit cycle beyond n_max is reported."""
        params = SystemParams(g0=0.58, Omega=0.16, epsilon=0.05, n_max=20)
        with pytest.raises(TruncationError):
            solve_pauli(params, self.settings)

    def test_reducible_generator_raises(self):
        """Test that two disconnected states give SingularSystem."""
        rates = RateMatrix.from_rates(np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(SingularSystem):
            solve_stationary(rates)

    def test_two_state_telegraph(self):
        """Test the stationary state of a pumped and decaying two-state model."""
        rates = RateMatrix.from_rates([[0.0, 0.0], [1.0, 0.0]], [[0.0, 3.0], [0.0, 0.0]])
        state = solve_stationary(rates)
        np.testing.assert_allclose(state.populations, [0.75, 0.25], atol=1e-14)
        assert state.flux_total == pytest.approx(0.75)
        assert state.phonon_marginal is None


class TestPhononBookkeeping:
    """Test cases for the mean-phonon source terms and the flux identities."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = Settings()
        self.params = SystemParams(Omega=5e-3, n_max=40)
        self.solution = solve_pauli(self.params, self.settings)

    def test_emission_source_exceeds_flux_by_lambda_squared(self):
        """Test Gamma_op = I_bar (1 + lam^2): the mean phonon shift of a displaced emission."""
        flux = self.solution.state.flux
        assert flux.gamma_op == pytest.approx(flux.total * (1.0 + self.params.fc_lambda ** 2), rel=1e-4)

    def test_mean_phonon_equation(self):
        """Test -gamma (n_bar - n_B) + Gamma_op = 0 up to the secular bath corrections."""
        balance = phonon_balance(self.solution.state, self.solution.rates, self.params)
        assert balance.relaxation < 0
        assert abs(balance.relaxation + balance.gamma_op) < 0.02 * balance.gamma_op

    @pytest.mark.parametrize('g0', [0.02, 0.04])
    def test_flux_asymmetry_is_second_order(self, g0):
        """Test (I^(2) - I^(0)) / I_bar -> lam^2 at fixed A, so I^(2) = I^(0) up to O(g0^2)."""
        params = self.params.updated(g0=g0, Omega=5e-4 / g0)
        flux = solve_pauli(params, self.settings).state.flux
        assert flux.flux(1) > 0.9 * flux.total
        asymmetry = (flux.flux(2) - flux.flux(0)) / flux.total
        assert asymmetry == pytest.approx(params.fc_lambda ** 2, rel=0.2)

    def test_thermal_limit_at_weak_drive(self):
        """Test Omega = 1e-3: thermal shape at the heated n_bar, 13-14% off the bath Boltzmann at n = 8."""
        params = self.params.updated(Omega=1e-3)
        state = solve_pauli(params, self.settings).state
        bath = boltzmann_distribution(params.kT, params.n_max)
        matched = boltzmann_distribution(thermal_temperature(state.n_bar), params.n_max)
        assert state.n_bar == pytest.approx(0.598, abs=5e-3)
        assert kolmogorov_distance(state.phonon_marginal, bath) < 0.02
        assert 0.10 < pointwise_deviation(state.phonon_marginal, bath) < 0.17
        assert pointwise_deviation(state.phonon_marginal, matched) < 0.02

    @pytest.mark.parametrize('g0, low, high', [(0.02, 0.0, 0.06), (0.1, 0.08, 0.25)])
    def test_weak_coupling_emission_identity(self, g0, low, high):
        """Test I_bar = Gamma A (n_bar + 1) at fixed A: its error grows like g0^2."""
        params = self.params.updated(g0=g0, Omega=5e-4 / g0)
        state = solve_pauli(params, self.settings).state
        estimate = params.Gamma * analytic_nbar(params).A * (state.n_bar + 1.0)
        deviation = abs(state.flux_total - estimate) / state.flux_total
        assert low <= deviation < high


class TestClosedForms:
    """Test cases for the analytic helpers."""

    def test_critical_drive(self):
        """Test Omega* = epsilon sqrt(gamma / Gamma) / g0."""
        params = SystemParams()
        analytic = analytic_nbar(params)
        assert analytic.omega_star == pytest.approx(0.01 * np.sqrt(1e-4 / 0.01) / 0.1)

    def test_above_threshold(self):
        """Test that gain above gamma yields no finite estimate."""
        analytic = analytic_nbar(SystemParams(Omega=0.05))
        assert analytic.above_threshold
        assert analytic.n_bar is None

    def test_boltzmann_at_zero_temperature(self):
        """Test the ground state at kT = 0."""
        dist = boltzmann_distribution(0.0, 5)
        assert dist[0] == 1.0
        assert dist.sum() == 1.0

    def test_kolmogorov_distance(self):
        """Test the CDF distance of two point masses and of unequal lengths."""
        assert kolmogorov_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)
        assert kolmogorov_distance([0.5, 0.5], [0.5, 0.5, 0.0]) == pytest.approx(0.0)

    def test_thermal_temperature(self):
        """Test that kT inverts the Bose occupation."""
        assert thermal_temperature(bose_occupation(1.0)) == pytest.approx(1.0, rel=1e-12)
        assert thermal_temperature(0.0) == 0.0

    def test_pointwise_deviation(self):
        """Test the relative deviation over levels above the floor."""
        assert pointwise_deviation([0.5, 0.5, 1e-6], [0.4, 0.5, 0.1]) == pytest.approx(0.25)
        assert pointwise_deviation([0.0, 0.0], [0.5, 0.5]) == 0.0


class TestSteadyStateSolver:
    """Test cases for the steady-state stage."""

    def setup_method(self):
        """Set up test fixtures."""
        self.solver = SteadyStateSolver(Settings())

    def test_process_success(self):
        """Test that a point returns the stationary quantities."""
        result = self.solver.process(SystemParams(Omega=5e-3, n_max=40))
        assert result['status'] == 'success'
        assert result['n_bar'] > bose_occupation(1.0)
        assert 'I_p' in result
        assert result['omega_star'] == pytest.approx(0.01)

    @patch('solvers.steady_state_solver.solve_pauli')
    def test_process_error(self, mock_solve):
        """Test that simulation errors become an error dictionary."""
        mock_solve.side_effect = TruncationError('tail too heavy')
        result = self.solver.process(SystemParams(n_max=40))
        assert result['status'] == 'error'
        assert result['error_type'] == 'TruncationError'
        assert 'tail too heavy' in result['message']
