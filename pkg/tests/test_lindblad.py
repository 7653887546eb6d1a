"""
Tests for the full master equation.
"""

import numpy as np
import pytest
import qutip
import scipy.sparse as sp
from unittest.mock import Mock, patch

from config.params import SystemParams
from config.settings import Settings
from solvers.lindblad_solver import (
    LindbladSolver,
    build_liouvillian,
    displacement,
    g2_and_mandel,
    g2_zero,
    mandel_fano_resolvent,
)
from solvers.steady_state_solver import boltzmann_distribution, solve_pauli
from tools.errors import DimensionError
from tools.franck_condon_tools import franck_condon
from tools.liouvillian_tools import lindblad_superoperator, stationary_dm, trace_row, unvec, vec


class TestSuperoperators:
    """Test cases for the vectorized Lindblad building blocks."""

    def setup_method(self):
        """Set up test fixtures."""
        rng = np.random.default_rng(7)
        self.dim = 4
        self.op = qutip.Qobj(rng.normal(size=(self.dim, self.dim)) + 1j * rng.normal(size=(self.dim, self.dim)))
        rho = rng.normal(size=(self.dim, self.dim)) + 1j * rng.normal(size=(self.dim, self.dim))
        self.rho = rho @ rho.conj().T
        self.rho /= np.trace(self.rho)

    def test_vec_round_trip(self):
        """Test column-stacking vec and unvec."""
        np.testing.assert_allclose(unvec(vec(self.rho)), self.rho)
        assert vec(np.array([[1, 2], [3, 4]])).tolist() == [1, 3, 2, 4]

    def test_superoperator_action(self):
        """Test -i[H, rho] + rate (L rho L^+ - {L^+L, rho}/2) in the vec convention."""
        H = (self.op + self.op.dag()).full()
        L = self.op.full()
        superop = lindblad_superoperator(qutip.Qobj(H), [(0.3, self.op), (0.0, self.op)])
        expected = (-1j * (H @ self.rho - self.rho @ H)
                    + 0.3 * (L @ self.rho @ L.conj().T
                             - 0.5 * (L.conj().T @ L @ self.rho + self.rho @ L.conj().T @ L)))
        result = unvec(sp.csr_matrix(superop.data) @ vec(self.rho))
        np.testing.assert_allclose(result, expected, atol=1e-12)

    def test_superoperator_preserves_trace(self):
        """Test that Tr(L rho) = 0 for any Hamiltonian and collapse operator."""
        superop = lindblad_superoperator(self.op + self.op.dag(), [(0.3, self.op)])
        row = trace_row(self.dim)
        assert abs((row @ (sp.csr_matrix(superop.data) @ vec(self.rho)))[0]) < 1e-12


class TestMasterEquation:
    """Test cases for the driven emitter-oscillator Liouvillian."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = Settings()

    def test_undriven_state_is_thermal(self):
        """Test that Omega = 0 relaxes to the ground emitter and a Boltzmann oscillator."""
        params = SystemParams(Omega=0.0, n_max=20)
        liouvillian = build_liouvillian(params, self.settings)
        state = stationary_dm(liouvillian)
        np.testing.assert_allclose(state.phonon_marginal, boltzmann_distribution(params.kT, 20), atol=1e-8)
        np.testing.assert_allclose(state.emitter_populations, [1.0, 0.0], atol=1e-10)

    def test_iterative_solver_matches_direct(self):
        """Test the preconditioned GMRES path against sparse LU."""
        params = SystemParams(g0=0.1, Omega=0.03, epsilon=0.05, Gamma=0.005, kT=0.5, n_max=10,
                              jump_displacement_multiplier=2.0, gamma_phi=0.0)
        liouvillian = build_liouvillian(params, self.settings)
        direct = stationary_dm(liouvillian, method='direct', tail_mass_limit=1.0)
        iterative = stationary_dm(liouvillian, method='iterative', tail_mass_limit=1.0)
        np.testing.assert_allclose(iterative.rho, direct.rho, atol=1e-8)

    def test_dimension_budget(self):
        """Test that an oversized Hilbert space is refused before assembly."""
        settings = Settings(max_hilbert_dim=20)
        with pytest.raises(DimensionError):
            build_liouvillian(SystemParams(n_max=10), settings)

    def test_displacement_matches_closed_form(self):
        """Test the truncated qutip displacement against the Laguerre overlaps away from the edge."""
        D = displacement(0.2, 30).full()
        for n, m in [(0, 0), (1, 0), (0, 1), (5, 3), (3, 7)]:
            assert D[n, m].real == pytest.approx(franck_condon(n, m, 0.2), abs=1e-10)
            assert abs(D[n, m].imag) < 1e-12

    def test_agrees_with_secular_rates(self):
        """Test the master-equation P_n against the Pauli solution for a weak secular drive."""
        params = SystemParams(g0=0.1, Omega=5e-3, epsilon=0.01, Gamma=2e-3, gamma=1e-4, gamma_phi=0.0, kT=1.0,
                              n_max=20, jump_displacement_multiplier=2.0)
        full = stationary_dm(build_liouvillian(params, self.settings))
        pauli = solve_pauli(params, self.settings).state
        thermal_nbar = float(np.arange(21) @ boltzmann_distribution(params.kT, params.n_max))
        assert pauli.n_bar > 1.05 * thermal_nbar
        assert full.n_bar == pytest.approx(pauli.n_bar, rel=0.01)
        occupied = pauli.phonon_marginal > 1e-4
        reference = pauli.phonon_marginal[occupied]
        assert np.max(np.abs(full.phonon_marginal[occupied] - reference) / reference) < 0.03


class TestPhotonStatistics:
    """Test cases for g2 and the Mandel factor on a decoupled emitter."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = Settings()
        self.params = SystemParams(g0=0.0, Omega=0.05, epsilon=0.05, Gamma=0.1, gamma=1e-3, gamma_phi=0.0,
                                   kT=0.2, n_max=6)
        self.liouvillian = build_liouvillian(self.params, self.settings)
        self.state = stationary_dm(self.liouvillian)

    def test_antibunching_at_zero_delay(self):
        """Test that a two-level emitter never emits two photons at once."""
        assert g2_zero(self.liouvillian, self.state) == pytest.approx(0.0, abs=1e-10)

    def test_g2_relaxes_to_one(self):
        """Test the long-delay limit of g2(t)."""
        correlation, _ = g2_and_mandel(self.liouvillian, self.state, t_max=200.0, n_steps=4000)
        assert correlation.g2[0] == pytest.approx(0.0, abs=1e-8)
        assert correlation.g2[-1] == pytest.approx(1.0, abs=1e-2)

    def test_time_and_resolvent_mandel_agree(self):
        """Test the integrated g2 against the resolvent identity."""
        _, timed = g2_and_mandel(self.liouvillian, self.state, t_max=200.0, n_steps=4000)
        resolvent = mandel_fano_resolvent(self.liouvillian, self.state)
        assert timed.flux == pytest.approx(resolvent.flux, rel=1e-12)
        assert timed.integral + timed.tail == pytest.approx(resolvent.integral, rel=1e-2)


class TestLindbladSolver:
    """Test cases for the master-equation stage."""

    def setup_method(self):
        """Set up test fixtures."""
        self.solver = LindbladSolver(Settings())
        self.params = SystemParams(g0=0.1, Omega=0.03, epsilon=0.05, Gamma=0.005, kT=0.5, n_max=16,
                                   jump_displacement_multiplier=2.0, gamma_phi=0.0)

    def test_process_success(self):
        """Test the stationary result and photon statistics of one point."""
        result = self.solver.process(self.params)
        assert result['status'] == 'success'
        assert result['I_bar'] > 0
        assert result['g2_0'] >= 0
        assert np.isfinite(result['F_mandel'])
        assert 'g2' not in result

    def test_process_dimension_error(self):
        """Test that an oversized point returns an error dictionary."""
        solver = LindbladSolver(Settings(max_hilbert_dim=10))
        result = solver.process(self.params)
        assert result['status'] == 'error'
        assert result['error_type'] == 'DimensionError'

    @patch('solvers.lindblad_solver.g2_and_mandel')
    def test_process_with_g2(self, mock_g2):
        """Test that the default grid length is 20 / Gamma."""
        correlation, timed = Mock(), Mock(fano=1.5)
        mock_g2.return_value = (correlation, timed)
        result = self.solver.process(self.params, with_g2=True)
        assert result['status'] == 'success'
        assert result['g2'] is correlation
        assert result['F_mandel_time'] == 1.5
        assert mock_g2.call_args[0][2] == pytest.approx(20.0 / self.params.Gamma)
