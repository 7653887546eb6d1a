"""
Tests for the photon counting statistics.
"""

import numpy as np
import pytest

from config.params import SystemParams
from config.settings import Settings
from solvers.counting_solver import (
    CountingSolver,
    TiltedGenerator,
    cgf_rate,
    flux_noise_eigen,
    flux_noise_pseudoinverse,
)
from solvers.steady_state_solver import solve_pauli
from tools.dressed_rate_tools import RateMatrix


class TestToyModels:
    """Test cases with closed-form counting statistics."""

    def setup_method(self):
        """Set up test fixtures."""
        self.poisson = RateMatrix.from_rates([[0.0]], [[2.5]])
        # pump 0 -> 1 at rate k, counted decay 1 -> 0 at rate g
        self.k, self.g = 1.0, 1.0
        self.telegraph = RateMatrix.from_rates([[0.0, 0.0], [self.k, 0.0]], [[0.0, self.g], [0.0, 0.0]])

    def test_poisson_process(self):
        """Test that a single self-emitting state is Poissonian with both methods."""
        resolvent = flux_noise_pseudoinverse(self.poisson)
        eigen = flux_noise_eigen(self.poisson)
        assert resolvent.flux == pytest.approx(2.5)
        assert resolvent.fano == pytest.approx(1.0, abs=1e-12)
        assert eigen.flux == pytest.approx(2.5, rel=1e-8)
        assert eigen.fano == pytest.approx(1.0, abs=1e-6)

    def test_cgf_of_poisson_process(self):
        """Test lambda(chi) = r (exp(i chi) - 1)."""
        chi = 0.3
        assert cgf_rate(self.poisson, chi) == pytest.approx(2.5 * np.expm1(1j * chi))
        assert cgf_rate(self.poisson, 0.0) == 0j

    def test_telegraph_antibunching(self):
        """Test F = 1 - 2 k g / (k + g)^2 for a pumped and counted two-state emitter."""
        expected = 1.0 - 2.0 * self.k * self.g / (self.k + self.g) ** 2
        resolvent = flux_noise_pseudoinverse(self.telegraph)
        eigen = flux_noise_eigen(self.telegraph)
        assert resolvent.flux == pytest.approx(self.k * self.g / (self.k + self.g))
        assert resolvent.fano == pytest.approx(expected, abs=1e-12)
        assert eigen.fano == pytest.approx(expected, abs=1e-6)

    def test_tilted_generator_at_zero(self):
        """Test that M(0) is the generator."""
        tilted = TiltedGenerator(self.telegraph, 0.0).matrix
        np.testing.assert_allclose(tilted, self.telegraph.generator)


class TestDressedModel:
    """Test cases on the driven emitter model."""

    def setup_method(self):
        """Set up test fixtures."""
        self.settings = Settings()
        self.solution = solve_pauli(SystemParams(Omega=5e-3, n_max=40), self.settings)

    def test_methods_agree(self):
        """Test the eigenvalue-derivative and group-inverse routes against each other."""
        eigen = flux_noise_eigen(self.solution.rates)
        resolvent = flux_noise_pseudoinverse(self.solution.rates, self.solution.state)
        assert eigen.flux == pytest.approx(resolvent.flux, rel=1e-6)
        assert eigen.noise == pytest.approx(resolvent.noise, rel=1e-6)

    def test_cgf_is_conjugate_symmetric(self):
        """Test lambda_0(-chi) = conj(lambda_0(chi)), which keeps the cumulants real."""
        for chi in (0.01, 0.3):
            forward = cgf_rate(self.solution.rates, chi)
            assert cgf_rate(self.solution.rates, -chi) == pytest.approx(np.conj(forward), rel=1e-9)

    def test_first_cumulant_is_stationary_flux(self):
        """Test the finite-difference I_bar at chi = 0.01 against the stationary flux."""
        chi = 0.01
        derivative = (cgf_rate(self.solution.rates, chi) - cgf_rate(self.solution.rates, -chi)) / (2j * chi)
        assert derivative.real == pytest.approx(self.solution.state.flux_total, rel=1e-3)

    def test_flux_matches_stationary_state(self):
        """Test that the counted flux equals the stationary emission flux."""
        resolvent = flux_noise_pseudoinverse(self.solution.rates, self.solution.state)
        assert resolvent.flux == pytest.approx(self.solution.state.flux_total, rel=1e-12)
        assert resolvent.fano > 0

    def test_solver_process(self):
        """Test the counting stage result."""
        result = CountingSolver(self.settings).process(self.solution.rates, self.solution.state)
        assert result['status'] == 'success'
        assert result['relative_difference'] < 1e-6
        assert result['eigen'].method == 'eigen-derivative'
        assert result['pseudoinverse'].to_dict()['method'] == 'pseudoinverse'
