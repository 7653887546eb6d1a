"""
Tests for the dressed doublets and the Pauli rate matrix.
"""

import numpy as np
import pytest

from config.params import SystemParams
from tools.dressed_rate_tools import (
    LONE,
    MINUS,
    PLUS,
    RateMatrix,
    build_doublets,
    build_rate_matrix,
    dump_rate_triplets,
    mechanical_rate,
    optical_rate,
    state_index,
)
from tools.errors import DegenerateDetuning, StateIndexError
from tools.franck_condon_tools import build_fc_table
from tools.output_tools import read_table


class TestDoublets:
    """Test cases for the doublet diagonalization."""

    def setup_method(self):
        """Set up test fixtures."""
        self.params = SystemParams(Omega=0.01, n_max=20)
        self.fc = build_fc_table(self.params)
        self.basis = build_doublets(self.params, self.fc)

    def test_first_splitting(self):
        """Test Omega_1 = sqrt(epsilon^2 + (Omega W_10)^2) at g0 = 0.1."""
        assert self.basis.rabi[1] == pytest.approx(0.01019035, rel=1e-6)

    def test_amplitudes_are_normalized(self):
        """Test alpha^2 + beta^2 = 1 on every dressed state."""
        norm = self.basis.state_alpha[1:] ** 2 + self.basis.state_beta[1:] ** 2
        np.testing.assert_allclose(norm, 1.0, atol=1e-14)

    def test_doublet_is_orthonormal(self):
        """Test alpha_+ = -beta_- and alpha_- = beta_+."""
        np.testing.assert_allclose(self.basis.alpha_plus[1:], -self.basis.beta_minus[1:])
        np.testing.assert_allclose(self.basis.alpha_minus[1:], self.basis.beta_plus[1:])

    def test_lone_state(self):
        """Test the lone state |e,0> convention."""
        assert self.basis.amplitudes(LONE, 0) == (1.0, 0.0)
        assert state_index(LONE, 0, 20) == 0

    def test_state_layout(self):
        """Test (+,n) at 2n-1 and (-,n) at 2n."""
        assert state_index(PLUS, 1, 20) == 1
        assert state_index(MINUS, 1, 20) == 2
        assert state_index(MINUS, 20, 20) == 40
        assert self.basis.dim == 41
        with pytest.raises(StateIndexError):
            state_index(PLUS, 21, 20)

    def test_degenerate_detuning(self):
        """Test that zero detuning without drive is rejected."""
        params = SystemParams(epsilon=0.0, Omega=0.0, n_max=20)
        with pytest.raises(DegenerateDetuning):
            build_doublets(params, build_fc_table(params))

    def test_mismatched_table(self):
        """Test that a table of another truncation is rejected."""
        with pytest.raises(StateIndexError):
            build_doublets(self.params.updated(n_max=30), self.fc)


class TestRateMatrix:
    """Test cases for the Pauli generator."""

    def setup_method(self):
        """Set up test fixtures."""
        self.params = SystemParams(Omega=0.01, n_max=20)
        self.fc = build_fc_table(self.params)
        self.basis = build_doublets(self.params, self.fc)
        self.rates = build_rate_matrix(self.params, self.basis, self.fc)

    def test_columns_conserve_probability(self):
        """Test that the generator columns sum to zero."""
        np.testing.assert_allclose(self.rates.generator.sum(axis=0), 0.0, atol=1e-15)

    def test_rates_are_non_negative(self):
        """Test that every transition rate is non-negative."""
        assert (self.rates.rates >= 0).all()
        assert (self.rates.photon_rates >= 0).all()

    def test_matrix_matches_scalar_rates(self):
        """Test matrix entries against optical_rate and mechanical_rate."""
        source = state_index(PLUS, 3, 20)
        target = state_index(MINUS, 4, 20)
        expected = optical_rate(PLUS, 3, MINUS, 4, self.params, self.basis, self.fc)
        assert self.rates.photon_rates[target, source] == pytest.approx(expected, rel=1e-12)

        up = state_index(PLUS, 4, 20)
        mechanical = mechanical_rate(PLUS, 3, PLUS, 1, self.params, self.basis)
        bath_part = self.rates.rates[up, source] - self.rates.photon_rates[up, source]
        assert bath_part == pytest.approx(mechanical, rel=1e-9)

    def test_mechanical_rate_direction(self):
        """Test that only single-phonon steps are accepted."""
        with pytest.raises(ValueError):
            mechanical_rate(PLUS, 3, PLUS, 2, self.params, self.basis)

    def test_photon_p_labels(self):
        """Test that the phonon change of counted entries is n_target - n_source."""
        labels = self.basis.state_n
        mask = self.rates.photon_mask
        expected = (labels[:, None] - labels[None, :])[mask]
        np.testing.assert_array_equal(self.rates.photon_p[mask], expected)

    def test_self_emissions_are_counted(self):
        """Test that same-state emissions appear on the photon diagonal."""
        assert np.diag(self.rates.photon_rates).max() > 0

    def test_dephasing_note(self):
        """Test that pure dephasing is reported as having no population effect."""
        assert any('gamma_phi' in note for note in self.rates.notes)
        quiet = self.params.updated(gamma_phi=0.0)
        assert build_rate_matrix(quiet, self.basis, self.fc).notes == ()

    def test_from_rates_drops_mechanical_diagonal(self):
        """Test that non-counted self-transitions are discarded."""
        rates = RateMatrix.from_rates([[5.0, 1.0], [2.0, 7.0]], [[0.0, 0.0], [0.0, 0.0]])
        assert rates.rates[0, 0] == 0.0
        np.testing.assert_allclose(rates.generator, [[-2.0, 1.0], [2.0, -1.0]])

    def test_dump_rate_triplets(self, tmp_path):
        """Test the (row, col, value, p) export."""
        path = dump_rate_triplets(self.rates, tmp_path / 'rates.csv')
        with open(path, encoding='utf-8') as handle:
            assert handle.readline().startswith('# schema: sideband-phonon-lab v1')
        frame = read_table(path)
        assert list(frame.columns) == ['row', 'col', 'value', 'p']
        assert len(frame) == np.count_nonzero(self.rates.generator)
