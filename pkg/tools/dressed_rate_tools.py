"""
Dressed Rate Tools

Dressed doublets |+,n>, |-,n> of the blue-sideband drive and the Pauli rate
generator built from the optical and mechanical transition rates.

State layout: index 0 is the lone state |e,0>, (+,n) is 2n-1 and (-,n) is 2n
for n = 1..n_max. The lone state follows the same formulas with alpha=1, beta=0.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from tools.errors import DegenerateDetuning, StateIndexError
from tools.franck_condon_tools import FranckCondonTable, bose_occupation
from tools.output_tools import write_table

logger = logging.getLogger(__name__)

PLUS = 1
MINUS = -1
LONE = 0

# Doublet splittings above this fraction of omega_m mix neighbouring sidebands.
MIXING_LIMIT = 0.2


def state_index(mu: int, n: int, n_max: int) -> int:
    """Position of (mu, n) in the state vector; (LONE, 0) is the lone state."""
    if mu == LONE and n == 0:
        return 0
    if mu not in (PLUS, MINUS) or not 1 <= n <= n_max:
        raise StateIndexError(f'no dressed state (mu={mu}, n={n}) for n_max={n_max}')
    return 2 * n - 1 if mu == PLUS else 2 * n


@dataclass(frozen=True)
class DoubletBasis:
    """Per-n doublet amplitudes; index 0 holds the lone-state convention."""

    n_max: int
    epsilon: float
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    beta_plus: np.ndarray
    beta_minus: np.ndarray
    rabi: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n_max + 1

    @property
    def state_n(self) -> np.ndarray:
        """Doublet label n of every state."""
        labels = np.zeros(self.dim, dtype=np.int64)
        labels[1::2] = np.arange(1, self.n_max + 1)
        labels[2::2] = np.arange(1, self.n_max + 1)
        return labels

    @property
    def state_alpha(self) -> np.ndarray:
        """Excited-state amplitude of every state."""
        values = np.empty(self.dim)
        values[0] = 1.0
        values[1::2] = self.alpha_plus[1:]
        values[2::2] = self.alpha_minus[1:]
        return values

    @property
    def state_beta(self) -> np.ndarray:
        """Ground-state amplitude of every state."""
        values = np.empty(self.dim)
        values[0] = 0.0
        values[1::2] = self.beta_plus[1:]
        values[2::2] = self.beta_minus[1:]
        return values

    def amplitudes(self, mu: int, n: int) -> Tuple[float, float]:
        """(alpha, beta) of state (mu, n)."""
        index = state_index(mu, n, self.n_max)
        return float(self.state_alpha[index]), float(self.state_beta[index])


def build_doublets(params, fc: FranckCondonTable) -> DoubletBasis:
    """
    Diagonalize each {|e,n>, |g,n-1>} block of the sideband drive.

    Args:
        params: SystemParams (epsilon, Omega, n_max)
        fc: Franck-Condon table built from the same params

    Returns:
        DoubletBasis with alpha_+ = -beta_- and alpha_- = beta_+
    """
    if fc.n_max != params.n_max:
        raise StateIndexError(f'Franck-Condon table has n_max={fc.n_max}, params say {params.n_max}')
    eps = float(params.epsilon)
    if eps == 0.0 and params.Omega == 0.0:
        raise DegenerateDetuning('doublet splitting undefined for epsilon = 0 and Omega = 0')

    n = np.arange(1, params.n_max + 1)
    coupling = params.Omega * fc.entries[n, n - 1]
    rabi = np.hypot(coupling, eps)
    if np.any(rabi == 0.0):
        raise DegenerateDetuning('zero doublet splitting: epsilon = 0 and vanishing Franck-Condon factor')

    alpha_plus = np.where(coupling >= 0, 1.0, -1.0) * np.sqrt((rabi - eps) / (2 * rabi))
    beta_plus = np.sqrt((rabi + eps) / (2 * rabi))

    if rabi.max() > MIXING_LIMIT * params.omega_m:
        logger.warning(f'max doublet splitting {rabi.max():.3g} exceeds {MIXING_LIMIT} omega_m; '
                       'neighbouring sidebands start to mix')

    def with_lone(values: np.ndarray, lone: float) -> np.ndarray:
        out = np.concatenate([[lone], values])
        out.setflags(write=False)
        return out

    return DoubletBasis(
        n_max=params.n_max,
        epsilon=eps,
        alpha_plus=with_lone(alpha_plus, 1.0),
        alpha_minus=with_lone(beta_plus, 1.0),
        beta_plus=with_lone(beta_plus, 0.0),
        beta_minus=with_lone(-alpha_plus, 0.0),
        rabi=with_lone(rabi, abs(eps)),
    )


def optical_rate(mu: int, n: int, mu_p: int, n_p: int, params, basis: DoubletBasis,
                 fc: FranckCondonTable) -> float:
    """
    Photon-emission rate (mu, n) -> (mu_p, n_p), Gamma |alpha_mu(n) beta_mu_p(n_p) W_{n,n_p-1}|^2.

    The source may be the lone state (LONE, 0); the target must carry a ground component.
    """
    alpha, _ = basis.amplitudes(mu, n)
    if not 1 <= n_p <= basis.n_max:
        raise StateIndexError(f'emission target n={n_p} outside 1..{basis.n_max}')
    _, beta_p = basis.amplitudes(mu_p, n_p)
    return float(params.Gamma * (alpha * beta_p * fc.w(n, n_p - 1)) ** 2)


def mechanical_rate(mu: int, n: int, mu_p: int, direction: int, params, basis: DoubletBasis) -> float:
    """
    Thermal-bath rate (mu, n) -> (mu_p, n + direction).

    Args:
        mu: Source branch (PLUS, MINUS, or LONE with n = 0)
        n: Source doublet label
        mu_p: Target branch
        direction: +1 (phonon absorbed from the bath) or -1 (emitted into it)

    Returns:
        gamma (xi + n_B) |alpha' alpha sqrt(n + xi_up) + beta' beta sqrt(n - xi_down)|^2
    """
    if direction not in (1, -1):
        raise ValueError(f'direction must be +1 or -1, got {direction}')
    alpha, beta = basis.amplitudes(mu, n)
    alpha_p, beta_p = basis.amplitudes(mu_p, n + direction)
    n_b = bose_occupation(params.kT, params.omega_m)
    if direction == 1:
        amplitude = alpha_p * alpha * np.sqrt(n + 1) + beta_p * beta * np.sqrt(n)
        occupation = n_b
    else:
        amplitude = alpha_p * alpha * np.sqrt(n) + beta_p * beta * np.sqrt(max(n - 1, 0))
        occupation = n_b + 1.0
    return float(params.gamma * occupation * amplitude ** 2)


@dataclass(frozen=True)
class RateMatrix:
    """
    Pauli generator over dressed states.

    rates[j, i] is the total rate i -> j (diagonal: photon emissions that
    return to the same state); photon_rates is its optical part and photon_p
    the phonon change n_j - n_i of each optical entry.
    """

    rates: np.ndarray
    photon_rates: np.ndarray
    photon_p: np.ndarray
    basis: Optional[DoubletBasis] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        return self.rates.shape[0]

    @property
    def generator(self) -> np.ndarray:
        """M = rates - diag(column sums); column sums of M vanish."""
        generator = self.rates - np.diag(self.rates.sum(axis=0))
        # self-transitions cancel exactly on the diagonal
        np.fill_diagonal(generator, -(self.rates.sum(axis=0) - np.diag(self.rates)))
        return generator

    @property
    def photon_mask(self) -> np.ndarray:
        return self.photon_rates > 0

    @classmethod
    def from_rates(cls, mechanical: np.ndarray, photon: np.ndarray, photon_p: Optional[np.ndarray] = None,
                   basis: Optional[DoubletBasis] = None, notes: Tuple[str, ...] = ()) -> 'RateMatrix':
        """Assemble from separate non-counted and counted rate matrices (target, source)."""
        mechanical = np.array(mechanical, dtype=float)
        photon = np.array(photon, dtype=float)
        if photon_p is None:
            photon_p = np.zeros(photon.shape, dtype=np.int64)
        off_diagonal = ~np.eye(mechanical.shape[0], dtype=bool)
        mechanical = np.where(off_diagonal, mechanical, 0.0)
        rates = mechanical + photon
        for array in (rates, photon, photon_p):
            array.setflags(write=False)
        return cls(rates=rates, photon_rates=photon, photon_p=np.asarray(photon_p, dtype=np.int64),
                   basis=basis, notes=tuple(notes))


def _optical_matrix(params, basis: DoubletBasis, fc: FranckCondonTable) -> Tuple[np.ndarray, np.ndarray]:
    labels = basis.state_n
    alpha = basis.state_alpha
    beta = basis.state_beta
    targets = labels >= 1
    overlap = np.zeros((basis.dim, basis.dim))
    # overlap[j, i] = W_{n_i, n_j - 1}
    overlap[targets, :] = fc.entries[labels[None, :], labels[targets][:, None] - 1]
    rates = params.Gamma * (beta[:, None] * alpha[None, :] * overlap) ** 2
    rates[~targets, :] = 0.0
    phonon_change = labels[:, None] - labels[None, :]
    return rates, phonon_change


def _mechanical_matrix(params, basis: DoubletBasis) -> np.ndarray:
    labels = basis.state_n
    alpha = basis.state_alpha
    beta = basis.state_beta
    n_b = bose_occupation(params.kT, params.omega_m)
    up = labels[:, None] == labels[None, :] + 1
    source_n = np.broadcast_to(labels[None, :], up.shape).astype(float)
    amplitude = (alpha[:, None] * alpha[None, :] * np.sqrt(source_n + 1)
                 + beta[:, None] * beta[None, :] * np.sqrt(source_n))
    amplitude = np.where(up, amplitude, 0.0)
    # up[j, i]: i -> j gains a phonon; the reverse process has the same amplitude
    return params.gamma * (n_b * amplitude ** 2 + (n_b + 1.0) * (amplitude ** 2).T)


def build_rate_matrix(params, basis: DoubletBasis, fc: FranckCondonTable) -> RateMatrix:
    """
    Assemble the Pauli generator from the optical and mechanical rates.

    Pure dephasing is diagonal in the emitter basis and only damps
    coherences, so it adds no population transfer here.
    """
    photon, photon_p = _optical_matrix(params, basis, fc)
    mechanical = _mechanical_matrix(params, basis)
    notes = []
    if params.gamma_phi > 0:
        notes.append(f'gamma_phi={params.gamma_phi:g} has no population effect in the dressed Pauli basis')
        logger.info(notes[-1])
    photon_p = np.where(photon > 0, photon_p, 0)
    logger.debug(f'Rate matrix built: dim={basis.dim}, optical entries={int(np.count_nonzero(photon))}')
    return RateMatrix.from_rates(mechanical, photon, photon_p, basis=basis, notes=tuple(notes))


def dump_rate_triplets(rates: RateMatrix, path: Union[str, Path]) -> Path:
    """Write the generator and counted entries as (row, col, value, p) triplets."""
    generator = rates.generator
    rows, cols = np.nonzero(generator)
    counted = rates.photon_mask[rows, cols]
    frame = pd.DataFrame({
        'row': rows,
        'col': cols,
        'value': generator[rows, cols],
        'p': pd.array(np.where(counted, rates.photon_p[rows, cols], 0), dtype='Int64'),
    })
    frame.loc[~counted, 'p'] = pd.NA
    return write_table(frame, path)
