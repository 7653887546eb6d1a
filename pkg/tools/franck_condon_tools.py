"""
Franck-Condon Tools

Bose occupation and the displaced-oscillator overlaps
W_{n,m} = <n|exp(lam (a^+ - a))|m> in closed Laguerre form.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from tools.errors import FranckCondonOverflow, StateIndexError, TruncationError

logger = logging.getLogger(__name__)

# Largest exponent accepted before exp() overflows a double.
_LOG_LIMIT = 700.0


def bose_occupation(kT: float, omega: float = 1.0) -> float:
    """
    Thermal occupation 1/(exp(omega/kT) - 1) of a mode at frequency omega.

    Args:
        kT: Temperature in units of the mechanical quantum; 0 is allowed
        omega: Mode frequency (> 0)

    Returns:
        Mean occupation, 0 at zero temperature
    """
    if omega <= 0:
        raise ValueError(f'omega must be positive, got {omega}')
    if kT < 0:
        raise ValueError(f'kT must be non-negative, got {kT}')
    if kT == 0:
        return 0.0
    return float(1.0 / np.expm1(omega / kT))


def _overlaps(n: np.ndarray, m: np.ndarray, lam: float) -> np.ndarray:
    """Vectorized closed Laguerre form of <n|D(lam)|m> for integer arrays n, m."""
    n = np.asarray(n, dtype=np.int64)
    m = np.asarray(m, dtype=np.int64)
    if lam == 0.0:
        return (n == m).astype(float)
    if lam < 0:
        # <n|D(-lam)|m> = <m|D(lam)|n>
        return _overlaps(m, n, -lam)

    small = np.minimum(n, m)
    gap = np.abs(n - m)
    x = lam * lam
    laguerre = eval_genlaguerre(small, gap, x)
    with np.errstate(divide='ignore'):
        log_lag = np.log(np.abs(laguerre))
    log_mag = 0.5 * (gammaln(small + 1) - gammaln(small + gap + 1)) + gap * np.log(lam) - 0.5 * x + log_lag
    if not np.all(np.isfinite(laguerre)) or np.any(log_mag > _LOG_LIMIT):
        raise FranckCondonOverflow(f'Franck-Condon overlap out of range at lambda={lam}')
    # (-1)^(m-n) when the bra index is the smaller one
    sign = np.where((m > n) & (gap % 2 == 1), -1.0, 1.0) * np.sign(laguerre)
    return sign * np.exp(log_mag)


def franck_condon(n: int, m: int, lam: float) -> float:
    """
    Franck-Condon amplitude <n| exp(lam (a^+ - a)) |m>.

    Args:
        n: Bra phonon number
        m: Ket phonon number
        lam: Displacement (lam >= 0; negative values use D(-lam) = D(lam)^T)

    Returns:
        Signed real amplitude
    """
    if n < 0 or m < 0:
        raise StateIndexError(f'phonon indices must be non-negative, got ({n}, {m})')
    return float(_overlaps(np.array(n), np.array(m), float(lam)))


@dataclass(frozen=True)
class FranckCondonTable:
    """W_{n,m} for 0 <= n, m <= n_max with its row-completeness diagnostic."""

    lam: float
    entries: np.ndarray
    row_norms: np.ndarray
    checked_rows: int
    tail_tol: float

    @property
    def n_max(self) -> int:
        return self.entries.shape[0] - 1

    def __getitem__(self, index):
        return self.entries[index]

    def w(self, n: int, m: int) -> float:
        """Table lookup with bounds checking."""
        if not (0 <= n <= self.n_max and 0 <= m <= self.n_max):
            raise StateIndexError(f'W_({n},{m}) outside 0..{self.n_max}')
        return float(self.entries[n, m])


def fc_table(lam: float, n_max: int, tail_tol: float = 1e-8) -> FranckCondonTable:
    """
    Build the (n_max+1)^2 overlap table for a displacement lam.

    Rows n <= n_max // 2 are checked for completeness sum_m W_{n,m}^2 >= 1 - tail_tol;
    a failure inside the top 10% of the checked band means n_max is too small.
    """
    index = np.arange(n_max + 1)
    entries = _overlaps(index[:, None], index[None, :], float(lam))
    row_norms = np.sum(entries ** 2, axis=1)

    checked = n_max // 2
    failing = np.flatnonzero(np.abs(1.0 - row_norms[:checked + 1]) > tail_tol)
    band_start = int(np.ceil(0.9 * checked))
    if failing.size and failing.max() >= band_start:
        worst = float(np.max(np.abs(1.0 - row_norms[band_start:checked + 1])))
        raise TruncationError(
            f'Franck-Condon rows {band_start}..{checked} leak {worst:.3e} beyond n_max={n_max} '
            f'at lambda={lam:.4g}; increase n_max'
        )
    if failing.size:
        logger.warning(f'{failing.size} Franck-Condon rows below the checked band leak more than {tail_tol:g}')

    entries.setflags(write=False)
    row_norms.setflags(write=False)
    return FranckCondonTable(lam=float(lam), entries=entries, row_norms=row_norms,
                             checked_rows=checked, tail_tol=tail_tol)


def build_fc_table(params) -> FranckCondonTable:
    """Franck-Condon table for the rate equations of a SystemParams instance."""
    return fc_table(params.fc_lambda, params.n_max, params.tail_tol)
