"""
Liouvillian Tools

Lindblad superoperators assembled with qutip (column-stacking convention,
vec(A rho B) = (B^T kron A) vec(rho)), the validated stationary density
matrix and the bordered group-inverse solve used by the resolvent formulas.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
import qutip
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from tools.errors import ConvergenceError, DimensionError, SingularSystem, TruncationError

logger = logging.getLogger(__name__)

STATIONARY_METHODS = {'direct': 'direct', 'iterative': 'iterative-gmres'}


@dataclass(frozen=True)
class Liouvillian:
    """Superoperator of an emitter (TLS or few-photon cavity) times an oscillator."""

    generator: qutip.Qobj
    hamiltonian: qutip.Qobj
    jump: qutip.Qobj
    jump_rate: float
    emitter_levels: int
    phonon_levels: int
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def hilbert_dim(self) -> int:
        return self.emitter_levels * self.phonon_levels

    @property
    def dim(self) -> int:
        return self.hilbert_dim ** 2

    @property
    def dims(self) -> List[int]:
        return [self.emitter_levels, self.phonon_levels]

    @cached_property
    def superoperator(self) -> sp.csc_matrix:
        """Sparse matrix of the generator acting on vec(rho)."""
        return sp.csc_matrix(self.generator.data)


def check_dimension(hilbert_dim: int, max_hilbert_dim: int) -> None:
    """Raise DimensionError when d exceeds the configured budget."""
    if hilbert_dim > max_hilbert_dim:
        raise DimensionError(f'Hilbert dimension {hilbert_dim} exceeds the budget {max_hilbert_dim} '
                             f'(superoperator {hilbert_dim ** 2}^2); lower n_max')


def vec(matrix) -> np.ndarray:
    """Column-stacked vector of a matrix or operator."""
    if isinstance(matrix, qutip.Qobj):
        matrix = matrix.full()
    return np.asarray(qutip.mat2vec(np.asarray(matrix))).ravel()


def unvec(vector: np.ndarray) -> np.ndarray:
    """Inverse of vec for a square matrix."""
    return np.asarray(qutip.vec2mat(np.asarray(vector).reshape(-1, 1)))


def lindblad_superoperator(hamiltonian: qutip.Qobj,
                           collapse: Sequence[Tuple[float, qutip.Qobj]]) -> qutip.Qobj:
    """-i[H, rho] + sum_k rate_k D(L_k) rho; zero-rate channels are skipped."""
    operators = [np.sqrt(rate) * op for rate, op in collapse if op is not None and rate > 0]
    return qutip.liouvillian(hamiltonian, operators)


def trace_row(dim: int) -> sp.csr_matrix:
    """Row vector t with t . vec(rho) = Tr rho."""
    diagonal = np.arange(dim) * (dim + 1)
    return sp.csr_matrix((np.ones(dim), (np.zeros(dim, dtype=int), diagonal)), shape=(1, dim * dim))


@dataclass(frozen=True)
class DensityMatrixState:
    """Stationary density matrix and its oscillator marginal."""

    density: qutip.Qobj
    rho_phonon: np.ndarray
    phonon_marginal: np.ndarray
    emitter_populations: np.ndarray
    n_bar: float
    residual: float
    tail_mass: float
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def rho(self) -> np.ndarray:
        return self.density.full()


def _steadystate(liouvillian: Liouvillian, method: str) -> qutip.Qobj:
    if method not in STATIONARY_METHODS:
        raise ValueError(f'unknown stationary method {method!r}')
    options = {}
    if method == 'iterative':
        options = {'use_precond': True, 'drop_tol': 1e-8, 'fill_factor': 20, 'tol': 1e-12, 'maxiter': 2000}
    try:
        return qutip.steadystate(liouvillian.generator, method=STATIONARY_METHODS[method], **options)
    except RuntimeError as e:
        raise SingularSystem(f'Stationary density-matrix solve failed: {str(e)}') from e
    except Exception as e:
        # qutip reports iterative breakdown and non-convergence as a bare Exception
        raise ConvergenceError(f'Stationary density-matrix solve did not converge: {str(e)}') from e


def stationary_dm(liouvillian: Liouvillian, method: str = 'direct', tail_mass_limit: float = 1e-6,
                  positivity_tol: float = 1e-8, residual_tol: float = 1e-8) -> DensityMatrixState:
    """
    Stationary density matrix from qutip.steadystate, validated.

    Args:
        liouvillian: Superoperator and dimensions
        method: 'direct' (sparse LU) or 'iterative' (ILU-preconditioned GMRES)
        tail_mass_limit: Largest allowed phonon weight above 0.9 n_max
        positivity_tol: Eigenvalues down to -positivity_tol are clipped
        residual_tol: Allowed max|L vec(rho)| relative to max(1, max|L|)

    Returns:
        DensityMatrixState
    """
    solution = _steadystate(liouvillian, method).full()
    if not np.all(np.isfinite(solution)):
        raise SingularSystem('Stationary density-matrix solve produced non-finite values')

    notes = []
    rho = 0.5 * (solution + solution.conj().T)
    rho = rho / np.trace(rho).real

    eigenvalues, eigenvectors = np.linalg.eigh(rho)
    if eigenvalues.min() < -positivity_tol:
        raise SingularSystem(f'Stationary density matrix has eigenvalue {eigenvalues.min():.3e}')
    if eigenvalues.min() < 0:
        notes.append(f'clipped density-matrix eigenvalues down to {eigenvalues.min():.3e}')
        eigenvalues = np.clip(eigenvalues, 0.0, None)
        rho = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
        rho = rho / np.trace(rho).real

    superop = liouvillian.superoperator
    residual = float(np.abs(superop @ vec(rho)).max())
    scale = max(1.0, float(np.abs(superop.data).max()))
    if residual > residual_tol * scale:
        raise SingularSystem(f'Stationary density-matrix residual {residual:.3e} too large')

    density = qutip.Qobj(rho, dims=[liouvillian.dims, liouvillian.dims])
    rho_phonon = density.ptrace(1).full()
    marginal = np.clip(np.diag(rho_phonon).real, 0.0, None)
    levels = liouvillian.phonon_levels
    n_values = np.arange(levels)
    tail = float(marginal[n_values > 0.9 * (levels - 1)].sum())
    if tail >= tail_mass_limit:
        raise TruncationError(f'Stationary tail mass {tail:.3e} above n > 0.9 n_max={levels - 1}; increase n_max')

    for note in notes:
        logger.info(note)
    return DensityMatrixState(
        density=density,
        rho_phonon=rho_phonon,
        phonon_marginal=marginal,
        emitter_populations=np.real(density.ptrace(0).diag()),
        n_bar=float(n_values @ marginal),
        residual=residual,
        tail_mass=tail,
        notes=tuple(notes),
    )


def bordered_solve(liouvillian: Liouvillian, state: DensityMatrixState, source: np.ndarray) -> np.ndarray:
    """
    Trace-free y with L y = source (source must be trace-free): the group inverse applied to source.

    qutip.pseudo_inverse would build the full d^2 x d^2 inverse; one bordered
    sparse solve [[L, vec(rho)], [Tr, 0]] gives the single column needed.
    """
    dim = liouvillian.hilbert_dim
    column = sp.csc_matrix(vec(state.rho).reshape(-1, 1))
    system = sp.bmat([[liouvillian.superoperator, column], [trace_row(dim), None]], format='csc')
    rhs = np.concatenate([source, [0.0]])
    try:
        solution = spla.spsolve(system.astype(complex), rhs.astype(complex))
    except RuntimeError as e:
        raise SingularSystem(f'Bordered Liouvillian solve failed: {str(e)}') from e
    if not np.all(np.isfinite(solution)):
        raise SingularSystem('Bordered Liouvillian solve produced non-finite values')
    return solution[:-1]


def as_operator(vector: np.ndarray, liouvillian: Liouvillian) -> qutip.Qobj:
    """Operator on the emitter-oscillator space from its column-stacked vector."""
    return qutip.Qobj(unvec(vector), dims=[liouvillian.dims, liouvillian.dims])


def collapse_list(entries: List[Tuple[float, Optional[qutip.Qobj]]]) -> List[Tuple[float, qutip.Qobj]]:
    """Drop channels with zero rate or no operator."""
    return [(rate, op) for rate, op in entries if op is not None and rate > 0]
