"""
Error types for the sideband simulation stack.

Numerical kernels raise these; solver stages and the sweep runner catch
``SimulationError`` and turn it into a status dict or an ``error`` column.
"""


class SimulationError(Exception):
    """Base class for every failure raised by the simulation kernels."""


class ConfigError(SimulationError):
    """Parameter document could not be read or validated."""


class TruncationError(SimulationError):
    """Fock truncation too small for the requested state or displacement."""


class FranckCondonOverflow(SimulationError):
    """Franck-Condon intermediate left the representable floating-point range."""


class StateIndexError(SimulationError, IndexError):
    """Dressed-state or phonon index outside the truncated basis."""


class DegenerateDetuning(SimulationError):
    """Doublet splitting undefined (zero detuning and zero drive)."""


class SingularSystem(SimulationError):
    """Stationary or complement linear solve failed."""


class BranchAmbiguity(SimulationError):
    """Leading eigenvalue of the tilted generator is not isolated."""


class DivisionGuard(SimulationError):
    """Denominator of a ratio observable vanished."""


class ConvergenceError(SimulationError):
    """An integral or iterative solve did not reach its tolerance."""


class DimensionError(SimulationError):
    """Superoperator larger than the configured memory budget."""


class ExtentError(SimulationError):
    """Phase-space grid does not contain the Wigner function."""


class BlockadeViolation(SimulationError):
    """Two-photon cavity population too large for the doublet mapping."""
