"""
Physical parameter models.

All frequencies and rates are in units of the mechanical frequency
(omega_m = 1, hbar = 1). Documents are JSON objects whose keys match the
field names exactly; missing keys take the defaults below (the Fig.-2 set).
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from tools.errors import ConfigError

logger = logging.getLogger(__name__)

RESOLVED_SIDEBAND_LIMIT = 0.1
BLOCKADE_RATIO = 5.0

Quantity = Literal['Pn', 'nbar', 'flux', 'fano', 'snn', 'proxy', 'wigner', 'eta', 'g2']
PAULI_QUANTITIES = frozenset({'Pn', 'nbar', 'flux', 'fano', 'snn', 'proxy', 'wigner', 'eta'})
LINDBLAD_QUANTITIES = frozenset({'Pn', 'nbar', 'flux', 'fano', 'wigner', 'eta', 'g2'})


class SystemParams(BaseModel):
    """Driven emitter coupled to one mechanical mode."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    omega_m: float = 1.0
    g0: float = Field(0.1, ge=0)
    Gamma: float = Field(0.01, ge=0)
    gamma: float = Field(1e-4, ge=0)
    gamma_phi: float = Field(1e-4, ge=0)
    epsilon: float = 0.01
    Omega: float = Field(1e-3, ge=0)
    kT: float = Field(1.0, ge=0)
    n_max: int = Field(150, ge=2)
    fc_displacement_multiplier: float = Field(2.0, ge=0)
    jump_displacement_multiplier: float = Field(1.0, ge=0)
    tail_tol: float = Field(1e-8, gt=0, lt=1)

    @field_validator('omega_m')
    @classmethod
    def _reference_frequency(cls, value: float) -> float:
        if value != 1.0:
            raise ValueError('omega_m is the unit of frequency and must be 1')
        return value

    @property
    def fc_lambda(self) -> float:
        """Displacement entering the Franck-Condon factors of the rates."""
        return self.fc_displacement_multiplier * self.g0 / self.omega_m

    @property
    def jump_lambda(self) -> float:
        """Displacement carried by the emission jump of the master equation."""
        return self.jump_displacement_multiplier * self.g0 / self.omega_m

    @property
    def validity_warnings(self) -> Tuple[str, ...]:
        """Resolved-sideband validity flags (never errors)."""
        warnings = []
        if self.Gamma >= RESOLVED_SIDEBAND_LIMIT * self.omega_m:
            warnings.append(f'Gamma={self.Gamma} is not << omega_m (resolved-sideband regime)')
        if self.gamma >= RESOLVED_SIDEBAND_LIMIT * self.omega_m:
            warnings.append(f'gamma={self.gamma} is not << omega_m (resolved-sideband regime)')
        return tuple(warnings)

    def updated(self, **changes: Any) -> 'SystemParams':
        """Validated copy with some fields replaced."""
        return type(self).model_validate({**self.model_dump(), **changes})


class CavityParams(BaseModel):
    """Driven optical cavity with radiation-pressure coupling to the oscillator."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    g_O: float = Field(0.8, ge=0)
    Omega: float = Field(0.1, ge=0)
    kappa: float = Field(0.01, ge=0)
    gamma: float = Field(1e-4, ge=0)
    epsilon: float = 0.05
    kT: float = Field(1.0, ge=0)
    n_max: int = Field(50, ge=2)
    tail_tol: float = Field(1e-8, gt=0, lt=1)

    @property
    def kerr(self) -> float:
        """Kerr shift K = g_O^2 / omega_m."""
        return self.g_O ** 2

    @property
    def validity_warnings(self) -> Tuple[str, ...]:
        """Photon-blockade and resolved-sideband flags."""
        warnings = []
        if not self.kerr > BLOCKADE_RATIO * self.kappa:
            warnings.append(f'K={self.kerr:.4g} is not > {BLOCKADE_RATIO:g} kappa (no photon blockade)')
        if self.kappa >= RESOLVED_SIDEBAND_LIMIT:
            warnings.append(f'kappa={self.kappa} is not << omega_m (resolved-sideband regime)')
        return tuple(warnings)

    def updated(self, **changes: Any) -> 'CavityParams':
        """Validated copy with some fields replaced."""
        return type(self).model_validate({**self.model_dump(), **changes})


class SweepRange(BaseModel):
    """One sweep axis."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    start: float
    stop: float
    count: int = Field(ge=2)
    spacing: Literal['linear', 'log'] = 'linear'

    @model_validator(mode='after')
    def _ordered(self) -> 'SweepRange':
        if not self.start < self.stop:
            raise ValueError('sweep start must be < stop')
        if self.spacing == 'log' and self.start <= 0:
            raise ValueError('log spacing requires a positive start')
        return self

    def values(self) -> np.ndarray:
        if self.spacing == 'log':
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


class SweepSpec(BaseModel):
    """Parameter scan over one or two variables."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    variable: Literal['Omega', 'g0', 'epsilon']
    range: SweepRange
    variable2: Optional[Literal['Omega', 'g0', 'epsilon']] = None
    range2: Optional[SweepRange] = None
    system: Optional[SystemParams] = None
    cavity: Optional[CavityParams] = None
    quantities: Tuple[Quantity, ...] = ('nbar',)
    solver: Literal['pauli', 'lindblad'] = 'pauli'

    @model_validator(mode='after')
    def _consistent(self) -> 'SweepSpec':
        if (self.system is None) == (self.cavity is None):
            raise ValueError('exactly one of system or cavity must be given')
        if (self.variable2 is None) != (self.range2 is None):
            raise ValueError('variable2 and range2 go together')
        if self.variable2 is not None and self.variable2 == self.variable:
            raise ValueError('variable2 must differ from variable')
        allowed = PAULI_QUANTITIES if self.solver == 'pauli' else LINDBLAD_QUANTITIES
        invalid = sorted(set(self.quantities) - allowed)
        if invalid:
            raise ValueError(f'quantities {invalid} are not available with the {self.solver} solver')
        return self

    @property
    def base(self) -> Union[SystemParams, CavityParams]:
        return self.system if self.system is not None else self.cavity

    def points(self) -> List[Dict[str, float]]:
        """Sweep points in row-major order (variable outer, variable2 inner)."""
        outer = [float(v) for v in self.range.values()]
        if self.variable2 is None:
            return [{self.variable: v} for v in outer]
        inner = [float(v) for v in self.range2.values()]
        return [{self.variable: v, self.variable2: w} for v in outer for w in inner]

    def point_params(self, point: Dict[str, float]) -> Union[SystemParams, CavityParams]:
        """Parameters of one sweep point."""
        if self.cavity is not None:
            renamed = {('g_O' if key == 'g0' else key): value for key, value in point.items()}
            return self.cavity.updated(**renamed)
        return self.system.updated(**point)


def read_config(path: Optional[Union[str, Path]]) -> Dict[str, Any]:
    """Read a JSON parameter document; an absent path means an empty document."""
    if path is None:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            document = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f'Cannot read config {path}: {str(e)}') from e
    if not isinstance(document, dict):
        raise ConfigError(f'Config {path} must contain a JSON object')
    return document


def _validate(model, document: Dict[str, Any]):
    try:
        return model.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f'Invalid {model.__name__}: {str(e)}') from e


def load_system_params(document: Dict[str, Any], seed: Optional[Dict[str, Any]] = None) -> SystemParams:
    """Build SystemParams from a document layered over an optional seed."""
    params = _validate(SystemParams, {**(seed or {}), **document})
    for warning in params.validity_warnings:
        logger.warning(warning)
    return params


def load_cavity_params(document: Dict[str, Any], seed: Optional[Dict[str, Any]] = None) -> CavityParams:
    """Build CavityParams from a document layered over an optional seed."""
    params = _validate(CavityParams, {**(seed or {}), **document})
    for warning in params.validity_warnings:
        logger.warning(warning)
    return params


def load_sweep_spec(document: Dict[str, Any], seed: Optional[Dict[str, Any]] = None) -> SweepSpec:
    """Build a SweepSpec; a seed fills the system (or cavity) block."""
    document = dict(document)
    if seed:
        block = 'cavity' if 'cavity' in document or 'g_O' in seed else 'system'
        document[block] = {**seed, **document.get(block, {})}
    return _validate(SweepSpec, document)
