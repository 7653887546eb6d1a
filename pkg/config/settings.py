"""Runtime settings for the sideband simulation lab."""

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


@dataclass
class Settings:
    """Configuration settings read from the environment (and a local .env)."""

    # Output and execution
    output_dir: str = os.getenv('SIDEBAND_OUTPUT_DIR', 'output')
    workers: int = int(os.getenv('SIDEBAND_WORKERS', '1'))
    log_level: str = os.getenv('LOG_LEVEL', 'INFO')

    # Truncation and solver tolerances
    tail_mass_limit: float = float(os.getenv('SIDEBAND_TAIL_MASS_LIMIT', '1e-6'))
    clip_tol: float = 1e-12
    residual_tol: float = 1e-10
    p_max: int = 5

    # Full master equation budget (Hilbert dimension d, superoperator d^2)
    max_hilbert_dim: int = int(os.getenv('SIDEBAND_MAX_HILBERT_DIM', '256'))
    fc_drop_tol: float = 1e-12
    lindblad_method: str = os.getenv('SIDEBAND_LINDBLAD_METHOD', 'direct')

    # Wigner grid defaults
    wigner_extent: float = 6.0
    wigner_resolution: int = 241

    # Output schema
    csv_schema_version: int = 1
    csv_float_format: str = '%.9g'

    def __post_init__(self):
        """Normalize derived fields."""
        self.workers = max(1, int(self.workers))
        self.log_level = str(self.log_level).upper()

    @property
    def output_path(self) -> Path:
        """Output directory as a Path."""
        return Path(self.output_dir)

    @property
    def csv_schema_header(self) -> str:
        """Header comment written as the first line of every CSV."""
        return f'# schema: sideband-phonon-lab v{self.csv_schema_version}'
