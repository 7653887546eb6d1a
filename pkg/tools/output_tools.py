"""
Output Tools

Plot-ready data files. Every CSV starts with the schema comment line and
writes numbers with nine significant digits; JSON documents are indented and
keep insertion order so identical runs produce identical bytes.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from config.settings import Settings
from tools.wigner_tools import WignerGrid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and nested containers to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if np.isfinite(number) else None
    return value


def write_table(frame: pd.DataFrame, path: PathLike, settings: Optional[Settings] = None) -> Path:
    """CSV with the schema header line and the configured float format."""
    settings = settings or Settings()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(settings.csv_schema_header + '\n')
        frame.to_csv(handle, index=False, float_format=settings.csv_float_format, lineterminator='\n')
    logger.debug(f'Wrote {len(frame)} rows to {path}')
    return path


def write_pn(P_n: np.ndarray, path: PathLike, settings: Optional[Settings] = None) -> Path:
    """Phonon distribution as (n, P_n)."""
    populations = np.asarray(P_n, dtype=float)
    return write_table(pd.DataFrame({'n': np.arange(len(populations)), 'P_n': populations}), path, settings)


def write_g2(times: np.ndarray, g2: np.ndarray, path: PathLike, settings: Optional[Settings] = None) -> Path:
    """Correlation function as (t, g2)."""
    return write_table(pd.DataFrame({'t': np.asarray(times), 'g2': np.asarray(g2)}), path, settings)


def write_json(document: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(to_jsonable(document), handle, indent=2)
        handle.write('\n')
    return path


def write_wigner(grid: WignerGrid, eta: float, eta_error: float, path: PathLike,
                 settings: Optional[Settings] = None) -> Path:
    """
    Wigner grid as long-format (x, p, W) CSV plus a JSON header next to it.

    Args:
        grid: Evaluated grid
        eta: Its negativity
        eta_error: Half-resolution error estimate
        path: CSV path; the header goes to the same stem with a .json suffix

    Returns:
        Path of the CSV
    """
    X, P = np.meshgrid(grid.x, grid.p, indexing='ij')
    frame = pd.DataFrame({'x': X.ravel(), 'p': P.ravel(), 'W': grid.W.ravel()})
    csv_path = write_table(frame, path, settings)
    write_json({
        'source': grid.source,
        'extent': grid.extent,
        'resolution': grid.resolution,
        'angle': grid.angle,
        'normalization': grid.normalization,
        'eta': eta,
        'eta_error': eta_error,
    }, csv_path.with_suffix('.json'))
    return csv_path


def read_table(path: PathLike) -> pd.DataFrame:
    """Read a CSV written by write_table (the schema line is a comment)."""
    return pd.read_csv(path, comment='#')
