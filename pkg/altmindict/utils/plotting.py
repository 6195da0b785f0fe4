"""
SVG charts for experiment outputs.

Uses the non-interactive Agg backend; SVG metadata carries no date and a
fixed hash salt, so reruns produce byte-identical files.
"""

from pathlib import Path
from typing import Union
import logging

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SVG_HASH_SALT = 'altmindict'
# Log-scale plots cannot show exact zeros
LOG_FLOOR = 1e-18


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({'svg.hashsalt': SVG_HASH_SALT}):
        fig.savefig(path, format='svg', bbox_inches='tight', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote chart {path}")
    return path


def plot_error_trace(trace: pd.DataFrame, path: PathLike, initial_error: float = float('nan')) -> Path:
    """Log-scale dictionary error against iteration."""
    fig, ax = plt.subplots(figsize=(6, 4))
    t = trace['t'].to_numpy() + 1
    errors = np.maximum(trace['dict_error'].to_numpy(dtype=float), LOG_FLOOR)
    if not np.isnan(initial_error):
        t = np.concatenate([[0], t])
        errors = np.concatenate([[max(initial_error, LOG_FLOOR)], errors])
    ax.semilogy(t, errors, marker='o', markersize=3)
    ax.set_xlabel('iteration')
    ax.set_ylabel('dictionary error')
    ax.grid(True, which='both', alpha=0.3)
    return _save(fig, path)


def plot_compare(table: pd.DataFrame, path: PathLike) -> Path:
    """Initial and final error against the number of samples."""
    fig, ax = plt.subplots(figsize=(6, 4))
    n = table['n'].to_numpy()
    ax.semilogy(n, np.maximum(table['init_error'].to_numpy(dtype=float), LOG_FLOOR),
                marker='s', label='initialization')
    ax.semilogy(n, np.maximum(table['final_error'].to_numpy(dtype=float), LOG_FLOOR),
                marker='o', label='alternating minimization')
    ax.set_xlabel('n')
    ax.set_ylabel('dictionary error')
    ax.legend()
    ax.grid(True, which='both', alpha=0.3)
    return _save(fig, path)


def plot_sweep(table: pd.DataFrame, path: PathLike) -> Path:
    """Success probability against n/r, one line per r."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for r, cell in table.groupby('r', sort=True):
        cell = cell.sort_values('n_over_r')
        ax.plot(cell['n_over_r'], cell['prob'], marker='o', label=f"r={r}")
    ax.set_xlabel('n / r')
    ax.set_ylabel('probability of success')
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
