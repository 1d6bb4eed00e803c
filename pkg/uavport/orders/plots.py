"""
Sweep plots

Four panels over fleet size, one line per scheme: delivered orders,
score sum, AGV busy ratio and staff busy ratio.
"""

import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

PANELS = (
    ('delivered_mean', 'delivered_std', 'Delivered orders'),
    ('score_sum_mean', 'score_sum_std', 'Score sum'),
    ('agv_busy_mean', None, 'AGV busy ratio'),
    ('staff_busy_mean', None, 'Staff busy ratio'),
)


def plot_summary(summary: pd.DataFrame, path: Union[str, Path]) -> Path:
    """
    Render a sweep summary to an image file

    Args:
        summary: Rows with SUMMARY_COLUMNS
        path: Output image; the suffix picks the format

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(2, 2, figsize=(11, 8), sharex=True)
    for ax, (column, spread, title) in zip(axes.flat, PANELS):
        for scheme, rows in summary.sort_values('n_uavs').groupby('scheme', sort=True):
            if spread is not None:
                ax.errorbar(rows['n_uavs'], rows[column], yerr=rows[spread], marker='o',
                            capsize=3, label=scheme)
            else:
                ax.plot(rows['n_uavs'], rows[column], marker='o', label=scheme)
        ax.set_title(title)
        ax.set_xlabel('UAVs')
        ax.grid(True, alpha=0.3)
    axes.flat[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote sweep plot %s", path)
    return path
