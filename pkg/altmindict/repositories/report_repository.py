"""
Repository for experiment outputs: CSV tables and key=value reports.
"""

from pathlib import Path
from typing import Dict, Union
import logging

import pandas as pd

from altmindict.utils.formatting import format_report

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# repr-exact floats keep reruns byte-identical
CSV_FLOAT_FORMAT = '%.17g'


class ReportRepository:
    """Writes CSV tables and key=value reports"""

    @staticmethod
    def save_table(path: PathLike, frame: pd.DataFrame) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    @staticmethod
    def save_report(path: PathLike, values: Dict[str, object]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_report(values))
        logger.debug(f"Wrote report with {len(values)} keys to {path}")
        return path
