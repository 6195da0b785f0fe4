"""
Utility module for formatting numbers and key=value reports.
This module provides a consistent interface for values written to reports,
manifests and the console.
"""

from typing import Any, Dict, Optional
import math

import numpy as np
import pandas as pd

# Significant digits that round-trip a float64 exactly
ROUND_TRIP_DIGITS = 17


def format_number(value: Any, digits: int = ROUND_TRIP_DIGITS) -> str:
    """
    Central function for formatting report values.

    Args:
        value: Number, bool or string
        digits: Significant digits for floats (17 round-trips exactly)

    Returns:
        'true'/'false' for booleans, plain integers, %g floats, 'nan' for
        missing values, str() for anything else
    """
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return 'nan'
        return f"{float(value):.{digits}g}"
    if value is None or (not isinstance(value, str) and pd.isna(value)):
        return 'nan'
    return str(value)


def format_error(value: Any) -> str:
    """Short scientific form for console summaries (e.g. 3.2e-11)."""
    number = parse_number(value)
    if number is None or math.isnan(number):
        return 'N/A'
    return f"{number:.2e}"


def format_report(values: Dict[str, Any], digits: int = ROUND_TRIP_DIGITS) -> str:
    """Render key=value lines in insertion order."""
    return ''.join(f"{key}={format_number(value, digits)}\n" for key, value in values.items())


def parse_number(value: Any) -> Optional[float]:
    """
    Central parsing function for converting report strings to numbers.

    Returns:
        Parsed float value or None if parsing fails
    """
    if value is None:
        return None

    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        return float(value)

    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            return None

    return None


def parse_bool(value: Any) -> Optional[bool]:
    """Parse 'true'/'false'/'1'/'0' (case-insensitive)."""
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ('true', '1', 'yes', 'on'):
            return True
        if lowered in ('false', '0', 'no', 'off'):
            return False
    return None
