"""
Input validation utilities.

Centralized validation logic with clear, named-field error messages.
Philosophy: Simple, clear, and reusable validation functions.
"""

from typing import Any, Optional, List
import math
import logging

from altmindict.exceptions import ValidationError

logger = logging.getLogger(__name__)


class ValidationResult:
    """Result of a validation check"""

    def __init__(self, is_valid: bool, error: Optional[str] = None, field: Optional[str] = None):
        self.is_valid = is_valid
        self.error = error
        self.field = field

    def __bool__(self):
        return self.is_valid


def validate_number(
    value: Any,
    field_name: str,
    min_value: Optional[float] = None,
    max_value: Optional[float] = None,
    allow_zero: bool = True,
    exclusive_min: bool = False
) -> ValidationResult:
    """
    Validate that value is a finite number.

    Args:
        value: Value to validate
        field_name: Field name for error messages
        min_value: Minimum allowed value (inclusive unless exclusive_min)
        max_value: Maximum allowed value (inclusive)
        allow_zero: Whether zero is allowed
        exclusive_min: Treat min_value as a strict bound

    Returns:
        ValidationResult
    """
    try:
        num = float(value)
    except (ValueError, TypeError):
        return ValidationResult(False, f"{field_name} must be a number", field_name)

    if not math.isfinite(num):
        return ValidationResult(False, f"{field_name} must be finite", field_name)

    if not allow_zero and num == 0:
        return ValidationResult(False, f"{field_name} cannot be zero", field_name)

    if min_value is not None:
        if exclusive_min and num <= min_value:
            return ValidationResult(False, f"{field_name} must be greater than {min_value}", field_name)
        if not exclusive_min and num < min_value:
            return ValidationResult(False, f"{field_name} must be at least {min_value}", field_name)

    if max_value is not None and num > max_value:
        return ValidationResult(False, f"{field_name} must be at most {max_value}", field_name)

    return ValidationResult(True, field=field_name)


def validate_integer(
    value: Any,
    field_name: str,
    min_value: Optional[int] = None,
    max_value: Optional[int] = None
) -> ValidationResult:
    """Validate that value is an integer (bools rejected) within bounds."""
    if isinstance(value, bool):
        return ValidationResult(False, f"{field_name} must be an integer", field_name)
    try:
        num = int(value)
    except (ValueError, TypeError, OverflowError):
        return ValidationResult(False, f"{field_name} must be an integer", field_name)
    if isinstance(value, float) and value != num:
        return ValidationResult(False, f"{field_name} must be an integer", field_name)

    # Compare as int so 64-bit bounds stay exact
    if min_value is not None and num < min_value:
        return ValidationResult(False, f"{field_name} must be at least {min_value}", field_name)
    if max_value is not None and num > max_value:
        return ValidationResult(False, f"{field_name} must be at most {max_value}", field_name)
    return ValidationResult(True, field=field_name)


def validate_choice(
    value: Any,
    field_name: str,
    choices: List[Any]
) -> ValidationResult:
    """
    Validate value is in allowed choices.

    Args:
        value: Value to validate
        field_name: Field name for error messages
        choices: List of allowed values

    Returns:
        ValidationResult
    """
    if value not in choices:
        choices_str = ', '.join(str(c) for c in choices)
        return ValidationResult(
            False,
            f"{field_name} must be one of: {choices_str}",
            field_name
        )

    return ValidationResult(True, field=field_name)


def validate_non_empty(values: Any, field_name: str) -> ValidationResult:
    """Validate that a list-like value has at least one element."""
    try:
        size = len(values)
    except TypeError:
        return ValidationResult(False, f"{field_name} must be a list", field_name)
    if size == 0:
        return ValidationResult(False, f"{field_name} must not be empty", field_name)
    return ValidationResult(True, field=field_name)


def raise_if_invalid(*results: ValidationResult) -> None:
    """Raise ValidationError for the first failed result."""
    for result in results:
        if not result:
            logger.debug(f"Validation failed: {result.error}")
            raise ValidationError(result.field or 'value', result.error)


# Composite validators for common use cases

def validate_sparsity(s: Any, d: int, r: int) -> ValidationResult:
    """Validate sparsity s against 2s ≤ r and s ≤ d."""
    result = validate_integer(s, "s", min_value=1)
    if not result:
        return result
    if 2 * int(s) > r:
        return ValidationResult(False, f"s must satisfy 2s <= r (got s={s}, r={r})", "s")
    if int(s) > d:
        return ValidationResult(False, f"s must satisfy s <= d (got s={s}, d={d})", "s")
    return ValidationResult(True, field="s")


def validate_seed(seed: Any, field_name: str = "seed") -> ValidationResult:
    """Validate a 64-bit unsigned seed."""
    return validate_integer(seed, field_name, min_value=0, max_value=2**64 - 1)


def validate_probability(value: Any, field_name: str) -> ValidationResult:
    """Validate a value in [0, 1]"""
    return validate_number(value, field_name, min_value=0.0, max_value=1.0)
