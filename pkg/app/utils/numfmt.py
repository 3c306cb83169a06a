# app/utils/numfmt.py
import math
from typing import Optional

import numpy as np

SIGNIFICANT_DIGITS = 9


def fmt(value: Optional[float]) -> str:
    """Decimal notation with up to 9 significant digits; '' for None."""
    if value is None:
        return ""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot write non-finite value {value}")
    if value == 0.0:
        return "0"
    text = np.format_float_positional(
        value, precision=SIGNIFICANT_DIGITS, unique=False, fractional=False, trim="-"
    )
    return "0" if text in ("-0", "0") else text


def fmt_azimuth(value: float) -> str:
    """Like fmt, but never rounds up onto +180, which reads back as -180."""
    text = fmt(value)
    if float(text) >= 180.0:
        text = np.format_float_positional(float(value), unique=True, trim="-")
    return text


def parse_optional(text: str) -> Optional[float]:
    text = text.strip()
    return None if text == "" else float(text)
