import logging
import re
from fractions import Fraction

from .errors import DistributionError

_RATIONAL_RE = re.compile(r"^\s*(\d+)(?:\s*/\s*(\d+))?\s*$")


def setup_logging(level="INFO"):
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
    )


def parse_rational(text):
    """Parse a "num/den" (or bare integer) string into a Fraction.

    Decimal and exponent literals are rejected: thresholds and transition
    probabilities must be exact.
    """
    if isinstance(text, bool):
        raise DistributionError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise DistributionError(f"not a rational: {text!r} (use a \"num/den\" string)")
    match = _RATIONAL_RE.match(text)
    if match is None:
        raise DistributionError(f"not a rational: {text!r} (use a \"num/den\" string)")
    num, den = match.group(1), match.group(2)
    if den is not None and int(den) == 0:
        raise DistributionError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_rational(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
