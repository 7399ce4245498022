"""Exact rational numbers for resource arithmetic.

All quantities in the model (memory, CPU load, execution time, capacities)
are `fractions.Fraction` values.  JSON files carry them as strings so no
precision is lost on a round trip: either a plain decimal such as "12.5"
or, when the value has no terminating decimal form, "p/q".  JSON floats
are rejected because they are already approximations by the time the
parser sees them; JSON integers are accepted as-is.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["parse_number", "format_number", "parse_count"]


def parse_number(raw: object) -> Fraction:
    """Turn a JSON scalar into an exact Fraction.

    Accepts int, or str in any form Fraction understands ("7", "0.25",
    "-3/8", "2e3").  Rejects float and bool.
    """
    if isinstance(raw, bool):
        raise ValueError("expected a number, got a boolean")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a valid number string: {raw!r}") from exc
    if isinstance(raw, float):
        raise ValueError(
            f"floats are not accepted (got {raw!r}); write the value as a string"
        )
    raise ValueError(f"expected a number, got {type(raw).__name__}")


def parse_count(raw: object) -> int:
    """Parse a non-negative integer field (thread counts and the like)."""
    value = parse_number(raw)
    if value.denominator != 1:
        raise ValueError(f"expected an integer, got {raw!r}")
    return value.numerator


def format_number(value: Fraction) -> str:
    """Exact string form: terminating decimal when one exists, else "p/q"."""
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num)
    twos = 0
    rest = den
    while rest % 2 == 0:
        rest //= 2
        twos += 1
    fives = 0
    while rest % 5 == 0:
        rest //= 5
        fives += 1
    if rest != 1:
        return f"{num}/{den}"
    shift = max(twos, fives)
    scaled = num * 10**shift // den
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(shift + 1, "0")
    whole, frac = digits[:-shift], digits[-shift:]
    return f"{sign}{whole}.{frac.rstrip('0')}"
