"""Exact time arithmetic.

All timestamps and durations are stored as integer ticks.  One time unit is
2000 ticks: input files carry times with at most millisecond-style precision
(1/1000 of a unit), and the extra factor of two keeps midpoints between any
two event times integral.  Verdict-affecting comparisons therefore never touch
floating point.
"""

from __future__ import annotations

TICKS_PER_UNIT = 2000

# Finest precision accepted in input files: 1/1000 of a time unit.
_INPUT_DECIMALS = 3
_TICKS_PER_INPUT_STEP = TICKS_PER_UNIT // 10**_INPUT_DECIMALS


class TimeFormatError(ValueError):
    """Raised when a time string cannot be parsed exactly."""


def parse_time(value) -> int:
    """Parse a time value (int, decimal string, or integral float) to ticks.

    Strings may carry up to three decimal places; anything finer is rejected
    rather than rounded.
    """
    if isinstance(value, bool):
        raise TimeFormatError(f"not a time value: {value!r}")
    if isinstance(value, int):
        return value * TICKS_PER_UNIT
    if isinstance(value, float):
        if value != int(value):
            raise TimeFormatError(
                f"non-integral float {value!r}: write fractional times as strings"
            )
        return int(value) * TICKS_PER_UNIT
    if not isinstance(value, str):
        raise TimeFormatError(f"not a time value: {value!r}")
    text = value.strip()
    if not text:
        raise TimeFormatError("empty time string")
    negative = text.startswith("-")
    if negative:
        text = text[1:]
    if text.count(".") > 1 or not text.replace(".", "").isdigit():
        raise TimeFormatError(f"malformed time string: {value!r}")
    whole, _, frac = text.partition(".")
    if len(frac) > _INPUT_DECIMALS:
        raise TimeFormatError(
            f"time {value!r} exceeds the supported 1/{10**_INPUT_DECIMALS} precision"
        )
    ticks = int(whole or "0") * TICKS_PER_UNIT
    if frac:
        ticks += int(frac) * TICKS_PER_UNIT // 10 ** len(frac)
    return -ticks if negative else ticks


def format_time(ticks: int) -> str:
    """Render ticks as the shortest exact decimal string."""
    sign = "-" if ticks < 0 else ""
    ticks = abs(ticks)
    whole, rem = divmod(ticks, TICKS_PER_UNIT)
    if rem == 0:
        return f"{sign}{whole}"
    # 1/2000 has a terminating 4-digit decimal expansion.
    frac = rem * 10**4 // TICKS_PER_UNIT
    text = f"{frac:04d}".rstrip("0")
    return f"{sign}{whole}.{text}"


def units(n: int) -> int:
    """Whole time units expressed in ticks."""
    return n * TICKS_PER_UNIT
