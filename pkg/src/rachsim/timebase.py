"""Clock and numerology arithmetic.

The simulator runs on an integer tick lattice of 1/56 ms at the reference
frame configuration (15 kHz subcarriers, 7 symbols per slot). Every supported
numerology scales the reference frame by an exact rational factor whose
product with 56 is an integer, so scaled durations are always exact tick
counts and event ordering never depends on floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

TICKS_PER_MS = 56

SUBCARRIER_SPACINGS_KHZ = (15, 30, 60, 120)
SYMBOLS_PER_SLOT = (7, 4, 2)


@dataclass(frozen=True)
class Numerology:
    """Frame configuration: subcarrier spacing and slot length."""

    subcarrier_spacing_khz: int = 15
    symbols_per_slot: int = 7

    def __post_init__(self) -> None:
        if self.subcarrier_spacing_khz not in SUBCARRIER_SPACINGS_KHZ:
            raise ValueError(
                f"subcarrier_spacing_khz must be one of "
                f"{SUBCARRIER_SPACINGS_KHZ}, got {self.subcarrier_spacing_khz}"
            )
        if self.symbols_per_slot not in SYMBOLS_PER_SLOT:
            raise ValueError(
                f"symbols_per_slot must be one of {SYMBOLS_PER_SLOT}, "
                f"got {self.symbols_per_slot}"
            )


BASELINE = Numerology(15, 7)


def time_scale_fraction(numerology: Numerology) -> Fraction:
    """Exact duration scale factor relative to the reference configuration."""
    return Fraction(15, numerology.subcarrier_spacing_khz) * Fraction(
        numerology.symbols_per_slot, 7
    )


def time_scale(numerology: Numerology) -> float:
    """Duration scale factor as a float; 1.0 at (15 kHz, 7 sym)."""
    return float(time_scale_fraction(numerology))


@dataclass(frozen=True)
class TimingParams:
    """Control-plane durations in ms (reference numerology unless scaled)."""

    t_msg1_ms: float = 1.0
    t_msg2_ms: float = 3.0
    t_msg3_ms: float = 5.0
    t_msg4_ms: float = 5.0
    ra_period_ms: float = 5.0
    rar_window_ms: float = 5.0
    bi_max_ms: float = 20.0
    contention_resolution_timer_ms: float = 48.0
    sib2_period_ms: float = 80.0

    def __post_init__(self) -> None:
        for name in (
            "t_msg1_ms",
            "t_msg2_ms",
            "t_msg3_ms",
            "t_msg4_ms",
            "ra_period_ms",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in (
            "rar_window_ms",
            "bi_max_ms",
            "contention_resolution_timer_ms",
            "sib2_period_ms",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


DEFAULT_TIMING = TimingParams()


def ms_to_ticks(ms: float, scale: Fraction = Fraction(1)) -> int:
    """Quantize a duration to the tick lattice, rounding half up.

    The defaults (whole reference ms, scale with 56*scale integral) quantize
    with zero error.
    """
    exact = Fraction(ms).limit_denominator(10**9) * TICKS_PER_MS * scale
    return int(exact + Fraction(1, 2)) if exact >= 0 else -int(
        -exact + Fraction(1, 2)
    )


def ticks_to_ms(ticks: int, scale: Fraction = Fraction(1)) -> float:
    """Tick count back to ms under the given scale factor."""
    return float(Fraction(ticks) * scale / TICKS_PER_MS)


def scale_timing(base: TimingParams, numerology: Numerology) -> TimingParams:
    """Scale every duration by the numerology factor, tick-quantized.

    Ordering of durations is preserved because scaling is a single positive
    factor and the defaults quantize exactly.
    """
    s = time_scale_fraction(numerology)

    def scaled(ms: float) -> float:
        return ticks_to_ms(ms_to_ticks(ms, s))

    return TimingParams(
        t_msg1_ms=scaled(base.t_msg1_ms),
        t_msg2_ms=scaled(base.t_msg2_ms),
        t_msg3_ms=scaled(base.t_msg3_ms),
        t_msg4_ms=scaled(base.t_msg4_ms),
        ra_period_ms=scaled(base.ra_period_ms),
        rar_window_ms=scaled(base.rar_window_ms),
        bi_max_ms=scaled(base.bi_max_ms),
        contention_resolution_timer_ms=scaled(
            base.contention_resolution_timer_ms
        ),
        sib2_period_ms=scaled(base.sib2_period_ms),
    )
