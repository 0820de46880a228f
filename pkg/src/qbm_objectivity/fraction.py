"""Fractional frequency relations and the non-objectivity time lattice.

Times on the lattice are kept exact as integer multiples of pi/Omega; floats
appear only in the final conversion.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional


class ParityClass(enum.Enum):
    EVEN = "EvenClass"
    ODD_ODD = "OddOdd"

    def __str__(self):
        return self.value


class NonPositiveInput(ValueError):
    pass


@dataclass(frozen=True)
class ReducedFraction:
    """omega / Omega = num / den in lowest terms."""
    num: int
    den: int

    def __post_init__(self):
        if self.num <= 0 or self.den <= 0:
            raise NonPositiveInput(f"fraction entries must be positive: {self.num}/{self.den}")
        if math.gcd(self.num, self.den) != 1:
            raise ValueError(f"{self.num}/{self.den} is not reduced")

    @property
    def parity_class(self) -> ParityClass:
        if self.num % 2 and self.den % 2:
            return ParityClass.ODD_ODD
        return ParityClass.EVEN

    @property
    def lattice_units(self) -> int:
        """t_min in units of pi/Omega."""
        if self.parity_class is ParityClass.ODD_ODD:
            return self.den
        return 2 * self.den

    def __float__(self):
        return self.num / self.den

    def __str__(self):
        return f"{self.num}/{self.den}"


@dataclass(frozen=True)
class FrequencyRelation:
    fraction: ReducedFraction
    omega_big: float

    @property
    def t_min(self) -> float:
        return t_min(self.omega_big, self.fraction)

    def recurrence(self) -> Iterator[float]:
        """Lazily enumerate p * t_min for p = 1, 2, ..."""
        k = self.fraction.lattice_units
        for p in itertools.count(1):
            yield p * k * math.pi / self.omega_big


def reduce_ratio(omega_num: int, omega_den: int) -> ReducedFraction:
    """Reduce omega / Omega given as two positive integers."""
    for v in (omega_num, omega_den):
        if not isinstance(v, int) or isinstance(v, bool):
            raise TypeError(f"expected an integer, got {v!r}")
        if v <= 0:
            raise NonPositiveInput(f"frequencies must be positive, got {v}")
    g = math.gcd(omega_num, omega_den)
    return ReducedFraction(omega_num // g, omega_den // g)


def convergents(x: float, max_terms: int = 64) -> Iterator[tuple[int, int]]:
    """Continued-fraction convergents p/q of a positive real."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    for _ in range(max_terms):
        a = math.floor(x)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
        rem = x - a
        if rem < 1e-15:
            return
        x = 1.0 / rem


def rationalize(ratio: float, max_den: int, eps: float) -> Optional[ReducedFraction]:
    """Last convergent of ``ratio`` with denominator <= max_den, if within eps.

    Returns None when no such convergent is close enough ("non-fractional").
    """
    if not ratio > 0 or max_den < 1 or not eps > 0:
        raise ValueError("need ratio > 0, max_den >= 1, eps > 0")
    best = None
    for p, q in convergents(ratio):
        if q > max_den:
            break
        if p > 0:
            best = (p, q)
    if best is None or abs(best[0] / best[1] - ratio) > eps:
        return None
    return ReducedFraction(*best)


def t_min(omega_big: float, fraction: ReducedFraction) -> float:
    """Earliest t > 0 at which eta vanishes for omega/Omega = fraction.

    Odd/odd ratios vanish at odd multiples of pi for both phases, giving
    den*pi/Omega; otherwise both phases must be even multiples, 2*den*pi/Omega.
    """
    return fraction.lattice_units * math.pi / omega_big


def non_objectivity_times(omega_big: float, fraction: ReducedFraction, count: int) -> list[float]:
    if count < 1:
        raise ValueError("count must be >= 1")
    rel = FrequencyRelation(fraction, omega_big)
    return list(itertools.islice(rel.recurrence(), count))


@dataclass(frozen=True)
class FamilyMember:
    omega: float
    fraction: ReducedFraction
    t_min: float
    # True when the reduced ratio recurs strictly more often than the family
    finer_lattice: bool


def _family_ratio(p: int, n_min: int, parity: ParityClass) -> tuple[int, int]:
    if parity is ParityClass.EVEN:
        return 2 * p, 2 * n_min
    return 2 * p + 1, 2 * n_min + 1


def family_lattice_units(n_min: int, parity: ParityClass) -> int:
    return 2 * n_min if parity is ParityClass.EVEN else 2 * n_min + 1


def _check_family_args(n_min: int, parity: ParityClass) -> None:
    if parity is ParityClass.EVEN and n_min < 1:
        raise ValueError("EvenClass families need n_min >= 1")
    if parity is ParityClass.ODD_ODD and n_min < 0:
        raise ValueError("OddOdd families need n_min >= 0")


def frequency_family_members(omega_big: float, n_min: int, parity: ParityClass,
                             count: int) -> list[FamilyMember]:
    """Family frequencies with their reduced ratios and lattice flags."""
    _check_family_args(n_min, parity)
    fam_units = family_lattice_units(n_min, parity)
    start = 1 if parity is ParityClass.EVEN else 0
    out = []
    for p in range(start, start + count):
        a, b = _family_ratio(p, n_min, parity)
        frac = reduce_ratio(a, b)
        units = frac.lattice_units
        # the family period must sit on each member's lattice
        assert fam_units % units == 0, (frac, fam_units)
        out.append(FamilyMember(
            omega=a / b * omega_big,
            fraction=frac,
            t_min=units * math.pi / omega_big,
            finer_lattice=units < fam_units,
        ))
    return out


def frequency_family(omega_big: float, n_min: int, parity: ParityClass, count: int) -> list[float]:
    """First ``count`` frequencies sharing the family recurrence time.

    EvenClass: omega_p = (2p / 2 n_min) Omega, p >= 1.
    OddOdd:    omega_p = ((2p + 1) / (2 n_min + 1)) Omega, p >= 0.
    Values are returned verbatim; see ``frequency_family_members`` for the
    members whose reduced ratio has a shorter t_min.
    """
    return [m.omega for m in frequency_family_members(omega_big, n_min, parity, count)]


def family_t_min(omega_big: float, n_min: int, parity: ParityClass) -> float:
    _check_family_args(n_min, parity)
    return family_lattice_units(n_min, parity) * math.pi / omega_big


def common_recurrence_units(fractions) -> int:
    fractions = list(fractions)
    if not fractions:
        raise ValueError("need at least one fraction")
    return math.lcm(*(f.lattice_units for f in fractions))


def common_recurrence(omega_big: float, fractions) -> float:
    """Smallest t > 0 on every oscillator's recurrence lattice."""
    return common_recurrence_units(fractions) * math.pi / omega_big
