"""Closed-form outcome probabilities for the sensor-assisted bit-flip code.

Each of the three data qubits independently suffers an environmental
(sensor-detectable) flip with probability ``o`` and an entangling flip with
probability ``p``. The seven joint outcome fractions below are polynomials in
``o``, ``p``, their complements and the cancellation weight ``cbar = o*p``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np


class DomainError(ValueError):
    """Parameters outside the region where a quantity is defined."""


def _check_prob(name, x):
    if not (isinstance(x, (int, float, np.floating, np.integer)) and 0.0 <= x <= 1.0):
        raise DomainError(f"{name} must be a probability in [0, 1], got {x!r}")


@dataclass(frozen=True)
class ErrorProbabilities:
    o: float
    p: float

    def __post_init__(self):
        _check_prob("o", self.o)
        _check_prob("p", self.p)
        object.__setattr__(self, "o", float(self.o))
        object.__setattr__(self, "p", float(self.p))
        if self.o >= 0.5 or self.p >= 0.5:
            warnings.warn(
                f"error probabilities o={self.o}, p={self.p} are not small (< 0.5)",
                stacklevel=2,
            )

    @classmethod
    def from_total(cls, phat: float, p: float) -> "ErrorProbabilities":
        return cls(solve_environmental(phat, p), p)

    @property
    def obar(self) -> float:
        return 1.0 - self.o

    @property
    def pbar(self) -> float:
        return 1.0 - self.p

    @property
    def cbar(self) -> float:
        return self.o * self.p

    @property
    def phat(self) -> float:
        return self.o + self.p - self.o * self.p


@dataclass(frozen=True)
class OutcomeFractions:
    """Joint (standard, assisted) outcome weights."""

    f_C_C: float
    f_CC_CC: float
    f_F_F: float
    f_CC_RPT: float
    f_F_RPT: float
    f_CC_RS: float
    f_F_RS: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def total(self) -> float:
        return math.fsum(self.as_dict().values())

    @property
    def rejected_parity(self) -> float:
        return self.f_CC_RPT + self.f_F_RPT

    @property
    def rejected_sensor(self) -> float:
        return self.f_CC_RS + self.f_F_RS


FRACTION_FIELDS = tuple(f.name for f in fields(OutcomeFractions))


def solve_environmental(phat: float, p: float) -> float:
    """Invert phat = o + p - o*p for the environmental probability o."""
    _check_prob("phat", phat)
    _check_prob("p", p)
    if p >= 1.0:
        raise DomainError("p = 1 leaves o undetermined")
    if phat >= 1.0:
        raise DomainError(f"phat must be < 1, got {phat}")
    if p > phat:
        raise DomainError(f"p={p} exceeds phat={phat}; o would be negative")
    return (phat - p) / (1.0 - p)


def case_probability(mask, probs: ErrorProbabilities) -> float:
    """Probability of one (env, ent) error pattern on the three data qubits."""
    a = int(mask.env).bit_count()
    b = int(mask.ent).bit_count()
    return probs.o**a * probs.p**b * probs.obar ** (3 - a) * probs.pbar ** (3 - b)


def outcome_fractions(probs: ErrorProbabilities) -> OutcomeFractions:
    o, p = probs.o, probs.p
    ob, pb, c = probs.obar, probs.pbar, probs.cbar

    f_C_C = ob**3 * (3 * p * pb**2 + pb**3) + ob**2 * (3 * o * pb**3)
    f_CC_CC = ob**2 * (3 * c * pb**2)
    f_F_F = ob**3 * (p**3 + 3 * p**2 * pb) + ob**2 * (3 * p**2 * c + 3 * o * p**2 * pb)
    f_CC_RPT = ob**2 * (6 * p * c * pb)
    f_F_RPT = ob**2 * (6 * o * p * pb**2)
    f_CC_RS = ob * (3 * p * c**2 + 3 * c**2 * pb + 6 * o * c * pb**2) + c**3 + 3 * o * c**2 * pb
    f_F_RS = ob * (6 * o * p * c * pb + 3 * o**2 * p * pb**2 + 3 * o**2 * pb**3) + 3 * o**2 * c * pb**2 + o**3 * pb**3

    values = (f_C_C, f_CC_CC, f_F_F, f_CC_RPT, f_F_RPT, f_CC_RS, f_F_RS)
    # rounding can push a field an ulp outside [0, 1]
    return OutcomeFractions(*(min(max(v, 0.0), 1.0) for v in values))


def standard_aggregate(fr: OutcomeFractions) -> dict[str, float]:
    """Outcome letters of the plain code, which never rejects."""
    return {
        "C": fr.f_C_C,
        "CC": fr.f_CC_CC + fr.f_CC_RPT + fr.f_CC_RS,
        "F": fr.f_F_F + fr.f_F_RPT + fr.f_F_RS,
    }


def assisted_aggregate(fr: OutcomeFractions) -> dict[str, float]:
    return {
        "C": fr.f_C_C,
        "CC": fr.f_CC_CC,
        "F": fr.f_F_F,
        "R_PT": fr.rejected_parity,
        "R_S": fr.rejected_sensor,
    }


def effective_correct(fr: OutcomeFractions, mode: str = "assisted") -> float:
    """(C + CC) / (C + CC + F) over calculations that were not rejected."""
    if mode == "standard":
        agg = standard_aggregate(fr)
        good, bad = agg["C"] + agg["CC"], agg["F"]
    elif mode == "assisted":
        good, bad = fr.f_C_C + fr.f_CC_CC, fr.f_F_F
    else:
        raise ValueError(f"mode must be 'standard' or 'assisted', got {mode!r}")
    denom = good + bad
    if denom <= 0.0:
        raise DomainError("every calculation is rejected; effective correct fraction undefined")
    return good / denom


def effective_fault(fr: OutcomeFractions, mode: str = "assisted") -> float:
    """Fraction of faulty results among the calculations that were kept."""
    if mode == "standard":
        agg = standard_aggregate(fr)
        bad, denom = agg["F"], agg["C"] + agg["CC"] + agg["F"]
    elif mode == "assisted":
        bad = fr.f_F_F
        denom = fr.f_F_F + fr.f_C_C + fr.f_CC_CC
    else:
        raise ValueError(f"mode must be 'standard' or 'assisted', got {mode!r}")
    if denom <= 0.0:
        raise DomainError("every calculation is rejected; effective fault fraction undefined")
    return bad / denom


@dataclass(frozen=True)
class SweepCell:
    phat: float
    entangling_fraction: float
    eff_fault_standard: float
    eff_fault_assisted: float
    error: str | None = None


def sweep_grid(phat_range, fraction_range, steps) -> list[SweepCell]:
    """Effective fault rates over a (phat, p/phat) grid, phat-major.

    ``steps`` is either an int used for both axes or a ``(phat_steps,
    fraction_steps)`` pair. Cells where the algebra is undefined come back
    with NaN values and ``error`` set instead of aborting the sweep.
    """
    if isinstance(steps, (int, np.integer)):
        steps = (int(steps), int(steps))
    n_phat, n_frac = steps
    if n_phat < 1 or n_frac < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    phats = np.linspace(phat_range[0], phat_range[1], n_phat)
    fracs = np.linspace(fraction_range[0], fraction_range[1], n_frac)

    cells = []
    for phat in phats:
        for frac in fracs:
            phat, frac = float(phat), float(frac)
            try:
                p = frac * phat
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    probs = ErrorProbabilities(solve_environmental(phat, p), p)
                fr = outcome_fractions(probs)
                cells.append(SweepCell(phat, frac, effective_fault(fr, "standard"), effective_fault(fr, "assisted")))
            except DomainError as exc:
                cells.append(SweepCell(phat, frac, math.nan, math.nan, str(exc)))
    return cells
