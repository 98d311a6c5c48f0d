"""Closed-form exponent bookkeeping: the energy-growth exponent p(s), the
regularity threshold s_Q, and the cutoff law N(Lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ExponentParams:
    """Almost-conservation decay exponents; the '-' in 3/2- and 2- is an
    explicit epsilon (0 for boundary arithmetic)."""

    alpha4: float = 1.5
    alpha6: float = 2.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha4 <= 1.5):
            raise ValueError(f"alpha4 must lie in (0, 3/2], got {self.alpha4}")
        if not (0.0 < self.alpha6 <= 2.0):
            raise ValueError(f"alpha6 must lie in (0, 2], got {self.alpha6}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def alpha4_eff(self) -> float:
        return self.alpha4 - self.epsilon

    @property
    def alpha6_eff(self) -> float:
        return self.alpha6 - self.epsilon


DEFAULT_PARAMS = ExponentParams()


def _denominator(s: float, params: ExponentParams) -> float:
    return params.alpha6_eff - (4.0 + 2.0 / s) * (1.0 - s)


def p_of_s(s: float, params: ExponentParams = DEFAULT_PARAMS) -> float:
    """Growth exponent of the modified energy in the running H^s supremum."""
    if not (0.0 < s <= 1.0):
        raise ValueError(f"s must lie in (0, 1], got {s}")
    den = _denominator(s, params)
    if den <= 0.0:
        raise ValueError(
            f"s={s} is too small for these exponents (denominator {den:.6g} <= 0)"
        )
    return (6.0 + 2.0 / s) / den * 2.0 * (1.0 - s)


def s_q(params: ExponentParams = DEFAULT_PARAMS) -> float:
    """Positive root of 10 s^2 + (alpha6 - 6) s - 4 = 0, the regularity
    threshold below which p(s) >= 2."""
    b = params.alpha6_eff - 6.0
    return (-b + math.sqrt(b * b + 160.0)) / 20.0


def n_exponent(s: float, params: ExponentParams = DEFAULT_PARAMS) -> float:
    """Exponent in the cutoff law N = Lambda^((6 + 2/s) / denominator)."""
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    den = _denominator(s, params)
    if den <= 0.0:
        raise ValueError(
            f"s={s} is too small for these exponents (denominator {den:.6g} <= 0)"
        )
    return (6.0 + 2.0 / s) / den


def n_of_lambda(lam: float, s: float, params: ExponentParams = DEFAULT_PARAMS) -> float:
    """Cutoff as a function of the running supremum Lambda (constant taken 1)."""
    if not (lam >= 1.0):
        raise ValueError(f"Lambda must be at least 1, got {lam}")
    return lam ** n_exponent(s, params)
