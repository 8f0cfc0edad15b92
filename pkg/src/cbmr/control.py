"""Deterministic control functions that gate training and exploration."""

from __future__ import annotations

import math


def exponent_z(alpha: float, d: int) -> float:
    return 2.0 * alpha / (3.0 * alpha + d)


class ControlFunctions:
    """``D1 = D3 = t^z log t`` and the binomial-scaled training threshold.

    ``base(t)`` is the common ``t^z log t`` factor; training thresholds are a
    per-action (or per-arm) constant times ``base(t)``.
    """

    def __init__(self, alpha: float, d: int, F_max: int):
        if alpha <= 0 or d < 1 or F_max < 1:
            raise ValueError("alpha, d and F_max must be positive")
        self.alpha, self.d, self.F_max = alpha, d, F_max
        self.z = exponent_z(alpha, d)
        self._t = 0
        self._g = 0.0

    def base(self, t: int) -> float:
        if t != self._t:
            self._t = t
            self._g = t ** self.z * math.log(t) if t > 1 else 0.0
        return self._g

    def D1(self, t: int) -> float:
        return self.base(t)

    D3 = D1

    def arm_coef(self, n: int, pool: int | None = None) -> int:
        """``C(pool, n)`` with ``pool`` defaulting to ``F_max``."""
        return math.comb(self.F_max if pool is None else pool, n)

    def action_coef(self, m_vector, owner: int, pool: int | None = None) -> int:
        """``max_j C(F_max, m_j)`` over called agents; 0 for own-only actions."""
        called = [m for j, m in enumerate(m_vector) if j != owner and m > 0]
        return max((self.arm_coef(m, pool) for m in called), default=0)

    def D2_arm(self, n: int, t: int, pool: int | None = None) -> float:
        return self.arm_coef(n, pool) * self.base(t)

    def D2_action(self, m_vector, owner: int, t: int) -> float:
        return self.action_coef(m_vector, owner) * self.base(t)
