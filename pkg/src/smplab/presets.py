"""Named forcing families used by the figures, examples and CLI presets."""
from __future__ import annotations

import math

from .forcing import Constant, ForcingPiece, PiecewiseForcing, Polynomial, PowerSingularity

CRITICAL_REVERSED = 2.0 + math.sqrt(2.0)


def example1(a: float) -> PiecewiseForcing:
    """``1`` on ``(-1, 1)`` and ``-1`` on ``1 < |x| < a``; domain ``(-a, a)``."""
    if a < 1.0:
        raise ValueError("need a >= 1")
    if a == 1.0:
        return PiecewiseForcing((ForcingPiece(-1.0, 1.0, Constant(1.0)),))
    return PiecewiseForcing.symmetric([ForcingPiece(0.0, 1.0, Constant(1.0)), ForcingPiece(1.0, a, Constant(-1.0))])


def reversed_example1(a: float) -> PiecewiseForcing:
    """``-1`` on ``(-1, 1)`` and ``+1`` on ``1 < |x| < a``; ``u(0) = 0`` at ``a = 2 + sqrt 2``."""
    if a <= 1.0:
        raise ValueError("need a > 1")
    return PiecewiseForcing.symmetric([ForcingPiece(0.0, 1.0, Constant(-1.0)), ForcingPiece(1.0, a, Constant(1.0))])


def dead_band(b: float, a: float = CRITICAL_REVERSED) -> PiecewiseForcing:
    """Reversed family pushed outward by ``b`` with ``f = 0`` on ``(-b, b)``."""
    if b <= 0:
        return reversed_example1(a)
    return PiecewiseForcing.symmetric(
        [
            ForcingPiece(0.0, b, Constant(0.0)),
            ForcingPiece(b, 1.0 + b, Constant(-1.0)),
            ForcingPiece(1.0 + b, a + b, Constant(1.0)),
        ]
    )


def cubic_dead_core(b: float) -> PiecewiseForcing:
    """``3(|x| - b) - 1`` on ``b < |x| < 1 + b``, zero inside; ``u = (|x|-b)^2 (1+b-|x|) / 2``."""
    outer = ForcingPiece(b, 1.0 + b, Polynomial((-1.0 - 3.0 * b, 3.0)))
    if b <= 0:
        return PiecewiseForcing.symmetric([outer])
    return PiecewiseForcing.symmetric([ForcingPiece(0.0, b, Constant(0.0)), outer])


def cubic_dead_core_solution(x, b):
    t = abs(x) - b
    return 0.0 if t <= 0 else 0.5 * t * t * (1.0 - t)


def linear_ramp(a: float) -> PiecewiseForcing:
    """``a x - 1`` on ``(0, 1)``."""
    return PiecewiseForcing((ForcingPiece(0.0, 1.0, Polynomial((-1.0, a))),))


def power_law(R=1.0, r0=0.5, F=1.0, C=0.1, beta=0.5) -> PiecewiseForcing:
    """``F`` on ``|x| < r0`` and ``-C (R - |x|)^(-beta)`` on ``r0 < |x| < R``."""
    return PiecewiseForcing.symmetric(
        [ForcingPiece(0.0, r0, Constant(F)), ForcingPiece(r0, R, PowerSingularity(C, beta, R))]
    )


def power_law_crossing(R, r0, F, C):
    """Zero of ``u`` on ``(r0, R)`` for ``beta = 3/2``.

    There ``u(r) = sqrt(R - r) [sqrt(R - r) (F r0 + 2C/sqrt(R - r0)) - 4C]``.
    """
    k = F * r0 + 2.0 * C / math.sqrt(R - r0)
    return R - (4.0 * C / k) ** 2


def flat_unit() -> PiecewiseForcing:
    """The flat ``a = 2`` forcing rescaled to ``(-1, 1)``: ``1`` on ``|x| < 1/2``, ``-1`` outside."""
    return example1(2.0).stretched(0.5)


PRESETS = {
    "example1": example1,
    "reversed": reversed_example1,
    "dead-band": dead_band,
    "cubic-dead-core": cubic_dead_core,
    "linear-ramp": linear_ramp,
    "power-law": power_law,
    "flat-unit": lambda: flat_unit(),
}
