"""Three-valued verdicts for floating-point inequality checks."""
from dataclasses import dataclass
from enum import Enum

REL_TOL = 1e-9


class Verdict(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    MARGINAL = "Marginal"

    def __bool__(self):
        return self is Verdict.HOLDS


@dataclass(frozen=True)
class Witness:
    condition: str
    location: float
    margin: float


def compare(lhs, rhs, rtol=REL_TOL):
    """Decide ``lhs > rhs`` with a relative marginal band.

    Returns ``(verdict, margin)`` where ``margin = lhs - rhs``.
    """
    margin = lhs - rhs
    scale = max(abs(lhs), abs(rhs))
    if abs(margin) <= rtol * scale or (scale == 0.0):
        return Verdict.MARGINAL, margin
    return (Verdict.HOLDS if margin > 0 else Verdict.FAILS), margin
