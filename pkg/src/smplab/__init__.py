"""Positivity, flatness and dead cores for ``-Delta u = f`` with sign-changing ``f``."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .forcing import (  # noqa: E402
    Constant,
    ForcingPiece,
    PiecewiseForcing,
    Polynomial,
    PowerSingularity,
    WeightKind,
    double_tail_integral,
    integrate,
    weighted_integral,
)
from .grid import Mesh, ScalarField, first_eigenpair, second_eigenpair, solve_dirichlet  # noqa: E402
from .maxprinciple import CompactSet, check_hypotheses, verify_flatness_nd, verify_positivity  # noqa: E402
from .parabolic import ParabolicProblem, find_positivity_time, step, verify_decay_estimate  # noqa: E402
from .semilinear import SemilinearProblem, solve_bracketed  # noqa: E402
from .solver1d import (  # noqa: E402
    SolutionClass,
    check_balance,
    check_conditions,
    check_decay,
    check_flatness,
    classify,
    find_critical_parameter,
    solve_exact,
)
from .verdict import Verdict  # noqa: E402
