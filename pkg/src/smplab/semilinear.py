"""Sublinear indefinite problem ``-Delta u = lambda u + m(x) u^alpha`` with ``0 < alpha < 1``.

The bracket is the explicit pair

* subsolution ``u_0 = [(1 - alpha) U]^(1/(1 - alpha))`` with ``-Delta U = m``;
* supersolution ``u^0 = C psi`` with ``-Delta psi = lambda psi + 1``.

On the mesh ``u_0`` is an exact discrete subsolution: ``g(U) = c U^p`` is
convex, so ``-Delta_h g(U) <= g'(U) (-Delta_h U) = m u_0^alpha``.

The solver is a shifted monotone iteration with a node-wise shift
``Lambda_i = lambda + alpha m^-_i u_0,i^(alpha - 1)``, followed by a Newton
polish once the iterate is close.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketViolated,
    IterationStalled,
    PositivityPrerequisiteFailed,
    ResolventNotPositive,
)
from .grid import Mesh, ScalarField, first_eigenpair, sample_forcing, solve_dirichlet

BRACKET_SLACK = 10.0
HEADROOM = 1.01


@dataclass(frozen=True, eq=False)
class SemilinearProblem:
    mesh: Mesh
    m: ScalarField
    lam: float = 0.0
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not isinstance(self.m, ScalarField):
            object.__setattr__(self, "m", sample_forcing(self.m, self.mesh))

    @property
    def indefinite(self):
        """True when ``m`` takes both signs at interior nodes."""
        v = self.m.interior
        return bool(np.any(v > 0) and np.any(v < 0))

    @property
    def m_sup(self):
        return float(np.max(np.abs(self.m.interior)))


@dataclass(frozen=True, eq=False)
class BracketedSolution:
    u: ScalarField
    sub: ScalarField
    sup: ScalarField
    residual: float
    iterations: int
    newton_steps: int = 0
    monotone: bool = True

    def lines(self):
        inner = self.u.interior
        return [
            f"residual = {self.residual:.6e}",
            f"iterations = {self.iterations}",
            f"newton_steps = {self.newton_steps}",
            f"min_interior_u = {inner.min():.12g}",
            f"max_u = {inner.max():.12g}",
            f"monotone_iterates = {str(self.monotone).lower()}",
        ]


def potential(p: SemilinearProblem) -> ScalarField:
    """``U`` with ``-Delta_h U = m``."""
    return solve_dirichlet(p.m)


def build_subsolution_semilinear(p: SemilinearProblem, U: ScalarField = None) -> ScalarField:
    """``u_0 = [(1 - alpha) U]^(1/(1 - alpha))``, checked node by node."""
    U = potential(p) if U is None else U
    inner = U.interior
    if np.any(inner <= 0):
        i = int(np.argmin(inner))
        raise PositivityPrerequisiteFailed(f"U has a nonpositive interior node (min {inner[i]:.3e})")
    u0 = ScalarField(p.mesh, np.maximum((1.0 - p.alpha) * U.values, 0.0) ** (1.0 / (1.0 - p.alpha)))
    defect = _operator(p, u0)
    slack = BRACKET_SLACK * p.mesh.h**2 * max(u0.sup(), 1e-300)
    if defect.max() > slack:
        raise PositivityPrerequisiteFailed(f"u_0 violates the subsolution inequality by {defect.max():.3e}")
    return u0


def _operator(p, u: ScalarField):
    """Interior values of ``-Delta_h u - lambda u - m u^alpha``."""
    v = u.interior
    Av = p.mesh.operator.apply(v)
    return Av - p.lam * v - p.m.interior * np.maximum(v, 0.0) ** p.alpha


def residual(p: SemilinearProblem, u: ScalarField) -> float:
    return float(np.max(np.abs(_operator(p, u))))


def _resolvent(p, rhs):
    lam1 = first_eigenpair(p.mesh).value
    if p.lam >= lam1:
        raise ResolventNotPositive(f"lambda = {p.lam} is not below the discrete lambda_1 = {lam1}")
    return ScalarField.from_interior(p.mesh, p.mesh.operator.solve(rhs, shift=-p.lam, method="direct"))


def helmholtz_unit(p: SemilinearProblem) -> ScalarField:
    """``psi`` with ``(-Delta_h - lambda) psi = 1``."""
    return _resolvent(p, np.ones(p.mesh.n_unknowns))


def supersolution_constant(p: SemilinearProblem, psi: ScalarField) -> float:
    return HEADROOM * (p.m_sup * psi.sup() ** p.alpha) ** (1.0 / (1.0 - p.alpha))


def build_supersolution_semilinear(p: SemilinearProblem, sub: ScalarField = None, max_doublings=60) -> ScalarField:
    """``u^0 = C psi`` with ``C`` from the sup bound, doubled until ``u_0 <= u^0``."""
    psi = helmholtz_unit(p)
    C = supersolution_constant(p, psi)
    if C == 0.0:
        C = 1.0
    if sub is None:
        return ScalarField(p.mesh, C * psi.values)
    for _ in range(max_doublings):
        if np.all(sub.values <= C * psi.values):
            return ScalarField(p.mesh, C * psi.values)
        C *= 2.0
    raise BracketViolated("no admissible supersolution constant found")


def solve_bracketed(p: SemilinearProblem, start: ScalarField = None, sub: ScalarField = None, tol=1e-11,
                    maxit=20000, newton_switch=1e-6, check_bracket=True) -> BracketedSolution:
    """Monotone iteration from the subsolution, then Newton once the update is small.

    ``sub`` overrides the default subsolution (for instance the ``u_0`` of
    another weight, as in the exactness check with :func:`exact_weight`).
    """
    sub = build_subsolution_semilinear(p) if sub is None else sub
    sup = build_supersolution_semilinear(p, sub)
    mesh = p.mesh
    lo, hi = sub.interior, sup.interior
    slack = BRACKET_SLACK * mesh.h**2 * max(sup.sup(), 1e-300)
    if np.any(lo > hi + slack):
        raise BracketViolated("subsolution exceeds supersolution")
    m = p.m.interior
    floor = np.maximum(lo, 1e-300)
    shift = p.lam + p.alpha * np.maximum(-m, 0.0) * floor ** (p.alpha - 1.0)
    u = (start.interior if start is not None else lo).copy()
    scale = max(float(np.max(np.abs(hi))), 1e-300)
    target = 1e-10 * (p.m_sup + p.lam) * scale
    monotone = True
    it = 0
    step = math.inf
    for it in range(1, maxit + 1):
        rhs = (shift + p.lam) * u + m * np.maximum(u, floor) ** p.alpha
        new = mesh.operator.solve(rhs, shift=shift)
        if np.any(new < u - slack):
            monotone = False
        if check_bracket and (np.any(new < lo - slack) or np.any(new > hi + slack)):
            raise BracketViolated(f"iterate {it} left the bracket")
        step = float(np.max(np.abs(new - u)))
        u = new
        if step < tol * scale:
            break
        if step < newton_switch * scale:
            break
    newton_steps = 0
    res = residual(p, ScalarField.from_interior(mesh, u))
    if res > target:
        u, newton_steps, res = _newton(p, u, target)
    if res > target:
        raise IterationStalled(f"residual {res:.3e} above {target:.3e}", ScalarField.from_interior(mesh, u),
                               {"iterations": it, "newton_steps": newton_steps, "last_step": step})
    if np.any(u <= 0):
        raise IterationStalled("solution is not positive", ScalarField.from_interior(mesh, u), {"iterations": it})
    if check_bracket and (np.any(u < lo - slack) or np.any(u > hi + slack)):
        raise BracketViolated("converged solution leaves the bracket")
    return BracketedSolution(ScalarField.from_interior(mesh, u), sub, sup, res, it, newton_steps, monotone)


def _newton(p, u, target, maxit=50):
    import scipy.sparse as sp
    from scipy.sparse.linalg import spsolve

    A = p.mesh.operator.matrix
    m = p.m.interior
    for k in range(1, maxit + 1):
        pos = np.maximum(u, 1e-300)
        F = A @ u - p.lam * u - m * pos**p.alpha
        J = A - sp.diags(p.lam + p.alpha * m * pos ** (p.alpha - 1.0))
        du = spsolve(J.tocsc(), -F)
        t = 1.0
        base = float(np.max(np.abs(F)))
        while t > 1e-4:
            trial = u + t * du
            if np.all(trial > 0):
                Ft = A @ trial - p.lam * trial - m * trial**p.alpha
                if np.max(np.abs(Ft)) < base:
                    break
            t *= 0.5
        u = np.maximum(u + t * du, 1e-300)
        res = residual(p, ScalarField.from_interior(p.mesh, u))
        if res <= target:
            return u, k, res
    return u, maxit, res


def exact_weight(p: SemilinearProblem, U: ScalarField = None) -> ScalarField:
    """Weight ``m_hat`` for which ``u_0`` solves the discrete problem exactly.

    ``m_hat = (-Delta_h u_0 - lambda u_0) / u_0^alpha``; it approximates
    ``m - alpha/(1 - alpha) |grad U|^2 / U - lambda (1 - alpha) U``.
    """
    U = potential(p) if U is None else U
    u0 = ScalarField(p.mesh, np.maximum((1.0 - p.alpha) * U.values, 0.0) ** (1.0 / (1.0 - p.alpha)))
    v = u0.interior
    num = p.mesh.operator.apply(v) - p.lam * v
    return ScalarField.from_interior(p.mesh, num / v**p.alpha)


def exact_weight_continuum(m, U, grad_U, alpha, lam):
    """Closed-form ``m_hat`` from values of ``m``, ``U`` and ``|grad U|``."""
    return m - alpha / (1.0 - alpha) * grad_U**2 / U - lam * (1.0 - alpha) * U
