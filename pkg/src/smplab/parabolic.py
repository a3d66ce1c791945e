"""Heat flow ``u_t - Delta u = f(x, t)`` with sign-changing data.

Time stepping is the theta-scheme

    (I + theta dt A) u_new = (I - (1 - theta) dt A) u_old + dt f_theta,

``f_theta = theta f(t + dt) + (1 - theta) f(t)``, on the same discrete
``A = -Delta_h`` used by the stationary solvers.  With a time-independent
forcing ``g`` and stationary solution ``v`` every iterate satisfies
``u_n - v = R^n (u0 - v)``, ``R`` the one-step amplification matrix, which is
what :func:`subsolution_defect` measures.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisWarning, OrthogonalityViolated, SolverDiverged
from .forcing import PiecewiseForcing
from .grid import Mesh, ScalarField, first_eigenpair, sample_forcing, second_eigenpair, solve_dirichlet

ORTHOGONALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ParabolicProblem:
    """Mesh, initial data, forcing and time grid.

    ``forcing`` is a field, a :class:`PiecewiseForcing`, a constant, or a
    callable ``g(x, t)`` taking the node coordinate arrays and a time.  For a
    time-dependent forcing ``g_floor`` may supply the stationary lower bound.
    """

    mesh: Mesh
    u0: ScalarField
    forcing: object = 0.0
    dt: float = None
    theta: float = 0.5
    horizon: float = 1.0
    g_floor: object = None
    phi1_moment: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", self.mesh.h)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not isinstance(self.u0, ScalarField):
            object.__setattr__(self, "u0", sample_forcing(self.u0, self.mesh))
        phi = first_eigenpair(self.mesh).field
        object.__setattr__(self, "phi1_moment", self.mesh.inner(self.u0.values, phi.values))

    @property
    def time_dependent(self):
        return callable(self.forcing) and not isinstance(self.forcing, (PiecewiseForcing, ScalarField))

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    def forcing_at(self, t) -> np.ndarray:
        """Interior forcing values at time ``t``."""
        if self.time_dependent:
            vals = np.broadcast_to(np.asarray(self.forcing(*self.mesh.coords, t), dtype=float), self.mesh.shape)
            return self.mesh.restrict(vals)
        return self._static

    @property
    def _static(self):
        cached = self.__dict__.get("_static_forcing")
        if cached is None:
            cached = sample_forcing(self.forcing, self.mesh).interior
            self.__dict__["_static_forcing"] = cached
        return cached

    def stationary_forcing(self):
        """The time-independent lower forcing ``g`` used for ``v`` (``None`` if unknown)."""
        if not self.time_dependent:
            return self.forcing
        return self.g_floor

    def order_preserving(self):
        """Whether the explicit half ``I - (1 - theta) dt A`` has nonnegative entries."""
        diag = float(np.max(self.mesh.operator.diagonal))
        return (1.0 - self.theta) * self.dt * diag <= 1.0 + 1e-12


def step(problem: ParabolicProblem, state: np.ndarray, t: float) -> np.ndarray:
    """One theta-scheme step on interior values."""
    th, dt = problem.theta, problem.dt
    op = problem.mesh.operator
    rhs = state.copy()
    if th < 1.0:
        rhs -= (1.0 - th) * dt * op.apply(state)
    if problem.time_dependent:
        f = th * problem.forcing_at(t + dt) + (1.0 - th) * problem.forcing_at(t)
    else:
        f = problem.forcing_at(t)
    rhs += dt * f
    new = op.solve(rhs / (th * dt), shift=1.0 / (th * dt), method="direct")
    if not np.all(np.isfinite(new)):
        raise SolverDiverged(f"non-finite values after the step from t = {t:.6g}")
    return new


def evolve(problem: ParabolicProblem, start: np.ndarray = None):
    """Yield ``(t, interior values)`` from ``t = 0`` to the horizon."""
    u = problem.u0.interior.copy() if start is None else np.asarray(start, dtype=float).copy()
    yield 0.0, u
    for k in range(problem.steps):
        t = k * problem.dt
        u = step(problem, u, t)
        yield (k + 1) * problem.dt, u


def homogeneous(problem: ParabolicProblem, u0=None) -> ParabolicProblem:
    """Same mesh and time grid with ``f = 0``."""
    u0 = problem.u0 if u0 is None else u0
    return ParabolicProblem(problem.mesh, u0, 0.0, problem.dt, problem.theta, problem.horizon)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    fit_residual: float


def fit_exponential(times, values, window=0.5) -> DecayFit:
    """Least-squares line through ``log values`` on the last ``window`` fraction of ``times``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = (t >= t[0] + (1.0 - window) * (t[-1] - t[0])) & (v > 0)
    if keep.sum() < 2:
        return DecayFit(math.nan, math.nan, math.inf)
    slope, intercept = np.polyfit(t[keep], np.log(v[keep]), 1)
    resid = np.log(v[keep]) - (slope * t[keep] + intercept)
    return DecayFit(-float(slope), float(math.exp(intercept)), float(np.sqrt(np.mean(resid**2))))


@dataclass(frozen=True, eq=False)
class PositivityTrace:
    """Recorded minima along the flow and the detected positivity time.

    ``t0`` is ``None`` when positivity is not reached (or lost again) before
    the horizon.
    """

    times: np.ndarray
    min_interior: np.ndarray
    sup_ratio: np.ndarray
    t0: float | None
    decay_fit: DecayFit | None
    stationary_min: float | None
    phi1_moment: float
    hypotheses_ok: bool
    snapshots: dict = field(default_factory=dict)

    @property
    def reached(self):
        return self.t0 is not None

    def lines(self):
        out = [
            f"t0 = {'NotReached' if self.t0 is None else format(self.t0, '.12g')}",
            f"horizon = {self.times[-1]:.12g}",
            f"final_min_interior = {self.min_interior[-1]:.12g}",
            f"phi1_moment = {self.phi1_moment:.6e}",
            f"hypotheses_ok = {str(self.hypotheses_ok).lower()}",
        ]
        if self.stationary_min is not None:
            out.append(f"stationary_min = {self.stationary_min:.12g}")
        if self.decay_fit is not None:
            d = self.decay_fit
            out.append(f"steady_rate = {d.rate:.12g}")
            out.append(f"steady_prefactor = {d.prefactor:.12g}")
            out.append(f"steady_fit_residual = {d.fit_residual:.6e}")
        return out

    def to_csv(self):
        rows = ["t,min_u,sup_ratio"]
        rows += [f"{t:.10g},{m:.17g},{s:.17g}" for t, m, s in zip(self.times, self.min_interior, self.sup_ratio)]
        return "\n".join(rows) + "\n"


def _trailing_positive(mins, times):
    bad = np.flatnonzero(mins <= 0.0)
    if bad.size == 0:
        return float(times[0])
    last = bad[-1]
    if last == mins.size - 1:
        return None
    return float(times[last + 1])


def _hypotheses_hold(problem, g, K=None, rho=None):
    """Positivity hypotheses for the stationary forcing ``g``; ``None`` when not checkable."""
    mesh = problem.mesh
    if K is not None and rho is not None:
        from .maxprinciple import check_hypotheses

        rep = check_hypotheses(g, mesh, K, rho)
        return bool(rep.h1) and bool(rep.h2)
    if mesh.kind == "interval" and isinstance(g, PiecewiseForcing) and g.is_symmetric_domain:
        if (g.domain[0], g.domain[1]) != (mesh.lo[0], mesh.hi[0]):
            return None
        from .solver1d import check_conditions

        try:
            rep = check_conditions(g)
        except Exception:
            return False
        return bool(rep.balance) and bool(rep.decay)
    return None


def find_positivity_time(problem: ParabolicProblem, K=None, rho=None, snapshot_times=(),
                         record_every=1) -> PositivityTrace:
    """Integrate to the horizon and report the trailing positivity time.

    Warns with :class:`HypothesisWarning` when the stationary forcing fails
    the positivity conditions or its discrete solution is not positive; the
    detection itself still runs.
    """
    mesh = problem.mesh
    g = problem.stationary_forcing()
    v = solve_dirichlet(g, mesh).interior if g is not None else None
    stationary_min = float(v.min()) if v is not None else None
    ok = _hypotheses_hold(problem, g) if K is None else _hypotheses_hold(problem, g, K, rho)
    hyp = True if ok is None else ok
    if g is not None and not hyp:
        warnings.warn("stationary forcing fails the positivity hypotheses", HypothesisWarning, stacklevel=2)
    if stationary_min is not None and stationary_min <= 0:
        hyp = False
        warnings.warn(f"stationary solution has min {stationary_min:.3e} <= 0", HypothesisWarning, stacklevel=2)
    phi = first_eigenpair(mesh).field.interior
    ref = v if v is not None else 0.0
    want = sorted(float(s) for s in snapshot_times)
    snaps = {}
    times, mins, ratios = [], [], []
    for k, (t, u) in enumerate(evolve(problem)):
        while want and t >= want[0] - 0.5 * problem.dt:
            snaps[want.pop(0)] = ScalarField.from_interior(mesh, u.copy())
        if k % record_every and k != problem.steps:
            continue
        times.append(t)
        mins.append(float(u.min()))
        ratios.append(float(np.max(np.abs(u - ref) / phi)))
    times, mins, ratios = np.array(times), np.array(mins), np.array(ratios)
    fit = fit_exponential(times, ratios) if v is not None else None
    return PositivityTrace(times, mins, ratios, _trailing_positive(mins, times), fit, stationary_min,
                           problem.phi1_moment, hyp, snaps)


def project_out_phi1(mesh: Mesh, u0: ScalarField):
    """``u0 - <u0, phi_1> phi_1 / <phi_1, phi_1>`` and the remaining moment."""
    phi = first_eigenpair(mesh).field
    c = mesh.inner(u0.values, phi.values) / mesh.inner(phi.values, phi.values)
    out = ScalarField(mesh, u0.values - c * phi.values)
    return out, mesh.inner(out.values, phi.values)


@dataclass(frozen=True)
class DecayEstimate:
    rate: float
    lam2: float
    prefactor: float
    fit_residual: float
    bound_constant: float
    bound_ok: bool
    projection_residual: float

    def lines(self):
        return [
            f"fitted_rate = {self.rate:.12g}",
            f"lambda_2 = {self.lam2:.12g}",
            f"prefactor = {self.prefactor:.12g}",
            f"fit_residual = {self.fit_residual:.6e}",
            f"bound_constant = {self.bound_constant:.12g}",
            f"bound_ok = {str(self.bound_ok).lower()}",
            f"phi1_moment = {self.projection_residual:.6e}",
        ]


def verify_decay_estimate(mesh: Mesh, u0_hat, dt=None, theta=0.5, horizon=1.0, window=0.5, rtol=0.02,
                          project=False) -> DecayEstimate:
    """Fit the decay of ``sup |w| / phi_1`` for the homogeneous flow of ``u0_hat``.

    ``u0_hat`` must be orthogonal to ``phi_1`` in the mesh inner product;
    with ``project=True`` it is projected first and the residual moment kept.
    The bound ``|w| <= C ||u0_hat|| e^(-lambda_2 t) phi_1`` is checked at every
    tail node with ``C`` the largest tail ratio.
    """
    if not isinstance(u0_hat, ScalarField):
        u0_hat = sample_forcing(u0_hat, mesh)
    phi = first_eigenpair(mesh).field
    if project:
        u0_hat, moment = project_out_phi1(mesh, u0_hat)
    else:
        moment = mesh.inner(u0_hat.values, phi.values)
    norm = math.sqrt(mesh.inner(u0_hat.values, u0_hat.values))
    pnorm = math.sqrt(mesh.inner(phi.values, phi.values))
    if abs(moment) > ORTHOGONALITY_TOL * max(norm * pnorm, 1e-300):
        raise OrthogonalityViolated(f"<u0, phi_1> = {moment:.3e} is not zero")
    lam2 = second_eigenpair(mesh).value
    prob = ParabolicProblem(mesh, u0_hat, 0.0, dt, theta, horizon)
    p = phi.interior
    times, ratios = [], []
    for t, w in evolve(prob):
        times.append(t)
        ratios.append(float(np.max(np.abs(w) / p)))
    times, ratios = np.array(times), np.array(ratios)
    fit = fit_exponential(times, ratios, window)
    tail = times >= times[0] + (1.0 - window) * (times[-1] - times[0])
    scaled = ratios[tail] * np.exp(lam2 * times[tail]) / max(norm, 1e-300)
    C = float(scaled.max())
    bound_ok = bool(fit.rate >= lam2 * (1.0 - rtol) and np.all(scaled <= C * (1 + 1e-12)))
    return DecayEstimate(fit.rate, lam2, fit.prefactor, fit.fit_residual, C, bound_ok, moment)


def subsolution_defect(problem: ParabolicProblem):
    """Largest ``|u_n - v - w_n + R^n v|`` along the flow.

    ``v`` is the stationary solution and ``w_n``, ``R^n v`` are the
    homogeneous flows of ``u0`` and ``v``.  The identity is exact in exact
    arithmetic, so the return value measures roundoff.
    """
    g = problem.stationary_forcing()
    v = solve_dirichlet(g, problem.mesh).interior
    hom = homogeneous(problem)
    worst = 0.0
    flows = zip(evolve(problem), evolve(hom), evolve(hom, start=v))
    for (_, u), (_, w), (_, rv) in flows:
        worst = max(worst, float(np.max(np.abs(u - v - w + rv))))
    return worst


def subsolution_gap(problem: ParabolicProblem):
    """Most negative ``u_n - (v + w_n)`` along the flow."""
    g = problem.stationary_forcing()
    v = solve_dirichlet(g, problem.mesh).interior
    worst = math.inf
    for (_, u), (_, w) in zip(evolve(problem), evolve(homogeneous(problem))):
        worst = min(worst, float(np.min(u - v - w)))
    return worst


def energy_profile(problem: ParabolicProblem) -> np.ndarray:
    """``||u_n||`` in the mesh norm along the flow."""
    wts = problem.mesh.restrict(problem.mesh.weights)
    return np.array([math.sqrt(float(np.sum(wts * u * u))) for _, u in evolve(problem)])

