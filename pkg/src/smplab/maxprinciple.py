"""Positivity certificates for sign-changing forcing in N dimensions.

Pipeline: auxiliary solutions ``-Delta s_y = 1_{B_rho(y)}`` for ``y`` on the
boundary of a compact set ``K`` give uniform constants ``c* delta <= s_y <=
C* delta``; the balance hypothesis then yields a lower bound ``C+`` for the
solution on ``dK``; the decay hypothesis turns ``w = k phi_1^alpha`` into a
subsolution on the ring ``Omega - K``; the computed solution is checked
against ``w``.

On disk meshes (radial data only) the auxiliary source is the spherical
average of the off-centre ball indicator.  For radial ``f`` this gives the
same ``int f s_y`` as the full auxiliary problem, so the radial constants
are the ones the argument needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    BallNotInterior,
    CertificateFailed,
    DegenerateRatio,
    MeshMisaligned,
    NotFlat,
    PrerequisiteFailed,
    SignStructureViolation,
    SubsolutionCheckFailed,
)
from .forcing import PiecewiseForcing, WeightKind, weighted_integral
from .grid import (
    Mesh,
    ScalarField,
    ball_volume,
    distance_field,
    first_eigenpair,
    gradient_norm,
    laplacian_apply,
    sample_forcing,
    solve_dirichlet,
    sphere_area,
)
from .verdict import Verdict, Witness, compare

ALPHA_SCAN = (1.25, 1.5, 2.0, 3.0, 4.0, 6.0)
BOUNDARY_SAMPLES = 16
SUBSOLUTION_SLACK = 50.0
SANDWICH_CONSTANT = 50.0


def _dimension(mesh):
    return mesh.dim if mesh.kind != "interval" else 1


# -- compact sets ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompactSet:
    """``K``: a ball (interval, disk, or disc in a rectangle) or an axis box.

    ``boundary_points`` are exact points of ``dK`` (not necessarily nodes);
    ``mask`` marks the nodes in ``K`` and ``boundary_mask`` the nodes of ``K``
    with a neighbour outside.
    """

    description: str
    params: tuple
    mesh: Mesh
    mask: np.ndarray
    boundary_mask: np.ndarray
    boundary_points: np.ndarray

    @classmethod
    def ball(cls, mesh: Mesh, radius: float, center=None, samples=BOUNDARY_SAMPLES):
        if mesh.kind == "disk":
            if center not in (None, 0, 0.0):
                raise ValueError("balls on a radial mesh are centred at the origin")
            r = mesh.axes[0]
            mask = r <= radius + 1e-12
            pts = np.array([[radius]])
        elif mesh.kind == "interval":
            c = 0.5 * (mesh.lo[0] + mesh.hi[0]) if center is None else float(center)
            x = mesh.axes[0]
            mask = np.abs(x - c) <= radius + 1e-12
            pts = np.array([[c - radius], [c + radius]])
        else:
            cx, cy = (0.5 * mesh.hi[0], 0.5 * mesh.hi[1]) if center is None else center
            X, Y = mesh.coords
            mask = np.hypot(X - cx, Y - cy) <= radius + 1e-12
            t = 2 * math.pi * np.arange(samples) / samples
            pts = np.column_stack([cx + radius * np.cos(t), cy + radius * np.sin(t)])
            center = (cx, cy)
        return cls._make("ball", (radius, center), mesh, mask, pts)

    @classmethod
    def box(cls, mesh: Mesh, bounds, samples=BOUNDARY_SAMPLES):
        if mesh.kind == "interval":
            a, b = bounds
            x = mesh.axes[0]
            mask = (x >= a - 1e-12) & (x <= b + 1e-12)
            pts = np.array([[a], [b]])
        elif mesh.kind == "rectangle":
            x0, x1, y0, y1 = bounds
            X, Y = mesh.coords
            mask = (X >= x0 - 1e-12) & (X <= x1 + 1e-12) & (Y >= y0 - 1e-12) & (Y <= y1 + 1e-12)
            per = max(2, samples // 4)
            s = np.linspace(0, 1, per, endpoint=False)
            pts = np.concatenate(
                [
                    np.column_stack([x0 + (x1 - x0) * s, np.full(per, y0)]),
                    np.column_stack([np.full(per, x1), y0 + (y1 - y0) * s]),
                    np.column_stack([x1 - (x1 - x0) * s, np.full(per, y1)]),
                    np.column_stack([np.full(per, x0), y1 - (y1 - y0) * s]),
                ]
            )
        else:
            raise ValueError("boxes are not defined on radial meshes; use CompactSet.ball")
        return cls._make("box", tuple(bounds), mesh, mask, pts)

    @classmethod
    def _make(cls, desc, params, mesh, mask, pts):
        if not mask.any():
            raise ValueError("K contains no mesh nodes")
        delta = distance_field(mesh).values
        if delta[mask].min() <= 2 * mesh.h:
            raise ValueError("K must stay more than 2h away from the boundary")
        bmask = mask & ~_interior_of(mask, mesh)
        return cls(desc, params, mesh, mask, bmask, pts)

    @property
    def ring_mask(self):
        """Nodes of the closure of ``Omega - K``."""
        return ~self.mask | self.boundary_mask

    def describe(self):
        if self.description == "ball":
            return f"ball radius={self.params[0]:g}"
        return "box " + " ".join(f"{b:g}" for b in self.params)


def _interior_of(mask, mesh):
    inner = mask.copy()
    if mesh.kind == "disk":
        inner[:-1] &= mask[1:]
        inner[-1] = False
        return inner
    if mesh.kind == "interval":
        inner[1:-1] &= mask[:-2] & mask[2:]
        inner[[0, -1]] = False
        return inner
    inner[1:-1, 1:-1] &= mask[:-2, 1:-1] & mask[2:, 1:-1] & mask[1:-1, :-2] & mask[1:-1, 2:]
    inner[[0, -1], :] = False
    inner[:, [0, -1]] = False
    return inner


def _interp(field: ScalarField, pts):
    """Linear (bilinear on rectangles) interpolation at points ``pts``."""
    m = field.mesh
    if m.kind != "rectangle":
        return np.interp(pts[:, 0], m.axes[0], field.values)
    from scipy.interpolate import RegularGridInterpolator

    return RegularGridInterpolator(m.axes, field.values)(pts)


# -- auxiliary problems -----------------------------------------------------------


def _ball_fraction_radial(r, rK, rho, N):
    """Share of the sphere ``|x| = r`` inside ``B_rho(y)`` with ``|y| = rK``."""
    r = np.asarray(r, dtype=float)
    if N == 1:
        return 0.5 * ((np.abs(r - rK) <= rho).astype(float) + (np.abs(r + rK) <= rho).astype(float))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (r * r + rK * rK - rho * rho) / (2.0 * r * rK)
    c = np.where(r > 0, c, np.where(rK <= rho, -np.inf, np.inf))
    c = np.clip(c, -1.0, 1.0)
    if N == 2:
        return np.arccos(c) / math.pi
    if N == 3:
        return 0.5 * (1.0 - c)
    raise ValueError("radial auxiliary problems support N <= 3")


_GAUSS = np.polynomial.legendre.leggauss(16)


def _kink_quad(fn, a, b, kinks):
    """``int_a^b fn`` for ``fn`` with square-root behaviour at kink endpoints.

    The substitution ``t = kink +/- (b - a) u^2`` turns the square root into
    a smooth integrand before Gauss-Legendre quadrature.
    """
    g, gw = _GAUSS
    u = 0.5 * (g + 1.0)
    wu = 0.5 * gw
    at_a = any(abs(a - k) < 1e-14 for k in kinks)
    at_b = any(abs(b - k) < 1e-14 for k in kinks)
    if at_a and at_b:
        m = 0.5 * (a + b)
        return _kink_quad(fn, a, m, kinks) + _kink_quad(fn, m, b, [b])
    L = b - a
    if at_a:
        return float(np.sum(wu * fn(a + L * u * u) * 2 * L * u))
    if at_b:
        return float(np.sum(wu * fn(b - L * u * u) * 2 * L * u))
    return float(np.sum(wu * fn(a + L * u) * L))


def _ball_source(mesh: Mesh, y, rho):
    h = mesh.h
    if mesh.kind == "interval":
        x = mesh.axes[0]
        a = np.maximum(x - 0.5 * h, max(mesh.lo[0], y[0] - rho))
        b = np.minimum(x + 0.5 * h, min(mesh.hi[0], y[0] + rho))
        return np.clip(b - a, 0.0, None) / h
    if mesh.kind == "disk":
        N, R = mesh.dim, mesh.hi[0]
        kinks = [k for k in (abs(y[0] - rho), y[0] + rho) if 0 < k < R]
        out = np.zeros(mesh.shape)
        for i, ri in enumerate(mesh.axes[0]):
            a, b = max(0.0, ri - 0.5 * h), min(R, ri + 0.5 * h)
            cuts = [a] + [k for k in kinks if a < k < b] + [b]
            mass = sum(_kink_quad(lambda t: _ball_fraction_radial(t, y[0], rho, N) * t ** (N - 1), lo_, hi_, kinks)
                       for lo_, hi_ in zip(cuts[:-1], cuts[1:]))
            out[i] = mass / ((b**N - a**N) / N)
        return out
    sub = (np.arange(8) + 0.5) / 8 - 0.5
    hx, hy = mesh.spacing
    X, Y = mesh.coords
    out = np.zeros(mesh.shape)
    for dx in sub:
        for dy in sub:
            out += np.hypot(X + dx * hx - y[0], Y + dy * hy - y[1]) <= rho
    return out / sub.size**2


def _check_ball(mesh, y, rho, f=None):
    if rho <= 2 * mesh.h:
        raise BallNotInterior(f"rho={rho} must exceed 2h={2 * mesh.h}")
    if mesh.kind == "disk":
        reach = abs(y[0]) + rho
        inside = reach < mesh.hi[0]
        dist = np.abs(mesh.axes[0] - y[0])
    elif mesh.kind == "interval":
        inside = mesh.lo[0] < y[0] - rho and y[0] + rho < mesh.hi[0]
        dist = np.abs(mesh.axes[0] - y[0])
    else:
        inside = rho < min(y[0], mesh.hi[0] - y[0], y[1], mesh.hi[1] - y[1])
        X, Y = mesh.coords
        dist = np.hypot(X - y[0], Y - y[1])
    if not inside:
        raise BallNotInterior(f"B_rho({tuple(y)}) leaves the domain")
    if f is not None:
        vals = _nodal(f, mesh)
        near = dist <= rho + mesh.h
        if np.any(vals[near] < 0):
            raise BallNotInterior(f"B_rho({tuple(y)}) meets the region where f < 0")


def auxiliary_solution(mesh: Mesh, y, rho: float, f=None) -> ScalarField:
    """``s_y`` with ``-Delta_h s_y = 1_{B_rho(y)}`` (cell-fraction weighted)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _check_ball(mesh, y, rho, f)
    return solve_dirichlet(ScalarField(mesh, _ball_source(mesh, y, rho)))


def _vertex(values, k, pick):
    """Extremum of the parabola through ``values[k-1:k+2]`` (plain value at the ends)."""
    if k == 0 or k == len(values) - 1:
        return values[k]
    a, b, c = values[k - 1], values[k], values[k + 1]
    curv = a - 2 * b + c
    if curv == 0:
        return b
    t = 0.5 * (a - c) / curv
    if abs(t) > 1:
        return b
    v = b - 0.25 * (a - c) * t
    return pick(b, v)


def _ratio_range(s: ScalarField):
    """``min``/``max`` of ``s / delta`` over interior nodes and boundary limits.

    On 1D and radial meshes interior extrema are sharpened by a parabolic
    vertex through the neighbouring nodes, and the boundary limit uses the
    second-order one-sided normal derivative, so both constants converge at
    the order of the solver.
    """
    m = s.mesh
    delta = distance_field(m).values
    v = s.values
    h = m.h
    if m.kind == "rectangle":
        keep = delta >= 2 * h - 1e-12
        r = v[keep] / delta[keep]
        return float(r.min()), float(r.max())
    inner = np.flatnonzero(m.interior_mask & (delta > 0))
    ratio = v[inner] / delta[inner]
    ends = [(4 * v[-2] - v[-3]) / (2 * h)]
    if m.kind == "interval":
        ends.append((4 * v[1] - v[2]) / (2 * h))
    lo = min(_vertex(ratio, int(np.argmin(ratio)), min), min(ends))
    hi = max(_vertex(ratio, int(np.argmax(ratio)), max), max(ends))
    return float(lo), float(hi)


def uniform_constants(mesh: Mesh, K: CompactSet, rho: float, samples=BOUNDARY_SAMPLES, f=None):
    """``(c_star, C_star)`` bracketing ``s_y / delta`` for sampled ``y`` on ``dK``."""
    pts = K.boundary_points
    if len(pts) > samples:
        pts = pts[np.linspace(0, len(pts) - 1, samples).round().astype(int)]
    lows, highs = [], []
    for y in pts:
        lo, hi = _ratio_range(auxiliary_solution(mesh, y, rho, f))
        lows.append(lo)
        highs.append(hi)
    c_star, C_star = min(lows), max(highs)
    if c_star <= 0 or C_star <= 0:
        raise DegenerateRatio(f"non-positive ratio s_y/delta (min {c_star:.3e})")
    return c_star, C_star


# -- forcing helpers ----------------------------------------------------------------


def _nodal(f, mesh):
    """Pointwise node values of ``f`` (``nan``-free; singular poles sit on the boundary)."""
    if isinstance(f, ScalarField):
        return f.values
    if isinstance(f, PiecewiseForcing):
        if mesh.kind == "rectangle":
            raise ValueError("piecewise forcings are one-dimensional; sample a field on the rectangle")
        x = mesh.axes[0]
        prof = f.radial_profile() if mesh.kind == "disk" else f
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.asarray(prof(x), dtype=float)
        return np.where(np.isfinite(v), v, 0.0)
    return sample_forcing(f, mesh).values


def delta_integrals(f, mesh: Mesh):
    """``(int f+ delta, int f- delta)`` over the domain, in closed form when possible."""
    if isinstance(f, PiecewiseForcing) and mesh.kind == "interval":
        pos = f.positive_part()
        neg = f.negative_part()
        return weighted_integral(pos, WeightKind.DISTANCE), weighted_integral(neg, WeightKind.DISTANCE)
    if isinstance(f, PiecewiseForcing) and mesh.kind == "disk":
        prof = f.radial_profile()
        N, R = mesh.dim, mesh.hi[0]
        w = tuple(P.polymul([R, -1.0], [0.0] * (N - 1) + [1.0]))
        area = sphere_area(N)
        return area * prof.positive_part().integrate(0.0, R, w), area * prof.negative_part().integrate(0.0, R, w)
    vals = sample_forcing(f, mesh).values
    delta = distance_field(mesh).values
    return mesh.integrate(np.maximum(vals, 0) * delta), mesh.integrate(np.maximum(-vals, 0) * delta)


def _check_sign_structure(f, mesh, K, rho):
    vals = _nodal(f, mesh)
    if np.any(vals[K.mask] < 0):
        raise SignStructureViolation("f is negative somewhere on K")
    if not np.any(vals[K.mask] > 0):
        raise SignStructureViolation("f vanishes identically on K")


# -- hypotheses ------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisReport:
    c_star: float = math.nan
    C_star: float = math.nan
    c_hat: float = math.nan
    C_plus: float = math.nan
    alpha: float = math.nan
    epsilon: float = math.nan
    M: float = math.nan
    k: float = math.nan
    h1: Verdict = Verdict.FAILS
    h2: Verdict = Verdict.FAILS
    witnesses: tuple = ()
    pos_integral: float = math.nan
    neg_integral: float = math.nan
    rho: float = math.nan
    compact: CompactSet = field(default=None, repr=False)
    forcing: object = field(default=None, repr=False)

    def lines(self):
        names = ("c_star", "C_star", "c_hat", "C_plus", "alpha", "epsilon", "M", "k", "pos_integral", "neg_integral", "rho")
        out = [f"{n} = {getattr(self, n):.12g}" for n in names]
        out += [f"h1 = {self.h1.value}", f"h2 = {self.h2.value}"]
        out += [f"witness {w.condition} at {np.round(np.atleast_1d(w.location), 12).tolist()} margin {w.margin:.6g}" for w in self.witnesses]
        return out


def check_h1(f, mesh: Mesh, K: CompactSet, rho: float, samples=BOUNDARY_SAMPLES) -> HypothesisReport:
    """Balance hypothesis ``c* int f+ delta > C* int f- delta`` and the bound ``C+``."""
    _check_sign_structure(f, mesh, K, rho)
    c_star, C_star = uniform_constants(mesh, K, rho, samples, f)
    pos, neg = delta_integrals(f, mesh)
    c_hat = 1.0 / (ball_volume(_dimension(mesh)) * rho ** _dimension(mesh))
    lhs, rhs = c_star * pos, C_star * neg
    verdict, margin = compare(lhs, rhs)
    C_plus = c_hat * margin
    wit = (Witness("h1", tuple(K.boundary_points[0]), margin),)
    return HypothesisReport(
        c_star=c_star, C_star=C_star, c_hat=c_hat, C_plus=C_plus, h1=verdict, witnesses=wit,
        pos_integral=pos, neg_integral=neg, rho=rho, compact=K, forcing=f,
    )


def _phi_on_boundary(phi, K):
    return float(np.max(_interp(phi, K.boundary_points)))


def _ring_nodes(mesh, K):
    ring = K.ring_mask.copy()
    if mesh.kind == "rectangle":
        # corners break phi_1 ~ delta; drop nodes within 2h of a corner
        X, Y = mesh.coords
        hx, hy = mesh.spacing
        near_x = (X < 2 * hx + 1e-12) | (X > mesh.hi[0] - 2 * hx - 1e-12)
        near_y = (Y < 2 * hy + 1e-12) | (Y > mesh.hi[1] - 2 * hy - 1e-12)
        ring &= ~(near_x & near_y)
    return ring


def h2_epsilon(mesh: Mesh, K: CompactSet, alpha: float):
    """``min ((alpha - 1)|grad phi_1|^2 - lambda_1 phi_1^2)`` over the closed ring, with its node."""
    pair = first_eigenpair(mesh)
    phi = pair.field.values
    grad = gradient_norm(pair.field).values
    q = (alpha - 1.0) * grad**2 - pair.value * phi**2
    ring = _ring_nodes(mesh, K)
    idx = np.flatnonzero(ring.ravel())
    j = idx[np.argmin(q.ravel()[idx])]
    return float(q.ravel()[j]), _node_coords(mesh, j)


def _node_coords(mesh, flat_index):
    if mesh.kind == "rectangle":
        i, j = np.unravel_index(flat_index, mesh.shape)
        return (float(mesh.axes[0][i]), float(mesh.axes[1][j]))
    return (float(mesh.axes[0][flat_index]),)


def check_h2(f, mesh: Mesh, K: CompactSet, alpha=None, report: HypothesisReport = None) -> HypothesisReport:
    """Decay hypothesis for ``alpha`` (or the first passing value of the scan when ``alpha`` is None)."""
    if report is None or not np.isfinite(report.C_plus):
        raise PrerequisiteFailed("C+ is unset; run check_h1 first")
    if alpha is None:
        last = None
        for a in ALPHA_SCAN:
            last = check_h2(f, mesh, K, a, report)
            if last.h2 is Verdict.HOLDS:
                return last
        return last
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    pair = first_eigenpair(mesh)
    eps, eps_at = h2_epsilon(mesh, K, alpha)
    top = _phi_on_boundary(pair.field, K) ** alpha
    M = alpha * report.C_plus * eps / top
    k = report.C_plus / top
    witnesses = list(report.witnesses) + [Witness("h2-epsilon", eps_at, eps)]
    if eps <= 0 or report.C_plus <= 0:
        return replace(report, alpha=alpha, epsilon=eps, M=M, k=k, h2=Verdict.FAILS, witnesses=tuple(witnesses))
    vals = _nodal(f, mesh)
    phi = pair.field.values
    ring = ~K.mask & mesh.interior_mask
    with np.errstate(divide="ignore"):
        gap = vals + M * phi ** (alpha - 2.0)
    idx = np.flatnonzero(ring.ravel())
    j = idx[np.argmin(gap.ravel()[idx])]
    worst = float(gap.ravel()[j])
    witnesses.append(Witness("h2-decay", _node_coords(mesh, j), worst))
    verdict = Verdict.HOLDS if worst >= 0 else Verdict.FAILS
    return replace(report, alpha=alpha, epsilon=eps, M=M, k=k, h2=verdict, witnesses=tuple(witnesses))


def check_hypotheses(f, mesh, K, rho, alpha=None, samples=BOUNDARY_SAMPLES) -> HypothesisReport:
    return check_h2(f, mesh, K, alpha, check_h1(f, mesh, K, rho, samples))


# -- subsolution and certificate ---------------------------------------------------------


def build_subsolution(report: HypothesisReport, mesh: Mesh, f=None, slack=SUBSOLUTION_SLACK) -> ScalarField:
    """``min(k phi_1^alpha, C+)``, after checking the ring subsolution inequalities node by node."""
    if report.h1 is not Verdict.HOLDS or report.h2 is not Verdict.HOLDS:
        raise PrerequisiteFailed("both hypotheses must hold")
    f = report.forcing if f is None else f
    K = report.compact
    phi = first_eigenpair(mesh).field
    w = ScalarField(mesh, report.k * phi.values**report.alpha)
    on_dK = report.k * _interp(phi, K.boundary_points) ** report.alpha
    excess = on_dK - report.C_plus
    if np.max(excess) > 1e-12 * report.C_plus:
        i = int(np.argmax(excess))
        raise SubsolutionCheckFailed("w exceeds C+ on dK", tuple(K.boundary_points[i]), float(excess[i]))
    tau = slack * mesh.h**2 * w.sup()
    defect = laplacian_apply(w).values - sample_forcing(f, mesh).values
    ring = ~K.mask & mesh.interior_mask
    idx = np.flatnonzero(ring.ravel())
    j = idx[np.argmax(defect.ravel()[idx])]
    if defect.ravel()[j] > tau:
        raise SubsolutionCheckFailed("-Delta_h w > f + tau on the ring", _node_coords(mesh, j), float(defect.ravel()[j]))
    return ScalarField(mesh, np.minimum(w.values, report.C_plus))


@dataclass(frozen=True, eq=False)
class PositivityCertificate:
    report: HypothesisReport
    subsolution: ScalarField
    solution: ScalarField
    min_u: float
    sandwich_gap: float
    tolerance: float
    worst_node: tuple

    def lines(self):
        out = [f"mesh = {self.solution.mesh.describe()}", f"K = {self.report.compact.describe()}"]
        out += self.report.lines()
        out += [
            f"min_u = {self.min_u:.12g}",
            f"sandwich_gap = {self.sandwich_gap:.12g}",
            f"sandwich_tolerance = {self.tolerance:.12g}",
            f"worst_node = {list(self.worst_node)}",
            "c_hat = 1/|B_rho| (mean value over the ball around each point of dK)",
        ]
        return out


def verify_positivity(f, mesh: Mesh, K: CompactSet, rho: float, alpha=None, samples=BOUNDARY_SAMPLES,
                      sandwich_constant=SANDWICH_CONSTANT) -> PositivityCertificate:
    """Run both hypotheses, build ``w``, solve, and certify ``u >= w - C h^2`` and ``u > 0`` inside."""
    report = check_hypotheses(f, mesh, K, rho, alpha, samples)
    if report.h1 is not Verdict.HOLDS:
        raise PrerequisiteFailed(f"balance hypothesis fails (C+ = {report.C_plus:.3e})")
    if report.h2 is not Verdict.HOLDS:
        raise PrerequisiteFailed(f"decay hypothesis fails for alpha = {report.alpha}")
    w = build_subsolution(report, mesh, f)
    u = solve_dirichlet(f, mesh)
    d = u.values - w.values
    inner = mesh.interior_mask
    idx = np.flatnonzero(inner.ravel())
    j = idx[np.argmin(d.ravel()[idx])]
    gap = float(d.ravel()[j])
    tol = sandwich_constant * mesh.h**2 * max(u.sup(), w.sup())
    if gap < -tol:
        raise CertificateFailed("u < w - C h^2", _node_coords(mesh, j), gap)
    min_u = float(u.values[inner].min())
    if min_u <= 0:
        k = idx[np.argmin(u.values.ravel()[idx])]
        raise CertificateFailed("u is not positive inside", _node_coords(mesh, k), min_u)
    return PositivityCertificate(report, w, u, min_u, gap, tol, _node_coords(mesh, j))


# -- flatness and zero extension -------------------------------------------------------------


@dataclass(frozen=True)
class FlatnessCheck:
    verdict: Verdict
    integral: float
    abs_integral: float
    max_boundary_slope: float
    green_defect: float


def _boundary_quotients(u: ScalarField):
    """Outward normal difference quotients ``-u_1 / h`` and the boundary measure per node."""
    m = u.mesh
    v = u.values
    h = m.h
    if m.kind == "interval":
        return np.array([-v[1] / h, -v[-2] / h]), np.array([1.0, 1.0])
    if m.kind == "disk":
        R = m.hi[0]
        return np.array([-v[-2] / h]), np.array([sphere_area(m.dim) * R ** (m.dim - 1)])
    hx, hy = m.spacing
    q = np.concatenate([-v[1, 1:-1] / hx, -v[-2, 1:-1] / hx, -v[1:-1, 1] / hy, -v[1:-1, -2] / hy])
    meas = np.concatenate([np.full(m.n[1] - 1, hy)] * 2 + [np.full(m.n[0] - 1, hx)] * 2)
    return q, meas


def _total_integral(f, mesh):
    if isinstance(f, PiecewiseForcing):
        if mesh.kind == "interval":
            return f.integrate(), f.positive_part().integrate() + f.negative_part().integrate()
        prof = f.radial_profile()
        w = tuple([0.0] * (mesh.dim - 1) + [1.0])
        area = sphere_area(mesh.dim)
        return area * prof.integrate(0.0, None, w), area * (
            prof.positive_part().integrate(0.0, None, w) + prof.negative_part().integrate(0.0, None, w)
        )
    vals = sample_forcing(f, mesh).values
    return mesh.integrate(vals), mesh.integrate(np.abs(vals))


def verify_flatness_nd(f, mesh: Mesh, certificate: PositivityCertificate = None, tol=1e-9) -> FlatnessCheck:
    """``|int f| < tol int |f|`` for a positive solution, with boundary slope diagnostics.

    Positivity comes from ``certificate`` when given, otherwise from the
    discrete solution itself (``min u >= 0`` at interior nodes).
    """
    if isinstance(f, PiecewiseForcing) and f.max_beta >= 1.0:
        raise PrerequisiteFailed("flatness needs f in L^1")
    u = certificate.solution if certificate is not None else solve_dirichlet(f, mesh)
    if certificate is None and u.values[mesh.interior_mask].min() < -1e-12 * u.sup():
        raise PrerequisiteFailed("the discrete solution is not nonnegative")
    total, mass = _total_integral(f, mesh)
    q, meas = _boundary_quotients(u)
    green = float(np.sum(q * meas) + total)
    verdict = Verdict.HOLDS if abs(total) < tol * mass else Verdict.FAILS
    return FlatnessCheck(verdict, total, mass, float(np.max(np.abs(q))), green)


def _pad(values, small: Mesh, big: Mesh):
    out = np.zeros(big.shape)
    if small.kind == "disk":
        out[: small.shape[0]] = values
        return out
    off = int(round((small.lo[0] - big.lo[0]) / small.h))
    out[off : off + small.shape[0]] = values
    return out


def _check_aligned(small: Mesh, big: Mesh):
    if small.kind != big.kind or small.kind == "rectangle" or small.dim != big.dim:
        raise MeshMisaligned("zero extension supports interval and disk meshes of the same kind")
    if abs(small.h - big.h) > 1e-12 * small.h:
        raise MeshMisaligned("meshes must share the spacing")
    contains = big.lo[0] <= small.lo[0] and big.hi[0] >= small.hi[0]
    if not contains or (big.lo[0] == small.lo[0] and big.hi[0] == small.hi[0]):
        raise MeshMisaligned("the big mesh must strictly contain the small one")
    off = (small.lo[0] - big.lo[0]) / small.h
    if abs(off - round(off)) > 1e-9:
        raise MeshMisaligned("nodes are not aligned")


def extend_by_zero_nd(f, u: ScalarField, mesh_big: Mesh, constant=SANDWICH_CONSTANT):
    """Zero-pad ``f`` and ``u`` to ``mesh_big`` and certify the padded ``u`` solves the big problem."""
    small = u.mesh
    _check_aligned(small, mesh_big)
    check = verify_flatness_nd(f, small)
    if check.verdict is not Verdict.HOLDS:
        raise NotFlat(f"int f = {check.integral:.3e} is not zero")
    fs = sample_forcing(f, small)
    f_big = ScalarField(mesh_big, _pad(fs.values, small, mesh_big))
    if isinstance(f, PiecewiseForcing):
        if mesh_big.kind == "disk":
            ext = f.radial_profile().extended(0.0, mesh_big.hi[0])
        else:
            ext = f.extended(mesh_big.lo[0], mesh_big.hi[0])
        f_big = sample_forcing(ext, mesh_big)
    u_big = ScalarField(mesh_big, _pad(u.values, small, mesh_big))
    direct = solve_dirichlet(f_big)
    gap = float(np.max(np.abs(direct.values - u_big.values)))
    tol = constant * small.h**2 * max(u.sup(), 1e-300)
    if gap > tol:
        raise NotFlat(f"padded solution differs from the direct solve by {gap:.3e} (> {tol:.3e})")
    return f_big, u_big
