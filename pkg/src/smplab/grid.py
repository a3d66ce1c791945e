"""Finite-difference meshes, the Dirichlet Laplacian and its first eigenpairs.

Three mesh kinds are supported:

* ``interval``  -- uniform nodes on ``[lo, hi]``;
* ``rectangle`` -- tensor grid on ``[0, Lx] x [0, Ly]`` (5-point stencil);
* ``disk``      -- radially symmetric functions on the ball ``B_R`` of
  ``R^N``, discretised in ``r`` by the conservative flux form of
  ``-u'' - (N-1)/r u'`` over dual cells ``[r - h/2, r + h/2]``; the centre
  row reduces to ``2N (u_0 - u_1)/h^2``.  The scheme is exact on quadratics.

All operators act on interior unknowns; boundary nodes carry the Dirichlet
value zero.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import cg, splu

from .errors import NoConvergence, SolverDiverged
from .forcing import PiecewiseForcing

MIN_NODES = 16


@dataclass(frozen=True)
class Mesh:
    kind: str
    n: tuple
    lo: tuple
    hi: tuple
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle", "disk"):
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if min(self.n) < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} cells per axis")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty mesh extent")

    # -- constructors -------------------------------------------------------
    @classmethod
    def interval(cls, n, lo=-1.0, hi=1.0):
        return cls("interval", (int(n),), (float(lo),), (float(hi),))

    @classmethod
    def rectangle(cls, nx, ny, Lx=1.0, Ly=1.0):
        return cls("rectangle", (int(nx), int(ny)), (0.0, 0.0), (float(Lx), float(Ly)), dim=2)

    @classmethod
    def disk(cls, n, R=1.0, dim=2):
        return cls("disk", (int(n),), (0.0,), (float(R),), dim=int(dim))

    # -- geometry -----------------------------------------------------------
    @property
    def spacing(self):
        return tuple((h - l) / n for l, h, n in zip(self.lo, self.hi, self.n))

    @property
    def h(self):
        return max(self.spacing)

    @property
    def shape(self):
        return tuple(n + 1 for n in self.n)

    @cached_property
    def axes(self):
        return tuple(np.linspace(l, h, n + 1) for l, h, n in zip(self.lo, self.hi, self.n))

    @cached_property
    def coords(self):
        if self.kind == "rectangle":
            return np.meshgrid(*self.axes, indexing="ij")
        return (self.axes[0],)

    @cached_property
    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        if self.kind == "disk":
            m[-1] = True
        elif self.kind == "interval":
            m[0] = m[-1] = True
        else:
            m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    @property
    def interior_mask(self):
        return ~self.boundary_mask

    @property
    def n_unknowns(self):
        return int(self.interior_mask.sum())

    @cached_property
    def weights(self):
        """Quadrature weights for the mesh inner product (trapezoid rule)."""
        if self.kind == "interval":
            w = np.full(self.shape, self.h)
            w[0] = w[-1] = 0.5 * self.h
            return w
        if self.kind == "rectangle":
            hx, hy = self.spacing
            wx = np.full(self.shape[0], hx)
            wy = np.full(self.shape[1], hy)
            wx[[0, -1]] *= 0.5
            wy[[0, -1]] *= 0.5
            return np.outer(wx, wy)
        N, h = self.dim, self.h
        r = self.axes[0]
        w = sphere_area(N) * radial_cell_volume(r, h, N)
        w[-1] = sphere_area(N) * (r[-1] ** N - (r[-1] - 0.5 * h) ** N) / N
        return w

    @property
    def measure(self):
        if self.kind == "disk":
            return ball_volume(self.dim) * self.hi[0] ** self.dim
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    def inner(self, u, v):
        return float(np.sum(self.weights * np.asarray(u) * np.asarray(v)))

    def integrate(self, u):
        return float(np.sum(self.weights * np.asarray(u)))

    # -- interior/full conversion -------------------------------------------
    def restrict(self, values):
        return np.asarray(values, dtype=float)[self.interior_mask]

    def prolong(self, interior):
        out = np.zeros(self.shape)
        out[self.interior_mask] = interior
        return out

    @cached_property
    def operator(self):
        return DirichletLaplacian(self)

    def describe(self):
        if self.kind == "interval":
            return f"interval n={self.n[0]} lo={self.lo[0]:g} hi={self.hi[0]:g}"
        if self.kind == "rectangle":
            return f"rectangle nx={self.n[0]} ny={self.n[1]} Lx={self.hi[0]:g} Ly={self.hi[1]:g}"
        return f"disk n={self.n[0]} R={self.hi[0]:g} dim={self.dim}"


def radial_cell_volume(r, h, N):
    """``int r^(N-1)`` over the dual cell ``[r - h/2, r + h/2]`` (clipped at 0)."""
    r = np.asarray(r, dtype=float)
    return ((r + 0.5 * h) ** N - np.maximum(r - 0.5 * h, 0.0) ** N) / N


def sphere_area(N):
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


def ball_volume(N):
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


@dataclass(frozen=True, eq=False)
class ScalarField:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.mesh.shape:
            raise ValueError(f"field shape {v.shape} does not match mesh {self.mesh.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_interior(cls, mesh, interior):
        return cls(mesh, mesh.prolong(interior))

    @property
    def interior(self):
        return self.values[self.mesh.interior_mask]

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.mesh, self.values + o)

    def __sub__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.mesh, self.values - o)

    def __mul__(self, c):
        o = c.values if isinstance(c, ScalarField) else c
        return ScalarField(self.mesh, self.values * o)

    __rmul__ = __mul__

    def to_csv(self, value_name="value"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        m = self.mesh
        if m.kind == "rectangle":
            X, Y = m.coords
            w.writerow(["x", "y", value_name])
            for x, y, v in zip(X.ravel(), Y.ravel(), self.values.ravel()):
                w.writerow([f"{x:.12g}", f"{y:.12g}", f"{v:.12g}"])
        else:
            w.writerow(["r" if m.kind == "disk" else "x", value_name])
            for x, v in zip(m.axes[0], self.values):
                w.writerow([f"{x:.12g}", f"{v:.12g}"])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    field: ScalarField
    residual: float
    iterations: int = 0


class DirichletLaplacian:
    """Discrete ``-Delta`` on the interior unknowns of a mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self._lu = {}
        self.matrix = self._assemble()
        self.diagonal = self.matrix.diagonal()

    def _assemble(self):
        m = self.mesh
        if m.kind == "interval":
            n = m.n[0] - 1
            h2 = m.h**2
            main = np.full(n, 2.0 / h2)
            off = np.full(n - 1, -1.0 / h2)
            self._bands = (off, main, off)
            return sp.diags([off, main, off], [-1, 0, 1], format="csr")
        if m.kind == "disk":
            n, h, N = m.n[0], m.h, m.dim
            r = m.axes[0][:n]
            rp = (r + 0.5 * h) ** (N - 1)
            rm = np.abs(r - 0.5 * h) ** (N - 1)
            rm[0] = 0.0
            denom = radial_cell_volume(r, h, N) * h
            upper = -rp / denom
            lower = -rm / denom
            main = (rp + rm) / denom
            self._bands = (lower[1:], main, upper[:-1])
            return sp.diags([lower[1:], main, upper[:-1]], [-1, 0, 1], format="csr")
        (nx, ny), (hx, hy) = m.n, m.spacing
        tx = sp.diags([-np.ones(nx - 2), 2 * np.ones(nx - 1), -np.ones(nx - 2)], [-1, 0, 1]) / hx**2
        ty = sp.diags([-np.ones(ny - 2), 2 * np.ones(ny - 1), -np.ones(ny - 2)], [-1, 0, 1]) / hy**2
        self._bands = None
        return (sp.kron(tx, sp.identity(ny - 1)) + sp.kron(sp.identity(nx - 1), ty)).tocsr()

    def apply(self, x):
        return self.matrix @ x

    def solve(self, rhs, shift=0.0, method="auto"):
        """Solve ``(A + shift) x = rhs``; ``shift`` may be a scalar or a vector."""
        rhs = np.asarray(rhs, dtype=float)
        if self._bands is not None:
            lower, main, upper = self._bands
            ab = np.zeros((3, main.size))
            ab[0, 1:] = upper
            ab[1] = main + shift
            ab[2, :-1] = lower
            return solve_banded((1, 1), ab, rhs)
        if method == "auto":
            method = "direct" if np.isscalar(shift) else "cg"
        if method == "direct" and np.isscalar(shift):
            key = float(shift)
            if key not in self._lu:
                if len(self._lu) > 8:
                    self._lu.clear()
                self._lu[key] = splu((self.matrix + key * sp.identity(rhs.size)).tocsc())
            return self._lu[key].solve(rhs)
        if method == "direct":
            from scipy.sparse.linalg import spsolve

            return spsolve((self.matrix + sp.diags(shift)).tocsc(), rhs)
        return self._pcg(rhs, shift)

    def _pcg(self, rhs, shift):
        A = self.matrix + sp.diags(np.broadcast_to(shift, rhs.shape))
        dinv = 1.0 / A.diagonal()
        M = sp.diags(dinv)
        x, info = cg(A, rhs, rtol=1e-12, atol=0.0, M=M, maxiter=20 * rhs.size)
        if info != 0:
            raise SolverDiverged(f"conjugate gradient stalled (info={info})")
        res = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if res > 1e-10:
            raise SolverDiverged(f"relative residual {res:.3e} above target")
        return x


# -- sampling ------------------------------------------------------------------


def sample_forcing(f, mesh: Mesh) -> ScalarField:
    """Node values of a forcing on ``mesh``.

    A :class:`PiecewiseForcing` is sampled by exact cell averages (weighted
    by ``r**(N-1)`` on disks) so singular pieces keep their integrable mass.
    Callables are evaluated pointwise; fields pass through.
    """
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, PiecewiseForcing):
        if mesh.kind == "rectangle":
            raise ValueError("piecewise forcings are one-dimensional")
        x = mesh.axes[0]
        h = mesh.h
        lo, hi = mesh.lo[0], mesh.hi[0]
        if mesh.kind == "disk":
            prof = f.radial_profile()
            if abs(prof.domain[1] - hi) > 1e-12 * hi:
                raise ValueError("radial profile does not match the disk radius")
            weight = [0.0] * (mesh.dim - 1) + [1.0]
        else:
            prof = f
            if abs(f.domain[0] - lo) > 1e-12 or abs(f.domain[1] - hi) > 1e-12:
                raise ValueError(f"forcing domain {f.domain} does not match mesh [{lo}, {hi}]")
            weight = [1.0]
        vals = np.zeros(mesh.shape)
        for i, xi in enumerate(x):
            a, b = max(lo, xi - 0.5 * h), min(hi, xi + 0.5 * h)
            wint = np.polynomial.polynomial.polyint(weight)
            wmass = np.polynomial.polynomial.polyval(b, wint) - np.polynomial.polynomial.polyval(a, wint)
            vals[i] = prof.integrate(a, b, tuple(weight)) / wmass
        return ScalarField(mesh, vals)
    if callable(f):
        return ScalarField(mesh, np.broadcast_to(f(*mesh.coords), mesh.shape))
    return ScalarField(mesh, np.broadcast_to(np.asarray(f, dtype=float), mesh.shape))


# -- operations ----------------------------------------------------------------


def laplacian_apply(field: ScalarField) -> ScalarField:
    """Discrete ``-Delta`` of a field (boundary values act as Dirichlet data)."""
    m = field.mesh
    u = field.values
    out = np.zeros(m.shape)
    if m.kind == "interval":
        out[1:-1] = (2 * u[1:-1] - u[:-2] - u[2:]) / m.h**2
    elif m.kind == "rectangle":
        hx, hy = m.spacing
        out[1:-1, 1:-1] = (2 * u[1:-1, 1:-1] - u[:-2, 1:-1] - u[2:, 1:-1]) / hx**2 + (
            2 * u[1:-1, 1:-1] - u[1:-1, :-2] - u[1:-1, 2:]
        ) / hy**2
    else:
        interior = m.restrict(u)
        Au = m.operator.apply(interior)
        # boundary value enters the last interior row
        n, h, N = m.n[0], m.h, m.dim
        r = m.axes[0]
        Au[-1] -= (r[n - 1] + 0.5 * h) ** (N - 1) / (radial_cell_volume(r[n - 1], h, N) * h) * u[-1]
        out[:-1] = Au
    return ScalarField(m, out)


def solve_dirichlet(f, mesh: Mesh = None, shift=0.0, method="auto") -> ScalarField:
    """Solve ``-Delta_h u + shift u = f`` with homogeneous Dirichlet data.

    1D and radial systems use tridiagonal elimination; rectangles use
    Jacobi-preconditioned conjugate gradients to relative residual 1e-12
    (pass ``method="direct"`` for a sparse LU).
    """
    if mesh is None:
        if not isinstance(f, ScalarField):
            raise ValueError("mesh required unless f is a ScalarField")
        mesh = f.mesh
    rhs = sample_forcing(f, mesh)
    x = mesh.operator.solve(mesh.restrict(rhs.values), shift=shift, method="cg" if method == "auto" else method)
    return ScalarField.from_interior(mesh, x)


def distance_field(mesh: Mesh) -> ScalarField:
    if mesh.kind == "interval":
        x = mesh.axes[0]
        d = np.minimum(x - mesh.lo[0], mesh.hi[0] - x)
    elif mesh.kind == "rectangle":
        X, Y = mesh.coords
        d = np.minimum.reduce([X, mesh.hi[0] - X, Y, mesh.hi[1] - Y])
    else:
        d = mesh.hi[0] - mesh.axes[0]
    return ScalarField(mesh, d)


def gradient_norm(field: ScalarField) -> ScalarField:
    """``|grad_h u|``: centred differences inside, second-order one-sided at the edges."""
    m = field.mesh
    if m.kind == "rectangle":
        gx, gy = np.gradient(field.values, *m.spacing, edge_order=2)
        return ScalarField(m, np.hypot(gx, gy))
    g = np.gradient(field.values, m.h, edge_order=2)
    if m.kind == "disk":
        g[0] = 0.0
    return ScalarField(m, np.abs(g))


def _ramp(mesh):
    if mesh.kind == "disk":
        r = mesh.axes[0]
        return (r / mesh.hi[0]) ** 2 - 0.5
    x = mesh.coords[0]
    return x - 0.5 * (mesh.lo[0] + mesh.hi[0])


def _inverse_iteration(mesh, start, deflate=None, maxit=500, tol=1e-12):
    op = mesh.operator
    w = mesh.restrict(mesh.weights)
    method = "direct"

    def project(v):
        if deflate is None:
            return v
        return v - np.sum(w * v * deflate) / np.sum(w * deflate * deflate) * deflate

    x = project(start)
    x /= math.sqrt(np.sum(w * x * x))
    lam_old = np.inf
    for it in range(1, maxit + 1):
        y = project(op.solve(x, method=method))
        x = y / math.sqrt(np.sum(w * y * y))
        Ax = op.apply(x)
        lam = float(np.sum(w * Ax * x))
        res = np.max(np.abs(Ax - lam * x)) / np.max(np.abs(x))
        if abs(lam - lam_old) <= tol * lam and res <= 1e-9 * lam:
            return lam, x, res, it
        lam_old = lam
    raise NoConvergence(f"inverse iteration did not converge in {maxit} steps (residual {res:.2e})")


@lru_cache(maxsize=32)
def first_eigenpair(mesh: Mesh, maxit=500) -> EigenPair:
    """Principal Dirichlet eigenpair, ``phi_1 > 0`` with ``sup phi_1 = 1``."""
    start = np.ones(mesh.n_unknowns)
    lam, x, res, it = _inverse_iteration(mesh, start, maxit=maxit)
    x = x * np.sign(x.sum())
    scale = np.max(np.abs(x))
    return EigenPair(lam, ScalarField.from_interior(mesh, x / scale), res, it)


@lru_cache(maxsize=32)
def _second(mesh, maxit):
    first = first_eigenpair(mesh)
    phi1 = first.field.interior
    start = mesh.restrict(_ramp(mesh))
    lam, x, res, it = _inverse_iteration(mesh, start, deflate=phi1, maxit=maxit)
    ramp = mesh.restrict(_ramp(mesh))
    w = mesh.restrict(mesh.weights)
    if np.sum(w * x * ramp) < 0:
        x = -x
    x = x / np.max(np.abs(x))
    return EigenPair(lam, ScalarField.from_interior(mesh, x), res, it)


def second_eigenpair(mesh: Mesh, first: EigenPair = None, maxit=500) -> EigenPair:
    """Second eigenpair by inverse iteration deflated against ``phi_1``.

    On a disk mesh this is the second *radial* mode.  The sign is fixed by
    ``<phi_2, ramp> >= 0`` with ``ramp`` the first coordinate (``r**2`` on
    disks).
    """
    if first is not None and first.residual > 1e-8 * first.value:
        raise NoConvergence("first eigenpair is not accurate enough for deflation")
    return _second(mesh, maxit)
