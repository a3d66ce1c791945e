import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import jn_zeros

import oracles
from smplab.grid import (
    Mesh,
    ScalarField,
    distance_field,
    first_eigenpair,
    gradient_norm,
    laplacian_apply,
    sample_forcing,
    second_eigenpair,
    solve_dirichlet,
)
from smplab.presets import example1, flat_unit


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh.interval(8)
    with pytest.raises(ValueError):
        Mesh("sphere", (32,), (0.0,), (1.0,))
    with pytest.raises(ValueError):
        Mesh.interval(32, 1.0, 1.0)


def test_field_shape_and_immutability():
    m = Mesh.interval(32)
    with pytest.raises(ValueError):
        ScalarField(m, np.zeros(10))
    with pytest.raises(ValueError):
        ScalarField(m, np.full(m.shape, np.nan))
    f = ScalarField(m, np.zeros(m.shape))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


@pytest.mark.parametrize(
    "mesh, u, lap",
    [
        (Mesh.interval(32), lambda x: 1 - x**2, lambda x: 2.0 + 0 * x),
        (Mesh.rectangle(24, 40, 1.0, 2.0), lambda x, y: x * (1 - x) * y * (2 - y),
         lambda x, y: 2 * y * (2 - y) + 2 * x * (1 - x)),
        (Mesh.disk(32, 1.0, 2), lambda r: 1 - r**2, lambda r: 4.0 + 0 * r),
        (Mesh.disk(32, 1.0, 3), lambda r: 1 - r**2, lambda r: 6.0 + 0 * r),
    ],
    ids=["interval", "rectangle", "disk2", "disk3"],
)
def test_operator_exact_on_quadratics(mesh, u, lap):
    field = ScalarField(mesh, u(*mesh.coords))
    got = laplacian_apply(field).values[mesh.interior_mask]
    assert np.max(np.abs(got - lap(*mesh.coords)[mesh.interior_mask])) < 1e-9


@pytest.mark.parametrize("kind", ["interval", "disk"])
def test_poisson_second_order(kind):
    errs = []
    for n in (32, 64, 128):
        if kind == "interval":
            mesh = Mesh.interval(n)
            x = mesh.axes[0]
            exact = np.cos(math.pi * x / 2)
            f = lambda x: (math.pi / 2) ** 2 * np.cos(math.pi * x / 2)
        else:
            mesh = Mesh.disk(n, 1.0, 2)
            r = mesh.axes[0]
            exact = 1 - r**4
            f = lambda r: 16 * r**2
        u = solve_dirichlet(f, mesh)
        errs.append(np.max(np.abs(u.values - exact)))
    order = oracles.convergence_order(errs)
    assert np.all(order > 1.8)


def test_interval_solve_matches_dense_matrix():
    n = 64
    A, x, h = oracles.interval_laplacian(n)
    f = np.sin(3 * x) + x**2
    u = solve_dirichlet(ScalarField.from_interior(Mesh.interval(n), f))
    assert np.max(np.abs(u.interior - np.linalg.solve(A, f))) < 1e-12


@pytest.mark.parametrize("shift", [0.0, 3.5])
def test_rectangle_solvers_agree(shift):
    mesh = Mesh.rectangle(20, 28, 1.0, 1.5)
    rng = np.random.default_rng(1)
    rhs = rng.normal(size=mesh.n_unknowns)
    op = mesh.operator
    a = op.solve(rhs, shift=shift, method="direct")
    b = op.solve(rhs, shift=shift, method="cg")
    c = op.solve(rhs, shift=np.full(rhs.size, shift), method="direct")
    assert np.max(np.abs(a - b)) < 1e-8 * np.max(np.abs(a))
    assert np.max(np.abs(a - c)) < 1e-12 * np.max(np.abs(a))


@settings(max_examples=25)
@given(arrays(float, 63, elements=st.floats(0, 10)))
def test_discrete_maximum_principle(f):
    # the operator is an M-matrix: f >= 0 gives u >= 0
    mesh = Mesh.interval(64)
    u = solve_dirichlet(ScalarField.from_interior(mesh, f))
    assert u.values.min() >= -1e-12 * max(1.0, u.sup())


@settings(max_examples=25)
@given(arrays(float, 33, elements=st.floats(-5, 5)), arrays(float, 33, elements=st.floats(0, 5)))
def test_radial_comparison(f, bump):
    mesh = Mesh.disk(32, 1.0, 2)
    lo = solve_dirichlet(ScalarField(mesh, f))
    hi = solve_dirichlet(ScalarField(mesh, f + bump))
    assert np.all(hi.values - lo.values >= -1e-12 * max(1.0, hi.sup(), lo.sup()))


def test_cell_average_sampling():
    mesh = Mesh.interval(16, -2.0, 2.0)
    vals = sample_forcing(example1(2.0), mesh).values
    # nodes at -1 and 1 straddle the jump and average to zero
    x = mesh.axes[0]
    assert vals[np.isclose(np.abs(x), 1.0)] == pytest.approx([0.0, 0.0], abs=1e-15)
    assert np.all(vals[np.abs(x) < 0.9] == 1.0)
    with pytest.raises(ValueError):
        sample_forcing(flat_unit(), mesh)


@pytest.mark.parametrize(
    "mesh, lam1",
    [
        (Mesh.interval(128), math.pi**2 / 4),
        (Mesh.rectangle(48, 48, 1.0, 2.0), math.pi**2 * (1 + 1 / 4)),
        (Mesh.disk(128, 1.0, 2), float(jn_zeros(0, 1)[0] ** 2)),
        (Mesh.disk(128, 1.0, 3), math.pi**2),
    ],
    ids=["interval", "rectangle", "disk2", "ball3"],
)
def test_first_eigenpair(mesh, lam1):
    pair = first_eigenpair(mesh)
    assert pair.value == pytest.approx(lam1, rel=2e-3)
    phi = pair.field.values[mesh.interior_mask]
    assert phi.min() > 0 and phi.max() == pytest.approx(1.0)


def test_second_eigenpair_orthogonal_and_odd():
    mesh = Mesh.interval(128)
    p1, p2 = first_eigenpair(mesh), second_eigenpair(mesh)
    assert mesh.inner(p1.field.values, p2.field.values) == pytest.approx(0.0, abs=1e-10)
    v = p2.field.values
    assert np.max(np.abs(v + v[::-1])) < 1e-8
    assert p2.value == pytest.approx(math.pi**2, rel=2e-3)


def test_distance_and_gradient():
    mesh = Mesh.rectangle(20, 20, 2.0, 1.0)
    d = distance_field(mesh).values
    assert d.max() == pytest.approx(0.5) and d[mesh.boundary_mask].max() == 0.0
    X, Y = mesh.coords
    g = gradient_norm(ScalarField(mesh, 3 * X - 4 * Y)).values
    assert np.max(np.abs(g - 5.0)) < 1e-12


def test_csv_header_by_kind():
    assert ScalarField(Mesh.interval(16), np.zeros(17)).to_csv("u").splitlines()[0] == "x,u"
    assert ScalarField(Mesh.disk(16), np.zeros(17)).to_csv("u").splitlines()[0] == "r,u"
    m = Mesh.rectangle(16, 16)
    rows = ScalarField(m, np.zeros(m.shape)).to_csv("u").splitlines()
    assert rows[0] == "x,y,u" and len(rows) == 1 + 17 * 17
