"""``smplab`` command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 when a checked
condition comes out ``Fails``.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import maxprinciple as mp
from . import parabolic as par
from . import semilinear as sl
from . import solver1d as s1
from .config import TARGETS, RunConfig, build_config, forcing_from
from .errors import ConfigError, PrerequisiteFailed, ResolventNotPositive, SMPError, SignStructureViolation
from .forcing import PiecewiseForcing
from .grid import Mesh, ScalarField, first_eigenpair, sample_forcing, second_eigenpair, solve_dirichlet
from .output import Panel, json_text, report_text, svg_text, write_text
from .presets import CRITICAL_REVERSED, cubic_dead_core, example1, reversed_example1
from .verdict import Verdict

EXIT_OK, EXIT_CONFIG, EXIT_FAILS = 0, 1, 2

RUN_PRESETS = {
    "flat": """
        command = solve1d
        forcing {
            family = example1
            a = 2
        }
    """,
    "decay-fail": """
        command = solve1d
        forcing {
            family = example1
            a = 2.2
        }
    """,
    "classical": """
        command = solve1d
        forcing {
            piece = -1 1 const 1
        }
    """,
    "dead-core": """
        command = solve1d
        forcing {
            family = cubic-dead-core
            b = 0.25
        }
    """,
    "power-law-pass": """
        command = check
        forcing {
            family = power-law
            R = 1
            r0 = 0.5
            C = 0.1
            beta = 0.5
        }
    """,
    "power-law-fail": """
        command = check
        forcing {
            family = power-law
            R = 1
            r0 = 0.9
            F = 1
            C = 0.01
            beta = 1.5
        }
    """,
    "figure1": """
        command = reproduce
        target = figure1
    """,
    "figure2": """
        command = reproduce
        target = figure2
    """,
    "disk-certificate": """
        command = certify
        forcing {
            symmetric = true
            piece = 0 0.9375 const 1
            piece = 0.9375 1 const -0.5
        }
        mesh {
            kind = disk
            n = 128
            R = 1
            dim = 2
        }
        compact {
            kind = ball
            radius = 0.75
            rho = 0.125
        }
    """,
    "semilinear": """
        command = semilinear
        forcing {
            family = flat-unit
        }
        mesh {
            kind = interval
            n = 256
        }
        semilinear {
            lam = 0
            alpha = 0.5
        }
    """,
    "parabolic": """
        command = parabolic
        forcing {
            family = flat-unit
        }
        mesh {
            kind = interval
            n = 512
        }
        parabolic {
            u0 = phi2
            dt = 0.0001
            theta = 0.5
            horizon = 4
            decay_horizon = 1
            snapshots = 0.5 1 2 4
        }
    """,
}

FIGURE1_VALUES = (1.0, 1.8, 2.0, 2.2)
FIGURE2_BRACKET = (3.0, 4.0)
FIGURE2_DEAD_CORE = (0.25, 0.5)


# -- helpers ---------------------------------------------------------------------------


def _forcing(cfg: RunConfig):
    sec = cfg.section("forcing")
    if not sec:
        raise ConfigError("a forcing block is required")
    return forcing_from(sec)


def _mesh(cfg: RunConfig, f=None, default_n=256) -> Mesh:
    sec = cfg.section("mesh")
    kind = sec.get("kind", "interval")
    try:
        if kind == "interval":
            lo = sec.get("lo", f.domain[0] if isinstance(f, PiecewiseForcing) else -1.0)
            hi = sec.get("hi", f.domain[1] if isinstance(f, PiecewiseForcing) else 1.0)
            return Mesh.interval(sec.get("n", default_n), lo, hi)
        if kind == "disk":
            R = sec.get("R", f.radial_profile().domain[1] if isinstance(f, PiecewiseForcing) else 1.0)
            return Mesh.disk(sec.get("n", default_n), R, sec.get("dim", 2))
        if kind == "rectangle":
            n = sec.get("n", default_n)
            return Mesh.rectangle(sec.get("nx", n), sec.get("ny", n), sec.get("Lx", 1.0), sec.get("Ly", 1.0))
    except ValueError as exc:
        raise ConfigError(f"mesh: {exc}") from None
    raise ConfigError(f"unknown mesh kind {kind!r} (interval, disk, rectangle)")


def _field(f, mesh: Mesh, center=None) -> ScalarField:
    """Sample ``f`` on ``mesh``; on rectangles a forcing acts as a radial profile about ``center``."""
    if mesh.kind != "rectangle" or not isinstance(f, PiecewiseForcing):
        try:
            return sample_forcing(f, mesh)
        except ValueError as exc:
            raise ConfigError(f"forcing does not fit the mesh: {exc}") from None
    prof = f.radial_profile()
    cx, cy = center if center is not None else (0.5 * mesh.hi[0], 0.5 * mesh.hi[1])
    X, Y = mesh.coords
    r = np.hypot(X - cx, Y - cy)
    vals = np.where(r <= prof.domain[1], np.nan_to_num(prof(np.minimum(r, prof.domain[1]))), 0.0)
    return ScalarField(mesh, vals)


def _out(cfg: RunConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _verdict_line(name, v):
    return f"{name} = {v.value if isinstance(v, Verdict) else v}"


def _profile_series(field: ScalarField, label):
    m = field.mesh
    if m.kind == "rectangle":
        j = m.n[1] // 2
        return (label, m.axes[0], field.values[:, j])
    return (label, m.axes[0], field.values)


# -- solve1d / check -------------------------------------------------------------------


def _condition_lines(f):
    try:
        rep = s1.check_conditions(f)
    except SignStructureViolation as exc:
        return None, [f"conditions = not applicable ({exc})"]
    lines = [
        _verdict_line("balance", rep.balance),
        _verdict_line("decay", rep.decay),
        _verdict_line("flatness", rep.flatness),
        _verdict_line("weighted_positivity", rep.weighted_positivity),
        f"r0 = {rep.r0:.12g}",
        f"boundary_derivative = {rep.boundary_derivative:.12g}",
    ]
    lines += [f"witness {w.condition} at {w.location:.12g} margin {w.margin:.6g}" for w in rep.witnesses]
    return rep, lines


def _classification_lines(c: s1.Classification):
    lines = [f"class = {c.verdict.value}", f"min_value = {c.min_value:.12g}"]
    lines.append("boundary_slopes = " + " ".join(f"{s:.12g}" for s in c.boundary_slopes))
    for a, b in c.regions:
        lines.append(f"region = {a:.12g} {b:.12g}")
    for t in c.touch_points:
        lines.append(f"touch_point = {t:.12g}")
    if not c.slopes_converged:
        lines.append("slopes_converged = false")
    return lines


def _fails(rep):
    return rep is not None and (rep.balance is Verdict.FAILS or rep.decay is Verdict.FAILS)


def cmd_solve1d(cfg: RunConfig) -> int:
    if cfg.get("target") in TARGETS:
        return cmd_reproduce(cfg)
    f = _forcing(cfg)
    grid_n = cfg.get("grid_n", cfg.section("mesh").get("n", 400))
    sol = s1.solve_exact(f, grid_n=grid_n)
    cls = s1.classify(f, grid_n=grid_n, solution=sol)
    rep, lines = _condition_lines(f)
    lines += _classification_lines(cls)
    out = _out(cfg)
    write_text(out / "u.csv", sol.to_csv())
    write_text(out / "conditions.report", report_text(cfg, lines, "solve1d"))
    write_text(out / "conditions.json", json_text(cfg, _condition_payload(rep, cls)))
    x = sol.samples.mesh.axes[0]
    panel = Panel(f"u ({cls.verdict.value})", [("u", x, sol.samples.values)])
    write_text(out / "figure.svg", svg_text([panel]))
    print("\n".join(lines))
    return EXIT_FAILS if _fails(rep) else EXIT_OK


def _condition_payload(rep, cls=None):
    out = {}
    if rep is not None:
        out["conditions"] = {
            "balance": rep.balance,
            "decay": rep.decay,
            "flatness": rep.flatness,
            "weighted_positivity": rep.weighted_positivity,
            "r0": rep.r0,
            "boundary_derivative": rep.boundary_derivative,
            "witnesses": [{"condition": w.condition, "location": w.location, "margin": w.margin} for w in rep.witnesses],
        }
    if cls is not None:
        out["classification"] = {
            "class": cls.verdict,
            "regions": [list(r) for r in cls.regions],
            "min_value": cls.min_value,
            "boundary_slopes": list(cls.boundary_slopes),
            "touch_points": list(cls.touch_points),
        }
    return out


def _compact(cfg, mesh):
    sec = cfg.section("compact")
    kind = sec.get("kind", "ball")
    try:
        if kind == "ball":
            if "radius" not in sec:
                raise ConfigError("compact ball needs a radius")
            center = sec.get("center")
            if center is not None and mesh.kind == "interval":
                center = center[0]
            return mp.CompactSet.ball(mesh, sec["radius"], center)
        if kind == "box":
            return mp.CompactSet.box(mesh, sec.get("bounds"))
    except ValueError as exc:
        raise ConfigError(f"compact: {exc}") from None
    raise ConfigError(f"unknown compact kind {kind!r} (ball, box)")


def _rho(cfg):
    rho = cfg.section("compact").get("rho")
    if rho is None:
        raise ConfigError("compact block needs rho")
    return rho


def cmd_check(cfg: RunConfig) -> int:
    f = _forcing(cfg)
    out = _out(cfg)
    if cfg.section("compact"):
        mesh = _mesh(cfg, f)
        rep = mp.check_hypotheses(_field(f, mesh), mesh, _compact(cfg, mesh), _rho(cfg),
                                  cfg.section("compact").get("alpha"))
        lines = rep.lines()
        payload = {name: getattr(rep, name) for name in ("c_star", "C_star", "c_hat", "C_plus", "alpha", "epsilon",
                                                          "M", "k", "h1", "h2")}
        write_text(out / "hypotheses.report", report_text(cfg, lines, "check"))
        write_text(out / "hypotheses.json", json_text(cfg, payload))
        print("\n".join(lines))
        fails = rep.h1 is Verdict.FAILS or rep.h2 is Verdict.FAILS
        return EXIT_FAILS if fails else EXIT_OK
    rep, lines = _condition_lines(f)
    if rep is not None and rep.balance is not Verdict.FAILS and rep.decay is not Verdict.FAILS:
        try:
            flat = s1.check_flatness(f, tol=cfg.tolerances["flatness"])
            lines.append(_verdict_line("flatness_checked", flat))
        except SMPError as exc:
            lines.append(f"flatness_checked = not applicable ({exc})")
    write_text(out / "conditions.report", report_text(cfg, lines, "check"))
    write_text(out / "conditions.json", json_text(cfg, _condition_payload(rep)))
    if rep is not None:
        print(f"verdicts = {rep.balance.value} {rep.decay.value} {rep.flatness.value}")
    print("\n".join(lines))
    return EXIT_FAILS if _fails(rep) else EXIT_OK


# -- N-dimensional ---------------------------------------------------------------------


def cmd_solve_nd(cfg: RunConfig) -> int:
    f = _forcing(cfg)
    mesh = _mesh(cfg, f)
    center = cfg.section("forcing").get("center")
    fld = _field(f, mesh, center)
    u = solve_dirichlet(fld, mesh)
    inner = u.values[mesh.interior_mask]
    lines = [f"mesh = {mesh.describe()}", f"min_interior_u = {inner.min():.12g}", f"max_u = {inner.max():.12g}"]
    try:
        fc = mp.verify_flatness_nd(fld, mesh, tol=cfg.tolerances["flatness"])
        lines += [_verdict_line("flatness", fc.verdict), f"integral_f = {fc.integral:.6e}",
                  f"max_boundary_slope = {fc.max_boundary_slope:.6e}"]
    except PrerequisiteFailed as exc:
        lines.append(f"flatness = not applicable ({exc})")
    out = _out(cfg)
    write_text(out / "u.csv", u.to_csv("u"))
    write_text(out / "solution.report", report_text(cfg, lines, "solve-nd"))
    write_text(out / "figure.svg", svg_text([Panel(mesh.describe(), [_profile_series(u, "u")],
                                                   xlabel="r" if mesh.kind == "disk" else "x")]))
    print("\n".join(lines))
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    f = _forcing(cfg)
    mesh = _mesh(cfg, f)
    fld = _field(f, mesh, cfg.section("forcing").get("center"))
    K = _compact(cfg, mesh)
    out = _out(cfg)
    try:
        cert = mp.verify_positivity(fld, mesh, K, _rho(cfg), cfg.section("compact").get("alpha"))
    except SMPError as exc:
        lines = [f"certificate = failed ({type(exc).__name__}: {exc})"]
        write_text(out / "certificate.report", report_text(cfg, lines, "certify"))
        write_text(out / "certificate.json", json_text(cfg, {"certified": False, "reason": str(exc)}))
        print("\n".join(lines))
        return EXIT_FAILS
    lines = ["certificate = holds"] + cert.lines()
    write_text(out / "u.csv", cert.solution.to_csv("u"))
    write_text(out / "w.csv", cert.subsolution.to_csv("w"))
    write_text(out / "certificate.report", report_text(cfg, lines, "certify"))
    payload = {"certified": True, "min_u": cert.min_u, "sandwich_gap": cert.sandwich_gap,
               "tolerance": cert.tolerance, "C_plus": cert.report.C_plus, "alpha": cert.report.alpha}
    write_text(out / "certificate.json", json_text(cfg, payload))
    xl = "r" if mesh.kind == "disk" else "x"
    panel = Panel("solution and subsolution", [_profile_series(cert.solution, "u"),
                                               _profile_series(cert.subsolution, "w")], xlabel=xl)
    write_text(out / "figure.svg", svg_text([panel]))
    print("\n".join(lines))
    return EXIT_OK


def cmd_semilinear(cfg: RunConfig) -> int:
    f = _forcing(cfg)
    mesh = _mesh(cfg, f)
    sec = cfg.section("semilinear")
    lam, alpha = sec.get("lam", 0.0), sec.get("alpha", 0.5)
    lam1 = first_eigenpair(mesh).value
    if lam >= lam1:
        raise ConfigError(f"lam = {lam} must be below the discrete lambda_1 = {lam1:.12g}")
    try:
        prob = sl.SemilinearProblem(mesh, _field(f, mesh, cfg.section("forcing").get("center")), lam, alpha)
    except ValueError as exc:
        raise ConfigError(f"semilinear: {exc}") from None
    try:
        res = sl.solve_bracketed(prob, tol=cfg.tolerances["semilinear"])
    except ResolventNotPositive as exc:
        raise ConfigError(str(exc)) from None
    out = _out(cfg)
    lines = [f"mesh = {mesh.describe()}", f"lambda = {lam:.12g}", f"alpha = {alpha:.12g}",
             f"lambda_1 = {lam1:.12g}"] + res.lines()
    write_text(out / "u.csv", res.u.to_csv("u"))
    write_text(out / "semilinear.report", report_text(cfg, lines, "semilinear"))
    payload = {"residual": res.residual, "iterations": res.iterations, "newton_steps": res.newton_steps,
               "min_interior_u": float(res.u.interior.min()), "monotone": res.monotone}
    write_text(out / "semilinear.json", json_text(cfg, payload))
    panel = Panel("bracketed solution", [_profile_series(res.sub, "sub"), _profile_series(res.u, "u"),
                                         _profile_series(res.sup, "sup")])
    write_text(out / "figure.svg", svg_text([panel]))
    print("\n".join(lines))
    return EXIT_OK


def _initial(name, mesh, f):
    if name == "phi1":
        return first_eigenpair(mesh).field
    if name == "phi2":
        return second_eigenpair(mesh).field
    if name == "zero":
        return ScalarField(mesh, np.zeros(mesh.shape))
    if name == "forcing":
        return _field(f, mesh)
    raise ConfigError(f"unknown u0 {name!r} (phi1, phi2, zero, forcing)")


def cmd_parabolic(cfg: RunConfig) -> int:
    f = _forcing(cfg)
    mesh = _mesh(cfg, f)
    sec = cfg.section("parabolic")
    u0 = _initial(sec.get("u0", "phi2"), mesh, f)
    try:
        prob = par.ParabolicProblem(mesh, u0, _field(f, mesh), sec.get("dt"), sec.get("theta", 0.5),
                                    sec.get("horizon", 1.0))
    except ValueError as exc:
        raise ConfigError(f"parabolic: {exc}") from None
    snaps = tuple(sec.get("snapshots", ()))
    trace = par.find_positivity_time(prob, snapshot_times=snaps)
    lines = [f"mesh = {mesh.describe()}", f"dt = {prob.dt:.6g}", f"theta = {prob.theta:.6g}"] + trace.lines()
    decay = None
    if abs(prob.phi1_moment) <= cfg.tolerances["orthogonality"] * math.sqrt(mesh.inner(u0.values, u0.values)):
        decay = par.verify_decay_estimate(mesh, u0, prob.dt, prob.theta, sec.get("decay_horizon", 1.0),
                                          rtol=cfg.tolerances["rate"])
        lines += decay.lines()
    else:
        lines.append("decay_estimate = skipped (u0 is not orthogonal to phi_1)")
    out = _out(cfg)
    write_text(out / "trace.csv", trace.to_csv())
    for t, fld in sorted(trace.snapshots.items()):
        write_text(out / f"snapshot_t{t:g}.csv", fld.to_csv("u"))
    write_text(out / "parabolic.report", report_text(cfg, lines, "parabolic"))
    payload = {"t0": trace.t0 if trace.reached else "NotReached", "stationary_min": trace.stationary_min,
               "phi1_moment": trace.phi1_moment}
    if decay is not None:
        payload.update(rate=decay.rate, lambda_2=decay.lam2, bound_ok=decay.bound_ok)
    write_text(out / "parabolic.json", json_text(cfg, payload))
    every = max(1, len(trace.times) // 2000)
    panel = Panel("min interior u", [("min u", trace.times[::every], trace.min_interior[::every])],
                  xlabel="t", ylabel="min u")
    write_text(out / "figure.svg", svg_text([panel]))
    print("\n".join(lines))
    failed = not trace.reached or (decay is not None and not decay.bound_ok)
    return EXIT_FAILS if failed else EXIT_OK


# -- reproduction ----------------------------------------------------------------------


def _figure1(cfg, out):
    grid_n = cfg.get("grid_n", 400)

    def run(a):
        f = example1(a)
        sol = s1.solve_exact(f, grid_n=grid_n)
        return a, sol, s1.classify(f, grid_n=grid_n, solution=sol)

    with ThreadPoolExecutor() as pool:
        results = list(pool.map(run, FIGURE1_VALUES))
    lines, panels = [], []
    for a, sol, cls in results:
        lines.append(f"a = {a:g}: {cls.verdict.value}, u'(a) = {sol.derivative_eval(a) + 0.0:.6e}")
        write_text(out / f"figure1_a{a:g}.csv", sol.to_csv())
        panels.append(Panel(f"a = {a:g}: {cls.verdict.value}", [("u", sol.samples.mesh.axes[0], sol.samples.values)]))
    flat = example1(2.0)
    lines.append(f"boundary_derivative(a=2) = {s1.boundary_derivative(flat):.6e}")
    write_text(out / "figure1.svg", svg_text(panels, cols=2))
    return lines


def _figure2(cfg, out):
    a_star = s1.find_critical_parameter(reversed_example1, s1.Functional.u_at(0.0), 0.0, FIGURE2_BRACKET)
    lines = [f"critical a = {a_star:.8f}", f"closed form 2 + sqrt(2) = {CRITICAL_REVERSED:.8f}"]
    panels = []
    sol = s1.solve_exact(reversed_example1(a_star), grid_n=cfg.get("grid_n", 400))
    write_text(out / "figure2_critical.csv", sol.to_csv())
    panels.append(Panel(f"a = {a_star:.4f}: u(0) = {sol(0.0):.1e}", [("u", sol.samples.mesh.axes[0], sol.samples.values)]))
    for b in FIGURE2_DEAD_CORE:
        f = cubic_dead_core(b)
        sol = s1.solve_exact(f, grid_n=cfg.get("grid_n", 400))
        cls = s1.classify(f, solution=sol)
        regions = ", ".join(f"[{lo:.6f}, {hi:.6f}]" for lo, hi in cls.regions)
        lines.append(f"dead core b = {b:g}: {cls.verdict.value} {regions}")
        write_text(out / f"figure2_dead_core_b{b:g}.csv", sol.to_csv())
        panels.append(Panel(f"dead core b = {b:g}", [("u", sol.samples.mesh.axes[0], sol.samples.values)]))
    write_text(out / "figure2.svg", svg_text(panels, cols=len(panels)))
    return lines


TABLE_ROWS = ("flat", "decay-fail", "classical", "power-law-pass", "power-law-fail")


def _table(cfg, out):
    def run(name):
        sub = build_config(preset_text=RUN_PRESETS[name])
        f = _forcing(sub)
        rep = s1.check_conditions(f)
        try:
            cls = s1.classify(f).verdict.value
        except SMPError as exc:
            cls = type(exc).__name__
        return name, rep, cls

    with ThreadPoolExecutor() as pool:
        rows = list(pool.map(run, TABLE_ROWS))
    header = "preset,balance,decay,flatness,weighted_positivity,class"
    csv = [header] + [f"{n},{r.balance.value},{r.decay.value},{r.flatness.value},{r.weighted_positivity.value},{c}"
                      for n, r, c in rows]
    write_text(out / "table-conditions.csv", "\n".join(csv) + "\n")
    return [f"{n}: balance {r.balance.value}, decay {r.decay.value}, flatness {r.flatness.value}, class {c}"
            for n, r, c in rows]


def cmd_reproduce(cfg: RunConfig) -> int:
    target = cfg.get("target")
    out = _out(cfg)
    lines = {"figure1": _figure1, "figure2": _figure2, "table-conditions": _table}[target](cfg, out)
    write_text(out / f"{target}.report", report_text(cfg, lines, f"reproduce {target}"))
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "solve1d": cmd_solve1d,
    "check": cmd_check,
    "solve-nd": cmd_solve_nd,
    "certify": cmd_certify,
    "semilinear": cmd_semilinear,
    "parabolic": cmd_parabolic,
    "reproduce": cmd_reproduce,
}


def make_parser():
    ap = argparse.ArgumentParser(prog="smplab", description="Positivity, flatness and dead cores for -Delta u = f.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "reproduce":
            p.add_argument("target", choices=TARGETS)
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--mesh", type=int, help="mesh resolution (overrides mesh.n and grid_n)")
        p.add_argument("--preset", choices=sorted(RUN_PRESETS), help="built-in configuration")
        p.add_argument("--tol", action="append", default=[], metavar="NAME=VAL", help="tolerance override")
    return ap


def resolve(args) -> RunConfig:
    text = None
    source = "<config>"
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        source = args.config
    preset = RUN_PRESETS[args.preset] if args.preset else None
    overrides = {}
    if args.out:
        overrides["out"] = args.out
    if args.mesh is not None:
        if args.mesh < 4:
            raise ConfigError("--mesh must be at least 4")
        overrides["grid_n"] = args.mesh
        overrides["mesh"] = {"n": args.mesh}
    if getattr(args, "target", None):
        overrides["target"] = args.target
    return build_config(text, preset, args.command, overrides, args.tol, source)


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"smplab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
