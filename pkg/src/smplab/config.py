"""Run configuration: a small line-oriented format with nested blocks.

    command = solve1d
    forcing {
        family = example1
        a = 2.2
    }
    mesh {
        kind = interval
        n = 400
    }

``#`` starts a comment.  Values are whitespace-separated tokens; numbers and
``true``/``false`` are converted.  A key may repeat only where the schema
allows a list (``piece``).  Unknown keys and blocks are rejected.
"""
from __future__ import annotations

import inspect
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError
from .forcing import Constant, ForcingPiece, PiecewiseForcing, Polynomial, PowerSingularity
from .presets import PRESETS

COMMANDS = ("solve1d", "check", "solve-nd", "certify", "semilinear", "parabolic", "reproduce")
TARGETS = ("figure1", "figure2", "table-conditions")

DEFAULT_TOLERANCES = {
    "flatness": 1e-9,
    "semilinear": 1e-11,
    "rate": 0.02,
    "orthogonality": 1e-10,
}

_NUM = (int, float)

# block name -> {key: (type, repeatable)}
SCHEMA = {
    "": {
        "command": (str, False),
        "target": (str, False),
        "out": (str, False),
        "grid_n": (int, False),
    },
    "forcing": {
        "family": (str, False),
        "a": (_NUM, False),
        "b": (_NUM, False),
        "R": (_NUM, False),
        "r0": (_NUM, False),
        "F": (_NUM, False),
        "C": (_NUM, False),
        "beta": (_NUM, False),
        "symmetric": (bool, False),
        "piece": (list, True),
        "center": (list, False),
    },
    "mesh": {
        "kind": (str, False),
        "n": (int, False),
        "nx": (int, False),
        "ny": (int, False),
        "lo": (_NUM, False),
        "hi": (_NUM, False),
        "R": (_NUM, False),
        "dim": (int, False),
        "Lx": (_NUM, False),
        "Ly": (_NUM, False),
    },
    "compact": {
        "kind": (str, False),
        "radius": (_NUM, False),
        "center": (list, False),
        "bounds": (list, False),
        "rho": (_NUM, False),
        "alpha": (_NUM, False),
    },
    "semilinear": {
        "lam": (_NUM, False),
        "alpha": (_NUM, False),
    },
    "parabolic": {
        "u0": (str, False),
        "dt": (_NUM, False),
        "theta": (_NUM, False),
        "horizon": (_NUM, False),
        "snapshots": (list, False),
        "decay_horizon": (_NUM, False),
    },
    "tol": {name: (_NUM, False) for name in DEFAULT_TOLERANCES},
}


def _scalar(tok: str):
    low = tok.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _value(text: str):
    toks = text.split()
    if not toks:
        return ""
    if len(toks) == 1:
        return _scalar(toks[0])
    return [_scalar(t) for t in toks]


_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_-]*)\s*(=\s*(.*)|\{)\s*$")


def parse(text: str, source="<config>") -> dict:
    """Parse config text into nested dicts; repeated keys become lists."""
    lines = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((no, line))
    pos = 0

    def block(depth):
        nonlocal pos
        out = {}
        while pos < len(lines):
            no, line = lines[pos]
            pos += 1
            if line == "}":
                if depth == 0:
                    raise ConfigError(f"{source}:{no}: unmatched '}}'")
                return out
            m = _LINE.match(line)
            if m is None:
                raise ConfigError(f"{source}:{no}: cannot parse {line!r}")
            key = m.group(1)
            if m.group(2) == "{":
                if depth > 0:
                    raise ConfigError(f"{source}:{no}: blocks do not nest deeper than one level")
                if key in out:
                    raise ConfigError(f"{source}:{no}: block {key!r} given twice")
                out[key] = block(depth + 1)
            else:
                val = _value(m.group(3))
                out.setdefault(key, []).append((no, val))
        if depth > 0:
            raise ConfigError(f"{source}: unterminated block")
        return out

    return block(0)


def _check_type(kind, val):
    if kind is list:
        return val if isinstance(val, list) else [val]
    if kind is bool:
        if not isinstance(val, bool):
            raise TypeError("expected true or false")
        return val
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise TypeError("expected an integer")
        return val
    if kind is _NUM:
        if isinstance(val, bool) or not isinstance(val, _NUM):
            raise TypeError("expected a number")
        return float(val)
    if isinstance(val, list):
        raise TypeError("expected a single word")
    return str(val)


def validate(tree: dict, source="<config>") -> dict:
    """Check every key against the schema and flatten single values."""
    out = {}
    for name, content in tree.items():
        if isinstance(content, dict):
            if name not in SCHEMA or name == "":
                raise ConfigError(f"{source}: unknown block {name!r}")
            out[name] = _validate_entries(content, SCHEMA[name], f"{source}: {name}")
        else:
            out.update(_validate_entries({name: content}, SCHEMA[""], source))
    return out


def _validate_entries(entries, schema, where):
    out = {}
    for key, items in entries.items():
        if isinstance(items, dict):
            raise ConfigError(f"{where}: unexpected block {key!r}")
        if key not in schema:
            raise ConfigError(f"{where}: unknown key {key!r} (line {items[0][0]})")
        kind, repeat = schema[key]
        if len(items) > 1 and not repeat:
            raise ConfigError(f"{where}: key {key!r} repeated (line {items[1][0]})")
        vals = []
        for no, val in items:
            try:
                vals.append(_check_type(kind, val))
            except TypeError as exc:
                raise ConfigError(f"{where}: line {no}: {key}: {exc}") from None
        out[key] = vals if repeat else vals[0]
    return out


def merge(base: dict, over: dict) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for k, v in over.items():
        if isinstance(v, dict):
            out.setdefault(k, {}).update(v)
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str = "out"

    def section(self, name) -> dict:
        return dict(self.values.get(name, {}))

    def get(self, key, default=None):
        return self.values.get(key, default)

    def render(self) -> str:
        """Canonical text of the resolved configuration (sorted, deterministic)."""
        lines = [f"command = {self.command}"]
        for key in sorted(k for k, v in self.values.items() if not isinstance(v, dict)):
            if key != "command":
                lines.append(f"{key} = {_fmt(self.values[key])}")
        for name in sorted(k for k, v in self.values.items() if isinstance(v, dict) and k != "tol"):
            lines.append(f"{name} {{")
            for key in sorted(self.values[name]):
                val = self.values[name][key]
                if SCHEMA[name][key][1]:
                    lines += [f"    {key} = {_fmt(v)}" for v in val]
                else:
                    lines.append(f"    {key} = {_fmt(val)}")
            lines.append("}")
        lines.append("tol {")
        lines += [f"    {k} = {_fmt(self.tolerances[k])}" for k in sorted(self.tolerances)]
        lines.append("}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def build_config(text=None, preset_text=None, command=None, overrides=None, tol_overrides=(), source="<config>"):
    """Resolve preset, file text, command-line overrides and tolerances into a :class:`RunConfig`."""
    values = {}
    if preset_text is not None:
        values = validate(parse(preset_text, "<preset>"), "<preset>")
    if text is not None:
        values = merge(values, validate(parse(text, source), source))
    for k, v in (overrides or {}).items():
        if isinstance(v, dict):
            values.setdefault(k, {}).update(v)
        else:
            values[k] = v
    if command is not None:
        values["command"] = command
    cmd = values.get("command")
    if cmd is None:
        raise ConfigError("no command given")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    if cmd == "reproduce" and values.get("target") not in TARGETS:
        raise ConfigError(f"reproduce needs target in {TARGETS}")
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(values.pop("tol", {}))
    for item in tol_overrides:
        name, sep, val = item.partition("=")
        if not sep or name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"bad tolerance override {item!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        try:
            tols[name] = float(val)
        except ValueError:
            raise ConfigError(f"tolerance {name} needs a number, got {val!r}") from None
    for name, val in tols.items():
        if not (val > 0 and math.isfinite(val)):
            raise ConfigError(f"tolerance {name} must be positive")
    out = values.pop("out", "out")
    return RunConfig(cmd, values, tols, out)


# -- forcing construction ------------------------------------------------------------


def _piece(tokens, no):
    if len(tokens) < 4:
        raise ConfigError(f"piece {no}: expected 'lo hi kind values...'")
    lo, hi, kind, *rest = tokens
    try:
        if kind == "const":
            (c,) = rest
            k = Constant(float(c))
        elif kind == "poly":
            k = Polynomial(tuple(float(c) for c in rest))
        elif kind == "power":
            C, beta, pole = rest
            k = PowerSingularity(float(C), float(beta), float(pole))
        else:
            raise ConfigError(f"piece {no}: unknown kind {kind!r} (const, poly, power)")
        return ForcingPiece(float(lo), float(hi), k)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"piece {no}: {exc}") from None


def forcing_from(section: dict) -> PiecewiseForcing:
    """Build the forcing described by a ``forcing`` block."""
    fam = section.get("family")
    pieces = section.get("piece")
    if (fam is None) == (pieces is None):
        raise ConfigError("forcing needs exactly one of 'family' or 'piece' entries")
    if fam is not None:
        if fam not in PRESETS:
            raise ConfigError(f"unknown forcing family {fam!r}; known: {sorted(PRESETS)}")
        fn = PRESETS[fam]
        params = inspect.signature(fn).parameters
        kwargs = {}
        for key in ("a", "b", "R", "r0", "F", "C", "beta"):
            if key in section:
                if key not in params:
                    raise ConfigError(f"family {fam!r} takes no parameter {key!r}")
                kwargs[key] = section[key]
        missing = [p for p, v in params.items() if v.default is inspect.Parameter.empty and p not in kwargs]
        if missing:
            raise ConfigError(f"family {fam!r} needs {missing}")
        try:
            return fn(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"family {fam!r}: {exc}") from None
    built = [_piece(tok if isinstance(tok, list) else [tok], i + 1) for i, tok in enumerate(pieces)]
    try:
        if section.get("symmetric", False):
            return PiecewiseForcing.symmetric(built)
        return PiecewiseForcing(tuple(built))
    except ValueError as exc:
        raise ConfigError(f"forcing: {exc}") from None
