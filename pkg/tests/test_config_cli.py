import json

import pytest

from smplab.cli import RUN_PRESETS, main
from smplab.config import DEFAULT_TOLERANCES, build_config, forcing_from, parse, validate
from smplab.errors import ConfigError
from smplab.presets import example1


def test_parse_blocks_and_repeated_pieces():
    tree = validate(parse("""
        # comment
        command = solve1d
        forcing {
            piece = -1 0 const 1
            piece = 0 1 const -1
        }
    """))
    assert tree["command"] == "solve1d"
    assert len(tree["forcing"]["piece"]) == 2


@pytest.mark.parametrize(
    "text",
    [
        "command = solve1d\nbogus = 1\n",
        "command = solve1d\nforcing {\n  a = 1\n  a = 2\n}\n",
        "forcing {\n  mesh {\n  }\n}\n",
        "forcing {\n  a = 1\n",
        "}\n",
        "command solve1d\n",
        "mesh {\n  n = many\n}\n",
        "nosuchblock {\n}\n",
    ],
    ids=["unknown-key", "repeated-key", "nested", "unterminated", "unmatched", "syntax", "type", "unknown-block"],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        validate(parse(text))


def test_tolerance_overrides():
    cfg = build_config(preset_text=RUN_PRESETS["flat"], tol_overrides=["flatness=1e-6"])
    assert cfg.tolerances["flatness"] == 1e-6
    assert cfg.tolerances["rate"] == DEFAULT_TOLERANCES["rate"]
    for bad in ("flatness", "nope=1", "rate=abc", "rate=-1"):
        with pytest.raises(ConfigError):
            build_config(preset_text=RUN_PRESETS["flat"], tol_overrides=[bad])


def test_render_is_canonical_and_excludes_output_path():
    a = build_config("forcing {\n family = example1\n a = 2\n}\n", command="solve1d", overrides={"out": "x"})
    b = build_config("forcing {\n a = 2\n family = example1\n}\n", command="solve1d", overrides={"out": "y"})
    assert a.render() == b.render()
    assert "out" not in a.render()


def test_command_required_and_known():
    with pytest.raises(ConfigError):
        build_config("forcing {\n family = flat-unit\n}\n")
    with pytest.raises(ConfigError):
        build_config(command="integrate")
    with pytest.raises(ConfigError):
        build_config(command="reproduce")


def test_forcing_from_family_matches_preset():
    f = forcing_from({"family": "example1", "a": 1.5})
    g = example1(1.5)
    assert f.integrate() == pytest.approx(g.integrate(), abs=1e-15)
    assert f.domain == g.domain


def test_forcing_from_pieces():
    f = forcing_from({"piece": [[-1, 0, "const", 2], [0, 1, "poly", 0, 3]]})
    assert f.integrate() == pytest.approx(2.0 + 1.5)


@pytest.mark.parametrize(
    "section",
    [{}, {"family": "example1"}, {"family": "example1", "a": 2, "b": 1}, {"family": "unknown"},
     {"family": "example1", "a": 2, "piece": [[-1, 1, "const", 1]]}, {"piece": [[-1, 1, "sinh", 1]]},
     {"piece": [[1, -1, "const", 1]]}],
    ids=["empty", "missing-param", "extra-param", "unknown-family", "both", "bad-kind", "reversed"],
)
def test_forcing_from_rejects(section):
    with pytest.raises(ConfigError):
        forcing_from(section)


@pytest.mark.parametrize(
    "preset, code",
    [("flat", 0), ("classical", 0), ("dead-core", 0), ("decay-fail", 2), ("power-law-pass", 0), ("power-law-fail", 2)],
)
def test_cli_exit_codes(tmp_path, preset, code, capsys):
    cmd = "check" if preset.startswith("power") else "solve1d"
    assert main([cmd, "--preset", preset, "--out", str(tmp_path)]) == code


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("forcing {\n  family = flat-unit\n  colour = red\n}\n")
    assert main(["solve1d", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "colour" in capsys.readouterr().err
    assert main(["solve1d", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["solve1d", "--preset", "flat", "--mesh", "2", "--out", str(tmp_path)]) == 1


def test_cli_semilinear_rejects_lambda_above_first_eigenvalue(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("semilinear {\n  lam = 3\n}\n")
    code = main(["semilinear", "--preset", "semilinear", "--config", str(cfg), "--mesh", "64", "--out", str(tmp_path)])
    assert code == 1
    assert "lambda_1" in capsys.readouterr().err


def test_cli_outputs_are_byte_identical(tmp_path, capsys):
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["solve1d", "--preset", "flat", "--out", str(d)]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert runs[0] == runs[1]
    assert set(runs[0]) == {"u.csv", "conditions.report", "conditions.json", "figure.svg"}
    assert runs[0]["u.csv"].decode().splitlines()[0] == "x,u,du"
    doc = json.loads(runs[0]["conditions.json"])
    assert doc["result"]["conditions"]["flatness"] == "Holds"
    assert doc["result"]["classification"]["class"] == "PositiveFlat"


def test_cli_report_embeds_resolved_configuration(tmp_path, capsys):
    main(["solve1d", "--preset", "flat", "--out", str(tmp_path), "--tol", "flatness=1e-7"])
    head = (tmp_path / "conditions.report").read_text().splitlines()
    assert head[0].startswith("# smplab ")
    assert "#       flatness = 1e-07" in head


def test_cli_disk_solve_nd(tmp_path, capsys):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("forcing {\n  family = flat-unit\n}\nmesh {\n  kind = disk\n  n = 64\n}\n")
    assert main(["solve-nd", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "u.csv").read_text().splitlines()[0] == "r,u"


def test_cli_parabolic_trace(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("parabolic {\n  dt = 0.001\n  horizon = 3\n  snapshots = 0.5\n}\n")
    assert main(["parabolic", "--preset", "parabolic", "--config", str(cfg), "--mesh", "64",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace.csv").read_text().splitlines()[0] == "t,min_u,sup_ratio"
    assert (tmp_path / "snapshot_t0.5.csv").exists()


def test_cli_reproduce_table(tmp_path, capsys):
    assert main(["reproduce", "table-conditions", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "table-conditions.csv").read_text().splitlines()
    assert rows[0] == "preset,balance,decay,flatness,weighted_positivity,class"
    table = {r.split(",")[0]: r.split(",") for r in rows[1:]}
    assert table["flat"][5] == "PositiveFlat"
    assert table["decay-fail"][2] == "Fails"


@pytest.mark.parametrize("target", ["figure1", "figure2"])
def test_cli_reproduce_figures(tmp_path, target, capsys):
    assert main(["reproduce", target, "--out", str(tmp_path)]) == 0
    assert (tmp_path / f"{target}.svg").exists()
    assert (tmp_path / f"{target}.report").exists()
