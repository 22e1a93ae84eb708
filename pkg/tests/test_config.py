import pytest

from nlbvp import FixedPointConfig
from nlbvp.config import KEYS, ConfigError, build_run_config, load_config, parse_config

BASE = """\
problem.domain = "(0, 1)"
problem.f = "s"
problem.h = "0"
problem.theta0 = 1
problem.g = "x"
problem.lambda = 100
nonlocal.kind = "multipoint"
nonlocal.beta = "4"
nonlocal.xi = "0.75"
nonlocal.sides = "right"
"""


def build(text):
    return build_run_config(parse_config(text))


def error_for(text):
    with pytest.raises(ConfigError) as info:
        build(text)
    return info.value


def test_parse_keeps_line_numbers_and_strips_comments():
    entries = parse_config('# header\n\nproblem.f = "s - 1"   # trailing\nproblem.lambda = 5\n')
    assert entries == {"problem.f": ("s - 1", 3), "problem.lambda": ("5", 4)}


def test_hash_inside_quotes_is_kept():
    assert parse_config('problem.f = "s # not a comment"')["problem.f"][0] == "s # not a comment"


def test_three_point_round_trip():
    cfg = build(BASE + "fixed_point.strategy = picard\ngrid.nodes = 513\n")
    assert cfg.lam == 100.0 and cfg.nodes == (513,)
    assert cfg.fixed_point == FixedPointConfig(strategy="picard")
    nl = cfg.spec.nonlocal_bc
    assert nl.kind == "multipoint" and nl.beta == (4.0,) and nl.points == ((0.75,),)
    assert nl.sides == ("right",) or list(nl.sides) == ["right"]


def test_two_dimensional_points():
    text = BASE.replace('"(0, 1)"', '"(0, 1) x (0, 2)"').replace('"0.75"', '"(0.5, 0.5); (0.25, 1.5)"')
    text = text.replace('"4"', '"1, -0.5"').replace('nonlocal.sides = "right"\n', "")
    cfg = build(text)
    assert cfg.spec.domain.dim == 2
    assert cfg.spec.nonlocal_bc.points == ((0.5, 0.5), (0.25, 1.5))


def test_sweep_lambdas():
    cfg = build(BASE.replace("problem.lambda = 100\n", "") + "sweep.from = 50\nsweep.to = 400\nsweep.factor = 2\n")
    assert cfg.lambdas() == [50.0, 100.0, 200.0, 400.0]


@pytest.mark.parametrize(
    "extra, line, key",
    [
        ("problem.f = \"sin(s\"\n", 11, "problem.f"),
        ("problem.colour = \"red\"\n", 11, "problem.colour"),
        ("fixed_point.strategy = \"newton\"\n", 11, "fixed_point.strategy"),
        ("sweep.from = 10\nsweep.to = 5\nsweep.factor = 2\n", None, "sweep"),
        ("grid.nodes = \"3, 4\"\n", 11, "grid.nodes"),
    ],
)
def test_errors_carry_location(extra, line, key):
    text = BASE.replace('problem.f = "s"\n', "") if extra.startswith("problem.f") else BASE
    if extra.startswith("problem.f"):
        line = 10
    err = error_for(text + extra)
    assert key in str(err)
    if line is not None:
        assert err.line == line


def test_repeated_and_malformed_lines():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("problem.f = s\nproblem.f = s\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("just some words\n")


def test_missing_required_key():
    err = error_for(BASE.replace('problem.f = "s"\n', ""))
    assert "problem.f" in str(err)


def test_every_documented_key_has_help():
    assert all(isinstance(v, str) and v for v in KEYS.values())
    assert {"problem.D", "nonlocal.kind", "sweep.factor", "newton.residual_tol"} <= set(KEYS)


def test_shipped_configs_load(tmp_path):
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.cfg")):
        if path.name == "bad_expression.cfg":
            with pytest.raises(ConfigError):
                load_config(str(path))
        else:
            load_config(str(path))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.cfg"))
