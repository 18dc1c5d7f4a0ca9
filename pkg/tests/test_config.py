import pytest

from bgkmix import config as cfg
from bgkmix import params as mp


def parse_error(text):
    with pytest.raises(cfg.ConfigError) as exc:
        cfg.parse_config(text)
    return exc.value


def test_bundled_hamel_relax():
    conf = cfg.parse_config(cfg.bundled_scenario("hamel_relax"))
    p = conf.params
    assert (p.delta, p.alpha, p.gamma) == pytest.approx((2 / 3, 5 / 9, 2 / 27), rel=1e-15)
    assert p.preset == "hamel"
    assert conf.get("initial", "u2") == (-0.8, 0.3, 0.0)
    assert conf.get("grid", "nodes") == 24
    assert conf.seed == 0


@pytest.mark.parametrize("name", cfg.SCENARIOS)
def test_bundled_scenarios_round_trip(name):
    conf = cfg.parse_config(cfg.bundled_scenario(name))
    again = cfg.parse_config(conf.to_text())
    assert again.sections == conf.sections
    assert again.sha256() == conf.sha256()


def test_unknown_scenario():
    with pytest.raises(FileNotFoundError, match="bundled"):
        cfg.bundled_scenario("nope")


def test_defaults_fill_missing_keys():
    conf = cfg.parse_config("[mixture]\nm1 = 1\nm2 = 1\n")
    assert conf.get("solver", "scheme") == "exponential"
    assert conf.section("grid") == {"nodes": 24, "radius": 6.0}
    assert conf.params == mp.MixtureParams(1.0, 1.0)


def test_empty_file():
    assert str(parse_error("")) == "missing [mixture]"


def test_unknown_key_line_number():
    e = parse_error("[mixture]\nm1 = 2\nm2 = 1\nfoo = 3\n")
    assert e.line == 4
    assert "unknown key 'foo' in [mixture]" in str(e)


def test_unknown_section():
    e = parse_error("[mixture]\nm1 = 2\nm2 = 1\n\n[plots]\nx = 1\n")
    assert e.line == 5 and "unknown section [plots]" in str(e)


def test_type_mismatch():
    e = parse_error("[mixture]\nm1 = x\nm2 = 1\n")
    assert str(e) == "line 2: mixture.m1 = 'x': expected a number"
    e = parse_error("[mixture]\nm1 = 1\nm2 = 1\n[grid]\nnodes = 2.5\n")
    assert e.line == 5 and "an integer" in str(e)


def test_gamma_above_bound_cites_formula():
    text = "[mixture]\nm1 = 2\nm2 = 1\nepsilon = 0.5\ngamma = 0.4\n"
    e = parse_error(text)
    assert e.line == 5
    assert "gamma<=gamma_max" in str(e)
    assert "m1/3 (1-delta)" in str(e)
    # exactly at the bound is accepted
    ok = cfg.parse_config(text.replace("0.4", repr(1.0 / 3.0)))
    assert ok.params.gamma == 1.0 / 3.0


def test_preset_fixed_keys_rejected():
    e = parse_error("[mixture]\npreset = hamel\nm1 = 2\nm2 = 1\ndelta = 0.3\n")
    assert str(e) == "line 5: delta is fixed by preset 'hamel'"
    conf = cfg.parse_config("[mixture]\npreset = hamel\nm1 = 2\nm2 = 1\nnu21 = 3\n")
    assert conf.params.nu21 == 3.0


def test_missing_mass():
    assert "needs m2" in str(parse_error("[mixture]\nm1 = 1\n"))


def test_vectors_and_booleans():
    conf = cfg.parse_config("[mixture]\nm1 = 1\nm2 = 1\n[initial]\nu1 = 1, -2.5, 3e-1\n"
                            "[output]\nbinary = yes\n[solver]\nstop_at_equilibrium = false\n")
    assert conf.get("initial", "u1") == (1.0, -2.5, 0.3)
    assert conf.get("output", "binary") is True
    assert conf.get("solver", "stop_at_equilibrium") is False
    e = parse_error("[mixture]\nm1 = 1\nm2 = 1\n[initial]\nu1 = 1, 2\n")
    assert e.line == 5 and "three" in str(e)
    e = parse_error("[mixture]\nm1 = 1\nm2 = 1\n[output]\nbinary = maybe\n")
    assert "true or false" in str(e)


@pytest.mark.parametrize("text, fragment", [
    ("[mixture]\nm1 = 1\nm2 = 1\n[solver]\norder = 3\n", "order must be 1 or 2"),
    ("[mixture]\nm1 = 1\nm2 = 1\n[solver]\nseed = -1\n", "64-bit"),
    ("[mixture]\nm1 = 1\nm2 = 1\n[initial]\nT1 = 0\n", "T1 must be positive"),
    ("[mixture]\nm1 = 1\nm2 = 1\n[grid]\nlower = 0,0,0\n", "go together"),
    ("[mixture]\nm1 = 1\nm2 = 1\nm1 = 2\n", "m1"),
    ("m1 = 1\n", "outside of any section"),
    ("[mixture]\nm1 = nan\nm2 = 1\n", "finite"),
])
def test_other_rejections(text, fragment):
    assert fragment in str(parse_error(text))


def test_load_config_path_and_name(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("[mixture]\nm1 = 1\nm2 = 3\n")
    conf, text = cfg.load_config(path)
    assert conf.params.m2 == 3.0 and text.startswith("[mixture]")
    conf, _ = cfg.load_config("transport_periodic")
    assert "initial" in conf.sections
