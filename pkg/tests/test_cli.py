import json

import numpy as np
import pytest

from bgkmix import cli
from bgkmix import params as mp

RELAX_CFG = """\
[mixture]
preset = hamel
m1 = 2.0
m2 = 1.0

[grid]
nodes = 12

[initial]
u1 = 0.3, 0.0, 0.0
T1 = 1.2
T2 = 0.8

[solver]
steps = 20

[output]
cadence = 5
binary = true
"""

TRANSPORT_CFG = """\
[mixture]
preset = hamel
m1 = 1.0
m2 = 1.0

[grid]
nodes = 8
radius = 5.0

[initial]
profile = sine
amplitude = 0.2
cells = 16

[solver]
steps = 6

[output]
cadence = 3
"""

COARSE_CFG = """\
[mixture]
m1 = 1
m2 = 1

[grid]
nodes = 8
lower = -5, -5, -5
upper = 5, 5, 5

[initial]
u1 = 0.3, 0, 0
T1 = 0.001

[solver]
steps = 2
"""


@pytest.fixture
def write_cfg(tmp_path):
    def write(text, name="scenario.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_relax_outputs(write_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["relax", write_cfg(RELAX_CFG), "--out", str(out)]) == cli.EXIT_OK
    assert "relax: 20 steps" in capsys.readouterr().out
    names = set(files(out))
    assert names == {"series.csv", "manifest.json", "f1_final.bin", "f2_final.bin"}
    lines = (out / "series.csv").read_text().splitlines()
    assert lines[0].startswith("t,")
    assert len(lines) == 1 + 5  # steps 0, 5, 10, 15, 20
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "relax"
    assert man["outputs"] == sorted(names - {"manifest.json"})
    assert len(man["config_sha256"]) == 64


def test_relax_rerun_is_byte_identical(write_cfg, tmp_path):
    path = write_cfg(RELAX_CFG)
    for d in ("a", "b"):
        assert cli.main(["relax", "--config", path, "--out", str(tmp_path / d)]) == 0
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_transport_threads_do_not_change_output(write_cfg, tmp_path):
    path = write_cfg(TRANSPORT_CFG)
    for t in (1, 3):
        assert cli.main(["--threads", str(t), "transport", path,
                         "--out", str(tmp_path / f"t{t}")]) == 0
    a, b = files(tmp_path / "t1"), files(tmp_path / "t3")
    assert a == b
    assert {"budget.csv", "moments_000000.csv", "moments_000003.csv",
            "moments_000006.csv"} <= set(a)


def test_mhd_small_run(write_cfg, tmp_path):
    text = "[mixture]\nm1 = 1\nm2 = 1\n[mhd]\ncells = 50\nsteps = 10\n[output]\ncadence = 5\n"
    out = tmp_path / "mhd"
    assert cli.main(["mhd", write_cfg(text), "--out", str(out)]) == 0
    assert {"mhd_000000.csv", "mhd_000005.csv", "mhd_000010.csv", "totals.csv"} <= set(files(out))
    tot = np.loadtxt(out / "totals.csv", delimiter=",", skiprows=1)
    assert tot.shape == (11, 9)


def test_bad_config_exit_code(write_cfg, tmp_path, capsys):
    path = write_cfg("[mixture]\nm1 = 2\nm2 = 1\nepsilon = 0.5\ngamma = 0.4\n")
    assert cli.main(["relax", path, "--out", str(tmp_path / "x")]) == cli.EXIT_CONFIG
    assert "line 5" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert cli.main(["relax", str(tmp_path / "absent.cfg")]) == cli.EXIT_CONFIG
    assert cli.main(["relax"]) == cli.EXIT_CONFIG


def test_unresolvable_maxwellian_exit_code(write_cfg, tmp_path, capsys):
    rc = cli.main(["relax", write_cfg(COARSE_CFG), "--out", str(tmp_path / "x")])
    assert rc == cli.EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_verify_exit_codes(monkeypatch, tmp_path, capsys):
    out = tmp_path / "v"
    assert cli.main(["verify", "fluxes", "--seed", "1", "--out", str(out)]) == cli.EXIT_OK
    report = (out / "verify_report.txt").read_text()
    assert report == capsys.readouterr().out
    orig = mp.mixture_temperature_T21
    monkeypatch.setattr(mp, "mixture_temperature_T21", lambda a, b, p: orig(a, b, p)
                        - 2.0 * mp.t21_velocity_coefficient(p) * mp._du2(a, b))
    assert cli.main(["verify", "htheorem"]) == cli.EXIT_VIOLATION


def test_limits_table(tmp_path, capsys):
    out = tmp_path / "lim"
    assert cli.main(["limits", "--system", "thm43", "--refine", "3", "--base", "16",
                     "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "3.980" in text
    rows = (out / "limits_thm43.csv").read_text().splitlines()
    assert rows[0].startswith("N,max,") and len(rows) == 4


def test_limits_note_for_intermediate_systems(tmp_path, capsys):
    assert cli.main(["limits", "--system", "thm41", "--refine", "2", "--base", "16",
                     "--out", str(tmp_path)]) == 0
    assert "distance" in capsys.readouterr().out


def test_invalid_threads():
    assert cli.main(["--threads", "0", "verify", "fluxes"]) == cli.EXIT_CONFIG
