import csv

import pytest

from rblab.cli import main
from rblab.config import SCHEMA, ConfigError, parse_config

QUICK = ["-s", "t_end=0.5", "-s", "snapshots=0.25,0.5"]


def test_empty_config_is_all_defaults():
    cfg = parse_config("")
    assert cfg.defaults_applied == list(SCHEMA)
    text = cfg.resolved_text()
    for key in SCHEMA:
        assert f"{key} = " in text
    assert text.count("# default") == len(SCHEMA)


def test_comments_and_values():
    cfg = parse_config("# header\nflux = logcosh:1.0  # convex\n\ncells = 3200\n")
    assert cfg.flux_model.c2 == 2.0
    assert cfg.cells == 3200
    assert "flux" not in cfg.defaults_applied


def test_ell_resolution_rejected_with_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("cells = 2000\nell = 0.05\n")  # dx = 0.02
    assert exc.value.line == 2


@pytest.mark.parametrize("text,line", [
    ("foo = 1\n", 1),
    ("\ncells = many\n", 2),
    ("flux = cubic\n", 1),
    ("cfl = 1.5\n", 1),
    ("just a line\n", 1),
    ("visc = mesh\n", 1),
    ("boundary = reflecting\n", 1),
])
def test_bad_config_reports_line(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line


def test_config_hash_stable():
    assert parse_config("").hash() == parse_config("cells = 1600\n").hash()
    assert parse_config("").hash() != parse_config("cells = 3200\n").hash()


def test_simulate(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "-o", str(out)] + QUICK) == 0
    for name in ("snapshots.csv", "diagnostics.csv", "manifest.txt"):
        assert (out / name).exists()
    with open(out / "diagnostics.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["t", "energy", "tv", "sup_fwd_slope", "linf", "l2P_int", "l2qP_int",
                      "boundary_residual"]
    manifest = (out / "manifest.txt").read_text()
    assert "config_hash = " in manifest and "rblab 0.1.0" in manifest


def test_rerun_is_byte_identical(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("t_end = 0.5\nsnapshots = 0.25\n")
    for d in ("a", "b"):
        assert main(["simulate", "-c", str(cfgfile), "-o", str(tmp_path / d)]) == 0
    for name in ("snapshots.csv", "diagnostics.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_entropy_and_diagnose(tmp_path):
    assert main(["entropy", "-o", str(tmp_path / "e"), "-s", "viscosity=auto"] + QUICK) == 0
    assert (tmp_path / "e" / "snapshots.csv").exists()
    assert main(["diagnose", "-o", str(tmp_path / "d")]) == 0
    text = (tmp_path / "d" / "diagnose.txt").read_text()
    assert "M = 0.8577638849607" in text
    assert (tmp_path / "d" / "bounds.csv").exists()


def test_rate_study_exit_code(tmp_path):
    cfgfile = tmp_path / "study.cfg"
    cfgfile.write_text("t_end = 0.5\nell_list = 0.4,0.2,0.1\ndomain = -16:16\n"
                       "cells = 640\nell = 0.4\n")
    out = tmp_path / "study"
    code = main(["rate-study", "-c", str(cfgfile), "-o", str(out)])
    verdict = (out / "verdict.txt").read_text().splitlines()
    assert code == (0 if verdict[-1] == "PASS overall" else 1)
    assert (out / "study.csv").exists()


def test_bad_invocations(tmp_path, capsys):
    assert main(["bogus"]) == 2
    assert main(["simulate", "-c", str(tmp_path / "missing.cfg"), "-o", str(tmp_path)]) == 2
    assert main(["simulate", "-s", "nonsense=1", "-o", str(tmp_path)]) == 2
    assert main(["rate-study", "-s", "domain=-5:5", "-s", "cells=320", "-o", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err
