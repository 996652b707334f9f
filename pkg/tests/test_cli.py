import csv
import hashlib
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biodqpt.cli import COMMANDS, FORMATS, ExperimentConfig, main, parse_config, render, run
from biodqpt.errors import ParseError, ValidationError
from biodqpt.ssh import SSHParams, hopping_modulus_sq


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fig2_flags():
    cfg = parse_config(["quench", "--q", "0.5", "--eta", "0.4", "--qf", "2", "--etaf", "0.4"])
    assert (cfg.command, cfg.q, cfg.eta, cfg.qf, cfg.etaf) == ("quench", 0.5, 0.4, 2.0, 0.4)
    assert (cfg.kpoints, cfg.tpoints, cfg.tmax, cfg.branch, cfg.format) == (2000, 2000, 10.0, 0, "csv")


@pytest.mark.parametrize("source", [[], ""])
def test_empty_input(source):
    with pytest.raises(ParseError):
        parse_config(source)


@pytest.mark.parametrize(
    "argv",
    [
        ["quench", "--tmax", "-1"],
        ["quench", "--kpoints", "8"],
        ["quench", "--tpoints", "15"],
        ["quench", "--branch", "-1"],
        ["quench", "--format", "png"],
    ],
)
def test_validation_errors(argv):
    with pytest.raises(ValidationError):
        parse_config(argv)


@pytest.mark.parametrize(
    "argv, token",
    [(["nonsense"], "nonsense"), (["quench", "--bogus", "1"], "--bogus"), (["quench", "--q", "abc"], "abc")],
)
def test_parse_errors_carry_token(argv, token):
    with pytest.raises(ParseError) as err:
        parse_config(argv)
    assert err.value.token == token


def test_file_text_and_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# fig 3\ncommand=winding\nq=1\neta=0\nqf=2\netaf=0\ntmax=4\n")
    cfg = parse_config(["--config", str(path), "--tmax", "6"])
    assert (cfg.command, cfg.q, cfg.qf, cfg.tmax) == ("winding", 1.0, 2.0, 6.0)
    assert parse_config(["quench", "--config", str(path)]).command == "quench"
    with pytest.raises(ParseError):
        parse_config("q 0.5\n")


configs = st.builds(
    ExperimentConfig,
    command=st.sampled_from(COMMANDS),
    q=st.floats(-5, 5),
    eta=st.floats(-5, 5),
    qf=st.floats(-5, 5),
    etaf=st.floats(-5, 5),
    kpoints=st.integers(16, 5000),
    tpoints=st.integers(16, 5000),
    tmax=st.floats(1e-3, 100),
    branch=st.integers(0, 10),
    raster=st.integers(2, 400),
    out=st.from_regex(r"[a-z][a-z0-9_/]{0,20}", fullmatch=True),
    format=st.sampled_from(FORMATS),
)


@settings(max_examples=200)
@given(configs)
def test_render_round_trip(cfg):
    assert parse_config(render(cfg)) == cfg


def test_run_is_deterministic_and_manifest_digests_match(tmp_path):
    argv = ["quench", "--kpoints", "200", "--tpoints", "300", "--out", str(tmp_path / "a")]
    first = run(parse_config(argv))
    second = run(parse_config(argv))
    assert first.outputs == second.outputs
    for out in first.outputs:
        with open(out["path"], "rb") as fh:
            data = fh.read()
        assert hashlib.sha256(data).hexdigest() == out["sha256"]
        assert b"\r" not in data
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    replay = run(ExperimentConfig(**manifest["config"]))
    assert [o["sha256"] for o in replay.outputs] == [o["sha256"] for o in first.outputs]
    assert manifest["version"] and manifest["wall_time"] >= 0


def test_phase_diagram_raster(tmp_path):
    cfg = parse_config(["phase-diagram", "--raster", "31", "--out", str(tmp_path / "pd")])
    run(cfg)
    rows = _read_csv(tmp_path / "pd.csv")
    assert len(rows) == 31 * 31
    for row in rows:
        q, eta = float(row["q"]), float(row["eta"])
        real = row["label"].startswith("PTSymmetric")
        if abs(eta - abs(1 - q)) > 1e-9:
            assert real == (eta < abs(1 - q))


def test_fig4_fisher_zero_csv(tmp_path):
    out = tmp_path / "f4"
    assert main(["fisher-zeros", "--q", "0.5", "--eta", "2", "--qf", "0.5", "--etaf", "0.2", "--out", str(out)]) == 0
    rows = _read_csv(str(out) + ".csv")
    assert len(rows) == 2000
    assert max(abs(float(r["re_z"])) for r in rows) <= 1e-10


def test_all_commands_and_formats(tmp_path):
    for command in COMMANDS:
        for fmt in FORMATS:
            out = tmp_path / f"{command}-{fmt}"
            argv = [command, "--kpoints", "64", "--tpoints", "64", "--raster", "9", "--format", fmt, "--out", str(out)]
            assert main(argv) == 0
            text = (tmp_path / f"{command}-{fmt}.{fmt}").read_text()
            if fmt == "json":
                json.loads(text)
            if fmt == "svg":
                assert text.startswith("<?xml") and "<polyline" in text


def test_critical_csv_lists_times_and_band(tmp_path):
    out = tmp_path / "c"
    run(parse_config(["critical", "--q", "0.9", "--out", str(out)]))
    rows = _read_csv(str(out) + ".csv")
    times = [r for r in rows if r["kind"] == "time"]
    bands = [r for r in rows if r["kind"] == "band"]
    assert abs(float(times[0]["k_lo"]) - math.acos(-2.64 / 2.9)) < 1e-9
    assert len(bands) == 1 and float(bands[0]["k_hi"]) == math.pi


def test_exit_codes(tmp_path, capsys):
    assert main([]) == 2
    assert main(["quench", "--tmax", "-1"]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 2 and all(line.startswith("biodqpt:") for line in err)
    # an exceptional point placed exactly on a midpoint node is a module error
    k0 = 0.5 * math.pi / 16
    eta = math.sqrt(float(hopping_modulus_sq(SSHParams(0.5, 0.0), k0)))
    code = main(["quench", "--q", "0.5", "--eta", "%.17g" % eta, "--kpoints", "16", "--out", str(tmp_path / "x")])
    assert code == 1
    assert "ExceptionalPoint" in capsys.readouterr().err


def test_csv_float_format(tmp_path):
    out = tmp_path / "s"
    run(parse_config(["spectrum", "--kpoints", "16", "--out", str(out)]))
    rows = _read_csv(str(out) + ".csv")
    k = float(rows[0]["k"])
    assert k == 0.5 * math.pi / 16
    assert not any(v.startswith("-0") and float(v) == 0 for r in rows for v in r.values())
    assert np.allclose([float(r["re_e_plus"]) for r in rows], [-float(r["re_e_minus"]) for r in rows])
