import json
import subprocess
import sys

import numpy as np
import pytest

from sichannel import cli
from sichannel.channel import ChannelSpec, LineSegment, synthesize_channel, uncoupled_pair
from sichannel.netparams import Network, default_grid, read_touchstone, write_touchstone


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_tree(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def thru_file(tmp_path):
    p = tmp_path / "thru.s2p"
    p.write_text("# GHZ S RI R 50\n" + "".join(f"{f} 0 0 1 0 1 0 0 0\n" for f in (0.01, 1, 20, 30, 40)))
    return p


SPEC = {
    "grid": {"fmin_hz": 1e7, "fmax_hz": 4e10, "step_hz": 1e7},
    "elements": [
        {"kind": "line", "length_mm": 25, "dk_eff": 3.13},
        {"kind": "via", "barrel_length_mil": 60, "stub_length_mm": 1.5, "dk_z": 3.5, "excess_shunt_c_ff": 60},
        {"kind": "line", "length_mm": 25, "dk_eff": 3.13},
    ],
}


def test_analyze_thru(thru_file, tmp_path):
    out = tmp_path / "out"
    assert run("analyze", thru_file, "--out", out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["mask"]["pass"] is True
    assert rep["passive"] is True
    assert rep["il_db_at_nyquist"] == 0
    il = np.loadtxt(out / "il.csv", delimiter=",", skiprows=1)
    assert np.all(il[:, 1] == 0)
    assert (out / "rl.csv").read_text().startswith("freq_hz,rl_db\n")


def test_synth_then_analyze_stubbed_channel(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    out = tmp_path / "out"
    assert run("synth", spec, "--out", out) == 0
    assert run("analyze", out / "channel.s2p", "--out", out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["mask"]["first_violation_freq_hz"] is not None
    assert not rep["mask"]["pass"]
    tdr = np.loadtxt(out / "tdr.csv", delimiter=",", skiprows=1)
    assert tdr[:, 1].min() < 50


def test_analyze_four_port_skew(tmp_path):
    g = default_grid()
    p = synthesize_channel(ChannelSpec([LineSegment(51.0, 50.0, 3.13)], grid=g))
    n = synthesize_channel(ChannelSpec([LineSegment(50.0, 50.0, 3.13)], grid=g))
    path = tmp_path / "pair.s4p"
    path.write_text(write_touchstone(uncoupled_pair(p, n)))
    out = tmp_path / "out"
    assert run("analyze", path, "--out", out) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["skew_ps"] == pytest.approx(5.9, abs=0.1)
    assert (out / "tdr_pn_difference.csv").exists()
    # explicit reversed pairing flips the sign
    assert run("analyze", path, "--out", out, "--pairing", "3,1:4,2") == 0
    assert json.loads((out / "report.json").read_text())["skew_ps"] == pytest.approx(-5.9, abs=0.1)


def test_analyze_is_idempotent(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    out = tmp_path / "out"
    run("synth", spec, "--out", out)
    run("analyze", out / "channel.s2p", "--out", out)
    first = read_tree(out)
    run("synth", spec, "--out", out)
    run("analyze", out / "channel.s2p", "--out", out)
    assert read_tree(out) == first


def test_analyze_domain_error_has_file_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.s2p"
    bad.write_text("# GHZ S RI\n1 0 0 1\n")
    assert run("analyze", bad, "--out", tmp_path) == 1
    err = capsys.readouterr().err
    assert "bad.s2p" in err and "line 2" in err


def test_missing_file_is_usage_error(tmp_path):
    assert run("analyze", tmp_path / "nope.s2p") == 2
    assert run("synth", tmp_path / "nope.json") == 2


def test_argparse_usage_errors():
    for argv in (["bogus"], [], ["analyze"], ["fws", "--grid", "1:2"], ["mc", "--pairing", "1,1:2,3"]):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 2


def test_schema_violation_reports_path(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"elements": [{"kind": "line", "length_mm": -1}]}))
    assert run("synth", spec, "--out", tmp_path) == 1
    assert "$.elements[0].length_mm" in capsys.readouterr().err


def test_invalid_json_is_domain_error(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert run("budget", p, "--out", tmp_path) == 1


def mc_config(tmp_path, **kw):
    doc = {"n_cases": 3, "grid": {"fmin_hz": 1e7, "fmax_hz": 4e10, "step_hz": 1e9}}
    doc.update(kw)
    p = tmp_path / "mc.json"
    p.write_text(json.dumps(doc))
    return p


def test_mc_degenerate_identical_cases(tmp_path):
    out = tmp_path / "out"
    assert run("mc", mc_config(tmp_path, z_min_ohm=50, z_max_ohm=50), "--out", out, "--mode", "segmented") == 0
    files = sorted((out / "segmented").glob("*.s2p"))
    assert len(files) == 3
    contents = {f.read_bytes() for f in files}
    assert len(contents) == 1


def test_mc_seed_determines_output(tmp_path):
    cfg = mc_config(tmp_path)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    run("mc", cfg, "--out", a, "--seed", 5)
    run("mc", cfg, "--out", b, "--seed", 5)
    run("mc", cfg, "--out", c, "--seed", 6)
    assert read_tree(a) == read_tree(b)
    assert read_tree(a) != read_tree(c)
    summary = json.loads((a / "summary.json").read_text())
    assert summary["config"]["seed"] == 5
    assert len(summary["segmented"]["cases"]) == 3


def test_mc_case_files_parse(tmp_path):
    out = tmp_path / "out"
    run("mc", mc_config(tmp_path), "--out", out, "--format", "db")
    net = read_touchstone(out / "uniform" / "case_000.s2p")
    assert net.ports == 2 and net.f.size == 40


def test_stackup_report(tmp_path, capsys):
    assert run("stackup", "report", "--out", tmp_path) == 0
    printed = capsys.readouterr().out
    total = json.loads((tmp_path / "stackup.json").read_text())["total_thickness_mil"]
    assert total == pytest.approx(122.6, abs=2.0)
    assert "total_thickness_mil," in printed
    assert (tmp_path / "vias.csv").read_text().startswith("drill,exit_layer,barrel_mil,stub_mil\n")


def test_fws_outputs(tmp_path):
    assert run("fws", "--n", 1000, "--rotation", 10, "--seed", 2, "--out", tmp_path) == 0
    stats = json.loads((tmp_path / "fws_stats.json").read_text())
    assert 0.19 <= stats["sigma_ps"] <= 0.49
    rows = (tmp_path / "fws_samples.csv").read_text().splitlines()
    assert rows[0] == "index,skew_ps" and len(rows) == 1001


def test_budget_fails_on_unrotated_fws(tmp_path, capsys):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"contributors": [{"name": "fws_3sigma", "ps": 4.5}]}))
    assert run("budget", p, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "budget.json").read_text())["pass"] is False
    # --bitrate overrides the document
    assert run("budget", p, "--out", tmp_path, "--bitrate", 28e9) == 0
    assert json.loads((tmp_path / "budget.json").read_text())["pass"] is True


def test_convert_formats(thru_file, tmp_path):
    dst = tmp_path / "thru_db.s2p"
    assert run("convert", thru_file, dst, "--format", "DB") == 0
    assert "# HZ S DB R 50" in dst.read_text()
    a, b = read_touchstone(thru_file), read_touchstone(dst)
    np.testing.assert_allclose(b.s, a.s, atol=1e-12)
    assert run("convert", thru_file, tmp_path / "x.s4p") == 2


def test_out_env_var(thru_file, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert run("analyze", thru_file) == 0
    assert (tmp_path / "envout" / "report.json").exists()


def test_global_flags_before_subcommand(thru_file, tmp_path):
    assert run("--out", tmp_path / "g", "analyze", thru_file) == 0
    assert (tmp_path / "g" / "report.json").exists()


def test_grid_override_resamples(thru_file, tmp_path):
    out = tmp_path / "o"
    assert run("analyze", thru_file, "--out", out, "--grid", "1e9:30e9:1e9") == 0
    assert len((out / "rl.csv").read_text().splitlines()) == 31


def test_console_entry_point(thru_file, tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "sichannel.cli", "analyze", str(thru_file), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0
    assert json.loads(r.stdout)["ports"] == 2


def test_help_documents_pairing(capsys):
    with pytest.raises(SystemExit):
        cli.main(["analyze", "--help"])
    assert "1->2" in capsys.readouterr().out


def test_single_frequency_file_skips_time_domain(tmp_path):
    p = tmp_path / "one.s2p"
    p.write_text("# GHZ S RI\n1 0 0 1 0 1 0 0 0\n")
    assert run("analyze", p, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert "tdr_skipped" in rep and rep["brl_db"] is None


def test_nonpassive_reported_not_fixed(tmp_path):
    g = np.array([1e7, 1e9, 3e10])
    s = np.zeros((3, 2, 2), dtype=complex)
    s[:, 0, 1] = s[:, 1, 0] = 1.05
    p = tmp_path / "gain.s2p"
    p.write_text(write_touchstone(Network(g, s)))
    assert run("analyze", p, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "report.json").read_text())["passive"] is False
