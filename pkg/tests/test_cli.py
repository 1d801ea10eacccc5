import json
import subprocess
import sys

import numpy as np
import pytest

from mixcomp.cli import main


def _lines(text):
    return [json.loads(l) for l in text.splitlines() if l.strip()]


@pytest.fixture
def textfile(tmp_path):
    p = tmp_path / "in.txt"
    p.write_bytes(b"a rose is a rose is a rose. " * 300)
    return p


def test_compress_decompress(tmp_path, textfile, capsys):
    out, back = tmp_path / "c.mxc", tmp_path / "back.txt"
    assert main(["compress", str(textfile), str(out)]) == 0
    rec = _lines(capsys.readouterr().out)[0]
    assert {"n", "payload_bits", "ideal_bits", "bits_per_symbol"} <= set(rec)
    assert rec["n"] == textfile.stat().st_size
    assert main(["decompress", str(out), str(back)]) == 0
    assert back.read_bytes() == textfile.read_bytes()


@pytest.mark.parametrize("flags", [["--mix", "lin"], ["--mix", "lin", "--table-row", "1"],
                                   ["--orders", "0,1", "--B", "10", "--alpha", "0.01"],
                                   ["--w1", "0.2,0.3,0.5", "--table-row", "3"],
                                   ["--box", "2", "--alpha", "0.001"]])
def test_compress_flags(tmp_path, textfile, flags):
    out, back = tmp_path / "c.mxc", tmp_path / "b"
    assert main(["compress", str(textfile), str(out), *flags]) == 0
    assert main(["decompress", str(out), str(back)]) == 0
    assert back.read_bytes() == textfile.read_bytes()


def test_empty_file(tmp_path):
    src, out, back = tmp_path / "e", tmp_path / "e.mxc", tmp_path / "e2"
    src.write_bytes(b"")
    assert main(["compress", str(src), str(out)]) == 0
    assert main(["decompress", str(out), str(back)]) == 0
    assert back.read_bytes() == b""


def test_exit_codes(tmp_path, textfile):
    assert main(["compress", str(tmp_path / "missing"), str(tmp_path / "o")]) == 2
    assert main(["decompress", str(textfile), str(tmp_path / "o")]) == 2
    assert main(["nonsense"]) == 1
    assert main(["compress", str(textfile), str(tmp_path / "o"), "--mix", "lin", "--table-row", "4"]) == 1
    assert main(["compress", str(textfile), str(tmp_path / "o"), "--B", "4"]) == 1
    assert main(["compress", str(textfile), str(tmp_path / "o"), "--orders", "0,x"]) == 1
    assert main(["bounds", "--row", "3", "--mix", "lin"]) == 1
    assert main(["bounds", "--bound", "prop1", "--mix", "geo"]) == 1
    assert main(["bounds", "--row", "1", "--B", "2", "--N", "16"]) == 1


def test_truncated_container(tmp_path, textfile):
    out = tmp_path / "c.mxc"
    main(["compress", str(textfile), str(out)])
    out.write_bytes(out.read_bytes()[:-7])
    assert main(["decompress", str(out), str(tmp_path / "x")]) == 2


def test_trace_file(textfile, tmp_path, capsys):
    assert main(["trace", str(textfile)]) == 0
    recs = _lines(capsys.readouterr().out)
    assert len(recs) == textfile.stat().st_size
    assert set(recs[0]) == {"step", "w", "bits", "grad_norm"}
    dest = tmp_path / "t.jsonl"
    assert main(["trace", str(textfile), "--out", str(dest), "--mix", "lin"]) == 0
    assert len(dest.read_text().splitlines()) == len(recs)


def test_synth_and_trace_instance(tmp_path, capsys):
    npz = tmp_path / "s.npz"
    assert main(["synth", "--scenario", "switching", "--n", "1000", "--seed", "1", "--out", str(npz)]) == 0
    rec = _lines(capsys.readouterr().out)[0]
    assert rec["s"] == 2 and abs(rec["starts"][1] - 501) <= 20
    with np.load(npz) as z:
        assert z["x"].shape == (1000,) and z["P"].shape == (1000, 2, 16)
    assert main(["trace", "--instance", str(npz), "--mix", "geo", "--B", "8"]) == 0
    assert len(_lines(capsys.readouterr().out)) == 1000


@pytest.mark.parametrize("scenario", ["iid", "adversarial"])
def test_synth_deterministic(scenario, capsys):
    main(["synth", "--scenario", scenario, "--seed", "5", "--n", "300"])
    a = capsys.readouterr().out
    main(["synth", "--scenario", scenario, "--seed", "5", "--n", "300"])
    assert capsys.readouterr().out == a


def test_bounds_row3(capsys):
    assert main(["bounds", "--row", "3", "--m", "2", "--B", "8", "--n", "1000", "--trials", "20"]) == 0
    recs = _lines(capsys.readouterr().out)
    assert len(recs) == 20 and all(r["slack"] >= 0 for r in recs)
    assert [r["trial"] for r in recs] == list(range(20))


def test_bounds_row2_penalty(capsys):
    assert main(["bounds", "--row", "2", "--m", "2", "--B", "2", "--n", "400", "--trials", "2"]) == 0
    rec = _lines(capsys.readouterr().out)[0]
    assert rec["params"]["penalty_per_segment"] == pytest.approx(35 * 2 * 16 / 8 * 20)


def test_bounds_deterministic_and_parallel(capsys):
    args = ["bounds", "--row", "4", "--m", "3", "--B", "6", "--n", "300", "--trials", "4", "--seed", "9"]
    main(args)
    a = capsys.readouterr().out
    main(args)
    b = capsys.readouterr().out
    main(args + ["--workers", "2"])
    c = capsys.readouterr().out
    assert a == b == c


@pytest.mark.parametrize("extra", [["--bound", "prop1", "--mix", "geo", "--b", "1.5"],
                                   ["--bound", "thm1a", "--mix", "lin", "--b", "2", "--B", "4"],
                                   ["--bound", "thm1b", "--mix", "geo"],
                                   ["--bound", "thm1a", "--mix", "geo", "--b", "2", "--box", "1"]])
def test_bounds_other_ids(extra, capsys):
    assert main(["bounds", "--n", "150", "--trials", "2", *extra]) == 0
    assert all(r["holds"] for r in _lines(capsys.readouterr().out))


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    recs = _lines(capsys.readouterr().out)
    assert {r["check"] for r in recs} == {"lemma5_grid", "lemma6_grid", "example1_value",
                                          "example1_sampled", "gradient_fd",
                                          "equilibrium_identity", "projection_oracle"}
    assert all(r["pass"] for r in recs)


def test_selftest_failure_exit_code(monkeypatch, capsys):
    import mixcomp.cli as cli

    def broken(seed=0):
        yield "always_fails", False, {}
    monkeypatch.setattr(cli, "selftest_checks", broken)
    assert cli.main(["selftest"]) == 4


def test_bound_violation_exit_code(monkeypatch, capsys):
    import mixcomp.cli as cli
    real = cli._bound_trial

    def inflated(job):
        rec = real(job)
        rec["holds"] = False
        return rec
    monkeypatch.setattr(cli, "_bound_trial", inflated)
    assert cli.main(["bounds", "--row", "3", "--n", "50", "--trials", "1"]) == 3


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mixcomp.cli", "selftest"], capture_output=True, text=True)
    assert r.returncode == 0 and len(r.stdout.splitlines()) == 7
