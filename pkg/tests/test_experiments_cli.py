import csv
import io
import subprocess
import sys

import pytest

from nrbous import DomainError, DomainParams
from nrbous import experiments as ex
from nrbous.cli import main
from nrbous.snapshot import load_snapshot

STAMP = "# generated:"


def _rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_check_line_format():
    c = ex.Check("thing", 1e-14, 1e-12, True, "note")
    assert c.line() == "PASS thing: value=1e-14 tol=1e-12 (note)"
    assert ex.Check("x", float("nan"), 1.0, False).line().startswith("FAIL x:")


@pytest.mark.parametrize(
    "kw",
    [
        {"kind": "nonsense"},
        {"kind": "count-fff", "grid": {"n_ladder": []}},
        {"kind": "count-fff", "grid": {"n_ladder": [16, 16, 32]}},
        {"kind": "compare-N", "grid": {"N_ladder": [50, 25]}},
    ],
)
def test_experiment_spec_validation(kw):
    with pytest.raises(DomainError):
        ex.ExperimentSpec(**kw)


def test_format_csv_header():
    spec = ex.ExperimentSpec("simulate", params={"eta": 2.5}, grid={"N_ladder": [1, 2]})
    res = ex.ExperimentResult(("a", "b"), [{"a": 0.1, "b": 3}], ["note"], [ex.Check("c", 0.0, 1.0, True)])
    txt = ex.format_csv(spec, res, "2026-01-01T00:00:00+00:00")
    lines = txt.splitlines()
    assert lines[1] == "# experiment: simulate"
    assert "# param eta=2.5" in lines and "# grid N_ladder=[1, 2]" in lines and "# note" in lines
    assert lines[-3].startswith(STAMP) and lines[-1] == "0.1,3"
    assert STAMP not in ex.format_csv(spec, res)


def test_usage_errors_exit_2(capsys):
    assert main(["count", "--bogus"]) == 2
    assert main([]) == 2
    assert main(["simulate", "--system", "other"]) == 2


def test_domain_error_exit_4(tmp_path):
    assert main(["lower-bound", "--eta", "1.0", "--out", str(tmp_path / "x.csv")]) == 4
    assert main(["count", "--kind", "mixed", "--delta-star", "0.9", "--quiet"]) == 4


def test_io_error_exit_3(tmp_path):
    out = tmp_path / "missing" / "x.csv"
    assert main(["lower-bound", "--m-ladder", "16,32", "--out", str(out)]) == 3


def test_lower_bound_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["lower-bound", "--m-ladder", "32,64", "--no-timestamp"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "PASS lower-bound ratio" in capsys.readouterr().err
    rows = _rows(a.read_text())
    assert len(rows) == 2 and float(rows[0]["ratio"]) >= 0.9
    c = tmp_path / "c.csv"
    assert main(["lower-bound", "--m-ladder", "32,64", "--out", str(c), "--quiet"]) == 0
    assert STAMP in c.read_text()
    assert main(["lower-bound", "--m-ladder", "64,32"]) == 4


def test_count_subcommand(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(["count", "--kind", "fff", "--eta", "1.5", "--n-ladder", "4,8", "--out", str(out), "--quiet"])
    assert rc == 0
    rows = _rows(out.read_text())
    assert {r["experiment"] for r in rows} == {"count-fff"} and all(r["count"] == "0" for r in rows)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small lower-bound run\neta = 2.5\nm-ladder = 16,32\ndelta-star=0.05\n")
    out = tmp_path / "o.csv"
    assert main(["lower-bound", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = _rows(out.read_text())
    assert [r["delta"] for r in rows] == ["0.05", "0.05"] and rows[0]["eta"] == "2.5"
    assert main(["lower-bound", "--config", str(cfg), "--delta-star", "0.1", "--out", str(out), "--quiet"]) == 0
    assert _rows(out.read_text())[0]["delta"] == "0.1"
    cfg.write_text("colour = blue\n")
    assert main(["lower-bound", "--config", str(cfg), "--quiet"]) == 4
    assert main(["lower-bound", "--config", str(tmp_path / "none.cfg"), "--quiet"]) == 3


def test_invariants_and_negative_control(tmp_path):
    base = ["invariants", "--eta", "2.5", "--l1", "1.3", "--l2", "0.7", "--frame-cutoff", "4", "--cutoff", "3",
            "--sign-cutoff", "4", "--fields", "1", "--quiet"]
    assert main(base + ["--out", str(tmp_path / "ok.csv")]) == 0
    assert main(base + ["--corrupt-frame", "--out", str(tmp_path / "bad.csv")]) == 1
    bad = {r["check"]: r["passed"] for r in _rows((tmp_path / "bad.csv").read_text())}
    assert bad["orthonormality K=4 eta=2.5 L=(1.3,0.7)"] == "0"


def test_coeff_scan_with_triads(tmp_path):
    tri = tmp_path / "tri.csv"
    out = tmp_path / "s.csv"
    assert main(["coeff-scan", "--cutoff", "2", "--eta", "2.5", "--l1", "1", "--l2", "1",
                 "--triads", str(tri), "--out", str(out), "--quiet"]) == 0
    assert tri.exists() and len(_rows(out.read_text())) == 1
    assert main(["coeff-scan", "--cutoff", "2", "--triads", str(tri), "--quiet"]) == 4


def test_simulate_with_snapshot(tmp_path):
    snap, out = tmp_path / "s.json", tmp_path / "sim.csv"
    rc = main(["simulate", "--cutoff", "2", "--t-final", "0.02", "--dt", "0.005", "--nu1", "0.01", "--nu2", "0.02",
               "--snapshot", str(snap), "--out", str(out), "--quiet"])
    assert rc == 0
    rows = _rows(out.read_text())
    assert len(rows) == 5 and float(rows[-1]["t"]) == pytest.approx(0.02)
    assert load_snapshot(snap).lattice.K == 2


def test_simulate_rejected_run_exits_1(tmp_path):
    rc = main(["simulate", "--cutoff", "2", "--t-final", "0.02", "--dt", "0.01", "--big-n", "1000",
               "--on-violation", "reject", "--out", str(tmp_path / "r.csv"), "--quiet"])
    assert rc == 1


def test_compare_n_small(tmp_path):
    out = tmp_path / "cn.csv"
    rc = main(["compare-n", "--cutoff", "2", "--t-final", "0.05", "--dt", "0.01", "--n-ladder", "5,10",
               "--out", str(out), "--quiet", "--no-timestamp"])
    rows = _rows(out.read_text())
    assert rc in (0, 1)
    assert [r["N"] for r in rows] == ["5.0", "10.0"] and all(r["aborted"] == "0" for r in rows)
    assert "fitted slope" in out.read_text()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "nrbous", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "compare-n" in out.stdout


def test_compare_dt_caps_by_phase():
    from nrbous.solver import SimConfig

    cfg = SimConfig(dom=DomainParams(2.5), K=2, dt=1.0, phase_cfl=0.5)
    assert ex.compare_dt(cfg, 10.0) == pytest.approx(0.5 / (10.0 * 3 * 2.5), rel=1e-3)


def test_simulate_slow_only_and_inviscid(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--cutoff", "2", "--t-final", "0.05", "--dt", "0.005", "--weights", "1,0,0",
                 "--out", str(out), "--quiet"]) == 0
    rows = _rows(out.read_text())
    assert all(float(r["l2_fast"]) == 0.0 for r in rows)
    l2 = [float(r["l2"]) for r in rows]
    assert max(abs(x / l2[0] - 1) for x in l2) < 1e-10


def test_compare_n_ablation_runs(tmp_path):
    out = tmp_path / "ab.csv"
    rc = main(["compare-n", "--cutoff", "2", "--t-final", "0.05", "--dt", "0.01", "--n-ladder", "5,10",
               "--ablation", "--out", str(out), "--quiet", "--no-timestamp"])
    assert rc in (0, 1)
    rows = _rows(out.read_text())
    assert len(rows) == 2 and all(r["aborted"] == "0" for r in rows)
