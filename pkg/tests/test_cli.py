import math
import subprocess
import sys

import pytest

from horseshoe_ifs.cli import main
from horseshoe_ifs.config import PRESETS, format_params, load_params


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    head = lines[0].split(",")
    return [dict(zip(head, ln.split(","))) for ln in lines[1:]]


def test_validate_exit_codes(capsys, tmp_path):
    code, out, _ = run(capsys, "validate")
    assert code == 0 and "# overall=PASS" in out
    code, out, _ = run(capsys, "validate", "--preset", "steep-beta0")
    assert code == 1
    assert any(r["group"] == "F01" and r["status"] == "FAIL" for r in rows(out))
    code, _, err = run(capsys, "validate", "--params", str(tmp_path / "missing.cfg"))
    assert code == 2 and "cannot read" in err


def test_params_file_round_trip(capsys, tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("# comment\n" + format_params(PRESETS["default-validated"]))
    assert load_params(path) == PRESETS["default-validated"]
    assert run(capsys, "validate", "--params", str(path))[0] == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("beta0 = 1.05\nfoo = 3\n")
    code, _, err = run(capsys, "validate", "--params", str(bad))
    assert code == 2 and "missing keys" in err


def test_pressure_csv(capsys, tmp_path):
    argv = ["pressure", "--preset", "equal-beta", "--depth", "5", "--t-min", "-2", "--t-max", "2", "--t-step", "0.5", "--workers", "1"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert out.startswith("# command = pressure\n")
    data = rows(out)
    ts = [float(r["t"]) for r in data]
    assert all(a < b for a, b in zip(ts, ts[1:]))
    zero = next(r for r in data if float(r["t"]) == 0.0)
    assert abs(float(zero["lower"]) - math.log(3)) <= 1e-12 and abs(float(zero["upper"]) - math.log(3)) <= 1e-12
    assert abs(float(zero["lateral"]) - math.log(2)) <= 1e-12
    b = PRESETS["equal-beta"].beta0
    for r in data:
        assert float(r["lateral"]) == pytest.approx(math.log(2) - float(r["t"]) * math.log(b), abs=1e-12)
    # rerun is byte-identical, also through --out
    target = tmp_path / "p.csv"
    assert run(capsys, *argv, "--out", str(target))[0] == 0
    assert target.read_text() == out


def test_pressure_usage_errors(capsys):
    assert run(capsys, "pressure", "--t-step", "0")[0] == 2
    assert run(capsys, "pressure", "--depth", "40")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["pressure", "--workers", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["pressure", "--preset", "nope"])


def test_spectrum_command(capsys):
    code, out, _ = run(capsys, "spectrum", "--max-period", "5", "--workers", "1")
    assert code == 0 and "# valid = True" in out and "# gap_width = " in out


def test_transition_command(capsys):
    code, out, _ = run(capsys, "transition", "--depth", "8", "--t-min", "-8", "--t-max", "2", "--t-step", "0.1", "--workers", "1")
    assert code == 0
    tc = float(next(ln.split("=", 1)[1] for ln in out.splitlines() if ln.startswith("t_c_estimate=")))
    assert tc < 0


def test_measures_commands(capsys):
    code, out, _ = run(capsys, "measures", "pair", "--period", "6")
    assert code == 0
    p = PRESETS["default-validated"]
    line = next(ln for ln in out.splitlines() if ln.startswith("# mu2_limit_exponent"))
    assert float(line.split("=")[1]) == 0.5 * math.log(p.beta0 * p.beta2)
    code, out, _ = run(capsys, "measures", "maxent", "--period", "4", "--atoms")
    assert code == 0 and "word,fiber_point,weight,exponent" in out
    code, out, _ = run(capsys, "measures", "lift", "--probs", "0,1,0")
    assert code == 0 and f"# lift_bound = {math.log(p.gamma)!r}" in out
    code, out, _ = run(capsys, "measures", "triviality", "--probs", "0,1,0", "--samples", "100", "--word-len", "10")
    assert code == 0 and "# fraction_trivial = 1.0" in out
    assert run(capsys, "measures", "lift", "--probs", "0.5,0.6")[0] == 2


def test_itinerary_command(capsys):
    code, out, _ = run(capsys, "itinerary", "--count", "3", "--return-orbits", "200")
    assert code == 0
    assert len(rows(out)) == 3 and "# violations = 0" in out


def test_search_command(capsys, tmp_path):
    code, out, _ = run(capsys, "search", "--samples", "24", "--seed", "5", "--no-extra-constraints")
    assert code == 0
    block = out.split("# --- instance 0")[1].split("# ---")[0]
    path = tmp_path / "found.cfg"
    path.write_text(block.split("\n", 1)[1])
    assert run(capsys, "validate", "--params", str(path))[0] == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "horseshoe_ifs", "measures", "lift"], capture_output=True, text=True)
    assert res.returncode == 0 and "# lift_bound" in res.stdout
