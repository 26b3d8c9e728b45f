import csv
import json

import numpy as np
import pytest

from qfe import __version__, cli
from qfe.problems import build_heat
from qfe.vqs import SolverError


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    lines = text.splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return header, rows[0], np.array(rows[1:], dtype=float)


def test_count_examples(capsys):
    code, out, _ = run(["count", "--n", "2", "--M", "4"], capsys)
    assert code == 0 and "= 105" in out and "= 45" in out and "ratio" in out
    assert run(["count", "--n", "2", "--M", "4", "--strategy", "original"], capsys)[1].strip() == "105"
    assert run(["count", "--n", "2", "--M", "4", "--strategy", "parallel"], capsys)[1].strip() == "45"
    assert run(["count", "--n", "1", "--M", "0", "--P", "1", "--strategy", "original"],
               capsys)[1].strip() == "2"
    assert run(["count", "--n", "0", "--M", "4"], capsys)[0] == 2


@pytest.mark.parametrize("strategy,expected", [("parallel", 45), ("original", 105)])
def test_run_circuit_counts(capsys, strategy, expected):
    code, out, _ = run(["run", "dense-ode", "--strategy", strategy, "--mode", "circuit",
                        "--t-final", "0.002"], capsys)
    assert code == 0
    header, cols, data = read_csv(out)
    count = json.loads(header[2].split(" ", 2)[2])
    assert count["counted"] and count["circuits_per_step"] == expected
    assert data.shape == (3, len(cols))


def test_run_heat_t0_is_initial(capsys):
    code, out, _ = run(["run", "heat", "--t-final", "0"], capsys)
    assert code == 0
    _, cols, data = read_csv(out)
    assert data.shape[0] == 1
    sol = data[0, [c.startswith("sol_") for c in cols]]
    assert np.abs(sol - build_heat().initial).max() < 1e-8  # limited by the 1e-10 fit tolerance


def test_columns_and_header(capsys):
    code, out, _ = run(["run", "dense-ode", "--t-final", "0.01", "--stride", "5"], capsys)
    header, cols, data = read_csv(out)
    assert header[0] == f"# qfe {__version__}"
    cfg = json.loads(header[1].split(" ", 2)[2])
    assert cfg["problem"] == "dense-ode" and cfg["M"] == 4 and cfg["L"] == 2
    assert cols == (["t"] + [f"theta_{k}" for k in range(5)] + [f"sol_{i}" for i in range(4)]
                    + [f"ref_{i}" for i in range(4)] + ["abs_err_max"])
    assert np.allclose(data[:, 0], [0, 0.005, 0.01])
    err = np.abs(data[:, 6:10] - data[:, 10:14]).max(axis=1)
    assert np.allclose(err, data[:, -1])


def test_json_mirrors_csv(tmp_path, capsys):
    base = ["run", "stochastic-ode", "--n", "2", "--t-final", "0.01"]
    run(base + ["-o", str(tmp_path / "a.csv")], capsys)
    run(base + ["--format", "json", "-o", str(tmp_path / "a.json")], capsys)
    _, cols, data = read_csv((tmp_path / "a.csv").read_text())
    js = json.loads((tmp_path / "a.json").read_text())
    assert js["columns"] == cols and js["version"] == __version__
    assert np.array_equal(np.array(js["rows"]), data)
    assert js["config"]["n"] == 2


def test_deterministic_output(tmp_path, capsys):
    # the output path is part of the echoed config, so both runs write to the same file
    target = tmp_path / "out.csv"
    outputs = []
    for _ in range(2):
        assert run(["run", "heat", "--t-final", "0.01", "--seed", "3", "-o", str(target)],
                   capsys)[0] == 0
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "dense-ode", "t_final": 0.01, "format": "json"}))
    code, out, _ = run(["run", "--config", str(cfg), "--t-final", "0.002"], capsys)
    assert code == 0
    js = json.loads(out)
    assert js["config"]["t_final"] == 0.002 and len(js["rows"]) == 3


@pytest.mark.parametrize("argv", [
    ["run", "dense-ode", "--dt", "0"],
    ["run", "dense-ode", "--n", "3"],
    ["run", "dense-ode", "--M", "5"],
    ["run", "heat", "--t-final", "0.0015"],
    ["run", "heat", "--mode", "fast"],
    ["run"],
    ["bogus"],
])
def test_config_errors(capsys, argv):
    assert cli.main(argv) == 2
    capsys.readouterr()


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"problem": "heat", "colour": 1}')
    code, _, err = run(["run", "--config", str(bad)], capsys)
    assert code == 2 and "colour" in err
    bad.write_text("[1, 2]")
    assert run(["run", "--config", str(bad)], capsys)[0] == 2
    bad.write_text('{"problem": "heat", "dt": "small"}')
    assert run(["run", "--config", str(bad)], capsys)[0] == 2
    assert run(["run", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2


def test_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("QFE_THREADS", "zero")
    assert run(["run", "heat", "--t-final", "0"], capsys)[0] == 2
    monkeypatch.setenv("QFE_THREADS", "0")
    assert run(["run", "heat", "--t-final", "0"], capsys)[0] == 2
    monkeypatch.setenv("QFE_THREADS", "2")
    assert cli.thread_cap() == 2


def test_solver_failure_exit(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise SolverError("non-finite theta derivative at step 7", 7)

    monkeypatch.setattr(cli, "simulate", boom)
    code, _, err = run(["run", "dense-ode"], capsys)
    assert code == 3 and "step 7" in err


def test_convergence_heat(capsys):
    code, out, _ = run(["convergence", "heat"], capsys)
    assert code == 0
    _, cols, data = read_csv(out)
    assert cols == ["N", "error"] and list(data[:, 0]) == list(range(6, 14))
    assert np.all(np.diff(data[:, 1]) < 0)


def test_convergence_constant(capsys):
    _, out, _ = run(["convergence", "constant"], capsys)
    _, _, data = read_csv(out)
    assert np.abs(data[:, 1]).max() < 1e-13


def test_convergence_pce(capsys):
    _, out, _ = run(["convergence", "pce", "--format", "json"], capsys)
    errs = [e for _, e in json.loads(out)["rows"]]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_convergence_stochastic_ode(capsys):
    _, out, _ = run(["convergence", "stochastic-ode"], capsys)
    _, _, data = read_csv(out)
    assert list(data[:, 0]) == [2, 3] and data[1, 1] <= data[0, 1]


def test_selftest(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0 and "FAIL" not in out and out.strip().endswith("passed")
