import csv
import json

import numpy as np
import pytest

from markovcode import experiments as ex
from markovcode.cli import main, parse_grid
from markovcode.errors import ValidationError
from markovcode.io import matrix_document, matrix_sha256, parse_matrix, parse_policy, policy_document, read_policy
from markovcode.policies import myopic_policy

from conftest import WORKED


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def worked_file(tmp_path):
    return write(tmp_path / "worked.json", matrix_document(WORKED))


# -- solve -------------------------------------------------------------------

def test_solve_worked(worked_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["solve", worked_file, "--out", str(out)]) == 0
    lines = dict(line.split("\t") for line in capsys.readouterr().out.strip().splitlines())
    assert set(lines) == {"L_st", "L_m", "L_star"}
    doc = json.loads(out.read_text())
    etas = {k: v["eta"] for k, v in doc["policies"].items()}
    assert etas["optimal"] <= min(etas["myopic"], etas["steady_state"]) + 1e-9
    assert doc["matrix_sha256"] == matrix_sha256(WORKED)
    assert len(doc["policies"]["optimal"]["policy"]) == 6


def test_solve_bad_row_sum(tmp_path, capsys):
    f = write(tmp_path / "bad.json", {"n": 2, "rows": [[0.5, 0.6], [0.5, 0.5]]})
    assert main(["solve", f]) == 2
    assert "row 1" in capsys.readouterr().err


def test_solve_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad)]) == 2
    assert main(["solve", write(tmp_path / "ragged.json", {"rows": [[1.0], [0.5, 0.5]]})]) == 2


def test_solve_unsupported_alphabet(tmp_path):
    n = 9
    rows = np.full((n, n), 1 / n).tolist()
    assert main(["solve", write(tmp_path / "n9.json", {"n": n, "rows": rows})]) == 3


def test_solve_non_ergodic(tmp_path):
    assert main(["solve", write(tmp_path / "id.json", matrix_document(np.eye(3)))]) == 2


def test_solve_missing_file(tmp_path):
    assert main(["solve", str(tmp_path / "nope.json")]) == 5


# -- enumerate ---------------------------------------------------------------

@pytest.mark.parametrize("n, count", [(3, 3), (5, 75), (8, 41245)])
def test_enumerate_counts(n, count, capsys):
    assert main(["enumerate", "--n", str(n)]) == 0
    assert capsys.readouterr().out.strip() == str(count)


def test_enumerate_n2_full(capsys):
    assert main(["enumerate", "--n", "2", "--full"]) == 0
    assert capsys.readouterr().out.split() == ["1", "[1,1]"]


def test_enumerate_words(capsys):
    assert main(["enumerate", "--n", "3", "--words"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "3"
    assert out[1] == "[1,2,2] 0 10 11"


@pytest.mark.parametrize("n", ["1", "9"])
def test_enumerate_unsupported(n):
    assert main(["enumerate", "--n", n]) == 3


# -- beta sweep ----------------------------------------------------------------

def test_beta_sweep_rows(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["beta-sweep", "--beta-grid", "0,0.6,1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ex.sweep_columns(False)
    assert [r["beta"] for r in rows] == ["0", "0.6", "1"]
    for col in ("L_st", "L_m", "L_star"):
        assert float(rows[0][col]) == pytest.approx(2.0, abs=1e-5)
    for r in rows:
        assert float(r["L_star"]) <= min(float(r["L_m"]), float(r["L_st"])) + 1e-9
        assert r["error"] == ""
    last = [float(rows[2][c]) for c in ("L_st", "L_m", "L_star")]
    assert max(last) - min(last) < 1e-6


def test_beta_sweep_deterministic_with_simulation(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        args = ["beta-sweep", "--beta-grid", "0:1:0.5", "--simulate", "--transmissions", "20000",
                "--seed", "7", "--out", str(p)]
        assert main(args) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert "sim_L_star" in read_csv(paths[0])[0]


def test_beta_sweep_grid_validation():
    assert main(["beta-sweep", "--beta-grid", "0,1.5"]) == 2
    assert main(["beta-sweep", "--beta-grid", "a:b"]) == 2


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0:0.3:0.1") == [0.0, 0.1, 0.2, 0.3]
    assert parse_grid("0.1, 0.2") == [0.1, 0.2]
    with pytest.raises(ValidationError):
        parse_grid("0:1:0")


# -- ensemble and gain tail ----------------------------------------------------

def test_ensemble_files_and_summary(tmp_path):
    out = tmp_path / "ens.csv"
    assert main(["ensemble", "--n", "3", "--matrices", "40", "--seed", "11", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 40 and list(rows[0]) == ex.ENSEMBLE_COLUMNS
    assert [int(r["seed"]) for r in rows] == list(range(11, 51))
    for r in rows:
        assert float(r["L_star"]) <= min(float(r["L_m"]), float(r["L_st"])) + 1e-5
    summary = dict(read_csv(tmp_path / "ens_summary.csv")[i].values() for i in range(7))
    recomputed = ex.summarize(ex.ensemble(3, 40, 11))
    assert summary == dict(recomputed.as_rows())
    st = np.array([float(r["L_st"]) for r in rows])
    assert float(summary["E[L_st]"]) == pytest.approx(st.mean(), abs=1e-5)


def test_ensemble_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["ensemble", "--n", "4", "--matrices", "25", "--seed", "3", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a_summary.csv").read_bytes() == (tmp_path / "b_summary.csv").read_bytes()


def test_ensemble_parallel_matches_serial():
    assert ex.ensemble(3, 30, 5, workers=2) == ex.ensemble(3, 30, 5)


def test_ensemble_rejects_bad_args():
    assert main(["ensemble", "--n", "9", "--matrices", "2"]) == 3
    assert main(["ensemble", "--n", "3", "--matrices", "2", "--beta", "2"]) == 2
    with pytest.raises(SystemExit):
        main(["ensemble", "--matrices", "0"])


def test_gain_cdf(tmp_path):
    out = tmp_path / "gain.csv"
    assert main(["gain-cdf", "--n", "4", "--matrices", "60", "--tau-grid", "0:0.3:0.01", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ex.GAIN_COLUMNS
    for col in ("frac_myopic_gain_gt_tau", "frac_steady_gain_gt_tau"):
        vals = [float(r[col]) for r in rows]
        assert all(0 <= v <= 1 for v in vals)
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == 0.0


def test_gain_tail_noise_floor():
    rows = [{"L_st": 2.0, "L_m": 2.0 + 1e-12, "L_star": 2.0}, {"L_st": 2.5, "L_m": 2.1, "L_star": 2.0}]
    tail = ex.gain_tail(rows, [0.0, 0.2])
    assert tail[0] == {"tau": 0.0, "frac_myopic_gain_gt_tau": 0.5, "frac_steady_gain_gt_tau": 0.5}
    assert tail[1]["frac_myopic_gain_gt_tau"] == 0.0 and tail[1]["frac_steady_gain_gt_tau"] == 0.5


# -- ctmc ----------------------------------------------------------------------

def test_ctmc_zero_generator_rejected(tmp_path):
    f = write(tmp_path / "q0.json", matrix_document(np.zeros((3, 3))))
    assert main(["ctmc", f, "--d", "1.0"]) == 2


@pytest.mark.parametrize("d", ["0.1", "2.0"])
def test_ctmc_two_state_symmetric(d, tmp_path, capsys):
    f = write(tmp_path / "q.json", {"n": 2, "rows": [[-1.5, 1.5], [1.5, -1.5]]})
    out = tmp_path / "r.json"
    assert main(["ctmc", f, "--d", d, "--check-semigroup", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    gap = float(text.split("semigroup_gap\t")[1].split()[0])
    assert gap < 1e-8
    doc = json.loads(out.read_text())
    assert doc["d"] == float(d)
    assert doc["generator"]["rows"] == [[-1.5, 1.5], [1.5, -1.5]]
    for rep in doc["policies"].values():
        assert rep["eta"] == pytest.approx(1.0, abs=1e-12)


def test_ctmc_three_state(tmp_path, capsys):
    Q = [[-2.0, 1.5, 0.5], [0.3, -0.4, 0.1], [1.0, 1.0, -2.0]]
    assert main(["ctmc", write(tmp_path / "q.json", {"rows": Q}), "--d", "0.7"]) == 0
    assert "L_star" in capsys.readouterr().out


def test_ctmc_bad_generator(tmp_path):
    assert main(["ctmc", write(tmp_path / "q.json", {"rows": [[-1.0, 0.5], [1.0, -1.0]]}), "--d", "1"]) == 2
    assert main(["ctmc", write(tmp_path / "q2.json", {"rows": [[-1.0, 1.0], [1.0, -1.0]]}), "--d", "0"]) == 2


# -- simulate and policy files -------------------------------------------------

def test_simulate_roundtrip(worked_file, tmp_path):
    out, pol = tmp_path / "sim.csv", tmp_path / "pol.json"
    assert main(["simulate", worked_file, "--policy", "myopic", "--transmissions", "50000",
                 "--seed", "3", "--out", str(out), "--policy-out", str(pol)]) == 0
    row = read_csv(out)[0]
    assert row["policy_kind"] == "myopic" and row["seed"] == "3"
    assert abs(float(row["empirical_average"]) - float(row["analytic_eta"])) < 0.02
    doc = json.loads(pol.read_text())
    assert doc["n_states"] == 3 and doc["matrix_sha256"] == matrix_sha256(WORKED)
    out2 = tmp_path / "sim2.csv"
    assert main(["simulate", worked_file, "--policy-file", str(pol), "--transmissions", "50000",
                 "--seed", "3", "--out", str(out2)]) == 0
    row2 = read_csv(out2)[0]
    assert row2["policy_kind"] == "file"
    assert row2["empirical_average"] == row["empirical_average"]


def test_simulate_rejects_bad_transmissions(worked_file):
    with pytest.raises(SystemExit):
        main(["simulate", worked_file, "--transmissions", "0"])


def test_policy_document_roundtrip(worked):
    pol = myopic_policy(worked)
    doc = json.loads(json.dumps(policy_document(pol, worked.rows, 1.5, words=True)))
    assert parse_policy(doc) == pol
    assert doc["actions"]["1,2"] == [1, 2, 2]
    assert doc["codewords"]["1,2"] == ["0", "10", "11"]


def test_bad_policy_documents(tmp_path):
    with pytest.raises(ValidationError):
        parse_policy({"actions": {}})
    with pytest.raises(ValidationError):
        parse_policy({"n_states": 3, "actions": {"1,1": [1, 1, 1]}})
    bad = tmp_path / "p.json"
    bad.write_text("[")
    with pytest.raises(ValidationError):
        read_policy(bad)


def test_parse_matrix_checks():
    with pytest.raises(ValidationError):
        parse_matrix([[1.0]])
    with pytest.raises(ValidationError):
        parse_matrix({"n": 3, "rows": [[0.5, 0.5], [0.5, 0.5]]})
    with pytest.raises(ValidationError):
        parse_matrix({"rows": [["a", 1], [0.5, 0.5]]})
    np.testing.assert_array_equal(parse_matrix(matrix_document(WORKED)), WORKED)


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "markovcode", "enumerate", "--n", "4"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "13"
