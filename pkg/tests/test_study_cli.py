import csv
import io

import numpy as np
import pytest

from trunc_fem.cli import main
from trunc_fem.mesh import read_mesh
from trunc_fem.study import (CSV_COLUMNS, InvalidConfigError, StudyConfig, format_csv,
                             format_markdown, run_study)


def test_rows_are_eps_outer_n_inner():
    recs, code = run_study(StudyConfig(dim=2, eps=[1.0, 1e-6], levels=[2, 4, 8]))
    assert code == 0
    assert [(r.eps, r.N) for r in recs] == [(1.0, 2), (1.0, 4), (1.0, 8),
                                            (1e-6, 2), (1e-6, 4), (1e-6, 8)]
    assert recs[0].rate is None and recs[3].rate is None
    assert recs[1].rate == pytest.approx(np.log2(recs[0].rel_err / recs[1].rel_err))


def test_smooth_3d_rows():
    recs, code = run_study(StudyConfig(dim=3, eps=[1e-6], levels=[4, 8]))
    assert code == 0
    assert recs[0].rel_err == pytest.approx(1.513e-01, rel=0.03)
    assert recs[1].rel_err == pytest.approx(3.491e-02, rel=0.03)
    assert recs[1].rate == pytest.approx(2.1158, abs=0.05)
    assert recs[0].dofs == 108


def test_reproducible():
    cfg = StudyConfig(dim=2, eps=[1e-2], levels=[4, 8])
    a, _ = run_study(cfg)
    b, _ = run_study(cfg)
    for x, y in zip(a, b):
        assert x.rel_err == pytest.approx(y.rel_err, rel=1e-10)


def test_modes_identical_at_eps_zero():
    a, _ = run_study(StudyConfig(dim=2, eps=[0.0], levels=[4, 8], mode="trunc"))
    b, _ = run_study(StudyConfig(dim=2, eps=[0.0], levels=[4, 8], mode="full"))
    for x, y in zip(a, b):
        assert x.rel_err == pytest.approx(y.rel_err, rel=1e-12)


def test_solver_failure_marks_row():
    recs, code = run_study(StudyConfig(dim=2, eps=[1.0], levels=[8, 16], maxit=2,
                                       solver="pcg"))
    assert code == 2
    assert not any(r.converged for r in recs)
    assert all(r.rate is None for r in recs)
    assert "(failed)" in format_markdown(recs)


@pytest.mark.parametrize("kwargs", [
    {"levels": [8, 4]}, {"levels": [4, 4]}, {"levels": [0, 2]}, {"dim": 4},
    {"problem": "layer", "eps": [0.0]}, {"eps": [-1.0]}, {"mode": "mixed"},
    {"load_degree": 3}, {"error_degree": 5}, {"error_degree": 13}, {"rtol": 0.0},
    {"maxit": 0}, {"format": "json"}, {"split": "x"}, {"problem": "wave"},
])
def test_invalid_configs(kwargs):
    with pytest.raises(InvalidConfigError):
        StudyConfig(**kwargs).validate()


def test_default_levels():
    assert StudyConfig(dim=3).levels == [4, 8, 16, 32]
    assert StudyConfig(dim=2).levels == [4, 8, 16, 32, 64, 128, 256]


def test_csv_columns():
    recs, _ = run_study(StudyConfig(dim=2, eps=[1e-2], levels=[2, 4]))
    rows = list(csv.reader(io.StringIO(format_csv(recs))))
    assert rows[0] == CSV_COLUMNS
    assert rows[1][0] == "2" and rows[1][4] == "2" and rows[1][9] == ""
    assert float(rows[2][8]) == recs[1].rel_err


def test_markdown_layout():
    recs, _ = run_study(StudyConfig(dim=2, eps=[1.0, 1e-2], levels=[2, 4]))
    lines = format_markdown(recs).splitlines()
    assert lines[0] == "| eps \\ h | 1/2 | 1/4 |"
    assert lines[2].startswith("| 1e+00 |")
    assert lines[3].startswith("| rate |  |")
    assert lines[4].startswith("| 1e-02 |")


def test_cli_study_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["study", "--dim", "2", "--eps", "1e-2", "--levels", "2,4", "--format", "csv",
                 "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_cli_study_markdown_stdout(capsys):
    assert main(["study", "--dim", "2", "--eps", "1,1e-6", "--levels", "2,4"]) == 0
    assert "| eps \\ h |" in capsys.readouterr().out


def test_cli_dumps(tmp_path):
    code = main(["study", "--dim", "3", "--eps", "1", "--levels", "2",
                 "--mesh-out", str(tmp_path / "m{N}.txt"),
                 "--matrix-out", str(tmp_path / "A{N}_{eps}.txt")])
    assert code == 0
    assert read_mesh(tmp_path / "m2.txt").ncells == 48
    assert len((tmp_path / "A2_1.txt").read_text().splitlines()) == 16


@pytest.mark.parametrize("argv", [
    ["study", "--levels", "8,4"],
    ["study", "--problem", "layer", "--eps", "0", "--levels", "2"],
    ["study", "--dim", "5"],
    ["study", "--eps", "a,b"],
    ["study", "--dim", "3", "--levels", "1"],
    ["study", "--load-degree", "20", "--levels", "2"],
    ["verify", "--dims", "6"],
    ["verify", "--trials", "-1"],
    ["--threads", "0", "verify", "--trials", "0"],
    ["frobnicate"],
])
def test_cli_invalid_config_exit_code(argv):
    # argparse usage errors raise SystemExit, semantic ones return the code
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 3


def test_cli_solver_failure_exit_code():
    assert main(["study", "--dim", "2", "--eps", "1", "--levels", "8", "--maxit", "1",
                 "--solver", "pcg"]) == 2


def test_cli_verify_vacuous(capsys):
    assert main(["verify", "--trials", "0"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_cli_verify_writes_report(tmp_path):
    out = tmp_path / "report.json"
    assert main(["verify", "--dims", "2", "--trials", "5", "--seed", "3", "--out", str(out)]) == 0
    assert '"passed": true' in out.read_text()


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("TRUNC_FEM_THREADS", "1")
    assert main(["verify", "--dims", "2", "--trials", "1"]) == 0
    monkeypatch.setenv("TRUNC_FEM_THREADS", "many")
    assert main(["verify", "--dims", "2", "--trials", "1"]) == 3
    assert main(["--threads", "1", "verify", "--dims", "2", "--trials", "1"]) == 0
