import json

import pytest

from fadenet.cli import main
from fadenet.topology import generate, save_topology


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestKappa:
    def test_generated_topology(self, capsys):
        code, out, _ = run(capsys, "kappa", "--gen", "diagonal:3")
        assert code == 0
        doc = json.loads(out)
        assert doc["kappa_star"] == 3
        assert doc["chain_transmitters"] == [1, 2, 3]
        assert len(doc["chain_witnesses"]) == 3

    def test_topology_file(self, capsys, tmp_path):
        path = tmp_path / "net.json"
        save_topology(generate("wyner_cyclic", 4), path)
        code, out, _ = run(capsys, "kappa", "--topo", str(path))
        assert code == 0
        assert json.loads(out)["kappa_star"] == 3

    def test_size_guard_exit_code(self, capsys):
        code, _, err = run(capsys, "kappa", "--gen", "diagonal:30")
        assert code == 3
        assert "error:" in err

    def test_random_needs_seed(self, capsys):
        code, _, err = run(capsys, "kappa", "--gen", "random:4,4,0.5")
        assert code == 2
        assert "--seed" in err

    def test_random_with_seed(self, capsys):
        code, out, _ = run(capsys, "kappa", "--gen", "random:4,4,0.5", "--seed", "9")
        assert code == 0
        doc = json.loads(out)
        assert 1 <= doc["kappa_star"] <= 4

    def test_bad_generator_spec(self, capsys):
        code, _, err = run(capsys, "kappa", "--gen", "hexagonal:3")
        assert code == 2
        assert "error:" in err

    def test_missing_topology_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "kappa", "--topo", str(tmp_path / "absent.json"))
        assert code == 2
        assert "error:" in err


class TestDecompose:
    def test_identity_on_diagonal(self, capsys):
        code, out, _ = run(capsys, "decompose", "--gen", "diagonal:3", "--perm", "1,2,3")
        assert code == 0
        doc = json.loads(out)
        assert doc["kappa"] == 3
        assert doc["receiver_blocks"] == [[1], [2], [3]]
        assert doc["transmitter_blocks"] == [[1], [2], [3]]

    def test_full_network_single_block(self, capsys):
        code, out, _ = run(capsys, "decompose", "--gen", "full:3,3", "--perm", "1,2,3")
        assert code == 0
        doc = json.loads(out)
        assert doc["kappa"] == 1
        assert doc["receiver_blocks"] == [[1, 2, 3]]
        assert doc["transmitter_blocks"] == [[1, 2, 3]]

    def test_bad_permutation(self, capsys):
        code, _, err = run(capsys, "decompose", "--gen", "diagonal:3", "--perm", "1,2")
        assert code == 2
        assert "error:" in err
        code, _, err = run(capsys, "decompose", "--gen", "diagonal:3", "--perm", "a,b,c")
        assert code == 2


class TestBounds:
    def test_csv_to_stdout(self, capsys):
        code, out, _ = run(capsys, "bounds", "--gen", "diagonal:2", "--grid", "8,16,5")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "E,kappa,loglog,lower,upper,feasible"
        assert len(lines) == 6
        first = lines[1].split(",")
        assert first[0] == "100000000.0"
        assert first[-1] == "true"
        assert float(first[4]) > float(first[3])  # upper above lower

    def test_json_format(self, capsys):
        code, out, _ = run(
            capsys, "bounds", "--gen", "full:1,1", "--grid", "8,8,1", "--format", "json"
        )
        assert code == 0
        docs = json.loads(out)
        assert len(docs) == 1
        assert docs[0]["feasible"] is True
        assert docs[0]["upper_bound"] == pytest.approx(3.8117156885835115, rel=1e-9)

    def test_mixed_feasibility_rows(self, capsys):
        code, out, _ = run(capsys, "bounds", "--gen", "diagonal:2", "--grid", "5,9,2")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[1].endswith(",false")
        assert lines[2].endswith(",true")

    def test_all_infeasible_exit_code(self, capsys):
        code, _, err = run(capsys, "bounds", "--gen", "diagonal:2", "--grid", "4,5,2")
        assert code == 4
        assert "feasibility" in err

    def test_out_and_plot_data_files(self, capsys, tmp_path):
        data = tmp_path / "bounds.csv"
        plot = tmp_path / "plot.csv"
        code, out, _ = run(
            capsys,
            "bounds",
            "--gen",
            "diagonal:2",
            "--grid",
            "8,12,3",
            "--out",
            str(data),
            "--plot-data",
            str(plot),
        )
        assert code == 0
        assert out == ""
        assert data.read_text().startswith("E,kappa,loglog")
        rows = plot.read_text().strip().splitlines()
        assert len(rows) == 3
        x, y = rows[0].split(",")
        float(x), float(y)  # both parse

    def test_bad_grid(self, capsys):
        code, _, err = run(capsys, "bounds", "--gen", "diagonal:2", "--grid", "8,4,3")
        assert code == 2
        code, _, err = run(capsys, "bounds", "--gen", "diagonal:2", "--grid", "8,9,1")
        assert code == 2


class TestSweep:
    def test_requires_seed(self, capsys):
        code, _, err = run(
            capsys, "sweep", "--gen", "full:1,1", "--grid", "8,10,2",
            "--outer", "400", "--inner", "120",
        )
        assert code == 2
        assert "--seed" in err

    def test_grid_cap(self, capsys):
        code, _, err = run(
            capsys, "sweep", "--gen", "full:1,1", "--grid", "8,18,2",
            "--seed", "1", "--outer", "400", "--inner", "120",
        )
        assert code == 2
        assert "capped" in err

    def test_csv_and_summary(self, capsys, tmp_path):
        out_file = tmp_path / "sweep.csv"
        code, out, _ = run(
            capsys,
            "sweep",
            "--gen", "full:1,1",
            "--grid", "8,12,3",
            "--seed", "5",
            "--outer", "400",
            "--inner", "120",
            "--out", str(out_file),
        )
        assert code == 0
        # summary goes to stdout once the data has its own file
        assert out.startswith("kappa_star=1 fitted_slope=")
        assert "feasible_points=3/3" in out
        lines = out_file.read_text().strip().splitlines()
        assert lines[0] == "E,kappa_star,loglog,lower,mc,mc_stderr,upper,feasible"
        assert len(lines) == 4

    def test_stdout_data_summary_on_stderr(self, capsys):
        code, out, err = run(
            capsys,
            "sweep",
            "--gen", "full:1,1",
            "--grid", "8,8,1",
            "--seed", "5",
            "--outer", "400",
            "--inner", "120",
        )
        assert code == 0
        assert out.startswith("E,kappa_star")
        assert "fitted_slope=n/a" in err

    def test_reruns_and_workers_are_byte_identical(self, capsys, tmp_path):
        files = [tmp_path / name for name in ("a.csv", "b.csv", "c.csv")]
        for path, workers in zip(files, ("1", "1", "2")):
            code, _, _ = run(
                capsys,
                "sweep",
                "--gen", "diagonal:2",
                "--grid", "8,10,2",
                "--seed", "42",
                "--outer", "400",
                "--inner", "120",
                "--workers", workers,
                "--out", str(path),
            )
            assert code == 0
        blobs = [path.read_bytes() for path in files]
        assert blobs[0] == blobs[1] == blobs[2]

    def test_all_infeasible_exit_code(self, capsys):
        code, _, err = run(
            capsys, "sweep", "--gen", "diagonal:2", "--grid", "4,5,2",
            "--seed", "1", "--outer", "400", "--inner", "120",
        )
        assert code == 4
