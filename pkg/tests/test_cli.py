import json

import pytest

from resnet.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def strip_time(report):
    return {k: v for k, v in report.items() if k != "timestamp"}


def test_resistance_lattice(capsys, tmp_path):
    code, rep = run(capsys, "resistance", "--lattice", "2", "--pair", "0,0", "1,0",
                    "--depths", "4,8,16", "--out-dir", str(tmp_path))
    assert code == 0
    last = rep["outputs"]["bracket"][-1]
    assert last["wired"]["value"] <= 0.5 <= last["free"]["value"]
    assert last["gap"]["value"] < 0.02
    assert (tmp_path / "resistance_bracket.csv").read_text().startswith("depth,wired,free,gap")


def test_resistance_tree(capsys):
    code, rep = run(capsys, "resistance", "--tree", "--pair", "", "0", "--depths", "4,8,12",
                    "--gap", "0.17157287525381")
    out = rep["outputs"]
    assert code == 0 and not out["closed"]
    assert all(r["free"]["value"] == pytest.approx(1) for r in out["bracket"])
    assert out["gap_bound"]["wired_within_bound"]


def test_resistance_missing_pair(capsys):
    assert main(["resistance", "--lattice", "2", "--depths", "4"]) == 2


def test_resistance_finite(capsys):
    code, rep = run(capsys, "resistance", "--k3", "--pair", "0", "1")
    assert rep["outputs"]["resistance"]["value"] == pytest.approx(2 / 3)


def test_spectral_tree(capsys):
    code, rep = run(capsys, "spectral", "--tree", "--depths", "6,9,12")
    vals = [r["lambda_min"]["value"] for r in rep["outputs"]["gap_sequence"]]
    assert code == 0 and vals[0] > vals[1] > vals[2] > 0.17157


def test_spectral_z1(capsys):
    code, rep = run(capsys, "spectral", "--lattice", "1", "--depths", "8,16")
    vals = [r["lambda_min"]["value"] for r in rep["outputs"]["gap_sequence"]]
    assert vals[1] < vals[0] < 0.05


def test_spectral_measure(capsys, tmp_path):
    code, rep = run(capsys, "spectral", "--lattice", "2", "--measure", "delta", "0,0",
                    "--depth", "6", "--out-dir", str(tmp_path))
    assert code == 0 and rep["outputs"]["total"]["value"] == pytest.approx(1)
    assert (tmp_path / "spectral_measure.csv").exists()


def test_lattice_commands(capsys):
    code, rep = run(capsys, "lattice", "--d", "2", "--resistance", "0,0", "1,0")
    assert code == 0 and rep["outputs"]["value"]["value"] == pytest.approx(0.5, abs=1e-6)
    code, rep = run(capsys, "lattice", "--d", "3", "--monopole", "0,0,0")
    assert rep["outputs"]["value"]["value"] == pytest.approx(0.252731, abs=1e-5)
    assert rep["outputs"]["value"]["converged"]


def test_lattice_recurrent_error(capsys):
    code, rep = run(capsys, "lattice", "--d", "2", "--monopole", "0,0")
    assert code == 1 and rep["error"]["type"] == "RecurrentLattice"


def test_lattice_probes(capsys):
    code, rep = run(capsys, "lattice", "--d", "3", "--transience")
    assert rep["outputs"]["verdict"] == "transient"
    code, rep = run(capsys, "lattice", "--d", "3", "--ell2", "dipole")
    assert rep["outputs"]["verdict"] == "bounded"


def test_walk_path(capsys):
    code, rep = run(capsys, "walk", "--path", "3", "--pair", "0", "2", "--episodes", "100000",
                    "--seed", "7")
    out = rep["outputs"]
    assert out["exact"]["value"] == pytest.approx(0.5)
    assert out["monte_carlo"]["covers_exact_3sigma"]


def test_walk_k3(capsys):
    code, rep = run(capsys, "walk", "--k3", "--pair", "0", "1", "--episodes", "2000")
    assert rep["outputs"]["exact"]["value"] == pytest.approx(0.75)
    assert rep["outputs"]["resistance_from_walk"]["value"] == pytest.approx(2 / 3)


def test_walk_no_pair(capsys):
    assert main(["walk", "--k3"]) == 2


def test_verify(capsys):
    code, rep = run(capsys, "verify", "--module", "lattice")
    assert code == 0 and {c["module"] for c in rep["outputs"]["checks"]} == {"lattice"}
    code, rep = run(capsys, "verify", "--module", "operators", "--fault", "perturbed-conductance")
    assert code == 1
    kron = [c for c in rep["outputs"]["checks"] if c["name"].startswith("Kronecker")]
    assert not kron[0]["passed"]


def test_verify_unknown_module(capsys):
    assert main(["verify", "--module", "nope"]) == 2


def test_generate_round_trip(capsys, tmp_path):
    code, rep = run(capsys, "generate", "--tree", "--depth", "3", "--wired")
    path = tmp_path / "net.json"
    assert set(rep) == {"vertices", "origin", "ground", "edges", "labels"}
    path.write_text(json.dumps(rep))
    code, rep = run(capsys, "resistance", "--network", str(path), "--pair", "", "0")
    assert code == 0 and rep["outputs"]["resistance"]["value"] < 1


def test_reruns_identical_apart_from_timestamp(capsys):
    argv = ("walk", "--lattice", "2", "--depth", "4", "--pair", "0,0", "1,0",
            "--episodes", "5000", "--seed", "3")
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv, "--threads", "1")
    _, c = run(capsys, *argv)
    assert strip_time(a) == strip_time(c)
    assert a["outputs"] == b["outputs"]


def test_no_bare_numbers_in_resistance_outputs(capsys):
    _, rep = run(capsys, "resistance", "--lattice", "1", "--pair", "0", "1", "--depths", "2,4")

    def walk(node, key=""):
        if isinstance(node, dict):
            for k, v in node.items():
                walk(v, k)
        elif isinstance(node, list):
            for v in node:
                walk(v, key)
        elif isinstance(node, float):
            assert key in ("value", "tol"), key
    walk(rep["outputs"])
