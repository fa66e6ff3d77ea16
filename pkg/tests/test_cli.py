import json

import numpy as np
import pytest

from levis.cli import main
from levis.fixtures import min_net
from levis.network import Specification, save_network, save_spec


@pytest.fixture
def files(tmp_path):
    net, spec = tmp_path / "net.json", tmp_path / "spec.json"
    save_network(min_net(), net)
    save_spec(Specification.positive(1), spec)
    return ["--net", str(net), "--spec", str(spec)]


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ball(files, capsys):
    code, out, _ = _run(capsys, ["ball", *files, "--center", "2,1", "--box=-5,-5:5,5"])
    assert code == 0
    assert json.loads(out)["ball"]["radius"] == pytest.approx(1.0, abs=1e-9)


def test_ball_outside_box(files, capsys):
    code, _, err = _run(capsys, ["ball", *files, "--center", "9,1", "--box=-5,-5:5,5"])
    assert code == 2 and "center outside box" in err


def test_ball_degenerate(files, capsys):
    code, _, _ = _run(capsys, ["ball", *files, "--center=-1,1", "--box=-5,-5:5,5"])
    assert code == 2


def test_bad_arguments(files, capsys):
    assert _run(capsys, ["ball", *files])[0] == 1
    assert _run(capsys, ["ball", *files, "--center", "2,1,3"])[0] == 1


def test_direction(files, capsys):
    code, out, _ = _run(capsys, ["direction", *files, "--center", "2,1", "--anchor", "2,0", "--theta", "180",
                                 "--box=-5,-5:5,5"])
    assert code == 0
    assert json.loads(out)["k"] == pytest.approx(1.0, abs=1e-9)


def test_beta_zero_balls_and_determinism(files, capsys, tmp_path):
    base = ["beta", *files, "--center", "2,1", "--box", "0,0:4,4", "--delta", "0.02,0.02", "--theta", "135",
            "--coverage-samples", "2000"]
    code, out, _ = _run(capsys, base + ["--max-balls", "0"])
    assert code == 0 and json.loads(out)["balls"] == []
    a = _run(capsys, base + ["--max-balls", "5", "--svg", str(tmp_path / "u.svg")])[1]
    b = _run(capsys, base + ["--max-balls", "5"])[1]
    assert a == b
    assert (tmp_path / "u.svg").read_text().startswith("<?xml")


def test_oracle_not_found(files, capsys):
    code, out, _ = _run(capsys, ["oracle", *files, "--mode", "ray", "--center", "2,1", "--phi", "1,0",
                                 "--box", "0,0:5,5", "--step", "1e-3"])
    assert code == 0 and json.loads(out)["found"] is False


def test_alpha_and_baseline(files, capsys, tmp_path):
    code, out, _ = _run(capsys, ["alpha", *files, "--center", "2,1", "--box", "0,0:4,4",
                                 "--trace-csv", str(tmp_path / "t.csv")])
    assert code == 0 and json.loads(out)["converged"]
    code, out, _ = _run(capsys, ["baseline", *files, "--center", "2,1", "--box=-5,-5:5,5", "--compare"])
    assert code == 0


def test_datagen_and_train(capsys, tmp_path):
    data = tmp_path / "d.csv"
    assert _run(capsys, ["datagen", "--out", str(data), "--n-samples", "50"])[0] == 0
    code, _, _ = _run(capsys, ["train", "--data", str(data), "--epochs", "20", "--hidden", "4",
                               "--out", str(tmp_path / "net.json")])
    assert code == 0 and (tmp_path / "net.json").exists()
