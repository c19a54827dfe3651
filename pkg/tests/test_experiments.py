import json
import math

import pytest

from qde import serialization as ser
from qde.cli import main
from qde.errors import ValidationError
from qde.experiments import FLAGGED, PASSED, ExperimentConfig, bound_rhs, run_suite, verify_bound


def small(tmp_path, **kw):
    base = dict(radius=2, M_max=3, budget=2, seed=1, out=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(boundary="twisted")
    with pytest.raises(ValidationError):
        ExperimentConfig(partition={"family": "random", "Z": 2}, seed=None)
    with pytest.raises(ValidationError):
        ExperimentConfig(partition={"family": "random", "Z": 5}, M_max=6)
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"radius": 2, "colour": "red"})
    with pytest.raises(ValidationError):
        ExperimentConfig(suite=["plot"])
    ExperimentConfig(partition={"family": "projective", "Z": 2, "observable": "z"}, seed=None, budget=1)


def test_rhs_identity():
    assert bound_rhs(32 * math.e, math.log(2), 2) == 2 * 32 * math.e * 2 * math.log(2)
    assert 2 * 32 * math.e * 2 * math.log(2) == pytest.approx(241.17, abs=0.01)


def test_trivial_partition_bound(tmp_path):
    rep, _ = verify_bound(small(tmp_path, partition={"family": "trivial"}))
    assert rep.lhs == 0.0 and rep.status == PASSED
    assert rep.rhs == pytest.approx(bound_rhs(rep.components["V"], rep.components["sigma"], 2), abs=1e-12)


def test_ising_bound_itemised(tmp_path):
    rep, res = verify_bound(small(tmp_path, partition={"family": "random", "Z": 3, "window": [0, 0]}))
    assert rep.status == PASSED and rep.slack > 0
    assert rep.components["V"] == pytest.approx(32 * math.e, rel=1e-12)
    assert rep.components["sigma"] == pytest.approx(math.log(2), abs=1e-12)
    assert rep.lhs <= math.log(3) + 1e-12
    assert rep.lhs == max(e["rate"] for e in rep.search["log"])


def test_non_invariant_state_flagged(tmp_path):
    cfg = small(tmp_path, state={"kind": "product", "rho_site": [[0.75, 0], [0, 0.25]]})
    rep, _ = verify_bound(cfg)
    assert rep.status == FLAGGED


def test_gibbs_periodic_meets_hypotheses(tmp_path):
    cfg = small(tmp_path, boundary="periodic", state={"kind": "gibbs", "beta": 0.5}, entropy={"sizes": [2, 3, 4]})
    rep, _ = verify_bound(cfg)
    assert rep.status == PASSED
    assert 0 < rep.components["sigma"] < math.log(2)


def test_run_suite_writes_bundle(tmp_path):
    cfg = small(tmp_path, lemma2={"operator": "z", "t": [0.25], "lam": [1.0], "eps2": 0.5},
                cone={"operator": "z", "t_grid": [0.0, 0.5], "x_grid": [0, 1, 2]},
                converge={"operator": "z", "t": [0.5]})
    bundle = run_suite(cfg)
    names = [i.name for i in bundle.items]
    assert names == list(cfg.suite)
    out = tmp_path / "out"
    for f in ("manifest.json", "summary.txt", "rate.csv", "cone.csv", "converge.csv", "entropy.csv", "bound.json"):
        assert (out / f).exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 1 and man["radius"] == 2
    assert bundle.ok
    header, rows = ser.read_csv(out / "rate.csv")
    assert header == ["M", "S", "S_over_M", "increment"] and len(rows) == 3


def test_empty_suite(tmp_path):
    bundle = run_suite(small(tmp_path, suite=[]))
    assert bundle.items == [] and bundle.ok


def test_cli_rate_and_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radius": 1, "M_max": 2, "budget": 1}))
    code = main(["rate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "4"])
    assert code == 0
    assert "rate: passed" in capsys.readouterr().out
    assert (tmp_path / "o" / "rate.csv").exists()


def test_cli_velocity_default_config(tmp_path, capsys):
    assert main(["velocity", "--out", str(tmp_path / "v"), "--radius", "1"]) == 0
    assert "velocity: passed" in capsys.readouterr().out


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"boundary": "twisted"}))
    assert main(["bound", "--config", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_reports_failure(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radius": 1, "M_max": 2, "budget": 1, "model": {"name": "onsite", "params": {}},
                               "partition": {"family": "projective", "Z": 2, "observable": "x"}}))
    assert main(["bound", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
