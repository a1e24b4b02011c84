import copy
import json
from pathlib import Path

import pytest

from rarekit import cli

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

MRV = {"kind": "mrv_ray", "alpha": 2.0, "rays": [{"w": 0.5, "dir": [1.0, 0.0]}, {"w": 0.5, "dir": [0.0, 1.0]}]}
RISK = {"lambda": 2.0, "horizon": 3.0, "interest": 0.0, "claim_model": MRV, "allocation": [0.5, 0.5],
        "ruin_set": {"kind": "total_sum"}}


def write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def constants_scenario(out, n=20000, seed=5):
    return {"command": "constants", "seed": seed, "n_paths": n, "payload": {"risk": copy.deepcopy(RISK)},
            "output": {"path": str(out), "format": "json"}}


def test_classify_pareto(tmp_path, capsys):
    out = tmp_path / "c.json"
    data = {"command": "classify", "seed": 0, "n_samples": 1,
            "payload": {"model": {"family": "pareto", "alpha": 2.0, "scale": 1.0}}, "output": {"path": str(out)}}
    assert cli.main(["classify", "--scenario", str(write(tmp_path, data))]) == 0
    doc = json.loads(out.read_text())
    prof = doc["result"]["profile"]
    assert prof["j_minus"] == prof["j_plus"] == 2.0 and prof["in_PD"] is True
    assert "wall=" in capsys.readouterr().out


def test_constants_lambda_t(tmp_path):
    out = tmp_path / "k.json"
    assert cli.main(["constants", "--scenario", str(write(tmp_path, constants_scenario(out)))]) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["closed_form"] == pytest.approx(6.0, rel=1e-14)
    assert abs(doc["summary"]["estimate"] - 6.0) <= 3 * doc["summary"]["std_error"]
    assert len(doc["config_hash"]) == 64


@pytest.mark.parametrize("mutate,pointer", [
    (lambda d: d["payload"]["risk"].update({"lambda": -1}), "/payload/risk/lambda"),
    (lambda d: d.pop("seed"), "/"),
    (lambda d: d["payload"]["risk"]["claim_model"].update({"kind": "nope"}), "/payload/risk/claim_model/kind"),
    (lambda d: d["payload"]["risk"].update({"allocation": [0.3, 0.3]}), "/payload/risk"),
    (lambda d: d.update({"n_samples": 10}), "/"),
])
def test_malformed_payload(tmp_path, capsys, mutate, pointer):
    out = tmp_path / "never.json"
    data = constants_scenario(out)
    mutate(data)
    assert cli.main(["run", str(write(tmp_path, data))]) == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert err.startswith("validation error: " + pointer)


def test_command_mismatch_and_missing_file(tmp_path):
    data = constants_scenario(tmp_path / "o.json")
    assert cli.main(["ruin", "--scenario", str(write(tmp_path, data))]) == 2
    assert cli.main(["run", str(tmp_path / "absent.json")]) == 2


def test_infeasible_budget_exit_3(tmp_path):
    out = tmp_path / "ldp.json"
    data = {"command": "ldp", "seed": 1, "n_samples": 1000, "output": {"path": str(out)},
            "payload": {"models": [{"kind": "mrv_ray", "alpha": 2.0, "rays": [{"w": 1.0, "dir": [0.5, 0.5]}]}],
                        "set": {"directions": [[1.0, 1.0]]}, "gamma": 1.0, "mode": "fixed_n", "n": 5,
                        "x_grid": [1e4]}}
    assert cli.main(["run", str(write(tmp_path, data))]) == 3
    assert not out.exists()


def test_replay_roundtrip_and_tampering(tmp_path, capsys):
    out = tmp_path / "k.json"
    assert cli.main(["run", str(write(tmp_path, constants_scenario(out))), "--threads", "3"]) == 0
    assert cli.main(["replay", str(out)]) == 0
    doc = json.loads(out.read_text())

    doc["seed"] = doc["seed"] + 1
    bad = tmp_path / "seed.json"
    bad.write_text(json.dumps(doc))
    assert cli.main(["replay", str(bad)]) == 4
    assert "replay mismatch at /result" in capsys.readouterr().err

    doc = json.loads(out.read_text())
    doc["budget"] = {"n_paths": 20001}
    bad.write_text(json.dumps(doc))
    assert cli.main(["replay", str(bad)]) == 2
    assert "config_hash" in capsys.readouterr().err


def test_output_bytes_do_not_depend_on_threads(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    s = write(tmp_path, constants_scenario(a))
    assert cli.main(["run", str(s), "--threads", "1"]) == 0
    assert cli.main(["run", str(s), "--threads", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_output_with_sidecar(tmp_path):
    out = tmp_path / "ruin.csv"
    data = {"command": "ruin", "seed": 3, "n_paths": 20000, "output": {"path": str(out), "format": "csv"},
            "payload": {"risk": {**RISK, "interest": 0.1, "fgm_theta": 0.5}, "alpha": 2.0, "x_grid": [2.0, 5.0]}}
    assert cli.main(["run", str(write(tmp_path, data))]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,psi_hat,se,prediction,ratio,ratio_se,psi_no_premium,se_no_premium"
    assert len(lines) == 3
    meta = json.loads(Path(str(out) + ".meta.json").read_text())
    assert meta["command"] == "ruin"
    assert cli.main(["replay", str(out)]) == 0


def test_ruin_requires_alpha_with_interest(tmp_path):
    data = {"command": "ruin", "seed": 3, "n_paths": 100, "output": {"path": str(tmp_path / "r.json")},
            "payload": {"risk": {**RISK, "interest": 0.1}, "x_grid": [2.0]}}
    assert cli.main(["run", str(write(tmp_path, data))]) == 2


def test_nonfinite_values_serialize(tmp_path):
    out = tmp_path / "w.json"
    data = {"command": "classify", "seed": 0, "n_samples": 1, "output": {"path": str(out)},
            "payload": {"model": {"family": "weibull_heavy", "shape": 0.5, "scale": 1.0},
                        "b_grid": [2.0, 4.0, 8.0]}}
    assert cli.main(["run", str(write(tmp_path, data))]) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["j_plus_hat"] == "infinity"
    assert cli.main(["replay", str(out)]) == 0


@pytest.mark.parametrize("name", ["c8_classify_pareto.json", "c8_classify_logpareto.json", "c9_tailprob.json"])
def test_shipped_light_scenarios_validate_and_run(tmp_path, name):
    out = tmp_path / "o.json"
    assert cli.main(["run", str(SCENARIOS / name), "--out", str(out)]) == 0
    assert cli.main(["replay", str(out)]) == 0


def test_all_shipped_scenarios_validate():
    for p in sorted(SCENARIOS.glob("*.json")):
        cli.load_scenario(p)


def test_config_hash_ignores_seed_and_output():
    h1 = cli.config_hash("constants", {"risk": RISK}, {"n_paths": 10})
    h2 = cli.config_hash("constants", {"risk": RISK}, {"n_paths": 11})
    assert h1 != h2 and h1 == cli.config_hash("constants", json.loads(json.dumps({"risk": RISK})), {"n_paths": 10})
