import csv
import json
import math

import numpy as np
import pytest

from iongates import serialize
from iongates.cli import main
from iongates.config import config_from_dict, load_config
from iongates.errors import ConfigError
from iongates.trap_modes import normal_modes

FAST = {"solver": {"restarts": 4}}


def _cfg(tmp_path, name="cfg.json", **data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def _run(*argv):
    return main([str(a) for a in argv])


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def designed(tmp_path_factory):
    d = tmp_path_factory.mktemp("design")
    cfg = _cfg(d, n_ions=2, gate={"T_in_com_periods": 10}, **FAST)
    code = _run("design", "--config", cfg, "--out", d / "out")
    return d, cfg, code


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"n_ions": 2, "colour": "blue"})
    with pytest.raises(ConfigError):
        config_from_dict({"gate": {"T_periods": 3}})


@pytest.mark.parametrize("bad", [
    {"n_ions": 0},
    {"trap": {"nu1_hz": -1}},
    {"gate": {"T_in_com_periods": 0}},
    {"gate": {"robust": ["wind"]}},
    {"verify": {"fidelity_mode": "guess"}},
    {"solver": {"restarts": 0}},
])
def test_invalid_values_rejected(bad):
    with pytest.raises(ConfigError):
        config_from_dict(bad)


def test_defaults_and_digest(tmp_path):
    cfg = load_config(_cfg(tmp_path, n_ions=2))
    assert cfg.gate.T_in_com_periods == 10.0 and cfg.trap.kind == "harmonic"
    assert cfg.digest() == config_from_dict({"n_ions": 2}).digest()
    assert cfg.digest() != config_from_dict({"n_ions": 4}).digest()


def test_serialize_full_precision():
    x = 0.1 + 0.2
    text = serialize.dumps({"x": x, "v": np.array([1 / 3, 2.0]), "z": 1 + 2j, "n": math.nan})
    back = json.loads(text)
    assert back["x"] == x and back["v"][0] == 1 / 3
    assert serialize.complex_array([back["z"]])[0] == 1 + 2j
    assert back["n"] is None


def test_modes_csv(tmp_path):
    assert _run("modes", "--config", _cfg(tmp_path, n_ions=2), "--out", tmp_path / "o") == 0
    rows = _rows(tmp_path / "o" / "modes.csv")
    assert rows[0][:3] == ["mode", "nu_over_nu1", "eta"]
    np.testing.assert_allclose([float(r[1]) for r in rows[1:]], [1.0, np.sqrt(3)], rtol=1e-14)


def test_modes_single_ion(tmp_path):
    assert _run("modes", "--config", _cfg(tmp_path, n_ions=1), "--out", tmp_path / "o") == 0
    rows = _rows(tmp_path / "o" / "modes.csv")
    assert len(rows) == 2 and float(rows[1][1]) == 1.0


def test_modes_non_orthogonal_is_config_error(tmp_path, capsys):
    cfg = _cfg(tmp_path, n_ions=2, trap={"kind": "custom", "mode_nu": [1, 2],
                                         "mode_matrix": [[1, 0.2], [0, 1]]})
    assert _run("modes", "--config", cfg, "--out", tmp_path / "o") == 1
    assert "NotOrthogonal" in capsys.readouterr().err


def test_missing_config_is_exit_one(tmp_path):
    assert _run("modes", "--config", tmp_path / "nope.json", "--out", tmp_path / "o") == 1


def test_design_two_ion(designed):
    d, _, code = designed
    assert code == 0
    out = d / "out"
    fid = json.loads((out / "fidelity.json").read_text())
    assert fid["infidelity"] < 1e-4
    man = json.loads((out / "manifest.json").read_text())
    assert man["solution"] == "solution.json" and man["exit_code"] == 0
    for name in man["outputs"]:
        assert (out / name).exists()
    spec = _rows(out / "spectrum.csv")
    assert len(spec) > 2
    traj = _rows(out / "trajectory.csv")
    assert len(traj) == 402


def test_design_is_deterministic(designed, tmp_path):
    d, cfg, _ = designed
    assert _run("design", "--config", cfg, "--out", tmp_path / "again") == 0
    for name in ("spectrum.csv", "waveform.csv", "trajectory.csv", "phases.json", "fidelity.json",
                 "solution.json", "coupling.csv"):
        assert (tmp_path / "again" / name).read_bytes() == (d / "out" / name).read_bytes()


def test_verify_round_trip(designed, tmp_path):
    d, cfg, _ = designed
    code = _run("verify", "--config", cfg, "--out", tmp_path / "v", "--solution",
                d / "out" / "solution.json", "--oracle")
    assert code == 0
    v = json.loads((tmp_path / "v" / "verify.json").read_text())
    design_fid = json.loads((d / "out" / "fidelity.json").read_text())
    assert v["closed_form"]["F_U"] == design_fid["F_U"]
    assert v["closed_form"]["infidelity"] == design_fid["infidelity"]
    assert abs(v["oracle"]["closed_minus_oracle"]) < 1e-6
    assert v["oracle"]["structure"]["operator_norm_gap"] < 1e-6


def test_verify_corrupt_solution(designed, tmp_path):
    _, cfg, _ = designed
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run("verify", "--config", cfg, "--out", tmp_path / "v", "--solution", bad) == 1
    bad.write_text(json.dumps({"T": 1.0}))
    assert _run("verify", "--config", cfg, "--out", tmp_path / "v", "--solution", bad) == 1


def test_verify_oracle_guard(designed, tmp_path):
    d, _, _ = designed
    cfg = _cfg(tmp_path, n_ions=4)
    assert _run("verify", "--config", cfg, "--out", tmp_path / "v", "--solution",
                d / "out" / "solution.json", "--oracle") == 4


def test_tolerance_not_met_is_exit_three(tmp_path):
    # Without carrier constraints a one-period gate loses about 5% to the carrier.
    cfg = _cfg(tmp_path, n_ions=2, gate={"T_in_com_periods": 1, "carrier": False}, **FAST)
    assert _run("design", "--config", cfg, "--out", tmp_path / "o") == 3
    assert (tmp_path / "o" / "solution.json").exists()


def test_sign_definite_three_ion_is_exit_two(tmp_path):
    O = normal_modes(3).O.tolist()
    cfg = _cfg(tmp_path, n_ions=3, gate={"T_in_com_periods": 10},
               trap={"kind": "custom", "mode_nu": [1.0, 1.001, 1.002], "mode_matrix": O}, **FAST)
    assert _run("design", "--config", cfg, "--out", tmp_path / "o") == 2
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["exit_code"] == 2 and man["outputs"] == []


def test_sweep(tmp_path):
    cfg = _cfg(tmp_path, n_ions=2, **FAST)
    assert _run("sweep", "--config", cfg, "--out", tmp_path / "o", "--T-list", "6,10") == 0
    rows = _rows(tmp_path / "o" / "sweep.csv")
    assert rows[0][:2] == ["T_in_com_periods", "status"]
    assert [r[1] for r in rows[1:]] == ["ok", "ok"]
    assert all(float(r[5]) < 1e-4 for r in rows[1:])


def test_sweep_empty_list(tmp_path):
    cfg = _cfg(tmp_path, n_ions=2, **FAST)
    assert _run("sweep", "--config", cfg, "--out", tmp_path / "o", "--T-list", "") == 1


def test_seed_override_changes_record(tmp_path):
    cfg = _cfg(tmp_path, n_ions=2, gate={"T_in_com_periods": 6}, **FAST)
    assert _run("design", "--config", cfg, "--out", tmp_path / "o", "--seed", "99") == 0
    assert json.loads((tmp_path / "o" / "solution.json").read_text())["seed"] == 99
