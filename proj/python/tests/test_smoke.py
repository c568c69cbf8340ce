import json
import math

import pytest

import sccdr

SMALL = {
    "users_source": "120",
    "users_target": "120",
    "overlap": "40",
    "items_source": "60",
    "items_target": "40",
    "degree_source": "6",
    "degree_target": "4",
    "clusters": "4",
}


def test_schedule():
    assert sccdr.schedule(100, 20) == (10, 10)
    assert sccdr.schedule(50, 10) == (10, 5)


def test_std_final_half():
    assert math.isclose(sccdr.std_final_half([5, 5, 1, 2, 3, 1]), 1.0, rel_tol=1e-12)


def test_config_keys_have_defaults():
    keys = {name: default for name, default, _ in sccdr.config_keys()}
    assert keys["tau"] == "0.5"
    assert keys["n_neg_inter"] == "20"


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(sccdr.ConfigError):
        sccdr.synth(tmp_path / "d", {"no_such_key": "1"})


def test_pipeline(tmp_path):
    data = tmp_path / "data"
    sccdr.synth(data, SMALL)
    sccdr.prepare(data)
    model = tmp_path / "model"
    log = sccdr.train(data, model, {"epochs_intra": "2", "epochs_inter": "2", "batch_size": "64"})
    assert len(log) == 4
    hits = sccdr.evaluate(model, data, [10, 20])
    assert 0.0 <= hits[10] <= hits[20] <= 1.0
    metrics = json.loads((model / "metrics.json").read_text())
    assert metrics["mode"] == "full"
