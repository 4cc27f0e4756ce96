import json

import pytest

from tokforge.errors import ConfigError, ParameterError
from tokforge.trainconfig import (
    TrainingConfig,
    dataset_label,
    emit_train_config,
    write_train_config,
)

FROZEN_DEFAULTS = {
    "precision": "bf16",
    "epochs": 3,
    "batch_size": 32,
    "learning_rate": 5e-6,
    "weight_decay": 0.0,
    "warmup_ratio": 0.03,
    "lr_scheduler": "cosine",
    "max_length": 2048,
}


def test_defaults_are_exactly_the_frozen_values():
    assert emit_train_config() == FROZEN_DEFAULTS
    assert TrainingConfig().to_dict() == FROZEN_DEFAULTS


def test_override_changes_only_that_field():
    config = emit_train_config({"learning_rate": 1e-5})
    assert config["learning_rate"] == 1e-5
    assert {k: v for k, v in config.items() if k != "learning_rate"} == {
        k: v for k, v in FROZEN_DEFAULTS.items() if k != "learning_rate"
    }


def test_unknown_field_is_a_config_error():
    with pytest.raises(ConfigError):
        emit_train_config({"optimizer_beta3": 0.99})


@pytest.mark.parametrize(
    "bad",
    [
        {"epochs": 0},
        {"epochs": 2.5},
        {"batch_size": -1},
        {"learning_rate": -1e-5},
        {"warmup_ratio": 1.5},
        {"precision": ""},
        {"max_length": 0},
    ],
)
def test_invalid_values_rejected(bad):
    with pytest.raises(ConfigError):
        emit_train_config(bad)


def test_dataset_labels():
    assert dataset_label("zh", "alpaca") == "zh(alpaca)"
    assert dataset_label("en", "sharegpt") == "en(sharegpt)"
    with pytest.raises(ParameterError):
        dataset_label("fr", "alpaca")
    with pytest.raises(ParameterError):
        dataset_label("zh", "")


def test_datasets_appended_when_given():
    config = emit_train_config(datasets=["zh(alpaca)", "en(alpaca)"])
    assert config["datasets"] == ["zh(alpaca)", "en(alpaca)"]
    assert "datasets" not in emit_train_config()


def test_write_round_trip(tmp_path):
    path = tmp_path / "train.json"
    write_train_config(path, emit_train_config({"epochs": 5}))
    loaded = json.loads(path.read_text(encoding="utf-8"))
    assert loaded["epochs"] == 5
    assert loaded["precision"] == "bf16"
