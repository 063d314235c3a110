import pytest
import yaml

from src.config import DEFAULT_CAPS, ExperimentConfig, Scenario, load_config, verify_hash
from src.dataset_builder import Strategy
from src.errors import ConfigError


def _write(tmp_path, payload) -> str:
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(payload))
    return str(path)


class TestLoadConfig:
    def test_defaults(self):
        config = load_config(overrides={"scenario": "OVERLAP_TABLE3"})
        assert config.scenario is Scenario.OVERLAP_TABLE3
        assert config.seeds == [1, 2, 3, 4, 5]
        assert config.caps == DEFAULT_CAPS
        assert config.caps[0] == 1400 and config.caps[-1] == 400 and len(config.caps) == 11
        assert config.split.strategy is Strategy.MTL_SOFT

    def test_nested_overrides(self, tmp_path):
        path = _write(tmp_path, {"scenario": "LOSS_ABLATION_TABLE4", "model": {"epochs": 5, "lr": 1e-4}})
        config = load_config(path, {"model": {"epochs": 2}, "seeds": [9], "divergence": None})
        assert config.model.epochs == 2
        assert config.model.lr == 1e-4
        assert config.seeds == [9]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.yaml")

    @pytest.mark.parametrize(
        "payload",
        [
            {"scenario": "TABLE_7"},
            {"scenario": "STATS_REPORT", "seeds": []},
            {"scenario": "STATS_REPORT", "model": {"dropout": 1.5}},
            {"scenario": "STATS_REPORT", "unknown": 1},
        ],
    )
    def test_invalid(self, tmp_path, payload):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, payload))

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(path)


class TestHash:
    def test_deterministic_and_sensitive(self):
        a = load_config(overrides={"scenario": "SCIREX_TABLE5"})
        b = load_config(overrides={"scenario": "SCIREX_TABLE5"})
        c = load_config(overrides={"scenario": "SCIREX_TABLE5", "model": {"epochs": 3}})
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()

    def test_output_location_and_device_do_not_matter(self, tmp_path):
        a = load_config(overrides={"scenario": "STATS_REPORT", "output_dir": str(tmp_path / "a"), "model": {"device": "cpu"}})
        b = load_config(overrides={"scenario": "STATS_REPORT", "output_dir": str(tmp_path / "b"), "model": {"device": "cuda"},
                                   "render_plots": False})
        assert a.config_hash() == b.config_hash()

    def test_verify_stored_yaml(self):
        config = load_config(overrides={"scenario": "DATA_QUANTITY_FIG2", "seeds": [1, 2]})
        assert verify_hash(config.to_yaml(), config.config_hash())
        assert not verify_hash(config.to_yaml(), "0" * 64)


class TestDeskScale:
    def test_swaps_encoder_and_schedule(self):
        config = ExperimentConfig(scenario=Scenario.OVERLAP_TABLE3, desk_scale=True)
        model = config.effective_model()
        assert model.encoder == "tiny"
        assert model.epochs == config.model.desk_epochs
        assert model.lr == config.model.desk_lr
        assert config.model.encoder == "pretrained"
