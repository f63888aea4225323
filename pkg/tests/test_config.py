import pytest

from config import ConfigManager, RunConfig, get_config, init_config
from src.core.specfun import GegenbauerConvention
from src.exceptions import ConfigError


@pytest.fixture
def manager(tmp_path, config_dir):
    return ConfigManager(str(tmp_path), str(config_dir))


def test_defaults_are_written(manager, config_dir):
    assert (config_dir / "settings.ini").exists()
    assert manager.get("general", "convention") == "paper"
    assert manager.get_int("eigensolver", "n") == 4096
    assert manager.get_bool("eigensolver", "richardson") is True
    assert manager.get_float_list("verify", "b_values") == [0.45, 1.0, 2.0]


def test_set_persists(tmp_path, manager, config_dir):
    manager.set("spectrum", "kmax", "5")
    reloaded = ConfigManager(str(tmp_path), str(config_dir))
    assert reloaded.get_int("spectrum", "kmax") == 5


def test_bad_values(manager):
    manager.set("eigensolver", "n", "many")
    assert manager.get_int("eigensolver", "n", 128) == 128
    manager.set("verify", "b_values", "1.0,abc")
    with pytest.raises(ConfigError):
        manager.get_float_list("verify", "b_values")


def test_missing_option_falls_back_to_default(manager):
    manager.config.remove_option("sample", "chi_points")
    assert manager.get("sample", "chi_points") == "61"


def test_global_instance(tmp_path, config_dir):
    created = init_config(str(tmp_path), str(config_dir))
    assert get_config() is created


class TestRunConfig:
    def test_ini_values_used_when_cli_is_silent(self, manager):
        manager.set("spectrum", "kmax", "5")
        config = RunConfig.from_sources("spectrum", {}, manager)
        assert config.kmax == 5
        assert len(config.b_values) == 41
        assert config.convention is GegenbauerConvention.PAPER_RODRIGUES
        assert config.output_format == "csv"
        assert config.seed == 20240517

    def test_cli_overrides_ini(self, manager):
        manager.set("spectrum", "kmax", "5")
        cli = {"kmax": 2, "b": [0.5], "convention": "standard", "format": "json", "seed": 7}
        config = RunConfig.from_sources("spectrum", cli, manager)
        assert (config.kmax, config.b_values, config.output_format, config.seed) == (2, (0.5,), "json", 7)
        assert config.convention is GegenbauerConvention.STANDARD

    def test_command_specific_b(self, manager):
        assert RunConfig.from_sources("eigensolve", {}, manager).b_value == 1.0
        assert RunConfig.from_sources("matrix", {}, manager).b_value == 2.0
        assert RunConfig.from_sources("verify", {}, manager).b_values == (0.45, 1.0, 2.0)

    def test_boolean_flags(self, manager):
        config = RunConfig.from_sources("eigensolve", {"richardson": False}, manager)
        assert config.richardson is False
        manager.set("expansion", "regularize_poles", "true")
        assert RunConfig.from_sources("matrix", {}, manager).regularize_poles is True

    @pytest.mark.parametrize(
        "command, cli",
        [
            ("plot", {}),
            ("spectrum", {"convention": "laguerre"}),
            ("spectrum", {"format": "xml"}),
            ("spectrum", {"kmax": -1}),
        ],
    )
    def test_invalid(self, manager, command, cli):
        with pytest.raises(ConfigError):
            RunConfig.from_sources(command, cli, manager)

    def test_empty_b_list(self, manager):
        manager.set("verify", "b_values", "")
        with pytest.raises(ConfigError):
            RunConfig.from_sources("verify", {}, manager)

    @pytest.mark.parametrize("command", ["sample", "eigensolve", "matrix"])
    def test_single_value_commands_reject_several_b(self, manager, command):
        with pytest.raises(ConfigError) as excinfo:
            RunConfig.from_sources(command, {"b": [1.0, 2.0]}, manager)
        assert excinfo.value.details["b"] == [1.0, 2.0]

    def test_single_b_accepted(self, manager):
        assert RunConfig.from_sources("matrix", {"b": [0.7]}, manager).b_value == 0.7
        assert RunConfig.from_sources("verify", {"b": [0.5, 1.5]}, manager).b_values == (0.5, 1.5)
