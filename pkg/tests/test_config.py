import os
from pathlib import Path

import pytest

from bitrel.core.config import Settings, load_settings
from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import MetricKind, Statistic, TraceFormat, UndefinedPolicy


def test_defaults(settings_env):
    config = load_settings().run_config()
    assert config.seed == 0
    assert config.systems == 1000
    assert config.samples == 10000
    assert config.metrics == list(MetricKind)
    assert config.policy == UndefinedPolicy.ZERO
    assert config.format == TraceFormat.BTR
    assert config.statistic == Statistic.BACC
    assert config.out == Path("bitrel-out")
    assert config.jobs == (os.cpu_count() or 1)


def test_precedence(settings_env, tmp_path):
    config_file = tmp_path / "bitrel.env"
    config_file.write_text("BITREL_SYSTEMS=20\nBITREL_SAMPLES=300\nBITREL_POLICY=skip\n")
    settings_env.setenv("BITREL_SAMPLES", "400")

    settings = load_settings(config_file)
    assert settings.systems == 20
    assert settings.samples == 400
    assert settings.policy == UndefinedPolicy.SKIP

    config = settings.run_config(systems=5, samples=None)
    assert config.systems == 5
    assert config.samples == 400


def test_metrics_parsed_case_insensitively(settings_env):
    config = Settings().run_config(metrics="dep, COV,Dep")
    assert config.metrics == [MetricKind.COV, MetricKind.DEP]


@pytest.mark.parametrize("overrides", [{"systems": 0}, {"samples": -1}, {"metrics": "Ham,Bogus"},
                                       {"metrics": ""}, {"jobs": 0}, {"window": (5, 5)}])
def test_invalid_run_config_is_usage_error(settings_env, overrides):
    with pytest.raises(UsageError) as excinfo:
        Settings().run_config(**overrides)
    assert excinfo.value.exit_code == 2
    assert excinfo.value.details


def test_missing_config_file(settings_env, tmp_path):
    with pytest.raises(UsageError):
        load_settings(tmp_path / "absent.env")


def test_invalid_log_level(settings_env):
    settings_env.setenv("BITREL_LOG_LEVEL", "chatty")
    with pytest.raises(UsageError):
        load_settings()


def test_window_setting(settings_env):
    settings_env.setenv("BITREL_WINDOW", "10:20")
    assert load_settings().run_config().window == (10, 20)
    assert load_settings().run_config(window=(0, 5)).window == (0, 5)

    settings_env.setenv("BITREL_WINDOW", "ten:20")
    with pytest.raises(UsageError) as excinfo:
        load_settings().run_config()
    assert excinfo.value.details == {"window": "ten:20"}
