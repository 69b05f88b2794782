import os
import sys
import tempfile

import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from core import config
from core.errors import ConfigError


def test_seed_is_required():
    with pytest.raises(ConfigError):
        config.parse_seed(None)
    assert config.parse_seed("auto") is None
    assert config.parse_seed("42") == 42
    with pytest.raises(ConfigError):
        config.parse_seed("-3")
    with pytest.raises(ConfigError):
        config.parse_seed("abc")
    assert config.resolve_seed("auto") >= 0


def test_run_config_precedence():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.toml")
        with open(path, "w") as f:
            f.write('[run]\nsites = 5\neta = 0.4\nseed = 9\noutput = "from_file.jsonl"\n')
        file_config = config.load_config_file(path)

        run = config.RunConfig.resolve({"eta": 0.6, "output": None, "seed": None}, file_config)
        assert run.sites == 5
        assert run.eta == 0.6
        assert run.master_seed == 9
        assert run.output == "from_file.jsonl"
        assert run.samples == config.DEFAULT_SAMPLES
        assert run.z == pytest.approx(config.DEFAULT_Z_NORMALIZED / config.DEFAULT_C_MEAN)
        assert "output" not in run.to_dict()


def test_large_rings_default_to_more_samples():
    run = config.RunConfig.resolve({"sites": 12, "output": "x.jsonl", "seed": 1})
    assert run.samples == config.LARGE_RING_SAMPLES


def test_run_config_validation():
    with pytest.raises(ConfigError):
        config.RunConfig.resolve({"sites": 2, "output": "x.jsonl", "seed": 1})
    with pytest.raises(ConfigError):
        config.RunConfig.resolve({"sites": 4, "eta": 1.5, "output": "x.jsonl", "seed": 1})
    with pytest.raises(ConfigError):
        config.RunConfig.resolve({"sites": 4, "output": "x.jsonl"})
    with pytest.raises(ConfigError):
        config.merge({"a": 1}, {"b": 2}, {})


def test_bad_config_files():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bad.toml")
        with open(path, "w") as f:
            f.write("[run\n")
        with pytest.raises(ConfigError):
            config.load_config_file(path)
        with pytest.raises(ConfigError):
            config.load_config_file(os.path.join(tmp, "missing.toml"))


def test_worker_count(monkeypatch):
    monkeypatch.setenv(config.THREADS_ENV, "1")
    assert config.worker_count() == 1
    monkeypatch.setenv(config.THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        config.worker_count()


if __name__ == "__main__":
    test_seed_is_required()
    test_run_config_precedence()
    test_large_rings_default_to_more_samples()
    test_run_config_validation()
    test_bad_config_files()
    print("ok")
