import json
import os
import sys
import tempfile

import pytest
import structlog

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from observability.logger import configure_logger, log_event


def _lines(path):
    with open(path) as f:
        return [line for line in f.read().splitlines() if line.strip()]


def test_json_lines_to_file():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.log")
        configure_logger(log_file=path)
        log_event("cell_done", n_sites=4, eta=0.8)
        configure_logger()
        event = json.loads(_lines(path)[-1])
        assert event["event"] == "cell_done"
        assert event["n_sites"] == 4
        assert event["level"] == "info"


def test_console_rendering():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.log")
        configure_logger(json_logs=False, log_file=path)
        structlog.get_logger().warning("classification_skipped", records=20)
        configure_logger()
        line = _lines(path)[-1]
        assert "classification_skipped" in line
        assert "records=20" in line
        with pytest.raises(json.JSONDecodeError):
            json.loads(line)


def test_level_filtering(monkeypatch):
    monkeypatch.setenv("RINGTHERM_LOG_LEVEL", "WARNING")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.log")
        configure_logger(log_file=path)
        log_event("hidden")
        structlog.get_logger().warning("shown")
        configure_logger()
        assert [json.loads(line)["event"] for line in _lines(path)] == ["shown"]


if __name__ == "__main__":
    test_json_lines_to_file()
    test_console_rendering()
    print("ok")
