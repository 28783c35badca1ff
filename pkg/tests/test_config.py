"""Service configuration loading and environment overrides."""

import pytest

from tandemrag.config import ServiceConfig
from tandemrag.errors import InvalidError


def test_defaults():
    config = ServiceConfig.load()
    assert config.host == "127.0.0.1"
    assert config.port == 8000
    assert config.data_dir == "data"
    assert config.k == 5
    assert config.embedder == {"mode": "reference"}
    assert config.llm == {"mode": "mock"}
    assert config.adapters == {}
    assert config.rasterizer is None


def test_load_from_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"port": 9100, "k": 3, "adapters": '
                    '{"ocr": {"mode": "reference"}}}', encoding="utf-8")
    config = ServiceConfig.load(path)
    assert config.port == 9100
    assert config.k == 3
    assert config.adapters == {"ocr": {"mode": "reference"}}
    assert config.host == "127.0.0.1"


def test_invalid_json_is_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(InvalidError, match="not valid JSON") as err:
        ServiceConfig.load(path)
    assert err.value.detail["path"] == str(path)


def test_env_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    path.write_text('{"port": 9100, "host": "0.0.0.0"}', encoding="utf-8")
    monkeypatch.setenv("TANDEMRAG_PORT", "9200")
    monkeypatch.setenv("TANDEMRAG_DATA_DIR", "/tmp/elsewhere")
    monkeypatch.setenv("TANDEMRAG_K", "7")
    monkeypatch.setenv("TANDEMRAG_LLM_MODE", "http")
    config = ServiceConfig.load(path)
    assert config.port == 9200
    assert config.host == "0.0.0.0"
    assert config.data_dir == "/tmp/elsewhere"
    assert config.k == 7
    assert config.llm == {"mode": "http"}


def test_env_mode_override_keeps_other_llm_keys(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    path.write_text('{"llm": {"mode": "mock", "endpoint": "http://llm"}}',
                    encoding="utf-8")
    monkeypatch.setenv("TANDEMRAG_LLM_MODE", "http")
    config = ServiceConfig.load(path)
    assert config.llm == {"mode": "http", "endpoint": "http://llm"}


def test_non_integer_env_port(monkeypatch):
    monkeypatch.setenv("TANDEMRAG_PORT", "eighty")
    with pytest.raises(InvalidError, match="must be an integer"):
        ServiceConfig.load()
