import json

import pytest

from iriscd.config import ConfigError, PipelineConfig, load_config
from iriscd.graph import Variable

from conftest import FIXTURES


def test_golden_config_loads_and_resolves_paths():
    cfg = load_config(FIXTURES / "golden" / "config.yaml")
    assert [v.name for v in cfg.variables] == ["smoking", "lung cancer", "air pollution", "cough"]
    assert cfg.variables[2].domain == ("low", "high")
    assert cfg.llm.path == str(FIXTURES / "golden" / "llm_script.json")
    assert cfg.evidence_allowlist and "arxiv.org" in cfg.evidence_allowlist


def test_round_trip_json_and_yaml(tmp_path):
    cfg = load_config(FIXTURES / "golden" / "config.yaml")
    for name, text in (("c.json", cfg.to_json()), ("c.yaml", cfg.to_yaml())):
        (tmp_path / name).write_text(text)
        assert load_config(tmp_path / name) == cfg


@pytest.mark.parametrize("patch, msg", [
    ({"colour": 1}, "unknown config keys"),
    ({"variables": []}, "at least one variable"),
    ({"variables": [{"name": "a"}, {"name": "A "}]}, "duplicate"),
    ({"algo": "lingam"}, "algo"),
    ({"alpha": 0}, "alpha"),
    ({"beta": 1.5}, "beta"),
    ({"significance": 1}, "significance"),
    ({"pmi_topk": -1}, "pmi_topk"),
    ({"notears": {"rho_growth": 1}}, "NOTEARS"),
    ({"notears": {"nonsense": 1}}, "invalid config"),
    ({"cache": {"mode": "record"}}, "cache.dir"),
    ({"cache": {"dir": "x", "mode": "sometimes"}}, "cache.mode"),
    ({"corpus_threshold": 0}, "corpus_threshold"),
])
def test_validation_errors(patch, msg):
    base = {"variables": [{"name": "a"}, {"name": "b"}]}
    with pytest.raises(ConfigError, match=msg):
        PipelineConfig.from_dict({**base, **patch})


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(tmp_path / "bad.json")
    (tmp_path / "list.yaml").write_text("- 1\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(tmp_path / "list.yaml")


def test_override_ignores_none_and_validates():
    cfg = PipelineConfig((Variable("a"), Variable("b")))
    assert cfg.override(algo=None, pmi_topk=2).pmi_topk == 2
    with pytest.raises(ConfigError):
        cfg.override(alpha=2.0)
    assert json.loads(cfg.to_json())["variables"][0]["name"] == "a"
