import json

import pytest

from folio.core.config import PipelineConfig, apply_overrides, describe_keys, load_config, parse_value
from folio.core.errors import ConfigError


def test_corpus_config_paths_are_resolved(corpus_dir):
    config = load_config(corpus_dir / "config.json")
    assert config.extraction.schema_file == str((corpus_dir / "schema.json").resolve())
    assert config.output_dir == str((corpus_dir / "output").resolve())
    assert config.rag.retrieval.k_specific == 3


def test_overrides(corpus_dir):
    config = load_config(corpus_dir / "config.json",
                         ["max_in_flight=2", "mode=partial", "rag.retrieval.mmr_lambda=0.7", "title=Annals"])
    assert (config.max_in_flight, config.mode, config.title) == (2, "partial", "Annals")
    assert config.rag.retrieval.mmr_lambda == 0.7


@pytest.mark.parametrize("overrides", [
    ["max_in_flight"],
    ["max_in_flight=0"],
    ["mode=lenient"],
    ["title.sub=1"],
])
def test_bad_overrides(corpus_dir, overrides):
    with pytest.raises(ConfigError):
        load_config(corpus_dir / "config.json", overrides)


def test_parse_value():
    assert parse_value("3") == 3
    assert parse_value('["tei"]') == ["tei"]
    assert parse_value("plain text") == "plain text"
    assert apply_overrides({}, ["a.b=true"]) == {"a": {"b": True}}


def test_missing_referenced_file(corpus_dir):
    (corpus_dir / "schema.json").unlink()
    with pytest.raises(ConfigError, match="extraction.schema_file"):
        load_config(corpus_dir / "config.json")


def test_missing_or_invalid_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("extraction,message", [
    ({"path": "C", "instructions_file": "schema.json"}, "two backends"),
    ({"path": "B", "instructions_file": "schema.json"}, "general backend"),
    ({"path": "B", "backend": {"mode": "general"}}, "instructions_file"),
    ({"path": "A", "backend": {"mode": "general"}}, "specialised backend"),
])
def test_extraction_path_rules(corpus_dir, extraction, message):
    with pytest.raises(ConfigError, match=message):
        load_config(overrides=[f"extraction={json.dumps(extraction)}"], base_dir=corpus_dir)


def test_inference_needs_prompt():
    with pytest.raises(ValueError):
        PipelineConfig.model_validate({"enrichment": {"inference_backend": {"provider": "fixture"}}})


def test_describe_keys_lists_nested_fields():
    keys = dict(describe_keys())
    for key in ("input_dir", "extraction.path", "extraction.backend.endpoint", "rag.retrieval.k_specific",
                "evaluation.layout.iou_threshold", "preprocess.steps"):
        assert key in keys
    assert keys["enrichment.link_threshold"]
