import json
from pathlib import Path

import pytest

from folio.cli import EXIT_CODES, exit_code_for, main
from folio.core.config import load_config
from folio.core.errors import ArtifactError, BackendError, ConfigError, EmptyReferenceError, OutputParseError
from folio.core.pipeline import PipelineRunner
from folio.rag import QueryClass
from folio.utils.fixture_corpus import DEFAULT_ANSWER, PAGES


def _tree(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _stdout_json(out: str):
    """标准输出中混有控制台日志，取最后一个顶层 JSON 对象"""
    lines = out.splitlines()
    start = max(i for i, line in enumerate(lines) if line == "{")
    end = max(i for i, line in enumerate(lines) if line == "}")
    return json.loads("\n".join(lines[start:end + 1]))


def _report(corpus_dir: Path):
    return json.loads((corpus_dir / "output" / "eval" / "report.json").read_text(encoding="utf-8"))


def test_exit_code_mapping():
    assert exit_code_for(ConfigError("x")) == 2
    assert exit_code_for(ArtifactError("x")) == 3
    assert exit_code_for(BackendError("x")) == 4
    assert exit_code_for(OutputParseError("x")) == 5
    assert exit_code_for(EmptyReferenceError("x")) == 5
    assert exit_code_for(RuntimeError("x")) == 1
    assert len(EXIT_CODES) == 6


def test_fixtures_command(tmp_path, capsys):
    assert main(["fixtures", str(tmp_path / "corpus")]) == 0
    assert (tmp_path / "corpus" / "config.json").is_file()
    assert len(list((tmp_path / "corpus" / "input").glob("*.png"))) == len(PAGES)


def test_all_is_reproducible_and_self_consistent(corpus_dir, capsys):
    config = str(corpus_dir / "config.json")
    assert main(["all", "-c", config]) == 0
    summary = _stdout_json(capsys.readouterr().out)
    assert summary["pages"] == len(PAGES)
    assert summary["failures"] == 0
    first = _tree(corpus_dir / "output")

    assert main(["all", "-c", config]) == 0
    assert _tree(corpus_dir / "output") == first

    report = _report(corpus_dir)
    assert report["metrics"]["wer_raw"] == 0.0
    assert report["metrics"]["cer_raw"] == 0.0
    assert report["layout"]["f1"] == 1.0
    assert report["comparison"]["rows"][0]["relative_improvement"] == 1.0
    assert report["effort"]["sys_hours"] == 0.0
    for name in ("document.json", "document.enriched.json", "unlinked.jsonl", "exports/document.tei.xml",
                 "exports/units.csv", "exports/units.jsonl", "index/chunks.json", "index/vectors.jsonl",
                 "eval/report.txt"):
        assert name in first


def test_stages_equal_all(tmp_path, capsys):
    from folio.utils.fixture_corpus import write_fixture_corpus
    staged = write_fixture_corpus(tmp_path / "staged")
    whole = write_fixture_corpus(tmp_path / "whole")
    for stage in ("preprocess", "extract", "refine", "enrich", "ingest", "eval"):
        assert main([stage, "-c", str(staged)]) == 0, stage
    assert main(["all", "-c", str(whole)]) == 0
    assert _tree(staged.parent / "output") == _tree(whole.parent / "output")


def test_missing_schema_exits_2(corpus_dir):
    (corpus_dir / "schema.json").unlink()
    assert main(["extract", "-c", str(corpus_dir / "config.json")]) == 2


def test_refine_before_extract_exits_3(corpus_dir):
    assert main(["refine", "-c", str(corpus_dir / "config.json")]) == 3


def test_eval_with_empty_hypothesis_dir_exits_3(corpus_dir):
    (corpus_dir / "empty").mkdir()
    code = main(["eval", "-c", str(corpus_dir / "config.json"), "--set", "evaluation.hypothesis_dir=empty"])
    assert code == 3


def test_partial_mode_records_failures(corpus_dir, capsys):
    (corpus_dir / "fixtures" / "extraction" / "page-0003.txt").unlink()
    config = str(corpus_dir / "config.json")
    assert main(["preprocess", "-c", config]) == 0
    assert main(["extract", "-c", config]) == 4

    assert main(["extract", "-c", config, "--mode", "partial"]) == 0
    failures = json.loads((corpus_dir / "output" / "failures.json").read_text(encoding="utf-8"))
    assert [f["page_number"] for f in failures] == [3]
    pages = sorted(p.name for p in (corpus_dir / "output" / "pages").glob("*.json"))
    assert len(pages) == len(PAGES) - 1
    assert "page-0003.json" not in pages


@pytest.mark.asyncio
async def test_runner_query(corpus_dir):
    runner = PipelineRunner(load_config(corpus_dir / "config.json"))
    await runner.run_all()
    specific = await runner.query("What happened in 1477?")
    assert specific.route == QueryClass.SPECIFIC
    assert specific.response == DEFAULT_ANSWER
    assert specific.provenance["years"] == [[1477, 1477]]
    assert specific.citations
    general = await runner.query("What are the main themes of the chronicle?")
    assert general.route == QueryClass.GENERAL
    assert general.provenance["strategy"] == "mmr"


@pytest.mark.asyncio
async def test_runner_enriched_document_links_entities(corpus_dir):
    runner = PipelineRunner(load_config(corpus_dir / "config.json"))
    await runner.run_all()
    doc = await runner.store.load_document(enriched=True)
    linked = {l.kb_id for u in doc.units for l in u.linked_entities}
    assert {"folio:P001", "folio:L001", "folio:I001"} <= linked
    # 第 1 页断词段落与第 2 页开头合并为一个单元
    merged = [u for u in doc.units if len(u.sources) > 1]
    assert any("ambassadors who came to the court." in u.text for u in merged)


def test_query_command_prints_answer(corpus_dir, capsys):
    config = str(corpus_dir / "config.json")
    assert main(["all", "-c", config]) == 0
    capsys.readouterr()
    assert main(["query", "-c", config, "When did Francesco Sforza enter Milan?"]) == 0
    result = _stdout_json(capsys.readouterr().out)
    assert result["response"] == DEFAULT_ANSWER
    assert result["route"] == "specific"
    assert set(result) == {"response", "citations", "route", "provenance"}
