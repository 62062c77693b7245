import csv
import io
import json
import math

import numpy as np
import pytest
from lxml import etree

from folio.core.errors import AnnotationError, ArtifactError, ConfigError, EmbeddingError, ValidationFailure
from folio.core.manager import ArtifactStore
from folio.core.modules import ContentUnit, DocumentRecord, ElementRef, EntityMention
from folio.enrich import (
    DocumentExporter, EmbeddingVector, GazetteerEntry, VectorIndex, apply_annotations, embed, enrich_document,
    export_csv, export_jsonl, export_tei, import_jsonl, infer_semantics, link_entities, load_gazetteer,
    similarity,
)
from folio.enrich.export import TEI_NS
from folio.llm import FixtureEmbedder, FixtureLLM
from folio.llm.mock import token_bucket

from conftest import element, page

GAZETTEER = [
    GazetteerEntry(kb_id="folio:P002", entity_type="person", label="Ludovico Sforza", aliases=["Ludovico il Moro"]),
    GazetteerEntry(kb_id="folio:L001", entity_type="place", label="Milan", aliases=["Milano"]),
]


def unit(text="In 1485 Lodovico Sforza left Milan.", uid="u0001-000", **kwargs) -> ContentUnit:
    return ContentUnit(id=uid, category="text", text=text, sources=[ElementRef(page_number=1, index=0)], **kwargs)


def mention(surface, entity_type="person") -> EntityMention:
    return EntityMention(surface=surface, entity_type=entity_type)


# ---------------------------------------------------------------- linking

def test_similarity_lodovico():
    assert similarity("Lodovico Sforza", "Ludovico Sforza") == pytest.approx(14 / 15)
    assert similarity("MILAN", "milan") == 1.0


def test_link_above_threshold():
    result = link_entities([mention("Lodovico Sforza")], GAZETTEER)
    (linked,) = result.linked
    assert linked.kb_id == "folio:P002"
    assert linked.score == pytest.approx(14 / 15)
    assert result.unlinked == []


def test_link_uses_aliases_and_types():
    result = link_entities([mention("Milano", "place"), mention("Milano", "person")], GAZETTEER)
    assert [l.kb_id for l in result.linked] == ["folio:L001"]
    assert [m.entity_type for m in result.unlinked] == ["person"]


def test_link_below_threshold_stays_unlinked():
    result = link_entities([mention("Galeazzo Maria")], GAZETTEER)
    assert result.linked == []
    assert len(result.unlinked) == 1


def test_link_tie_prefers_smallest_id():
    twins = [GazetteerEntry(kb_id="b", entity_type="place", label="Pavia"),
             GazetteerEntry(kb_id="a", entity_type="place", label="Pavia")]
    assert link_entities([mention("Pavia", "place")], twins).linked[0].kb_id == "a"


def test_load_gazetteer(tmp_path):
    path = tmp_path / "gaz.tsv"
    path.write_text("# comment\n\nfolio:L001\tplace\tMilan\tMilano\n", encoding="utf-8")
    (entry,) = load_gazetteer(path)
    assert entry.names() == ["Milan", "Milano"]
    path.write_text("x\tplanet\tMars\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_gazetteer(path)
    with pytest.raises(ArtifactError):
        load_gazetteer(tmp_path / "missing.tsv")


# ---------------------------------------------------------------- inference

@pytest.mark.asyncio
async def test_inference_attaches_entities(schema):
    llm = FixtureLLM({"u0001-000": '{"entities": [{"mention": "Milan", "type": "place"}], "date": "1485"}'})
    u = unit()
    annotations = await infer_semantics(u, "Tag places and dates.", llm, schema)
    enriched = apply_annotations(u, annotations)
    assert [(e.surface, e.span) for e in enriched.entities] == [("Milan", (29, 34))]
    assert enriched.metadata == {"date": "1485"}


@pytest.mark.asyncio
async def test_inference_rejects_undeclared_key(schema):
    llm = FixtureLLM({"u0001-000": '{"mood": "grim"}'})
    with pytest.raises(AnnotationError) as info:
        await infer_semantics(unit(), "Describe.", llm, schema)
    assert [v.path for v in info.value.violations] == ["mood"]


@pytest.mark.asyncio
async def test_inference_unparseable(schema):
    with pytest.raises(AnnotationError):
        await infer_semantics(unit(), "Describe.", FixtureLLM(default="nothing"), schema)


def test_empty_annotations_leave_unit_unchanged():
    u = unit(metadata={"date": "1486"})
    assert apply_annotations(u, {}) is u
    assert apply_annotations(u, {"date": "1485"}).metadata == {"date": "1486"}


# ---------------------------------------------------------------- embedding

@pytest.mark.asyncio
async def test_fixture_embedding_two_buckets():
    (vec,) = await embed(["a b"], FixtureEmbedder(64))
    values = np.zeros(64)
    values[token_bucket("a", 64)] += 1
    values[token_bucket("b", 64)] += 1
    assert np.allclose(vec.as_array(), values / np.linalg.norm(values))
    assert math.isclose(float(np.linalg.norm(vec.as_array())), 1.0, abs_tol=1e-9)


@pytest.mark.asyncio
async def test_empty_text_embeds_to_first_axis():
    (vec,) = await embed([""], FixtureEmbedder(8))
    assert vec.values == [1.0] + [0.0] * 7


@pytest.mark.asyncio
async def test_identical_texts_identical_vectors():
    a, b = await embed(["the duke", "the duke"], FixtureEmbedder(16))
    assert a == b


def test_vector_norm_checked():
    with pytest.raises(ValueError):
        EmbeddingVector(values=[1.0, 1.0], normalised=True)
    assert EmbeddingVector(values=[1.0, 1.0], normalised=False).dimension == 2


class _RaggedEmbedder(FixtureEmbedder):
    async def embed_texts(self, texts):
        return [[1.0] * (i + 1) for i, _ in enumerate(texts)]


@pytest.mark.asyncio
async def test_dimension_mismatch_in_batch():
    with pytest.raises(EmbeddingError):
        await embed(["a", "b"], _RaggedEmbedder())


# ---------------------------------------------------------------- index

def test_index_self_match_and_errors():
    index = VectorIndex(3)
    index.add("a", [1.0, 0.0, 0.0]).add("b", [0.0, 1.0, 0.0])
    (hit,) = index.search([2.0, 0.0, 0.0], k=1)
    assert hit.id == "a"
    assert hit.similarity == pytest.approx(1.0)
    with pytest.raises(ValidationFailure):
        index.add("a", [0.0, 0.0, 1.0])
    with pytest.raises(ValidationFailure):
        index.add("c", [1.0, 0.0])
    with pytest.raises(ValidationFailure):
        index.search([1.0, 0.0], k=1)


def test_index_matches_exhaustive_scan():
    rng = np.random.default_rng(11)
    for _ in range(100):
        index = VectorIndex(64)
        vectors = rng.normal(size=(1000, 64))
        for i, v in enumerate(vectors):
            index.add(f"e{i:04d}", v)
        query = rng.normal(size=64)
        k = int(rng.integers(1, 11))
        units = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
        scores = units @ (query / np.linalg.norm(query))
        expected = sorted(range(1000), key=lambda i: (-scores[i], f"e{i:04d}"))[:k]
        assert [h.id for h in index.search(query, k)] == [f"e{i:04d}" for i in expected]


def test_index_filter_and_ties():
    index = VectorIndex(2)
    index.add("b", [1.0, 0.0], {"kind": "content"})
    index.add("a", [1.0, 0.0], {"kind": "content"})
    index.add("c", [1.0, 0.0], {"kind": "footnote"})
    hits = index.search([1.0, 0.0], k=5, where=lambda m: m["kind"] == "content")
    assert [h.id for h in hits] == ["a", "b"]


def test_index_persistence(tmp_path):
    index = VectorIndex(2)
    index.add("a", [3.0, 4.0], {"kind": "content"})
    path = index.save(tmp_path / "vectors.jsonl")
    index.append_entry(path, "b", [0.0, 1.0])
    loaded = VectorIndex.load(path)
    assert loaded.ids == ["a", "b"]
    assert np.allclose(loaded.vector("a"), [0.6, 0.8])
    assert loaded.metadata("a") == {"kind": "content"}
    assert VectorIndex.loads(index.dumps()).dumps() == index.dumps()


def test_index_corrupt_file(tmp_path):
    path = tmp_path / "vectors.jsonl"
    path.write_text('{"dimension": 2, "count": 1}\n{"id": "a"}\n', encoding="utf-8")
    with pytest.raises(ArtifactError):
        VectorIndex.load(path)


# ---------------------------------------------------------------- export

def _doc() -> DocumentRecord:
    pages = [
        page(1, element("header", "CHRONICLE"), element("text", "The duke entered the"),
             element("footnote", "1 A note.")),
        page(2, element("text", "city, \"amid\" celebration.")),
    ]
    units = [
        ContentUnit(id="u0001-000", category="header", text="CHRONICLE", sources=[ElementRef(page_number=1, index=0)]),
        ContentUnit(id="u0001-001", category="text", text="The duke entered the city, \"amid\" celebration.",
                    sources=[ElementRef(page_number=1, index=1), ElementRef(page_number=2, index=0)],
                    metadata={"date": "1450", "folio": "12r"}),
        ContentUnit(id="u0001-002", category="footnote", text="1 A note.", sources=[ElementRef(page_number=1, index=2)]),
    ]
    return DocumentRecord(title="Chronicle", source={"archive": "Milan"}, pages=pages, units=units)


def test_tei_empty_document():
    root = etree.fromstring(export_tei(DocumentRecord()).encode("utf-8"))
    body = root.find(f"{{{TEI_NS}}}text/{{{TEI_NS}}}body")
    assert body is not None and len(body) == 0


def test_tei_mapping():
    root = etree.fromstring(export_tei(_doc()).encode("utf-8"))
    ns = {"tei": TEI_NS}
    assert root.findtext("tei:teiHeader/tei:fileDesc/tei:titleStmt/tei:title", namespaces=ns) == "Chronicle"
    divs = root.findall("tei:text/tei:body/tei:div", namespaces=ns)
    assert [d.get("n") for d in divs] == ["1", "2"]
    children = list(divs[0])
    assert [etree.QName(c).localname for c in children] == ["head", "p", "note"]
    assert children[1].get("corresp") == "#page-2"
    assert children[2].get("place") == "foot"
    assert len(divs[1]) == 0


def test_csv_escaping_and_columns():
    rows = list(csv.reader(io.StringIO(export_csv(_doc()))))
    assert rows[0] == ["id", "category", "page_start", "page_end", "text", "speaker", "date", "place",
                       "folio", "linked_entities"]
    assert rows[2][4] == "The duke entered the city, \"amid\" celebration."
    assert rows[2][2:4] == ["1", "2"]
    assert len(rows) == 4


def test_csv_empty_doc():
    assert export_csv(DocumentRecord()).count("\n") == 1


def test_jsonl_round_trip():
    doc = _doc()
    text = export_jsonl(doc)
    assert len(text.splitlines()) == len(doc.units)
    assert import_jsonl(text) == doc.units


def test_exporter_writes_files(tmp_path):
    written = DocumentExporter(tmp_path / "exports", ["csv", "jsonl"]).export(_doc())
    assert sorted(p.name for p in written) == ["units.csv", "units.jsonl"]
    with pytest.raises(ValidationFailure):
        DocumentExporter(tmp_path, ["pdf"])


# ---------------------------------------------------------------- document

@pytest.mark.asyncio
async def test_enrich_document_links_every_unit():
    doc = DocumentRecord(units=[
        unit(entities=[mention("Lodovico Sforza"), mention("Milan", "place")]),
        unit("Nothing here.", uid="u0002-000"),
    ])
    enriched = await enrich_document(doc, gazetteer=GAZETTEER)
    assert [l.kb_id for l in enriched.units[0].linked_entities] == ["folio:P002", "folio:L001"]
    assert enriched.units[1].linked_entities == []
    assert [u.id for u in enriched.units] == ["u0001-000", "u0002-000"]


@pytest.mark.asyncio
async def test_enrich_document_keeps_unlinked_mentions(tmp_path):
    doc = DocumentRecord(units=[unit(entities=[mention("Milan", "place"), mention("Gian Galeazzo")])])
    enriched = await enrich_document(doc, gazetteer=GAZETTEER)
    assert [l.kb_id for l in enriched.units[0].linked_entities] == ["folio:L001"]
    assert [m.surface for m in enriched.units[0].unlinked_entities] == ["Gian Galeazzo"]

    store = ArtifactStore(tmp_path)
    path = await store.save_unlinked(enriched)
    (record,) = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    assert (record["unit_id"], record["page_span"], record["surface"]) == ("u0001-000", [1, 1], "Gian Galeazzo")


@pytest.mark.asyncio
async def test_saving_refined_document_drops_stale_enrichment(tmp_path):
    store = ArtifactStore(tmp_path)
    await store.save_document(DocumentRecord(units=[unit()]), enriched=True)
    await store.save_unlinked(DocumentRecord())
    await store.save_document(DocumentRecord(units=[unit("Refined again.")]))
    assert not store.document_path(enriched=True).exists()
    assert not store.unlinked_path.exists()
    assert (await store.load_document()).units[0].text == "Refined again."


@pytest.mark.asyncio
async def test_enrich_document_inference_needs_prompt(schema):
    with pytest.raises(ConfigError):
        await enrich_document(DocumentRecord(), llm=FixtureLLM(default="{}"), schema=schema)
