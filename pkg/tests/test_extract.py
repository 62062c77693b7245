import json
import random

import httpx
import numpy as np
import openai
import pytest

from folio.core.errors import (
    BackendError, ConfigError, FixtureKeyError, HybridExtractionError, OutputParseError, OutputValidationError,
)
from folio.core.raster import RasterImage
from folio.extract import (
    ExtractionPlan, PageImage, build_prompt, extract_document, extract_page, extract_page_hybrid,
    extract_payload, parse_output,
)
from folio.llm import BackendConfig, FixtureLLM, OpenAILLM, RawModelOutput, backoff_schedule, call_with_backoff
from folio.utils.fixture_corpus import PAGES as FIXTURE_PAGES

ELEMENTS = [
    {"bbox": [10, 10, 200, 40], "category": "title", "text": "Book One"},
    {"bbox": [10, 50, 200, 300], "category": "text", "text": "In 1485 the plague came to Milan."},
]


def page_image(n=1) -> PageImage:
    img = RasterImage.from_array(np.full((20, 20), 255, dtype=np.uint8))
    return PageImage(page_number=n, source_image_id=f"page-{n:04d}", image=img)


def raw(text) -> RawModelOutput:
    return RawModelOutput(text=text, latency_ms=0.0, backend_id="test")


def specialised(responses=None, **kwargs) -> FixtureLLM:
    return FixtureLLM(responses=responses, mode="specialised", backend_id="spec", **kwargs)


def general(responses=None, **kwargs) -> FixtureLLM:
    return FixtureLLM(responses=responses, mode="general", backend_id="gen", **kwargs)


def test_prompt_without_instructions(schema):
    prompt = build_prompt(schema)
    assert "JSON Schema:" in prompt
    assert "Instructions:" not in prompt
    assert '"enum": ["title", "text", "header", "footnote", "figure", "table"]' in prompt
    assert build_prompt(schema) == prompt


def test_prompt_with_instructions(schema):
    prompt = build_prompt(schema, "Record the speaker of each paragraph.")
    assert prompt.endswith("Instructions:\nRecord the speaker of each paragraph.")


@pytest.mark.parametrize("text", [
    json.dumps(ELEMENTS),
    "```json\n" + json.dumps(ELEMENTS) + "\n```",
    "Here are the elements:\n" + json.dumps(ELEMENTS) + "\nDone.",
    json.dumps({"elements": ELEMENTS}),
])
def test_parse_wrapped_outputs(schema, text):
    page = parse_output(raw(text), schema, 3, "page-0003")
    assert page.page_number == 3
    assert [e.category.value for e in page.elements] == ["title", "text"]
    assert page.elements[1].bbox.as_list() == [10, 50, 200, 300]


def test_parse_without_payload(schema):
    with pytest.raises(OutputParseError):
        parse_output(raw("I could not read this page."), schema, 1, "p")
    with pytest.raises(OutputParseError):
        extract_payload('{"broken": ')


def test_parse_reports_indexed_violations(schema):
    bad = [ELEMENTS[0], {"bbox": [0, 0, 1, 1], "category": "marginalia", "text": "x"}]
    with pytest.raises(OutputValidationError) as info:
        parse_output(raw(json.dumps(bad)), schema, 1, "p")
    assert [v.path for v in info.value.violations] == ["elements[1].category"]


def test_entities_located_in_text(schema):
    elements = [dict(ELEMENTS[1], entities=[{"mention": "Milan", "type": "place"},
                                            {"mention": "Pavia", "type": "place"}])]
    page = parse_output(raw(json.dumps(elements)), schema, 1, "p")
    milan, pavia = page.elements[0].entities
    assert milan.span == (27, 32)
    assert pavia.span is None


def test_serialised_page_parses_back_identically(schema):
    for number, elements in enumerate(FIXTURE_PAGES, start=1):
        page = parse_output(raw(json.dumps(elements)), schema, number, f"page-{number:04d}")
        serialised = json.dumps(page.to_instances(), ensure_ascii=False)
        assert parse_output(raw(serialised), schema, number, f"page-{number:04d}") == page


@pytest.mark.asyncio
async def test_path_a_fixture(schema):
    llm = specialised({"page-0001": json.dumps(ELEMENTS)})
    page = await extract_page(llm, page_image(), schema)
    assert page.text == "Book One\nIn 1485 the plague came to Milan."
    assert llm.calls == ["page-0001"]


@pytest.mark.asyncio
async def test_specialised_rejects_instructions(schema):
    with pytest.raises(ConfigError):
        await extract_page(specialised(default="[]"), page_image(), schema, "find the speaker")


@pytest.mark.asyncio
async def test_general_requires_instructions(schema):
    with pytest.raises(ConfigError):
        await extract_page(general(default="[]"), page_image(), schema)
    page = await extract_page(general(default=json.dumps(ELEMENTS)), page_image(), schema, "find the speaker")
    assert len(page.elements) == 2


@pytest.mark.asyncio
async def test_missing_fixture_key(schema):
    with pytest.raises(FixtureKeyError):
        await extract_page(specialised({}), page_image(), schema)


@pytest.mark.asyncio
async def test_hybrid_identity_refinement(schema):
    text = json.dumps(ELEMENTS)
    phase1 = await extract_page(specialised({"page-0001": text}), page_image(), schema)
    out = await extract_page_hybrid(specialised({"page-0001": text}), general({"page-0001.refine": text}),
                                    page_image(), schema, "keep everything")
    assert out == phase1


@pytest.mark.asyncio
async def test_hybrid_adds_entities(schema):
    enriched = [dict(ELEMENTS[0]), dict(ELEMENTS[1], entities=[{"mention": "Milan", "type": "place"}])]
    out = await extract_page_hybrid(
        specialised({"page-0001": json.dumps(ELEMENTS)}), general({"page-0001.refine": json.dumps(enriched)}),
        page_image(), schema, "tag places")
    assert [e.surface for e in out.elements[1].entities] == ["Milan"]
    assert [e.category.value for e in out.elements] == ["title", "text"]


@pytest.mark.asyncio
async def test_hybrid_prompt_embeds_phase1(schema):
    refiner = general(responder=lambda key, prompt: prompt.split("Elements:\n", 1)[1])
    out = await extract_page_hybrid(specialised({"page-0001": json.dumps(ELEMENTS)}), refiner,
                                    page_image(), schema, "keep everything")
    assert out.text == "Book One\nIn 1485 the plague came to Milan."


@pytest.mark.asyncio
async def test_hybrid_dropping_element(schema):
    spec = specialised({"page-0001": json.dumps(ELEMENTS)})
    dropped = general({"page-0001.refine": json.dumps(ELEMENTS[:1])})
    with pytest.raises(HybridExtractionError) as info:
        await extract_page_hybrid(spec, dropped, page_image(), schema, "x")
    assert len(info.value.phase1.elements) == 2
    out = await extract_page_hybrid(spec, dropped, page_image(), schema, "x", allow_restructure=True)
    assert len(out.elements) == 1


@pytest.mark.asyncio
async def test_hybrid_invalid_phase2(schema):
    spec = specialised({"page-0001": json.dumps(ELEMENTS)})
    with pytest.raises(HybridExtractionError) as info:
        await extract_page_hybrid(spec, general({"page-0001.refine": "no json here"}), page_image(), schema, "x")
    assert info.value.phase2_raw == "no json here"


def test_plan_c_requires_refiner():
    with pytest.raises(ValueError):
        ExtractionPlan(path="C", primary=specialised())


def _responses(n):
    return {f"page-{i:04d}": json.dumps([{"bbox": [0, 0, 5, 5], "category": "text", "text": f"page {i}"}])
            for i in range(1, n + 1)}


@pytest.mark.asyncio
async def test_document_order_and_bound(schema):
    rng = random.Random(7)
    delays = {f"page-{i:04d}": rng.uniform(0.0, 0.02) for i in range(1, 11)}
    llm = specialised(_responses(10), latency=lambda key: delays[key])
    pages = [page_image(i) for i in range(1, 11)]
    rng.shuffle(pages)
    batch = await extract_document(ExtractionPlan(path="A", primary=llm), pages, schema, max_in_flight=4)
    assert [p.page_number for p in batch.pages] == list(range(1, 11))
    assert 1 <= llm.max_in_flight_seen <= 4
    assert batch.ok
    assert sorted(batch.timings_ms) == list(range(1, 11))


@pytest.mark.asyncio
async def test_document_sequential(schema):
    llm = specialised(_responses(3), latency=0.001)
    pages = [page_image(i) for i in range(1, 4)]
    batch = await extract_document(ExtractionPlan(path="A", primary=llm), pages, schema, max_in_flight=1)
    assert llm.calls == ["page-0001", "page-0002", "page-0003"]
    assert llm.max_in_flight_seen == 1
    assert len(batch.pages) == 3


@pytest.mark.asyncio
async def test_document_partial_mode(schema):
    responses = _responses(10)
    responses["page-0004"] = "garbage"
    llm = specialised(responses)
    batch = await extract_document(ExtractionPlan(path="A", primary=llm),
                                   [page_image(i) for i in range(1, 11)], schema, max_in_flight=4)
    assert len(batch.pages) == 9
    assert [(f.page_number, f.error_type) for f in batch.failures] == [(4, "OutputParseError")]
    assert not batch.ok


@pytest.mark.asyncio
async def test_document_partial_mode_records_unexpected_errors(schema):
    responses = _responses(5)

    def responder(key, prompt):
        if key == "page-0003":
            raise RuntimeError("connection reset by peer")
        return responses[key]

    batch = await extract_document(ExtractionPlan(path="A", primary=specialised(responder=responder)),
                                   [page_image(i) for i in range(1, 6)], schema)
    assert [p.page_number for p in batch.pages] == [1, 2, 4, 5]
    (failure,) = batch.failures
    assert (failure.page_number, failure.error_type) == (3, "RuntimeError")
    assert "connection reset" in failure.message


@pytest.mark.asyncio
async def test_document_strict_mode(schema):
    responses = _responses(5)
    responses["page-0002"] = "garbage"
    llm = specialised(responses)
    with pytest.raises(OutputParseError):
        await extract_document(ExtractionPlan(path="A", primary=llm),
                               [page_image(i) for i in range(1, 6)], schema, strict=True)


@pytest.mark.asyncio
async def test_max_in_flight_must_be_positive(schema):
    with pytest.raises(ConfigError):
        await extract_document(ExtractionPlan(path="A", primary=specialised()), [], schema, max_in_flight=0)


def test_backoff_schedule():
    assert backoff_schedule(3) == [1.0, 2.0, 4.0]
    assert backoff_schedule(0) == []


def _connection_error():
    return openai.APIConnectionError(request=httpx.Request("POST", "http://localhost/v1/chat/completions"))


@pytest.mark.asyncio
async def test_call_with_backoff_retries_then_succeeds():
    waits, attempts = [], []

    async def fake_sleep(seconds):
        waits.append(seconds)

    async def flaky():
        attempts.append(1)
        if len(attempts) < 3:
            raise _connection_error()
        return "ok"

    assert await call_with_backoff(flaky, 3, "test", sleep=fake_sleep) == "ok"
    assert waits == [1.0, 2.0]


@pytest.mark.asyncio
async def test_call_with_backoff_gives_up():
    waits = []

    async def fake_sleep(seconds):
        waits.append(seconds)

    async def down():
        raise _connection_error()

    with pytest.raises(BackendError) as info:
        await call_with_backoff(down, 3, "test", sleep=fake_sleep)
    assert waits == [1.0, 2.0, 4.0]
    assert info.value.attempts == 4


@pytest.mark.asyncio
async def test_unreachable_endpoint_without_retries():
    llm = OpenAILLM(BackendConfig(endpoint="http://127.0.0.1:9/v1", model="m", max_retries=0, timeout=2.0))
    with pytest.raises(BackendError):
        await llm.generate_response("hello")
