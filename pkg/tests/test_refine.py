import random
from collections import Counter

import pytest

from folio.core.errors import LinkError, OutputValidationError
from folio.core.modules import ElementRef, MergeLink
from folio.refine import (
    TypographyRules, aggregate, continuation_link, dehyphenate, normalise_typography, propagate_metadata,
    refine_document, resolve_continuations,
)

from conftest import element, page


@pytest.mark.parametrize("text,expected", [
    ("histo-\nrical", "historical"),
    ("Milano-\nTorino", "Milano-Torino"),
    ("anno-\n1485", "anno-1485"),
    ("the cat\nsat", "the cat sat"),
    ("single line", "single line"),
    ("a-\n\nb", "a- b"),
])
def test_dehyphenate(text, expected):
    assert dehyphenate(text) == expected


def _random_lines(rng):
    alphabet = "abcXYZ19 -"
    return "\n".join("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
                     for _ in range(rng.randint(1, 6)))


def test_dehyphenate_character_accounting():
    rng = random.Random(42)
    for _ in range(1000):
        text = _random_lines(rng)
        lines = text.split("\n")
        joined = sum(1 for a, b in zip(lines, lines[1:]) if a.endswith("-") and b[:1].islower())
        out = dehyphenate(text)

        def letters(s):
            return Counter(ch for ch in s if not ch.isspace() and ch != "-")

        assert letters(out) == letters(text)
        assert out.count("-") == text.count("-") - joined


def test_typography_examples():
    assert normalise_typography("“curly” and ‘single’") == "\"curly\" and 'single'"
    assert normalise_typography("a   b") == "a b"
    assert normalise_typography("line  \t\nnext ") == "line\nnext"
    assert normalise_typography("«guillemets»") == "«guillemets»"


def test_typography_idempotent():
    rng = random.Random(5)
    alphabet = "ab “”‘’«»\t\n."
    for _ in range(1000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        once = normalise_typography(text)
        assert normalise_typography(once) == once


def test_typography_rules_validation():
    with pytest.raises(ValueError):
        TypographyRules(quote_map={"ab": "x"})
    with pytest.raises(ValueError):
        TypographyRules(quote_map={"“": "”", "”": '"'})


def test_continuation_merge():
    p1 = page(1, element("text", "In 1450 the duke entered the"))
    p2 = page(2, element("text", "city amid celebration."))
    link = continuation_link(p1, p2)
    assert link == MergeLink(source=ElementRef(page_number=1, index=0),
                             target=ElementRef(page_number=2, index=0), hyphenated=False)


def test_continuation_blocked_by_punctuation():
    p1 = page(1, element("text", "amid celebration.  "))
    p2 = page(2, element("text", "the next day"))
    assert resolve_continuations([p1, p2]) == []


def test_continuation_blocked_by_header():
    p1 = page(1, element("text", "the duke entered the"))
    p2 = page(2, element("header", "CHRONICLE"), element("text", "city amid celebration."))
    assert resolve_continuations([p1, p2]) == []


def test_continuation_skips_floating_elements():
    p1 = page(1, element("text", "the ambassa-"), element("footnote", "1 A note."))
    p2 = page(2, element("figure", ""), element("text", "dors came."))
    (link,) = resolve_continuations([p2, p1])
    assert link.source.key() == (1, 0)
    assert link.target.key() == (2, 1)
    assert link.hyphenated


def test_continuation_requires_adjacent_pages():
    assert resolve_continuations([page(1, element("text", "and the")), page(3, element("text", "rest"))]) == []


def test_propagate_metadata():
    p1 = page(1, element("text", "In that year the", date="1485", place="Milan"))
    p2 = page(2, element("text", "plague came.", place="Pavia"), element("text", "Unlinked."))
    out = propagate_metadata([p1, p2])
    continuation = out[1].elements[0]
    assert continuation.date == "1485"
    assert continuation.place == "Pavia"
    assert out[1].elements[1] == p2.elements[1]


def test_aggregate_without_links():
    pages = [page(1, element("title", "Book"), element("text", "A.")), page(2, element("text", "B."))]
    doc = aggregate(pages, [])
    assert len(doc.units) == 3
    assert [u.id for u in doc.units] == ["u0001-000", "u0001-001", "u0002-000"]


def test_aggregate_chain_among_five_elements():
    pages = [
        page(1, element("title", "Book"), element("text", "the duke entered the histo-")),
        page(2, element("text", "rical city."), element("footnote", "1 Note."), element("text", "End.")),
    ]
    links = resolve_continuations(pages)
    doc = aggregate(pages, links)
    assert len(doc.units) == 4
    merged = doc.units[1]
    assert merged.text == "the duke entered the historical city."
    assert merged.page_span == (1, 2)
    assert [s.key() for s in merged.sources] == [(1, 1), (2, 0)]
    assert doc.pages == pages


def test_aggregate_broken_link():
    pages = [page(1, element("text", "a")), page(2, element("text", "b"))]
    bad = MergeLink(source=ElementRef(page_number=1, index=0), target=ElementRef(page_number=2, index=5))
    with pytest.raises(LinkError):
        aggregate(pages, [bad])


def test_aggregate_preserves_characters():
    pages = [
        page(1, element("text", "Alpha beta"), element("text", "gamma delta")),
        page(2, element("text", "epsilon."), element("table", "1450 | 1485")),
    ]
    doc = aggregate(pages, resolve_continuations(pages))
    before = Counter(ch for p in pages for e in p.elements for ch in e.text if not ch.isspace())
    after = Counter(ch for u in doc.units for ch in u.text if not ch.isspace())
    assert before == after


def test_refine_document_propagates_and_keeps_pages(schema):
    p1 = page(1, element("text", "Of these years the chronicler", speaker="Corio"))
    p2 = page(2, element("text", "wrote with admiration."))
    doc = refine_document([p1, p2], schema=schema, title="Chronicle")
    (unit,) = doc.units
    assert unit.metadata == {"speaker": "Corio"}
    assert unit.text == "Of these years the chronicler wrote with admiration."
    assert doc.pages[1].elements[0].speaker is None
    assert doc.title == "Chronicle"


def test_refine_document_validates(schema):
    bad = page(1, element("text", "x", extras={"mood": "grim"}))
    with pytest.raises(OutputValidationError) as info:
        refine_document([bad], schema=schema)
    assert [v.path for v in info.value.violations] == ["elements[0].mood"]
