import os
import json
import tempfile

# 日志目录需在导入 folio 之前设置
os.environ.setdefault("LOG_DIR", os.path.join(tempfile.gettempdir(), "folio-test-log"))

import pytest

from folio.core.modules import BBox, ElementCategory, PageElement, PageExtraction
from folio.core.schema import parse_schema
from folio.utils.fixture_corpus import SCHEMA, write_fixture_corpus


@pytest.fixture
def schema():
    return parse_schema(json.dumps(SCHEMA))


@pytest.fixture
def corpus_dir(tmp_path):
    config_path = write_fixture_corpus(tmp_path / "corpus")
    return config_path.parent


def element(category="text", text="", bbox=(0, 0, 10, 10), **kwargs) -> PageElement:
    return PageElement(bbox=BBox.from_list(bbox), category=ElementCategory(category), text=text, **kwargs)


def page(number, *elements) -> PageExtraction:
    return PageExtraction(page_number=number, source_image_id=f"page-{number:04d}", elements=list(elements))
