"""文档聚合：续接链合并为内容单元，连同原始页面组成 DocumentRecord"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.errors import LinkError, OutputValidationError, ValidationFailure
from ..core.modules import (
    METADATA_FIELDS, ContentUnit, DocumentRecord, ElementRef, EntityMention, MergeLink, PageElement,
    PageExtraction,
)
from ..core.schema import ExtractionSchema, Violation, validate
from ..utils.id_utils import unit_id
from ..utils.logging import get_logger, log_exception
from .resolve import chain_keys, propagate_metadata, resolve_continuations
from .text import TypographyRules, dehyphenate, normalise_typography

logger = get_logger("refine")


def check_page(page: PageExtraction, schema: ExtractionSchema) -> List[Violation]:
    """页内校验：每个元素重新按模式校验，路径带元素序号"""
    out: List[Violation] = []
    for i, element in enumerate(page.elements):
        prefix = f"elements[{i}]"
        for v in validate(element.to_instance(), schema):
            out.append(Violation(path=f"{prefix}.{v.path}" if v.path else prefix, message=v.message))
    return out


def unit_text(texts: Sequence[str], rules: Optional[TypographyRules] = None) -> str:
    return normalise_typography(dehyphenate("\n".join(texts)), rules)


def _merge_metadata(chain: Sequence[PageElement]) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {}
    for name in METADATA_FIELDS:
        value = next((getattr(e, name) for e in chain if getattr(e, name) is not None), None)
        if value is not None:
            metadata[name] = value
    return metadata


def _merge_entities(chain: Sequence[PageElement], text: str) -> List[EntityMention]:
    seen = set()
    merged = []
    for element in chain:
        for mention in element.entities:
            key = (mention.surface, mention.entity_type)
            if key in seen:
                continue
            seen.add(key)
            merged.append(mention.located_in(text))
    return merged


@log_exception
def aggregate(pages: Sequence[PageExtraction], links: Sequence[MergeLink],
              rules: Optional[TypographyRules] = None, title: str = "",
              source: Optional[Dict[str, str]] = None) -> DocumentRecord:
    """
    续接链合并为一个内容单元，其余元素各自成为单元。

    单元顺序按 (页码, 阅读顺序)；原始页面原样保留在记录中。

    Raises:
        LinkError: 链接引用了不存在的元素
        ValidationFailure: 页码重复
    """
    ordered = sorted(pages, key=lambda p: p.page_number)
    numbers = [p.page_number for p in ordered]
    if len(set(numbers)) != len(numbers):
        raise ValidationFailure(f"duplicate page numbers in {numbers}")
    lookup: Dict[Tuple[int, int], PageElement] = {
        (p.page_number, i): e for p in ordered for i, e in enumerate(p.elements)
    }
    for link in links:
        for ref in (link.source, link.target):
            if ref.key() not in lookup:
                raise LinkError(f"link references missing element (page {ref.page_number}, index {ref.index})")

    successor, targets = chain_keys(links)
    units: List[ContentUnit] = []
    for page in ordered:
        for index in range(len(page.elements)):
            key = (page.page_number, index)
            if key in targets:
                continue
            keys = [key]
            while keys[-1] in successor:
                keys.append(successor[keys[-1]])
            chain = [lookup[k] for k in keys]
            text = unit_text([e.text for e in chain], rules)
            units.append(ContentUnit(
                id=unit_id(*key),
                category=chain[0].category,
                text=text,
                sources=[ElementRef(page_number=p, index=i) for p, i in keys],
                metadata=_merge_metadata(chain),
                entities=_merge_entities(chain, text),
            ))
    logger.info(f"[Document aggregated] | pages = {len(ordered)} | links = {len(links)} | units = {len(units)}")
    return DocumentRecord(title=title, source=dict(source or {}), pages=ordered, units=units)


@log_exception
def refine_document(pages: Sequence[PageExtraction], schema: Optional[ExtractionSchema] = None,
                    rules: Optional[TypographyRules] = None, resolve: bool = True,
                    propagate: bool = True, title: str = "",
                    source: Optional[Dict[str, str]] = None) -> DocumentRecord:
    """页内校验 -> 跨页续接 -> 元数据传播 -> 聚合"""
    if schema is not None:
        violations = [v for page in pages for v in check_page(page, schema)]
        if violations:
            raise OutputValidationError(f"{len(violations)} element(s) fail the schema", violations)
    links = resolve_continuations(pages) if resolve else []
    merged = propagate_metadata(pages, links) if propagate else pages
    doc = aggregate(merged, links, rules=rules, title=title, source=source)
    # 记录中保留未经传播的原始页面
    return doc.model_copy(update={"pages": sorted(pages, key=lambda p: p.page_number)})
