"""跨页续接识别与元数据传播"""

from typing import Dict, List, Optional, Sequence, Tuple

from ..core.modules import (
    FLOATING_CATEGORIES, METADATA_FIELDS, ElementCategory, ElementRef, MergeLink, PageElement,
    PageExtraction,
)
from ..utils.logging import get_logger

# 以这些字符结尾的段落视为完整，不与下一页续接
SENTENCE_FINAL = (".", "!", "?", "”", "»", ":")

logger = get_logger("refine")


def _flow_index(page: PageExtraction, last: bool) -> Optional[int]:
    """页面正文流中的首/末元素序号，跳过脚注、插图、表格"""
    indices = [i for i, e in enumerate(page.elements) if e.category not in FLOATING_CATEGORIES]
    if not indices:
        return None
    return indices[-1] if last else indices[0]


def continuation_link(earlier: PageExtraction, later: PageExtraction) -> Optional[MergeLink]:
    """两页之间的续接链接，不满足任一条件时返回 None"""
    if later.page_number != earlier.page_number + 1:
        return None
    i = _flow_index(earlier, last=True)
    j = _flow_index(later, last=False)
    if i is None or j is None:
        return None
    prev, nxt = earlier.elements[i], later.elements[j]
    # 标题/页眉出现在下一页开头时阻断续接
    if prev.category != ElementCategory.TEXT or nxt.category != ElementCategory.TEXT:
        return None
    tail = prev.text.rstrip()
    if not tail or not nxt.text.strip():
        return None
    if tail.endswith(SENTENCE_FINAL):
        return None
    return MergeLink(
        source=ElementRef(page_number=earlier.page_number, index=i),
        target=ElementRef(page_number=later.page_number, index=j),
        hyphenated=tail.endswith("-"),
    )


def resolve_continuations(pages: Sequence[PageExtraction]) -> List[MergeLink]:
    """识别跨页延续的文本段，只链接相邻页"""
    ordered = sorted(pages, key=lambda p: p.page_number)
    links = []
    for earlier, later in zip(ordered, ordered[1:]):
        link = continuation_link(earlier, later)
        if link is not None:
            links.append(link)
    logger.debug(f"[Continuations resolved] | pages = {len(ordered)} | links = {len(links)}")
    return links


def _fill_missing(source: PageElement, target: PageElement) -> PageElement:
    update = {name: getattr(source, name) for name in METADATA_FIELDS
              if getattr(target, name) is None and getattr(source, name) is not None}
    return target.model_copy(update=update) if update else target


def propagate_metadata(pages: Sequence[PageExtraction],
                       links: Optional[Sequence[MergeLink]] = None) -> List[PageExtraction]:
    """speaker/date/place 沿续接链向后传播，不覆盖已有值"""
    if links is None:
        links = resolve_continuations(pages)
    elements: Dict[int, List[PageElement]] = {p.page_number: list(p.elements) for p in pages}
    for link in sorted(links, key=lambda l: l.source.key()):
        src_page, src_idx = link.source.key()
        dst_page, dst_idx = link.target.key()
        if src_page not in elements or dst_page not in elements:
            continue
        if src_idx >= len(elements[src_page]) or dst_idx >= len(elements[dst_page]):
            continue
        elements[dst_page][dst_idx] = _fill_missing(elements[src_page][src_idx], elements[dst_page][dst_idx])
    return [p.model_copy(update={"elements": elements[p.page_number]}) for p in pages]


def chain_keys(links: Sequence[MergeLink]) -> Tuple[Dict[Tuple[int, int], Tuple[int, int]], set]:
    """后继映射与所有被链接的目标"""
    successor = {link.source.key(): link.target.key() for link in links}
    targets = {link.target.key() for link in links}
    return successor, targets
