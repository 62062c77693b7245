"""
时间感知的切块。

以内容单元为粒度顺序扫描：标题/页眉（章节边界）和含年份标记的单元开启新块，
超出词数预算时也开启新块；脚注单元单独成为脚注块。
"""

import re
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.modules import ContentUnit, DocumentRecord, ElementCategory
from ..utils.id_utils import chunk_id
from ..utils.logging import get_logger

YEAR_RANGE = (300, 1600)
DEFAULT_MAX_WORDS = 1000

_NUMBER = re.compile(r"\b\d+\b")
_INTERVAL = re.compile(r"\b(\d+)\s*[-–]\s*(\d+)\b")

logger = get_logger("rag")


class Chunk(BaseModel):
    """检索单元"""
    model_config = ConfigDict(frozen=True)

    id: str
    kind: Literal["content", "footnote"]
    text: str
    year_range: Optional[Tuple[int, int]] = None
    chapter: Optional[str] = None
    page_span: Tuple[int, int]
    embedding_id: Optional[str] = Field(None, description="向量索引中的条目 ID")
    unit_ids: List[str] = Field(default_factory=list, description="来源内容单元")

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "content" and not self.text.strip():
            raise ValueError(f"content chunk {self.id} has empty text")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise ValueError(f"chunk {self.id}: year_range start > end")
        if self.page_span[0] > self.page_span[1]:
            raise ValueError(f"chunk {self.id}: page_span not ordered")
        return self

    def overlaps(self, intervals: Sequence[Tuple[int, int]]) -> bool:
        if self.year_range is None:
            return False
        lo, hi = self.year_range
        return any(a <= hi and lo <= b for a, b in intervals)


def find_year_markers(text: str, bounds: Tuple[int, int] = YEAR_RANGE) -> List[int]:
    """文本中位于历史年份区间内的独立整数，按出现顺序"""
    lo, hi = bounds
    return [int(m) for m in _NUMBER.findall(text) if lo <= int(m) <= hi]


def extract_years(query: str, bounds: Tuple[int, int] = YEAR_RANGE) -> List[Tuple[int, int]]:
    """查询中的年份：'1450-1485' 为闭区间，单个年份为 (y, y)；按起点排序并去重"""
    lo, hi = bounds
    found = set()
    rest = query
    for m in _INTERVAL.finditer(query):
        a, b = int(m.group(1)), int(m.group(2))
        if lo <= a <= b <= hi:
            found.add((a, b))
            rest = rest.replace(m.group(0), " ", 1)
    found.update((y, y) for y in find_year_markers(rest, bounds))
    return sorted(found)


class _Builder:
    """累积当前块的单元与词"""

    def __init__(self, max_words: int, bounds: Tuple[int, int]):
        self.max_words = max_words
        self.bounds = bounds
        self.chunks: List[Chunk] = []
        self.footnotes: List[Chunk] = []
        self.words: List[str] = []
        self.units: List[ContentUnit] = []
        self.markers: List[int] = []
        self.has_body = False
        self.last_marker: Optional[int] = None
        self.chapter: Optional[str] = None

    def flush(self):
        if not self.words:
            return
        if self.markers:
            year_range = (min(self.markers), max(self.markers))
        elif self.last_marker is not None:
            year_range = (self.last_marker, self.last_marker)
        else:
            year_range = None
        cid = chunk_id("content", len(self.chunks) + 1)
        self.chunks.append(Chunk(
            id=cid, kind="content", text=" ".join(self.words), year_range=year_range,
            chapter=self.chapter,
            page_span=(min(u.page_span[0] for u in self.units), max(u.page_span[1] for u in self.units)),
            embedding_id=cid,
            unit_ids=list(dict.fromkeys(u.id for u in self.units)),
        ))
        if self.markers:
            self.last_marker = self.markers[-1]
        self.words, self.units, self.markers, self.has_body = [], [], [], False

    def add_footnote(self, unit: ContentUnit):
        fid = chunk_id("footnote", len(self.footnotes) + 1)
        self.footnotes.append(Chunk(id=fid, kind="footnote", text=unit.text, chapter=self.chapter,
                                    page_span=unit.page_span, embedding_id=fid, unit_ids=[unit.id]))

    def add_content(self, unit: ContentUnit):
        words = unit.text.split()
        if not words:
            return
        heading = unit.category in (ElementCategory.TITLE, ElementCategory.HEADER)
        markers = find_year_markers(unit.text, self.bounds)
        if heading:
            self.flush()
            self.chapter = unit.text.strip()
        elif markers and (self.markers or self.has_body):
            # 章节标题后紧跟的纪年段落与标题同块
            self.flush()
        if self.words and len(self.words) + len(words) > self.max_words:
            self.flush()
        self.markers.extend(markers)
        for start in range(0, len(words), self.max_words):
            piece = words[start:start + self.max_words]
            if self.words and len(self.words) + len(piece) > self.max_words:
                self.flush()
            self.words.extend(piece)
            self.units.append(unit)
        self.has_body = self.has_body or not heading


def ingest(doc: DocumentRecord, max_words_per_chunk: int = DEFAULT_MAX_WORDS,
           year_bounds: Tuple[int, int] = YEAR_RANGE) -> List[Chunk]:
    """文档 -> 正文块 + 脚注块（正文块在前）"""
    if max_words_per_chunk < 1:
        raise ValueError(f"max_words_per_chunk must be >= 1, got {max_words_per_chunk}")
    builder = _Builder(max_words_per_chunk, year_bounds)
    for unit in doc.units:
        if unit.category == ElementCategory.FOOTNOTE:
            if unit.text.strip():
                builder.add_footnote(unit)
        else:
            builder.add_content(unit)
    builder.flush()
    logger.info(f"[Document ingested] | content_chunks = {len(builder.chunks)} | "
                f"footnote_chunks = {len(builder.footnotes)}")
    return builder.chunks + builder.footnotes
