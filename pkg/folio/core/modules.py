"""文档模型：版面元素、页面抽取结果、内容单元与聚合后的文档记录。"""

from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# PageElement 上有专属字段的模式属性，其余声明字段进入 extras
CORE_FIELDS = ("bbox", "category", "text", "speaker", "date", "place", "entities")
METADATA_FIELDS = ("speaker", "date", "place")


class ElementCategory(str, Enum):
    """版面元素类别（封闭集合）"""
    TITLE = "title"
    TEXT = "text"
    HEADER = "header"
    FOOTNOTE = "footnote"
    FIGURE = "figure"
    TABLE = "table"


# 跨页续接判断时跳过的“浮动”元素
FLOATING_CATEGORIES = frozenset({ElementCategory.FOOTNOTE, ElementCategory.FIGURE, ElementCategory.TABLE})


class BBox(BaseModel):
    """页面图像坐标系下的矩形框，右/下边界不包含在内。"""
    model_config = ConfigDict(frozen=True)

    x0: int = Field(..., ge=0, description="左边界")
    y0: int = Field(..., ge=0, description="上边界")
    x1: int = Field(..., ge=0, description="右边界（不含）")
    y1: int = Field(..., ge=0, description="下边界（不含）")

    @model_validator(mode="after")
    def _check_order(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"bbox must satisfy x0 < x1 and y0 < y1, got {self.as_list()}")
        return self

    @classmethod
    def from_list(cls, values) -> "BBox":
        if len(values) != 4:
            raise ValueError(f"bbox needs 4 integers, got {len(values)}")
        x0, y0, x1, y1 = (int(v) for v in values)
        return cls(x0=x0, y0=y0, x1=x1, y1=y1)

    def as_list(self) -> List[int]:
        return [self.x0, self.y0, self.x1, self.y1]

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


class EntityMention(BaseModel):
    """文本中的实体提及，span 为所属文本中的字符区间 [start, end)。"""
    model_config = ConfigDict(frozen=True)

    surface: str = Field(..., min_length=1, description="提及原文")
    entity_type: Literal["person", "institution", "place"] = Field(..., description="实体类型")
    span: Optional[Tuple[int, int]] = Field(None, description="字符区间；提及不是文本子串时为空")

    @field_validator("span")
    @classmethod
    def _check_span(cls, span):
        if span is not None and not (0 <= span[0] < span[1]):
            raise ValueError(f"invalid span {span}")
        return span

    def located_in(self, text: str) -> "EntityMention":
        """在 text 中定位 surface（首次出现），返回带 span 的副本。"""
        start = text.find(self.surface)
        span = (start, start + len(self.surface)) if start >= 0 else None
        return self.model_copy(update={"span": span})

    def to_instance(self) -> Dict[str, str]:
        return {"mention": self.surface, "type": self.entity_type}


class LinkedEntity(BaseModel):
    """链接到知识库规范标识符的实体"""
    model_config = ConfigDict(frozen=True)

    mention: EntityMention
    kb_id: str = Field(..., min_length=1, description="知识库标识符")
    kb_label: str = Field(..., description="知识库标签")
    score: float = Field(..., ge=0.0, le=1.0, description="相似度得分")


class PageElement(BaseModel):
    """一个检测到的版面元素"""
    model_config = ConfigDict(frozen=True)

    bbox: BBox
    category: ElementCategory
    text: str = Field("", description="转写文本，图像元素可为空")
    speaker: Optional[str] = None
    date: Optional[str] = None
    place: Optional[str] = None
    entities: List[EntityMention] = Field(default_factory=list)
    extras: Dict[str, Any] = Field(default_factory=dict, description="模式中声明的其他字段")

    @classmethod
    def from_instance(cls, instance: Dict[str, Any]) -> "PageElement":
        """由已通过模式校验的实例构造元素。"""
        text = instance.get("text", "") or ""
        entities = [
            EntityMention(surface=e["mention"], entity_type=e["type"]).located_in(text)
            for e in instance.get("entities", []) or []
        ]
        return cls(
            bbox=BBox.from_list(instance["bbox"]),
            category=ElementCategory(instance["category"]),
            text=text,
            speaker=instance.get("speaker"),
            date=instance.get("date"),
            place=instance.get("place"),
            entities=entities,
            extras={k: v for k, v in instance.items() if k not in CORE_FIELDS},
        )

    def to_instance(self) -> Dict[str, Any]:
        """序列化为模式实例（与 from_instance 互逆）。"""
        data: Dict[str, Any] = {
            "bbox": self.bbox.as_list(),
            "category": self.category.value,
            "text": self.text,
        }
        for name in METADATA_FIELDS:
            value = getattr(self, name)
            if value is not None:
                data[name] = value
        if self.entities:
            data["entities"] = [e.to_instance() for e in self.entities]
        data.update(self.extras)
        return data


class PageExtraction(BaseModel):
    """单页抽取结果，elements 按阅读顺序排列"""
    model_config = ConfigDict(frozen=True)

    page_number: int = Field(..., ge=1, description="从 1 开始的页码")
    source_image_id: str = Field(..., description="来源图像标识")
    elements: List[PageElement] = Field(default_factory=list)

    def to_instances(self) -> List[Dict[str, Any]]:
        return [e.to_instance() for e in self.elements]

    @property
    def text(self) -> str:
        """页面全文（元素文本按阅读顺序以换行连接）"""
        return "\n".join(e.text for e in self.elements if e.text)


class ElementRef(BaseModel):
    """指向某页某个元素的引用"""
    model_config = ConfigDict(frozen=True)

    page_number: int = Field(..., ge=1)
    index: int = Field(..., ge=0)

    def key(self) -> Tuple[int, int]:
        return (self.page_number, self.index)


class MergeLink(BaseModel):
    """跨页续接链接：第 i 页末尾元素 -> 第 i+1 页开头元素"""
    model_config = ConfigDict(frozen=True)

    source: ElementRef
    target: ElementRef
    hyphenated: bool = Field(False, description="前一段以连字符结尾")


class ContentUnit(BaseModel):
    """合并后的内容单元，保留来源以便引用页码"""
    model_config = ConfigDict(frozen=True)

    id: str
    category: ElementCategory
    text: str
    sources: List[ElementRef] = Field(..., min_length=1)
    metadata: Dict[str, Any] = Field(default_factory=dict)
    entities: List[EntityMention] = Field(default_factory=list)
    linked_entities: List[LinkedEntity] = Field(default_factory=list)
    unlinked_entities: List[EntityMention] = Field(default_factory=list, description="低于阈值、未能链接的提及")

    @field_validator("sources")
    @classmethod
    def _check_sources(cls, sources):
        keys = [s.key() for s in sources]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            raise ValueError("sources must be strictly ordered by (page, index)")
        return sources

    @property
    def page_span(self) -> Tuple[int, int]:
        return (self.sources[0].page_number, self.sources[-1].page_number)


class DocumentRecord(BaseModel):
    """聚合后的整份文档，原始页面与内容单元并存"""
    model_config = ConfigDict(frozen=True)

    title: str = ""
    source: Dict[str, str] = Field(default_factory=dict, description="来源元数据")
    pages: List[PageExtraction] = Field(default_factory=list)
    units: List[ContentUnit] = Field(default_factory=list)

    @field_validator("pages")
    @classmethod
    def _check_pages(cls, pages):
        numbers = [p.page_number for p in pages]
        if any(a >= b for a, b in zip(numbers, numbers[1:])):
            raise ValueError("pages must be sorted strictly increasing by page_number")
        return pages

    @model_validator(mode="after")
    def _check_unit_sources(self):
        if not self.pages:
            return self
        sizes = {p.page_number: len(p.elements) for p in self.pages}
        for unit in self.units:
            for ref in unit.sources:
                if ref.index >= sizes.get(ref.page_number, 0):
                    raise ValueError(f"unit {unit.id} references missing element {ref.key()}")
        return self
