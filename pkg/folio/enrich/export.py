"""
文档导出工具

将 DocumentRecord 转换为 TEI XML、CSV 与 JSON lines，
JSONL 可以重新导入为内容单元。
"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from lxml import etree

from ..core.errors import ArtifactError, ValidationFailure
from ..core.modules import METADATA_FIELDS, ContentUnit, DocumentRecord, ElementCategory
from ..utils.logging import get_logger

TEI_NS = "http://www.tei-c.org/ns/1.0"
XML_NS = "http://www.w3.org/XML/1998/namespace"
EXPORT_FORMATS = ("tei", "csv", "jsonl")
EXPORT_FILES = {"tei": "document.tei.xml", "csv": "units.csv", "jsonl": "units.jsonl"}

logger = get_logger("export")


def _tei(tag: str) -> str:
    return f"{{{TEI_NS}}}{tag}"


def _sub(parent, tag: str, text: Optional[str] = None, **attrs):
    node = etree.SubElement(parent, _tei(tag), {k: str(v) for k, v in attrs.items()})
    if text:
        node.text = text
    return node


def _unit_node(parent, unit: ContentUnit):
    """单元 -> TEI 元素：正文 p，脚注 note，标题/页眉 head，图表为带类型的占位"""
    if unit.category == ElementCategory.TEXT:
        node = _sub(parent, "p", unit.text)
    elif unit.category == ElementCategory.FOOTNOTE:
        node = _sub(parent, "note", unit.text, place="foot")
    elif unit.category in (ElementCategory.TITLE, ElementCategory.HEADER):
        node = _sub(parent, "head", unit.text, type=unit.category.value)
    else:
        node = _sub(parent, "figure", type=unit.category.value)
        if unit.text:
            _sub(node, "figDesc", unit.text)
    node.set(f"{{{XML_NS}}}id", unit.id)
    first, last = unit.page_span
    if last != first:
        node.set("corresp", f"#page-{last}")
    if unit.linked_entities:
        node.set("ana", " ".join(e.kb_id for e in unit.linked_entities))
    return node


def export_tei(doc: DocumentRecord) -> str:
    """最小 TEI：头部写来源元数据，正文每页一个 div，单元放在首个来源页"""
    root = etree.Element(_tei("TEI"), nsmap={None: TEI_NS})
    file_desc = _sub(_sub(root, "teiHeader"), "fileDesc")
    _sub(_sub(file_desc, "titleStmt"), "title", doc.title or "Untitled")
    _sub(_sub(file_desc, "publicationStmt"), "p", "Exported by folio")
    bibl = _sub(_sub(file_desc, "sourceDesc"), "bibl")
    for key in sorted(doc.source):
        _sub(bibl, "note", doc.source[key], type=key)

    body = _sub(_sub(root, "text"), "body")
    divs: Dict[int, Any] = {}
    for page in doc.pages:
        div = _sub(body, "div", type="page", n=page.page_number)
        div.set(f"{{{XML_NS}}}id", f"page-{page.page_number}")
        divs[page.page_number] = div
    for unit in doc.units:
        first = unit.page_span[0]
        if first not in divs:
            divs[first] = _sub(body, "div", type="page", n=first)
        _unit_node(divs[first], unit)

    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8").decode("utf-8")


def _metadata_columns(units: Sequence[ContentUnit]) -> List[str]:
    extra = sorted({k for u in units for k in u.metadata} - set(METADATA_FIELDS))
    return list(METADATA_FIELDS) + extra


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False)


def export_csv(doc: DocumentRecord) -> str:
    """每个单元一行；元数据展开为列，链接实体 ID 以分号连接"""
    meta_cols = _metadata_columns(doc.units)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "category", "page_start", "page_end", "text", *meta_cols, "linked_entities"])
    for unit in doc.units:
        first, last = unit.page_span
        writer.writerow([
            unit.id, unit.category.value, first, last, unit.text,
            *(_cell(unit.metadata.get(c)) for c in meta_cols),
            ";".join(e.kb_id for e in unit.linked_entities),
        ])
    return buffer.getvalue()


def unit_record(unit: ContentUnit) -> Dict[str, Any]:
    record = unit.model_dump(mode="json")
    record["page_span"] = list(unit.page_span)
    record["linked_entity_ids"] = [e.kb_id for e in unit.linked_entities]
    return record


def export_jsonl(doc: DocumentRecord) -> str:
    return "".join(json.dumps(unit_record(u), ensure_ascii=False) + "\n" for u in doc.units)


def import_jsonl(text: str) -> List[ContentUnit]:
    """export_jsonl 的逆操作，派生字段被忽略"""
    units = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            record.pop("page_span", None)
            record.pop("linked_entity_ids", None)
            units.append(ContentUnit.model_validate(record))
        except ValueError as e:
            raise ValidationFailure(f"line {lineno}: invalid unit record: {e}") from e
    return units


EXPORTERS = {"tei": export_tei, "csv": export_csv, "jsonl": export_jsonl}


class DocumentExporter:
    """把文档记录按选定格式写入导出目录"""

    def __init__(self, output_dir: Union[str, Path], formats: Iterable[str] = EXPORT_FORMATS):
        self.output_dir = Path(output_dir)
        self.formats = list(formats)
        unknown = [f for f in self.formats if f not in EXPORTERS]
        if unknown:
            raise ValidationFailure(f"unknown export formats: {unknown}")

    def render(self, doc: DocumentRecord) -> Dict[str, str]:
        """文件名 -> 文本"""
        return {EXPORT_FILES[fmt]: EXPORTERS[fmt](doc) for fmt in self.formats}

    def export(self, doc: DocumentRecord) -> List[Path]:
        written = []
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            for name, text in self.render(doc).items():
                path = self.output_dir / name
                path.write_text(text, encoding="utf-8")
                written.append(path)
        except OSError as e:
            raise ArtifactError(f"export to {self.output_dir} failed: {e}") from e
        logger.info(f"[Document exported] | dir = {self.output_dir} | formats = {','.join(self.formats)}")
        return written
