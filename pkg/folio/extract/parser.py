"""模型输出解析：去除 markdown 围栏与前后说明文字，按模式校验每个元素。"""

import json
import re
from typing import Any, List

from ..core.errors import OutputParseError, OutputValidationError
from ..core.modules import PageElement, PageExtraction
from ..core.schema import ExtractionSchema, Violation, validate
from ..llm.base import RawModelOutput

FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n?(.*?)```", re.S)


def extract_payload(text: str) -> Any:
    """从模型文本中取出第一个完整的 JSON 值"""
    match = FENCE_RE.search(text)
    body = (match.group(1) if match else text).strip()
    decoder = json.JSONDecoder()
    for pos, ch in enumerate(body):
        if ch not in "[{":
            continue
        try:
            value, _ = decoder.raw_decode(body, pos)
            return value
        except json.JSONDecodeError:
            continue
    raise OutputParseError(f"no structured payload found in model output: {text[:80]!r}")


def _element_list(payload: Any) -> List[Any]:
    if isinstance(payload, list):
        return payload
    if isinstance(payload, dict) and isinstance(payload.get("elements"), list):
        return payload["elements"]
    raise OutputParseError("payload is neither an element array nor an object with an 'elements' array")


def parse_output(raw: RawModelOutput, schema: ExtractionSchema, page_number: int,
                 source_image_id: str) -> PageExtraction:
    """解析并校验一页输出，元素保持输出顺序（阅读顺序）。

    Raises:
        OutputParseError: 无法解析出结构化载荷
        OutputValidationError: 存在违规，路径带元素序号
    """
    instances = _element_list(extract_payload(raw.text))
    violations: List[Violation] = []
    elements: List[PageElement] = []
    for i, instance in enumerate(instances):
        prefix = f"elements[{i}]"
        found = validate(instance, schema)
        if found:
            violations.extend(
                Violation(path=f"{prefix}.{v.path}" if v.path else prefix, message=v.message) for v in found
            )
            continue
        try:
            elements.append(PageElement.from_instance(instance))
        except (KeyError, ValueError) as e:
            violations.append(Violation(path=prefix, message=f"cannot build element: {e}"))
    if violations:
        detail = "; ".join(str(v) for v in violations[:5])
        raise OutputValidationError(
            f"page {page_number}: {len(violations)} violation(s): {detail}", violations)
    return PageExtraction(page_number=page_number, source_image_id=source_image_id, elements=elements)
