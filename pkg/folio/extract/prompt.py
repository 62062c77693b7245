"""抽取提示词构造。输出只依赖输入，相同输入得到逐字节相同的提示词。"""

import json
from typing import Optional

from ..core.modules import PageExtraction
from ..core.schema import ExtractionSchema, serialise_schema

EXTRACTION_DIRECTIVE = (
    "Detect every layout element on the page image and transcribe it in reading order. "
    "Respond with a JSON array only: one object per element, each object conforming to the JSON Schema below. "
    "Do not add explanations, comments or markdown."
)

REFINEMENT_DIRECTIVE = (
    "You receive the layout elements already extracted from one page. "
    "Refine and enrich them according to the instructions. "
    "Keep every element, in the same order and with the same category, unless the instructions explicitly allow restructuring. "
    "Respond with a JSON array only, each object conforming to the JSON Schema below. "
    "Do not add explanations, comments or markdown."
)


def build_prompt(schema: ExtractionSchema, instructions: Optional[str] = None) -> str:
    """模式 + 用户指令 + 固定的结构化输出指令"""
    parts = [EXTRACTION_DIRECTIVE, "JSON Schema:\n" + serialise_schema(schema)]
    if instructions and instructions.strip():
        parts.append("Instructions:\n" + instructions.strip())
    return "\n\n".join(parts)


def build_refinement_prompt(schema: ExtractionSchema, instructions: Optional[str],
                            phase1: PageExtraction) -> str:
    """混合路径第二阶段的纯文本提示词，内嵌第一阶段的元素"""
    parts = [REFINEMENT_DIRECTIVE, "JSON Schema:\n" + serialise_schema(schema)]
    if instructions and instructions.strip():
        parts.append("Instructions:\n" + instructions.strip())
    parts.append("Elements:\n" + json.dumps(phase1.to_instances(), ensure_ascii=False))
    return "\n\n".join(parts)
