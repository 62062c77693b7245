"""抽取阶段：页面图像 -> 经模式校验的 PageExtraction"""

from .prompt import build_prompt, build_refinement_prompt
from .parser import extract_payload, parse_output
from .paths import (
    ExtractionBatch, ExtractionPlan, ExtractionRequest, PageFailure, PageImage,
    call_backend, extract_document, extract_page, extract_page_hybrid,
)

__all__ = [
    'build_prompt', 'build_refinement_prompt',
    'extract_payload', 'parse_output',
    'ExtractionRequest', 'PageImage', 'PageFailure', 'ExtractionBatch', 'ExtractionPlan',
    'call_backend', 'extract_page', 'extract_page_hybrid', 'extract_document',
]
