"""精化阶段：页内校正、跨页续接、文档聚合"""

from .text import DEFAULT_QUOTE_MAP, TypographyRules, dehyphenate, normalise_typography
from .resolve import SENTENCE_FINAL, continuation_link, propagate_metadata, resolve_continuations
from .aggregate import aggregate, check_page, refine_document, unit_text

__all__ = [
    'DEFAULT_QUOTE_MAP', 'TypographyRules', 'dehyphenate', 'normalise_typography',
    'SENTENCE_FINAL', 'continuation_link', 'propagate_metadata', 'resolve_continuations',
    'aggregate', 'check_page', 'refine_document', 'unit_text',
]
