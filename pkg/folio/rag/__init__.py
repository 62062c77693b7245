"""检索增强问答：切块、路由、检索与提示词组装"""

from .ingest import YEAR_RANGE, Chunk, extract_years, find_year_markers, ingest
from .router import Prototype, QueryClass, RouterModel, route, route_with_scores
from .search import (
    ChunkIndex, RetrievalConfig, RetrievedChunk, SearchResult, build_chunk_index, mmr_rerank,
    search_general, search_specific,
)
from .answer import Answer, answer, assemble_prompt, chunk_label, page_label

__all__ = [
    'YEAR_RANGE', 'Chunk', 'extract_years', 'find_year_markers', 'ingest',
    'Prototype', 'QueryClass', 'RouterModel', 'route', 'route_with_scores',
    'ChunkIndex', 'RetrievalConfig', 'RetrievedChunk', 'SearchResult', 'build_chunk_index',
    'mmr_rerank', 'search_general', 'search_specific',
    'Answer', 'answer', 'assemble_prompt', 'chunk_label', 'page_label',
]
