"""富集阶段：实体链接、语义推断、嵌入、向量索引与导出"""

from .linking import (
    LINK_THRESHOLD, GazetteerEntry, LinkingResult, RemoteKBClient, link_entities, load_gazetteer, similarity,
)
from .inference import apply_annotations, check_annotations, infer_semantics
from .embedding import EmbeddingVector, embed, l2_normalise
from .index import SearchHit, VectorIndex
from .export import (
    EXPORT_FILES, EXPORT_FORMATS, DocumentExporter, export_csv, export_jsonl, export_tei, import_jsonl,
)
from .document import enrich_document

__all__ = [
    'LINK_THRESHOLD', 'GazetteerEntry', 'LinkingResult', 'RemoteKBClient', 'link_entities',
    'load_gazetteer', 'similarity',
    'apply_annotations', 'check_annotations', 'infer_semantics',
    'EmbeddingVector', 'embed', 'l2_normalise',
    'SearchHit', 'VectorIndex',
    'EXPORT_FILES', 'EXPORT_FORMATS', 'DocumentExporter', 'export_csv', 'export_jsonl', 'export_tei',
    'import_jsonl', 'enrich_document',
]
