"""检索：按年份过滤的语义检索（附带脚注）与 MMR 重排的通用检索"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ..core.errors import ArtifactError, ValidationFailure
from ..enrich.embedding import EmbeddingVector, embed, l2_normalise
from ..enrich.index import VectorIndex
from ..llm import BaseEmbedder
from ..utils.logging import get_logger
from .ingest import YEAR_RANGE, Chunk, extract_years

CHUNKS_FILE = "chunks.json"
VECTORS_FILE = "vectors.jsonl"

logger = get_logger("rag")


class RetrievalConfig(BaseModel):
    """检索参数"""
    k_specific: int = Field(5, ge=1, description="具体问题返回的正文块数")
    k_general: int = Field(8, ge=1, description="通用问题返回的正文块数")
    pool: int = Field(32, ge=1, description="MMR 候选池大小")
    mmr_lambda: float = Field(0.5, ge=0.0, le=1.0, description="相关性与多样性的权衡")
    year_min: int = Field(YEAR_RANGE[0], description="年份识别下界")
    year_max: int = Field(YEAR_RANGE[1], description="年份识别上界")
    max_words_per_chunk: int = Field(1000, ge=1, description="切块词数预算")

    @property
    def year_bounds(self) -> Tuple[int, int]:
        return (self.year_min, self.year_max)


class RetrievedChunk(BaseModel):
    chunk: Chunk
    similarity: float
    footnotes: List[Chunk] = Field(default_factory=list)


class SearchResult(BaseModel):
    results: List[RetrievedChunk] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    def prompt_chunks(self) -> List[Chunk]:
        """放入提示词的块：每个结果后跟其脚注，去重"""
        seen, ordered = set(), []
        for r in self.results:
            for chunk in [r.chunk, *r.footnotes]:
                if chunk.id not in seen:
                    seen.add(chunk.id)
                    ordered.append(chunk)
        return ordered


class ChunkIndex:
    """检索块与其向量索引"""

    def __init__(self, chunks: Sequence[Chunk], index: VectorIndex):
        self.chunks: Dict[str, Chunk] = {c.id: c for c in chunks}
        self.index = index
        missing = [c.id for c in chunks if (c.embedding_id or c.id) not in index]
        if missing:
            raise ValidationFailure(f"chunks without vectors: {missing[:5]}")

    def chunk(self, chunk_id: str) -> Chunk:
        return self.chunks[chunk_id]

    def content(self) -> List[Chunk]:
        return [c for c in self.chunks.values() if c.kind == "content"]

    def footnotes_for(self, page_span: Tuple[int, int]) -> List[Chunk]:
        first, last = page_span
        return sorted((c for c in self.chunks.values()
                       if c.kind == "footnote" and first <= c.page_span[0] <= last),
                      key=lambda c: c.id)

    def save(self, directory: Union[str, Path]) -> List[Path]:
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
            chunks_path = directory / CHUNKS_FILE
            data = [c.model_dump(mode="json") for c in self.chunks.values()]
            chunks_path.write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"cannot write chunk store {directory}: {e}") from e
        return [chunks_path, self.index.save(directory / VECTORS_FILE)]

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "ChunkIndex":
        directory = Path(directory)
        try:
            data = json.loads((directory / CHUNKS_FILE).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ArtifactError(f"cannot read chunk store {directory}: {e}") from e
        return cls([Chunk.model_validate(c) for c in data], VectorIndex.load(directory / VECTORS_FILE))


async def build_chunk_index(chunks: Sequence[Chunk], embedder: BaseEmbedder,
                            dimension: Optional[int] = None) -> ChunkIndex:
    vectors = await embed([c.text for c in chunks], embedder)
    if dimension is None:
        dimension = vectors[0].dimension if vectors else getattr(embedder, "dimension", 1)
    index = VectorIndex(dimension)
    for chunk, vector in zip(chunks, vectors):
        index.add(chunk.embedding_id or chunk.id, vector, {
            "kind": chunk.kind,
            "year_range": list(chunk.year_range) if chunk.year_range else None,
            "page_span": list(chunk.page_span),
        })
    logger.info(f"[Index built] | chunks = {len(chunks)} | dimension = {dimension}")
    return ChunkIndex(chunks, index)


def _is_content(meta: Dict[str, Any]) -> bool:
    return meta.get("kind") == "content"


async def _embed_query(query: str, embedder: BaseEmbedder) -> EmbeddingVector:
    (vector,) = await embed([query], embedder)
    return vector


def search_specific_vector(query: str, vector: EmbeddingVector, chunk_index: ChunkIndex, k: int = 5,
                           year_bounds: Tuple[int, int] = YEAR_RANGE) -> SearchResult:
    years = extract_years(query, year_bounds)
    mode = "none"
    hits = []
    if years:
        def in_years(meta):
            yr = meta.get("year_range")
            return _is_content(meta) and yr is not None and any(a <= yr[1] and yr[0] <= b for a, b in years)
        hits = chunk_index.index.search(vector, k, where=in_years)
        mode = "year"
        if not hits:
            mode = "fallback"
    if not hits:
        hits = chunk_index.index.search(vector, k, where=_is_content)

    by_embedding = {c.embedding_id or c.id: c for c in chunk_index.chunks.values()}
    results = []
    for hit in hits:
        chunk = by_embedding[hit.id]
        results.append(RetrievedChunk(chunk=chunk, similarity=hit.similarity,
                                      footnotes=chunk_index.footnotes_for(chunk.page_span)))
    provenance = {"strategy": "year_filtered", "years": [list(y) for y in years], "filter": mode, "k": k}
    return SearchResult(results=results, provenance=provenance)


async def search_specific(query: str, chunk_index: ChunkIndex, embedder: BaseEmbedder, k: int = 5,
                          year_bounds: Tuple[int, int] = YEAR_RANGE) -> SearchResult:
    """
    只在年份区间与查询年份重叠的正文块中检索；查询无年份时不过滤。
    过滤后无候选时退回不过滤检索，并在 provenance.filter 中记为 fallback。
    每个结果附带其页码范围内的脚注块，脚注不占 k。
    """
    return search_specific_vector(query, await _embed_query(query, embedder), chunk_index, k, year_bounds)


def mmr_rerank(query_vec, candidates: Sequence[Tuple[str, Any]], k: int, lam: float = 0.5) -> List[str]:
    """
    最大边际相关性重排。

    每一步选择 lam * cos(q, d) - (1 - lam) * max_s cos(d, s) 最大的候选，
    第一步即纯相关性；候选按 id 排序，同分取 id 最小者。
    """
    if not 0.0 <= lam <= 1.0:
        raise ValidationFailure(f"lambda must be in [0, 1], got {lam}")
    if k < 1:
        raise ValidationFailure(f"k must be >= 1, got {k}")
    if not candidates:
        return []
    ordered = sorted(candidates, key=lambda c: c[0])
    ids = [c[0] for c in ordered]
    q = l2_normalise(query_vec.values if isinstance(query_vec, EmbeddingVector) else query_vec)
    vecs = np.stack([l2_normalise(v.values if isinstance(v, EmbeddingVector) else v) for _, v in ordered])
    relevance = vecs @ q
    pairwise = vecs @ vecs.T

    selected: List[int] = []
    remaining = np.ones(len(ids), dtype=bool)
    redundancy = np.full(len(ids), -np.inf)
    while len(selected) < k and remaining.any():
        if selected:
            scores = lam * relevance - (1.0 - lam) * redundancy
        else:
            scores = relevance.copy()
        scores[~remaining] = -np.inf
        pick = int(np.argmax(scores))
        selected.append(pick)
        remaining[pick] = False
        redundancy = np.maximum(redundancy, pairwise[pick])
    return [ids[i] for i in selected]


def search_general_vector(vector: EmbeddingVector, chunk_index: ChunkIndex, k: int = 8, pool: int = 32,
                          lam: float = 0.5) -> SearchResult:
    if pool < k:
        raise ValidationFailure(f"pool ({pool}) must be >= k ({k})")
    hits = chunk_index.index.search(vector, pool, where=_is_content)
    similarity = {h.id: h.similarity for h in hits}
    candidates = [(h.id, chunk_index.index.vector(h.id)) for h in hits]
    picked = mmr_rerank(vector, candidates, k, lam)
    by_embedding = {c.embedding_id or c.id: c for c in chunk_index.chunks.values()}
    results = [RetrievedChunk(chunk=by_embedding[i], similarity=similarity[i]) for i in picked]
    provenance = {"strategy": "mmr", "pool": pool, "lambda": lam, "k": k, "candidates": len(hits)}
    return SearchResult(results=results, provenance=provenance)


async def search_general(query: str, chunk_index: ChunkIndex, embedder: BaseEmbedder, k: int = 8,
                         pool: int = 32, lam: float = 0.5) -> SearchResult:
    """余弦前 pool 个正文块，再用 MMR 重排到 k 个"""
    return search_general_vector(await _embed_query(query, embedder), chunk_index, k, pool, lam)
