"""提示词组装与带引用的回答生成"""

from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from ..core.errors import AnswerError, BackendError
from ..llm import BaseEmbedder, BaseLLM
from ..utils.id_utils import query_key
from ..utils.logging import get_logger, log_exception
from .ingest import Chunk
from .router import QueryClass, RouterModel, route_with_scores
from .search import ChunkIndex, RetrievalConfig, search_general_vector, search_specific_vector

GROUNDING_DIRECTIVE = (
    "Answer the question using only the passages below. "
    "Cite passages by their bracketed id. "
    "If the passages do not contain enough information, say so instead of guessing."
)
LANGUAGE_DIRECTIVE = "Answer in the same language as the question."

logger = get_logger("rag")


def page_label(page_span) -> str:
    first, last = page_span
    return f"p. {first}" if first == last else f"pp. {first}–{last}"


def year_label(year_range) -> str:
    if year_range is None:
        return "undated"
    start, end = year_range
    return f"{start}" if start == end else f"{start}–{end}"


def chunk_label(chunk: Chunk) -> str:
    parts = [f"[{chunk.id}]", page_label(chunk.page_span), f"years {year_label(chunk.year_range)}"]
    if chunk.kind == "footnote":
        parts.append("footnote")
    return " | ".join(parts)


def assemble_prompt(query: str, chunks: Sequence[Chunk]) -> str:
    """指令 + 带页码与年份标签的段落 + 问题；相同输入得到相同提示词"""
    sections = [GROUNDING_DIRECTIVE, LANGUAGE_DIRECTIVE]
    if chunks:
        sections.append("Passages:\n\n" + "\n\n".join(f"{chunk_label(c)}\n{c.text}" for c in chunks))
    else:
        sections.append("Passages:\n\n(none)")
    sections.append(f"Question: {query}")
    return "\n\n".join(sections)


class Answer(BaseModel):
    response: str
    citations: List[str] = Field(default_factory=list, description="放入提示词的全部块 ID")
    route: QueryClass
    provenance: Dict[str, Any] = Field(default_factory=dict)
    prompt: str = ""

    def public(self) -> Dict[str, Any]:
        """CLI 输出的 JSON 形式"""
        return self.model_dump(mode="json", include={"response", "citations", "route", "provenance"})


@log_exception
async def answer(query: str, chunk_index: ChunkIndex, router: RouterModel, llm: BaseLLM,
                 embedder: BaseEmbedder, config: Optional[RetrievalConfig] = None) -> Answer:
    """路由 -> 检索 -> 组装提示词 -> 一次生成调用"""
    config = config or RetrievalConfig()
    decision = await route_with_scores(query, router, embedder)
    vector = decision["vector"]
    if decision["route"] == QueryClass.SPECIFIC:
        result = search_specific_vector(query, vector, chunk_index, config.k_specific, config.year_bounds)
    else:
        result = search_general_vector(vector, chunk_index, config.k_general, config.pool, config.mmr_lambda)
    chunks = result.prompt_chunks()
    prompt = assemble_prompt(query, chunks)
    provenance = dict(result.provenance)
    provenance["router_scores"] = {"specific": decision["specific_score"], "general": decision["general_score"]}

    try:
        raw = await llm.generate_response(prompt, key=query_key(query))
    except BackendError as e:
        raise AnswerError(f"answer generation failed: {e}", prompt=prompt, backend_id=e.backend_id) from e

    logger.info(f"[Query answered] | route = {decision['route'].value} | chunks = {len(chunks)} | "
                f"latency_ms = {raw.latency_ms:.0f}")
    return Answer(response=raw.text, citations=[c.id for c in chunks], route=decision["route"],
                  provenance=provenance, prompt=prompt)
