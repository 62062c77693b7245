"""富集阶段编排：语义推断（可选）-> 实体链接"""

import asyncio
from typing import List, Optional, Sequence

from ..core.modules import ContentUnit, DocumentRecord
from ..core.schema import ExtractionSchema
from ..core.errors import ConfigError
from ..llm import BaseLLM
from ..utils.logging import get_logger, log_exception
from .inference import apply_annotations, infer_semantics
from .linking import LINK_THRESHOLD, GazetteerEntry, RemoteKBClient, link_entities

logger = get_logger("enrich")


@log_exception
async def enrich_document(doc: DocumentRecord, gazetteer: Sequence[GazetteerEntry] = (),
                          kb_client: Optional[RemoteKBClient] = None, llm: Optional[BaseLLM] = None,
                          task_prompt: Optional[str] = None, schema: Optional[ExtractionSchema] = None,
                          threshold: float = LINK_THRESHOLD, max_in_flight: int = 8) -> DocumentRecord:
    """逐单元富集，单元顺序不变"""
    if llm is not None and (not task_prompt or schema is None):
        raise ConfigError("semantic inference requires a task prompt and a schema")
    semaphore = asyncio.Semaphore(max_in_flight)

    async def _one(unit: ContentUnit) -> ContentUnit:
        async with semaphore:
            if llm is not None:
                unit = apply_annotations(unit, await infer_semantics(unit, task_prompt, llm, schema))
            if kb_client is not None:
                result = await kb_client.link(unit.entities, threshold)
            else:
                result = link_entities(unit.entities, gazetteer, threshold)
            return unit.model_copy(update={"linked_entities": result.linked, "unlinked_entities": result.unlinked})

    units: List[ContentUnit] = list(await asyncio.gather(*(_one(u) for u in doc.units)))
    linked = sum(len(u.linked_entities) for u in units)
    unlinked = sum(len(u.unlinked_entities) for u in units)
    mentions = sum(len(u.entities) for u in units)
    logger.info(f"[Document enriched] | units = {len(units)} | mentions = {mentions} | linked = {linked} "
                f"| unlinked = {unlinked}")
    return doc.model_copy(update={"units": units})
