"""
实体链接：提及 -> 知识库规范标识符。

默认使用本地 gazetteer 文件，RemoteKBClient 从 HTTP 查询服务取候选，两者打分规则相同。
"""

from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Union

import aiohttp
from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import ArtifactError, BackendError, ConfigError
from ..core.modules import EntityMention, LinkedEntity
from ..evaluate.metrics import levenshtein
from ..utils.logging import get_logger

LINK_THRESHOLD = 0.85
ENTITY_TYPES = ("person", "institution", "place")

logger = get_logger("enrich")


class GazetteerEntry(BaseModel):
    """规范文件中的一条记录"""
    model_config = ConfigDict(frozen=True)

    kb_id: str = Field(..., min_length=1)
    entity_type: Literal["person", "institution", "place"]
    label: str
    aliases: List[str] = Field(default_factory=list)

    def names(self) -> List[str]:
        return [self.label, *self.aliases]


class LinkingResult(BaseModel):
    linked: List[LinkedEntity] = Field(default_factory=list)
    unlinked: List[EntityMention] = Field(default_factory=list)


def load_gazetteer(path: Union[str, Path]) -> List[GazetteerEntry]:
    """读取制表符分隔文件：kb_id, type, label, aliases...；忽略空行和 # 注释"""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ArtifactError(f"cannot read gazetteer {path}: {e}") from e
    entries = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 3:
            raise ConfigError(f"{path}:{lineno}: expected at least 3 tab-separated columns")
        kb_id, entity_type, label, *aliases = (c.strip() for c in cols)
        if entity_type not in ENTITY_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown entity type '{entity_type}'")
        entries.append(GazetteerEntry(kb_id=kb_id, entity_type=entity_type, label=label,
                                      aliases=[a for a in aliases if a]))
    logger.info(f"[Gazetteer loaded] | path = {path} | entries = {len(entries)}")
    return entries


def similarity(a: str, b: str) -> float:
    """1 - 编辑距离 / 较长串长度，比较前 casefold"""
    a, b = a.casefold(), b.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def best_candidate(mention: EntityMention, gazetteer: Iterable[GazetteerEntry]):
    """同类型候选中得分最高者；同分取 kb_id 最小者"""
    best = None
    for entry in gazetteer:
        if entry.entity_type != mention.entity_type:
            continue
        score = max(similarity(mention.surface, name) for name in entry.names())
        if best is None or score > best[1] or (score == best[1] and entry.kb_id < best[0].kb_id):
            best = (entry, score)
    return best


def link_entities(mentions: Sequence[EntityMention], gazetteer: Sequence[GazetteerEntry],
                  threshold: float = LINK_THRESHOLD) -> LinkingResult:
    result = LinkingResult()
    for mention in mentions:
        best = best_candidate(mention, gazetteer)
        if best is not None and best[1] >= threshold:
            entry, score = best
            result.linked.append(LinkedEntity(mention=mention, kb_id=entry.kb_id,
                                              kb_label=entry.label, score=score))
        else:
            result.unlinked.append(mention)
    return result


class RemoteKBClient:
    """
    远程知识库查询客户端。

    GET {endpoint}?query=<surface>&type=<entity_type>，响应
    {"candidates": [{"kb_id", "label", "type", "aliases"}]}。
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, session: Optional[aiohttp.ClientSession] = None):
        self.endpoint = endpoint
        self.timeout = aiohttp.ClientTimeout(total=timeout)
        self._session = session
        self._cache: Dict[tuple, List[GazetteerEntry]] = {}

    async def candidates(self, mention: EntityMention) -> List[GazetteerEntry]:
        key = (mention.surface, mention.entity_type)
        if key in self._cache:
            return self._cache[key]
        params = {"query": mention.surface, "type": mention.entity_type}
        session = self._session or aiohttp.ClientSession(timeout=self.timeout)
        try:
            async with session.get(self.endpoint, params=params) as response:
                if response.status != 200:
                    raise BackendError(f"knowledge base lookup returned status {response.status}",
                                       backend_id=self.endpoint, attempts=1)
                data = await response.json()
        except aiohttp.ClientError as e:
            raise BackendError(f"knowledge base lookup failed: {e}", backend_id=self.endpoint, attempts=1) from e
        finally:
            if self._session is None:
                await session.close()
        entries = [
            GazetteerEntry(kb_id=c["kb_id"], entity_type=c.get("type", mention.entity_type),
                           label=c["label"], aliases=c.get("aliases", []))
            for c in data.get("candidates", [])
        ]
        self._cache[key] = entries
        return entries

    async def link(self, mentions: Sequence[EntityMention], threshold: float = LINK_THRESHOLD) -> LinkingResult:
        result = LinkingResult()
        for mention in mentions:
            partial = link_entities([mention], await self.candidates(mention), threshold)
            result.linked.extend(partial.linked)
            result.unlinked.extend(partial.unlinked)
        return result
