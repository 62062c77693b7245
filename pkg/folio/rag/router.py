"""基于原型的查询路由：与两组示例问题的最大余弦相似度比较"""

from enum import Enum
from typing import Any, Dict, List, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import ConfigError
from ..enrich.embedding import EmbeddingVector, embed
from ..llm import BaseEmbedder


class QueryClass(str, Enum):
    SPECIFIC = "specific"
    GENERAL = "general"


class Prototype(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    vector: EmbeddingVector


class RouterModel(BaseModel):
    """
    specific：针对事件、人物、日期的问题；general：主题、风格、解释性问题。

    s >= g + margin 且 s > g 时判为 specific；s == g 时走 general（多样化检索）。
    """
    model_config = ConfigDict(frozen=True)

    specific_prototypes: List[Prototype] = Field(..., min_length=1)
    general_prototypes: List[Prototype] = Field(..., min_length=1)
    margin: float = Field(0.0, description="判为 specific 所需的领先幅度")

    @model_validator(mode="after")
    def _check_dims(self):
        dims = {p.vector.dimension for p in self.specific_prototypes + self.general_prototypes}
        if len(dims) != 1:
            raise ValueError(f"router prototypes have mixed dimensions: {sorted(dims)}")
        if not all(p.vector.normalised for p in self.specific_prototypes + self.general_prototypes):
            raise ValueError("router prototype vectors must be unit-normalised")
        return self

    @classmethod
    async def build(cls, data: Mapping[str, Any], embedder: BaseEmbedder) -> "RouterModel":
        """data: {"specific": [问题...], "general": [问题...], "margin": 0.0}"""
        specific = list(data.get("specific") or [])
        general = list(data.get("general") or [])
        if not specific or not general:
            raise ConfigError("router prototypes need at least one 'specific' and one 'general' query")
        vectors = await embed(specific + general, embedder)
        protos = [Prototype(text=t, vector=v) for t, v in zip(specific + general, vectors)]
        return cls(specific_prototypes=protos[:len(specific)], general_prototypes=protos[len(specific):],
                   margin=float(data.get("margin", 0.0)))

    def scores(self, query: EmbeddingVector) -> Tuple[float, float]:
        q = query.as_array()
        s = max(float(np.dot(p.vector.as_array(), q)) for p in self.specific_prototypes)
        g = max(float(np.dot(p.vector.as_array(), q)) for p in self.general_prototypes)
        return s, g

    def classify(self, query: EmbeddingVector) -> QueryClass:
        s, g = self.scores(query)
        if s > g and s >= g + self.margin:
            return QueryClass.SPECIFIC
        return QueryClass.GENERAL


async def route_with_scores(query: str, router: RouterModel, embedder: BaseEmbedder) -> Dict[str, Any]:
    (vector,) = await embed([query], embedder)
    s, g = router.scores(vector)
    return {"route": router.classify(vector), "specific_score": s, "general_score": g, "vector": vector}


async def route(query: str, router: RouterModel, embedder: BaseEmbedder) -> QueryClass:
    return (await route_with_scores(query, router, embedder))["route"]
