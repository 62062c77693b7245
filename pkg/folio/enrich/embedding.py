"""嵌入向量：后端返回的原始向量在接收时做 L2 归一化"""

from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import EmbeddingError
from ..llm import BaseEmbedder

NORM_TOLERANCE = 1e-6


class EmbeddingVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: List[float] = Field(..., min_length=1)
    normalised: bool = Field(True, description="是否为单位向量")

    @model_validator(mode="after")
    def _check_norm(self):
        if self.normalised:
            norm = float(np.linalg.norm(self.values))
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"vector flagged unit-normalised has norm {norm:.8f}")
        return self

    @property
    def dimension(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @classmethod
    def from_raw(cls, raw: Sequence[float]) -> "EmbeddingVector":
        return cls(values=l2_normalise(raw).tolist(), normalised=True)


def l2_normalise(raw: Sequence[float]) -> np.ndarray:
    """零向量定义为第 0 维上的单位向量"""
    vec = np.asarray(raw, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise EmbeddingError(f"embedding must be a non-empty 1-d vector, got shape {vec.shape}")
    norm = np.linalg.norm(vec)
    if norm == 0:
        unit = np.zeros_like(vec)
        unit[0] = 1.0
        return unit
    return vec / norm


async def embed(texts: Sequence[str], backend: BaseEmbedder) -> List[EmbeddingVector]:
    """每条文本一个单位向量；同一批次维度必须一致"""
    texts = list(texts)
    if not texts:
        return []
    raw = await backend.embed_texts(texts)
    if len(raw) != len(texts):
        raise EmbeddingError(f"backend returned {len(raw)} vectors for {len(texts)} texts",
                             backend_id=backend.backend_id)
    dims = {len(v) for v in raw}
    if len(dims) != 1:
        raise EmbeddingError(f"dimension mismatch within batch: {sorted(dims)}", backend_id=backend.backend_id)
    return [EmbeddingVector.from_raw(v) for v in raw]
