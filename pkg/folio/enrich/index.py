"""
穷举扫描的余弦向量索引。

所有向量为单位向量，余弦即点积。检索可并发，写入加锁。
持久化为 JSON lines：首行 {"dimension", "count"}，其后每行一个条目，可追加写入。
"""

import json
import threading
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from ..core.errors import ArtifactError, ValidationFailure
from ..utils.logging import get_logger, warn_once
from .embedding import EmbeddingVector, l2_normalise

MetadataFilter = Callable[[Dict[str, Any]], bool]
VectorLike = Union[EmbeddingVector, Sequence[float], np.ndarray]

logger = get_logger("index")


class SearchHit(BaseModel):
    id: str
    similarity: float


def _unit(vector: VectorLike) -> np.ndarray:
    if isinstance(vector, EmbeddingVector):
        return vector.as_array() if vector.normalised else l2_normalise(vector.values)
    return l2_normalise(vector)


class VectorIndex:
    """固定维度的向量索引"""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValidationFailure(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self._ids: List[str] = []
        self._positions: Dict[str, int] = {}
        self._metadata: List[Dict[str, Any]] = []
        self._buffer = np.zeros((16, dimension), dtype=np.float64)
        self._size = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self._size

    def _snapshot(self):
        n = self._size
        return self._ids[:n], self._buffer[:n], self._metadata[:n]

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._positions

    @property
    def ids(self) -> List[str]:
        return self._ids[: self._size]

    def vector(self, entry_id: str) -> np.ndarray:
        return self._buffer[self._positions[entry_id]].copy()

    def metadata(self, entry_id: str) -> Dict[str, Any]:
        return dict(self._metadata[self._positions[entry_id]])

    def add(self, entry_id: str, vector: VectorLike, metadata: Optional[Dict[str, Any]] = None) -> "VectorIndex":
        """
        Raises:
            ValidationFailure: ID 重复或维度不符
        """
        return self._insert(entry_id, _unit(vector), metadata)

    def _insert(self, entry_id: str, unit: np.ndarray, metadata: Optional[Dict[str, Any]]) -> "VectorIndex":
        if unit.shape != (self.dimension,):
            raise ValidationFailure(f"dimension mismatch: index has {self.dimension}, vector has shape {unit.shape}")
        with self._lock:
            if entry_id in self._positions:
                raise ValidationFailure(f"duplicate index id '{entry_id}'")
            if self._size == self._buffer.shape[0]:
                grown = np.zeros((2 * self._size, self.dimension), dtype=np.float64)
                grown[: self._size] = self._buffer
                self._buffer = grown
            self._buffer[self._size] = unit
            self._positions[entry_id] = self._size
            self._ids.append(entry_id)
            self._metadata.append(dict(metadata or {}))
            # 最后更新计数，检索方按计数取快照
            self._size += 1
        return self

    def similarities(self, query: VectorLike) -> Dict[str, float]:
        q = _unit(query)
        if q.shape[0] != self.dimension:
            raise ValidationFailure(f"dimension mismatch: index has {self.dimension}, query has {q.shape[0]}")
        ids, matrix, _ = self._snapshot()
        scores = matrix @ q if ids else np.zeros(0)
        return {entry_id: float(s) for entry_id, s in zip(ids, scores)}

    def search(self, query: VectorLike, k: int, where: Optional[MetadataFilter] = None) -> List[SearchHit]:
        """余弦降序的前 k 个，同分按 id 升序；过滤后不足 k 个时返回全部"""
        if k < 1:
            raise ValidationFailure(f"k must be >= 1, got {k}")
        q = _unit(query)
        if q.shape[0] != self.dimension:
            raise ValidationFailure(f"dimension mismatch: index has {self.dimension}, query has {q.shape[0]}")
        ids, matrix, metadata = self._snapshot()
        if not ids:
            return []
        scores = matrix @ q
        candidates = [i for i in range(len(ids)) if where is None or where(metadata[i])]
        candidates.sort(key=lambda i: (-scores[i], ids[i]))
        return [SearchHit(id=ids[i], similarity=float(np.clip(scores[i], -1.0, 1.0))) for i in candidates[:k]]

    # ------------------------------------------------------------ persistence

    @staticmethod
    def _entry_line(entry_id: str, vector: np.ndarray, metadata: Dict[str, Any]) -> str:
        return json.dumps({"id": entry_id, "vector": [float(x) for x in vector], "metadata": metadata},
                          ensure_ascii=False)

    def dumps(self) -> str:
        lines = [json.dumps({"dimension": self.dimension, "count": len(self)})]
        ids, matrix, metadata = self._snapshot()
        lines.extend(self._entry_line(i, matrix[n], metadata[n]) for n, i in enumerate(ids))
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.dumps(), encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"cannot write index {path}: {e}") from e
        logger.debug(f"[Index saved] | path = {path} | entries = {len(self)}")
        return path

    @classmethod
    def loads(cls, text: str, source: str = "<memory>") -> "VectorIndex":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise ArtifactError(f"index file {source} is empty")
        try:
            header = json.loads(lines[0])
            index = cls(int(header["dimension"]))
            for line in lines[1:]:
                entry = json.loads(line)
                index._insert(entry["id"], np.asarray(entry["vector"], dtype=np.float64), entry.get("metadata"))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ArtifactError(f"corrupt index file {source}: {e}") from e
        if header.get("count") != len(index):
            warn_once(f"[Index] | header count {header.get('count')} != entries {len(index)} in {source}")
        return index

    @classmethod
    def load(cls, path: Union[str, Path]) -> "VectorIndex":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"cannot read index {path}: {e}") from e
        return cls.loads(text, str(path))

    def append_entry(self, path: Union[str, Path], entry_id: str, vector: VectorLike,
                     metadata: Optional[Dict[str, Any]] = None) -> None:
        """加入内存索引并追加一行到已有文件（头部计数随之过期，加载时容忍）"""
        self.add(entry_id, vector, metadata)
        n = self._positions[entry_id]
        try:
            with open(path, "a", encoding="utf-8") as f:
                f.write(self._entry_line(entry_id, self._buffer[n], self._metadata[n]) + "\n")
        except OSError as e:
            raise ArtifactError(f"cannot append to index {path}: {e}") from e
