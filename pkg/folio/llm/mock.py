"""离线 fixture 后端，用于测试与可复现运行"""

import asyncio
import hashlib
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Union

from ..core.errors import ConfigError, FixtureKeyError
from ..core.raster import RasterImage
from .base import BaseEmbedder, BaseLLM, RawModelOutput

DEFAULT_KEY = "_default"


class FixtureLLM(BaseLLM):
    """
    按 key 返回预置文本的模型。

    查找顺序：responder 回调 -> responses 映射 / fixture 目录 -> 默认响应。
    找不到时抛出 FixtureKeyError。同时记录并发调用数，便于测试在途上限。
    """

    def __init__(
        self,
        responses: Optional[Mapping[str, str]] = None,
        fixture_dir: Optional[Union[str, Path]] = None,
        responder: Optional[Callable[[str, str], str]] = None,
        default: Optional[str] = None,
        latency: Union[float, Callable[[str], float]] = 0.0,
        backend_id: str = "fixture",
        mode: str = "general",
    ):
        self.responses: Dict[str, str] = {}
        if fixture_dir is not None:
            self.responses.update(self._load_dir(Path(fixture_dir)))
        self.responses.update(responses or {})
        self.default = default if default is not None else self.responses.pop(DEFAULT_KEY, None)
        self.responder = responder
        self.latency = latency
        self.backend_id = backend_id
        self.mode = mode
        self.calls: List[str] = []
        self.in_flight = 0
        self.max_in_flight_seen = 0

    @staticmethod
    def _load_dir(directory: Path) -> Dict[str, str]:
        if not directory.is_dir():
            raise ConfigError(f"fixture directory not found: {directory}")
        return {p.stem: p.read_text(encoding="utf-8") for p in sorted(directory.glob("*.txt"))}

    def convert_messages(self, prompt: str, image: Optional[RasterImage] = None) -> List[Dict]:
        content = prompt
        if image is not None:
            content = f"[image {image.width}x{image.height}]\n{prompt}"
        return [{"role": "user", "content": content}]

    def lookup(self, key: str, prompt: str) -> str:
        if self.responder is not None:
            return self.responder(key, prompt)
        if key in self.responses:
            return self.responses[key]
        if self.default is not None:
            return self.default
        raise FixtureKeyError(f"no fixture registered for key '{key}'", backend_id=self.backend_id)

    async def generate_response(self, prompt: str, image: Optional[RasterImage] = None,
                                key: str = "") -> RawModelOutput:
        self.calls.append(key)
        self.in_flight += 1
        self.max_in_flight_seen = max(self.max_in_flight_seen, self.in_flight)
        try:
            delay = self.latency(key) if callable(self.latency) else self.latency
            if delay:
                await asyncio.sleep(delay)
            text = self.lookup(key, prompt)
        finally:
            self.in_flight -= 1
        return RawModelOutput(text=text, latency_ms=float(delay or 0.0) * 1000.0, backend_id=self.backend_id)


def token_bucket(token: str, dimension: int) -> int:
    """空白分词后的 token 通过 blake2b 散列到 [0, dimension)"""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dimension


class FixtureEmbedder(BaseEmbedder):
    """确定性嵌入：token 计数直方图（归一化由调用方完成）"""

    def __init__(self, dimension: int = 64, backend_id: str = "fixture-embedder"):
        if dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self.backend_id = backend_id

    def counts(self, text: str) -> List[float]:
        vec = [0.0] * self.dimension
        for token in text.split():
            vec[token_bucket(token, self.dimension)] += 1.0
        return vec

    async def embed_texts(self, texts: List[str]) -> List[List[float]]:
        return [self.counts(t) for t in texts]
