"""OpenAI 兼容后端实现（chat-completions 与 embeddings）"""

import asyncio
import os
import time
from typing import Awaitable, Callable, Dict, List, Optional, TypeVar

import openai
from openai import AsyncOpenAI

from ..core.errors import BackendError
from ..core.raster import RasterImage
from ..utils.image_utils import encode_base64_png
from ..utils.logging import get_logger, warn_once
from .base import BackendConfig, BaseEmbedder, BaseLLM, EmbeddingConfig, RawModelOutput, backoff_schedule

T = TypeVar("T")

# 可重试的瞬时错误：连接/超时、限流、5xx
TRANSIENT_ERRORS = (openai.APIConnectionError, openai.RateLimitError, openai.InternalServerError)

logger = get_logger("llm")


def resolve_api_key(api_key_env: str) -> str:
    """从指定环境变量读取 token；自建服务通常不校验，缺失时使用占位值"""
    api_key = os.getenv(api_key_env)
    if not api_key:
        warn_once(f"[LLM] | env var {api_key_env} not set, using placeholder api key")
        return "EMPTY"
    return api_key


async def call_with_backoff(
    fn: Callable[[], Awaitable[T]],
    max_retries: int,
    backend_id: str,
    sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
) -> T:
    """执行一次请求，瞬时失败按 1s, 2s, 4s ... 退避重试，最多 max_retries 次。"""
    delays = backoff_schedule(max_retries)
    attempt = 0
    while True:
        try:
            return await fn()
        except TRANSIENT_ERRORS as e:
            if attempt >= len(delays):
                raise BackendError(
                    f"transport failure after {attempt + 1} attempt(s): {e}",
                    backend_id=backend_id, attempts=attempt + 1,
                ) from e
            delay = delays[attempt]
            attempt += 1
            logger.warning(f"[Retry] | backend = {backend_id} | attempt = {attempt} | wait_s = {delay} | {type(e).__name__}")
            await sleep(delay)
        except openai.APIStatusError as e:
            raise BackendError(
                f"non-success status {e.status_code}: {e.message}",
                backend_id=backend_id, attempts=attempt + 1,
            ) from e


class OpenAILLM(BaseLLM):
    """OpenAI 兼容的视觉语言模型后端，图像以 base64 data URL 内嵌"""

    def __init__(self, config: BackendConfig, sleep: Callable[[float], Awaitable[None]] = asyncio.sleep):
        self.config = config
        self.model = config.model
        self.max_retries = config.max_retries
        self.mode = config.mode
        self.backend_id = f"openai:{config.model or 'default'}"
        self.sleep = sleep
        # SDK 内部重试关闭，退避策略只由 call_with_backoff 决定
        self.client = AsyncOpenAI(
            api_key=resolve_api_key(config.api_key_env),
            base_url=config.endpoint,
            timeout=config.timeout,
            max_retries=0,
        )

    def convert_messages(self, prompt: str, image: Optional[RasterImage] = None) -> List[Dict]:
        """提示词与页面图像序列化为 OpenAI 消息列表"""
        if image is None:
            return [{"role": "user", "content": prompt}]
        return [{
            "role": "user",
            "content": [
                {"type": "image_url",
                 "image_url": {"url": f"data:image/png;base64,{encode_base64_png(image)}"}},
                {"type": "text", "text": prompt},
            ],
        }]

    async def generate_response(self, prompt: str, image: Optional[RasterImage] = None,
                                key: str = "") -> RawModelOutput:
        """调用 chat-completions 接口返回文本响应"""
        messages = self.convert_messages(prompt, image)
        start = time.perf_counter()

        async def _request():
            return await self.client.chat.completions.create(
                model=self.model,
                messages=messages,
                temperature=self.config.temperature,
            )

        response = await call_with_backoff(_request, self.max_retries, self.backend_id, self.sleep)
        text = response.choices[0].message.content or ""
        latency_ms = (time.perf_counter() - start) * 1000.0
        return RawModelOutput(text=text, latency_ms=latency_ms, backend_id=self.backend_id)


class OpenAIEmbedder(BaseEmbedder):
    """OpenAI 兼容 embeddings 接口"""

    def __init__(self, config: EmbeddingConfig, sleep: Callable[[float], Awaitable[None]] = asyncio.sleep):
        self.config = config
        self.backend_id = f"openai-embed:{config.model or 'default'}"
        self.sleep = sleep
        self.client = AsyncOpenAI(
            api_key=resolve_api_key(config.api_key_env),
            base_url=config.endpoint,
            timeout=config.timeout,
            max_retries=0,
        )

    async def embed_texts(self, texts: List[str]) -> List[List[float]]:
        if not texts:
            return []

        async def _request():
            return await self.client.embeddings.create(model=self.config.model, input=texts)

        response = await call_with_backoff(_request, self.config.max_retries, self.backend_id, self.sleep)
        ordered = sorted(response.data, key=lambda d: d.index)
        return [list(d.embedding) for d in ordered]
