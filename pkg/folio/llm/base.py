"""后端抽象基类与线协议配置"""

from abc import ABC, abstractmethod
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from ..core.raster import RasterImage


class BackendConfig(BaseModel):
    """推理后端配置（OpenAI 兼容 chat-completions 或离线 fixture）"""
    provider: Literal["openai", "fixture"] = Field("openai", description="后端实现：openai | fixture")
    endpoint: Optional[str] = Field(None, description="OpenAI 兼容服务的 base URL")
    model: str = Field("", description="模型标识")
    mode: Literal["specialised", "general"] = Field("general", description="specialised（路径 A）| general（路径 B/C）")
    api_key_env: str = Field("OPENAI_API_KEY", description="存放 bearer token 的环境变量名")
    timeout: float = Field(120.0, gt=0, description="单次请求超时（秒）")
    max_retries: int = Field(3, ge=0, description="瞬时失败的最大重试次数，退避 1s, 2s, 4s ...")
    temperature: float = Field(0.0, ge=0, description="采样温度")
    fixture_dir: Optional[str] = Field(None, description="fixture 目录：<key>.txt -> 响应文本")


class EmbeddingConfig(BaseModel):
    """嵌入后端配置"""
    provider: Literal["openai", "fixture"] = Field("fixture", description="后端实现：openai | fixture")
    endpoint: Optional[str] = Field(None, description="OpenAI 兼容服务的 base URL")
    model: str = Field("", description="嵌入模型标识")
    dimension: int = Field(64, ge=1, description="fixture 嵌入维度")
    api_key_env: str = Field("OPENAI_API_KEY", description="存放 bearer token 的环境变量名")
    timeout: float = Field(60.0, gt=0, description="单次请求超时（秒）")
    max_retries: int = Field(3, ge=0, description="瞬时失败的最大重试次数")


class RawModelOutput(BaseModel):
    """一次模型调用的原始输出"""
    text: str
    latency_ms: float = Field(..., ge=0)
    backend_id: str


def backoff_schedule(max_retries: int, base: float = 1.0) -> List[float]:
    """指数退避等待序列：1, 2, 4, ..."""
    return [base * (2 ** i) for i in range(max_retries)]


class BaseLLM(ABC):
    """LLM/VLM 抽象基类，定义标准接口"""

    backend_id: str = "base"
    mode: str = "general"

    @abstractmethod
    def convert_messages(self, prompt: str, image: Optional[RasterImage] = None) -> List[Dict]:
        """将提示词（和可选页面图像）转换为后端消息格式"""
        pass

    @abstractmethod
    async def generate_response(self, prompt: str, image: Optional[RasterImage] = None,
                                key: str = "") -> RawModelOutput:
        """生成回复。key 标识请求（页面图像 ID、单元 ID 等），供 fixture 查找"""
        pass


class BaseEmbedder(ABC):
    """嵌入后端抽象基类，返回未归一化的原始向量"""

    backend_id: str = "base"

    @abstractmethod
    async def embed_texts(self, texts: List[str]) -> List[List[float]]:
        pass
