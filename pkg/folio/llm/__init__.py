"""LLM模块 - 提供统一的模型后端接口和工厂函数"""

from .base import BackendConfig, BaseEmbedder, BaseLLM, EmbeddingConfig, RawModelOutput, backoff_schedule
from .mock import FixtureEmbedder, FixtureLLM
from .openai import OpenAIEmbedder, OpenAILLM, call_with_backoff
from ..core.errors import ConfigError

__all__ = [
    'BackendConfig', 'EmbeddingConfig', 'RawModelOutput', 'backoff_schedule',
    'BaseLLM', 'BaseEmbedder', 'FixtureLLM', 'FixtureEmbedder',
    'OpenAILLM', 'OpenAIEmbedder', 'call_with_backoff',
    'create_llm', 'create_embedder',
]


def create_llm(config: BackendConfig) -> BaseLLM:
    """按配置创建模型后端"""
    if config.provider == "fixture":
        return FixtureLLM(fixture_dir=config.fixture_dir, mode=config.mode,
                          backend_id=f"fixture:{config.model or config.mode}")
    if config.provider == "openai":
        return OpenAILLM(config)
    raise ConfigError(f"unsupported LLM provider: {config.provider}")


def create_embedder(config: EmbeddingConfig) -> BaseEmbedder:
    """按配置创建嵌入后端"""
    if config.provider == "fixture":
        return FixtureEmbedder(dimension=config.dimension)
    if config.provider == "openai":
        return OpenAIEmbedder(config)
    raise ConfigError(f"unsupported embedding provider: {config.provider}")
