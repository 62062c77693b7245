"""历史文献数字化流水线"""
from .core import DocRecord, DocumentRecord, PageExtraction
from .core.config import PipelineConfig, load_config
from .core.pipeline import PipelineRunner
from .llm import create_embedder, create_llm

__version__ = "0.1.0"

__all__ = [
    'DocRecord',  # alias for DocumentRecord
    'DocumentRecord',
    'PageExtraction',
    'PipelineConfig',
    'load_config',
    'PipelineRunner',
    'create_llm',
    'create_embedder',
]
