"""核心模块包：文档模型、抽取模式、异常层级"""

from .errors import (
    FolioError, ConfigError, ArtifactError, BackendError, ValidationFailure, PreprocessError,
)
from .modules import (
    BBox, ElementCategory, EntityMention, LinkedEntity, PageElement, PageExtraction,
    ElementRef, MergeLink, ContentUnit, DocumentRecord,
)
from .raster import RasterImage
from .schema import ExtractionSchema, FieldSpec, Violation, parse_schema, serialise_schema, validate

# alias DocRecord => DocumentRecord
DocRecord = DocumentRecord

__all__ = [
    'FolioError', 'ConfigError', 'ArtifactError', 'BackendError', 'ValidationFailure', 'PreprocessError',
    'BBox', 'ElementCategory', 'EntityMention', 'LinkedEntity', 'PageElement', 'PageExtraction',
    'ElementRef', 'MergeLink', 'ContentUnit', 'DocumentRecord',
    'RasterImage',
    'ExtractionSchema', 'FieldSpec', 'Violation', 'parse_schema', 'serialise_schema', 'validate',
]
