"""流水线异常层级。CLI 依据异常类型映射退出码。"""

from typing import Any, List, Optional


class FolioError(Exception):
    """所有流水线异常的根类"""


class ConfigError(FolioError, ValueError):
    """配置缺失、非法或引用的文件不存在"""


class ArtifactError(FolioError, OSError):
    """读写阶段产物失败（I/O）"""


class BackendError(FolioError):
    """推理后端失败：传输错误、非成功状态、fixture 键缺失等"""

    def __init__(self, message: str, backend_id: str = "", attempts: int = 0):
        super().__init__(message)
        self.backend_id = backend_id
        self.attempts = attempts


class FixtureKeyError(BackendError, KeyError):
    """fixture 后端中找不到请求的键"""

    def __str__(self):
        return self.args[0] if self.args else ""


class EmbeddingError(BackendError):
    """嵌入后端返回的向量不合法（如同一批次维度不一致）"""


class ValidationFailure(FolioError, ValueError):
    """数据不满足模式或结构约束"""

    def __init__(self, message: str, violations: Optional[List[Any]] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class SchemaError(ValidationFailure):
    """抽取模式文档本身不合法"""


class UnsupportedConstructError(SchemaError):
    """模式使用了不支持的 JSON Schema 构造"""

    def __init__(self, construct: str, path: str = ""):
        where = f" (at '{path}')" if path else ""
        super().__init__(f"unsupported schema construct '{construct}'{where}")
        self.construct = construct
        self.path = path


class OutputParseError(ValidationFailure):
    """模型输出无法解析为结构化载荷"""


class OutputValidationError(ValidationFailure):
    """模型输出的元素不满足抽取模式"""


class HybridExtractionError(ValidationFailure):
    """混合路径第二阶段失败，同时携带两阶段输出便于排查"""

    def __init__(self, message: str, phase1: Any = None, phase2_raw: str = "",
                 violations: Optional[List[Any]] = None):
        super().__init__(message, violations)
        self.phase1 = phase1
        self.phase2_raw = phase2_raw


class LinkError(ValidationFailure):
    """跨页链接引用了不存在的元素"""


class AnnotationError(ValidationFailure):
    """语义推断返回了无法解析或未声明的注释"""


class PreprocessError(FolioError, ValueError):
    """预处理链中某一步失败，记录步骤序号"""

    def __init__(self, message: str, step_index: Optional[int] = None, op: str = ""):
        prefix = f"step {step_index} ({op}): " if step_index is not None else ""
        super().__init__(prefix + message)
        self.step_index = step_index
        self.op = op


class EmptyReferenceError(FolioError, ValueError):
    """参考语料为空，无法计算错误率"""


class AnswerError(BackendError):
    """RAG 生成失败，保留已组装的提示词以便检查"""

    def __init__(self, message: str, prompt: str = "", backend_id: str = ""):
        super().__init__(message, backend_id=backend_id)
        self.prompt = prompt
