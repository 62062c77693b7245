"""
流水线配置：单个 JSON 文件 + 命令行覆盖。

相对路径以配置文件所在目录为基准解析；引用的文件在加载时检查存在性。
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Type, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from ..enrich.export import EXPORT_FORMATS
from ..evaluate.layout import LayoutMatchConfig
from ..llm.base import BackendConfig, EmbeddingConfig
from ..preprocess.chain import PreprocessConfig
from ..rag.search import RetrievalConfig
from ..refine.text import TypographyRules
from .errors import ConfigError


class ExtractionSettings(BaseModel):
    path: Literal["A", "B", "C"] = Field("A", description="抽取路径：A 专用 VLM | B 通用 VLM + 指令 | C 混合两阶段")
    backend: BackendConfig = Field(default_factory=lambda: BackendConfig(mode="specialised"),
                                   description="A/C 的专用模型或 B 的通用模型")
    refiner: Optional[BackendConfig] = Field(None, description="路径 C 第二阶段的通用模型")
    schema_file: str = Field("schema.json", description="抽取模式文件（JSON Schema 子集）")
    instructions_file: Optional[str] = Field(None, description="用户指令文件（路径 B/C 必需）")
    allow_restructure: bool = Field(False, description="路径 C 是否允许第二阶段改变元素结构")

    @model_validator(mode="after")
    def _check_path(self):
        if self.path == "C" and self.refiner is None:
            raise ValueError("extraction path C requires two backends (extraction.refiner is missing)")
        if self.path in ("A", "C") and self.backend.mode != "specialised":
            raise ValueError(f"extraction path {self.path} needs a specialised backend")
        if self.path == "B" and self.backend.mode != "general":
            raise ValueError("extraction path B needs a general backend")
        if self.path in ("B", "C") and not self.instructions_file:
            raise ValueError(f"extraction path {self.path} requires extraction.instructions_file")
        return self


class RefinementSettings(BaseModel):
    resolve_continuations: bool = Field(True, description="识别跨页续接")
    propagate_metadata: bool = Field(True, description="沿续接链传播 speaker/date/place")
    validate_pages: bool = Field(True, description="聚合前按模式重新校验页面")
    typography: TypographyRules = Field(default_factory=TypographyRules, description="排版规范化规则")


class EnrichmentSettings(BaseModel):
    gazetteer: Optional[str] = Field(None, description="实体规范文件（TSV）")
    kb_endpoint: Optional[str] = Field(None, description="远程知识库查询端点，设置后替代 gazetteer")
    link_threshold: float = Field(0.85, gt=0.0, le=1.0, description="实体链接相似度阈值")
    inference_backend: Optional[BackendConfig] = Field(None, description="语义推断使用的通用模型")
    inference_prompt_file: Optional[str] = Field(None, description="语义推断任务提示词文件")
    export_formats: List[Literal["tei", "csv", "jsonl"]] = Field(default_factory=lambda: list(EXPORT_FORMATS),
                                                                  description="导出格式")
    embedding: EmbeddingConfig = Field(default_factory=EmbeddingConfig, description="嵌入后端")

    @model_validator(mode="after")
    def _check_inference(self):
        if self.inference_backend is not None and not self.inference_prompt_file:
            raise ValueError("enrichment.inference_backend requires enrichment.inference_prompt_file")
        return self


class RagSettings(BaseModel):
    router_file: Optional[str] = Field(None, description="路由原型文件（JSON）")
    answer_backend: Optional[BackendConfig] = Field(None, description="生成回答的模型")
    retrieval: RetrievalConfig = Field(default_factory=RetrievalConfig, description="检索参数")


class EvaluationSettings(BaseModel):
    reference_dir: Optional[str] = Field(None, description="参考转写目录（每页一个 .txt）")
    hypothesis_dir: Optional[str] = Field(None, description="系统转写目录；为空时使用抽取结果")
    layout_gold_dir: Optional[str] = Field(None, description="版面标注目录（每页一个元素列表 JSON）")
    layout: LayoutMatchConfig = Field(default_factory=LayoutMatchConfig, description="版面匹配配置")
    baseline: Optional[Dict[str, float]] = Field(None, description="基线错误率 {wer_raw, cer_raw, wer_norm, cer_norm}")
    base_seconds_per_page: Optional[float] = Field(None, gt=0, description="基线每页人工校对秒数")
    base_machine_seconds: float = Field(0.0, ge=0, description="基线每页机器处理秒数")
    sys_machine_seconds: float = Field(0.0, ge=0, description="本系统每页机器处理秒数")


class PipelineConfig(BaseModel):
    """整条流水线的配置"""
    input_dir: str = Field("input", description="原始页面图像目录")
    output_dir: str = Field("output", description="产物根目录")
    title: str = Field("", description="文档标题")
    source: Dict[str, str] = Field(default_factory=dict, description="来源元数据")
    max_in_flight: int = Field(8, ge=1, description="抽取阶段在途请求上限")
    mode: Literal["strict", "partial"] = Field("strict", description="strict 首错即止 | partial 记录失败继续")
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig, description="预处理链")
    extraction: ExtractionSettings = Field(default_factory=ExtractionSettings, description="抽取")
    refinement: RefinementSettings = Field(default_factory=RefinementSettings, description="精化")
    enrichment: EnrichmentSettings = Field(default_factory=EnrichmentSettings, description="富集")
    rag: RagSettings = Field(default_factory=RagSettings, description="检索增强问答")
    evaluation: EvaluationSettings = Field(default_factory=EvaluationSettings, description="评估")


# 需要按配置目录解析的路径键；第二项表示加载时必须存在
PATH_KEYS: Tuple[Tuple[str, bool], ...] = (
    ("input_dir", False),
    ("output_dir", False),
    ("extraction.schema_file", True),
    ("extraction.instructions_file", True),
    ("extraction.backend.fixture_dir", True),
    ("extraction.refiner.fixture_dir", True),
    ("enrichment.gazetteer", True),
    ("enrichment.inference_prompt_file", True),
    ("enrichment.inference_backend.fixture_dir", True),
    ("rag.router_file", True),
    ("rag.answer_backend.fixture_dir", True),
    ("evaluation.reference_dir", False),
    ("evaluation.hypothesis_dir", False),
    ("evaluation.layout_gold_dir", False),
)


def parse_value(text: str) -> Any:
    """命令行值按 JSON 解析，失败时作为字符串"""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """--set a.b.c=value"""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like dotted.key=value, got '{item}'")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"cannot override '{key}': '{part}' is not an object")
            node = child
        node[parts[-1]] = parse_value(value)
    return data


def _get(data: Dict[str, Any], dotted: str) -> Any:
    node: Any = data
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node or node[part] is None:
            return None
        node = node[part]
    return node


def _set(data: Dict[str, Any], dotted: str, value: Any) -> None:
    *parents, last = dotted.split(".")
    node = data
    for part in parents:
        node = node[part]
    node[last] = value


def resolve_paths(config: PipelineConfig, base_dir: Path) -> PipelineConfig:
    """相对路径改为基于 base_dir 的绝对路径，检查必须存在的文件"""
    data = config.model_dump()
    for key, must_exist in PATH_KEYS:
        value = _get(data, key)
        if value is None:
            continue
        path = Path(value)
        if not path.is_absolute():
            path = (base_dir / path).resolve()
        if must_exist and not path.exists():
            raise ConfigError(f"{key}: file not found: {path}")
        _set(data, key, str(path))
    return PipelineConfig.model_validate(data)


def load_config(path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = (),
                base_dir: Optional[Union[str, Path]] = None) -> PipelineConfig:
    """
    读取配置文件（可省略，全部使用默认值）并应用覆盖。

    Raises:
        ConfigError: 文件缺失、JSON 非法、字段非法或引用文件不存在
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
    data = apply_overrides(data, overrides)
    try:
        config = PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
    if base_dir is None:
        base_dir = path.parent if path is not None else Path.cwd()
    return resolve_paths(config, Path(base_dir))


def describe_keys(model: Type[BaseModel] = PipelineConfig, prefix: str = "") -> List[Tuple[str, str]]:
    """列出所有点分配置键及其说明，用于 --help"""
    rows: List[Tuple[str, str]] = []
    for name, field in model.model_fields.items():
        key = f"{prefix}{name}"
        rows.append((key, field.description or ""))
        annotation = field.annotation
        for candidate in getattr(annotation, "__args__", ()) or (annotation,):
            if isinstance(candidate, type) and issubclass(candidate, BaseModel):
                rows.extend(describe_keys(candidate, key + "."))
                break
    return rows
