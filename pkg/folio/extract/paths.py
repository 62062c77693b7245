"""
三条抽取路径与文档级并发抽取。

路径 A：专用 VLM，不接受用户指令。
路径 B：通用 VLM + 用户指令。
路径 C：混合两阶段，A 的结果交给通用模型按指令精化。
"""

import asyncio
import time
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import (
    ConfigError, HybridExtractionError, OutputParseError, OutputValidationError,
)
from ..core.modules import PageExtraction
from ..core.raster import RasterImage
from ..core.schema import ExtractionSchema
from ..llm import BackendConfig, BaseLLM, RawModelOutput, create_llm
from ..utils.logging import get_logger, log_exception
from .parser import parse_output
from .prompt import build_prompt, build_refinement_prompt

logger = get_logger("extract")

REFINE_KEY_SUFFIX = ".refine"


class ExtractionRequest(BaseModel):
    """一次单页抽取请求"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    image: RasterImage
    extraction_schema: ExtractionSchema
    instructions: Optional[str] = Field(None, description="用户指令（路径 B/C）")
    page_number: int = Field(1, ge=1)
    source_image_id: str = Field(..., description="来源图像标识，也是 fixture 键")


class PageImage(BaseModel):
    """待抽取的页面图像"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    page_number: int = Field(..., ge=1)
    source_image_id: str
    image: RasterImage


class PageFailure(BaseModel):
    """部分结果模式下记录的单页失败"""
    page_number: int
    source_image_id: str
    error_type: str
    message: str


class ExtractionBatch(BaseModel):
    """文档级抽取结果：成功页按页码排序，失败页单独列出"""
    pages: List[PageExtraction] = Field(default_factory=list)
    failures: List[PageFailure] = Field(default_factory=list)
    timings_ms: Dict[int, float] = Field(default_factory=dict, description="页码 -> 后端耗时")
    wall_seconds: float = Field(0.0, ge=0)

    @property
    def ok(self) -> bool:
        return not self.failures


def _as_backend(backend: Union[BaseLLM, BackendConfig]) -> BaseLLM:
    return backend if isinstance(backend, BaseLLM) else create_llm(backend)


def _check_mode(backend: BaseLLM, instructions: Optional[str]) -> None:
    has_instructions = bool(instructions and instructions.strip())
    if backend.mode == "specialised" and has_instructions:
        raise ConfigError(f"specialised backend {backend.backend_id} cannot accept user instructions")
    if backend.mode == "general" and not has_instructions:
        raise ConfigError(f"general backend {backend.backend_id} requires instructions")


async def call_backend(backend: Union[BaseLLM, BackendConfig], req: ExtractionRequest) -> RawModelOutput:
    """发送一次带图像的抽取请求，fixture 后端以 source_image_id 为键"""
    llm = _as_backend(backend)
    prompt = build_prompt(req.extraction_schema, req.instructions)
    return await llm.generate_response(prompt, image=req.image, key=req.source_image_id)


async def _extract_single(backend: BaseLLM, page: PageImage, schema: ExtractionSchema,
                          instructions: Optional[str]) -> Tuple[PageExtraction, float]:
    _check_mode(backend, instructions)
    req = ExtractionRequest(image=page.image, extraction_schema=schema, instructions=instructions,
                            page_number=page.page_number, source_image_id=page.source_image_id)
    raw = await call_backend(backend, req)
    result = parse_output(raw, schema, page.page_number, page.source_image_id)
    return result, raw.latency_ms


async def extract_page(backend: Union[BaseLLM, BackendConfig], page: PageImage,
                       schema: ExtractionSchema, instructions: Optional[str] = None) -> PageExtraction:
    """路径 A / B：调用后端并解析校验输出"""
    result, _ = await _extract_single(_as_backend(backend), page, schema, instructions)
    return result


def _check_preserved(phase1: PageExtraction, phase2: PageExtraction) -> List[str]:
    problems = []
    if len(phase1.elements) != len(phase2.elements):
        problems.append(f"element count changed from {len(phase1.elements)} to {len(phase2.elements)}")
    for i, (a, b) in enumerate(zip(phase1.elements, phase2.elements)):
        if a.category != b.category:
            problems.append(f"elements[{i}] category changed from {a.category.value} to {b.category.value}")
    return problems


async def _extract_hybrid(specialised: BaseLLM, general: BaseLLM, page: PageImage,
                          schema: ExtractionSchema, instructions: str,
                          allow_restructure: bool) -> Tuple[PageExtraction, float]:
    if not (instructions and instructions.strip()):
        raise ConfigError("hybrid extraction requires instructions for the refinement phase")
    if general.mode != "general":
        raise ConfigError(f"refinement backend {general.backend_id} must be a general backend")

    phase1, latency1 = await _extract_single(specialised, page, schema, None)
    prompt = build_refinement_prompt(schema, instructions, phase1)
    raw = await general.generate_response(prompt, key=page.source_image_id + REFINE_KEY_SUFFIX)
    try:
        phase2 = parse_output(raw, schema, page.page_number, page.source_image_id)
    except (OutputParseError, OutputValidationError) as e:
        raise HybridExtractionError(
            f"page {page.page_number}: refinement output rejected: {e}",
            phase1=phase1, phase2_raw=raw.text, violations=e.violations,
        ) from e

    if not allow_restructure:
        problems = _check_preserved(phase1, phase2)
        if problems:
            raise HybridExtractionError(
                f"page {page.page_number}: refinement restructured the page: {'; '.join(problems)}",
                phase1=phase1, phase2_raw=raw.text,
            )
    return phase2, latency1 + raw.latency_ms


async def extract_page_hybrid(specialised: Union[BaseLLM, BackendConfig], general: Union[BaseLLM, BackendConfig],
                              page: PageImage, schema: ExtractionSchema, instructions: str,
                              allow_restructure: bool = False) -> PageExtraction:
    """路径 C：专用模型抽取 + 通用模型按指令精化。

    默认第二阶段必须保持元素数量与类别不变，allow_restructure=True 时放开。

    Raises:
        HybridExtractionError: 第二阶段输出无法解析、校验失败或改变了页面结构
    """
    result, _ = await _extract_hybrid(_as_backend(specialised), _as_backend(general), page, schema,
                                      instructions, allow_restructure)
    return result


class ExtractionPlan(BaseModel):
    """选定的抽取路径及其后端"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    path: Literal["A", "B", "C"] = Field(..., description="A 专用 | B 通用 | C 混合")
    primary: BaseLLM = Field(..., description="A/C 为专用模型，B 为通用模型")
    refiner: Optional[BaseLLM] = Field(None, description="路径 C 第二阶段的通用模型")
    allow_restructure: bool = Field(False, description="路径 C 是否允许改变元素结构")

    @model_validator(mode="after")
    def _check_backends(self):
        if self.path == "C" and self.refiner is None:
            raise ValueError("path C requires a refiner backend")
        return self

    async def run(self, page: PageImage, schema: ExtractionSchema,
                  instructions: Optional[str]) -> Tuple[PageExtraction, float]:
        if self.path == "C":
            return await _extract_hybrid(self.primary, self.refiner, page, schema, instructions or "",
                                         self.allow_restructure)
        return await _extract_single(self.primary, page, schema,
                                     None if self.path == "A" else instructions)


@log_exception
async def extract_document(plan: ExtractionPlan, pages: Sequence[PageImage], schema: ExtractionSchema,
                           instructions: Optional[str] = None, max_in_flight: int = 8,
                           strict: bool = False) -> ExtractionBatch:
    """
    并发抽取整份文档。

    任意时刻至多 max_in_flight 个请求在途；结果按页码排序，与完成顺序无关。
    strict=True 时首个失败取消其余任务并抛出；否则失败页收集到 failures。
    """
    if max_in_flight < 1:
        raise ConfigError(f"max_in_flight must be >= 1, got {max_in_flight}")
    semaphore = asyncio.Semaphore(max_in_flight)
    start = time.perf_counter()

    async def _one(page: PageImage):
        async with semaphore:
            try:
                result, latency_ms = await plan.run(page, schema, instructions)
            except Exception as e:
                logger.error(f"[Page failed] | page = {page.page_number} | "
                             f"image = {page.source_image_id} | {type(e).__name__}: {e}")
                if strict:
                    raise
                return page, e, 0.0
            logger.info(f"[Page extracted] | page = {page.page_number} | "
                        f"elements = {len(result.elements)} | latency_ms = {latency_ms:.0f}")
            return page, result, latency_ms

    tasks = [asyncio.create_task(_one(p)) for p in pages]
    batch = ExtractionBatch()
    try:
        # 按完成顺序收集，严格模式下第一个异常立即中止
        for next_done in asyncio.as_completed(tasks):
            page, outcome, latency_ms = await next_done
            if isinstance(outcome, Exception):
                batch.failures.append(PageFailure(page_number=page.page_number,
                                                  source_image_id=page.source_image_id,
                                                  error_type=type(outcome).__name__, message=str(outcome)))
                continue
            batch.pages.append(outcome)
            batch.timings_ms[outcome.page_number] = latency_ms
    finally:
        for task in tasks:
            if not task.done():
                task.cancel()
        await asyncio.gather(*tasks, return_exceptions=True)

    batch.pages.sort(key=lambda p: p.page_number)
    batch.failures.sort(key=lambda f: f.page_number)
    batch.wall_seconds = time.perf_counter() - start
    logger.info(f"[Document extracted] | path = {plan.path} | pages = {len(batch.pages)} | "
                f"failures = {len(batch.failures)} | wall_s = {batch.wall_seconds:.2f}")
    return batch
