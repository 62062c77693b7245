"""可配置的预处理链：步骤按顺序执行，空链为恒等变换。"""

import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..core.errors import ConfigError, PreprocessError
from ..core.raster import RasterImage
from ..utils.image_utils import normalise_resolution
from ..utils.logging import get_logger
from . import ops
from .detector import HeuristicPageDetector, PageDetector

OpName = Literal["rotate90", "deskew", "detect_page", "grayscale", "adaptive_threshold", "median_denoise"]

# 各操作允许的参数名
OP_PARAMS: Dict[str, tuple] = {
    "rotate90": ("quarter_turns",),
    "deskew": ("max_angle", "step"),
    "detect_page": ("density_ratio", "margin_ratio"),
    "grayscale": (),
    "adaptive_threshold": ("window", "k"),
    "median_denoise": ("radius",),
}

logger = get_logger("preprocess")


class PreprocessStep(BaseModel):
    """预处理链中的一步"""
    op: OpName = Field(..., description="操作名")
    params: Dict[str, Any] = Field(default_factory=dict, description="操作参数")

    @model_validator(mode="after")
    def _check_params(self):
        unknown = sorted(set(self.params) - set(OP_PARAMS[self.op]))
        if unknown:
            raise ValueError(f"unknown parameters for {self.op}: {unknown}")
        return self


class PreprocessConfig(BaseModel):
    """预处理配置：有序步骤列表 + 可选目标 DPI"""
    steps: List[PreprocessStep] = Field(default_factory=list, description="按顺序执行的操作")
    target_dpi: Optional[int] = Field(None, ge=1, description="目标分辨率；为空则不重采样")
    detector_endpoint: Optional[str] = Field(None, description="外部页面检测端点；为空使用启发式检测")

    @field_validator("steps", mode="before")
    @classmethod
    def _accept_bare_names(cls, steps):
        # 允许 "grayscale" 这种简写
        return [{"op": s} if isinstance(s, str) else s for s in (steps or [])]


def load_preprocess_config(data) -> PreprocessConfig:
    """从 dict 或 JSON 文本加载配置，未知操作在此处被拒绝"""
    try:
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        return PreprocessConfig.model_validate(data)
    except (ValidationError, json.JSONDecodeError) as e:
        raise ConfigError(f"invalid preprocess config: {e}") from e


def apply_step(step: PreprocessStep, img: RasterImage, detector: PageDetector) -> RasterImage:
    p = step.params
    if step.op == "rotate90":
        return ops.rotate90(img, int(p.get("quarter_turns", 1)))
    if step.op == "deskew":
        return ops.deskew(img, max_angle=float(p.get("max_angle", 10.0)), step=float(p.get("step", 0.1)))
    if step.op == "detect_page":
        if p:
            detector = HeuristicPageDetector(
                density_ratio=float(p.get("density_ratio", 0.02)),
                margin_ratio=float(p.get("margin_ratio", 0.01)),
            )
        return ops.crop(img, detector.detect(ops.to_grayscale(img)))
    if step.op == "grayscale":
        return ops.to_grayscale(img)
    if step.op == "adaptive_threshold":
        return ops.adaptive_threshold(img, window=int(p.get("window", 31)), k=float(p.get("k", 0.2)))
    return ops.median_denoise(img, radius=int(p.get("radius", 1)))


def run_chain(config: PreprocessConfig, img: RasterImage,
              detector: Optional[PageDetector] = None) -> RasterImage:
    """按配置顺序执行操作。

    Raises:
        PreprocessError: 某一步前置条件失败，携带步骤序号
    """
    detector = detector or HeuristicPageDetector()
    if config.target_dpi:
        img = normalise_resolution(img, config.target_dpi)
    for index, step in enumerate(config.steps):
        logger.debug(f"[Preprocess step] | step = {index} | op = {step.op}")
        try:
            img = apply_step(step, img, detector)
        except PreprocessError as e:
            raise PreprocessError(str(e), step_index=index, op=step.op) from e
        except (TypeError, ValueError) as e:
            raise PreprocessError(f"invalid parameters: {e}", step_index=index, op=step.op) from e
    return img
