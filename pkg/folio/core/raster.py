"""栅格页面图像：8 位像素缓冲，行优先，灰度 (H, W) 或彩色 (H, W, 3)。"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class RasterImage(BaseModel):
    """不可变的页面图像"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pixels: np.ndarray = Field(..., description="uint8 像素数组")
    dpi: Optional[int] = Field(None, ge=1, description="分辨率（可选）")

    @model_validator(mode="after")
    def _check_buffer(self):
        px = self.pixels
        if px.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {px.dtype}")
        if px.ndim == 3 and px.shape[2] == 3:
            pass
        elif px.ndim != 2:
            raise ValueError(f"unsupported pixel shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("width and height must be >= 1")
        # 冻结底层缓冲，保证图像构造后不可变
        px.setflags(write=False)
        return self

    @classmethod
    def from_array(cls, array, dpi: Optional[int] = None) -> "RasterImage":
        """从任意数组构造（裁剪到 0..255 并复制）"""
        arr = np.asarray(array)
        if arr.dtype != np.uint8:
            arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
        else:
            arr = arr.copy()
        return cls(pixels=arr, dpi=dpi)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def same_pixels(self, other: "RasterImage") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))
