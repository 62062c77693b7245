"""图像读写与编码工具"""

import io
import base64
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from ..core.errors import ArtifactError
from ..core.raster import RasterImage

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff")


def _to_supported_mode(img: Image.Image) -> Image.Image:
    """调色板、透明通道、16 位等模式统一转换为 L 或 RGB"""
    if img.mode in ("L", "RGB"):
        return img
    if img.mode in ("1", "I;16", "I;16B", "I;16L", "I", "F", "LA"):
        if img.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(img, dtype=np.float64)
            peak = arr.max() or 1.0
            return Image.fromarray(np.clip(arr * (255.0 / peak), 0, 255).astype(np.uint8))
        return img.convert("L")
    return img.convert("RGB")


def image_dpi(img: Image.Image) -> Optional[int]:
    dpi = img.info.get("dpi")
    if not dpi:
        return None
    try:
        return int(round(float(dpi[0]))) or None
    except (TypeError, ValueError):
        return None


def load_image(image_path: Union[str, Path]) -> RasterImage:
    """读取 PNG / JPEG / TIFF 为 RasterImage。

    返回:
        RasterImage，灰度或 RGB，dpi 取自文件元数据（若有）。
    """
    path = Path(image_path)
    if not path.exists():
        raise ArtifactError(f"image not found: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            dpi = image_dpi(img)
            converted = _to_supported_mode(img)
            return RasterImage.from_array(np.asarray(converted), dpi=dpi)
    except OSError as e:
        raise ArtifactError(f"cannot read image {path}: {e}") from e


def to_pil(img: RasterImage) -> Image.Image:
    return Image.fromarray(np.ascontiguousarray(img.pixels))


def save_png(img: RasterImage, image_path: Union[str, Path]) -> str:
    """写出 PNG（无时间戳元数据，重复写出字节一致）"""
    path = Path(image_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {"dpi": (img.dpi, img.dpi)} if img.dpi else {}
    to_pil(img).save(path, format="PNG", **kwargs)
    return str(path)


def encode_base64_png(img: RasterImage) -> str:
    """编码为 base64 PNG 字符串，用于 chat-completions 的 data URL"""
    buffered = io.BytesIO()
    to_pil(img).save(buffered, format="PNG")
    return base64.b64encode(buffered.getvalue()).decode("utf-8")


def normalise_resolution(img: RasterImage, target_dpi: Optional[int]) -> RasterImage:
    """按目标 DPI 重采样；图像或目标 DPI 未知时原样返回"""
    if not target_dpi or not img.dpi or img.dpi == target_dpi:
        return img
    scale = target_dpi / img.dpi
    width = max(1, int(round(img.width * scale)))
    height = max(1, int(round(img.height * scale)))
    resized = to_pil(img).resize((width, height), Image.Resampling.LANCZOS)
    return RasterImage.from_array(np.asarray(resized), dpi=target_dpi)


def list_images(directory: Union[str, Path]):
    """列出目录中支持的图像文件（自然排序）"""
    from .id_utils import natural_key
    directory = Path(directory)
    if not directory.is_dir():
        raise ArtifactError(f"input directory not found: {directory}")
    files = [p for p in directory.iterdir() if p.suffix.lower() in SUPPORTED_SUFFIXES]
    return sorted(files, key=lambda p: natural_key(p.name))
