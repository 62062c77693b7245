"""
图像增强操作。

所有操作都是纯函数：输入不可变的 RasterImage，返回新图像，保持缓冲长度不变式。
"""

import math

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

from ..core.errors import PreprocessError
from ..core.modules import BBox
from ..core.raster import RasterImage

SKEW_WORKING_SIZE = 600


def _require_gray(img: RasterImage, op: str) -> None:
    if img.channels != 1:
        raise PreprocessError(f"{op} requires a 1-channel image, got {img.channels} channels")


def to_grayscale(img: RasterImage) -> RasterImage:
    """亮度 = round(0.299R + 0.587G + 0.114B)；灰度输入原样返回。"""
    if img.channels == 1:
        return img
    px = img.pixels.astype(np.float64)
    lum = 0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]
    return RasterImage.from_array(np.floor(lum + 0.5), dpi=img.dpi)


def rotate90(img: RasterImage, quarter_turns: int) -> RasterImage:
    """无损的 90° 整数倍顺时针旋转，像素 (x, y) -> (h-1-y, x)。"""
    if quarter_turns not in (0, 1, 2, 3):
        raise PreprocessError(f"quarter_turns must be one of 0..3, got {quarter_turns}")
    if quarter_turns == 0:
        return img
    return RasterImage.from_array(np.rot90(img.pixels, -quarter_turns, axes=(0, 1)), dpi=img.dpi)


def rotate(img: RasterImage, angle: float) -> RasterImage:
    """绕图像中心双线性旋转，尺寸不变，出界区域填白。"""
    if abs(angle) > 45:
        raise PreprocessError(f"|angle| must be <= 45, got {angle}")
    if angle == 0:
        return img
    rotated = ndimage.rotate(
        img.pixels.astype(np.float64), angle, axes=(1, 0),
        reshape=False, order=1, mode="constant", cval=255.0,
    )
    return RasterImage.from_array(rotated, dpi=img.dpi)


def _profile_score(ink: np.ndarray, angle: float) -> float:
    if angle == 0:
        rotated = ink
    else:
        rotated = ndimage.rotate(ink, angle, axes=(1, 0), reshape=False,
                                 order=1, mode="constant", cval=0.0)
    return float(np.var(rotated.sum(axis=1)))


def estimate_skew(img: RasterImage, max_angle: float = 10.0, step: float = 0.1) -> float:
    """在 [-max_angle, max_angle] 内按 step 扫描，返回使水平投影方差最大的角度。

    以 -angle 旋转即可校正页面。空白（均匀）图像返回 0。
    """
    _require_gray(img, "estimate_skew")
    px = img.pixels
    if px.min() == px.max():
        return 0.0
    ink = 255.0 - px.astype(np.float64)
    longest = max(ink.shape)
    if longest > SKEW_WORKING_SIZE:
        ink = ndimage.zoom(ink, SKEW_WORKING_SIZE / longest, order=1)

    n = int(round(max_angle / step))
    # 得分相同时优先取绝对值较小的角度
    candidates = sorted((round(i * step, 6) for i in range(-n, n + 1)), key=lambda a: (abs(a), a))
    best_angle, best_score = 0.0, -math.inf
    for angle in candidates:
        score = _profile_score(ink, -angle)
        if score > best_score:
            best_angle, best_score = angle, score
    if best_score <= 0.0:
        return 0.0
    return float(best_angle)


def deskew(img: RasterImage, max_angle: float = 10.0, step: float = 0.1) -> RasterImage:
    """估计倾斜角并反向旋转；彩色图像在灰度副本上估计"""
    angle = estimate_skew(to_grayscale(img), max_angle=max_angle, step=step)
    return rotate(img, -angle) if angle else img


def full_bbox(img: RasterImage) -> BBox:
    return BBox(x0=0, y0=0, x1=img.width, y1=img.height)


def detect_page_region(img: RasterImage, density_ratio: float = 0.02,
                       margin_ratio: float = 0.01) -> BBox:
    """启发式页面检测：Otsu 二值化后按行/列墨迹密度取最紧外框，外扩 1% 边距。"""
    _require_gray(img, "detect_page_region")
    px = img.pixels
    if px.min() == px.max():
        return full_bbox(img)
    ink = px <= threshold_otsu(px)
    rows = ink.sum(axis=1)
    cols = ink.sum(axis=0)
    row_idx = np.flatnonzero(rows > density_ratio * rows.max())
    col_idx = np.flatnonzero(cols > density_ratio * cols.max())
    if row_idx.size == 0 or col_idx.size == 0:
        return full_bbox(img)
    mx = math.ceil(margin_ratio * img.width)
    my = math.ceil(margin_ratio * img.height)
    return BBox(
        x0=max(0, int(col_idx[0]) - mx),
        y0=max(0, int(row_idx[0]) - my),
        x1=min(img.width, int(col_idx[-1]) + 1 + mx),
        y1=min(img.height, int(row_idx[-1]) + 1 + my),
    )


def crop(img: RasterImage, bbox: BBox) -> RasterImage:
    x1, y1 = min(bbox.x1, img.width), min(bbox.y1, img.height)
    return RasterImage.from_array(img.pixels[bbox.y0:y1, bbox.x0:x1], dpi=img.dpi)


def adaptive_threshold(img: RasterImage, window: int = 31, k: float = 0.2,
                       dynamic_range: float = 128.0) -> RasterImage:
    """Sauvola 自适应阈值：intensity <= m * (1 + k * (s / R - 1)) 记为黑。

    m、s 为窗口内局部均值与标准差（边界镜像），输出只含 0 和 255。
    """
    _require_gray(img, "adaptive_threshold")
    if window < 3 or window % 2 == 0:
        raise PreprocessError(f"window must be an odd integer >= 3, got {window}")
    if not 0 < k < 1:
        raise PreprocessError(f"k must lie in (0, 1), got {k}")
    px = img.pixels.astype(np.float64)
    mean = ndimage.uniform_filter(px, size=window, mode="reflect")
    mean_sq = ndimage.uniform_filter(px * px, size=window, mode="reflect")
    std = np.sqrt(np.clip(mean_sq - mean * mean, 0.0, None))
    threshold = mean * (1.0 + k * (std / dynamic_range - 1.0))
    return RasterImage.from_array(np.where(px <= threshold, 0, 255).astype(np.uint8), dpi=img.dpi)


def median_denoise(img: RasterImage, radius: int = 1) -> RasterImage:
    """(2r+1)^2 邻域中值滤波，边界按最近像素延拓"""
    if radius < 1:
        raise PreprocessError(f"radius must be >= 1, got {radius}")
    size = 2 * radius + 1
    footprint = (size, size) if img.channels == 1 else (size, size, 1)
    return RasterImage.from_array(
        ndimage.median_filter(img.pixels, size=footprint, mode="nearest"), dpi=img.dpi)
