"""页面区域检测器：默认启发式实现，可替换为外部模型端点。"""

from abc import ABC, abstractmethod

import requests

from ..core.errors import BackendError
from ..core.modules import BBox
from ..core.raster import RasterImage
from ..utils.image_utils import encode_base64_png
from ..utils.logging import get_logger
from .ops import detect_page_region, full_bbox


class PageDetector(ABC):
    """页面检测抽象接口"""

    @abstractmethod
    def detect(self, img: RasterImage) -> BBox:
        """返回目标页面区域（灰度输入）"""
        pass


class HeuristicPageDetector(PageDetector):
    """基于墨迹密度投影的默认检测器"""

    def __init__(self, density_ratio: float = 0.02, margin_ratio: float = 0.01):
        self.density_ratio = density_ratio
        self.margin_ratio = margin_ratio

    def detect(self, img: RasterImage) -> BBox:
        return detect_page_region(img, self.density_ratio, self.margin_ratio)


class RemotePageDetector(PageDetector):
    """
    外部检测模型端点。

    POST {"image": <base64 PNG>}，期望返回 {"bbox": [x0, y0, x1, y1]}。
    返回框会被裁剪到图像范围内。
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.logger = get_logger("preprocess.detector")

    def detect(self, img: RasterImage) -> BBox:
        try:
            resp = requests.post(self.endpoint, json={"image": encode_base64_png(img)}, timeout=self.timeout)
            resp.raise_for_status()
            x0, y0, x1, y1 = (int(v) for v in resp.json()["bbox"])
        except (requests.RequestException, KeyError, TypeError, ValueError) as e:
            raise BackendError(f"page detector request failed: {e}", backend_id=self.endpoint) from e
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(img.width, x1), min(img.height, y1)
        if x0 >= x1 or y0 >= y1:
            self.logger.warning(f"[Detector] | degenerate bbox from endpoint, using full page | endpoint = {self.endpoint}")
            return full_bbox(img)
        return BBox(x0=x0, y0=y0, x1=x1, y1=y1)


def create_detector(endpoint: str = None, timeout: float = 30.0) -> PageDetector:
    """有端点时使用远程检测器，否则使用启发式检测器"""
    if endpoint:
        return RemotePageDetector(endpoint, timeout=timeout)
    return HeuristicPageDetector()
