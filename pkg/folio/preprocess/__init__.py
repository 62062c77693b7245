"""预处理阶段：把异构的栅格输入规范化为增强后的页面图像"""

from .ops import (
    to_grayscale, rotate90, rotate, estimate_skew, deskew, detect_page_region,
    adaptive_threshold, median_denoise, crop,
)
from .detector import PageDetector, HeuristicPageDetector, RemotePageDetector, create_detector
from .chain import PreprocessConfig, PreprocessStep, load_preprocess_config, run_chain

__all__ = [
    'to_grayscale', 'rotate90', 'rotate', 'estimate_skew', 'deskew', 'detect_page_region',
    'adaptive_threshold', 'median_denoise', 'crop',
    'PageDetector', 'HeuristicPageDetector', 'RemotePageDetector', 'create_detector',
    'PreprocessConfig', 'PreprocessStep', 'load_preprocess_config', 'run_chain',
]
