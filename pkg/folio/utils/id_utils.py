"""ID生成和处理工具函数"""

import re
import hashlib
from typing import List, Union


def page_file_name(page_number: int, suffix: str = ".json") -> str:
    """页面产物文件名，如 page-0003.json"""
    return f"page-{page_number:04d}{suffix}"


def unit_id(page_number: int, index: int) -> str:
    """内容单元ID，由首个来源元素的 (页码, 序号) 决定"""
    return f"u{page_number:04d}-{index:03d}"


def chunk_id(kind: str, seq: int) -> str:
    """检索块ID：正文块 c00001，脚注块 f00001"""
    prefix = "f" if kind == "footnote" else "c"
    return f"{prefix}{seq:05d}"


def query_key(query: str, length: int = 12) -> str:
    """查询文本的稳定短哈希，用作离线 fixture 的键"""
    return hashlib.sha1(query.encode("utf-8")).hexdigest()[:length]


def natural_key(name: str) -> List[Union[int, str]]:
    """自然排序键：page10 排在 page9 之后"""
    return [int(part) if part.isdigit() else part.lower()
            for part in re.split(r"(\d+)", name)]
