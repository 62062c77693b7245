"""
转写错误率：编辑距离、文本规范化、语料级 WER/CER。

语料级错误率在全部页面拼接后的文本上计算：按页 id 自然排序后拼接，一次求编辑距离。
页与页之间以单个换行连接：WER 中换行只是分隔符，CER 中换行计为一个字符。
"""

import unicodedata
from typing import Dict, Hashable, List, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..core.errors import EmptyReferenceError
from ..utils.id_utils import natural_key

PAGE_SEPARATOR = "\n"


class EditCounts(NamedTuple):
    """参考 -> 假设方向的最小编辑"""
    distance: int
    substitutions: int
    deletions: int
    insertions: int


def edit_distance(reference: Sequence[Hashable], hypothesis: Sequence[Hashable]) -> EditCounts:
    """
    单位代价的最小编辑距离及 S/D/I 分解。

    多个最优分解并存时优先替换：代价编码为 distance * BIG + gaps，
    gaps = D + I，逐行向量化计算。
    """
    n, m = len(reference), len(hypothesis)
    big = n + m + 1
    gap = big + 1

    vocab: Dict[Hashable, int] = {}
    ref_ids = np.array([vocab.setdefault(t, len(vocab)) for t in reference], dtype=np.int64)
    hyp_ids = np.array([vocab.setdefault(t, len(vocab)) for t in hypothesis], dtype=np.int64)

    steps = np.arange(m + 1, dtype=np.int64) * gap
    row = steps.copy()
    for i in range(n):
        sub = np.where(hyp_ids == ref_ids[i], 0, big)
        cand = np.empty(m + 1, dtype=np.int64)
        cand[0] = row[0] + gap
        cand[1:] = np.minimum(row[1:] + gap, row[:-1] + sub)
        # 插入沿行方向传播：cur[j] = min_k cand[k] + (j - k) * gap
        row = np.minimum.accumulate(cand - steps) + steps

    cost = int(row[-1])
    distance, gaps = divmod(cost, big)
    deletions = (gaps + n - m) // 2
    insertions = (gaps - n + m) // 2
    return EditCounts(distance, distance - gaps, deletions, insertions)


def levenshtein(a: str, b: str) -> int:
    return edit_distance(a, b).distance


def normalise_text(text: str) -> str:
    """小写化（casefold），删除 Unicode 标点类字符，合并空白并去除首尾空白"""
    kept = "".join(ch for ch in text.casefold() if not unicodedata.category(ch).startswith("P"))
    return " ".join(kept.split())


class TranscriptPair(BaseModel):
    """一页的参考转写与系统输出"""
    page_id: str
    reference: str
    hypothesis: str


class ErrorCounts(BaseModel):
    """语料级累计编辑数"""
    distance: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    reference_total: int = Field(0, description="参考词数或字符数")

    @property
    def rate(self) -> float:
        if self.reference_total == 0:
            raise EmptyReferenceError("reference corpus is empty")
        return self.distance / self.reference_total


def _ordered(pairs: Sequence[TranscriptPair]) -> List[TranscriptPair]:
    if not pairs:
        raise EmptyReferenceError("no transcript pairs to evaluate")
    return sorted(pairs, key=lambda p: natural_key(p.page_id))


def corpus_errors(pairs: Sequence[TranscriptPair], unit: str = "word",
                  normalised: bool = False) -> ErrorCounts:
    """语料级编辑计数，unit 为 word 或 char"""
    if unit not in ("word", "char"):
        raise ValueError(f"unit must be 'word' or 'char', got {unit!r}")
    ordered = _ordered(pairs)
    refs = [p.reference for p in ordered]
    hyps = [p.hypothesis for p in ordered]
    if normalised:
        # 逐页规范化，避免页间换行被合并为空格
        refs = [normalise_text(t) for t in refs]
        hyps = [normalise_text(t) for t in hyps]
    reference, hypothesis = PAGE_SEPARATOR.join(refs), PAGE_SEPARATOR.join(hyps)
    if unit == "word":
        ref_units, hyp_units = reference.split(), hypothesis.split()
    else:
        ref_units, hyp_units = list(reference), list(hypothesis)
    if not ref_units:
        raise EmptyReferenceError("reference corpus is empty")
    counts = edit_distance(ref_units, hyp_units)
    return ErrorCounts(**counts._asdict(), reference_total=len(ref_units))


def corpus_wer(pairs: Sequence[TranscriptPair], normalised: bool = False) -> float:
    return corpus_errors(pairs, "word", normalised).rate


def corpus_cer(pairs: Sequence[TranscriptPair], normalised: bool = False) -> float:
    return corpus_errors(pairs, "char", normalised).rate


class MetricReport(BaseModel):
    """原始/规范化两种条件下的语料级 WER 与 CER"""
    wer_raw: float = Field(..., ge=0)
    cer_raw: float = Field(..., ge=0)
    wer_norm: float = Field(..., ge=0)
    cer_norm: float = Field(..., ge=0)
    counts: Dict[str, ErrorCounts] = Field(default_factory=dict, description="指标名 -> 编辑计数")
    pages: int = 0

    def rates(self) -> Dict[str, float]:
        return {"wer_raw": self.wer_raw, "cer_raw": self.cer_raw,
                "wer_norm": self.wer_norm, "cer_norm": self.cer_norm}


def compute_metric_report(pairs: Sequence[TranscriptPair]) -> MetricReport:
    counts = {
        "wer_raw": corpus_errors(pairs, "word", False),
        "cer_raw": corpus_errors(pairs, "char", False),
        "wer_norm": corpus_errors(pairs, "word", True),
        "cer_norm": corpus_errors(pairs, "char", True),
    }
    return MetricReport(**{name: c.rate for name, c in counts.items()}, counts=counts, pages=len(pairs))
