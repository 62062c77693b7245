"""版面元素抽取 F1：IoU + 类别匹配"""

from typing import List, Literal, Optional, Protocol, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import linear_sum_assignment

from ..core.modules import BBox, ElementCategory


class LayoutItem(Protocol):
    bbox: BBox
    category: ElementCategory


def compute_iou(b1: BBox, b2: BBox) -> float:
    """交并比，边界右/下不含"""
    iw = min(b1.x1, b2.x1) - max(b1.x0, b2.x0)
    ih = min(b1.y1, b2.y1) - max(b1.y0, b2.y0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (b1.area + b2.area - inter)


class LayoutMatchConfig(BaseModel):
    """版面匹配配置"""
    iou_threshold: float = Field(0.5, gt=0.0, le=1.0, description="IoU 阈值")
    require_label_match: bool = Field(True, description="类别必须一致")
    strategy: Literal["greedy", "optimal"] = Field("greedy", description="greedy：IoU 降序贪心；optimal：匈牙利算法")


class LayoutScore(BaseModel):
    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int
    matches: List[Tuple[int, int]] = Field(default_factory=list, description="(预测序号, 标注序号)")


def score_from_counts(tp: int, fp: int, fn: int, matches: Optional[List[Tuple[int, int]]] = None) -> LayoutScore:
    """分母为 0 时 precision/recall 记为 0；P+R=0 时 F1 记为 0"""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return LayoutScore(precision=precision, recall=recall, f1=f1, true_positives=tp,
                       false_positives=fp, false_negatives=fn, matches=matches or [])


def _eligible(pred: Sequence[LayoutItem], gold: Sequence[LayoutItem],
              cfg: LayoutMatchConfig) -> List[Tuple[float, int, int]]:
    pairs = []
    for i, p in enumerate(pred):
        for j, g in enumerate(gold):
            if cfg.require_label_match and p.category != g.category:
                continue
            iou = compute_iou(p.bbox, g.bbox)
            if iou >= cfg.iou_threshold:
                pairs.append((iou, i, j))
    return pairs


def _greedy(pairs: List[Tuple[float, int, int]]) -> List[Tuple[int, int]]:
    used_pred, used_gold = set(), set()
    matches = []
    for _, i, j in sorted(pairs, key=lambda t: (-t[0], t[1], t[2])):
        if i in used_pred or j in used_gold:
            continue
        used_pred.add(i)
        used_gold.add(j)
        matches.append((i, j))
    return matches


def _optimal(pairs: List[Tuple[float, int, int]], n_pred: int, n_gold: int) -> List[Tuple[int, int]]:
    if not pairs:
        return []
    weights = np.zeros((n_pred, n_gold))
    eligible = np.zeros((n_pred, n_gold), dtype=bool)
    for iou, i, j in pairs:
        weights[i, j] = iou
        eligible[i, j] = True
    # 先最大化匹配数，再最大化 IoU 总和
    bonus = float(min(n_pred, n_gold) + 1)
    rows, cols = linear_sum_assignment(-(weights + eligible * bonus))
    return sorted((int(i), int(j)) for i, j in zip(rows, cols) if eligible[i, j])


def layout_f1(pred: Sequence[LayoutItem], gold: Sequence[LayoutItem],
              cfg: Optional[LayoutMatchConfig] = None) -> LayoutScore:
    """单页匹配：TP = 接受的配对，FP = 未匹配预测，FN = 未匹配标注"""
    cfg = cfg or LayoutMatchConfig()
    pairs = _eligible(pred, gold, cfg)
    if cfg.strategy == "optimal":
        matches = _optimal(pairs, len(pred), len(gold))
    else:
        matches = _greedy(pairs)
    tp = len(matches)
    return score_from_counts(tp, len(pred) - tp, len(gold) - tp, matches)


def layout_f1_corpus(pages: Sequence[Tuple[Sequence[LayoutItem], Sequence[LayoutItem]]],
                     cfg: Optional[LayoutMatchConfig] = None) -> LayoutScore:
    """多页累计 TP/FP/FN 后计算（微平均）"""
    tp = fp = fn = 0
    for pred, gold in pages:
        score = layout_f1(pred, gold, cfg)
        tp += score.true_positives
        fp += score.false_positives
        fn += score.false_negatives
    return score_from_counts(tp, fp, fn)
