"""评估：转写错误率、版面 F1 与结果汇总"""

from .metrics import (
    EditCounts, ErrorCounts, MetricReport, TranscriptPair, compute_metric_report, corpus_cer,
    corpus_errors, corpus_wer, edit_distance, levenshtein, normalise_text,
)
from .layout import LayoutMatchConfig, LayoutScore, compute_iou, layout_f1, layout_f1_corpus
from .report import (
    ComparisonReport, EffortProjection, MetricComparison, Throughput, effort_projection, relative_improvement,
    report, throughput,
)

__all__ = [
    'EditCounts', 'ErrorCounts', 'MetricReport', 'TranscriptPair', 'compute_metric_report',
    'corpus_cer', 'corpus_errors', 'corpus_wer', 'edit_distance', 'levenshtein', 'normalise_text',
    'LayoutMatchConfig', 'LayoutScore', 'compute_iou', 'layout_f1', 'layout_f1_corpus',
    'ComparisonReport', 'EffortProjection', 'MetricComparison', 'Throughput', 'effort_projection',
    'relative_improvement', 'report', 'throughput',
]
