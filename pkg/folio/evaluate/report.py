"""结果汇总：相对改进、吞吐量与人工校对工作量推算"""

from typing import Dict, List, Mapping, Optional, Union

from pydantic import BaseModel, Field

from ..core.errors import ValidationFailure
from .metrics import MetricReport

SECONDS_PER_HOUR = 3600.0

# (键, 条件, 指标)，顺序与输出表格一致
TABLE_ROWS = (
    ("wer_raw", "Raw", "WER"),
    ("cer_raw", "Raw", "CER"),
    ("wer_norm", "Normalised", "WER"),
    ("cer_norm", "Normalised", "CER"),
)


class EffortProjection(BaseModel):
    """按 WER 比例推算的校对工作量"""
    base_hours: float
    sys_seconds_per_page: float
    sys_hours: float
    base_total_hours: float = Field(..., description="加上机器处理时间")
    sys_total_hours: float = Field(..., description="加上机器处理时间")


def effort_projection(base_seconds_per_page: float, base_wer: float, sys_wer: float, pages: int,
                      base_machine_seconds: float = 0.0, sys_machine_seconds: float = 0.0) -> EffortProjection:
    """校对时间与 WER 成正比：sys = base * sys_wer / base_wer"""
    if base_wer <= 0:
        raise ValidationFailure(f"base_wer must be > 0, got {base_wer}")
    if pages < 0 or base_seconds_per_page < 0 or sys_wer < 0:
        raise ValidationFailure("pages, seconds and error rates must be non-negative")
    sys_seconds = base_seconds_per_page * sys_wer / base_wer
    to_hours = pages / SECONDS_PER_HOUR
    return EffortProjection(
        base_hours=base_seconds_per_page * to_hours,
        sys_seconds_per_page=sys_seconds,
        sys_hours=sys_seconds * to_hours,
        base_total_hours=(base_seconds_per_page + base_machine_seconds) * to_hours,
        sys_total_hours=(sys_seconds + sys_machine_seconds) * to_hours,
    )


def relative_improvement(a: float, b: float) -> Optional[float]:
    """(a - b) / a，a 为 0 时无定义"""
    if a == 0:
        return None
    return (a - b) / a


class MetricComparison(BaseModel):
    key: str
    condition: str
    metric: str
    a: float
    b: float
    relative_improvement: Optional[float]


class ComparisonReport(BaseModel):
    label_a: str = "baseline"
    label_b: str = "system"
    rows: List[MetricComparison] = Field(default_factory=list)

    def row(self, key: str) -> MetricComparison:
        for r in self.rows:
            if r.key == key:
                return r
        raise KeyError(key)

    def to_table(self) -> str:
        """对齐的文本表：条件 / 指标 / 两个系统 / 相对改进"""
        header = ["Condition", "Metric", self.label_a, self.label_b, "Rel. impr."]
        body = []
        for r in self.rows:
            impr = "n/a" if r.relative_improvement is None else f"{r.relative_improvement * 100:.1f}%"
            body.append([r.condition, r.metric, f"{r.a:.3f}", f"{r.b:.3f}", impr])
        widths = [max(len(line[c]) for line in [header] + body) for c in range(len(header))]
        lines = []
        for line in [header] + body:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


Rates = Union[MetricReport, Mapping[str, float]]


def _rates(metrics: Rates) -> Dict[str, float]:
    return metrics.rates() if isinstance(metrics, MetricReport) else dict(metrics)


def report(metrics_a: Rates, metrics_b: Rates, label_a: str = "baseline",
           label_b: str = "system") -> ComparisonReport:
    """逐指标比较，只输出两边都有的指标"""
    a, b = _rates(metrics_a), _rates(metrics_b)
    rows = [
        MetricComparison(key=key, condition=condition, metric=metric, a=a[key], b=b[key],
                         relative_improvement=relative_improvement(a[key], b[key]))
        for key, condition, metric in TABLE_ROWS if key in a and key in b
    ]
    return ComparisonReport(label_a=label_a, label_b=label_b, rows=rows)


class Throughput(BaseModel):
    pages: int
    mean_latency_ms: float
    seconds_per_page: float = Field(..., description="墙钟时间 / 页数")
    pages_per_hour: float


def throughput(timings_ms: Mapping[int, float], wall_seconds: float) -> Throughput:
    pages = len(timings_ms)
    if pages == 0:
        return Throughput(pages=0, mean_latency_ms=0.0, seconds_per_page=0.0, pages_per_hour=0.0)
    per_page = wall_seconds / pages
    return Throughput(
        pages=pages,
        mean_latency_ms=sum(timings_ms.values()) / pages,
        seconds_per_page=per_page,
        pages_per_hour=SECONDS_PER_HOUR / per_page if per_page > 0 else 0.0,
    )
