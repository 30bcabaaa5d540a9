"""
Metrics collection for search and fitting runs.

Tracks evaluation counts, fit failures and per-generation timings so that
reports can carry a summary of how a run spent its time.
"""

import time
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class MetricType(Enum):
    """Types of metrics"""

    COUNTER = "counter"
    GAUGE = "gauge"
    TIMER = "timer"


@dataclass
class Metric:
    """Individual metric data point"""

    name: str
    type: MetricType
    value: float
    timestamp: float
    tags: dict[str, str] = field(default_factory=dict)


class MetricsCollector:
    """Collects counters, gauges and timers in memory."""

    def __init__(self, app_name: str = "sharedsr", history: int = 1000):
        self.app_name = app_name
        self.history = history
        self.events: list[Metric] = []
        self.counters: dict[str, float] = defaultdict(float)
        self.gauges: dict[str, float] = {}
        self.timers: dict[str, list[float]] = defaultdict(list)
        self.start_time = time.perf_counter()

    def increment(self, name: str, value: float = 1, tags: dict[str, str] | None = None) -> None:
        """Increment a counter metric"""
        key = self._make_key(name, tags)
        self.counters[key] += value
        self._record(name, MetricType.COUNTER, self.counters[key], tags)

    def gauge(self, name: str, value: float, tags: dict[str, str] | None = None) -> None:
        """Set a gauge metric"""
        key = self._make_key(name, tags)
        self.gauges[key] = value
        self._record(name, MetricType.GAUGE, value, tags)

    def timer(self, name: str, tags: dict[str, str] | None = None) -> "TimerContext":
        """Context manager for timing operations"""
        return TimerContext(self, name, tags)

    def record_duration(
        self, name: str, duration: float, tags: dict[str, str] | None = None
    ) -> None:
        key = self._make_key(name, tags)
        self.timers[key].append(duration)
        self._record(name, MetricType.TIMER, duration, tags)

    def _make_key(self, name: str, tags: dict[str, str] | None = None) -> str:
        if tags:
            tag_str = ",".join(f"{k}={v}" for k, v in sorted(tags.items()))
            return f"{name},{tag_str}"
        return name

    def _record(
        self, name: str, metric_type: MetricType, value: float, tags: dict[str, str] | None
    ) -> None:
        self.events.append(
            Metric(name=name, type=metric_type, value=value, timestamp=time.time(), tags=tags or {})
        )
        if len(self.events) > self.history:
            del self.events[: len(self.events) - self.history]

    def _get_timer_stats(self) -> dict[str, dict[str, float]]:
        stats = {}
        for key, values in self.timers.items():
            if values:
                ordered = sorted(values)
                stats[key] = {
                    "count": len(values),
                    "total": sum(values),
                    "mean": sum(values) / len(values),
                    "min": ordered[0],
                    "max": ordered[-1],
                    "p50": ordered[len(ordered) // 2],
                    "p95": ordered[int(len(ordered) * 0.95)],
                }
        return stats

    def get_metrics(self) -> dict[str, Any]:
        """Current metrics snapshot"""
        return {
            "app_name": self.app_name,
            "elapsed_seconds": time.perf_counter() - self.start_time,
            "counters": dict(self.counters),
            "gauges": dict(self.gauges),
            "timers": self._get_timer_stats(),
        }


class TimerContext:
    """Context manager for timing operations"""

    def __init__(self, collector: MetricsCollector, name: str, tags: dict[str, str] | None = None):
        self.collector = collector
        self.name = name
        self.tags = tags
        self.start_time: float | None = None

    def __enter__(self) -> "TimerContext":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type: object, exc_val: object, exc_tb: object) -> None:
        if self.start_time is not None:
            duration = time.perf_counter() - self.start_time
            self.collector.record_duration(self.name, duration, self.tags)


class SearchMetrics:
    """Search-specific metrics tracking"""

    def __init__(self) -> None:
        self.collector = MetricsCollector()

    def track_evaluation(self, fit_failed: bool, finite: bool) -> None:
        self.collector.increment("search.evaluations")
        if fit_failed:
            self.collector.increment("search.fit_failures")
        if not finite:
            self.collector.increment("search.nonfinite_candidates")

    def track_generation(self, generation: int, best_loss: float, archive_size: int) -> None:
        self.collector.gauge("search.generation", generation)
        self.collector.gauge("search.best_loss", best_loss)
        self.collector.gauge("search.archive_size", archive_size)

    def generation_timer(self) -> TimerContext:
        return self.collector.timer("search.generation.duration")

    def count(self, name: str) -> int:
        return int(self.collector.counters.get(f"search.{name}", 0))

    def snapshot(self) -> dict[str, Any]:
        return self.collector.get_metrics()
