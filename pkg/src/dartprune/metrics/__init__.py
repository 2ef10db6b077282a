"""
Prometheus metrics for dartprune

Counters and histograms for pruning runs and bound checks. The CLI is a
short-lived process, so instead of serving /metrics the registry is dumped
to a node-exporter textfile on request (``--metrics-out``).
"""
import time
from typing import Dict, Optional

from prometheus_client import REGISTRY, Counter, Histogram, Info, write_to_textfile

from dartprune.logging_config import get_logger

logger = get_logger(__name__)


system_info = Info(
    'dartprune_build',
    'dartprune build information'
)

system_info.info({'version': '0.1.0'})


# Pruning Metrics
prunes_total = Counter(
    'dartprune_prunes_total',
    'Total pruning runs',
    ['method', 'status']  # method: dart/random/importance, status: success/failure
)

prune_duration_seconds = Histogram(
    'dartprune_prune_duration_seconds',
    'Pruning wall time in seconds',
    ['method'],
    buckets=[0.001, 0.005, 0.01, 0.025, 0.05, 0.08, 0.1, 0.25, 0.5, 1, 5]
)

tokens_total = Counter(
    'dartprune_tokens_total',
    'Tokens seen by pruning runs',
    ['outcome']  # outcome: retained/pruned
)


# Verification Metrics
bound_checks_total = Counter(
    'dartprune_bound_checks_total',
    'Bound checks performed',
    ['check', 'result']  # check: lemma1/lemma2/theorem1, result: ok/violated
)


def record_retention(retained: int, pruned: int):
    """Count the outcome of one retention decision"""
    tokens_total.labels(outcome='retained').inc(retained)
    tokens_total.labels(outcome='pruned').inc(pruned)


def record_bound_check(check: str, ok: bool):
    bound_checks_total.labels(check=check, result='ok' if ok else 'violated').inc()


class track_prune:
    """
    Context manager for tracking one pruning run

    Usage:
        with track_prune('dart'):
            result = retain(...)
    """

    def __init__(self, method: str):
        self.method = method
        self.start_time: Optional[float] = None
        self.duration: float = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = time.perf_counter() - self.start_time
        status = 'success' if exc_type is None else 'failure'
        prunes_total.labels(method=self.method, status=status).inc()
        prune_duration_seconds.labels(method=self.method).observe(self.duration)
        return False


def write_metrics(path: str):
    """Dump the registry to a textfile-collector file"""
    write_to_textfile(path, REGISTRY)
    logger.info("metrics_written", path=path)


def sample_value(name: str, labels: Optional[Dict[str, str]] = None) -> float:
    """Current value of one sample, 0.0 when it was never touched"""
    value = REGISTRY.get_sample_value(name, labels or {})
    return 0.0 if value is None else value
