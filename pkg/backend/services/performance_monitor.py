"""
Performance Monitor
Tracks wall time and iteration throughput of solver stages.
"""
import time
from typing import Dict

import structlog

logger = structlog.get_logger()


class PerformanceMonitor:
    def __init__(self):
        self.metrics: Dict[str, Dict[str, float]] = {}

    def start(self, task_name: str):
        self.metrics[task_name] = {"start": time.perf_counter()}

    def stop(self, task_name: str, iterations: int = 0) -> float:
        if task_name in self.metrics:
            duration = time.perf_counter() - self.metrics[task_name]["start"]
            self.metrics[task_name]["duration"] = duration

            if iterations > 0:
                self.metrics[task_name]["iterations"] = iterations
                if duration > 0:
                    self.metrics[task_name]["iterations_per_sec"] = iterations / duration

            logger.debug("Task finished", task=task_name, duration_s=duration, iterations=iterations)
            return duration
        return 0.0

    def duration(self, task_name: str) -> float:
        return self.metrics.get(task_name, {}).get("duration", 0.0)

    def total(self, prefix: str = "") -> float:
        """Sum of finished durations whose task name starts with prefix."""
        return sum(
            m.get("duration", 0.0) for name, m in self.metrics.items() if name.startswith(prefix)
        )
