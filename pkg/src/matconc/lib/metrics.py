"""Stage timing for experiment runs.

Monte Carlo stages report how long they ran and how many trials they
processed. The summary goes into the ``runtime`` section of a report,
never into its CSV tables, so tables stay identical across reruns.

Examples:
    Time a stage and count the trials it handled::

        >>> reset_timings()
        >>> @tracked("draw", trials_arg="trials")
        ... def draw(trials: int) -> int:
        ...     return trials
        >>> draw(trials=500)
        500
        >>> timing_summary()["stages"]["draw"]["trials"]
        500

    Time a block that is not a single function::

        >>> with timed("fit"):
        ...     pass
        >>> timing_summary()["stages"]["fit"]["calls"]
        1
"""

import inspect
import logging
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from functools import wraps
from typing import TypedDict

from pydantic import BaseModel

logger = logging.getLogger(__name__)


class StageTimingDict(TypedDict):
    calls: int
    failures: int
    seconds: float
    slowest_seconds: float
    trials: int
    trials_per_second: float


class TimingSummary(TypedDict):
    wall_seconds: float
    stages: dict[str, StageTimingDict]


class StageTiming(BaseModel):
    """Accumulated timing of one named stage."""

    calls: int = 0
    failures: int = 0
    seconds: float = 0.0
    slowest_seconds: float = 0.0
    trials: int = 0

    @property
    def trials_per_second(self) -> float:
        return self.trials / self.seconds if self.seconds > 0.0 else 0.0

    def add(self, seconds: float, trials: int, failed: bool) -> None:
        self.calls += 1
        self.failures += int(failed)
        self.seconds += seconds
        self.slowest_seconds = max(self.slowest_seconds, seconds)
        self.trials += trials

    def as_dict(self) -> StageTimingDict:
        return StageTimingDict(
            calls=self.calls,
            failures=self.failures,
            seconds=round(self.seconds, 3),
            slowest_seconds=round(self.slowest_seconds, 3),
            trials=self.trials,
            trials_per_second=round(self.trials_per_second, 1),
        )


class StageTimer:
    """Timings of every stage since the last reset."""

    def __init__(self) -> None:
        self.stages: dict[str, StageTiming] = {}
        self.started = time.perf_counter()

    def record(self, stage: str, seconds: float, *, trials: int = 0, failed: bool = False) -> None:
        self.stages.setdefault(stage, StageTiming()).add(seconds, trials, failed)

    def summary(self) -> TimingSummary:
        return TimingSummary(
            wall_seconds=round(time.perf_counter() - self.started, 3),
            stages={name: timing.as_dict() for name, timing in self.stages.items()},
        )

    def reset(self) -> None:
        self.stages.clear()
        self.started = time.perf_counter()


timer = StageTimer()


@contextmanager
def timed(stage: str, *, trials: int = 0) -> Iterator[None]:
    """Record the duration of the enclosed block under ``stage``."""
    start = time.perf_counter()
    failed = False
    try:
        yield
    except BaseException:
        failed = True
        raise
    finally:
        timer.record(stage, time.perf_counter() - start, trials=trials, failed=failed)


def tracked[**P, T](
    stage: str | None = None,
    *,
    trials_arg: str | None = None,
) -> Callable[[Callable[P, T]], Callable[P, T]]:
    """Time every call of the decorated function.

    Args:
        stage: Name to record under; defaults to the function name.
        trials_arg: Parameter whose value is added to the stage's trial count.
    """

    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        name = stage or func.__name__
        signature = inspect.signature(func)

        @wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            trials = 0
            if trials_arg is not None:
                trials = int(signature.bind(*args, **kwargs).arguments.get(trials_arg, 0))
            with timed(name, trials=trials):
                return func(*args, **kwargs)

        return wrapper

    return decorator


def timing_summary() -> TimingSummary:
    return timer.summary()


def log_timing_summary() -> None:
    summary = timer.summary()
    trials = sum(s["trials"] for s in summary["stages"].values())
    logger.info("Ran %d stages over %d trials in %.1fs", len(summary["stages"]), trials, summary["wall_seconds"])
    for name, s in summary["stages"].items():
        logger.debug("  %s: %d calls, %.3fs, %d trials", name, s["calls"], s["seconds"], s["trials"])


def reset_timings() -> None:
    timer.reset()
