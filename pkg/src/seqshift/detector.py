"""The sequential detector: window update, summary projection, statistic,
threshold comparison.

Each arriving instance is summarised, pushed into the sliding window, and
-- once the window is full -- the configured two-sample statistic against
the reference is compared to the threshold schedule.  Detection is a halt
state: a detector that has fired refuses further steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from .calibration import ThresholdSchedule
from .statistics import (
    DEFAULT_REFRESH_EVERY,
    KS,
    MEAN_DIFF,
    MMD,
    STATISTIC_KINDS,
    Kernel,
    ReferenceSet,
    SlidingWindow,
    ks_distance,
    mean_difference,
    mmd2_u,
)
from .summaries import SummaryStatistic, apply_summary, identity


@dataclass(frozen=True)
class DetectorConfig:
    """Everything a detector run needs, validated for consistency."""

    reference: ReferenceSet
    schedule: ThresholdSchedule
    window_size: int
    statistic: str = KS
    summary: SummaryStatistic = None
    kernel: Optional[Kernel] = None
    refresh_every: int = DEFAULT_REFRESH_EVERY

    def __post_init__(self):
        if self.summary is None:
            object.__setattr__(self, "summary", identity(self.reference.dim))
        if self.statistic not in STATISTIC_KINDS:
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.schedule.w != self.window_size:
            raise ValueError(
                f"schedule was built for w={self.schedule.w}, detector uses "
                f"w={self.window_size}"
            )
        if self.summary.out_dim != self.reference.dim:
            raise ValueError(
                f"summary out_dim {self.summary.out_dim} != reference dimension "
                f"{self.reference.dim}"
            )
        if self.statistic in (KS, MEAN_DIFF) and self.reference.dim != 1:
            raise ValueError(f"{self.statistic} requires scalar summaries")
        if self.statistic == MMD:
            if self.kernel is None:
                raise ValueError("the MMD statistic requires a kernel")
            if self.window_size < 2:
                raise ValueError("the MMD statistic needs window size >= 2")


@dataclass
class DetectionResult:
    """Outcome of one detector run.

    ``detection_time`` is the absolute stream step of the detection;
    ``run_length`` counts test opportunities (first test at step w counts
    as 1), the scale on which run-length distributions are reported.
    Censored runs hit the step cap without any threshold exceedance.
    """

    detection_time: Optional[int]
    censored: bool
    cap: int
    w: int
    trace: Optional[List[Tuple[int, float, float, bool]]] = None

    @property
    def run_length(self) -> Optional[int]:
        if self.detection_time is None:
            return None
        return self.detection_time - self.w + 1


class Detector:
    """Single-owner sequential detector state."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        self.t = 0
        self.last_statistic: Optional[float] = None
        self.detected_at: Optional[int] = None
        ref = config.reference
        self.window = SlidingWindow(
            capacity=config.window_size,
            dim=ref.dim,
            ks_reference=ref if config.statistic == KS else None,
            kernel=config.kernel if config.statistic == MMD else None,
            kernel_reference=ref if config.statistic == MMD else None,
            refresh_every=config.refresh_every,
        )

    def _compute_statistic(self) -> float:
        cfg = self.config
        if cfg.statistic == KS:
            return ks_distance(cfg.reference, self.window)
        if cfg.statistic == MEAN_DIFF:
            return mean_difference(cfg.reference, self.window)
        return mmd2_u(cfg.reference, self.window, cfg.kernel)

    def step(self, x, y=None) -> bool:
        """Consume one instance; True when this step fires a detection.

        Warm-up steps (t < w) never test.  Stepping a detector that has
        already fired is an error: detection halts the run.
        """
        if self.detected_at is not None:
            raise RuntimeError(
                "detector has already fired; adaptation/restart is out of scope"
            )
        s = apply_summary(self.config.summary, x, y)
        self.window.push(s)
        self.t += 1
        threshold = self.config.schedule.threshold_at(self.t)
        if threshold is None:
            return False
        stat = self._compute_statistic()
        self.last_statistic = stat
        if stat > threshold:
            self.detected_at = self.t
            return True
        return False


def run(
    config: DetectorConfig,
    stream: Iterable,
    cap: int,
    trace: bool = False,
) -> DetectionResult:
    """Feed a stream into a fresh detector until detection or ``cap`` steps.

    Stream elements are raw instances, or ``(x, y)`` pairs when the
    summary needs labels.  A stream that ends before the window fills is
    an error; ending after that censors the run at the steps consumed.
    """
    if cap < config.window_size:
        raise ValueError("cap must be at least the window size")
    detector = Detector(config)
    needs_label = config.summary.kind == "model_loss"
    rows: Optional[List[Tuple[int, float, float, bool]]] = [] if trace else None
    for element in stream:
        if needs_label:
            x, y = element
            detected = detector.step(x, y)
        else:
            detected = detector.step(element)
        if rows is not None and detector.last_statistic is not None:
            threshold = config.schedule.threshold_at(detector.t)
            if threshold is not None:
                rows.append((detector.t, detector.last_statistic, threshold, detected))
        if detected:
            return DetectionResult(
                detection_time=detector.t,
                censored=False,
                cap=cap,
                w=config.window_size,
                trace=rows,
            )
        if detector.t >= cap:
            break
    if detector.t < config.window_size:
        raise ValueError(
            f"stream ended after {detector.t} steps, before the window "
            f"(w={config.window_size}) could fill"
        )
    return DetectionResult(
        detection_time=None,
        censored=True,
        cap=min(cap, detector.t),
        w=config.window_size,
        trace=rows,
    )
