"""Threshold variance estimators, comparison estimators, and jump recovery.

All operations are pure functions of a SamplePath (observations + grid) and
a ThresholdSpec. Sums are exact (math.fsum), and the truncated sum is formed
as total minus excluded so that

    realized_variance == threshold_realized_variance + sum over flagged
    intervals of (dX_i)^2

holds as a floating-point identity, not just to tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AdmissibilityWarning,
    DegenerateStatisticError,
    InvalidArgumentError,
    UnsupportedError,
)
from .models import JumpEvent, SamplePath

_POWER_LAW = "power-law"


@dataclass(frozen=True, slots=True)
class ThresholdSpec:
    """Power-law threshold r(dt) = scale_c * dt**beta.

    per_interval=True evaluates r at each observation lag dt_i; False uses
    the single global lag h = max_i dt_i. On a uniform grid the two agree.
    Construction is permissive (any finite beta and scale_c) so that
    inadmissible choices can be studied; estimators require scale_c > 0.
    """

    beta: float
    scale_c: float = 1.0
    per_interval: bool = True
    family: str = _POWER_LAW

    def __post_init__(self):
        if self.family != _POWER_LAW:
            raise InvalidArgumentError(f"unknown threshold family {self.family!r}")
        if not math.isfinite(self.beta) or not math.isfinite(self.scale_c):
            raise InvalidArgumentError("beta and scale_c must be finite")

    def r_at(self, dt):
        """Evaluate r at a lag (scalar or array)."""
        return self.scale_c * dt ** self.beta


def threshold_admissible(spec: ThresholdSpec) -> tuple[bool, str]:
    """Whether r separates diffusion from jumps as the lag shrinks.

    Requires r(h) -> 0 and h*log(1/h)/r(h) -> 0, which for a power law
    holds exactly when 0 < beta < 1 and scale_c > 0.
    """
    if spec.scale_c <= 0.0:
        return False, f"scale_c must be positive, got {spec.scale_c}"
    if spec.beta <= 0.0:
        return False, f"r(h) = c*h^{spec.beta} does not vanish as h -> 0"
    if spec.beta >= 1.0:
        return False, (f"h*log(1/h)/r(h) ~ h^{1.0 - spec.beta}*log(1/h) "
                       "diverges as h -> 0")
    return True, "r(h) -> 0 and h*log(1/h)/r(h) -> 0"


@dataclass(frozen=True, eq=False)
class JumpMatchStats:
    """Interval-level comparison of flags against true jump events."""

    true_positives: int
    false_positives: int
    false_negatives: int
    size_errors: tuple[float, ...]          # gamma_hat - gamma, single-jump intervals
    multi_jump_intervals: tuple[int, ...]   # intervals holding >= 2 true jumps

    @property
    def recall(self) -> float | None:
        jumpy = self.true_positives + self.false_negatives
        return None if jumpy == 0 else self.true_positives / jumpy


@dataclass(frozen=True, eq=False)
class JumpDetectionResult:
    """Per-interval indicators (dX_i)^2 > r and the implied size estimates."""

    indicators: np.ndarray
    estimated_sizes: dict[int, float]
    match: JumpMatchStats | None = None

    @property
    def flagged_intervals(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.nonzero(self.indicators)[0])


@dataclass(frozen=True, eq=False)
class EstimationReport:
    """All estimators evaluated once on a path with a shared threshold."""

    iv_threshold: float
    iq_threshold: float | None
    realized_variance: float
    bipower_variation: float
    flagged_intervals: tuple[int, ...]
    jump_size_estimates: dict[int, float]
    threshold_used: ThresholdSpec
    normalized_bias: float | None
    admissible: bool
    admissibility_reason: str


def realized_variance(path: SamplePath) -> float:
    """Sum of squared increments over the grid."""
    dx = _increments(path)
    return _fsum(dx * dx)


def threshold_realized_variance(path: SamplePath, spec: ThresholdSpec) -> float:
    """Truncated realized variance: squared increments at most r are kept.

    Computed as the full sum minus the flagged sum so the complementarity
    identity with realized_variance is exact.
    """
    _warn_if_inadmissible(spec)
    dx = _increments(path)
    keep = _kept_mask(path, spec, dx)
    dx2 = dx * dx
    return _fsum(dx2) - _fsum(dx2[~keep])


def threshold_quarticity(path: SamplePath, spec: ThresholdSpec) -> float:
    """Truncated quarticity sum((dX_i)^4 * I) / (3h); uniform grids only."""
    _warn_if_inadmissible(spec)
    if not path.grid.is_uniform:
        raise UnsupportedError("threshold_quarticity requires a uniform grid")
    dx = _increments(path)
    keep = _kept_mask(path, spec, dx)
    dx2 = dx * dx
    return _fsum(dx2[keep] * dx2[keep]) / (3.0 * path.grid.h)


def bipower_variation(path: SamplePath) -> float:
    """(pi/2) * sum |dX_i| * |dX_{i-1}|, jump-robust baseline estimator."""
    dx = _increments(path)
    if dx.size < 2:
        raise InvalidArgumentError("bipower variation needs at least 2 increments")
    a = np.abs(dx)
    return (math.pi / 2.0) * _fsum(a[1:] * a[:-1])


def detect_jumps(path: SamplePath, spec: ThresholdSpec,
                 true_jumps: tuple[JumpEvent, ...] | None = None) -> JumpDetectionResult:
    """Flag intervals with (dX_i)^2 > r and estimate jump sizes there.

    With ground-truth events, intervals are matched greedily: an interval
    holding at least one true jump counts as detected iff it is flagged.
    Size errors are recorded for matched single-jump intervals only;
    intervals holding several true jumps are listed separately.
    """
    _warn_if_inadmissible(spec)
    dx = _increments(path)
    flagged = ~_kept_mask(path, spec, dx)
    sizes = {int(i): float(dx[i]) for i in np.nonzero(flagged)[0]}
    match = None
    if true_jumps is not None:
        match = _match_events(path, flagged, sizes, true_jumps)
    return JumpDetectionResult(flagged, sizes, match)


def normalized_bias(path: SamplePath, spec: ThresholdSpec, true_iv: float) -> float:
    """(IV_hat - true_iv) / sqrt((2/3) * sum (dX_i)^4 * I).

    The denominator uses the raw truncated fourth-power sum (no lag factor);
    under an admissible threshold the statistic is asymptotically N(0, 1).
    Uniform grids only.
    """
    _warn_if_inadmissible(spec)
    if not path.grid.is_uniform:
        raise UnsupportedError("normalized_bias requires a uniform grid")
    dx = _increments(path)
    keep = _kept_mask(path, spec, dx)
    dx2 = dx * dx
    quartic = _fsum(dx2[keep] * dx2[keep])
    if quartic <= 0.0:
        raise DegenerateStatisticError(
            "all increments excluded or zero; normalized bias undefined")
    iv_hat = _fsum(dx2) - _fsum(dx2[~keep])
    return (iv_hat - float(true_iv)) / math.sqrt((2.0 / 3.0) * quartic)


def jump_size_error_stat(path: SamplePath, detection: JumpDetectionResult,
                         true_jumps: tuple[JumpEvent, ...]) -> float:
    """sqrt(n) * sum_i (gamma_hat_i - gamma_i * I[interval i has a jump]).

    gamma_i is the first true jump size in interval i. Uniform grids with
    finite-activity ground truth only.
    """
    if true_jumps is None:
        raise UnsupportedError("jump_size_error_stat requires ground-truth jumps")
    if not path.grid.is_uniform:
        raise UnsupportedError("jump_size_error_stat requires a uniform grid")
    first_sizes: dict[int, float] = {}
    for ev in sorted(true_jumps, key=lambda e: e.time):
        i = _containing_interval(path.grid.times, ev.time)
        first_sizes.setdefault(i, ev.size)
    total = (math.fsum(detection.estimated_sizes.values())
             - math.fsum(first_sizes.values()))
    return math.sqrt(path.grid.n) * total


def estimation_report(path: SamplePath, spec: ThresholdSpec,
                      true_iv: float | None = None) -> EstimationReport:
    """Evaluate every estimator once, sharing a single threshold mask."""
    _warn_if_inadmissible(spec)
    dx = _increments(path)
    keep = _kept_mask(path, spec, dx)
    dx2 = dx * dx
    rv = _fsum(dx2)
    iv_hat = rv - _fsum(dx2[~keep])
    uniform = path.grid.is_uniform
    iq_hat = _fsum(dx2[keep] * dx2[keep]) / (3.0 * path.grid.h) if uniform else None
    bias = None
    if true_iv is not None and uniform:
        bias = normalized_bias(path, spec, true_iv)
    flagged_idx = tuple(int(i) for i in np.nonzero(~keep)[0])
    admissible, reason = threshold_admissible(spec)
    return EstimationReport(
        iv_threshold=iv_hat,
        iq_threshold=iq_hat,
        realized_variance=rv,
        bipower_variation=bipower_variation(path),
        flagged_intervals=flagged_idx,
        jump_size_estimates={i: float(dx[i]) for i in flagged_idx},
        threshold_used=spec,
        normalized_bias=bias,
        admissible=admissible,
        admissibility_reason=reason,
    )


def _increments(path: SamplePath) -> np.ndarray:
    dx = path.increments
    if dx.size < 1:
        raise InvalidArgumentError("path needs at least 2 observations")
    return dx

def _kept_mask(path: SamplePath, spec: ThresholdSpec, dx: np.ndarray) -> np.ndarray:
    """Boolean mask of increments with (dX_i)^2 <= r; ties are kept."""
    if spec.scale_c <= 0.0:
        raise InvalidArgumentError(
            f"threshold scale must be positive to evaluate r, got {spec.scale_c}")
    r = spec.r_at(path.grid.widths) if spec.per_interval else spec.r_at(path.grid.h)
    return dx * dx <= r


def _fsum(values: np.ndarray) -> float:
    # Exact accumulation; order-independent, so permutation invariance of the
    # quadratic sums holds bitwise.
    return math.fsum(values.tolist())


def _warn_if_inadmissible(spec: ThresholdSpec) -> None:
    admissible, reason = threshold_admissible(spec)
    if not admissible and spec.scale_c > 0.0:
        warnings.warn(f"inadmissible threshold: {reason}", AdmissibilityWarning,
                      stacklevel=3)


def _containing_interval(times: np.ndarray, event_time: float) -> int:
    """Index i of the observation interval (t_i, t_{i+1}] containing the time."""
    i = int(np.searchsorted(times, event_time, side="left")) - 1
    return min(max(i, 0), times.size - 2)


def _match_events(path, flagged, sizes, true_jumps) -> JumpMatchStats:
    per_interval: dict[int, list[float]] = {}
    for ev in sorted(true_jumps, key=lambda e: e.time):
        i = _containing_interval(path.grid.times, ev.time)
        per_interval.setdefault(i, []).append(ev.size)
    tp = fp = fn = 0
    errors: list[float] = []
    multi: list[int] = []
    for i, jump_sizes in per_interval.items():
        if len(jump_sizes) > 1:
            multi.append(i)
        if flagged[i]:
            tp += 1
            if len(jump_sizes) == 1:
                errors.append(sizes[i] - jump_sizes[0])
        else:
            fn += 1
    fp = int(np.count_nonzero(flagged)) - tp
    return JumpMatchStats(tp, fp, fn, tuple(errors), tuple(sorted(multi)))
