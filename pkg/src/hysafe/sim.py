"""Monte Carlo fault injection over the fused planning stack.

Each trial injects every FMEA failure independently. An injected failure is
caught by the policy monitor, or (for kinematic failures of the planner
output) by the safety evaluator's physics check, or it escapes. Plan
arbitration then picks the trajectory that actually runs.

Random draws come from a Philox stream keyed on ``(seed, entry id)`` whose
counter is the trial index, so any trial's draws are a pure function of
``(seed, trial, entry id)``. Results are therefore identical for any chunking
or number of workers.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .fmea import apply_fmea_mitigations
from .fta import or_tree, top_event_probability
from .model import (
    RATING_MAX,
    RATING_MIN,
    DomainError,
    FmeaEntry,
    Guideword,
    HazardProject,
)

DRAWS_PER_TRIAL = 4  # one Philox block: occurrence, monitor, maneuver, spare
DEFAULT_CHUNK = 1 << 16

KINEMATIC_GUIDEWORDS = frozenset({Guideword.VALUE_TOO_HIGH, Guideword.VALUE_TOO_LOW})


def _check_rating(name: str, value: int) -> None:
    if not isinstance(value, (int, np.integer)) or not RATING_MIN <= value <= RATING_MAX:
        raise DomainError(f"{name} out of range [{RATING_MIN},{RATING_MAX}]: {value!r}")


def occurrence_probability(occurrence: int, occurrence_scale: float = 2.0) -> float:
    """Per-trial injection probability for an ordinal occurrence rating.

    ``10 ** ((O - 10) / scale)``: O=10 always occurs, each step down divides
    by ``10 ** (1 / scale)``.
    """
    _check_rating("occurrence", occurrence)
    if not occurrence_scale > 0:
        raise DomainError("occurrence_scale must be > 0")
    return 10.0 ** ((occurrence - 10) / occurrence_scale)


def miss_probability(detection: int, detection_scale: float = 10.0) -> float:
    _check_rating("detection", detection)
    if not detection_scale > 0:
        raise DomainError("detection_scale must be > 0")
    return min(1.0, detection / detection_scale)


# --- trajectories and the safety evaluator ---------------------------------


@dataclass(frozen=True)
class TrajectoryCandidate:
    waypoints: tuple[tuple[float, float, float], ...]  # (x m, y m, t s)
    confidence: float
    source_flags: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise DomainError("a trajectory needs at least 2 waypoints")
        ts = [w[2] for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DomainError("waypoint times must be strictly increasing")
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class PhysicsLimits:
    a_lat_max: float = 9.0
    a_long_max: float = 10.0

    def __post_init__(self):
        if not (self.a_lat_max > 0 and self.a_long_max > 0):
            raise DomainError("physics limits must be positive")


@dataclass(frozen=True)
class PhysicsVerdict:
    passed: bool
    reason: str = ""
    quantity: str = ""  # "lateral", "longitudinal" or "degenerate"
    segment: int = -1
    value: float = 0.0

    def __bool__(self) -> bool:
        return self.passed


PASS = PhysicsVerdict(True)


def physics_check(candidate: TrajectoryCandidate, limits: PhysicsLimits = PhysicsLimits()) -> PhysicsVerdict:
    """Reject trajectories no vehicle could follow.

    Segment speeds come from waypoint spacing. Longitudinal acceleration is
    the speed change between consecutive segments over the time between their
    midpoints; lateral acceleration is v**2 * curvature, with curvature taken
    from the circle through each waypoint triple. Segments are scanned in
    order and the first violation is reported.
    """
    pts = np.asarray(candidate.waypoints, dtype=float)
    xy, t = pts[:, :2], pts[:, 2]
    seg = np.diff(xy, axis=0)
    length = np.hypot(seg[:, 0], seg[:, 1])
    dt = np.diff(t)
    speed = length / dt

    if len(length) == 1 and length[0] == 0.0:
        return PhysicsVerdict(False, "degenerate segment 0 (coincident waypoints)", "degenerate", 0)
    for i in range(1, len(length)):
        mid_dt = (t[i + 1] - t[i - 1]) / 2.0
        a_long = abs(speed[i] - speed[i - 1]) / mid_dt
        if a_long > limits.a_long_max:
            return PhysicsVerdict(
                False,
                f"longitudinal acceleration {a_long:.2f} m/s^2 exceeds {limits.a_long_max:g} m/s^2 "
                f"between segments {i - 1} and {i}",
                "longitudinal", i, float(a_long))
        if length[i - 1] == 0.0 or length[i] == 0.0:
            bad = i - 1 if length[i - 1] == 0.0 else i
            return PhysicsVerdict(False, f"degenerate segment {bad} (coincident waypoints)", "degenerate", bad)
        a, b = length[i - 1], length[i]
        c = float(np.hypot(*(xy[i + 1] - xy[i - 1])))
        cross = seg[i - 1, 0] * seg[i, 1] - seg[i - 1, 1] * seg[i, 0]
        curvature = abs(cross) * 2.0 / (a * b * c) if c > 0 else math.inf  # 4*area/(abc)
        v = (speed[i - 1] + speed[i]) / 2.0
        a_lat = v * v * curvature
        if a_lat > limits.a_lat_max:
            return PhysicsVerdict(
                False,
                f"lateral acceleration {a_lat:.2f} m/s^2 exceeds {limits.a_lat_max:g} m/s^2 "
                f"at waypoint {i} (segments {i - 1}-{i})",
                "lateral", i, float(a_lat))
    return PASS


def arbitrate(candidates) -> int | None:
    """Index of the most confident candidate both checks passed, else None.

    ``candidates`` holds ``(TrajectoryCandidate, monitor_pass, evaluator_pass)``
    triples. Ties go to the lowest index. ``None`` is the fallback signal
    (execute a minimal-risk maneuver).
    """
    best = None
    for i, (cand, monitor_ok, evaluator_ok) in enumerate(candidates):
        if monitor_ok and evaluator_ok and (best is None or cand.confidence > candidates[best][0].confidence):
            best = i
    return best


def turn_trajectory(speed: float, radius: float, angle_deg: float, steps: int = 6,
                    confidence: float = 0.95, flags=frozenset()) -> TrajectoryCandidate:
    """Constant-speed arc; timing chosen so chord speed equals ``speed``."""
    step = math.radians(angle_deg) / steps
    dt = 2.0 * radius * math.sin(step / 2.0) / speed
    wps = tuple((radius * math.sin(k * step), radius * (1.0 - math.cos(k * step)), k * dt) for k in range(steps + 1))
    return TrajectoryCandidate(wps, confidence, frozenset(flags))


def speed_profile_trajectory(speeds, dt: float, confidence: float = 0.95, flags=frozenset()) -> TrajectoryCandidate:
    """Straight-line trajectory whose k-th segment runs at ``speeds[k]``."""
    x = [0.0]
    for v in speeds:
        x.append(x[-1] + v * dt)
    return TrajectoryCandidate(tuple((xi, 0.0, k * dt) for k, xi in enumerate(x)), confidence, frozenset(flags))


# What a planner with no embedded physical constraints emits when it fails.
# Some of these are still within vehicle limits; the evaluator cannot catch those.
FAULTY_MANEUVERS: tuple[tuple[str, TrajectoryCandidate], ...] = (
    ("sharp_turn_at_highway_speed", turn_trajectory(30.0, 10.0, 90.0)),
    ("emergency_stop", speed_profile_trajectory([26.8, 0.0], 0.5)),
    ("tight_curve", turn_trajectory(25.0, 40.0, 45.0, steps=4)),
    ("hard_brake", speed_profile_trajectory([30.0, 22.5, 15.0], 0.5)),
    ("fast_sweeper", turn_trajectory(30.0, 150.0, 30.0, steps=4)),
    ("late_brake", speed_profile_trajectory([20.0, 16.0, 12.0], 0.5)),
)

NOMINAL_TRAJECTORY = speed_profile_trajectory([25.0] * 6, 0.5, confidence=0.8)


def physics_escape_factor(limits: PhysicsLimits = PhysicsLimits()) -> float:
    """Fraction of faulty maneuvers that pass the physics check."""
    passed = sum(1 for _, c in FAULTY_MANEUVERS if physics_check(c, limits))
    return passed / len(FAULTY_MANEUVERS)


def is_kinematic(project: HazardProject, entry: FmeaEntry) -> bool:
    """Failures graded too-high/too-low reach the physics check."""
    mode = project.failure_mode(entry.failure_mode)
    return mode is not None and bool(mode.guidewords & KINEMATIC_GUIDEWORDS)


# --- simulation ---------------------------------------------------------------


@dataclass(frozen=True)
class ModeStats:
    entry_id: str
    failure_mode: str
    injected: int
    detected_by_monitor: int
    detected_by_evaluator: int
    escaped: int
    residual_rate: float
    wilson_95_interval: tuple[float, float]
    analytic_rate: float


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    seed: int
    mitigated: bool
    modes: tuple[ModeStats, ...]
    escaped_trials: int
    residual_rate: float
    wilson_95_interval: tuple[float, float]
    analytic_rate: float
    limits: PhysicsLimits = field(default_factory=PhysicsLimits)

    def mode(self, entry_id: str) -> ModeStats:
        return next(m for m in self.modes if m.entry_id == entry_id)


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    rate = k / n
    return (min(float(ci.low), rate), max(float(ci.high), rate))


def _stream_key(seed: int, entry_id: str) -> np.ndarray:
    digest = hashlib.blake2b(entry_id.encode("utf-8"), digest_size=8).digest()
    return np.array([seed, int.from_bytes(digest, "little")], dtype=np.uint64)


def trial_draws(seed: int, entry_id: str, start: int, count: int) -> np.ndarray:
    """Uniform draws for trials ``start .. start+count-1``; row i is trial start+i."""
    bg = np.random.Philox(key=_stream_key(seed, entry_id))
    if start:
        bg.advance(start)
    return np.random.Generator(bg).random((count, DRAWS_PER_TRIAL))


@dataclass(frozen=True)
class _Plan:
    entry_id: str
    failure_mode: str
    p_occ: float
    p_miss: float
    kinematic: bool


def _simulate_chunk(plans, seed, start, count, verdicts):
    counts = {}
    any_escape = np.zeros(count, dtype=bool)
    n_maneuvers = len(FAULTY_MANEUVERS)
    for plan in plans:
        u = trial_draws(seed, plan.entry_id, start, count)
        injected = u[:, 0] < plan.p_occ
        by_monitor = injected & (u[:, 1] < 1.0 - plan.p_miss)
        escaped = injected & ~by_monitor
        by_evaluator = 0
        if plan.kinematic:
            choice = np.minimum((u[:, 2] * n_maneuvers).astype(np.int64), n_maneuvers - 1)
            for row in np.flatnonzero(escaped):
                cand = FAULTY_MANEUVERS[choice[row]][1]
                verdict = verdicts[choice[row]]
                picked = arbitrate([(cand, True, verdict.passed), (NOMINAL_TRAJECTORY, True, True)])
                if picked != 0:
                    escaped[row] = False
                    by_evaluator += 1
                elif not verdict.passed:  # pragma: no cover - arbitration invariant
                    raise AssertionError("arbitration selected a physics-rejected trajectory")
        any_escape |= escaped
        counts[plan.entry_id] = np.array(
            [injected.sum(), by_monitor.sum(), by_evaluator, escaped.sum()], dtype=np.int64)
    return counts, int(any_escape.sum())


def run_simulation(
    project: HazardProject,
    mitigated: bool = False,
    *,
    trials: int | None = None,
    seed: int | None = None,
    limits: PhysicsLimits = PhysicsLimits(),
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> SimulationReport:
    """Inject every FMEA failure mode across ``trials`` independent trials.

    With ``mitigated=True`` every mitigation in the project is applied first,
    so the monitor works from post-mitigation detection ratings. ``trials``
    and ``seed`` override the project's simulation block.
    """
    cfg = project.sim_config
    if cfg is None and (trials is None or seed is None):
        raise DomainError("project has no simulation block; supply trials and seed")
    trials = cfg.trials if trials is None else trials
    seed = cfg.seed if seed is None else seed
    occ_scale = cfg.occurrence_scale if cfg else 2.0
    det_scale = cfg.detection_scale if cfg else 10.0
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")

    source = project
    if mitigated and project.mitigations:
        _, source = apply_fmea_mitigations(project, [m.id for m in project.mitigations])

    escape = physics_escape_factor(limits)
    plans = []
    for entry in source.fmea:
        r = entry.rating
        plans.append(_Plan(
            entry.id, entry.failure_mode,
            occurrence_probability(r.occurrence, occ_scale),
            miss_probability(r.detection, det_scale),
            is_kinematic(source, entry),
        ))

    verdicts = [physics_check(c, limits) for _, c in FAULTY_MANEUVERS]
    starts = range(0, trials, chunk_size)
    jobs = [(s, min(chunk_size, trials - s)) for s in starts]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _simulate_chunk(plans, seed, j[0], j[1], verdicts), jobs))
    else:
        results = [_simulate_chunk(plans, seed, s, n, verdicts) for s, n in jobs]

    totals = {p.entry_id: np.zeros(4, dtype=np.int64) for p in plans}
    escaped_trials = 0
    for counts, esc in results:
        escaped_trials += esc
        for k, v in counts.items():
            totals[k] += v

    modes = []
    analytic = {}
    for p in plans:
        inj, mon, ev, esc = (int(x) for x in totals[p.entry_id])
        rate = p.p_occ * p.p_miss * (escape if p.kinematic else 1.0)
        analytic[p.entry_id] = rate
        modes.append(ModeStats(p.entry_id, p.failure_mode, inj, mon, ev, esc,
                               esc / trials, wilson_interval(esc, trials), rate))

    if analytic:
        top = top_event_probability(or_tree("simulated_residual", analytic, top="any_escape"),
                                    limit=max(64, len(analytic))).exact
    else:
        top = 0.0
    return SimulationReport(trials, seed, mitigated, tuple(modes), escaped_trials,
                            escaped_trials / trials, wilson_interval(escaped_trials, trials), top, limits)


def analytic_tree(report: SimulationReport):
    """OR tree over each mode's analytic residual rate, for cross-checking."""
    return or_tree("simulated_residual", {m.entry_id: m.analytic_rate for m in report.modes}, top="any_escape")
