"""Agent-based generator of daily click trajectories.

Each agent's first session of a day starts at an hour sampled from the
24-hour activity profile; subsequent sessions follow after a gap drawn
from the configured interval source (an empirical pool or a truncated
power law), subject to the minimum-gap constraint. After every session
the agent exits for the rest of the day with a daypart-dependent
probability. Within a session, the action count and the gaps between
actions come from the micro-scale exponential models.

Simulation is deterministic: agent i of a population uses the child
stream ``SeedSequence(seed, spawn_key=(i,))``, so results do not depend
on scheduling or population size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ._validation import require, require_probability
from .ingest import Event
from .sessions import SECONDS_PER_DAY, SECONDS_PER_HOUR, hour_of_day, hourly_activity_profile

#: Default daypart boundaries (hours, half-open; the last range wraps
#: past midnight) and exit probabilities. Both are configuration, not
#: estimates: the late-night value is high so overnight activity is
#: strongly suppressed.
DEFAULT_DAYPARTS: dict[str, tuple[float, float]] = {
    "MP": (6.0, 10.0),
    "DP": (10.0, 17.0),
    "EP": (17.0, 23.0),
    "LNP": (23.0, 6.0),
}
DEFAULT_EXIT_PROBS: dict[str, float] = {"MP": 0.2, "DP": 0.3, "EP": 0.2, "LNP": 0.8}

#: Export epoch: a midnight (UTC) so simulated hour-of-day survives the
#: conversion to absolute timestamps. 2021-01-01 00:00:00 UTC.
EXPORT_EPOCH = 1_609_459_200


@dataclass(frozen=True)
class EmpiricalIntervals:
    """Between-session gaps drawn from an observed pool, seconds."""

    pool: tuple[float, ...]

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.pool[rng.integers(len(self.pool))])


@dataclass(frozen=True)
class PowerLawIntervals:
    """Between-session gaps from a power law truncated to [xmin_s, truncation_s]."""

    exponent: float
    xmin_s: float
    truncation_s: float

    def sample(self, rng: np.random.Generator) -> float:
        u = rng.random()
        a, lo, hi = self.exponent, self.xmin_s, self.truncation_s
        if abs(a - 1.0) < 1e-12:
            return float(lo * (hi / lo) ** u)
        p = 1.0 - a
        return float((lo**p + u * (hi**p - lo**p)) ** (1.0 / p))


@dataclass
class AgentConfig:
    activity_profile: np.ndarray
    interval_source: EmpiricalIntervals | PowerLawIntervals
    lambda_n: float
    lambda_dt: float
    exit_probs: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_EXIT_PROBS))
    daypart_bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_DAYPARTS))
    min_gap_s: float = 600.0
    horizon_days: int = 1
    seed: int = 0
    floor_min_gap: bool = True
    max_interval_retries: int = 100
    resample_each_day: bool = False

    def validate(self) -> None:
        profile = np.asarray(self.activity_profile, dtype=float)
        require(profile.shape == (24,), "activity profile needs 24 hourly values")
        require(np.all(profile >= 0), "activity profile values must be non-negative")
        require(profile.sum() > 0, "activity profile must have positive mass")
        require(set(self.exit_probs) == set(self.daypart_bounds),
                "exit probabilities and daypart bounds must name the same periods")
        for name, p in self.exit_probs.items():
            require_probability(p, f"exit probability {name}")
        _check_partition(self.daypart_bounds)
        require(self.min_gap_s > 0, "minimum gap must be positive")
        require(self.lambda_n > 0 and self.lambda_dt > 0, "action rates must be positive")
        require(self.horizon_days >= 1, "horizon must cover at least one day")
        if isinstance(self.interval_source, EmpiricalIntervals):
            require(len(self.interval_source.pool) > 0, "empirical interval pool is empty")
        else:
            src = self.interval_source
            require(0 < src.xmin_s < src.truncation_s,
                    "power-law interval source needs 0 < xmin < truncation")


def _check_partition(bounds: dict[str, tuple[float, float]]) -> None:
    """The daypart ranges must tile [0, 24) exactly (one may wrap midnight)."""
    pieces = []
    for name, (lo, hi) in bounds.items():
        require(0 <= lo < 24 and 0 <= hi <= 24, f"daypart {name} out of range")
        if lo < hi:
            pieces.append((lo, hi))
        else:
            pieces.append((lo, 24.0))
            pieces.append((0.0, hi))
    pieces.sort()
    total = sum(hi - lo for lo, hi in pieces)
    require(abs(total - 24.0) < 1e-9, "daypart ranges must cover 24 hours")
    cursor = 0.0
    for lo, hi in pieces:
        require(abs(lo - cursor) < 1e-9, "daypart ranges must not overlap or leave gaps")
        cursor = hi
    require(abs(cursor - 24.0) < 1e-9, "daypart ranges must end at 24")


def period_of(t_hour: float, bounds: dict[str, tuple[float, float]] | None = None) -> str:
    """Daypart containing hour-of-day t (ranges are half-open, one may wrap)."""
    bounds = bounds if bounds is not None else DEFAULT_DAYPARTS
    t = t_hour % 24.0
    for name, (lo, hi) in bounds.items():
        if lo < hi:
            if lo <= t < hi:
                return name
        elif t >= lo or t < hi:
            return name
    raise ValueError(f"hour {t} not covered by daypart bounds")


@dataclass(frozen=True)
class SimSession:
    action_times: tuple[float, ...]

    @property
    def start(self) -> float:
        return self.action_times[0]

    @property
    def end(self) -> float:
        return self.action_times[-1]


@dataclass
class SimTrace:
    agent_id: str
    seed: int
    sessions: list[SimSession]

    @property
    def session_starts(self) -> list[float]:
        return [s.start for s in self.sessions]


def sample_first_click(profile, rng: np.random.Generator) -> float:
    """Seconds since midnight of the day's first click: hour drawn from the
    activity profile, minute-of-hour uniform."""
    p = np.asarray(profile, dtype=float)
    require(p.shape == (24,), "activity profile needs 24 hourly values")
    total = p.sum()
    require(total > 0, "activity profile must have positive mass")
    hour = int(rng.choice(24, p=p / total))
    return hour * SECONDS_PER_HOUR + rng.random() * SECONDS_PER_HOUR


def next_click_time(current_s: float, config: AgentConfig, rng: np.random.Generator) -> float:
    """Current time plus a gap from the interval source, rejecting draws
    below the minimum gap (bounded retries, then the floor if enabled)."""
    for _ in range(config.max_interval_retries):
        gap = config.interval_source.sample(rng)
        if gap >= config.min_gap_s:
            return current_s + gap
    if config.floor_min_gap:
        return current_s + config.min_gap_s
    raise RuntimeError("interval retries exhausted and the minimum-gap floor is disabled")


def _session_actions(start: float, config: AgentConfig, rng: np.random.Generator,
                     horizon_end: float) -> tuple[float, ...]:
    n = 1 + int(math.floor(rng.exponential(1.0 / config.lambda_n)))
    times = [start]
    for _ in range(n - 1):
        t = times[-1] + rng.exponential(1.0 / config.lambda_dt)
        if t >= horizon_end:
            break
        times.append(t)
    return tuple(times)


def simulate_agent(config: AgentConfig, agent_index: int = 0,
                   seed: int | None = None) -> SimTrace:
    """One agent's full trajectory over the configured horizon."""
    config.validate()
    base_seed = config.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(agent_index,)))
    horizon_end = config.horizon_days * SECONDS_PER_DAY
    profile = np.asarray(config.activity_profile, dtype=float)

    sessions: list[SimSession] = []
    t = sample_first_click(profile, rng)
    prev_start: float | None = None
    while t < horizon_end:
        if prev_start is not None and t < prev_start + config.min_gap_s:
            t = prev_start + config.min_gap_s  # keep session starts min-gap apart
            if t >= horizon_end:
                break
        session = SimSession(_session_actions(t, config, rng, horizon_end))
        sessions.append(session)
        prev_start = session.start
        if rng.random() < config.exit_probs[period_of(hour_of_day(session.end),
                                                      config.daypart_bounds)]:
            next_day = math.floor(session.end / SECONDS_PER_DAY) + 1
            if next_day >= config.horizon_days:
                break
            t = next_day * SECONDS_PER_DAY + sample_first_click(profile, rng)
        else:
            t = next_click_time(session.end, config, rng)
            if config.resample_each_day:
                day_now = math.floor(session.end / SECONDS_PER_DAY)
                if math.floor(t / SECONDS_PER_DAY) > day_now:
                    next_day = day_now + 1
                    if next_day >= config.horizon_days:
                        break
                    t = next_day * SECONDS_PER_DAY + sample_first_click(profile, rng)
    return SimTrace(f"agent{agent_index:05d}", base_seed, sessions)


def simulate_population(n_agents: int, config: AgentConfig,
                        seed: int | None = None):
    """Simulate ``n_agents`` independent agents and aggregate their activity.

    Returns the traces and the aggregate hourly profile of session starts.
    """
    require(n_agents >= 1, "need at least one agent")
    traces = [simulate_agent(config, i, seed) for i in range(n_agents)]
    starts = [s for trace in traces for s in trace.session_starts]
    profile = hourly_activity_profile(starts, basis="click")
    return traces, profile


@dataclass
class ActivityComparison:
    pearson_r: float
    max_abs_deviation: float
    degenerate: bool = False


def compare_activity(profile_a, profile_b) -> ActivityComparison:
    """Pearson correlation and sup-norm deviation between two 24-hour profiles."""
    a = profile_a.values if hasattr(profile_a, "values") else np.asarray(profile_a, dtype=float)
    b = profile_b.values if hasattr(profile_b, "values") else np.asarray(profile_b, dtype=float)
    require(a.shape == (24,) and b.shape == (24,), "profiles must have 24 hourly values")
    dev = float(np.max(np.abs(a - b)))
    if a.std() == 0 or b.std() == 0:
        return ActivityComparison(float("nan"), dev, degenerate=True)
    return ActivityComparison(float(np.corrcoef(a, b)[0, 1]), dev)


def trace_to_events(trace: SimTrace, epoch: int = EXPORT_EPOCH) -> list[Event]:
    """Flatten a trace into canonical click events (floored to whole seconds).

    The default export epoch is a UTC midnight, so simulated hour-of-day
    is preserved in the timestamps.
    """
    return [
        Event(trace.agent_id, epoch + int(math.floor(t)), None, "click")
        for session in trace.sessions
        for t in session.action_times
    ]


def profile_from_fourier(model) -> np.ndarray:
    """Hourly activity proportions from a fitted daily-rhythm series,
    clamped at zero and renormalized."""
    values = np.clip(model.predict(np.arange(24.0)), 0.0, None)
    require(values.sum() > 0, "fitted rhythm is non-positive everywhere")
    return values / values.sum()


def empirical_interval_source(gaps: Sequence[float]) -> EmpiricalIntervals:
    return EmpiricalIntervals(tuple(float(g) for g in gaps))


def with_seed(config: AgentConfig, seed: int) -> AgentConfig:
    return replace(config, seed=seed)
