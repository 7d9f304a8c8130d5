"""Session segmentation and activity profiles.

A session is a maximal run of one user's actions in which every
consecutive gap is strictly below the inactivity threshold; a gap at or
above the threshold starts a new session. The threshold defaults to ten
minutes and can optionally be adapted per user from that user's own gap
distribution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._validation import require
from .ingest import Corpus

DEFAULT_THRESHOLD_S = 600.0
ADAPTIVE_CLAMP_S = (60.0, 3600.0)

SECONDS_PER_DAY = 86400
SECONDS_PER_HOUR = 3600


def hour_of_day(timestamp, utc_offset_hours: float = 0.0):
    """Hour-of-day in [0, 24) for epoch seconds, after applying the UTC offset."""
    ts = np.asarray(timestamp, dtype=float) + utc_offset_hours * SECONDS_PER_HOUR
    return (ts % SECONDS_PER_DAY) / SECONDS_PER_HOUR


@dataclass(frozen=True)
class Session:
    user_id: str
    action_times: tuple[float, ...]

    @property
    def start(self) -> float:
        return self.action_times[0]

    @property
    def end(self) -> float:
        return self.action_times[-1]

    @property
    def n_actions(self) -> int:
        return len(self.action_times)

    @property
    def deltas(self) -> tuple[float, ...]:
        """Consecutive within-session gaps, seconds."""
        return tuple(b - a for a, b in zip(self.action_times, self.action_times[1:]))


@dataclass(frozen=True)
class SessionGap:
    """Gap between one session's end and the next session's start (same user)."""

    user_id: str
    delta_t: float
    t_s: float
    t_e: float


@dataclass
class ActivityProfile:
    """24 hourly activity proportions; sums to 1 unless there was no activity."""

    values: np.ndarray
    zero_total: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        require(self.values.shape == (24,), "activity profile needs 24 hourly values")

    def __eq__(self, other):
        if not isinstance(other, ActivityProfile):
            return NotImplemented
        return self.zero_total == other.zero_total and np.array_equal(self.values, other.values)


def segment_sessions(times: Sequence[float], threshold_s: float, user_id: str = "") -> list[Session]:
    """Split one user's sorted action times into sessions.

    A new session starts exactly at each gap >= ``threshold_s``; every
    action belongs to exactly one session.
    """
    require(threshold_s > 0, "threshold must be positive")
    times = list(times)
    if not times:
        return []
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("action times must be sorted")
    sessions = []
    current = [times[0]]
    for prev, cur in zip(times, times[1:]):
        if cur - prev >= threshold_s:
            sessions.append(Session(user_id, tuple(current)))
            current = [cur]
        else:
            current.append(cur)
    sessions.append(Session(user_id, tuple(current)))
    return sessions


def adaptive_threshold(gaps: Sequence[float], default_s: float = DEFAULT_THRESHOLD_S) -> float:
    """Per-user threshold from a two-cluster cut of the log-gap distribution.

    Sorted log-gaps are split into two contiguous groups at the boundary
    minimizing within-group variance (the two-cluster Ward solution in one
    dimension); the threshold is the geometric midpoint of the boundary
    pair, clamped to [60 s, 3600 s]. Fewer than two gaps fall back to the
    default.
    """
    gaps = [g for g in gaps if g > 0]
    if len(gaps) < 2:
        return float(default_s)
    logs = np.sort(np.log(np.asarray(gaps, dtype=float)))
    n = logs.size
    prefix = np.concatenate([[0.0], np.cumsum(logs)])
    prefix_sq = np.concatenate([[0.0], np.cumsum(logs**2)])
    sizes = np.arange(1, n)
    left_ss = prefix_sq[1:-1] - prefix[1:-1] ** 2 / sizes
    right_sizes = n - sizes
    right_sum = prefix[-1] - prefix[1:-1]
    right_ss = (prefix_sq[-1] - prefix_sq[1:-1]) - right_sum**2 / right_sizes
    split = int(np.argmin(left_ss + right_ss))  # boundary after index `split`
    cut = 0.5 * (logs[split] + logs[split + 1])
    lo, hi = ADAPTIVE_CLAMP_S
    return float(min(max(np.exp(cut), lo), hi))


def session_stats(
    sessions: Iterable[Session], utc_offset_hours: float = 0.0
) -> tuple[list[int], list[float], list[SessionGap]]:
    """Action counts, within-session gaps, and between-session gaps.

    Between-session gaps are computed end-of-session to start-of-next and
    only between consecutive sessions of the same user.
    """
    ns: list[int] = []
    deltas: list[float] = []
    gaps: list[SessionGap] = []
    by_user: dict[str, list[Session]] = {}
    for s in sessions:
        by_user.setdefault(s.user_id, []).append(s)
        ns.append(s.n_actions)
        deltas.extend(s.deltas)
    for user, user_sessions in by_user.items():
        user_sessions.sort(key=lambda s: s.start)
        for a, b in zip(user_sessions, user_sessions[1:]):
            gaps.append(
                SessionGap(
                    user_id=user,
                    delta_t=b.start - a.end,
                    t_s=float(hour_of_day(a.end, utc_offset_hours)),
                    t_e=float(hour_of_day(b.start, utc_offset_hours)),
                )
            )
    return ns, deltas, gaps


def hourly_activity_profile(
    items, basis: str = "session_start", utc_offset_hours: float = 0.0
) -> ActivityProfile:
    """Hour-of-day proportions of sessions (by start hour) or of raw click times.

    ``basis="session_start"`` expects Session objects and counts each at
    its starting hour; ``basis="click"`` expects raw timestamps. An empty
    input yields the all-zero profile with the zero-total flag set.
    """
    if basis == "session_start":
        times = [s.start for s in items]
    elif basis == "click":
        times = list(items)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    if not times:
        return ActivityProfile(np.zeros(24), zero_total=True)
    hours = np.floor(hour_of_day(np.asarray(times, dtype=float), utc_offset_hours)).astype(int)
    counts = np.bincount(hours, minlength=24).astype(float)
    return ActivityProfile(counts / counts.sum())


def corpus_action_times(corpus: Corpus, user_id: str) -> list[float]:
    """All of a user's action timestamps (events plus impressions), sorted."""
    times = [float(e.timestamp) for e in corpus.events.get(user_id, [])]
    times += [float(i.timestamp) for i in corpus.impressions.get(user_id, [])]
    times.sort()
    return times


def corpus_click_times(corpus: Corpus, user_id: str) -> list[float]:
    """Timestamps of click events and of impressions with at least one click."""
    times = [float(e.timestamp) for e in corpus.events.get(user_id, []) if e.kind == "click"]
    times += [
        float(i.timestamp) for i in corpus.impressions.get(user_id, []) if i.clicks
    ]
    times.sort()
    return times


def segment_corpus(
    corpus: Corpus, threshold_s: float = DEFAULT_THRESHOLD_S, adaptive: bool = False
) -> list[Session]:
    """Segment every user of a corpus; optionally adapt the threshold per user.

    The adaptive mode estimates each user's threshold from that user's own
    inter-action gaps; users with too few gaps use the fixed threshold.
    """
    sessions: list[Session] = []
    for user in corpus.user_ids:
        times = corpus_action_times(corpus, user)
        if not times:
            continue
        user_threshold = threshold_s
        if adaptive:
            raw_gaps = [b - a for a, b in zip(times, times[1:])]
            user_threshold = adaptive_threshold(raw_gaps, default_s=threshold_s)
        sessions.extend(segment_sessions(times, user_threshold, user_id=user))
    return sessions


def write_sessions_csv(sessions: Iterable[Session], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "start", "end", "N"])
        for s in sessions:
            writer.writerow([s.user_id, s.start, s.end, s.n_actions])


def write_gaps_csv(gaps: Iterable[SessionGap], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "delta_T", "T_s", "T_e"])
        for g in gaps:
            writer.writerow([g.user_id, g.delta_t, g.t_s, g.t_e])
