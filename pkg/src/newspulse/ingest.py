"""Parsers and canonical containers for news-consumption behavior logs.

Two raw formats are supported: MIND-style impression logs (tab-separated
``behaviors.tsv`` / ``news.tsv``) and a generic one-object-per-line JSONL
event format. Both normalize into :class:`Event` / :class:`Impression`
records grouped per user inside a :class:`Corpus`, which serializes to a
canonical JSONL so every downstream stage (including simulator output)
speaks the same format.

Malformed input lines are skipped and counted rather than aborting the
parse; large public logs always contain noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator

CLICK = "click"
VIEW = "view"

#: MIND behaviors.tsv timestamp format ("11/15/2019 8:55:22 AM").
_MIND_TIME_FORMAT = "%m/%d/%Y %I:%M:%S %p"


@dataclass(frozen=True)
class Event:
    """One timestamped user action."""

    user_id: str
    timestamp: int
    article_id: str | None = None
    kind: str = CLICK

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if self.timestamp <= 0:
            raise ValueError("timestamp must be positive")
        if self.kind not in (CLICK, VIEW):
            raise ValueError(f"kind must be 'click' or 'view', got {self.kind!r}")


@dataclass(frozen=True)
class Impression:
    """One exposure list shown to a user, with per-item click labels."""

    impression_id: str
    user_id: str
    timestamp: int
    history: tuple[str, ...]
    exposures: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if self.timestamp <= 0:
            raise ValueError("timestamp must be positive")
        if not self.exposures:
            raise ValueError("exposures must be non-empty")
        for _, label in self.exposures:
            if label not in (0, 1):
                raise ValueError(f"click label must be 0 or 1, got {label!r}")

    @property
    def history_empty(self) -> bool:
        return len(self.history) == 0

    @property
    def clicks(self) -> tuple[str, ...]:
        """Clicked article ids, in exposure order."""
        return tuple(a for a, label in self.exposures if label == 1)


@dataclass(frozen=True)
class Article:
    article_id: str
    title: str
    category: str


@dataclass
class ParseDiagnostics:
    """Skip-and-count record of malformed input."""

    lines_total: int = 0
    lines_skipped: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)

    _MAX_DETAIL = 100

    def reject(self, line_no: int, reason: str) -> None:
        self.lines_skipped += 1
        if len(self.skipped) < self._MAX_DETAIL:
            self.skipped.append((line_no, reason))


@dataclass
class Corpus:
    """Per-user chronologically sorted impressions and events.

    Construction sorts each user's records by timestamp (stable), so the
    per-user non-decreasing invariant always holds.
    """

    events: dict[str, list[Event]] = field(default_factory=dict)
    impressions: dict[str, list[Impression]] = field(default_factory=dict)
    articles: dict[str, Article] = field(default_factory=dict)

    @classmethod
    def from_records(
        cls,
        events: Iterable[Event] = (),
        impressions: Iterable[Impression] = (),
        articles: Iterable[Article] = (),
    ) -> "Corpus":
        corpus = cls()
        for ev in events:
            corpus.events.setdefault(ev.user_id, []).append(ev)
        for imp in impressions:
            corpus.impressions.setdefault(imp.user_id, []).append(imp)
        for user in corpus.events:
            corpus.events[user].sort(key=lambda e: e.timestamp)
        for user in corpus.impressions:
            corpus.impressions[user].sort(key=lambda i: i.timestamp)
        corpus.articles = {a.article_id: a for a in articles}
        return corpus

    @property
    def user_ids(self) -> list[str]:
        return sorted(set(self.events) | set(self.impressions))

    def n_events(self, user_id: str) -> int:
        return len(self.events.get(user_id, []))

    def n_impressions(self, user_id: str) -> int:
        return len(self.impressions.get(user_id, []))

    def interaction_count(self, user_id: str, mode: str = "events") -> int:
        """Interactions per user under the configured counting mode.

        ``events``      every event plus every impression counts once
        ``impressions`` impression records only
        ``clicks``      click events plus clicked exposures
        """
        if mode == "events":
            return self.n_events(user_id) + self.n_impressions(user_id)
        if mode == "impressions":
            return self.n_impressions(user_id)
        if mode == "clicks":
            n = sum(1 for e in self.events.get(user_id, []) if e.kind == CLICK)
            n += sum(len(i.clicks) for i in self.impressions.get(user_id, []))
            return n
        raise ValueError(f"unknown interaction counting mode {mode!r}")


def _parse_mind_timestamp(text: str) -> int:
    """Epoch seconds from either an integer or a MIND-style datetime (UTC)."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    dt = datetime.strptime(text, _MIND_TIME_FORMAT).replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_mind_behaviors(
    path, diagnostics: ParseDiagnostics | None = None
) -> Iterator[Impression]:
    """Stream impressions out of a MIND-style behaviors TSV.

    Expected columns: impression id, user id, time, space-separated click
    history, space-separated ``articleID-label`` exposure tokens. Lines
    that do not match are skipped and recorded on ``diagnostics``.
    """
    diag = diagnostics if diagnostics is not None else ParseDiagnostics()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            diag.lines_total += 1
            line = line.rstrip("\n")
            if not line.strip():
                diag.reject(line_no, "blank line")
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                diag.reject(line_no, f"expected 5 columns, got {len(cols)}")
                continue
            imp_id, user_id, time_text, history_text, exposure_text = cols
            if not user_id.strip():
                diag.reject(line_no, "empty user id")
                continue
            try:
                ts = _parse_mind_timestamp(time_text)
            except ValueError:
                diag.reject(line_no, f"unparseable time {time_text!r}")
                continue
            history = tuple(h for h in history_text.split() if h)
            exposures = []
            bad_token = None
            for token in exposure_text.split():
                article, sep, label_text = token.rpartition("-")
                if not sep or not article or label_text not in ("0", "1"):
                    bad_token = token
                    break
                exposures.append((article, int(label_text)))
            if bad_token is not None:
                diag.reject(line_no, f"bad exposure token {bad_token!r}")
                continue
            if not exposures:
                diag.reject(line_no, "empty exposure list")
                continue
            try:
                yield Impression(imp_id, user_id, ts, history, tuple(exposures))
            except ValueError as exc:
                diag.reject(line_no, str(exc))


def parse_mind_news(path) -> dict[str, Article]:
    """Article metadata from a MIND-style news TSV (id, category, subcategory, title)."""
    articles: dict[str, Article] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if len(cols) < 4:
                continue
            article_id, category, _subcategory, title = cols[0], cols[1], cols[2], cols[3]
            articles[article_id] = Article(article_id, title, category)
    return articles


def parse_jsonl_events(
    path, diagnostics: ParseDiagnostics | None = None
) -> Iterator[Event]:
    """Stream events from generic JSONL with keys userId, time, id, eventType.

    Unknown keys are ignored; records missing userId or time are skipped.
    Any eventType other than "click" normalizes to "view"; a missing
    eventType means click. Canonical-corpus field names (user_id,
    timestamp, article_id, kind) are accepted as aliases so simulator
    output re-ingests unchanged.
    """
    diag = diagnostics if diagnostics is not None else ParseDiagnostics()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            diag.lines_total += 1
            if not line.strip():
                diag.reject(line_no, "blank line")
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                diag.reject(line_no, "invalid JSON")
                continue
            if not isinstance(obj, dict):
                diag.reject(line_no, "not a JSON object")
                continue
            user = obj.get("userId", obj.get("user_id"))
            time_value = obj.get("time", obj.get("timestamp"))
            if user is None or time_value is None:
                diag.reject(line_no, "missing userId or time")
                continue
            try:
                ts = int(time_value)
            except (TypeError, ValueError):
                diag.reject(line_no, f"unparseable time {time_value!r}")
                continue
            kind_value = obj.get("eventType", obj.get("kind", CLICK))
            kind = CLICK if kind_value == CLICK else VIEW
            try:
                yield Event(str(user), ts, obj.get("id", obj.get("article_id")), kind)
            except ValueError as exc:
                diag.reject(line_no, str(exc))


def build_realtime_history(impressions: list[Impression]) -> list[Impression]:
    """Rebuild histories cumulatively: each impression inherits the previous
    impression's history plus its clicks, in click order.

    The first impression keeps its given history. Input must be one user's
    impressions sorted by timestamp; unsorted input is an error because the
    result would silently depend on order.
    """
    if not impressions:
        return []
    users = {imp.user_id for imp in impressions}
    if len(users) > 1:
        raise ValueError("build_realtime_history expects a single user's impressions")
    times = [imp.timestamp for imp in impressions]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("impressions must be sorted by timestamp")
    out = [impressions[0]]
    history = tuple(impressions[0].history)
    for prev, cur in zip(impressions, impressions[1:]):
        history = history + prev.clicks
        out.append(
            Impression(cur.impression_id, cur.user_id, cur.timestamp, history, cur.exposures)
        )
    return out


def filter_min_interactions(
    corpus: Corpus, threshold: int = 10, mode: str = "events"
) -> Corpus:
    """Retain exactly the users with interaction count strictly above ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    kept = {u for u in corpus.user_ids if corpus.interaction_count(u, mode) > threshold}
    return Corpus(
        events={u: list(v) for u, v in corpus.events.items() if u in kept},
        impressions={u: list(v) for u, v in corpus.impressions.items() if u in kept},
        articles=dict(corpus.articles),
    )


def dedup_events(corpus: Corpus) -> tuple[Corpus, int]:
    """Drop exact duplicate (user, timestamp, article, kind) events, keeping the first."""
    removed = 0
    events: dict[str, list[Event]] = {}
    for user, evs in corpus.events.items():
        seen: set[tuple] = set()
        unique = []
        for ev in evs:
            key = (ev.timestamp, ev.article_id, ev.kind)
            if key in seen:
                removed += 1
                continue
            seen.add(key)
            unique.append(ev)
        events[user] = unique
    return (
        Corpus(events=events, impressions={u: list(v) for u, v in corpus.impressions.items()},
               articles=dict(corpus.articles)),
        removed,
    )


# ---------------------------------------------------------------------------
# Canonical JSONL serialization
# ---------------------------------------------------------------------------

def _event_to_obj(ev: Event) -> dict:
    return {
        "user_id": ev.user_id,
        "timestamp": ev.timestamp,
        "article_id": ev.article_id,
        "kind": ev.kind,
    }


def _impression_to_obj(imp: Impression) -> dict:
    return {
        "impression_id": imp.impression_id,
        "user_id": imp.user_id,
        "timestamp": imp.timestamp,
        "history": list(imp.history),
        "exposures": [[a, label] for a, label in imp.exposures],
    }


def save_corpus(corpus: Corpus, path) -> None:
    """Write the canonical corpus JSONL: one Event or Impression per line.

    Users are emitted in sorted id order, records in timestamp order, so
    the output is deterministic for a given corpus.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for user in corpus.user_ids:
            for imp in corpus.impressions.get(user, []):
                fh.write(json.dumps(_impression_to_obj(imp), sort_keys=True) + "\n")
            for ev in corpus.events.get(user, []):
                fh.write(json.dumps(_event_to_obj(ev), sort_keys=True) + "\n")


def load_corpus(path, articles_path=None) -> Corpus:
    """Parse a canonical corpus JSONL back into a Corpus.

    Lines carrying an ``exposures`` key are impressions; everything else is
    an event. Raises on malformed lines: the canonical format is strict.
    """
    events: list[Event] = []
    impressions: list[Impression] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if "exposures" in obj:
                impressions.append(
                    Impression(
                        obj["impression_id"],
                        obj["user_id"],
                        int(obj["timestamp"]),
                        tuple(obj["history"]),
                        tuple((a, int(label)) for a, label in obj["exposures"]),
                    )
                )
            else:
                events.append(
                    Event(obj["user_id"], int(obj["timestamp"]), obj.get("article_id"),
                          obj.get("kind", CLICK))
                )
    articles = load_articles(articles_path) if articles_path else {}
    return Corpus.from_records(events, impressions, articles.values())


def save_articles(articles: dict[str, Article], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for article_id in sorted(articles):
            a = articles[article_id]
            fh.write(json.dumps(
                {"article_id": a.article_id, "title": a.title, "category": a.category},
                sort_keys=True) + "\n")


def load_articles(path) -> dict[str, Article]:
    articles: dict[str, Article] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            articles[obj["article_id"]] = Article(
                obj["article_id"], obj["title"], obj["category"])
    return articles
