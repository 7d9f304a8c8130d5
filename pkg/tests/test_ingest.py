"""Parser, history-building, and corpus round-trip behavior."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newspulse.ingest import (
    Article,
    Corpus,
    Event,
    Impression,
    ParseDiagnostics,
    build_realtime_history,
    dedup_events,
    filter_min_interactions,
    load_corpus,
    parse_jsonl_events,
    parse_mind_behaviors,
    parse_mind_news,
    save_corpus,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParseMindBehaviors:
    def test_label_tokens(self, tmp_path):
        path = write(tmp_path, "b.tsv", "i1\tu1\t100\tN1 N2\tN55689-1 N4-0\n")
        (imp,) = parse_mind_behaviors(path)
        assert imp.exposures == (("N55689", 1), ("N4", 0))
        assert imp.history == ("N1", "N2")

    def test_empty_history_flagged(self, tmp_path):
        path = write(tmp_path, "b.tsv", "i1\tu1\t100\t\tN1-0\n")
        (imp,) = parse_mind_behaviors(path)
        assert imp.history == ()
        assert imp.history_empty

    def test_bad_label_rejects_line(self, tmp_path):
        path = write(tmp_path, "b.tsv", "i1\tu1\t100\tN9\tN1-2\n")
        diag = ParseDiagnostics()
        assert list(parse_mind_behaviors(path, diag)) == []
        assert diag.lines_skipped == 1
        assert diag.skipped[0][0] == 1

    def test_wrong_column_count_skipped(self, tmp_path):
        path = write(tmp_path, "b.tsv",
                     "only\tthree\tcolumns\n" "i1\tu1\t100\tN9\tN1-1\n")
        diag = ParseDiagnostics()
        imps = list(parse_mind_behaviors(path, diag))
        assert len(imps) == 1
        assert diag.lines_skipped == 1

    def test_mind_datetime_format(self, tmp_path):
        path = write(tmp_path, "b.tsv", "i1\tu1\t11/15/2019 8:55:22 AM\t\tN1-1\n")
        (imp,) = parse_mind_behaviors(path)
        assert imp.timestamp == 1573808122

    def test_unreadable_file_fatal(self, tmp_path):
        with pytest.raises(OSError):
            list(parse_mind_behaviors(tmp_path / "missing.tsv"))


class TestParseMindNews:
    def test_columns(self, tmp_path):
        path = write(tmp_path, "n.tsv",
                     "N1\tsports\tsoccer\tBig final tonight\turl\tstuff\n")
        articles = parse_mind_news(path)
        assert articles["N1"] == Article("N1", "Big final tonight", "sports")


class TestParseJsonlEvents:
    def test_minimal_event(self, tmp_path):
        path = write(tmp_path, "e.jsonl", '{"userId":"u1","time":100,"id":"a1"}\n')
        (ev,) = parse_jsonl_events(path)
        assert ev == Event("u1", 100, "a1", "click")

    def test_missing_user_skipped(self, tmp_path):
        path = write(tmp_path, "e.jsonl", '{"time":100}\n')
        diag = ParseDiagnostics()
        assert list(parse_jsonl_events(path, diag)) == []
        assert diag.lines_skipped == 1

    def test_order_preserved(self, tmp_path):
        lines = "".join(
            json.dumps({"userId": "u1", "time": t, "id": f"a{t}"}) + "\n"
            for t in (100, 50, 200)
        )
        path = write(tmp_path, "e.jsonl", lines)
        events = list(parse_jsonl_events(path))
        assert [e.timestamp for e in events] == [100, 50, 200]

    def test_unknown_event_type_is_view(self, tmp_path):
        path = write(tmp_path, "e.jsonl",
                     '{"userId":"u1","time":1,"eventType":"scroll"}\n')
        (ev,) = parse_jsonl_events(path)
        assert ev.kind == "view"


def imp(imp_id, ts, history, exposures):
    return Impression(imp_id, "u1", ts, tuple(history), tuple(exposures))


class TestRealtimeHistory:
    def test_appends_previous_clicks(self):
        imps = [imp("i1", 10, ["a"], [("b", 1)]), imp("i2", 20, ["x"], [("c", 0)])]
        out = build_realtime_history(imps)
        assert out[1].history == ("a", "b")

    def test_no_clicks_keeps_history(self):
        imps = [imp("i1", 10, ["a"], [("b", 0)]), imp("i2", 20, [], [("c", 0)])]
        out = build_realtime_history(imps)
        assert out[1].history == ("a",)

    def test_three_impression_trace(self):
        # clicks [b], [c, d], [] accumulate as [a], [a,b], [a,b,c,d]
        imps = [
            imp("i1", 10, ["a"], [("b", 1)]),
            imp("i2", 20, [], [("c", 1), ("d", 1)]),
            imp("i3", 30, [], [("e", 0)]),
        ]
        out = build_realtime_history(imps)
        assert [list(i.history) for i in out] == [["a"], ["a", "b"], ["a", "b", "c", "d"]]

    def test_unsorted_is_fatal(self):
        imps = [imp("i1", 20, ["a"], [("b", 1)]), imp("i2", 10, [], [("c", 0)])]
        with pytest.raises(ValueError, match="sorted"):
            build_realtime_history(imps)

    def test_prefix_monotone(self):
        imps = [imp(f"i{k}", 10 * (k + 1), ["a"] if k == 0 else [],
                    [(f"n{k}", k % 2)]) for k in range(6)]
        out = build_realtime_history(imps)
        for a, b in zip(out, out[1:]):
            assert b.history[: len(a.history)] == a.history


class TestFilterMinInteractions:
    def make_corpus(self, counts):
        events = [Event(f"u{i}", t + 1) for i, n in enumerate(counts) for t in range(n)]
        return Corpus.from_records(events=events)

    def test_boundary_is_strict(self):
        corpus = self.make_corpus([10, 11])
        kept = filter_min_interactions(corpus, 10)
        assert kept.user_ids == ["u1"]

    def test_threshold_zero_keeps_active_users(self):
        corpus = self.make_corpus([1, 5])
        kept = filter_min_interactions(corpus, 0)
        assert kept.user_ids == ["u0", "u1"]

    def test_idempotent(self):
        corpus = self.make_corpus([5, 12, 30])
        once = filter_min_interactions(corpus, 10)
        twice = filter_min_interactions(once, 10)
        assert once == twice

    def test_click_mode(self):
        events = [Event("u1", t + 1, kind="view") for t in range(20)]
        events += [Event("u2", t + 1, kind="click") for t in range(20)]
        corpus = Corpus.from_records(events=events)
        kept = filter_min_interactions(corpus, 10, mode="clicks")
        assert kept.user_ids == ["u2"]


class TestDedup:
    def test_exact_duplicates_removed(self):
        events = [Event("u1", 5, "a"), Event("u1", 5, "a"), Event("u1", 5, "b")]
        corpus, removed = dedup_events(Corpus.from_records(events=events))
        assert removed == 1
        assert len(corpus.events["u1"]) == 2


class TestCanonicalRoundTrip:
    def test_mixed_corpus_round_trip(self, tmp_path):
        events = [Event("u1", 100, "a1"), Event("u1", 200, None, "view")]
        imps = [imp("i1", 150, ["a"], [("b", 1), ("c", 0)])]
        corpus = Corpus.from_records(events=events, impressions=imps)
        path = tmp_path / "corpus.jsonl"
        save_corpus(corpus, path)
        assert load_corpus(path) == corpus

    @settings(max_examples=50, deadline=None)
    @given(
        records=st.lists(
            st.tuples(
                st.sampled_from(["u1", "u2", "u3"]),
                st.integers(min_value=1, max_value=10**6),
                st.sampled_from(["a1", "a2", None]),
                st.sampled_from(["click", "view"]),
            ),
            max_size=30,
        )
    )
    def test_event_round_trip_property(self, records, tmp_path_factory):
        corpus = Corpus.from_records(
            events=[Event(u, t, a, k) for u, t, a, k in records])
        path = tmp_path_factory.mktemp("rt") / "c.jsonl"
        save_corpus(corpus, path)
        assert load_corpus(path) == corpus
