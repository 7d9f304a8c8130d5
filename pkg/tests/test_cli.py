"""End-to-end command-line behavior: pipelines, exit codes, determinism."""

import hashlib
import json

import numpy as np
import pytest

from newspulse.cli import main
from newspulse.content import EmbeddingStore, hash_embed
from newspulse.ingest import load_corpus

CATEGORIES = ["sports", "news", "finance", "movies"]


def build_mind_fixture(tmp_path, n_users=6, n_impressions=14, seed=0):
    """Small behaviors/news pair with predictable structure."""
    rng = np.random.default_rng(seed)
    news_lines = []
    for i in range(40):
        cat = CATEGORIES[i % len(CATEGORIES)]
        news_lines.append(f"N{i}\t{cat}\t{cat}-sub\tHeadline number {i} about {cat}\n")
    news = tmp_path / "news.tsv"
    news.write_text("".join(news_lines), encoding="utf-8")

    lines = []
    for u in range(n_users):
        base = 1_600_000_000 + u * 50
        fav = u % len(CATEGORIES)  # favorite category: clicks concentrate there
        for k in range(n_impressions):
            ts = base + k * rng.integers(700, 7200)
            history = " ".join(f"N{(fav + 4 * j) % 40}" for j in range(3))
            n_expо = int(rng.integers(10, 13))
            shown = rng.choice(40, size=n_expо, replace=False)
            clicked_pos = int(rng.integers(0, n_expо))
            shown[clicked_pos] = (fav + 4 * int(rng.integers(0, 10))) % 40
            tokens = " ".join(
                f"N{a}-{1 if j == clicked_pos else 0}" for j, a in enumerate(shown))
            lines.append(f"imp{u}-{k}\tu{u}\t{ts}\t{history}\t{tokens}\n")
    behaviors = tmp_path / "behaviors.tsv"
    behaviors.write_text("".join(lines), encoding="utf-8")
    return behaviors, news


def hash_dir(out_dir):
    digests = {}
    for path in sorted(out_dir.iterdir()):
        if path.is_file():
            digests[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    return digests


def abm_config(tmp_path, **overrides):
    section = {
        "activity_profile": [1.0 / 24] * 24,
        "interval": {"kind": "power_law", "exponent": 1.018,
                     "xmin_s": 600.0, "truncation_s": 21600.0},
        "lambda_n": 0.31,
        "lambda_dt": 0.019,
        "exit_probs": {"MP": 0.4, "DP": 0.4, "EP": 0.4, "LNP": 0.9},
    }
    section.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"abm": section}), encoding="utf-8")
    return path


class TestIngestCommand:
    def test_mind_pipeline(self, tmp_path):
        behaviors, news = build_mind_fixture(tmp_path)
        out = tmp_path / "corpus"
        code = main(["ingest", "--format", "mind", "--behaviors", str(behaviors),
                     "--news", str(news), "--min-interactions", "0",
                     "--out", str(out)])
        assert code == 0
        assert (out / "corpus.jsonl").exists()
        assert (out / "articles.jsonl").exists()
        assert (out / "corpus.jsonl.meta.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["impressions"] == 6 * 14
        corpus = load_corpus(out / "corpus.jsonl", out / "articles.jsonl")
        assert len(corpus.user_ids) == 6

    def test_missing_file_exit_2(self, tmp_path, capsys):
        code = main(["ingest", "--format", "mind", "--behaviors",
                     str(tmp_path / "nope.tsv"), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "nope.tsv" in capsys.readouterr().err

    def test_min_interactions_filter_reported(self, tmp_path):
        behaviors, news = build_mind_fixture(tmp_path, n_impressions=8)
        out = tmp_path / "corpus"
        code = main(["ingest", "--format", "mind", "--behaviors", str(behaviors),
                     "--news", str(news), "--min-interactions", "10",
                     "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["users_retained"] == 0
        assert summary["users_dropped"] == 6

    def test_jsonl_format(self, tmp_path):
        events = tmp_path / "events.jsonl"
        lines = [json.dumps({"userId": "u1", "time": 100 + i, "id": f"a{i}"})
                 for i in range(15)]
        events.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out = tmp_path / "corpus"
        code = main(["ingest", "--format", "jsonl", "--events", str(events),
                     "--min-interactions", "0", "--out", str(out), "--json"])
        assert code == 0

    def test_realtime_history_flag(self, tmp_path):
        behaviors, news = build_mind_fixture(tmp_path)
        out = tmp_path / "corpus"
        main(["ingest", "--format", "mind", "--behaviors", str(behaviors),
              "--news", str(news), "--min-interactions", "0",
              "--realtime-history", "--out", str(out)])
        corpus = load_corpus(out / "corpus.jsonl")
        imps = corpus.impressions["u0"]
        for a, b in zip(imps, imps[1:]):
            assert b.history[: len(a.history)] == a.history


class TestSimulateCommand:
    def test_byte_identical_reruns(self, tmp_path):
        cfg = abm_config(tmp_path)
        outs = []
        for name in ("run1", "run2"):
            out = tmp_path / name
            code = main(["simulate", "--config", str(cfg), "--agents", "50",
                         "--seed", "7", "--horizon-days", "2", "--out", str(out)])
            assert code == 0
            outs.append(hash_dir(out))
        assert outs[0] == outs[1]

    def test_output_parses_through_ingest(self, tmp_path):
        cfg = abm_config(tmp_path)
        out = tmp_path / "sim"
        main(["simulate", "--config", str(cfg), "--agents", "20", "--seed", "1",
              "--out", str(out)])
        out2 = tmp_path / "reingested"
        code = main(["ingest", "--format", "jsonl", "--events",
                     str(out / "events.jsonl"), "--min-interactions", "0",
                     "--out", str(out2)])
        assert code == 0
        original = (out / "events.jsonl").read_bytes()
        # canonical corpus already: re-ingest emits the same canonical lines
        reparsed = load_corpus(out2 / "corpus.jsonl")
        direct = load_corpus(out / "events.jsonl")
        assert reparsed == direct
        assert original  # sanity: file non-empty

    def test_invalid_exit_probability_exit_2(self, tmp_path):
        cfg = abm_config(tmp_path,
                         exit_probs={"MP": 1.5, "DP": 0.3, "EP": 0.2, "LNP": 0.8})
        code = main(["simulate", "--config", str(cfg), "--agents", "5",
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_missing_config_exit_2(self, tmp_path):
        code = main(["simulate", "--agents", "5", "--out", str(tmp_path / "o")])
        assert code == 2


class TestTemporalCommand:
    @pytest.fixture()
    def sim_corpus(self, tmp_path):
        cfg = abm_config(tmp_path)
        out = tmp_path / "sim"
        main(["simulate", "--config", str(cfg), "--agents", "120", "--seed", "5",
              "--horizon-days", "3", "--out", str(out)])
        return out / "events.jsonl"

    def test_outputs_exist(self, tmp_path, sim_corpus):
        out = tmp_path / "temporal"
        code = main(["temporal", "--corpus", str(sim_corpus), "--out", str(out)])
        assert code == 0
        for name in ("fourier.json", "interval_fit.json", "micro_fits.json",
                     "activity_profile.csv", "endpoint_profile.csv",
                     "density_session_gaps.csv", "sessions.csv", "gaps.csv"):
            assert (out / name).exists(), name
            assert (out / f"{name}.meta.json").exists(), name
        interval = json.loads((out / "interval_fit.json").read_text())
        assert interval["ranking"] is not None
        micro = json.loads((out / "micro_fits.json").read_text())
        assert "lambda" in micro["action_count"]["params"]

    def test_deterministic(self, tmp_path, sim_corpus):
        hashes = []
        for name in ("t1", "t2"):
            out = tmp_path / name
            main(["temporal", "--corpus", str(sim_corpus), "--out", str(out)])
            hashes.append(hash_dir(out))
        assert hashes[0] == hashes[1]

    def test_empty_corpus_exit_2(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        code = main(["temporal", "--corpus", str(empty), "--out", str(tmp_path / "o")])
        assert code == 2

    def test_band_flag(self, tmp_path, sim_corpus):
        out = tmp_path / "temporal-band"
        code = main(["temporal", "--corpus", str(sim_corpus), "--band", "300", "600",
                     "--out", str(out)])
        assert code == 0
        interval = json.loads((out / "interval_fit.json").read_text())
        assert interval["band_min"] == [300.0, 600.0]


class TestContentCommand:
    @pytest.fixture()
    def ingested(self, tmp_path):
        behaviors, news = build_mind_fixture(tmp_path)
        out = tmp_path / "corpus"
        main(["ingest", "--format", "mind", "--behaviors", str(behaviors),
              "--news", str(news), "--min-interactions", "0", "--out", str(out)])
        return out

    def test_hash_embeddings_pipeline(self, tmp_path, ingested):
        out = tmp_path / "content"
        code = main(["content", "--corpus", str(ingested / "corpus.jsonl"),
                     "--articles", str(ingested / "articles.jsonl"),
                     "--hash-dim", "64", "--exposure-len", "10", "15",
                     "--out", str(out)])
        assert code == 0
        header = (out / "features.csv").read_text().splitlines()[0]
        assert header == "impression_id,exposure_index,clicked,M,m,En,meanPairDist,exposure_len"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["feature_rows"] > 0
        assert (out / "ws_curve.csv").exists()
        assert (out / "joint_diff.csv").exists()

    def test_missing_embeddings_diagnosed_exit_0(self, tmp_path, ingested):
        store = EmbeddingStore({"N1": hash_embed("only one article", 32)}, 32)
        emb = tmp_path / "partial.txt"
        store.save(emb)
        out = tmp_path / "content2"
        code = main(["content", "--corpus", str(ingested / "corpus.jsonl"),
                     "--articles", str(ingested / "articles.jsonl"),
                     "--embeddings", str(emb), "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["skipped_missing_embedding"] > 0

    def test_requires_embedding_source(self, tmp_path, ingested):
        code = main(["content", "--corpus", str(ingested / "corpus.jsonl"),
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_proxy_exposure_on_click_log(self, tmp_path):
        events = tmp_path / "events.jsonl"
        rows = []
        for u in range(3):
            for t in range(6):
                rows.append(json.dumps(
                    {"userId": f"u{u}", "time": 1000 + 900 * t, "id": f"N{t}"}))
        events.write_text("\n".join(rows) + "\n", encoding="utf-8")
        out_c = tmp_path / "corpus"
        main(["ingest", "--format", "jsonl", "--events", str(events),
              "--min-interactions", "0", "--out", str(out_c)])
        # articles normally come from a mind ingest; write the file directly
        from newspulse.ingest import Article, save_articles
        articles = {f"N{t}": Article(f"N{t}", f"Title {t}", "news") for t in range(6)}
        art_path = tmp_path / "articles.jsonl"
        save_articles(articles, art_path)
        out = tmp_path / "content3"
        code = main(["content", "--corpus", str(out_c / "corpus.jsonl"),
                     "--articles", str(art_path), "--hash-dim", "32",
                     "--proxy-exposure", "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["impressions_total"] == 3


class TestClusterCommand:
    @pytest.fixture()
    def ingested(self, tmp_path):
        behaviors, news = build_mind_fixture(tmp_path, n_users=12, n_impressions=14)
        out = tmp_path / "corpus"
        main(["ingest", "--format", "mind", "--behaviors", str(behaviors),
              "--news", str(news), "--min-interactions", "0", "--out", str(out)])
        return out

    def test_tag_clustering_score_table(self, tmp_path, ingested):
        out = tmp_path / "cluster"
        code = main(["cluster", "--corpus", str(ingested / "corpus.jsonl"),
                     "--articles", str(ingested / "articles.jsonl"),
                     "--by", "tags", "--algos", "kmeans,gmm,agglo", "--k", "4",
                     "--seed", "3", "--out", str(out)])
        assert code == 0
        scores = (out / "scores.csv").read_text().splitlines()
        assert len(scores) == 4  # header + one row per algorithm
        assert sum(line.endswith(",1") for line in scores[1:]) == 1
        assignments = (out / "assignments.csv").read_text().splitlines()
        assert len(assignments) == 13  # header + 12 users

    def test_activity_clustering_day_night(self, tmp_path, ingested):
        out = tmp_path / "cluster-act"
        code = main(["cluster", "--corpus", str(ingested / "corpus.jsonl"),
                     "--by", "activity", "--k", "2", "--seed", "0",
                     "--out", str(out)])
        assert code == 0
        rows = (out / "assignments.csv").read_text().splitlines()[1:]
        tags = {row.split(",")[4] for row in rows}
        assert tags <= {"day", "night"}

    def test_deterministic_rerun(self, tmp_path, ingested):
        hashes = []
        for name in ("c1", "c2"):
            out = tmp_path / name
            main(["cluster", "--corpus", str(ingested / "corpus.jsonl"),
                  "--articles", str(ingested / "articles.jsonl"),
                  "--by", "tags", "--k", "3", "--seed", "5", "--out", str(out)])
            hashes.append(hash_dir(out))
        assert hashes[0] == hashes[1]


class TestJsonMode:
    def test_summary_is_json(self, tmp_path, capsys):
        cfg = abm_config(tmp_path)
        out = tmp_path / "sim"
        code = main(["simulate", "--config", str(cfg), "--agents", "5",
                     "--seed", "2", "--out", str(out), "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["agents"] == 5


class TestConfigFile:
    def test_bad_json_exit_2(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json", encoding="utf-8")
        code = main(["temporal", "--config", str(cfg), "--corpus", "x",
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_flags_override_config(self, tmp_path):
        behaviors, news = build_mind_fixture(tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(
            {"ingest": {"format": "mind", "behaviors": str(behaviors),
                        "news": str(news), "min_interactions": 100}}),
            encoding="utf-8")
        out = tmp_path / "corpus"
        code = main(["ingest", "--config", str(cfg), "--min-interactions", "0",
                     "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["users_retained"] == 6
