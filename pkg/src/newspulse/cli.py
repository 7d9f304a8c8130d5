"""Command-line pipelines: ingest, temporal, content, cluster, simulate.

Every command reads an optional JSON config file (section per command;
flags win over config values), writes machine outputs into ``--out``, and
drops a ``<file>.meta.json`` sidecar with the tool version and a hash of
the effective configuration next to each output. All outputs are
deterministic for identical inputs, config, and seed.

Exit codes: 0 success, 2 validation problem (missing files, bad config),
1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, abm, cohorts, content, ingest, sessions, temporal

MINUTE = 60.0


class ValidationError(Exception):
    """Input or configuration problem: maps to exit code 2."""


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------

class OutputWriter:
    def __init__(self, out_dir: str, command: str, effective_config: dict):
        self.out_dir = out_dir
        self.command = command
        canonical = json.dumps(effective_config, sort_keys=True, default=str)
        self.config_hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _sidecar(self, name: str) -> None:
        meta = {
            "tool": "newspulse",
            "version": __version__,
            "command": self.command,
            "config_sha256": self.config_hash,
            "file": name,
        }
        with open(self.path(name) + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
            fh.write("\n")

    def write_json(self, name: str, obj) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=True, default=_jsonable)
            fh.write("\n")
        self._sidecar(name)

    def write_csv(self, name: str, header: list[str], rows) -> None:
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        self._sidecar(name)

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            fh.write(text)
        self._sidecar(name)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _require_file(path: str | None, what: str) -> str:
    if not path:
        raise ValidationError(f"missing required input: {what}")
    if not os.path.exists(path):
        raise ValidationError(f"{what} not found: {path}")
    return path


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    _require_file(path, "config file")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config file must hold a JSON object")
    return cfg


def _merged(args: argparse.Namespace, section: dict, key: str, default):
    """Flag value if given, else config-section value, else default.

    Config sections accept the key in either hyphen or underscore form.
    """
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    for form in (key, key.replace("-", "_")):
        if form in section:
            return section[form]
    return default


def _emit_summary(args, summary: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(summary, sort_keys=True, default=_jsonable))
    else:
        for key in sorted(summary):
            print(f"{key}: {summary[key]}")


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    section = _load_config(args.config).get("ingest", {})
    fmt = _merged(args, section, "format", None)
    if fmt not in ("mind", "jsonl"):
        raise ValidationError("--format must be 'mind' or 'jsonl'")
    threshold = int(_merged(args, section, "min-interactions", 10))
    count_mode = _merged(args, section, "count-mode", "events")
    dedup = bool(_merged(args, section, "dedup", False))
    realtime = bool(_merged(args, section, "realtime-history", False))

    diag = ingest.ParseDiagnostics()
    articles: dict[str, ingest.Article] = {}
    if fmt == "mind":
        behaviors = _require_file(_merged(args, section, "behaviors", None), "behaviors file")
        impressions = list(ingest.parse_mind_behaviors(behaviors, diag))
        news = _merged(args, section, "news", None)
        if news:
            articles = ingest.parse_mind_news(_require_file(news, "news file"))
        corpus = ingest.Corpus.from_records(impressions=impressions,
                                            articles=articles.values())
        if realtime:
            corpus.impressions = {
                user: ingest.build_realtime_history(imps)
                for user, imps in corpus.impressions.items()
            }
    else:
        events_path = _require_file(_merged(args, section, "events", None), "events file")
        events = list(ingest.parse_jsonl_events(events_path, diag))
        corpus = ingest.Corpus.from_records(events=events)

    dedup_removed = 0
    if dedup:
        corpus, dedup_removed = ingest.dedup_events(corpus)

    users_before = len(corpus.user_ids)
    corpus = ingest.filter_min_interactions(corpus, threshold, count_mode)
    users_after = len(corpus.user_ids)

    effective = {"format": fmt, "min_interactions": threshold, "count_mode": count_mode,
                 "dedup": dedup, "realtime_history": realtime}
    writer = OutputWriter(args.out, "ingest", effective)
    ingest.save_corpus(corpus, writer.path("corpus.jsonl"))
    writer._sidecar("corpus.jsonl")
    if articles:
        ingest.save_articles(corpus.articles, writer.path("articles.jsonl"))
        writer._sidecar("articles.jsonl")
    summary = {
        "users_before_filter": users_before,
        "users_retained": users_after,
        "users_dropped": users_before - users_after,
        "events": sum(len(v) for v in corpus.events.values()),
        "impressions": sum(len(v) for v in corpus.impressions.values()),
        "lines_total": diag.lines_total,
        "lines_skipped": diag.lines_skipped,
        "dedup_removed": dedup_removed,
    }
    writer.write_json("summary.json", summary)
    _emit_summary(args, summary)
    return 0


# ---------------------------------------------------------------------------
# temporal
# ---------------------------------------------------------------------------

def _fit_or_note(fn, *fn_args, **fn_kwargs):
    try:
        return fn(*fn_args, **fn_kwargs).to_json_obj()
    except ValueError as exc:
        return {"error": str(exc)}


def cmd_temporal(args) -> int:
    section = _load_config(args.config).get("temporal", {})
    corpus_path = _require_file(_merged(args, section, "corpus", None), "corpus file")
    corpus = ingest.load_corpus(corpus_path)
    if not corpus.user_ids:
        raise ValidationError("corpus contains no users")
    threshold = float(_merged(args, section, "threshold", sessions.DEFAULT_THRESHOLD_S))
    adaptive = bool(_merged(args, section, "adaptive", False))
    period = float(_merged(args, section, "fourier-period", 24.0))
    harmonics = int(_merged(args, section, "fourier-harmonics", 3))
    basis = _merged(args, section, "basis", "session_start")
    band = _merged(args, section, "band", (360.0, 540.0))
    band = (float(band[0]), float(band[1]))
    utc_offset = float(_merged(args, section, "utc-offset", 0.0))

    all_sessions = sessions.segment_corpus(corpus, threshold, adaptive)
    if not all_sessions:
        raise ValidationError("corpus contains no action timestamps")
    ns, deltas, gaps = sessions.session_stats(all_sessions, utc_offset)

    if basis == "click":
        times = [t for u in corpus.user_ids for t in sessions.corpus_click_times(corpus, u)]
        profile = sessions.hourly_activity_profile(times, "click", utc_offset)
    else:
        profile = sessions.hourly_activity_profile(all_sessions, "session_start", utc_offset)

    effective = {"threshold_s": threshold, "adaptive": adaptive, "period": period,
                 "harmonics": harmonics, "basis": basis, "band_min": band,
                 "utc_offset": utc_offset}
    writer = OutputWriter(args.out, "temporal", effective)

    fourier_obj: dict
    try:
        model, fit = temporal.fit_fourier(profile, period=period, harmonics=harmonics)
        fourier_obj = fit.to_json_obj()
        fourier_obj["basis"] = basis
        fourier_obj["fitted_curve"] = [float(v) for v in model.predict(np.arange(24.0))]
    except ValueError as exc:
        fourier_obj = {"error": str(exc)}
    writer.write_json("fourier.json", fourier_obj)

    gaps_min = np.asarray([g.delta_t for g in gaps]) / MINUTE
    inflection_note = None
    delta_t_prime = None
    valley = False
    try:
        result = temporal.detect_inflection(gaps_min, band)
        valley = result.valley
        delta_t_prime = result.delta_t_prime
    except ValueError as exc:
        inflection_note = str(exc)
    cutoff = delta_t_prime if delta_t_prime is not None else band[0]
    kept = gaps_min[gaps_min < cutoff] if gaps_min.size else gaps_min
    interval_obj = {
        "delta_t_prime_min": delta_t_prime,
        "valley": valley,
        "band_min": list(band),
        "note": inflection_note,
        "n_gaps_total": int(gaps_min.size),
        "n_gaps_kept": int(kept.size),
        "ranking": None,
        "fits": None,
    }
    try:
        ranked = temporal.compare_families(kept)
        interval_obj["ranking"] = [f.family for f in ranked]
        interval_obj["fits"] = {f.family: f.to_json_obj() for f in ranked}
    except ValueError as exc:
        interval_obj["note"] = str(exc)
    writer.write_json("interval_fit.json", interval_obj)

    micro_obj = {
        "action_count": _fit_or_note(temporal.fit_exponential, np.asarray(ns, dtype=float)),
        "action_gap": _fit_or_note(temporal.fit_exponential, np.asarray(deltas, dtype=float)),
    }
    writer.write_json("micro_fits.json", micro_obj)

    writer.write_csv("activity_profile.csv", ["hour", "proportion"],
                     [[h, profile.values[h]] for h in range(24)])
    for name, data, method in (
        ("density_session_gaps.csv", gaps_min, "log_histogram"),
        ("density_action_count.csv", np.asarray(ns, dtype=float), "histogram"),
        ("density_action_gaps.csv", np.asarray(deltas, dtype=float), "histogram"),
    ):
        try:
            est = temporal.estimate_density(data, method=method)
            rows = [[x, d] for x, d in zip(est.grid, est.density)]
        except ValueError:
            rows = []
        writer.write_csv(name, ["x", "density"], rows)

    ts_all, te_all = temporal.interval_endpoint_profile(gaps)
    ts_band, te_band = temporal.interval_endpoint_profile(
        gaps, band_s=(band[0] * MINUTE, band[1] * MINUTE))
    writer.write_csv(
        "endpoint_profile.csv",
        ["hour", "ts_all", "te_all", "ts_band", "te_band"],
        [[h, ts_all[h], te_all[h], ts_band[h], te_band[h]] for h in range(24)],
    )
    sessions.write_sessions_csv(all_sessions, writer.path("sessions.csv"))
    writer._sidecar("sessions.csv")
    sessions.write_gaps_csv(gaps, writer.path("gaps.csv"))
    writer._sidecar("gaps.csv")

    summary = {
        "users": len(corpus.user_ids),
        "sessions": len(all_sessions),
        "gaps": len(gaps),
        "fourier_r2": fourier_obj.get("r2"),
        "best_interval_family": (interval_obj["ranking"] or [None])[0],
        "delta_t_prime_min": delta_t_prime,
    }
    writer.write_json("summary.json", summary)
    _emit_summary(args, summary)
    return 0


# ---------------------------------------------------------------------------
# content
# ---------------------------------------------------------------------------

def _parse_en_bins(edges) -> tuple[tuple[float, float], ...]:
    values = [float(e) for e in edges]
    if len(values) < 2 or any(b <= a for a, b in zip(values, values[1:])):
        raise ValidationError("entropy bin edges must be strictly increasing")
    return tuple((a, b) for a, b in zip(values, values[1:]))


def cmd_content(args) -> int:
    section = _load_config(args.config).get("content", {})
    corpus_path = _require_file(_merged(args, section, "corpus", None), "corpus file")
    articles_path = _merged(args, section, "articles", None)
    corpus = ingest.load_corpus(corpus_path,
                                _require_file(articles_path, "articles file")
                                if articles_path else None)
    emb_path = _merged(args, section, "embeddings", None)
    hash_dim = _merged(args, section, "hash-dim", None)
    if emb_path:
        store = content.EmbeddingStore.load(_require_file(emb_path, "embeddings file"))
    elif hash_dim:
        if not corpus.articles:
            raise ValidationError("--hash-dim needs article metadata for titles")
        store = content.EmbeddingStore.from_titles(
            {aid: a.title for aid, a in corpus.articles.items()}, int(hash_dim))
    else:
        raise ValidationError("provide --embeddings FILE or --hash-dim N")

    proxy = bool(_merged(args, section, "proxy-exposure", False))
    exposure_len = _merged(args, section, "exposure-len", (10, 15))
    en_edges = _merged(args, section, "en-bins", (1.2, 2.0, 2.8, 3.6))
    bins = _parse_en_bins(en_edges)

    if proxy:
        impressions = content.proxy_exposure(corpus)
    else:
        impressions = [imp for user in corpus.user_ids
                       for imp in corpus.impressions.get(user, [])]
        impressions = content.filter_exposure_length(
            impressions, int(exposure_len[0]), int(exposure_len[1]))

    categories = {aid: a.category for aid, a in corpus.articles.items()}
    features, diag = content.build_feature_table(impressions, store, categories)

    effective = {"proxy": proxy, "exposure_len": list(exposure_len),
                 "en_bins": list(en_edges), "embeddings": bool(emb_path),
                 "hash_dim": hash_dim}
    writer = OutputWriter(args.out, "content", effective)
    content.write_features_csv(features, writer.path("features.csv"))
    writer._sidecar("features.csv")

    analysis = content.diversity_binned_analysis(features, bins, with_densities=False)
    writer.write_csv(
        "ws_curve.csv",
        ["en_lo", "en_hi", "n_clicked", "n_unclicked", "w_m", "w_M", "flagged"],
        [[b.lo, b.hi, b.n_clicked, b.n_unclicked, b.w_median, b.w_max, int(b.flagged)]
         for b in analysis],
    )

    pos, neg = content.partition_by_click(features)
    joint_rows = []
    joint_note = None
    try:
        x, y, diff = content.joint_density_difference(
            [(f.median_similarity, f.max_similarity) for f in pos],
            [(f.median_similarity, f.max_similarity) for f in neg],
        )
        for i, xv in enumerate(x):
            for j, yv in enumerate(y):
                joint_rows.append([xv, yv, diff[i, j]])
    except ValueError as exc:
        joint_note = str(exc)
    writer.write_csv("joint_diff.csv", ["m", "M", "density_diff"], joint_rows)

    summary = {
        "impressions_total": diag.impressions_total,
        "impressions_used": diag.impressions_used,
        "skipped_empty_history": diag.skipped_empty_history,
        "skipped_missing_embedding": diag.skipped_missing_embedding,
        "feature_rows": len(features),
        "clicked_rows": len(pos),
        "unclicked_rows": len(neg),
        "joint_note": joint_note,
    }
    writer.write_json("summary.json", summary)
    _emit_summary(args, summary)
    return 0


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------

def cmd_cluster(args) -> int:
    section = _load_config(args.config).get("cluster", {})
    corpus_path = _require_file(_merged(args, section, "corpus", None), "corpus file")
    articles_path = _merged(args, section, "articles", None)
    corpus = ingest.load_corpus(corpus_path,
                                _require_file(articles_path, "articles file")
                                if articles_path else None)
    by = _merged(args, section, "by", "tags")
    k = int(_merged(args, section, "k", 4 if by == "tags" else 2))
    seed = int(_merged(args, section, "seed", 0))
    n_tags = int(_merged(args, section, "n-tags", 3))
    weighting = _merged(args, section, "weighting", "rank")
    algos = _merged(args, section, "algos", "kmeans,gmm,agglomerative")
    if isinstance(algos, str):
        algos = [a.strip() for a in algos.split(",") if a.strip()]
    algos = [{"agglo": "agglomerative"}.get(a, a) for a in algos]
    threshold = float(_merged(args, section, "threshold", sessions.DEFAULT_THRESHOLD_S))
    utc_offset = float(_merged(args, section, "utc-offset", 0.0))

    profiles: dict[str, sessions.ActivityProfile] = {}
    for user in corpus.user_ids:
        times = sessions.corpus_action_times(corpus, user)
        if not times:
            continue
        user_sessions = sessions.segment_sessions(times, threshold, user)
        profiles[user] = sessions.hourly_activity_profile(
            user_sessions, "session_start", utc_offset)

    effective = {"by": by, "k": k, "seed": seed, "n_tags": n_tags,
                 "weighting": weighting, "algos": algos, "threshold_s": threshold,
                 "utc_offset": utc_offset}
    writer = OutputWriter(args.out, "cluster", effective)

    if by == "tags":
        signatures, excluded = cohorts.interest_signatures_from_corpus(corpus, n_tags)
        if len(signatures) < k:
            raise ValidationError(
                f"only {len(signatures)} users have categorized clicks; need >= k={k}")
        X, vocab = cohorts.encode_signatures(signatures, weighting=weighting, n=n_tags)
        if len(algos) >= 2:
            best, table = cohorts.select_best_clustering(X, algos, k=k, seed=seed)
        else:
            best = {"kmeans": cohorts.kmeans, "gmm": cohorts.gmm_em,
                    "agglomerative": cohorts.agglomerative}[algos[0]](X, k, seed) \
                if algos[0] != "agglomerative" else cohorts.agglomerative(X, k)
            table = [cohorts.ScoreRow(best.algorithm, k, best.silhouette, best.seed, True)]
        user_ids = [s.user_id for s in signatures]
        day_night = None
        summary_extra = {"users_excluded_no_categories": excluded,
                         "vocabulary_size": len(vocab)}
    elif by == "activity":
        user_ids = [u for u in corpus.user_ids if u in profiles]
        if len(user_ids) < k:
            raise ValidationError(f"only {len(user_ids)} users with activity; need >= k={k}")
        best = cohorts.activity_clusters([profiles[u] for u in user_ids], k=k, seed=seed)
        table = [cohorts.ScoreRow(best.algorithm, k, best.silhouette, best.seed, True)]
        day_night = best.day_night
        summary_extra = {"degenerate": best.degenerate}
    else:
        raise ValidationError("--by must be 'tags' or 'activity'")

    rows = []
    for user, label in zip(user_ids, best.labels):
        tag = day_night.get(int(label), "") if day_night else ""
        rows.append([user, best.algorithm, k, int(label), tag])
    writer.write_csv("assignments.csv", ["user_id", "algorithm", "k", "label", "tag"], rows)
    writer.write_csv(
        "scores.csv", ["algorithm", "k", "silhouette", "seed", "selected"],
        [[r.algorithm, r.k, r.silhouette, r.seed, int(r.selected)] for r in table],
    )

    # hourly deviation of each cluster from the population mean
    clustered_profiles = [profiles[u] for u in user_ids if u in profiles]
    deviation_rows = []
    if clustered_profiles:
        overall = np.stack([p.values for p in clustered_profiles]).mean(axis=0)
        for label in sorted(set(int(l) for l in best.labels)):
            members = [profiles[u] for u, lab in zip(user_ids, best.labels)
                       if int(lab) == label and u in profiles]
            if not members:
                continue
            dev = cohorts.group_deviation_profile(members, overall, group_id=str(label))
            for hour in range(24):
                deviation_rows.append([label, hour, dev.hourly[hour]])
    writer.write_csv("deviations.csv", ["label", "hour", "deviation"], deviation_rows)

    summary = {
        "by": by,
        "k": k,
        "algorithm": best.algorithm,
        "silhouette": best.silhouette,
        "users_clustered": len(user_ids),
        **summary_extra,
    }
    writer.write_json("summary.json", summary)
    _emit_summary(args, summary)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _interval_source_from_config(obj) -> abm.EmpiricalIntervals | abm.PowerLawIntervals:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError("abm.interval must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "power_law":
        try:
            return abm.PowerLawIntervals(float(obj["exponent"]), float(obj["xmin_s"]),
                                         float(obj["truncation_s"]))
        except KeyError as exc:
            raise ValidationError(f"abm.interval missing {exc}") from exc
    if kind == "empirical":
        pool = obj.get("pool")
        if not pool:
            raise ValidationError("abm.interval.pool must be a non-empty list")
        return abm.EmpiricalIntervals(tuple(float(g) for g in pool))
    if kind == "empirical_csv":
        path = _require_file(obj.get("path"), "interval pool CSV")
        column = obj.get("column", "delta_T")
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            pool = [float(row[column]) for row in reader]
        if not pool:
            raise ValidationError("interval pool CSV has no rows")
        return abm.EmpiricalIntervals(tuple(pool))
    raise ValidationError(f"unknown interval source kind {kind!r}")


def _profile_from_config(section: dict) -> np.ndarray:
    if "activity_profile" in section:
        profile = np.asarray(section["activity_profile"], dtype=float)
    elif "activity_fourier" in section:
        fourier_cfg = section["activity_fourier"]
        try:
            model = temporal.FourierSeriesModel.from_coefficients(
                float(fourier_cfg["a0"]),
                [(float(a), float(b)) for a, b in fourier_cfg["coefficients"]],
                period=float(fourier_cfg.get("period", 24.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad activity_fourier section: {exc}") from exc
        profile = abm.profile_from_fourier(model)
    else:
        raise ValidationError("abm config needs activity_profile or activity_fourier")
    return profile


def cmd_simulate(args) -> int:
    section = _load_config(args.config).get("abm", {})
    if not section:
        raise ValidationError("config file with an 'abm' section is required")
    agents = int(_merged(args, section, "agents", 100))
    seed = int(_merged(args, section, "seed", 0))
    horizon = int(_merged(args, section, "horizon-days", 1))
    try:
        config = abm.AgentConfig(
            activity_profile=_profile_from_config(section),
            interval_source=_interval_source_from_config(section.get("interval")),
            lambda_n=float(section.get("lambda_n", 0.0)),
            lambda_dt=float(section.get("lambda_dt", 0.0)),
            exit_probs={k: float(v) for k, v in section.get(
                "exit_probs", abm.DEFAULT_EXIT_PROBS).items()},
            daypart_bounds={k: (float(v[0]), float(v[1])) for k, v in section.get(
                "daypart_bounds", abm.DEFAULT_DAYPARTS).items()},
            min_gap_s=float(section.get("min_gap_s", 600.0)),
            horizon_days=horizon,
            seed=seed,
            floor_min_gap=bool(section.get("floor_min_gap", True)),
            resample_each_day=bool(section.get("resample_each_day", False)),
        )
        config.validate()
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    traces, profile = abm.simulate_population(agents, config, seed)
    events = [ev for trace in traces for ev in abm.trace_to_events(trace)]
    corpus = ingest.Corpus.from_records(events=events)

    effective = {"agents": agents, "seed": seed, "horizon_days": horizon,
                 "abm": section}
    writer = OutputWriter(args.out, "simulate", effective)
    ingest.save_corpus(corpus, writer.path("events.jsonl"))
    writer._sidecar("events.jsonl")
    writer.write_csv("aggregate_profile.csv", ["hour", "proportion"],
                     [[h, profile.values[h]] for h in range(24)])
    summary = {
        "agents": agents,
        "seed": seed,
        "horizon_days": horizon,
        "sessions": sum(len(t.sessions) for t in traces),
        "events": len(events),
    }
    writer.write_json("summary.json", summary)
    _emit_summary(args, summary)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newspulse",
        description="Multi-scale temporal and content analysis of news-consumption logs.")
    parser.add_argument("--version", action="version", version=f"newspulse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags win over config values)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--json", action="store_true", help="machine-readable stdout summary")

    p = sub.add_parser("ingest", help="parse raw logs into the canonical corpus")
    common(p)
    p.add_argument("--format", choices=["mind", "jsonl"])
    p.add_argument("--behaviors", help="MIND-style behaviors TSV")
    p.add_argument("--news", help="MIND-style news TSV (article metadata)")
    p.add_argument("--events", help="generic events JSONL")
    p.add_argument("--min-interactions", type=int, dest="min_interactions")
    p.add_argument("--count-mode", choices=["events", "clicks", "impressions"],
                   dest="count_mode")
    p.add_argument("--dedup", action="store_const", const=True, default=None)
    p.add_argument("--realtime-history", action="store_const", const=True, default=None,
                   dest="realtime_history")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("temporal", help="session segmentation and temporal-scale fits")
    common(p)
    p.add_argument("--corpus", help="canonical corpus JSONL")
    p.add_argument("--threshold", type=float, help="session split threshold, seconds")
    p.add_argument("--adaptive", action="store_const", const=True, default=None)
    p.add_argument("--fourier-period", type=float, dest="fourier_period")
    p.add_argument("--fourier-harmonics", type=int, dest="fourier_harmonics")
    p.add_argument("--basis", choices=["session_start", "click"])
    p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                   help="inflection search band, minutes")
    p.add_argument("--utc-offset", type=float, dest="utc_offset")
    p.set_defaults(func=cmd_temporal)

    p = sub.add_parser("content", help="similarity features and diversity analysis")
    common(p)
    p.add_argument("--corpus", help="canonical corpus JSONL")
    p.add_argument("--articles", help="articles JSONL (categories and titles)")
    p.add_argument("--embeddings", help="embedding vector file")
    p.add_argument("--hash-dim", type=int, dest="hash_dim",
                   help="hash-embed article titles at this dimension instead")
    p.add_argument("--proxy-exposure", action="store_const", const=True, default=None,
                   dest="proxy_exposure")
    p.add_argument("--exposure-len", type=int, nargs=2, metavar=("LO", "HI"),
                   dest="exposure_len")
    p.add_argument("--en-bins", type=float, nargs="+", dest="en_bins",
                   help="entropy bin edges (bits)")
    p.set_defaults(func=cmd_content)

    p = sub.add_parser("cluster", help="group users by interest tags or activity shape")
    common(p)
    p.add_argument("--corpus", help="canonical corpus JSONL")
    p.add_argument("--articles", help="articles JSONL")
    p.add_argument("--by", choices=["tags", "activity"])
    p.add_argument("--algos", help="comma list: kmeans,gmm,agglomerative")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-tags", type=int, dest="n_tags")
    p.add_argument("--weighting", choices=["rank", "multihot"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--utc-offset", type=float, dest="utc_offset")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simulate", help="generate a synthetic corpus from the ABM")
    common(p)
    p.add_argument("--agents", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon-days", type=int, dest="horizon_days")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
