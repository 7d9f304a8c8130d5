"""Content-selection analysis over title embeddings.

For every exposure shown to a user, the similarity row against the user's
click history yields two structural features: the maximum (strength of the
single closest historical interest) and the median (overall match against
the broader interest space). Splitting rows by click label and comparing
the feature distributions, per exposure-diversity band, quantifies how
strongly historical interests drive clicks and how that dependence fades
as the exposed content gets more diverse.

Embeddings are external inputs loaded from a plain-text vector file; the
deterministic hash embedder exists so tests and demos run hermetically
without an encoder.
"""

from __future__ import annotations

import csv
import hashlib
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import gaussian_kde

from ._validation import as_1d_float, require
from .ingest import Corpus, Impression
from .temporal import DensityEstimate, estimate_density

DEFAULT_ENTROPY_BINS = ((1.2, 2.0), (2.0, 2.8), (2.8, 3.6))

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class EmbeddingStore:
    """Article id -> vector map with a fixed dimension."""

    vectors: dict[str, np.ndarray]
    dim: int

    def __contains__(self, article_id: str) -> bool:
        return article_id in self.vectors

    def __getitem__(self, article_id: str) -> np.ndarray:
        return self.vectors[article_id]

    def __len__(self) -> int:
        return len(self.vectors)

    @classmethod
    def load(cls, path) -> "EmbeddingStore":
        """Read the vector file: header ``d=<dim>``, then one line per
        article holding the id and d space-separated components."""
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("d="):
                raise ValueError(f"embedding file must start with 'd=<dim>', got {header!r}")
            try:
                dim = int(header[2:])
            except ValueError as exc:
                raise ValueError(f"bad dimension in header {header!r}") from exc
            vectors: dict[str, np.ndarray] = {}
            for line_no, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != dim + 1:
                    raise ValueError(
                        f"line {line_no}: expected id plus {dim} components, got {len(parts) - 1}")
                vec = np.asarray([float(p) for p in parts[1:]], dtype=float)
                if not np.all(np.isfinite(vec)):
                    raise ValueError(f"line {line_no}: non-finite component")
                vectors[parts[0]] = vec
        return cls(vectors, dim)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"d={self.dim}\n")
            for article_id in sorted(self.vectors):
                comps = " ".join(repr(float(c)) for c in self.vectors[article_id])
                fh.write(f"{article_id} {comps}\n")

    @classmethod
    def from_titles(cls, titles: dict[str, str], dim: int = 256) -> "EmbeddingStore":
        """Hash-embed a title table (hermetic substitute for a real encoder)."""
        return cls({aid: hash_embed(t, dim) for aid, t in titles.items()}, dim)


def hash_embed(text: str, dim: int = 256) -> np.ndarray:
    """Deterministic token-hash bag-of-words vector, L2-normalized.

    Identical texts map to identical vectors across runs and platforms
    (token hashing uses a stable digest, not the process-seeded hash()).
    """
    require(dim >= 8, "embedding dimension must be at least 8")
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise ValueError("cannot embed empty text")
    vec = np.zeros(dim)
    for token in tokens:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        vec[int.from_bytes(digest[:8], "big") % dim] += 1.0
    return vec / np.linalg.norm(vec)


def cosine_similarity(u, v) -> float:
    """u.v / (|u||v|), clamped to [-1, 1] against rounding."""
    u = as_1d_float(u, "u")
    v = as_1d_float(v, "v")
    require(u.size == v.size, "vectors must have equal dimension")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_matrix(impression: Impression, store: EmbeddingStore) -> np.ndarray:
    """Exposures-by-history cosine matrix for one impression.

    Raises KeyError when an article id has no embedding and ValueError on
    an empty history; batch callers turn both into skip counts.
    """
    if impression.history_empty:
        raise ValueError("impression has empty history")
    for aid in impression.history:
        if aid not in store:
            raise KeyError(aid)
    exp_ids = [a for a, _ in impression.exposures]
    for aid in exp_ids:
        if aid not in store:
            raise KeyError(aid)
    hist = np.stack([store[a] for a in impression.history])
    expo = np.stack([store[a] for a in exp_ids])
    hist_n = hist / np.linalg.norm(hist, axis=1, keepdims=True)
    expo_n = expo / np.linalg.norm(expo, axis=1, keepdims=True)
    return np.clip(expo_n @ hist_n.T, -1.0, 1.0)


def exposure_entropy(categories: Sequence[str]) -> float:
    """Shannon entropy (bits) of the exposure-list category distribution."""
    require(len(categories) >= 1, "need at least one exposure")
    _, counts = np.unique(np.asarray(categories, dtype=object), return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)))


def mean_pairwise_distance(vectors) -> float:
    """Mean Euclidean distance over all unordered exposure pairs.

    Undefined (NaN) below two exposures; callers treat NaN as the flag.
    """
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        return float("nan")
    diff = arr[:, None, :] - arr[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    iu = np.triu_indices(arr.shape[0], k=1)
    return float(dist[iu].mean())


@dataclass(frozen=True)
class ExposureFeatures:
    """Per-exposure feature row: the unit of all content analysis."""

    impression_id: str
    exposure_index: int
    clicked: int
    max_similarity: float
    median_similarity: float
    entropy: float
    mean_pair_distance: float
    exposure_len: int

    def __post_init__(self):
        if self.median_similarity > self.max_similarity + 1e-12:
            raise ValueError("median similarity cannot exceed the maximum")


def exposure_features(
    similarity_row, clicked: int, impression_id: str = "", exposure_index: int = 0,
    entropy: float = float("nan"), mean_pair_distance: float = float("nan"),
    exposure_len: int = 0,
) -> ExposureFeatures:
    """Features of one exposure given its similarity row against the history.

    The median of an even-length row is the mean of the middle two values.
    """
    row = as_1d_float(similarity_row, "similarity_row")
    require(row.size >= 1, "similarity row must be non-empty")
    return ExposureFeatures(
        impression_id=impression_id,
        exposure_index=exposure_index,
        clicked=int(clicked),
        max_similarity=float(row.max()),
        median_similarity=float(np.median(row)),
        entropy=entropy,
        mean_pair_distance=mean_pair_distance,
        exposure_len=exposure_len,
    )


@dataclass
class ContentDiagnostics:
    impressions_total: int = 0
    impressions_used: int = 0
    skipped_empty_history: int = 0
    skipped_missing_embedding: int = 0


def impression_features(
    impression: Impression, store: EmbeddingStore, categories: dict[str, str]
) -> list[ExposureFeatures]:
    """Feature rows for every exposure of one impression."""
    matrix = similarity_matrix(impression, store)
    exp_ids = [a for a, _ in impression.exposures]
    cats = [categories.get(a, "unknown") for a in exp_ids]
    entropy = exposure_entropy(cats)
    mpd = mean_pairwise_distance(np.stack([store[a] for a in exp_ids]))
    rows = []
    for idx, (_, label) in enumerate(impression.exposures):
        rows.append(
            exposure_features(
                matrix[idx], label, impression.impression_id, idx,
                entropy=entropy, mean_pair_distance=mpd, exposure_len=len(exp_ids),
            )
        )
    return rows


def build_feature_table(
    impressions: Iterable[Impression], store: EmbeddingStore, categories: dict[str, str]
) -> tuple[list[ExposureFeatures], ContentDiagnostics]:
    """Feature rows for a batch of impressions, skip-and-count on bad input.

    Output order is deterministic: rows sorted by impression id then
    exposure index.
    """
    diag = ContentDiagnostics()
    rows: list[ExposureFeatures] = []
    for imp in impressions:
        diag.impressions_total += 1
        if imp.history_empty:
            diag.skipped_empty_history += 1
            continue
        try:
            rows.extend(impression_features(imp, store, categories))
        except KeyError:
            diag.skipped_missing_embedding += 1
            continue
        diag.impressions_used += 1
    rows.sort(key=lambda r: (r.impression_id, r.exposure_index))
    return rows, diag


def partition_by_click(
    features: Iterable[ExposureFeatures],
) -> tuple[list[ExposureFeatures], list[ExposureFeatures]]:
    """Split rows into the clicked set and the non-clicked set."""
    pos, neg = [], []
    for f in features:
        (pos if f.clicked else neg).append(f)
    return pos, neg


def wasserstein_1d(a, b) -> float:
    """Exact 1-D Wasserstein distance between two empirical distributions.

    Computed as the area between the two empirical CDFs over the merged
    sorted samples.
    """
    a = np.sort(as_1d_float(a, "a"))
    b = np.sort(as_1d_float(b, "b"))
    if a.size == 0 or b.size == 0:
        raise ValueError("both sample sets must be non-empty")
    merged = np.sort(np.concatenate([a, b]))
    cdf_a = np.searchsorted(a, merged, side="right") / a.size
    cdf_b = np.searchsorted(b, merged, side="right") / b.size
    return float(np.sum(np.abs(cdf_a[:-1] - cdf_b[:-1]) * np.diff(merged)))


@dataclass
class DiversityBin:
    """Click-vs-exposure comparison inside one entropy band."""

    lo: float
    hi: float
    n_clicked: int
    n_unclicked: int
    w_median: float
    w_max: float
    flagged: bool
    densities: dict[str, DensityEstimate] | None = None


def diversity_binned_analysis(
    features: Sequence[ExposureFeatures],
    bins: Sequence[tuple[float, float]] = DEFAULT_ENTROPY_BINS,
    with_densities: bool = True,
) -> list[DiversityBin]:
    """Per-entropy-band Wasserstein distances between clicked and unclicked
    feature distributions, with optional density summaries.

    Rows fall into a band when lo <= entropy < hi. Bands missing one of
    the two classes are flagged and excluded from downstream curves.
    """
    out = []
    for lo, hi in bins:
        rows = [f for f in features if lo <= f.entropy < hi]
        pos, neg = partition_by_click(rows)
        if not pos or not neg:
            out.append(DiversityBin(lo, hi, len(pos), len(neg),
                                    float("nan"), float("nan"), True))
            continue
        pos_m = [f.median_similarity for f in pos]
        neg_m = [f.median_similarity for f in neg]
        pos_M = [f.max_similarity for f in pos]
        neg_M = [f.max_similarity for f in neg]
        densities = None
        if with_densities:
            densities = {}
            for name, values in (("m_clicked", pos_m), ("m_unclicked", neg_m),
                                 ("M_clicked", pos_M), ("M_unclicked", neg_M)):
                try:
                    densities[name] = estimate_density(values, method="gaussian_kde")
                except ValueError:
                    densities[name] = None
        out.append(
            DiversityBin(lo, hi, len(pos), len(neg),
                         wasserstein_1d(pos_m, neg_m), wasserstein_1d(pos_M, neg_M),
                         False, densities)
        )
    return out


def _trapezoid_2d(z: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.trapezoid(np.trapezoid(z, y, axis=1), x))


def joint_density_difference(
    clicked_pairs, unclicked_pairs, grid_size: tuple[int, int] = (64, 64)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Difference of the two (median, max) joint densities on a shared grid.

    Each 2-D Gaussian-KDE density is normalized on the grid before
    subtracting, so the difference integrates to zero. Returns (x grid,
    y grid, difference) with the difference indexed [ix, iy].
    """
    pos = np.asarray(clicked_pairs, dtype=float)
    neg = np.asarray(unclicked_pairs, dtype=float)
    for name, arr in (("clicked", pos), ("unclicked", neg)):
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"{name} pairs must be an (n, 2) array")
        if arr.shape[0] < 30:
            raise ValueError(f"{name} pairs: need at least 30 points")
    try:
        kde_pos = gaussian_kde(pos.T)
        kde_neg = gaussian_kde(neg.T)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate input: singular covariance") from exc
    both = np.vstack([pos, neg])
    pad = 3.0 * np.sqrt(np.maximum(kde_pos.covariance.diagonal(),
                                   kde_neg.covariance.diagonal()))
    x = np.linspace(both[:, 0].min() - pad[0], both[:, 0].max() + pad[0], grid_size[0])
    y = np.linspace(both[:, 1].min() - pad[1], both[:, 1].max() + pad[1], grid_size[1])
    xx, yy = np.meshgrid(x, y, indexing="ij")
    coords = np.vstack([xx.ravel(), yy.ravel()])
    dens_pos = kde_pos(coords).reshape(grid_size)
    dens_neg = kde_neg(coords).reshape(grid_size)
    dens_pos /= _trapezoid_2d(dens_pos, x, y)
    dens_neg /= _trapezoid_2d(dens_neg, x, y)
    return x, y, dens_pos - dens_neg


def proxy_exposure(corpus: Corpus) -> list[Impression]:
    """Pseudo-impressions for click-only logs: each user's last click
    becomes a clicked exposure, all prior clicks the history.

    Users with fewer than two clicks (or without article ids) are skipped.
    """
    out = []
    for user in corpus.user_ids:
        clicks = [e for e in corpus.events.get(user, [])
                  if e.kind == "click" and e.article_id is not None]
        if len(clicks) < 2:
            continue
        history = tuple(e.article_id for e in clicks[:-1])
        last = clicks[-1]
        out.append(
            Impression(
                impression_id=f"proxy-{user}",
                user_id=user,
                timestamp=last.timestamp,
                history=history,
                exposures=((last.article_id, 1),),
            )
        )
    return out


def filter_exposure_length(
    impressions: Iterable[Impression], lo: int = 10, hi: int = 15
) -> list[Impression]:
    """Keep impressions with lo <= exposure length <= hi (both inclusive)."""
    require(lo <= hi, "lo must not exceed hi")
    return [imp for imp in impressions if lo <= len(imp.exposures) <= hi]


def write_features_csv(features: Iterable[ExposureFeatures], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["impression_id", "exposure_index", "clicked", "M", "m",
                         "En", "meanPairDist", "exposure_len"])
        for f in features:
            writer.writerow([f.impression_id, f.exposure_index, f.clicked,
                             f.max_similarity, f.median_similarity, f.entropy,
                             f.mean_pair_distance, f.exposure_len])
