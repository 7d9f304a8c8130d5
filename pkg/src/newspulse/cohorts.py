"""User cohort extraction: interest signatures and clustering.

Users are grouped two ways: by content preference (rank-weighted top-tag
vectors clustered with k-means, a diagonal-covariance Gaussian mixture, or
agglomerative linkage, scored by silhouette) and by 24-hour activity shape
(k-means on hourly profiles, post-labeled day / night). Clusterers are
implemented directly so every run is deterministic for a given seed and
exposes its per-iteration objective trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import as_2d_float, require
from .sessions import ActivityProfile

DAY_WINDOW = (8, 20)  # [start, end) hours used to tag activity clusters


# ---------------------------------------------------------------------------
# Interest signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InterestSignature:
    user_id: str
    top_tags: tuple[str, ...]


def top_n_tags(user_id: str, categories: Sequence[str], n: int = 3) -> InterestSignature:
    """Dominant interest tags ranked by click count, ties broken lexicographically."""
    require(len(categories) >= 1, "user has no categorized clicks")
    counts: dict[str, int] = {}
    for c in categories:
        counts[c] = counts.get(c, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return InterestSignature(user_id, tuple(tag for tag, _ in ranked[:n]))


def encode_signatures(
    signatures: Sequence[InterestSignature],
    vocabulary: Sequence[str] | None = None,
    weighting: str = "rank",
    n: int = 3,
) -> tuple[np.ndarray, list[str]]:
    """Encode signatures over the tag vocabulary.

    ``rank`` weighting scores the tags n..1 by dominance rank so ordering
    informs distances; ``multihot`` scores membership only.
    """
    require(weighting in ("rank", "multihot"), f"unknown weighting {weighting!r}")
    if vocabulary is None:
        vocabulary = sorted({tag for s in signatures for tag in s.top_tags})
    index = {tag: i for i, tag in enumerate(vocabulary)}
    X = np.zeros((len(signatures), len(vocabulary)))
    for row, sig in enumerate(signatures):
        for pos, tag in enumerate(sig.top_tags):
            if tag not in index:
                continue
            X[row, index[tag]] = (n - pos) if weighting == "rank" else 1.0
    return X, list(vocabulary)


# ---------------------------------------------------------------------------
# Clusterers
# ---------------------------------------------------------------------------

class KMeansClusterer(BaseEstimator, ClusterMixin):
    """Lloyd's k-means with k-means++ seeding.

    Deterministic for a given seed; an emptied cluster is reseeded to the
    point currently farthest from its assigned centroid. ``inertia_history_``
    records the objective after every assignment step.
    """

    def __init__(self, n_clusters: int = 2, seed: int = 0, max_iter: int = 300,
                 tol: float = 1e-6):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol

    def _init_centers(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = X.shape[0]
        centers = [X[rng.integers(n)]]
        for _ in range(1, self.n_clusters):
            d2 = np.min(
                ((X[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(-1), axis=1
            )
            total = d2.sum()
            if total == 0:
                centers.append(X[rng.integers(n)])
            else:
                centers.append(X[rng.choice(n, p=d2 / total)])
        return np.asarray(centers)

    def fit(self, X, y=None):
        X = as_2d_float(X)
        require(self.n_clusters >= 1, "need at least one cluster")
        require(X.shape[0] >= self.n_clusters, "need at least n_clusters points")
        rng = np.random.default_rng(self.seed)
        centers = self._init_centers(X, rng)
        self.inertia_history_ = []
        labels = np.zeros(X.shape[0], dtype=int)
        for iteration in range(self.max_iter):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
            labels = np.argmin(d2, axis=1)
            point_d2 = d2[np.arange(X.shape[0]), labels]
            self.inertia_history_.append(float(point_d2.sum()))
            new_centers = centers.copy()
            for c in range(self.n_clusters):
                members = labels == c
                if members.any():
                    new_centers[c] = X[members].mean(axis=0)
            for c in range(self.n_clusters):
                if not (labels == c).any():
                    far = int(np.argmax(point_d2))
                    new_centers[c] = X[far]
                    point_d2[far] = 0.0  # next empty cluster picks a different point
            shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
            centers = new_centers
            if shift < self.tol:
                break
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        self.labels_ = np.argmin(d2, axis=1)
        self.cluster_centers_ = centers
        self.inertia_ = float(d2[np.arange(X.shape[0]), self.labels_].sum())
        self.n_iter_ = iteration + 1
        return self

    def predict(self, X):
        X = as_2d_float(X)
        d2 = ((X[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(-1)
        return np.argmin(d2, axis=1)


class GaussianMixtureEM(BaseEstimator, ClusterMixin):
    """EM for a diagonal-covariance Gaussian mixture, initialized from k-means.

    ``reg`` is added to every variance to keep components non-singular;
    ``log_likelihood_history_`` records the total log-likelihood per
    iteration (non-decreasing by EM construction).
    """

    def __init__(self, n_components: int = 2, seed: int = 0, max_iter: int = 200,
                 reg: float = 1e-6, tol: float = 1e-9):
        self.n_components = n_components
        self.seed = seed
        self.max_iter = max_iter
        self.reg = reg
        self.tol = tol

    def _log_prob(self, X: np.ndarray) -> np.ndarray:
        # (n, k) log densities of diagonal Gaussians, plus log weights
        diff2 = (X[:, None, :] - self.means_[None, :, :]) ** 2
        log_pdf = -0.5 * (
            np.sum(diff2 / self.variances_[None, :, :], axis=-1)
            + np.sum(np.log(2.0 * np.pi * self.variances_), axis=-1)
        )
        return log_pdf + np.log(self.weights_)[None, :]

    def fit(self, X, y=None):
        X = as_2d_float(X)
        n, d = X.shape
        require(self.n_components >= 1, "need at least one component")
        require(n >= self.n_components * (d + 1),
                "need at least n_components * (dim + 1) points")
        init = KMeansClusterer(self.n_components, seed=self.seed).fit(X)
        means = init.cluster_centers_.copy()
        variances = np.empty((self.n_components, d))
        global_var = X.var(axis=0) + self.reg
        weights = np.empty(self.n_components)
        for c in range(self.n_components):
            members = init.labels_ == c
            weights[c] = max(members.sum(), 1) / n
            variances[c] = X[members].var(axis=0) + self.reg if members.sum() >= 2 else global_var
        weights /= weights.sum()
        self.means_, self.variances_, self.weights_ = means, variances, weights

        self.log_likelihood_history_ = []
        prev_ll = -np.inf
        for _ in range(self.max_iter):
            log_prob = self._log_prob(X)
            norm = logsumexp(log_prob, axis=1)
            ll = float(norm.sum())
            self.log_likelihood_history_.append(ll)
            resp = np.exp(log_prob - norm[:, None])
            nk = resp.sum(axis=0)
            if not np.all(np.isfinite(nk)) or np.any(nk < 1e-12):
                raise ValueError("singular mixture component despite regularization")
            self.weights_ = nk / n
            self.means_ = (resp.T @ X) / nk[:, None]
            diff2 = (X[:, None, :] - self.means_[None, :, :]) ** 2
            self.variances_ = (
                np.einsum("nk,nkd->kd", resp, diff2) / nk[:, None] + self.reg
            )
            if ll - prev_ll < self.tol * max(1.0, abs(ll)) and np.isfinite(prev_ll):
                break
            prev_ll = ll
        self.labels_ = np.argmax(self._log_prob(X), axis=1)
        return self

    def predict(self, X):
        X = as_2d_float(X)
        return np.argmax(self._log_prob(X), axis=1)


class AgglomerativeClusterer(BaseEstimator, ClusterMixin):
    """Bottom-up merging with average or complete linkage.

    Fully deterministic: equal-distance merge candidates resolve to the
    lexicographically smallest index pair. Quadratic memory; intended for
    corpus-scale user counts, not raw event counts.
    """

    def __init__(self, n_clusters: int = 2, linkage: str = "average"):
        self.n_clusters = n_clusters
        self.linkage = linkage

    def fit(self, X, y=None):
        X = as_2d_float(X)
        require(self.linkage in ("average", "complete"), f"unknown linkage {self.linkage!r}")
        n = X.shape[0]
        require(n >= self.n_clusters >= 1, "need n_clusters in [1, n_points]")
        dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        work = dist.copy()
        work[np.tril_indices(n)] = np.inf  # scan upper triangle only
        members: dict[int, list[int]] = {i: [i] for i in range(n)}
        active = n
        while active > self.n_clusters:
            flat = int(np.argmin(work))  # first minimum = smallest (i, j)
            i, j = divmod(flat, n)
            si, sj = len(members[i]), len(members[j])
            for m in list(members):
                if m in (i, j):
                    continue
                dim = work[min(i, m), max(i, m)]
                djm = work[min(j, m), max(j, m)]
                if self.linkage == "average":
                    new = (si * dim + sj * djm) / (si + sj)
                else:
                    new = max(dim, djm)
                work[min(i, m), max(i, m)] = new
            members[i].extend(members[j])
            del members[j]
            work[j, :] = np.inf
            work[:, j] = np.inf
            active -= 1
        # relabel clusters 0..k-1 in order of their smallest member index
        order = sorted(members, key=lambda c: min(members[c]))
        labels = np.empty(n, dtype=int)
        for new_label, c in enumerate(order):
            labels[members[c]] = new_label
        self.labels_ = labels
        return self


def silhouette(X, labels) -> float:
    """Mean silhouette score; points in singleton clusters score zero."""
    X = as_2d_float(X)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette requires at least two clusters")
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    scores = np.zeros(X.shape[0])
    for idx in range(X.shape[0]):
        own = labels == labels[idx]
        if own.sum() == 1:
            continue
        a = dist[idx][own].sum() / (own.sum() - 1)
        b = min(dist[idx][labels == other].mean() for other in uniq if other != labels[idx])
        denom = max(a, b)
        scores[idx] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


# ---------------------------------------------------------------------------
# Result container and functional wrappers
# ---------------------------------------------------------------------------

@dataclass
class ClusterResult:
    algorithm: str
    k: int
    labels: np.ndarray
    centers: np.ndarray | None
    silhouette: float
    seed: int | None
    degenerate: bool = False
    day_night: dict[int, str] | None = None


def _score(X: np.ndarray, labels: np.ndarray) -> tuple[float, bool]:
    if np.unique(labels).size < 2:
        return 0.0, True
    return silhouette(X, labels), False


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6) -> ClusterResult:
    X = as_2d_float(X)
    require(k >= 2, "k-means grouping needs k >= 2")
    est = KMeansClusterer(k, seed=seed, max_iter=max_iter, tol=tol).fit(X)
    score, degenerate = _score(X, est.labels_)
    result = ClusterResult("kmeans", k, est.labels_, est.cluster_centers_, score, seed,
                           degenerate)
    result.inertia_history = est.inertia_history_
    return result


def gmm_em(X, k: int, seed: int = 0, max_iter: int = 200, reg: float = 1e-6) -> ClusterResult:
    X = as_2d_float(X)
    est = GaussianMixtureEM(k, seed=seed, max_iter=max_iter, reg=reg).fit(X)
    if k >= 2:
        score, degenerate = _score(X, est.labels_)
    else:
        score, degenerate = float("nan"), False
    result = ClusterResult("gmm", k, est.labels_, est.means_, score, seed, degenerate)
    result.log_likelihood_history = est.log_likelihood_history_
    return result


def agglomerative(X, k: int, linkage: str = "average") -> ClusterResult:
    X = as_2d_float(X)
    est = AgglomerativeClusterer(k, linkage=linkage).fit(X)
    if k >= 2:
        score, degenerate = _score(X, est.labels_)
    else:
        score, degenerate = float("nan"), False
    return ClusterResult("agglomerative", k, est.labels_, None, score, None, degenerate)


@dataclass
class ScoreRow:
    algorithm: str
    k: int
    silhouette: float
    seed: int | None
    selected: bool = False


def select_best_clustering(
    X, algorithms: Sequence[str] = ("kmeans", "gmm", "agglomerative"),
    k: int = 4, seed: int = 0, linkage: str = "average",
) -> tuple[ClusterResult, list[ScoreRow]]:
    """Run every algorithm and keep the best silhouette.

    Ties resolve to the first algorithm in input order. The full score
    table is returned alongside the winner.
    """
    require(len(algorithms) >= 2, "need at least two algorithms to select between")
    runners = {"kmeans": lambda: kmeans(X, k, seed=seed),
               "gmm": lambda: gmm_em(X, k, seed=seed),
               "agglomerative": lambda: agglomerative(X, k, linkage=linkage)}
    best: ClusterResult | None = None
    table: list[ScoreRow] = []
    for name in algorithms:
        if name not in runners:
            raise ValueError(f"unknown algorithm {name!r}")
        try:
            result = runners[name]()
        except ValueError:
            table.append(ScoreRow(name, k, float("nan"), seed))
            continue
        table.append(ScoreRow(name, k, result.silhouette, result.seed))
        if best is None or (np.isfinite(result.silhouette)
                            and result.silhouette > best.silhouette):
            best = result
    if best is None:
        raise ValueError("every clustering algorithm failed")
    for row in table:
        row.selected = row.algorithm == best.algorithm
    return best, table


# ---------------------------------------------------------------------------
# Activity clustering and group deviations
# ---------------------------------------------------------------------------

def _profile_matrix(profiles) -> np.ndarray:
    rows = [p.values if isinstance(p, ActivityProfile) else np.asarray(p, dtype=float)
            for p in profiles]
    return np.stack(rows)


def activity_clusters(profiles, k: int = 2, seed: int = 0) -> ClusterResult:
    """K-means over 24-hour profiles, post-labeled day / night by the share
    of each centroid's mass inside the day window."""
    X = _profile_matrix(profiles)
    require(X.shape[1] == 24, "activity profiles must have 24 hourly values")
    result = kmeans(X, k, seed=seed)
    lo, hi = DAY_WINDOW
    day_mass = result.centers[:, lo:hi].sum(axis=1) / np.maximum(
        result.centers.sum(axis=1), 1e-300)
    if k == 2:
        day_cluster = int(np.argmax(day_mass))
        result.day_night = {day_cluster: "day", 1 - day_cluster: "night"}
    else:
        result.day_night = {c: ("day" if day_mass[c] >= 0.5 else "night")
                            for c in range(k)}
    return result


@dataclass
class DeviationProfile:
    """Per-hour difference between a group's mean profile and the overall mean."""

    group_id: str
    hourly: np.ndarray
    extras: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def group_deviation_profile(group_profiles, overall_profile, group_id: str = "") -> DeviationProfile:
    """Mean group profile minus the overall profile, hour by hour."""
    group = _profile_matrix(group_profiles)
    require(group.shape[0] >= 1, "group must be non-empty")
    overall = (overall_profile.values if isinstance(overall_profile, ActivityProfile)
               else np.asarray(overall_profile, dtype=float))
    return DeviationProfile(group_id, group.mean(axis=0) - overall)


def density_deviation(group_samples, overall_samples,
                      grid_points: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Difference between a group's sample density and the overall density
    on a shared grid (both Gaussian KDEs, each normalized on the grid)."""
    from scipy.stats import gaussian_kde

    group = as_2d_float(np.asarray(group_samples, dtype=float).reshape(-1, 1), "group")
    overall = as_2d_float(np.asarray(overall_samples, dtype=float).reshape(-1, 1), "overall")
    g, o = group.ravel(), overall.ravel()
    if np.all(g == g[0]) or np.all(o == o[0]):
        raise ValueError("degenerate samples: KDE needs nonzero variance")
    kde_g, kde_o = gaussian_kde(g, bw_method="silverman"), gaussian_kde(o, bw_method="silverman")
    lo = min(g.min(), o.min())
    hi = max(g.max(), o.max())
    pad = 3.0 * max(np.sqrt(kde_g.covariance[0, 0]), np.sqrt(kde_o.covariance[0, 0]))
    grid = np.linspace(lo - pad, hi + pad, grid_points)
    dg = kde_g(grid)
    do = kde_o(grid)
    dg /= np.trapezoid(dg, grid)
    do /= np.trapezoid(do, grid)
    return grid, dg - do


def interest_signatures_from_corpus(corpus, n: int = 3) -> tuple[list[InterestSignature], int]:
    """Signatures for every user with at least one categorized click.

    Returns the signatures plus the count of excluded users.
    """
    signatures = []
    excluded = 0
    for user in corpus.user_ids:
        categories = []
        for ev in corpus.events.get(user, []):
            if ev.kind == "click" and ev.article_id in corpus.articles:
                categories.append(corpus.articles[ev.article_id].category)
        for imp in corpus.impressions.get(user, []):
            for aid in imp.clicks:
                if aid in corpus.articles:
                    categories.append(corpus.articles[aid].category)
        if categories:
            signatures.append(top_n_tags(user, categories, n))
        else:
            excluded += 1
    return signatures, excluded
