"""Shared fixtures: reference model coefficients and synthetic generators.

Every generator here is an independent oracle: it produces data with known
ground truth using plain numpy, so the library code under test never
defines its own expected values.
"""

import numpy as np
import pytest

from newspulse.content import EmbeddingStore
from newspulse.ingest import Impression
from newspulse.temporal import FourierSeriesModel

# Reference three-harmonic daily rhythm (period 24 h, percent units):
# intercept plus (sin, cos) pairs per harmonic. Used as a round-trip
# fixture throughout; evaluates to 1.7337 at t=0.
DAILY_RHYTHM_A0 = 4.1667
DAILY_RHYTHM_COEFFS = [(-1.6089, -1.7887), (-1.1159, -0.5976), (-0.4184, -0.0467)]


def daily_rhythm_model() -> FourierSeriesModel:
    return FourierSeriesModel.from_coefficients(DAILY_RHYTHM_A0, DAILY_RHYTHM_COEFFS)


def sample_power_law(rng, alpha: float, xmin: float, size: int,
                     truncation: float | None = None) -> np.ndarray:
    """Inverse-CDF sampler for density proportional to x**-alpha on
    [xmin, truncation] (or unbounded; huge untruncated draws are clipped
    at 1e280 purely to stay inside float64)."""
    u = rng.random(size)
    if truncation is not None:
        p = 1.0 - alpha
        return (xmin**p + u * (truncation**p - xmin**p)) ** (1.0 / p)
    x = xmin * (1.0 - u) ** (-1.0 / (alpha - 1.0))
    return np.minimum(x, 1e280)


def make_blobs_4(rng, n_per_blob: int = 50, sigma: float = 0.1):
    """Four Gaussian blobs at mutual distance >= 10 with ground-truth labels."""
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
    X = np.vstack([c + rng.normal(0, sigma, (n_per_blob, 2)) for c in centers])
    labels = np.repeat(np.arange(4), n_per_blob)
    return X, labels


# ---------------------------------------------------------------------------
# Softmax click generator
# ---------------------------------------------------------------------------

# Exposure-list category patterns pinning the entropy of each diversity
# band: entropies 1.7296 / 2.4591 / 3.5850 bits for 12-item lists.
BAND_PATTERNS = {
    "low": ([0, 1, 2, 3], [6, 3, 2, 1]),
    "medium": ([0, 1, 2, 3, 4, 5], [3, 3, 2, 2, 1, 1]),
    "high": (list(range(12)), [1] * 12),
}


class SoftmaxClickWorld:
    """Synthetic embedding space plus a click rule with known ground truth.

    Articles live near one of 16 category prototypes; users' histories
    come from two interest categories; per impression exactly one
    exposure is clicked with probability softmax(tau * median-similarity)
    over the exposure list, so tau controls how strongly clicks follow
    historical interests (tau = 0 means uniform random clicks).
    """

    N_CATEGORIES = 16
    DIM = 32

    def __init__(self, seed: int = 11):
        rng = np.random.default_rng(seed)
        protos = rng.normal(0, 1, (self.N_CATEGORIES, self.DIM))
        self.prototypes = protos / np.linalg.norm(protos, axis=1, keepdims=True)
        self.rng = rng
        self.articles: dict[str, tuple[np.ndarray, str]] = {}

    def article(self, category: int, idx: int) -> str:
        aid = f"a{category}_{idx}"
        if aid not in self.articles:
            v = self.prototypes[category] + 0.25 * self.rng.normal(0, 1, self.DIM)
            self.articles[aid] = (v / np.linalg.norm(v), f"cat{category}")
        return aid

    def impressions(self, taus: dict[str, float], n_per_band: int = 400,
                    seed: int = 100) -> list[Impression]:
        rng = np.random.default_rng(seed)
        out = []
        for band, (cats, counts) in BAND_PATTERNS.items():
            tau = taus[band]
            for k in range(n_per_band):
                history = [self.article(int(rng.integers(0, 2)), int(rng.integers(0, 40)))
                           for _ in range(20)]
                exposure_ids = [self.article(c, int(rng.integers(0, 40)))
                                for c, cnt in zip(cats, counts) for _ in range(cnt)]
                hist_vecs = np.stack([self.articles[a][0] for a in history])
                expo_vecs = np.stack([self.articles[a][0] for a in exposure_ids])
                medians = np.median(expo_vecs @ hist_vecs.T, axis=1)
                if tau == 0:
                    p = np.full(len(exposure_ids), 1.0 / len(exposure_ids))
                else:
                    z = np.exp(tau * (medians - medians.max()))
                    p = z / z.sum()
                clicked = int(rng.choice(len(exposure_ids), p=p))
                exposures = tuple((a, 1 if i == clicked else 0)
                                  for i, a in enumerate(exposure_ids))
                out.append(Impression(f"imp-{band}-{k:04d}", f"u-{band}-{k:04d}",
                                      1000 + k, tuple(history), exposures))
        return out

    def store(self) -> EmbeddingStore:
        return EmbeddingStore({aid: v for aid, (v, _) in self.articles.items()}, self.DIM)

    def categories(self) -> dict[str, str]:
        return {aid: c for aid, (_, c) in self.articles.items()}


@pytest.fixture(scope="session")
def click_world():
    return SoftmaxClickWorld()
