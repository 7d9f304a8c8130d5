"""Temporal-scale model fitting.

Three scales are covered: a truncated Fourier series for the 24-hour
activity rhythm, power-law / exponential / logarithmic candidates for the
between-session gap distribution, and exponential models for the
within-session action count and action gap.

Distribution fits default to least squares on the log of a binned density
(``logls``), which matches how prefactor-style parameterizations such as
``c * x**-alpha`` or ``A * exp(-lam * x)`` are usually reported; a
closed-form maximum-likelihood estimate is always computed alongside as a
robustness check when raw samples are available.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import betainc
from scipy.stats import gaussian_kde
from sklearn.base import BaseEstimator

from ._validation import as_1d_float, require, require_min_samples, require_positive
from .sessions import ActivityProfile, SessionGap

DEFAULT_LOG_BINS = 32

POWER_LAW = "power_law"
EXPONENTIAL = "exponential"
LOGARITHMIC = "logarithmic"
FOURIER = "fourier"

#: Tie-break order when ranked fits have equal R^2 and parameter count.
_FAMILY_ORDER = {POWER_LAW: 0, EXPONENTIAL: 1, LOGARITHMIC: 2}


@dataclass
class FitResult:
    """Fitted model family with parameters and goodness of fit.

    ``n`` is the number of points the quality statistics refer to: binned
    density points for logls fits, raw samples for pure-MLE fits.
    """

    family: str
    params: dict[str, float]
    r2: float
    fstat: float
    pvalue: float
    n: int

    def to_json_obj(self) -> dict:
        return {
            "family": self.family,
            "params": {k: float(v) for k, v in self.params.items()},
            "r2": float(self.r2),
            "fstat": float(self.fstat),
            "pvalue": float(self.pvalue),
            "n": int(self.n),
        }


@dataclass
class DensityEstimate:
    """Plot-ready density curve.

    For histogram methods ``grid`` holds bin centers and ``density`` the
    step heights (the step integral over ``edges`` is exactly 1); KDE
    curves are renormalized so their trapezoid integral on the emitted
    grid equals 1.
    """

    grid: np.ndarray
    density: np.ndarray
    method: str
    bandwidth_or_bins: float
    edges: np.ndarray | None = None
    widths: np.ndarray | None = None

    def integral(self) -> float:
        if self.widths is not None:
            return float(np.sum(self.density * self.widths))
        return float(np.trapezoid(self.density, self.grid))


def f_test_pvalue(fstat: float, d1: int, d2: int) -> float:
    """Upper-tail F(d1, d2) probability via the regularized incomplete beta."""
    if np.isnan(fstat):
        return float("nan")
    if np.isinf(fstat):
        return 0.0
    if fstat <= 0:
        return 1.0
    return float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * fstat)))


def _linefit(x: np.ndarray, y: np.ndarray,
             weights: np.ndarray | None = None) -> tuple[float, float, float, float, float]:
    """(Weighted) least-squares line y = intercept + slope*x with R^2 and F-test.

    Sample-derived binned densities pass their bin counts as weights:
    the count is the inverse variance of a log bin height under Poisson
    noise, which stops sparse tail bins from flattening the slope.
    Overflow in intermediate squares (mismatched family on an extreme
    dynamic range) degrades into a zero-R^2 fit instead of raising.
    """
    n = x.size
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    total = w.sum()
    xm, ym = float((w * x).sum() / total), float((w * y).sum() / total)
    with np.errstate(over="ignore", invalid="ignore"):
        sxx = np.sum(w * (x - xm) ** 2)
        if sxx == 0:
            raise ValueError("degenerate abscissae: all x equal")
        slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
        intercept = float(ym - slope * xm)
        resid = y - (intercept + slope * x)
        sse = float(np.sum(w * resid**2))
        sst = float(np.sum(w * (y - ym) ** 2))
    if not np.isfinite(sse):
        return slope, intercept, 0.0, float("nan"), float("nan")
    if sst == 0.0:
        r2 = 1.0 if sse < 1e-30 else 0.0
    else:
        r2 = 1.0 - sse / sst
    if n > 2 and r2 < 1.0:
        fstat = r2 * (n - 2) / (1.0 - r2)
    else:
        fstat = float("inf")
    return slope, intercept, r2, fstat, f_test_pvalue(fstat, 1, n - 2)


# ---------------------------------------------------------------------------
# Binned densities
# ---------------------------------------------------------------------------

class BinnedDensity(NamedTuple):
    """Occupied-bin empirical density (centers, density, widths, counts
    are aligned and cover occupied bins only; edges cover every bin)."""

    centers: np.ndarray
    density: np.ndarray
    widths: np.ndarray
    counts: np.ndarray
    edges: np.ndarray


def log_binned_density(samples: np.ndarray, bins: int = DEFAULT_LOG_BINS) -> BinnedDensity:
    """Empirical density on geometric bins; empty bins are dropped.

    Binning happens in log space so the result is equivariant under a
    rescaling of the sample units.
    """
    require_positive(samples, "samples")
    lo, hi = samples.min(), samples.max()
    if lo == hi:
        raise ValueError("degenerate support: all samples equal")
    log_edges = np.linspace(np.log(lo), np.log(hi), bins + 1)
    counts, _ = np.histogram(np.log(samples), bins=log_edges)
    edges = np.exp(log_edges)
    widths = np.diff(edges)
    density = counts / (samples.size * widths)
    centers = np.exp(0.5 * (log_edges[:-1] + log_edges[1:]))
    mask = counts > 0
    return BinnedDensity(centers[mask], density[mask], widths[mask], counts[mask], edges)


def linear_binned_density(samples: np.ndarray, bins: int = 32) -> BinnedDensity:
    """Empirical density on linear bins; integer-valued samples get unit bins."""
    lo, hi = samples.min(), samples.max()
    if lo == hi:
        raise ValueError("degenerate support: all samples equal")
    is_integer = np.all(samples == np.floor(samples)) and (hi - lo) <= 4096
    if is_integer:
        edges = np.arange(np.floor(lo) - 0.5, np.floor(hi) + 1.5)
    else:
        edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    widths = np.diff(edges)
    density = counts / (samples.size * widths)
    centers = 0.5 * (edges[:-1] + edges[1:])
    mask = counts > 0
    return BinnedDensity(centers[mask], density[mask], widths[mask], counts[mask], edges)


def _split_data(data):
    """Accept either raw samples or a prebinned (x, density) pair."""
    if isinstance(data, tuple) and len(data) == 2:
        x = as_1d_float(data[0], "x")
        dens = as_1d_float(data[1], "density")
        require(x.size == dens.size, "x and density must have equal length")
        return None, (x, dens)
    return as_1d_float(data, "samples"), None


# ---------------------------------------------------------------------------
# Distribution families
# ---------------------------------------------------------------------------

def hill_exponent(samples: np.ndarray, xmin: float) -> float:
    """Continuous maximum-likelihood density exponent 1 + n / sum(log(x/xmin))."""
    tail = samples[samples >= xmin]
    if tail.size < 2:
        raise ValueError("no samples at or above xmin")
    total = float(np.sum(np.log(tail / xmin)))
    if total <= 0:
        raise ValueError("degenerate support: all samples equal xmin")
    return 1.0 + tail.size / total


def fit_power_law(data, method: str = "logls", xmin: float | None = None,
                  bins: int = DEFAULT_LOG_BINS, weights=None) -> FitResult:
    """Fit ``density = c * x**-alpha``.

    ``data`` is either a 1-D array of positive samples or a prebinned
    ``(x, density)`` pair (``weights`` applies to the prebinned route
    only, e.g. bin counts). The logls route regresses log density against
    log x on geometric bins; when raw samples are available the
    closed-form MLE exponent is reported alongside as ``alpha_mle``.
    """
    require(method in ("logls", "mle"), f"unknown method {method!r}")
    samples, prebinned = _split_data(data)
    if prebinned is not None:
        x, dens = prebinned
        require(x.size >= 3, "need at least 3 density points")
        require_positive(x, "x")
        require_positive(dens, "density")
        slope, intercept, r2, fstat, pvalue = _linefit(np.log(x), np.log(dens), weights)
        return FitResult(POWER_LAW, {"c": float(np.exp(intercept)), "alpha": -slope},
                         r2, fstat, pvalue, x.size)

    require_min_samples(samples, 50)
    require_positive(samples)
    alpha_mle = hill_exponent(samples, float(samples.min()) if xmin is None else float(xmin))
    if method == "mle":
        used_xmin = float(samples.min()) if xmin is None else float(xmin)
        n_tail = int(np.sum(samples >= used_xmin))
        return FitResult(POWER_LAW, {"alpha": alpha_mle, "xmin": used_xmin},
                         float("nan"), float("nan"), float("nan"), n_tail)
    binned = log_binned_density(samples, bins)
    if binned.centers.size < 3:
        raise ValueError("fewer than 3 occupied log bins")
    slope, intercept, r2, fstat, pvalue = _linefit(
        np.log(binned.centers), np.log(binned.density), binned.counts)
    return FitResult(
        POWER_LAW,
        {"c": float(np.exp(intercept)), "alpha": -slope, "alpha_mle": alpha_mle},
        r2, fstat, pvalue, binned.centers.size,
    )


def fit_exponential(data, method: str = "logls", bins: int = 32, weights=None) -> FitResult:
    """Fit ``density = A * exp(-lambda * x)``.

    The logls route regresses log density against x on linear bins (unit
    bins for integer samples); the MLE rate ``1 / (mean - min)`` is
    reported alongside when raw samples are available. ``weights``
    applies to a prebinned pair only.
    """
    require(method in ("logls", "mle"), f"unknown method {method!r}")
    samples, prebinned = _split_data(data)
    if prebinned is not None:
        x, dens = prebinned
        require(x.size >= 3, "need at least 3 density points")
        require_positive(dens, "density")
        slope, intercept, r2, fstat, pvalue = _linefit(x, np.log(dens), weights)
        return FitResult(EXPONENTIAL, {"A": float(np.exp(intercept)), "lambda": -slope},
                         r2, fstat, pvalue, x.size)

    require_min_samples(samples, 30)
    xmin = float(samples.min())
    spread = float(samples.mean()) - xmin
    if spread <= 0:
        raise ValueError("zero-variance input")
    lambda_mle = 1.0 / spread
    if method == "mle":
        return FitResult(EXPONENTIAL, {"lambda": lambda_mle, "xmin": xmin},
                         float("nan"), float("nan"), float("nan"), samples.size)
    binned = linear_binned_density(samples, bins)
    if binned.centers.size < 3:
        raise ValueError("fewer than 3 occupied bins")
    slope, intercept, r2, fstat, pvalue = _linefit(
        binned.centers, np.log(binned.density), binned.counts)
    return FitResult(
        EXPONENTIAL,
        {"A": float(np.exp(intercept)), "lambda": -slope, "lambda_mle": lambda_mle},
        r2, fstat, pvalue, binned.centers.size,
    )


def fit_logarithmic(data, bins: int = DEFAULT_LOG_BINS, weights=None) -> FitResult:
    """Fit ``density = a + b * log(x)`` by least squares in linear density space."""
    samples, prebinned = _split_data(data)
    if prebinned is not None:
        x, dens = prebinned
        require(x.size >= 3, "need at least 3 density points")
        require_positive(x, "x")
        slope, intercept, r2, fstat, pvalue = _linefit(np.log(x), dens, weights)
        return FitResult(LOGARITHMIC, {"a": intercept, "b": slope},
                         r2, fstat, pvalue, x.size)
    require_min_samples(samples, 30)
    require_positive(samples)
    binned = log_binned_density(samples, bins)
    if binned.centers.size < 3:
        raise ValueError("fewer than 3 occupied log bins")
    slope, intercept, r2, fstat, pvalue = _linefit(
        np.log(binned.centers), binned.density, binned.counts)
    return FitResult(LOGARITHMIC, {"a": intercept, "b": slope}, r2, fstat, pvalue,
                     binned.centers.size)


def compare_families(samples, bins: int = DEFAULT_LOG_BINS) -> list[FitResult]:
    """Fit all three gap-distribution families on one shared log-binned density.

    Results are ranked by R^2 in each family's own fitting space; ties
    break toward fewer parameters, then power-law < exponential <
    logarithmic.
    """
    samples = as_1d_float(samples, "samples")
    require_min_samples(samples, 50)
    require_positive(samples)
    binned = log_binned_density(samples, bins)
    if binned.centers.size < 3:
        raise ValueError("fewer than 3 occupied log bins")
    pair = (binned.centers, binned.density)
    power = fit_power_law(pair, weights=binned.counts)
    power.params["alpha_mle"] = hill_exponent(samples, float(samples.min()))
    fits = [power, fit_exponential(pair, weights=binned.counts),
            fit_logarithmic(pair, weights=binned.counts)]
    fits.sort(key=lambda f: (-f.r2, _n_core_params(f), _FAMILY_ORDER[f.family]))
    return fits


def _n_core_params(fit: FitResult) -> int:
    return sum(1 for k in fit.params if not k.endswith("_mle") and k != "xmin")


# ---------------------------------------------------------------------------
# Fourier daily rhythm
# ---------------------------------------------------------------------------

class FourierSeriesModel(BaseEstimator):
    """Least-squares truncated Fourier series with fixed fundamental period.

    The design uses the 2k+1 basis functions {1, sin(2*pi*n*t/T),
    cos(2*pi*n*t/T) : n = 1..k}; fitting solves an ordinary least-squares
    problem exactly (QR via lstsq). Fitted attributes follow sklearn
    conventions (trailing underscore).
    """

    def __init__(self, period: float = 24.0, harmonics: int = 3):
        self.period = period
        self.harmonics = harmonics

    @classmethod
    def from_coefficients(cls, a0: float, coefficients: Sequence[tuple[float, float]],
                          period: float = 24.0) -> "FourierSeriesModel":
        """Build a ready-to-evaluate model from an intercept and per-harmonic
        (sin, cos) coefficient pairs."""
        model = cls(period=period, harmonics=len(coefficients))
        model.intercept_ = float(a0)
        model.sin_coefficients_ = np.asarray([a for a, _ in coefficients], dtype=float)
        model.cos_coefficients_ = np.asarray([b for _, b in coefficients], dtype=float)
        return model

    def _design(self, t: np.ndarray) -> np.ndarray:
        cols = [np.ones_like(t)]
        for n in range(1, self.harmonics + 1):
            w = 2.0 * np.pi * n * t / self.period
            cols.append(np.sin(w))
            cols.append(np.cos(w))
        return np.column_stack(cols)

    def fit(self, t, y):
        require(self.period > 0, "period must be positive")
        require(self.harmonics >= 1, "need at least one harmonic")
        t = as_1d_float(t, "t")
        y = as_1d_float(y, "y")
        require(t.size == y.size, "t and y must have equal length")
        p = 2 * self.harmonics + 1
        require(t.size >= p + 1, f"need at least {p + 1} points for {self.harmonics} harmonics")
        design = self._design(t)
        if np.linalg.matrix_rank(design) < p:
            raise ValueError("rank-deficient design: too few distinct t values per period")
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        self.intercept_ = float(coef[0])
        self.sin_coefficients_ = coef[1::2].copy()
        self.cos_coefficients_ = coef[2::2].copy()
        fitted = design @ coef
        resid = y - fitted
        sse = float(np.sum(resid**2))
        sst = float(np.sum((y - y.mean()) ** 2))
        if sst == 0.0:
            r2 = 1.0 if sse < 1e-30 else 0.0
        else:
            r2 = 1.0 - sse / sst
        d1, d2 = 2 * self.harmonics, t.size - p
        if sse > 0 and d2 > 0:
            fstat = (sst - sse) / d1 / (sse / d2)
        else:
            fstat = float("inf")
        params = {"a0": self.intercept_}
        for n in range(1, self.harmonics + 1):
            params[f"a{n}"] = float(self.sin_coefficients_[n - 1])
            params[f"b{n}"] = float(self.cos_coefficients_[n - 1])
        self.residuals_ = resid
        self.fit_result_ = FitResult(FOURIER, params, r2, fstat,
                                     f_test_pvalue(fstat, d1, d2), t.size)
        return self

    def predict(self, t):
        t = np.asarray(t, dtype=float) % self.period
        out = np.full_like(t, self.intercept_, dtype=float)
        for n in range(1, self.harmonics + 1):
            w = 2.0 * np.pi * n * t / self.period
            out += self.sin_coefficients_[n - 1] * np.sin(w)
            out += self.cos_coefficients_[n - 1] * np.cos(w)
        return out if out.ndim else float(out)

    @property
    def coefficients_(self) -> list[tuple[float, float]]:
        """Per-harmonic (sin, cos) coefficient pairs."""
        return [(float(a), float(b))
                for a, b in zip(self.sin_coefficients_, self.cos_coefficients_)]


def fit_fourier(profile_or_t, y=None, period: float = 24.0,
                harmonics: int = 3) -> tuple[FourierSeriesModel, FitResult]:
    """Fit the daily-rhythm series to an ActivityProfile or explicit (t, y) data."""
    if isinstance(profile_or_t, ActivityProfile):
        t = np.arange(24.0)
        y = profile_or_t.values
    else:
        t = profile_or_t
        require(y is not None, "y is required when t is given explicitly")
    model = FourierSeriesModel(period=period, harmonics=harmonics).fit(t, y)
    return model, model.fit_result_


def eval_fourier(model: FourierSeriesModel, t):
    """Evaluate a fitted series at hour(s) t (taken modulo the period)."""
    return model.predict(t)


# ---------------------------------------------------------------------------
# Gap-distribution diagnostics
# ---------------------------------------------------------------------------

@dataclass
class InflectionResult:
    """Valley of the gap density inside the search band, if one exists."""

    delta_t_prime: float | None
    valley: bool
    grid: np.ndarray = field(repr=False, default=None)
    density: np.ndarray = field(repr=False, default=None)


def detect_inflection(gaps_min, band: tuple[float, float] = (360.0, 540.0),
                      grid_points: int = 512) -> InflectionResult:
    """Locate the density valley separating behavioral from overnight gaps.

    ``gaps_min`` are between-session gaps in minutes. The density is a
    Gaussian KDE with Silverman bandwidth estimated on log gaps and
    transformed back; the valley is the interior minimum on the search
    band. A band with no interior minimum sets the no-valley flag.
    """
    gaps = as_1d_float(gaps_min, "gaps")
    require_positive(gaps, "gaps")
    require_min_samples(gaps, 1000, "gaps")
    lo, hi = band
    require(lo < hi, "band must satisfy lo < hi")
    if not np.any((gaps >= lo) & (gaps <= hi)):
        raise ValueError(f"no gap samples inside the band [{lo}, {hi}]")
    kde = gaussian_kde(np.log(gaps), bw_method="silverman")
    grid = np.linspace(lo, hi, grid_points)
    density = kde(np.log(grid)) / grid
    i = int(np.argmin(density))
    valley = bool(0 < i < grid_points - 1
                  and density[i] < density[0] and density[i] < density[-1])
    return InflectionResult(float(grid[i]) if valley else None, valley, grid, density)


def interval_endpoint_profile(
    gaps: Sequence[SessionGap], band_s: tuple[float, float] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized hour-of-day histograms of gap start and end times.

    ``band_s`` optionally restricts to gaps whose length in seconds lies
    inside the closed interval.
    """
    selected = list(gaps)
    if band_s is not None:
        lo, hi = band_s
        selected = [g for g in selected if lo <= g.delta_t <= hi]
    ts_hist = np.zeros(24)
    te_hist = np.zeros(24)
    for g in selected:
        ts_hist[int(g.t_s) % 24] += 1
        te_hist[int(g.t_e) % 24] += 1
    if ts_hist.sum() > 0:
        ts_hist /= ts_hist.sum()
    if te_hist.sum() > 0:
        te_hist /= te_hist.sum()
    return ts_hist, te_hist


# ---------------------------------------------------------------------------
# Density estimation
# ---------------------------------------------------------------------------

def estimate_density(samples, method: str = "histogram", bins: int = 32,
                     scale: str = "linear", grid_points: int = 512) -> DensityEstimate:
    """Histogram (linear or geometric bins) or Gaussian-KDE density estimate.

    ``scale="log"`` estimates on log-transformed data and converts back,
    which suits heavy-tailed inputs.
    """
    samples = as_1d_float(samples, "samples")
    require_min_samples(samples, 2)
    if method == "histogram":
        binned = linear_binned_density(samples, bins)
        return DensityEstimate(binned.centers, binned.density, method, float(bins),
                               binned.edges, binned.widths)
    if method == "log_histogram":
        require_positive(samples)
        binned = log_binned_density(samples, bins)
        return DensityEstimate(binned.centers, binned.density, method, float(bins),
                               binned.edges, binned.widths)
    if method == "gaussian_kde":
        if np.all(samples == samples[0]):
            raise ValueError("degenerate samples: KDE needs nonzero variance")
        if scale == "log":
            require_positive(samples)
            logs = np.log(samples)
            kde = gaussian_kde(logs, bw_method="silverman")
            bw = float(np.sqrt(kde.covariance[0, 0]))
            log_grid = np.linspace(logs.min() - 6 * bw, logs.max() + 6 * bw, grid_points)
            grid = np.exp(log_grid)
            density = kde(log_grid) / grid
        else:
            kde = gaussian_kde(samples, bw_method="silverman")
            bw = float(np.sqrt(kde.covariance[0, 0]))
            grid = np.linspace(samples.min() - 6 * bw, samples.max() + 6 * bw, grid_points)
            density = kde(grid)
        density = density / np.trapezoid(density, grid)
        return DensityEstimate(grid, density, method, bw)
    raise ValueError(f"unknown density method {method!r}")
