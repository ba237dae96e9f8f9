"""Rescaled extreme point processes, interval counts and their Poisson/Gumbel tests."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, SampleSizeError
from .sampling import map_replicas, triangular_replica
from .theory import IntensityFunction, survival_sum

DEFAULT_WINDOW_MIN = -2.0
MIN_REPLICAS = 100
MIN_KS_SAMPLES = 50


@dataclass(frozen=True)
class PointProcessRealization:
    """Points ``a_n (X_i - b_n)`` at or above ``window_min``, sorted ascending.

    ``max_value`` is the rescaled maximum over all ``n`` entries, kept even
    when it falls below the window.
    """

    points: np.ndarray = field(repr=False)
    window_min: float
    n: int
    regime: str | None = None
    replica_index: int | None = None
    max_value: float = -math.inf


def rescale_points(sample, pair, window_min=DEFAULT_WINDOW_MIN, replica_index=None):
    values = pair.phi_inverse(np.asarray(sample.values, dtype=np.float64))
    kept = np.sort(values[values >= window_min])
    top = float(values.max()) if values.size else -math.inf
    return PointProcessRealization(kept, float(window_min), sample.n, str(pair.regime), replica_index, top)


@dataclass(frozen=True)
class IntervalCountMatrix:
    edges: np.ndarray
    counts: np.ndarray = field(repr=False)
    lambda_targets: np.ndarray

    @property
    def replicas(self):
        return self.counts.shape[0]

    @property
    def bins(self):
        return self.counts.shape[1]


def _check_edges(edges):
    edges = np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2:
        raise DomainError("need at least two edges")
    if not np.all(np.diff(edges) > 0):
        raise DomainError(f"edges must be strictly increasing, got {edges.tolist()}")
    return edges


def interval_target(G, edges):
    """``G(x_{l-1}) - G(x_l)`` per bin, with ``G(inf) = 0``."""
    return np.array([G(float(lo)) - G(float(hi)) for lo, hi in zip(edges[:-1], edges[1:])])


def interval_counts(realizations, edges, G):
    """Counts in ``(x_{l-1}, x_l]`` per realization, plus the limit targets."""
    edges = _check_edges(edges)
    counts = np.zeros((len(realizations), edges.size - 1), dtype=np.int64)
    for r, real in enumerate(realizations):
        if edges[0] < real.window_min:
            raise DomainError(f"edge {edges[0]} lies below the observation window {real.window_min}")
        cum = np.searchsorted(real.points, edges, side="right")
        counts[r] = np.diff(cum)
    return IntervalCountMatrix(edges, counts, interval_target(G, edges))


def exact_interval_expectations(n, beta, pair, edges):
    """Exact finite-n mean counts ``S_n(phi(x_{l-1})) - S_n(phi(x_l))``."""
    edges = _check_edges(edges)
    s = np.array([0.0 if math.isinf(x) else survival_sum(n, beta, pair.phi(float(x))).exact for x in edges])
    return s[:-1] - s[1:]


@dataclass(frozen=True)
class BinReport:
    lo: float
    hi: float
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    dispersion: float
    dispersion_se: float
    dispersion_z: float
    target: float
    target_z: float
    expected: float | None = None
    expected_z: float | None = None


@dataclass(frozen=True)
class PoissonReport:
    replicas: int
    bins: list
    correlation: np.ndarray
    non_poisson: bool

    def max_abs_correlation(self):
        k = self.correlation.shape[0]
        off = [abs(self.correlation[i, j]) for i in range(k) for j in range(k) if i != j]
        return max(off) if off else 0.0

    def as_dict(self):
        return {
            "replicas": self.replicas,
            "bins": [asdict(b) for b in self.bins],
            "correlation": self.correlation.tolist(),
            "non_poisson": self.non_poisson,
        }


def _zscore(diff, se):
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def poisson_dispersion_test(matrix, expected=None, z_limit=3.0):
    """Per-bin moments and dispersion, with cross-bin count correlations.

    Under a Poisson law the dispersion index ``var / mean`` is 1 with standard
    error ``sqrt(2 / (R - 1))`` for ``R`` replicas.  ``expected`` optionally
    supplies exact finite-n means to score against besides the limit targets.
    A bin is flagged non-Poisson when its dispersion z-score exceeds
    ``z_limit`` or its counts are constant.
    """
    counts = np.asarray(matrix.counts, dtype=np.float64)
    R, k = counts.shape
    if R < MIN_REPLICAS:
        raise SampleSizeError(f"need at least {MIN_REPLICAS} replicas, got {R}")
    mean = counts.mean(axis=0)
    var = counts.var(axis=0, ddof=1)
    # fourth central moment for the standard error of the variance
    m4 = ((counts - mean) ** 4).mean(axis=0)
    d_se = math.sqrt(2.0 / (R - 1))
    reports = []
    flagged = False
    for j in range(k):
        disp = var[j] / mean[j] if mean[j] > 0 else math.nan
        dz = (disp - 1.0) / d_se if mean[j] > 0 else math.nan
        if var[j] == 0 or not abs(dz) <= z_limit:
            flagged = True
        se = math.sqrt(var[j] / R)
        exp_j = None if expected is None else float(expected[j])
        reports.append(
            BinReport(
                lo=float(matrix.edges[j]),
                hi=float(matrix.edges[j + 1]),
                mean=float(mean[j]),
                mean_se=se,
                variance=float(var[j]),
                variance_se=float(math.sqrt(max(m4[j] - var[j] ** 2 * (R - 3) / (R - 1), 0.0) / R)),
                dispersion=float(disp),
                dispersion_se=d_se,
                dispersion_z=float(dz),
                target=float(matrix.lambda_targets[j]),
                target_z=_zscore(mean[j] - matrix.lambda_targets[j], se),
                expected=exp_j,
                expected_z=None if exp_j is None else _zscore(mean[j] - exp_j, se),
            )
        )
    corr = np.eye(k)
    sd = counts.std(axis=0)
    for i in range(k):
        for j in range(i + 1, k):
            if sd[i] > 0 and sd[j] > 0:
                c = float(np.mean((counts[:, i] - mean[i]) * (counts[:, j] - mean[j])) / (sd[i] * sd[j]))
            else:
                c = math.nan
            corr[i, j] = corr[j, i] = c
    return PoissonReport(R, reports, corr, flagged)


def gumbel_max_cdf(G, x):
    """Limit law ``exp(-G(x))`` of the rescaled maximum."""
    if isinstance(G, IntensityFunction) or callable(G):
        return np.exp(-G(x)) if np.ndim(x) else math.exp(-G(x))
    raise TypeError("G must be an intensity function")


def kolmogorov_sf(lam):
    """Asymptotic ``P(sqrt(m) D > lam)`` under the null."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # theta-function form; converges fast for small lam
        t = math.pi**2 / (8.0 * lam * lam)
        s = sum(math.exp(-((2 * j - 1) ** 2) * t) for j in range(1, 8))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    s = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * lam * lam)
        s += term if j % 2 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * s))


def ks_statistic(samples, cdf):
    """Two-sided Kolmogorov-Smirnov distance and its asymptotic p-value.

    The p-value uses ``lam = (sqrt(m) + 0.12 + 0.11 / sqrt(m)) D``.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    m = x.size
    if m < MIN_KS_SAMPLES:
        raise SampleSizeError(f"KS needs at least {MIN_KS_SAMPLES} samples, got {m}")
    F = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, m + 1)
    d = max(float(np.max(i / m - F)), float(np.max(F - (i - 1) / m)))
    rm = math.sqrt(m)
    return d, kolmogorov_sf((rm + 0.12 + 0.11 / rm) * d)


def simulate_realizations(config, n, replicas, master_seed, window_min=DEFAULT_WINDOW_MIN, threads=None):
    """Sample and rescale ``replicas`` triangular arrays at size ``n``."""
    beta = config.beta_for(n)
    pair = config.scaling(n)

    def one(r):
        return rescale_points(triangular_replica(n, beta, master_seed, r), pair, window_min, r)

    return map_replicas(one, range(replicas), threads)


def write_counts_csv(matrix, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("replica", "bin_index", "count"))
        for r in range(matrix.replicas):
            for j in range(matrix.bins):
                w.writerow((r, j, int(matrix.counts[r, j])))


def write_maxima_csv(realizations, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("replica", "max_value"))
        for r, real in enumerate(realizations):
            idx = r if real.replica_index is None else real.replica_index
            w.writerow((idx, repr(real.max_value)))


def _jsonable(obj):
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
