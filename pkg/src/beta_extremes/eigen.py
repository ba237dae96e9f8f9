"""Largest eigenvalue of symmetric tridiagonal matrices and the sqrt(log n) experiment.

``lambda_max`` is found by bisection on the Sturm count: the number of
negative pivots in the LDL^T factorization of ``T - x I`` equals the number
of eigenvalues below ``x``.  Tiny pivots are replaced by ``-pivmin`` so the
recurrence never divides by zero or overflows.
"""

import csv
import math
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np

from .errors import NumericalFault
from .sampling import map_replicas, tridiagonal_replica

QUANTILES = (0.005, 0.25, 0.5, 0.75, 0.995)
_SAFMIN = np.finfo(np.float64).tiny


@nb.njit(cache=True)
def _sturm_count(d, e2, x, pivmin):
    n = d.shape[0]
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


@nb.njit(cache=True)
def _bisect_top(d, e2, lo, hi, tol, pivmin):
    n = d.shape[0]
    # invariant: count(lo) <= n - 1 (lambda_max >= lo), count(hi) == n
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(d, e2, mid, pivmin) == n:
            hi = mid
        else:
            lo = mid
    return hi


def rayleigh_lower(matrix):
    """``max_i H(i, i)``: the Rayleigh quotient of a unit basis vector bounds ``lambda_max`` below."""
    return float(np.max(matrix.diagonal))


def gershgorin_upper(matrix):
    """``max_i H(i, i) + 2 max_i |H(i, i+1)|``, a weakened Gershgorin bound."""
    off = float(np.max(np.abs(matrix.offdiagonal))) if matrix.n > 1 else 0.0
    return rayleigh_lower(matrix) + 2.0 * off


def _row_radius_upper(d, e):
    r = np.zeros_like(d)
    if e.size:
        ae = np.abs(e)
        r[:-1] += ae
        r[1:] += ae
    return float(np.max(d + r))


def sturm_count(matrix, x):
    """Number of eigenvalues strictly below ``x`` (up to pivot guarding)."""
    d, e2, pivmin = _prepare(matrix)
    return int(_sturm_count(d, e2, float(x), pivmin))


def _prepare(matrix):
    d = matrix.diagonal
    e = matrix.offdiagonal
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise NumericalFault("matrix has non-finite entries")
    e2 = e * e
    pivmin = _SAFMIN * max(1.0, float(e2.max()) if e2.size else 1.0)
    return d, e2, pivmin


def largest_eigenvalue(matrix, tol=None):
    """``lambda_max`` to absolute accuracy ``tol``, rounded toward the upper side.

    ``tol`` defaults to ``1e-10 * |gershgorin_upper(matrix)|``.
    """
    d, e2, pivmin = _prepare(matrix)
    if matrix.n == 1:
        return float(d[0])
    if tol is None:
        tol = 1e-10 * abs(gershgorin_upper(matrix))
        if tol == 0.0:
            tol = 1e-300
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    # Both ends are rigorous bounds, and the upper end of the final bracket is
    # returned, so the result never leaves [max diagonal, row Gershgorin bound].
    lo = rayleigh_lower(matrix)
    hi = _row_radius_upper(d, matrix.offdiagonal)
    return float(_bisect_top(d, e2, lo, hi, tol, pivmin))


@dataclass(frozen=True)
class EigenExperimentRecord:
    n: int
    replica: int
    lambda_max: float
    rayleigh_lower: float
    gershgorin_upper: float
    ratio: float

    @property
    def sandwiched(self):
        return self.rayleigh_lower <= self.lambda_max <= self.gershgorin_upper


def eigen_record(matrix, n, replica):
    lam = largest_eigenvalue(matrix)
    return EigenExperimentRecord(
        n, replica, lam, rayleigh_lower(matrix), gershgorin_upper(matrix), lam / math.sqrt(math.log(n))
    )


@dataclass(frozen=True)
class EigenSummary:
    n: int
    replicas: int
    quantiles: dict
    iqr: float
    sandwich_rate: float
    lower_proxy_median: float
    fraction_in_envelope: float | None = None


@dataclass(frozen=True)
class EigenExperiment:
    records: list
    summaries: list
    envelope: tuple

    def as_dict(self):
        return {
            "envelope": list(self.envelope),
            "summaries": [asdict(s) for s in self.summaries],
        }


def lambda_max_scaling_experiment(config, n_ladder, replicas, master_seed, threads=None):
    """Per-replica ``lambda_max / sqrt(log n)`` along a ladder, with envelope summary.

    The envelope ``[c, c']`` is the 0.5%-99.5% empirical range of the ratio
    at the largest ``n``; every rung reports the fraction of its replicas
    inside it.
    """
    records = []
    for n in n_ladder:
        beta = config.beta_for(n)

        def one(r, n=n, beta=beta):
            return eigen_record(tridiagonal_replica(n, beta, master_seed, r), n, r)

        records.extend(map_replicas(one, range(replicas), threads))
    by_n = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(rec)
    top = by_n[max(by_n)]
    top_ratio = np.array([r.ratio for r in top])
    envelope = (float(np.quantile(top_ratio, QUANTILES[0])), float(np.quantile(top_ratio, QUANTILES[-1])))
    summaries = []
    for n in sorted(by_n):
        recs = by_n[n]
        ratio = np.array([r.ratio for r in recs])
        q = {str(p): float(np.quantile(ratio, p)) for p in QUANTILES}
        lower = np.array([r.rayleigh_lower for r in recs]) / math.sqrt(math.log(n))
        summaries.append(
            EigenSummary(
                n=n,
                replicas=len(recs),
                quantiles=q,
                iqr=q["0.75"] - q["0.25"],
                sandwich_rate=float(np.mean([r.sandwiched for r in recs])),
                lower_proxy_median=float(np.median(lower)),
                fraction_in_envelope=float(np.mean((ratio >= envelope[0]) & (ratio <= envelope[1]))),
            )
        )
    return EigenExperiment(records, summaries, envelope)


def write_eigen_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n", "replica", "lambda_max", "lower", "upper", "ratio"))
        for r in records:
            w.writerow((r.n, r.replica, repr(r.lambda_max), repr(r.rayleigh_lower), repr(r.gershgorin_upper), repr(r.ratio)))
