"""Exact finite-n evaluation of the survival sums and their asymptotics.

The central object is the exceedance sum

    S_n(z) = sum_{i=1}^n P(chi(i beta) >= z) = sum_i Q(i beta / 2, z**2 / 2),

evaluated term by term with the log-space incomplete gamma kernel and a
fixed-order compensated reduction, together with the termwise two-sided
bracket ``e^-w w^(a-1) / Gamma(a) * (w / (w + 1 - a), 1)`` with ``w = z**2/2``.
"""

import csv
import io
import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import DomainError, RegimeMismatchError
from .scaling import Regime, classify_regime, scaling_regime_A, scaling_regime_B, scaling_regime_C
from .special_functions import _lgamma, _log_q, _log_upper_bound
from .summation import compensated_sum, sum_log_terms

DEFAULT_N_LADDER = (10**4, 10**5, 10**6, 10**7)
DEFAULT_X_GRID = (0.0, 0.5, 1.0, 2.0, 4.0)
CSV_HEADER = ("n", "x", "S_exact", "S_low", "S_high", "G", "ratio")

_FULL_SCAN_MAX = 10**6
_SCAN_POINTS = 20_000


@nb.njit(parallel=True, cache=True)
def _survival_log_terms(n, beta, w):
    log_q = np.empty(n)
    log_up = np.empty(n)
    log_lo = np.empty(n)
    for idx in nb.prange(n):
        a = ((idx + 1) * beta) / 2.0
        log_q[idx] = _log_q(a, w)
        lu = _log_upper_bound(a, w)
        log_up[idx] = lu
        log_lo[idx] = lu + math.log(w / (w + 1.0 - a))
    return log_q, log_up, log_lo


@nb.njit(parallel=True, cache=True)
def _survival_diffs(indices, beta, w_lo, w_hi):
    out = np.empty(indices.shape[0])
    for j in nb.prange(indices.shape[0]):
        a = (indices[j] * beta) / 2.0
        out[j] = math.exp(_log_q(a, w_lo)) - math.exp(_log_q(a, w_hi))
    return out


@nb.njit(parallel=True, cache=True)
def _split_log_terms(n, gamma, z):
    # log of e^{-z^2/2} z^{gamma i/n - 2} / (2^{i gamma/(2n) - 1} Gamma(gamma i/n))
    out = np.empty(n)
    w = 0.5 * z * z
    logz = math.log(z)
    log2 = math.log(2.0)
    for idx in nb.prange(n):
        t = gamma * (idx + 1) / n
        out[idx] = -w + (t - 2.0) * logz - (0.5 * t - 1.0) * log2 - _lgamma(t)
    return out


@dataclass(frozen=True)
class SurvivalSumResult:
    n: int
    beta: float
    z: float
    exact: float
    bracket_low: float
    bracket_high: float
    limit: float | None = None

    @property
    def ratio(self):
        return None if self.limit is None else self.exact / self.limit

    def sandwiched(self):
        return self.bracket_low <= self.exact <= self.bracket_high


def _check_sum_args(n, beta):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not n * beta < 2.0:
        raise DomainError(
            f"n beta = {n * beta:.6g} >= 2: shapes i beta/2 reach 1 and the termwise bracket no longer applies"
        )


def survival_sum(n, beta, z, limit=None):
    """Exact ``S_n(z)`` with its termwise bracket.

    Parameters
    ----------
    n : int
        Number of rows of the triangular array.
    beta : float
        Inverse temperature; ``n * beta < 2`` is required.
    z : float
        Threshold, ``z >= 0``.
    limit : float, optional
        Target value ``G(x)`` carried along for ratio reporting.
    """
    _check_sum_args(n, beta)
    z = float(z)
    if not z >= 0:
        raise DomainError(f"z must be >= 0, got {z}")
    if z == 0.0:
        return SurvivalSumResult(n, beta, z, float(n), 0.0, math.inf, limit)
    w = 0.5 * z * z
    log_q, log_up, log_lo = _survival_log_terms(int(n), float(beta), w)
    exact, _ = sum_log_terms(log_q)
    high, _ = sum_log_terms(log_up)
    low, _ = sum_log_terms(log_lo)
    return SurvivalSumResult(n, beta, z, exact, low, high, limit)


def survival_terms(n, beta, z):
    """The individual survival probabilities ``P(chi(i beta) >= z)``, ``i = 1..n``."""
    _check_sum_args(n, beta)
    w = 0.5 * float(z) ** 2
    log_q, _, _ = _survival_log_terms(int(n), float(beta), w)
    return np.exp(log_q)


def _h(s):
    # 1 - e^s + s e^s = sum_{k>=2} (k-1) s^k / k!
    if abs(s) >= 0.5:
        return 1.0 - math.exp(s) + s * math.exp(s)
    total = 0.0
    p = s
    for k in range(2, 60):
        p *= s / k
        term = (k - 1) * p
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def _expm1_minus_x(c):
    # e^c - 1 - c
    if abs(c) >= 0.01:
        return math.expm1(c) - c
    total = 0.0
    p = c
    for k in range(2, 40):
        p *= c / k
        total += p
        if abs(p) < 1e-17 * abs(total):
            break
    return total


def _log_w(z):
    z = float(z)
    if not z > math.sqrt(2.0):
        raise DomainError(f"z must exceed sqrt(2) so that log(z^2/2) > 0, got {z}")
    return math.log(0.5 * z * z)


def lambda_term(n, beta, z):
    """``Lambda_n(z) = n (u - 1) v - v + 1`` with ``u = w**(beta/2)``, ``v = w**(n beta/2)``.

    With ``c = beta log(w) / 2`` and ``s = n c`` this equals
    ``(1 - e^s + s e^s) + n (e^c - 1 - c) e^s``; both pieces are positive and
    are summed from series when small, so no cancellation occurs.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return _lambda_c(n, 0.5 * beta * _log_w(z))


def _lambda_c(n, c):
    # 1 - (n + 1) e^{nc} + n e^{(n+1)c}, i.e. Lambda with u = e^c
    s = n * c
    return _h(s) + n * _expm1_minus_x(c) * math.exp(s)


def lambda_asymptotic(n, beta, z, regime):
    """Leading-order form of ``Lambda_n(z)`` in regime A or B.

    A: ``(n beta log(w) / 2)**2 / 2``; B: ``w**(n beta / 2) * n beta log(w) / 2``.
    The regime must agree with :func:`classify_regime`.
    """
    regime = Regime(regime)
    if regime not in (Regime.A, Regime.B):
        raise RegimeMismatchError(f"Lambda asymptotics exist for regimes A and B only, got {regime}")
    try:
        found = classify_regime(n, beta).regime
    except ValueError as exc:
        raise RegimeMismatchError(f"(n={n}, beta={beta:.6g}) is not classifiable as {regime}: {exc}") from exc
    if found is not regime:
        raise RegimeMismatchError(f"(n={n}, beta={beta:.6g}) classifies as {found}, not {regime}")
    L = _log_w(z)
    s = 0.5 * n * beta * L
    if regime is Regime.A:
        return 0.5 * s * s
    return math.exp(s) * s


def intermediate_asymptotic(n, beta, z, lam=None):
    """``4 e^-w / z**2 * Lambda / (beta log(w)**2)``, the leading form of ``S_n(z)``.

    ``lam`` defaults to the exact :func:`lambda_term`.
    """
    L = _log_w(z)
    if lam is None:
        lam = lambda_term(n, beta, z)
    w = 0.5 * z * z
    return 4.0 * math.exp(-w) / (z * z) * lam / (beta * L * L)


def weighted_geometric_sum(u, n):
    """``sum_{k=1}^n k u**k`` from its closed form.

    The numerator ``(n u - n - 1) u**(n+1) + u`` equals ``u Lambda`` with
    ``Lambda = 1 - (n+1) u**n + n u**(n+1)``; for ``u`` near 1 it is
    evaluated through ``c = log u`` without cancellation.  Direct summation
    is used when ``|1 - u| < 1e-6``.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if u == 1.0:
        return n * (n + 1) / 2.0
    if abs(1.0 - u) < 1e-6:
        k = np.arange(1, n + 1, dtype=np.float64)
        return math.fsum(k * u**k)
    if abs(1.0 - u) < 0.5:
        c = math.log(u)
        return u * _lambda_c(n, c) / math.expm1(c) ** 2
    return ((n * u - n - 1.0) * u ** (n + 1) + u) / (1.0 - u) ** 2


def split_sum_gamma(n, gamma, z, mu):
    """Split of the regime-C bound sum at ``k = floor(n (1 - mu))``.

    Terms are ``e^{-z^2/2} z^{gamma i/n - 2} / (2^{i gamma/(2n) - 1} Gamma(gamma i/n))``.
    ``S1`` sums ``i < k`` and ``S2`` sums ``k <= i <= n``.  Returns ``(S1, S2)``.
    """
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    _log_w(z)
    log_t = _split_log_terms(int(n), float(gamma), float(z))
    k = int(math.floor(n * (1.0 - mu)))
    split = max(k - 1, 0)
    s1 = sum_log_terms(log_t[:split])[0]
    s2 = sum_log_terms(log_t[split:])[0]
    return s1, s2


def split_sum_terms(n, gamma, z):
    """All terms of the regime-C bound sum, ``i = 1..n``."""
    return np.exp(_split_log_terms(int(n), float(gamma), float(z)))


@dataclass(frozen=True)
class IntensityFunction:
    """Limit exceedance intensity ``G(x)``: ``e^-x / 4`` in regime A, ``e^-x`` in B and C."""

    regime: Regime

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is Regime.GAUSSIAN:
            raise DomainError("no chi-array intensity for the Gaussian tag")

    @property
    def scale(self):
        return 0.25 if self.regime is Regime.A else 1.0

    def __call__(self, x):
        return self.scale * np.exp(-np.asarray(x, dtype=np.float64)) if np.ndim(x) else self.scale * math.exp(-x)


def limit_intensity(regime, x):
    if not x >= 0:
        raise DomainError(f"the limit intensity is defined on x >= 0, got {x}")
    return IntensityFunction(regime)(x)


def _default_pair(n, beta):
    cls = classify_regime(n, beta)
    if cls.regime is Regime.A:
        return scaling_regime_A(n, beta)
    if cls.regime is Regime.B:
        return scaling_regime_B(n, beta)
    return scaling_regime_C(n, cls.gamma)


def uniform_negligibility_max(n, beta, x, y, pair=None):
    """``max_i |P(X_i >= phi(x)) - P(X_i >= phi(y))|`` for ``0 <= y <= x``.

    ``pair`` defaults to the scaling of the regime ``(n, beta)`` classifies as.

    Every index is evaluated up to ``n = 10**6``.  Above that a uniform scan
    of ``_SCAN_POINTS`` indices locates the peak, and the full window of one
    stride on either side of it is then evaluated.
    """
    if not 0.0 <= y <= x:
        raise DomainError(f"need 0 <= y <= x, got x={x}, y={y}")
    _check_sum_args(n, beta)
    if x == y:
        return 0.0
    if pair is None:
        pair = _default_pair(n, beta)
    w_lo = 0.5 * pair.phi(y) ** 2
    w_hi = 0.5 * pair.phi(x) ** 2
    if n <= _FULL_SCAN_MAX:
        idx = np.arange(1, n + 1, dtype=np.float64)
        return float(_survival_diffs(idx, float(beta), w_lo, w_hi).max())
    stride = -(-n // _SCAN_POINTS)
    coarse = np.unique(np.append(np.arange(1, n + 1, stride), n)).astype(np.float64)
    d = _survival_diffs(coarse, float(beta), w_lo, w_hi)
    peak = int(coarse[int(np.argmax(d))])
    lo = max(1, peak - stride)
    hi = min(n, peak + stride)
    fine = np.arange(lo, hi + 1, dtype=np.float64)
    return float(max(d.max(), _survival_diffs(fine, float(beta), w_lo, w_hi).max()))


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    x: float
    S_exact: float
    S_low: float
    S_high: float
    G: float
    ratio: float

    def as_tuple(self):
        return (self.n, self.x, self.S_exact, self.S_low, self.S_high, self.G, self.ratio)


def convergence_table(config, n_ladder=DEFAULT_N_LADDER, x_grid=DEFAULT_X_GRID):
    """Rows ``(n, x, S_n(phi_n(x)), bracket, G(x), S/G)`` over a ladder and grid."""
    G = IntensityFunction(config.regime)
    rows = []
    for n in n_ladder:
        beta = config.beta_for(n)
        pair = config.scaling(n)
        for x in x_grid:
            g = G(float(x))
            res = survival_sum(n, beta, pair.phi(float(x)), limit=g)
            rows.append(ConvergenceRow(int(n), float(x), res.exact, res.bracket_low, res.bracket_high, g, res.ratio))
    return rows


def drift_toward_one(ratios):
    """True when ``|ratio - 1|`` strictly decreases along the sequence."""
    dev = [abs(r - 1.0) for r in ratios]
    return len(dev) >= 2 and all(b < a for a, b in zip(dev, dev[1:]))


def ratios_by_x(rows):
    out = {}
    for row in sorted(rows, key=lambda r: r.n):
        out.setdefault(row.x, []).append(row.ratio)
    return out


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def convergence_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.as_tuple()])
    return buf.getvalue()


def write_convergence_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(convergence_csv(rows))
