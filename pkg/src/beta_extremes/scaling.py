"""Temperature regimes and the normalizing sequences ``(a_n, b_n)``.

All logarithms are natural.  Iterated logs need ``n > e**e``, hence the
global floor ``MIN_N = 16``.
"""

import enum
import math
from dataclasses import dataclass

from .errors import AmbiguousRegimeError, ConfigError, DomainError
from .special_functions import log_gamma

MIN_N = 16

# Cutoffs on nbeta*loglog(n) (A below THETA_LOW, B above THETA_HIGH) and on
# nbeta (C at or above THETA_C).  The regimes are asymptotic separations, so
# any finite-n classification needs declared cutoffs.
THETA_LOW = 0.1
THETA_HIGH = 1.0
THETA_C = 1.0


class Regime(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    GAUSSIAN = "Gaussian"

    def __str__(self):
        return self.value


def _loglog(n):
    return math.log(math.log(n))


def _check_n(n):
    if n < MIN_N:
        raise DomainError(f"n must be >= {MIN_N} so that log log log n is defined, got {n}")


@dataclass(frozen=True)
class ScalingPair:
    """Affine rescaling ``phi(x) = x / a_n + b_n``."""

    a_n: float
    b_n: float
    regime: Regime

    def __post_init__(self):
        if not self.a_n > 0:
            raise DomainError(f"a_n must be positive, got {self.a_n}")

    def phi(self, x):
        return x / self.a_n + self.b_n

    def phi_inverse(self, v):
        return self.a_n * (v - self.b_n)

    def as_dict(self):
        return {"regime": str(self.regime), "a_n": self.a_n, "b_n": self.b_n}


def phi(pair, x):
    return pair.phi(x)


def phi_inverse(pair, v):
    return pair.phi_inverse(v)


@dataclass(frozen=True)
class RegimeClassification:
    regime: Regime
    n2beta: float
    nbeta_loglog: float
    nbeta: float
    gamma: float | None = None

    @property
    def diagnostics(self):
        return {"n2beta": self.n2beta, "nbeta_loglog": self.nbeta_loglog, "nbeta": self.nbeta}


def classify_regime(n, beta):
    """Classify ``(n, beta)`` into regime A, B or C from its diagnostics.

    Raises
    ------
    DomainError
        ``n < 16``, ``beta <= 0``, ``n**2 beta <= e`` (below the covered
        range) or ``n beta >= 2`` (not a high-temperature configuration).
    AmbiguousRegimeError
        ``THETA_LOW <= n beta log log n <= THETA_HIGH`` with ``n beta < THETA_C``.
    """
    _check_n(n)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    nbeta = n * beta
    n2beta = n * nbeta
    d2 = nbeta * _loglog(n)
    if n2beta <= math.e:
        raise DomainError(f"n^2 beta = {n2beta:.6g} <= e: below the covered temperature range")
    if nbeta >= 2.0:
        raise DomainError(f"n beta = {nbeta:.6g} >= 2: not a high-temperature configuration")
    if nbeta >= THETA_C:
        return RegimeClassification(Regime.C, n2beta, d2, nbeta, gamma=nbeta / 2.0)
    if d2 < THETA_LOW:
        return RegimeClassification(Regime.A, n2beta, d2, nbeta)
    if d2 > THETA_HIGH:
        return RegimeClassification(Regime.B, n2beta, d2, nbeta)
    diag = {"n2beta": n2beta, "nbeta_loglog": d2, "nbeta": nbeta}
    raise AmbiguousRegimeError(
        f"n beta log log n = {d2:.4g} lies in the ambiguity band "
        f"[{THETA_LOW}, {THETA_HIGH}]; choose the regime explicitly",
        diagnostics=diag,
    )


def scaling_regime_A(n, beta):
    """``a_n = sqrt(2 log(n^2 beta))``, ``b_n = a_n - log log(n^2 beta) / a_n``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    log_n2beta = 2.0 * math.log(n) + math.log(beta)
    if not log_n2beta > 1.0:
        raise DomainError(f"regime A scaling needs n^2 beta > e, got log(n^2 beta) = {log_n2beta:.6g}")
    a = math.sqrt(2.0 * log_n2beta)
    return ScalingPair(a, a - math.log(log_n2beta) / a, Regime.A)


def scaling_regime_B(n, beta):
    _check_n(n)
    logn = math.log(n)
    ll = math.log(logn)
    lll = math.log(ll)
    a = math.sqrt(2.0 * logn)
    b = a - (n * beta * ll) / a - ll / a - lll / a
    return ScalingPair(a, b, Regime.B)


def iterated_sample_size(n, gamma):
    """``n / (gamma log log n)``, the effective i.i.d. sample size of regime C."""
    return n / (gamma * _loglog(n))


def scaling_regime_C(n, gamma):
    """Scaling pair for ``n beta = 2 gamma``, ``0 < gamma < 1``."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if n <= math.e:
        raise DomainError(f"n must exceed e, got {n}")
    m = iterated_sample_size(n, gamma)
    if not m > math.e ** math.e:
        raise DomainError(f"regime C scaling needs n/(gamma log log n) > e^e, got {m:.6g}")
    logm = math.log(m)
    a = math.sqrt(2.0 * logm)
    b = a + ((gamma / 2.0 - 1.0) * math.log(logm) - regime_C_constant(gamma)) / a
    return ScalingPair(a, b, Regime.C)


def regime_C_constant(gamma):
    """``log(2**(-gamma/2) Gamma(gamma))``, the constant in the regime-C centering."""
    return -0.5 * gamma * math.log(2.0) + log_gamma(gamma)


def scaling_iid_chi(m, k):
    """Classical max-of-``m``-i.i.d. ``chi(k)`` normalization.

    ``a = sqrt(2 log m)``, ``b = a + ((k/2 - 1) log log m - log Gamma(k/2)) / a``,
    so that ``m P(chi(k) >= x/a + b) -> exp(-x)``.
    """
    if not m > math.e:
        raise DomainError(f"m must exceed e, got {m}")
    logm = math.log(m)
    a = math.sqrt(2.0 * logm)
    b = a + ((k / 2.0 - 1.0) * math.log(logm) - log_gamma(k / 2.0)) / a
    return ScalingPair(a, b, Regime.C)


def scaling_gaussian(n):
    """Normalization used for maxima of the ``N(0, 2)`` diagonal entries."""
    _check_n(n)
    s = math.sqrt(math.log(n))
    a = 2.0 * s
    b = 2.0 * s - (_loglog(n) + math.log(4.0 * math.pi)) / (2.0 * s)
    return ScalingPair(a, b, Regime.GAUSSIAN)


@dataclass(frozen=True)
class RegimeConfig:
    """A temperature regime and the rule ``n -> beta(n)`` that realizes it.

    ``n`` is the largest size the configuration is used at; ladder rungs are
    evaluated through :meth:`beta_for` and :meth:`scaling`.

    * A: ``beta = n**-beta_exponent`` with ``1 < beta_exponent < 2``.
    * B: ``beta = 1 / (n (log log n)**loglog_power)`` with ``0 < loglog_power < 1``.
    * C: ``beta = 2 gamma / n`` with ``0 < gamma < 1``.
    """

    regime: Regime
    n: int
    beta_exponent: float | None = None
    gamma: float | None = None
    loglog_power: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        self.validate()

    def validate(self):
        r = self.regime
        if not isinstance(self.n, int) or self.n < MIN_N:
            raise ConfigError(f"n must be an integer >= {MIN_N}, got {self.n!r}")
        if r is Regime.A:
            p = self.beta_exponent
            if p is None or not 1.0 < p < 2.0:
                raise ConfigError(f"regime A needs 1 < beta_exponent < 2 (n^-2 << beta << n^-1), got {p!r}")
            d2 = self.n ** (1.0 - p) * _loglog(self.n)
            if not d2 < THETA_LOW:
                raise ConfigError(
                    f"regime A needs n^(1-p) log log n -> 0; at n={self.n} it is {d2:.4g} >= {THETA_LOW}"
                )
            if not (2.0 - p) * math.log(self.n) > 1.0:
                raise ConfigError(f"regime A scaling needs n^2 beta > e at n={self.n}")
        elif r is Regime.B:
            if self.beta_exponent is not None:
                raise ConfigError(
                    "regime B cannot use beta = n^-p: for constant p > 1, n^(1-p) log log n -> 0; "
                    "use loglog_power"
                )
            q = self.loglog_power
            if q is None or not 0.0 < q < 1.0:
                raise ConfigError(
                    f"regime B needs 0 < loglog_power < 1 "
                    f"((n log log n)^-1 << beta << n^-1), got {q!r}"
                )
        elif r is Regime.C:
            g = self.gamma
            if g is None or not 0.0 < g < 1.0:
                raise ConfigError(f"regime C needs 0 < gamma < 1, got {g!r}")
            if not iterated_sample_size(self.n, g) > math.e ** math.e:
                raise ConfigError(f"regime C scaling needs n/(gamma log log n) > e^e at n={self.n}")

    def beta_for(self, n):
        r = self.regime
        if r is Regime.A:
            return float(n) ** (-self.beta_exponent)
        if r is Regime.B:
            return 1.0 / (n * _loglog(n) ** self.loglog_power)
        if r is Regime.C:
            return 2.0 * self.gamma / n
        raise ConfigError("the Gaussian tag carries no beta rule")

    @property
    def beta(self):
        return self.beta_for(self.n)

    def scaling(self, n=None):
        n = self.n if n is None else n
        r = self.regime
        if r is Regime.A:
            return scaling_regime_A(n, self.beta_for(n))
        if r is Regime.B:
            return scaling_regime_B(n, self.beta_for(n))
        if r is Regime.C:
            return scaling_regime_C(n, self.gamma)
        return scaling_gaussian(n)

    def header(self, n=None):
        """JSON report header fields."""
        n = self.n if n is None else n
        pair = self.scaling(n)
        beta = None if self.regime is Regime.GAUSSIAN else self.beta_for(n)
        return {
            "regime": str(self.regime),
            "n": n,
            "beta": beta,
            "gamma": self.gamma,
            "a_n": pair.a_n,
            "b_n": pair.b_n,
        }
