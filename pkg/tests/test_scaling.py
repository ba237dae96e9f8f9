import math

import mpmath as mp
import numpy as np
import pytest
from scipy.optimize import brentq

from beta_extremes.errors import AmbiguousRegimeError, ConfigError, DomainError
from beta_extremes.scaling import (
    THETA_HIGH,
    THETA_LOW,
    Regime,
    RegimeConfig,
    ScalingPair,
    classify_regime,
    iterated_sample_size,
    phi,
    phi_inverse,
    regime_C_constant,
    scaling_gaussian,
    scaling_iid_chi,
    scaling_regime_A,
    scaling_regime_B,
    scaling_regime_C,
)

mp.mp.dps = 40
LADDER = (10**4, 10**5, 10**6, 10**7)


def mp_pair_A(n, beta):
    L = mp.log(mp.mpf(n) ** 2 * mp.mpf(beta))
    a = mp.sqrt(2 * L)
    return float(a), float(a - mp.log(L) / a)


def mp_pair_B(n, beta):
    n = mp.mpf(n)
    ll = mp.log(mp.log(n))
    a = mp.sqrt(2 * mp.log(n))
    return float(a), float(a - (n * mp.mpf(beta) * ll + ll + mp.log(ll)) / a)


def mp_pair_C(n, g):
    g = mp.mpf(g)
    m = mp.mpf(n) / (g * mp.log(mp.log(n)))
    a = mp.sqrt(2 * mp.log(m))
    c = mp.log(mp.power(2, -g / 2) * mp.gamma(g))
    return float(a), float(a + ((g / 2 - 1) * mp.log(mp.log(m)) - c) / a)


def test_classify_examples():
    n = 10**6
    a = classify_regime(n, n**-1.5)
    assert a.regime is Regime.A
    assert a.n2beta == pytest.approx(1e3, rel=1e-12)
    assert a.nbeta_loglog == pytest.approx(1e-3 * math.log(math.log(1e6)), rel=1e-12)
    c = classify_regime(n, 2 * 0.5 / n)
    assert c.regime is Regime.C and c.gamma == pytest.approx(0.5, rel=1e-12)
    ll = math.log(math.log(n))
    b = classify_regime(n, 1 / (n * math.sqrt(ll)))
    assert b.regime is Regime.B
    assert b.nbeta_loglog == pytest.approx(math.sqrt(ll), rel=1e-12)
    assert b.nbeta == pytest.approx(1 / math.sqrt(ll), rel=1e-12)


def test_classify_ambiguity_band():
    n = 10**6
    beta = 0.3 / (n * math.log(math.log(n)))
    with pytest.raises(AmbiguousRegimeError) as info:
        classify_regime(n, beta)
    assert info.value.diagnostics["nbeta_loglog"] == pytest.approx(0.3)


@pytest.mark.parametrize("n, beta", [(15, 1e-3), (10**6, 0.0), (10**6, 1e-13), (10**6, 2e-6)])
def test_classify_domain(n, beta):
    with pytest.raises(DomainError):
        classify_regime(n, beta)


def test_classify_stable_under_perturbation():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(10 ** rng.uniform(2, 7))
        beta = 10 ** rng.uniform(-2 * math.log10(n) + 0.5, -math.log10(n) + 0.25)
        try:
            tag = classify_regime(n, beta).regime
        except (AmbiguousRegimeError, DomainError):
            continue
        for f in (1 - 1e-9, 1 + 1e-9):
            try:
                assert classify_regime(n, beta * f).regime is tag
            except (AmbiguousRegimeError, DomainError):
                # only possible within 1e-9 of a cutoff
                cut = [THETA_LOW, THETA_HIGH]
                x = n * beta * math.log(math.log(n))
                assert min(abs(x - c) / c for c in cut) < 1e-8 or abs(n * beta - 1) < 1e-8


def test_regime_A_examples():
    # log(n^2 beta) = e: a = sqrt(2e), b = a - 1/a
    n = 1000
    beta = math.exp(math.e) / n**2
    p = scaling_regime_A(n, beta)
    assert p.a_n == pytest.approx(math.sqrt(2 * math.e), rel=1e-14)
    assert p.a_n == pytest.approx(2.3316, abs=1e-4)
    assert p.b_n == pytest.approx(1.9027, abs=1e-4)
    edge = scaling_regime_A(n, math.e * (1 + 1e-12) / n**2)
    assert edge.a_n == pytest.approx(math.sqrt(2), rel=1e-11)
    assert edge.b_n == pytest.approx(edge.a_n, abs=1e-11)
    a, b = mp_pair_A(10**5, 10**-7.5)
    p = scaling_regime_A(10**5, 10**-7.5)
    assert p.a_n == pytest.approx(a, rel=1e-14) and p.b_n == pytest.approx(b, rel=1e-14)
    with pytest.raises(DomainError):
        scaling_regime_A(n, math.e / n**2 * 0.999)


def test_regime_B_examples():
    n = 3814279
    ll = math.log(math.log(n))
    assert ll == pytest.approx(math.e, abs=1e-6)
    assert math.log(ll) == pytest.approx(1.0, abs=1e-6)
    a = math.sqrt(2 * math.log(n))
    assert scaling_regime_B(n, 0.0).b_n == pytest.approx(a - (ll + math.log(ll)) / a, rel=1e-15)
    n = 10**6
    beta = 1 / (n * math.sqrt(math.log(math.log(n))))
    ref = mp_pair_B(n, beta)
    p = scaling_regime_B(n, beta)
    assert p.a_n == pytest.approx(ref[0], rel=1e-14) and p.b_n == pytest.approx(ref[1], rel=1e-14)
    with pytest.raises(DomainError):
        scaling_regime_B(15, 1e-3)


def test_regime_C_examples():
    ref = mp_pair_C(10**6, 0.5)
    p = scaling_regime_C(10**6, 0.5)
    assert p.a_n == pytest.approx(ref[0], rel=1e-14) and p.b_n == pytest.approx(ref[1], rel=1e-14)
    assert regime_C_constant(0.5) == pytest.approx(-0.25 * math.log(2) + 0.5 * math.log(math.pi), rel=1e-14)
    with pytest.raises(DomainError):
        scaling_regime_C(2, 0.5)
    with pytest.raises(DomainError):
        scaling_regime_C(10**6, 1.0)


def test_regime_C_constant_root():
    root = brentq(regime_C_constant, 0.3, 0.99, xtol=1e-14)
    assert 2 ** (-root / 2) * math.gamma(root) == pytest.approx(1.0, rel=1e-12)
    assert regime_C_constant(root - 0.01) > 0 > regime_C_constant(root + 0.01)


def test_regime_C_against_iid_chi_pair():
    # a_n coincides with the i.i.d. chi(2 gamma) slope at m = n/(gamma log log n).
    # The centerings differ by (gamma/2) (log 2 - log log m) / a_n.
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = int(10 ** rng.uniform(4, 9))
        g = rng.uniform(0.05, 0.95)
        m = iterated_sample_size(n, g)
        c = scaling_regime_C(n, g)
        iid = scaling_iid_chi(m, 2 * g)
        assert c.a_n == pytest.approx(iid.a_n, rel=1e-15)
        gap = 0.5 * g * (math.log(2) - math.log(math.log(m))) / c.a_n
        assert c.b_n - iid.b_n == pytest.approx(gap, rel=1e-10, abs=1e-14)


def test_gaussian_examples():
    p = scaling_gaussian(10**6)
    assert p.a_n == pytest.approx(2 * math.sqrt(math.log(1e6)), rel=1e-15)
    assert p.a_n == pytest.approx(7.434, abs=1e-3)
    for n in (16, 100, 10**4, 10**8):
        q = scaling_gaussian(n)
        assert q.b_n < q.a_n
    scaling_gaussian(round(math.e**math.e) + 1)
    with pytest.raises(DomainError):
        scaling_gaussian(15)


def test_phi_round_trip():
    pair = ScalingPair(2.0, 3.0, Regime.C)
    assert phi(pair, 4.0) == 5.0
    assert phi(pair, 0.0) == 3.0
    x = np.random.default_rng(1).uniform(-10, 10, 1000)
    p = scaling_regime_C(10**6, 0.5)
    np.testing.assert_allclose(phi_inverse(p, phi(p, x)), x, atol=1e-12)
    assert np.all(np.diff(phi(p, np.sort(x))) > 0)
    with pytest.raises(DomainError):
        ScalingPair(0.0, 1.0, Regime.A)


@pytest.mark.parametrize(
    "cfg",
    [
        RegimeConfig(Regime.A, 10**7, beta_exponent=1.5),
        RegimeConfig(Regime.B, 10**7, loglog_power=0.5),
        RegimeConfig(Regime.C, 10**7, gamma=0.25),
        RegimeConfig(Regime.C, 10**7, gamma=0.5),
        RegimeConfig(Regime.C, 10**7, gamma=0.75),
    ],
    ids=lambda c: f"{c.regime}-{c.gamma or c.beta_exponent or c.loglog_power}",
)
def test_ladder_invariants(cfg):
    pairs = [cfg.scaling(n) for n in LADDER]
    a = [p.a_n for p in pairs]
    b = [p.b_n for p in pairs]
    assert all(y > x for x, y in zip(a, a[1:]))
    assert all(y > x for x, y in zip(b[1:], b[2:]))
    r = [bb / aa for aa, bb in zip(a, b)]
    assert abs(r[-1] - 1) < 0.2
    assert all(abs(y - 1) < abs(x - 1) for x, y in zip(r, r[1:]))
    # A single (n, beta) only shows n beta; gamma = 0.25 gives n beta = 0.5,
    # below the C cutoff, so only the larger gammas classify back as C.
    if cfg.regime is not Regime.C or cfg.gamma >= 0.5:
        for n in LADDER:
            assert classify_regime(n, cfg.beta_for(n)).regime is cfg.regime


def test_config_validation():
    with pytest.raises(ConfigError, match="1 < beta_exponent < 2"):
        RegimeConfig(Regime.A, 10**6, beta_exponent=2.5)
    with pytest.raises(ConfigError, match="log log n -> 0"):
        RegimeConfig(Regime.A, 10**4, beta_exponent=1.05)
    with pytest.raises(ConfigError, match="regime B cannot use"):
        RegimeConfig(Regime.B, 10**6, beta_exponent=1.01)
    with pytest.raises(ConfigError, match="0 < loglog_power < 1"):
        RegimeConfig(Regime.B, 10**6, loglog_power=1.5)
    with pytest.raises(ConfigError, match="0 < gamma < 1"):
        RegimeConfig(Regime.C, 10**6, gamma=1.0)
    with pytest.raises(ConfigError, match=">= 16"):
        RegimeConfig(Regime.C, 10, gamma=0.5)


def test_config_header():
    cfg = RegimeConfig(Regime.C, 10**6, gamma=0.5)
    h = cfg.header()
    assert set(h) == {"regime", "n", "beta", "gamma", "a_n", "b_n"}
    assert h["beta"] == pytest.approx(1e-6) and h["regime"] == "C"
