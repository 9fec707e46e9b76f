import math
from itertools import product

import numpy as np
import pytest

from skfluct.gibbs import ModelParams, gibbs_report, sample_disorder
from skfluct.mcmc import (
    McmcConfig,
    McmcEstimate,
    conditional_plus_probability,
    flip_probability,
    glauber_estimate,
)


def test_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(sweeps=10, burn_in=10)
    with pytest.raises(ValueError):
        McmcConfig(sweeps=10, thinning=0)
    with pytest.raises(ValueError):
        McmcConfig(sweeps=10, chains=0)


def test_flip_probability_identity():
    for lam in (-2.0, -0.3, 0.0, 0.7, 3.1):
        for s in (-1, 1):
            stay = conditional_plus_probability(np.array(lam)) if s == 1 else 1 - conditional_plus_probability(np.array(lam))
            assert flip_probability(lam, s) == pytest.approx(1.0 - float(stay), abs=1e-15)
            assert flip_probability(lam, s) == pytest.approx(
                1.0 / (1.0 + math.exp(2.0 * lam * s)), abs=1e-15
            )


def test_detailed_balance_of_site_kernel():
    # pi(s) P_i(s -> s') == pi(s') P_i(s' -> s) for every state and site
    n = 3
    params = ModelParams(n=n, t=0.5, h=0.3)
    d = sample_disorder(params, seed=17)
    g = d.couplings

    def weight(spins):
        e = sum(
            g[a, b] * spins[a] * spins[b] for a in range(n) for b in range(a + 1, n)
        )
        return math.exp(e + params.h * sum(spins))

    for spins in product((-1, 1), repeat=n):
        for site in range(n):
            flipped = list(spins)
            flipped[site] = -flipped[site]
            lam = sum(g[site, b] * spins[b] for b in range(n)) + params.h
            p_fwd = flip_probability(lam, spins[site])
            p_bwd = flip_probability(lam, flipped[site])
            lhs = weight(spins) * p_fwd
            rhs = weight(tuple(flipped)) * p_bwd
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_independent_spins():
    params = ModelParams(n=8, t=0.0, h=0.6)
    d = sample_disorder(params, seed=0)
    config = McmcConfig(sweeps=4000, burn_in=500, chains=4, seed=11)
    targets = [(i,) for i in range(1, 9)]
    estimates = glauber_estimate(params, d, targets, config)
    for i in range(1, 9):
        est = estimates[(i,)]
        assert abs(est.mean - math.tanh(0.6)) < 3 * est.std_error
        assert 0 < est.n_effective <= 4 * 3500


def test_matches_exact_enumeration():
    params = ModelParams(n=12, t=0.2, h=0.4)
    d = sample_disorder(params, seed=5)
    exact = gibbs_report(params, d, requests=[(1, 2)])
    config = McmcConfig(sweeps=100_000, burn_in=2000, chains=4, seed=3)
    estimates = glauber_estimate(params, d, [(1,), (1, 2)], config)
    m1 = estimates[(1,)]
    m12 = estimates[(1, 2)]
    assert abs(m1.mean - exact.magnetization(1)) < 3 * m1.std_error
    assert abs(m12.mean - exact.pair_covariance(1, 2)) < 3 * m12.std_error
    assert m12.std_error < 0.02


def test_determinism():
    params = ModelParams(n=6, t=0.25, h=0.3)
    d = sample_disorder(params, seed=9)
    config = McmcConfig(sweeps=500, burn_in=50, thinning=2, chains=3, seed=21)
    a = glauber_estimate(params, d, [(1,), (2, 4)], config)
    b = glauber_estimate(params, d, [(1,), (2, 4)], config)
    assert a == b
    c = glauber_estimate(params, d, [(1,), (2, 4)], McmcConfig(sweeps=500, burn_in=50, thinning=2, chains=3, seed=22))
    assert a != c


def test_pair_key_is_sorted():
    params = ModelParams(n=5, t=0.1, h=0.2)
    d = sample_disorder(params, seed=2)
    config = McmcConfig(sweeps=300, burn_in=20, chains=2, seed=1)
    est = glauber_estimate(params, d, [(4, 2)], config)
    assert (2, 4) in est


def test_n_effective_cap():
    params = ModelParams(n=4, t=0.3, h=0.0)
    d = sample_disorder(params, seed=1)
    config = McmcConfig(sweeps=2000, burn_in=100, thinning=4, chains=2, seed=8)
    est = glauber_estimate(params, d, [(1,)], config)[(1,)]
    assert est.n_effective <= 2 * config.kept_per_chain


def test_std_error_calibration():
    # the reported batch-means error tracks the true run-to-run scatter
    params = ModelParams(n=6, t=0.2, h=0.4)
    d = sample_disorder(params, seed=30)
    means, ses = [], []
    for rep in range(200):
        config = McmcConfig(sweeps=1500, burn_in=200, chains=1, seed=100_000 + rep)
        est = glauber_estimate(params, d, [(3,)], config)[(3,)]
        means.append(est.mean)
        ses.append(est.std_error)
    scatter = float(np.std(means, ddof=1))
    reported = float(np.median(ses))
    assert reported / scatter < 1.5
    assert scatter / reported < 1.5
