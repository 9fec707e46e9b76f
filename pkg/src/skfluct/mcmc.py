"""Glauber heat-bath estimation of magnetizations and pair covariances.

For system sizes past the exact-enumeration cap, single-site heat-bath
updates resample spin i from its conditional distribution

    P(s_i = +1 | rest) = sigmoid(2 lambda_i),
    lambda_i = h + sum_j g_ij s_j,

which satisfies detailed balance site by site (the flip probability from
state s is sigmoid(-2 lambda_i s_i)). Small t is deep in the fast-mixing
region, so sequential-sweep single-site dynamics suffice.

Chains run on independent streams spawned from the master seed
(SeedSequence spawning, reproducible regardless of execution order) and
start from independent uniform random configurations. Standard errors use
batch means with 32 batches per chain; pair covariances
mean(s_i s_j) - mean(s_i) mean(s_j) carry delta-method errors from the
joint batch-mean covariance of (s_i s_j, s_i, s_j).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gibbs import Disorder, ModelParams

BATCHES_PER_CHAIN = 32


@dataclass(frozen=True)
class McmcConfig:
    """Chain layout: sweeps > burn_in >= 0, thinning >= 1, chains >= 1."""

    sweeps: int
    burn_in: int = 0
    thinning: int = 1
    chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0 or self.sweeps <= self.burn_in:
            raise ValueError(
                f"need sweeps > burn_in >= 0, got sweeps={self.sweeps}, burn_in={self.burn_in}"
            )
        if self.thinning < 1:
            raise ValueError(f"thinning must be >= 1, got {self.thinning}")
        if self.chains < 1:
            raise ValueError(f"chains must be >= 1, got {self.chains}")

    @property
    def kept_per_chain(self) -> int:
        return (self.sweeps - self.burn_in + self.thinning - 1) // self.thinning


@dataclass(frozen=True)
class McmcEstimate:
    mean: float
    std_error: float
    n_effective: float


def conditional_plus_probability(local_field: np.ndarray) -> np.ndarray:
    """P(s_i = +1 | rest) = 1 / (1 + exp(-2 lambda))."""
    return 1.0 / (1.0 + np.exp(-2.0 * local_field))


def flip_probability(local_field: float, spin: int) -> float:
    """Heat-bath flip probability sigmoid(-2 lambda s) from current spin s."""
    return float(1.0 / (1.0 + np.exp(2.0 * local_field * spin)))


def _normalize_targets(targets: Iterable[Sequence[int]], n: int):
    singles: set[int] = set()
    pairs: set[tuple[int, int]] = set()
    order: list[tuple[int, ...]] = []
    for raw in targets:
        tup = tuple(int(v) for v in raw)
        if not 1 <= len(tup) <= 2:
            raise ValueError(f"targets must be (i,) or (i, j), got {tup}")
        for v in tup:
            if not 1 <= v <= n:
                raise ValueError(f"target vertex {v} outside 1..{n}")
        if len(tup) == 1:
            singles.add(tup[0])
        else:
            if tup[0] == tup[1]:
                raise ValueError(f"pair target must have distinct vertices, got {tup}")
            pairs.add((min(tup), max(tup)))
            singles.update(tup)
        order.append(tup)
    return order, sorted(singles), sorted(pairs)


def glauber_estimate(
    params: ModelParams,
    disorder: Disorder,
    targets: Iterable[Sequence[int]],
    config: McmcConfig,
) -> dict[tuple[int, ...], McmcEstimate]:
    """Batch-means estimates of <s_i> and <s_i ; s_j> for the requested targets.

    Returns a dict keyed by the target tuples (pair keys sorted ascending).
    Deterministic in (config.seed, config.chains).
    """
    n = params.n
    order, singles, pairs = _normalize_targets(targets, n)
    g = disorder.couplings
    h = params.h

    kept = config.kept_per_chain
    n_batches = min(BATCHES_PER_CHAIN, kept)
    batch_len = kept // n_batches
    usable = n_batches * batch_len

    # primitive +-1 series whose batch means we track
    primitives: list[tuple[int, ...]] = [(v,) for v in singles] + [p for p in pairs]
    prim_index = {p: k for k, p in enumerate(primitives)}
    batch_sums = np.zeros((len(primitives), config.chains, n_batches))

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(config.chains)]
    states = np.empty((config.chains, n))
    for c, rng in enumerate(streams):
        states[c] = np.where(rng.random(n) < 0.5, -1.0, 1.0)

    block_sweeps = max(1, 8192 // max(n, 1))
    single_pos = np.array([v - 1 for v in singles], dtype=np.int64)
    record = 0
    sweep = 0
    while sweep < config.sweeps:
        block = min(block_sweeps, config.sweeps - sweep)
        uniforms = np.stack([rng.random((block, n)) for rng in streams])
        for s in range(block):
            for site in range(n):
                lam = states @ g[site] + h
                p_plus = conditional_plus_probability(lam)
                states[:, site] = np.where(uniforms[:, s, site] < p_plus, 1.0, -1.0)
            total = sweep + s
            if total >= config.burn_in and (total - config.burn_in) % config.thinning == 0:
                if record < usable:
                    b = record // batch_len
                    if singles:
                        batch_sums[: len(singles), :, b] += states[:, single_pos].T
                    for a, bb in pairs:
                        batch_sums[prim_index[(a, bb)], :, b] += (
                            states[:, a - 1] * states[:, bb - 1]
                        )
                record += 1
        sweep += block

    batch_means = batch_sums / batch_len
    flat = batch_means.reshape(len(primitives), -1)  # chains x batches pooled
    n_bm = flat.shape[1]
    n_total = config.chains * usable
    grand = flat.mean(axis=1)

    def batch_se(values: np.ndarray) -> float:
        if n_bm < 2:
            return 0.0
        return float(values.std(ddof=1) / np.sqrt(n_bm))

    def effective_count(mean: float, se: float) -> float:
        var_iid = max(1.0 - mean * mean, 0.0)
        if se <= 0.0:
            return float(n_total)
        return float(min(n_total, var_iid / se**2))

    out: dict[tuple[int, ...], McmcEstimate] = {}
    for v in singles:
        k = prim_index[(v,)]
        mean = float(grand[k])
        se = batch_se(flat[k])
        out[(v,)] = McmcEstimate(mean=mean, std_error=se, n_effective=effective_count(mean, se))
    for a, b in pairs:
        k_ab = prim_index[(a, b)]
        k_a, k_b = prim_index[(a,)], prim_index[(b,)]
        mean_ab, mean_a, mean_b = grand[k_ab], grand[k_a], grand[k_b]
        cov_est = float(mean_ab - mean_a * mean_b)
        trio = flat[[k_ab, k_a, k_b]]
        if n_bm < 2:
            se = 0.0
        else:
            sigma = np.cov(trio, ddof=1) / n_bm
            grad = np.array([1.0, -mean_b, -mean_a])
            se = float(np.sqrt(max(grad @ sigma @ grad, 0.0)))
        n_eff = effective_count(float(mean_ab), batch_se(flat[k_ab]))
        out[(a, b)] = McmcEstimate(mean=cov_est, std_error=se, n_effective=n_eff)

    return {tup if len(tup) == 1 else (min(tup), max(tup)): out[
        tup if len(tup) == 1 else (min(tup), max(tup))
    ] for tup in order}
