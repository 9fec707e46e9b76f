"""Exact Gibbs, cavity and clamp measures of the SK model by full enumeration.

The Hamiltonian (temperature absorbed into the couplings) is

    H(sigma) = sum_{i<j} g_ij sigma_i sigma_j + h sum_i sigma_i,

with g symmetric, zero on the diagonal, and g_ij ~ N(0, t/n) i.i.d. for
i < j. Conditional measures <.>^[A,B] clamp the spins in A to fixed values
tau and remove the spins in B; each remaining free spin i then feels the
effective field h + sum_{j in A} g_ij tau_j, and the couplings among free
spins are untouched.

Enumeration splits the K free spins into two halves and assembles the
2^K energy table as

    E[cL, cR] = E_left[cL] + E_right[cR] + sL(cL) . J_cross . sR(cR),

so the whole table is produced by one small matrix product instead of a
per-configuration scan. Partition sums use two-pass log-sum-exp
(exp(E - E_max) with the tracked maximum).

All public interfaces use 1-based vertex labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FreeSpinCountExceeded, IndexNotFree

DEFAULT_ENUMERATION_CAP = 24


@dataclass(frozen=True)
class ModelParams:
    """System size n, interaction-variance scale t >= 0 and external field h."""

    n: int
    t: float
    h: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"spin count must be >= 1, got {self.n}")
        if self.t < 0:
            raise ValueError(f"interaction scale t must be >= 0, got {self.t}")


@dataclass(frozen=True)
class Disorder:
    """One realization of the coupling matrix, with its reproducibility seed."""

    n: int
    couplings: np.ndarray
    seed: int

    def __post_init__(self):
        g = np.asarray(self.couplings, dtype=np.float64)
        if g.shape != (self.n, self.n):
            raise ValueError(f"couplings must be {self.n}x{self.n}, got {g.shape}")
        if not np.array_equal(g, g.T):
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(g) != 0.0):
            raise ValueError("couplings must have zero diagonal")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "couplings", g)

    def coupling(self, i: int, j: int) -> float:
        """g_ij for 1-based vertices i, j."""
        return float(self.couplings[i - 1, j - 1])


def sample_disorder(params: ModelParams, seed: int) -> Disorder:
    """Draw g_ij ~ N(0, t/n) i.i.d. for i < j, symmetrized, zero diagonal."""
    rng = np.random.default_rng(seed)
    n = params.n
    scale = np.sqrt(params.t / n)
    upper = rng.normal(0.0, scale, size=(n, n)) if params.t > 0 else np.zeros((n, n))
    g = np.triu(upper, k=1)
    g = g + g.T
    return Disorder(n=n, couplings=g, seed=seed)


@dataclass(frozen=True)
class Conditioning:
    """Clamped set A (vertex -> spin in {-1,+1}) and removed (cavity) set B."""

    clamped: tuple[tuple[int, int], ...] = ()
    removed: frozenset[int] = frozenset()

    def __post_init__(self):
        clamped = self.clamped
        if isinstance(clamped, Mapping):
            clamped = tuple(sorted(clamped.items()))
        else:
            clamped = tuple(sorted((int(v), int(s)) for v, s in clamped))
        removed = frozenset(int(v) for v in self.removed)
        seen = set()
        for v, s in clamped:
            if s not in (-1, 1):
                raise ValueError(f"clamped spin value must be +-1, got {s} at {v}")
            if v in seen:
                raise ValueError(f"vertex {v} clamped twice")
            seen.add(v)
        if seen & removed:
            raise ValueError(f"clamped and removed sets overlap: {sorted(seen & removed)}")
        object.__setattr__(self, "clamped", clamped)
        object.__setattr__(self, "removed", removed)

    @property
    def clamped_map(self) -> dict[int, int]:
        return dict(self.clamped)

    def conditioned_vertices(self) -> frozenset[int]:
        return frozenset(v for v, _ in self.clamped) | self.removed

    def is_free(self, vertex: int) -> bool:
        return vertex not in self.conditioned_vertices()

    def validate(self, n: int) -> None:
        fixed = self.conditioned_vertices()
        bad = [v for v in fixed if not 1 <= v <= n]
        if bad:
            raise ValueError(f"conditioned vertices out of range 1..{n}: {bad}")
        if len(fixed) > n - 1:
            raise ValueError("conditioning must leave at least one free spin")

    def clamp(self, vertex: int, value: int) -> "Conditioning":
        """New conditioning with one more clamped spin."""
        if not self.is_free(vertex):
            raise IndexNotFree(f"vertex {vertex} is already conditioned")
        return Conditioning(self.clamped + ((vertex, value),), self.removed)

    def remove(self, vertices: Iterable[int]) -> "Conditioning":
        """New conditioning with extra vertices moved into the cavity set."""
        extra = frozenset(int(v) for v in vertices)
        taken = frozenset(v for v, _ in self.clamped)
        if extra & taken:
            raise ValueError(f"cannot remove clamped vertices {sorted(extra & taken)}")
        return Conditioning(self.clamped, self.removed | extra)


def cavity(vertices: Iterable[int]) -> Conditioning:
    """Conditioning with A empty and B = vertices."""
    return Conditioning(removed=frozenset(int(v) for v in vertices))


@dataclass
class GibbsReport:
    """Exact observables of one conditional system.

    magnetizations holds every free vertex; pair_covariances / three_point
    hold only the requested tuples (keys sorted ascending).
    """

    log_z: float
    magnetizations: dict[int, float]
    pair_covariances: dict[tuple[int, int], float] = field(default_factory=dict)
    three_point: dict[tuple[int, int, int], float] = field(default_factory=dict)

    def magnetization(self, i: int) -> float:
        return self.magnetizations[i]

    def pair_covariance(self, i: int, j: int) -> float:
        if i == j:
            m = self.magnetizations[i]
            return 1.0 - m * m
        return self.pair_covariances[tuple(sorted((i, j)))]

    def three_point_cumulant(self, i: int, j: int, k: int) -> float:
        return self.three_point[tuple(sorted((i, j, k)))]


def _spin_table(k: int) -> np.ndarray:
    """(2^k, k) table of spins +-1; bit b of the row index is the sign of spin b."""
    idx = np.arange(1 << k, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(np.float64) * 2.0 - 1.0


class _EnumeratedSystem:
    """Normalized Gibbs weights of one free subsystem, split into two halves."""

    def __init__(self, coup: np.ndarray, fields: np.ndarray):
        k = len(fields)
        k1 = k // 2
        self.k1 = k1
        self.sl = _spin_table(k1)
        self.sr = _spin_table(k - k1)
        jl, jr = coup[:k1, :k1], coup[k1:, k1:]
        jx = coup[:k1, k1:]
        el = 0.5 * np.einsum("ca,ab,cb->c", self.sl, jl, self.sl) + self.sl @ fields[:k1]
        er = 0.5 * np.einsum("ca,ab,cb->c", self.sr, jr, self.sr) + self.sr @ fields[k1:]
        energy = el[:, None] + er[None, :]
        energy += (self.sl @ jx) @ self.sr.T
        e_max = float(energy.max())
        np.exp(energy - e_max, out=energy)
        total = float(energy.sum())
        self.log_z = e_max + np.log(total)
        energy /= total
        self.weights = energy
        self.wl = self.weights.sum(axis=1)
        self.wr = self.weights.sum(axis=0)

    def magnetizations(self) -> np.ndarray:
        return np.concatenate([self.sl.T @ self.wl, self.sr.T @ self.wr])

    def _half_sign(self, positions: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Per-configuration sign of prod(sigma_p) split over the two halves."""
        u = np.ones(self.sl.shape[0])
        v = np.ones(self.sr.shape[0])
        for p in positions:
            if p < self.k1:
                u = u * self.sl[:, p]
            else:
                v = v * self.sr[:, p - self.k1]
        return u, v

    def raw_moment(self, positions: Sequence[int]) -> float:
        """<prod_p sigma_p> for free-spin positions (repeats allowed)."""
        u, v = self._half_sign(positions)
        return float(u @ (self.weights @ v))

    def raw_pair_matrix(self) -> np.ndarray:
        """Full matrix <sigma_a sigma_b> over free positions (diagonal = 1)."""
        ll = (self.sl * self.wl[:, None]).T @ self.sl
        rr = (self.sr * self.wr[:, None]).T @ self.sr
        lr = self.sl.T @ (self.weights @ self.sr)
        k = self.sl.shape[1] + self.sr.shape[1]
        out = np.empty((k, k))
        k1 = self.k1
        out[:k1, :k1] = ll
        out[k1:, k1:] = rr
        out[:k1, k1:] = lr
        out[k1:, :k1] = lr.T
        np.fill_diagonal(out, 1.0)
        return out


def _free_subsystem(
    params: ModelParams, disorder: Disorder, conditioning: Conditioning
) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Free vertices (sorted, 1-based), their coupling block and effective fields."""
    fixed = conditioning.conditioned_vertices()
    free = [v for v in range(1, params.n + 1) if v not in fixed]
    idx = np.array(free, dtype=np.int64) - 1
    coup = disorder.couplings[np.ix_(idx, idx)]
    fields = np.full(len(free), params.h, dtype=np.float64)
    for v, tau in conditioning.clamped:
        fields += tau * disorder.couplings[idx, v - 1]
    return free, coup, fields


def _check_requests(
    requests: Iterable[tuple[int, ...]], free: Sequence[int]
) -> list[tuple[int, ...]]:
    free_set = set(free)
    checked = []
    for req in requests:
        tup = tuple(int(v) for v in req)
        if not 1 <= len(tup) <= 3:
            raise ValueError(f"observable request must have 1..3 indices, got {tup}")
        for v in tup:
            if v not in free_set:
                raise IndexNotFree(f"requested vertex {v} is not free")
        checked.append(tup)
    return checked


def gibbs_report(
    params: ModelParams,
    disorder: Disorder,
    conditioning: Conditioning | None = None,
    requests: Iterable[tuple[int, ...]] = (),
    *,
    all_pairs: bool = False,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> GibbsReport:
    """Exact log Z, magnetizations and requested connected correlations.

    requests is a list of 1-based index tuples: (i,) marks i for the
    magnetization map (always filled for every free vertex anyway), (i, j)
    asks for the connected covariance m_ij = <s_i s_j> - <s_i><s_j>, and
    (i, j, k) for the third joint cumulant

        <ijk> - <i><jk> - <j><ik> - <k><ij> + 2<i><j><k>.

    all_pairs=True fills pair_covariances for every free pair.
    """
    conditioning = conditioning or Conditioning()
    conditioning.validate(params.n)
    free, coup, fields = _free_subsystem(params, disorder, conditioning)
    if len(free) > enumeration_cap:
        raise FreeSpinCountExceeded(len(free), enumeration_cap)
    requests = _check_requests(requests, free)

    system = _EnumeratedSystem(coup, fields)
    mags = system.magnetizations()
    pos = {v: p for p, v in enumerate(free)}
    report = GibbsReport(
        log_z=float(system.log_z),
        magnetizations={v: float(mags[pos[v]]) for v in free},
    )

    pairs = {tuple(sorted(r)) for r in requests if len(r) == 2}
    triples = {tuple(sorted(r)) for r in requests if len(r) == 3}
    if all_pairs:
        pairs |= {(a, b) for ai, a in enumerate(free) for b in free[ai + 1:]}

    raw_pairs: dict[tuple[int, int], float] = {}

    def raw_pair(a: int, b: int) -> float:
        key = (a, b) if a <= b else (b, a)
        if key not in raw_pairs:
            raw_pairs[key] = system.raw_moment([pos[a], pos[b]])
        return raw_pairs[key]

    if pairs:
        if all_pairs or len(pairs) > len(free):
            full = system.raw_pair_matrix()
            for a, b in pairs:
                raw_pairs[(a, b)] = float(full[pos[a], pos[b]])
        for a, b in sorted(pairs):
            if a == b:
                report.pair_covariances[(a, a)] = 1.0 - mags[pos[a]] ** 2
            else:
                report.pair_covariances[(a, b)] = (
                    raw_pair(a, b) - mags[pos[a]] * mags[pos[b]]
                )

    for a, b, c in sorted(triples):
        t3 = system.raw_moment([pos[a], pos[b], pos[c]])
        ma, mb, mc = mags[pos[a]], mags[pos[b]], mags[pos[c]]
        report.three_point[(a, b, c)] = (
            t3
            - ma * raw_pair(b, c)
            - mb * raw_pair(a, c)
            - mc * raw_pair(a, b)
            + 2.0 * ma * mb * mc
        )
    return report


def evaluate_observable(
    params: ModelParams,
    disorder: Disorder,
    conditioning: Conditioning,
    observable: tuple[int, ...],
    *,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Evaluate a spin-product cumulant under <.>^[A,B].

    () is the constant 1; (j,) is <s_j> (tau_j when j is clamped); (j, k)
    and (j, k, l) are connected correlations, which vanish as soon as one
    index is clamped because a clamped spin is deterministic.
    """
    obs = tuple(int(v) for v in observable)
    if len(obs) > 3:
        raise ValueError(f"observables have at most 3 indices, got {obs}")
    if not obs:
        return 1.0
    clamped = conditioning.clamped_map
    for v in obs:
        if v in conditioning.removed or not 1 <= v <= params.n:
            raise IndexNotFree(f"observable vertex {v} is removed or out of range")
    if len(obs) == 1:
        v = obs[0]
        if v in clamped:
            return float(clamped[v])
        report = gibbs_report(
            params, disorder, conditioning, enumeration_cap=enumeration_cap
        )
        return report.magnetization(v)
    if any(v in clamped for v in obs):
        return 0.0
    report = gibbs_report(
        params, disorder, conditioning, [obs], enumeration_cap=enumeration_cap
    )
    if len(obs) == 2:
        return report.pair_covariance(*obs)
    return report.three_point_cumulant(*obs)


def delta_epsilon(
    params: ModelParams,
    disorder: Disorder,
    conditioning: Conditioning,
    i: int,
    observable: tuple[int, ...],
    *,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[float, float]:
    """Half-difference and half-sum of the observable over clamping s_i = +-1.

    delta_i f = (f|s_i=+1 - f|s_i=-1)/2 and eps_i f = (f|+1 + f|-1)/2,
    both under <.>^[A u {i}, B].
    """
    conditioning.validate(params.n)
    if not conditioning.is_free(i) or not 1 <= i <= params.n:
        raise IndexNotFree(f"vertex {i} is not free under the given conditioning")
    plus = evaluate_observable(
        params, disorder, conditioning.clamp(i, +1), observable,
        enumeration_cap=enumeration_cap,
    )
    minus = evaluate_observable(
        params, disorder, conditioning.clamp(i, -1), observable,
        enumeration_cap=enumeration_cap,
    )
    return 0.5 * (plus - minus), 0.5 * (plus + minus)


def overlap_q(
    params: ModelParams,
    disorder: Disorder,
    conditioning: Conditioning | None = None,
    *,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Cavity overlap q^(B) = (1/n) sum_{k not in B} (m_k^(B))^2 (A must be empty)."""
    conditioning = conditioning or Conditioning()
    if conditioning.clamped:
        raise ValueError("overlap is defined for pure cavity conditioning (A empty)")
    report = gibbs_report(
        params, disorder, conditioning, enumeration_cap=enumeration_cap
    )
    total = sum(m * m for m in report.magnetizations.values())
    return total / params.n
