"""Self-avoiding path expansion of the rescaled pair covariance.

A path gamma = (i k_1 ... k_n j) among 1..N visits n distinct interior
vertices, all distinct from the endpoints. Its weight alternates edge
couplings with cavity diagonal covariances,

    w(gamma) = g_{i k_1} m_{k_1 k_1}^{(i,j)} g_{k_1 k_2}
               m_{k_2 k_2}^{(i,k_1,j)} ... m_{k_n k_n}^{(i,k_1..k_{n-1},j)}
               g_{k_n j},

with w = g_ij for the direct edge (n = 0); the cavity of the l-th interior
vertex is both endpoints plus all previously visited vertices. The depth-n
term is T_{n+1} = sqrt(N) sum_{|gamma|=n+1} w(gamma), and the expansion
vector is X_n = m_ii m_jj^(i) T_{n+1} for n = 0..M.

The closing remainder A_{M+1} sums, over paths with M+1 interior vertices,
the same product with the last m-g-m segment replaced by the single
two-point factor m_{k_M k_{M+1}}^{(i,k_1..k_{M-1},j)}; for M = 0 it
degenerates to A_1 = m_ii sum_{k != i,j} g_{ik} m_{kj}^{(i)}. With these
definitions sqrt(N) m_ij - sum_n X_n - sqrt(N) A_{M+1} is exactly the
accumulated expansion error, which is small for small t.

Cavity weights are memoized per (vertex, sorted cavity); one exact Gibbs
call per distinct cavity fills every free vertex at once. Sums stream over
paths in lexicographic interior order with Kahan compensation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Iterator

import numpy as np

from .errors import BudgetExceeded, IndexNotFree, InvalidEndpoints
from .gibbs import (
    DEFAULT_ENUMERATION_CAP,
    Conditioning,
    Disorder,
    ModelParams,
    cavity,
    gibbs_report,
)

DEFAULT_MEMO_BUDGET = 200_000


@dataclass(frozen=True)
class SelfAvoidingPath:
    """Endpoints i, j plus the ordered interior vertices; length = n + 1 edges."""

    i: int
    j: int
    interior: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "interior", tuple(int(v) for v in self.interior))
        vertices = (self.i, *self.interior, self.j)
        if len(set(vertices)) != len(vertices):
            raise ValueError(f"path vertices must be distinct, got {vertices}")

    @property
    def length(self) -> int:
        return len(self.interior) + 1


def falling_factorial(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1); equals 1 for k = 0."""
    out = 1
    for step in range(k):
        out *= n - step
    return out


def path_count(n_vertices: int, interior_len: int) -> int:
    """|{paths i -> j with interior_len distinct interior vertices}|."""
    return falling_factorial(n_vertices - 2, interior_len)


def _check_endpoints(n_vertices: int, i: int, j: int) -> None:
    if i == j:
        raise InvalidEndpoints(f"endpoints must differ, got i = j = {i}")
    for v in (i, j):
        if not 1 <= v <= n_vertices:
            raise InvalidEndpoints(f"endpoint {v} outside 1..{n_vertices}")


def enumerate_paths(
    n_vertices: int, i: int, j: int, interior_len: int
) -> Iterator[SelfAvoidingPath]:
    """All paths i -> j with the given interior length, lexicographic interiors."""
    _check_endpoints(n_vertices, i, j)
    if interior_len < 0:
        raise ValueError(f"interior length must be >= 0, got {interior_len}")
    if n_vertices < interior_len + 2:
        raise ValueError(
            f"{n_vertices} vertices cannot host {interior_len} distinct interiors"
        )
    others = [v for v in range(1, n_vertices + 1) if v != i and v != j]
    for combo in permutations(others, interior_len):
        yield SelfAvoidingPath(i, j, combo)


class _Kahan:
    """Compensated accumulator for long alternating-sign sums."""

    __slots__ = ("total", "_comp")

    def __init__(self):
        self.total = 0.0
        self._comp = 0.0

    def add(self, value: float) -> None:
        y = value - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


@dataclass(frozen=True)
class PathTermBundle:
    """T-terms, X-vector and closing remainder for one disorder sample.

    x_vector[n] = prefactor[0] * prefactor[1] * t_terms[n] where the
    prefactor is (m_ii, m_jj^(i)).
    """

    i: int
    j: int
    depth: int
    t_terms: tuple[float, ...]
    x_vector: tuple[float, ...]
    remainder_a: float
    prefactor: tuple[float, float]

    def partial_sum(self, m: int) -> float:
        """sum_{n <= m} X_n."""
        return sum(self.x_vector[: m + 1])


class PathEngine:
    """Memoized cavity weights and path sums for one (params, disorder) pair.

    The memo key space is (vertex, sorted cavity) for diagonal weights and
    (sorted pair, sorted cavity) for the two-point closing factors; the
    number of distinct requested keys is capped by memo_budget. One Gibbs
    enumeration per distinct cavity fills all of its vertices (and, for the
    pair cache, all of its pairs) at once, so outputs are bitwise identical
    with the cache disabled.
    """

    def __init__(
        self,
        params: ModelParams,
        disorder: Disorder,
        *,
        enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
        memo_budget: int = DEFAULT_MEMO_BUDGET,
        use_cache: bool = True,
    ):
        if params.n != disorder.n:
            raise ValueError("params and disorder disagree on the spin count")
        self.params = params
        self.disorder = disorder
        self.enumeration_cap = enumeration_cap
        self.memo_budget = memo_budget
        self.use_cache = use_cache
        self.gibbs_calls = 0
        self._mags: dict[tuple[int, ...], dict[int, float]] = {}
        self._pairs: dict[tuple[int, ...], dict[tuple[int, int], float]] = {}
        self._requested: set = set()

    def _charge(self, key) -> None:
        self._requested.add(key)
        if len(self._requested) > self.memo_budget:
            raise BudgetExceeded("distinct memo keys", len(self._requested), self.memo_budget)

    def _cavity_key(self, cavity_vertices: Iterable[int]) -> tuple[int, ...]:
        key = tuple(sorted(int(v) for v in cavity_vertices))
        if len(set(key)) != len(key):
            raise ValueError(f"cavity set has repeated vertices: {key}")
        return key

    def _magnetizations(self, key: tuple[int, ...]) -> dict[int, float]:
        cached = self._mags.get(key)
        if cached is not None:
            return cached
        report = gibbs_report(
            self.params,
            self.disorder,
            cavity(key),
            enumeration_cap=self.enumeration_cap,
        )
        self.gibbs_calls += 1
        mags = report.magnetizations
        if self.use_cache:
            self._mags[key] = mags
        return mags

    def _pair_covariances(self, key: tuple[int, ...]) -> dict[tuple[int, int], float]:
        cached = self._pairs.get(key)
        if cached is not None:
            return cached
        report = gibbs_report(
            self.params,
            self.disorder,
            cavity(key),
            all_pairs=True,
            enumeration_cap=self.enumeration_cap,
        )
        self.gibbs_calls += 1
        pairs = report.pair_covariances
        if self.use_cache:
            self._pairs[key] = pairs
        return pairs

    def vertex_weight(self, k: int, cavity_vertices: Iterable[int]) -> float:
        """m_kk^(cavity) = 1 - (m_k^(cavity))^2."""
        key = self._cavity_key(cavity_vertices)
        if k in key or not 1 <= k <= self.params.n:
            raise IndexNotFree(f"vertex {k} is inside the cavity set or out of range")
        self._charge(("m", k, key))
        m = self._magnetizations(key)[k]
        return 1.0 - m * m

    def pair_covariance(self, k: int, l: int, cavity_vertices: Iterable[int]) -> float:
        """m_kl^(cavity) for k != l."""
        key = self._cavity_key(cavity_vertices)
        for v in (k, l):
            if v in key or not 1 <= v <= self.params.n:
                raise IndexNotFree(f"vertex {v} is inside the cavity set or out of range")
        pair = (k, l) if k < l else (l, k)
        self._charge(("c", pair, key))
        return self._pair_covariances(key)[pair]

    def path_weight(self, path: SelfAvoidingPath) -> float:
        """w(gamma); the direct edge gives g_ij."""
        _check_endpoints(self.params.n, path.i, path.j)
        g = self.disorder.couplings
        if not path.interior:
            return float(g[path.i - 1, path.j - 1])
        interior = path.interior
        prod = float(g[path.i - 1, interior[0] - 1])
        for idx, k in enumerate(interior):
            prod *= self.vertex_weight(k, (path.i, *interior[:idx], path.j))
            nxt = interior[idx + 1] if idx + 1 < len(interior) else path.j
            prod *= float(g[k - 1, nxt - 1])
        return prod

    def _predict_budget(self, i: int, j: int, depth: int) -> tuple[int, int]:
        """(distinct memo keys, total streamed paths) needed by bundle()."""
        n_others = self.params.n - 2
        comb = lambda n, k: math.comb(n, k) if 0 <= k <= n else 0
        keys = 2  # (i, ()) and (j, (i,))
        for level in range(1, depth + 1):
            keys += comb(n_others, level - 1) * max(n_others - level + 1, 0)
        if depth == 0:
            keys += n_others
        else:
            keys += comb(n_others, depth - 1) * comb(n_others - depth + 1, 2)
        paths = sum(path_count(self.params.n, m) for m in range(depth + 2))
        return keys, paths

    def bundle(self, i: int, j: int, depth: int) -> PathTermBundle:
        """T-terms and X-vector up to the given depth plus the remainder.

        Streams every path once through a depth-first scan that shares
        prefix products between paths with a common interior prefix.
        """
        _check_endpoints(self.params.n, i, j)
        if depth < 0:
            raise ValueError(f"depth must be >= 0, got {depth}")
        keys, total_paths = self._predict_budget(i, j, depth)
        if keys > self.memo_budget:
            raise BudgetExceeded(
                f"bundle(i={i}, j={j}, depth={depth}) over {total_paths} paths "
                "needs too many memo keys",
                keys,
                self.memo_budget,
            )

        n = self.params.n
        g = self.disorder.couplings
        sqrt_n = math.sqrt(n)
        m_ii = self.vertex_weight(i, ())
        m_jj_i = self.vertex_weight(j, (i,))

        others = [v for v in range(1, n + 1) if v != i and v != j]
        term_accs = [_Kahan() for _ in range(depth + 1)]
        term_accs[0].add(float(g[i - 1, j - 1]))
        remainder_acc = _Kahan()

        col_j = g[:, j - 1]
        if depth == 0:
            row_i = g[i - 1]
            for k in others:
                remainder_acc.add(
                    float(row_i[k - 1]) * self.pair_covariance(k, j, (i,))
                )
            remainder = m_ii * remainder_acc.total
        else:
            def scan(prefix: tuple[int, ...], partial: float) -> None:
                level = len(prefix)  # interior vertices already weighted
                last = prefix[-1] if prefix else i
                row_last = g[last - 1]
                ckey = self._cavity_key((i, *prefix, j))
                used = set(prefix)
                if level == depth - 1:
                    # close with the two-point factor over two fresh vertices
                    pair_cov = self._pair_covariances(ckey)
                    for u in others:
                        if u in used:
                            continue
                        lead = partial * float(row_last[u - 1])
                        for w in others:
                            if w == u or w in used:
                                continue
                            key = (u, w) if u < w else (w, u)
                            self._charge(("c", key, ckey))
                            remainder_acc.add(
                                lead * pair_cov[key] * float(col_j[w - 1])
                            )
                if level >= depth:
                    return
                mags = self._magnetizations(ckey)
                for v in others:
                    if v in used:
                        continue
                    self._charge(("m", v, ckey))
                    m_v = mags[v]
                    extended = partial * float(row_last[v - 1]) * (1.0 - m_v * m_v)
                    term_accs[level + 1].add(extended * float(col_j[v - 1]))
                    scan(prefix + (v,), extended)

            scan((), 1.0)
            remainder = m_ii * m_jj_i * remainder_acc.total

        t_terms = tuple(sqrt_n * acc.total for acc in term_accs)
        x_vector = tuple(m_ii * m_jj_i * t for t in t_terms)
        return PathTermBundle(
            i=i,
            j=j,
            depth=depth,
            t_terms=t_terms,
            x_vector=x_vector,
            remainder_a=remainder,
            prefactor=(m_ii, m_jj_i),
        )


def cavity_vertex_weight(
    k: int,
    cavity_vertices: Iterable[int],
    disorder: Disorder,
    params: ModelParams,
    *,
    engine: PathEngine | None = None,
) -> float:
    engine = engine or PathEngine(params, disorder)
    return engine.vertex_weight(k, cavity_vertices)


def path_weight(
    path: SelfAvoidingPath,
    disorder: Disorder,
    params: ModelParams,
    *,
    engine: PathEngine | None = None,
) -> float:
    engine = engine or PathEngine(params, disorder)
    return engine.path_weight(path)


def compute_bundle(
    i: int,
    j: int,
    depth: int,
    disorder: Disorder,
    params: ModelParams,
    *,
    engine: PathEngine | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    memo_budget: int = DEFAULT_MEMO_BUDGET,
) -> PathTermBundle:
    engine = engine or PathEngine(
        params, disorder, enumeration_cap=enumeration_cap, memo_budget=memo_budget
    )
    return engine.bundle(i, j, depth)
