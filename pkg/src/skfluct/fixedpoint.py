"""Replica-symmetric fixed point and the scaled-covariance limit law.

Solves q = E tanh^2(h + sqrt(t q) Z) for standard normal Z, evaluates
mu = E sech^4(h + sqrt(t q) Z), the stability product t*mu (the model is
in the high-temperature region when t*mu < 1) and the limit law

    V = sqrt(t / (1 - t mu)) * Z1 * sech^2(h + sqrt(t q) Z2)
                                 * sech^2(h + sqrt(t q) Z3)

with Z1, Z2, Z3 i.i.d. standard normal. Gaussian expectations use
probabilists' Gauss-Hermite quadrature; sech^2 is evaluated as
1 - tanh^2 to avoid cosh overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import ATViolation, NoConvergence, NonFiniteFunctionValue
from .stats import MomentTable

DEFAULT_QUADRATURE_ORDER = 64
MAX_FIXED_POINT_ITERATIONS = 10_000


@lru_cache(maxsize=None)
def _nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights (z, w) with sum w = 1 so that E f(Z) ~ sum w f(z)."""
    x, w = hermgauss(order)
    z = np.sqrt(2.0) * x
    w = w / np.sqrt(np.pi)
    z.flags.writeable = False
    w.flags.writeable = False
    return z, w


def gauss_hermite_expectation(
    f: Callable[[np.ndarray], np.ndarray], order: int = DEFAULT_QUADRATURE_ORDER
) -> float:
    """E f(Z), Z ~ N(0,1); exact for polynomials of degree <= 2*order - 1.

    f must accept an ndarray of nodes and evaluate elementwise.
    """
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    z, w = _nodes(order)
    values = np.asarray(f(z), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteFunctionValue(
            f"integrand returned non-finite values at {int(np.sum(~np.isfinite(values)))} nodes"
        )
    return float(w @ values)


def sech2(x: np.ndarray) -> np.ndarray:
    """sech^2(x) = 1 - tanh^2(x), overflow-free."""
    th = np.tanh(x)
    return 1.0 - th * th


def _sech_power_moment(t: float, h: float, q: float, power: int, order: int) -> float:
    """E sech^(2*power)(h + sqrt(t q) Z)."""
    s = np.sqrt(t * q)
    return gauss_hermite_expectation(lambda z: sech2(h + s * z) ** power, order)


@dataclass(frozen=True)
class FixedPointSolution:
    """Solution (q, mu) at (t, h) with the stability product and limit scale.

    limit_scale = sqrt(t / (1 - t mu)) is only defined when at_value < 1;
    it is None past the stability line. residual is the fixed-point defect
    re-evaluated with the quadrature order doubled.
    """

    t: float
    h: float
    q: float
    mu: float
    at_value: float
    limit_scale: float | None
    iterations: int
    residual: float
    quadrature_order: int

    @property
    def at_violated(self) -> bool:
        return self.at_value >= 1.0

    def require_stable(self) -> None:
        if self.at_violated:
            raise ATViolation(
                f"t*mu = {self.at_value:.6g} >= 1 at (t={self.t}, h={self.h})"
            )


def solve_q(
    t: float,
    h: float,
    tol: float = 1e-12,
    *,
    order: int = DEFAULT_QUADRATURE_ORDER,
    max_iterations: int = MAX_FIXED_POINT_ITERATIONS,
) -> FixedPointSolution:
    """Solve q = E tanh^2(h + sqrt(t q) Z) by undamped fixed-point iteration.

    Starts from q0 = tanh^2(h); for h = 0 the solution q = 0 is returned
    without iterating. Raises NoConvergence when the iteration cap is hit
    (t outside the small-t contraction regime). Crossing the stability
    line t*mu >= 1 is reported in the solution, not raised.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")

    def tanh2_mean(q: float, ord_: int) -> float:
        s = np.sqrt(t * q)
        return gauss_hermite_expectation(lambda z: np.tanh(h + s * z) ** 2, ord_)

    if h == 0.0:
        q = 0.0
        iterations = 0
    else:
        q = float(np.tanh(h) ** 2)
        for iterations in range(1, max_iterations + 1):
            q_next = tanh2_mean(q, order)
            if abs(q_next - q) < tol:
                q = q_next
                break
            q = q_next
        else:
            raise NoConvergence(
                f"fixed point did not converge within {max_iterations} iterations "
                f"at (t={t}, h={h})"
            )

    mu = _sech_power_moment(t, h, q, 2, order)
    at_value = t * mu
    limit_scale = float(np.sqrt(t / (1.0 - at_value))) if at_value < 1.0 else None
    residual = abs(tanh2_mean(q, 2 * order) - q) if h != 0.0 else 0.0
    return FixedPointSolution(
        t=t,
        h=h,
        q=q,
        mu=float(mu),
        at_value=float(at_value),
        limit_scale=limit_scale,
        iterations=iterations,
        residual=float(residual),
        quadrature_order=order,
    )


def _double_factorial_odd(k: int) -> float:
    """(2k - 1)!! = 1 * 3 * ... * (2k - 1)."""
    out = 1.0
    for m in range(1, 2 * k, 2):
        out *= m
    return out


def limit_moments(
    solution: FixedPointSolution,
    max_order: int = 8,
    *,
    order: int = DEFAULT_QUADRATURE_ORDER,
) -> MomentTable:
    """Exact moments of the limit law V up to max_order (<= 8).

    Odd moments vanish by the sign symmetry of Z1; even moments are

        E V^(2k) = (t/(1 - t mu))^k (2k-1)!! (E sech^(4k)(h + sqrt(t q) Z))^2.
    """
    if max_order > 8:
        raise ValueError(f"moments are tabulated for orders <= 8, got {max_order}")
    solution.require_stable()
    t, h, q = solution.t, solution.h, solution.q
    scale2 = t / (1.0 - solution.at_value)
    orders = list(range(1, max_order + 1))
    values = []
    for p in orders:
        if p % 2 == 1:
            values.append(0.0)
        else:
            k = p // 2
            sech_moment = _sech_power_moment(t, h, q, 2 * k, order)
            values.append(scale2**k * _double_factorial_odd(k) * sech_moment**2)
    return MomentTable(orders=orders, values=values, std_errors=[0.0] * len(orders))


@dataclass(frozen=True)
class LimitLawSpec:
    """Limit law with cached even moments E V^(2k), k = 1..4."""

    solution: FixedPointSolution
    even_moments: tuple[float, float, float, float]

    @classmethod
    def from_solution(cls, solution: FixedPointSolution) -> "LimitLawSpec":
        table = limit_moments(solution, max_order=8)
        evens = tuple(table.value(2 * k) for k in (1, 2, 3, 4))
        return cls(solution=solution, even_moments=evens)

    @classmethod
    def from_parameters(cls, t: float, h: float, **kwargs) -> "LimitLawSpec":
        return cls.from_solution(solve_q(t, h, **kwargs))


def limit_law_sample(
    spec: LimitLawSpec | FixedPointSolution, count: int, seed: int
) -> np.ndarray:
    """count i.i.d. draws of the limit law V, deterministic in seed."""
    solution = spec.solution if isinstance(spec, LimitLawSpec) else spec
    solution.require_stable()
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((3, count))
    s = np.sqrt(solution.t * solution.q)
    return (
        solution.limit_scale
        * z[0]
        * sech2(solution.h + s * z[1])
        * sech2(solution.h + s * z[2])
    )
