"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SkfluctError(Exception):
    """Base class for all package-specific errors."""


class FreeSpinCountExceeded(SkfluctError):
    """Exact enumeration was asked for more free spins than the configured cap."""

    def __init__(self, free_spins: int, cap: int):
        super().__init__(
            f"{free_spins} free spins exceed the enumeration cap of {cap}"
        )
        self.free_spins = free_spins
        self.cap = cap


class IndexNotFree(SkfluctError):
    """A requested vertex is clamped, removed, or out of range."""


class InvalidEndpoints(SkfluctError):
    """Path endpoints coincide or lie outside the vertex range."""


class BudgetExceeded(SkfluctError):
    """A configured resource budget (memo keys / path counts) was exhausted."""

    def __init__(self, message: str, count: int, budget: int):
        super().__init__(f"{message}: {count} exceeds budget {budget}")
        self.count = count
        self.budget = budget


class NonFiniteFunctionValue(SkfluctError):
    """Integrand returned NaN/inf at a quadrature node."""


class NoConvergence(SkfluctError):
    """Fixed-point iteration failed to converge within the iteration cap."""


class ATViolation(SkfluctError):
    """Operation requires t*mu < 1 but the parameters violate it."""


class EmptySample(SkfluctError):
    """Statistical operation received an empty sample."""


class DegenerateField(SkfluctError):
    """Cavity field has zero variance; standardization is undefined."""


class ConfigError(SkfluctError):
    """Invalid or unknown experiment configuration."""


class IoFailure(SkfluctError):
    """Report or sample files could not be written."""
