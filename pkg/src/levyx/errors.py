"""Exception hierarchy for levyx."""


class LevyxError(Exception):
    """Base class for all library errors."""


class EvaluationError(LevyxError):
    """A coefficient function returned a non-finite value."""

    def __init__(self, what, t, x, value=None):
        self.what, self.t, self.x, self.value = what, t, x, value
        super().__init__(f"{what} is not finite at t={t!r}, x={x!r} (got {value!r})")


class ContourError(LevyxError):
    """Fourier variable outside the admissible strip."""


class BranchError(LevyxError):
    """Evaluation too close to a branch cut of a square-root symbol."""


class JetError(LevyxError):
    """Incompatible jets (center/order mismatch or exhausted budget)."""


class ExpansionError(LevyxError):
    pass


class DomainError(LevyxError):
    pass


class IntegrationError(LevyxError):
    pass


class QuadratureError(LevyxError):
    pass


class ArbitrageError(LevyxError):
    """Price outside the no-arbitrage bounds of the Black-Scholes map."""

    def __init__(self, price, lower, upper):
        self.price, self.lower, self.upper = price, lower, upper
        super().__init__(
            f"price {price!r} outside no-arbitrage bounds ({lower!r}, {upper!r})"
        )


class DegeneracyError(LevyxError):
    pass


class InconclusiveError(LevyxError):
    pass
