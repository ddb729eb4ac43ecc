"""Exception hierarchy shared by every module of the package."""


class TaxmanError(Exception):
    """Base class for all errors raised by this package."""


class GameFormatError(TaxmanError, ValueError):
    """A game document could not be parsed.

    ``line`` and ``column`` are 1-based and point at the offending token when
    it can be located in the source text.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class GameValidationError(TaxmanError, ValueError):
    """A parsed game violates a structural invariant."""

    def __init__(self, invariant, message, vertex=None):
        self.invariant = invariant
        self.vertex = vertex
        super().__init__(f"{invariant}: {message}")


class ContractError(TaxmanError, ValueError):
    """A precondition of an operation was violated by its caller."""


class IllegalBidError(ContractError):
    def __init__(self, player, bid, budget):
        self.player = player
        self.bid = bid
        self.budget = budget
        super().__init__(f"player {player} bid {bid} exceeds budget {budget}")


class InsufficientBudgetError(ContractError):
    """The strategy guarantee does not cover the supplied initial ratio."""


class UnsupportedParameterError(TaxmanError, ValueError):
    """A parameter value lies outside what an operation supports."""


class ConvergenceError(TaxmanError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual}, iterations={iterations})")


class NumericalError(TaxmanError, ArithmeticError):
    """A numerical kernel failed (singular system, underflow, cycling)."""


class StrategyError(TaxmanError, RuntimeError):
    """A strategy produced an action the engine cannot execute."""
