"""Exception hierarchy shared by all sspa modules."""

from __future__ import annotations


class SSPAError(Exception):
    pass


class ParseError(SSPAError):
    """Raised for malformed model text; carries a 1-based source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")


class IllFoundedDefinition(SSPAError):
    """Identifier unfolding loops without reaching a choice or nil."""


class BudgetExceeded(SSPAError):
    def __init__(self, message: str, explored: int = 0, frontier: int = 0):
        self.explored = explored
        self.frontier = frontier
        super().__init__(f"{message} (explored={explored}, frontier={frontier})")


class ReducibleChainError(SSPAError):
    def __init__(self, message: str, components=None):
        self.components = components or []
        super().__init__(message)


class MissingVariable(SSPAError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class CooperationError(SSPAError):
    pass


class IllFormedComponent(SSPAError):
    pass


class UnclosableComponent(SSPAError):
    pass
