"""Exception types shared across the package.

The CLI maps these onto exit codes, so keep the hierarchy flat.
"""


class EpisError(Exception):
    """Base class for all package errors."""


class NetworkError(EpisError, ValueError):
    """A network violates a structural or numerical invariant."""


class CycleError(NetworkError):
    def __init__(self, node: str):
        super().__init__(f"directed cycle through node {node!r}")
        self.node = node


class EvidenceError(EpisError, ValueError):
    """Evidence names an unknown node or state."""


class FormatError(EpisError, ValueError):
    """A network or evidence document could not be parsed.

    ``kind`` is ``"syntax"`` or ``"semantic"``.
    """

    def __init__(self, message: str, kind: str = "semantic", node: str | None = None,
                 line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(f"{kind} error{where}: {message}")
        self.kind = kind
        self.node = node
        self.line = line
        self.column = column


class CapExceededError(EpisError):
    """An exact computation would exceed its configured size cap."""


class ZeroWeightError(EpisError):
    """Every sample had zero importance weight, so no estimate exists.

    Usually means the evidence has zero (or vanishingly small) probability.
    """

    def __init__(self, message: str, m: int = 0, rejected: int = 0):
        super().__init__(message)
        self.m = m
        self.rejected = rejected
