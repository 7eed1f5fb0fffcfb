"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class NetlabError(Exception):
    exit_code = 1


class ParseError(NetlabError):
    """A malformed transaction or edge-list row."""

    exit_code = 2

    def __init__(self, reason: str, line: int | None = None, field: str | None = None):
        self.reason = reason
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + reason)


class EmptyNetworkError(NetlabError):
    exit_code = 3


class DegenerateNetworkError(NetlabError):
    exit_code = 3


class StatisticalPreconditionError(NetlabError):
    """Not enough (or not varied enough) data for a statistical operation."""

    exit_code = 4


class ConfigError(NetlabError):
    exit_code = 1
