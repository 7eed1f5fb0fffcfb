"""Weighted directed network analysis of overnight interbank lending."""

from .errors import (ConfigError, DegenerateNetworkError, EmptyNetworkError, NetlabError,
                     ParseError, StatisticalPreconditionError)
from .ingest import BankId, DirectedTrade, Side, TransactionRecord
from .keyplayers import Category, KeyPlayerClassification
from .netbuild import YearNetwork

__version__ = "0.1.0"

__all__ = [
    "BankId", "Category", "ConfigError", "DegenerateNetworkError", "DirectedTrade",
    "EmptyNetworkError", "KeyPlayerClassification", "NetlabError", "ParseError", "Side",
    "StatisticalPreconditionError", "TransactionRecord", "YearNetwork",
]
