"""Wach modules, Nygaard filtrations and syntomic complexes at finite precision."""

from .errors import MalformedError, NotDivisibleError, NotInvariantError, NotUnitError, PrecisionError, WachsynError
from .wach import WachModuleA, WachModuleS, ascend, descend, direct_sum, tate_twist, tensor, trivial, unramified_char, verify

__version__ = "0.1.0"

__all__ = [
    "MalformedError",
    "NotDivisibleError",
    "NotInvariantError",
    "NotUnitError",
    "PrecisionError",
    "WachModuleA",
    "WachModuleS",
    "WachsynError",
    "ascend",
    "descend",
    "direct_sum",
    "tate_twist",
    "tensor",
    "trivial",
    "unramified_char",
    "verify",
]
