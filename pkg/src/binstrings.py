"""
Binary strings under the length-lexicographic order.

Strings are plain `str` values over "0" and "1". Shorter strings come
first; strings of equal length compare at their first difference, 0
before 1. Rank n is the n-th string in that order, starting from "" at 0.
"""

from itertools import count
from typing import Iterable, Iterator, List, Tuple

BEFORE = "before"
EQUAL = "equal"
AFTER = "after"


def is_binary(alpha: str) -> bool:
    return isinstance(alpha, str) and all(ch in "01" for ch in alpha)


def _check(alpha: str):
    if not is_binary(alpha):
        raise ValueError(f"not a binary string: {alpha!r}")


def sort_key(alpha: str) -> Tuple[int, str]:
    return (len(alpha), alpha)


def length_lex_compare(alpha: str, beta: str) -> str:
    """Position of alpha relative to beta: before, equal or after."""
    _check(alpha)
    _check(beta)
    a, b = sort_key(alpha), sort_key(beta)
    if a < b:
        return BEFORE
    if a > b:
        return AFTER
    return EQUAL


def rank(alpha: str) -> int:
    _check(alpha)
    return int("1" + alpha, 2) - 1


def nth_string(n: int) -> str:
    if n < 0:
        raise ValueError("ranks start at 0")
    return bin(n + 1)[3:]


def strings(start: int = 0) -> Iterator[str]:
    """Every binary string from rank `start` on."""
    for n in count(start):
        yield nth_string(n)


def least_unused(used, start: int = 0) -> Tuple[str, int]:
    """The least string of rank >= start that is not in `used`, and its rank."""
    n = start
    while nth_string(n) in used:
        n += 1
    return nth_string(n), n


def fresh_of_length(length: int, used, how_many: int) -> List[str]:
    """
    The `how_many` least unused strings of the given length, moving on to
    longer strings if that length runs out.
    """
    found: List[str] = []
    n = rank("0" * length)
    while len(found) < how_many:
        alpha = nth_string(n)
        if alpha not in used and alpha not in found:
            found.append(alpha)
        n += 1
    return found


def sort_strings(items: Iterable[str]) -> List[str]:
    return sorted(items, key=sort_key)


def token(alpha: str) -> str:
    """Trace form of a string; the caret keeps the empty string visible."""
    _check(alpha)
    return "^" + alpha


def untoken(text: str) -> str:
    if not text.startswith("^"):
        raise ValueError(f"not a string token: {text!r}")
    alpha = text[1:]
    _check(alpha)
    return alpha
