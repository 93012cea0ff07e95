"""Free-semigroup word space over a finite alphabet.

A word is a tuple of generator indices in 1..m.  Words act rightmost-first:
the letter at position 1 is applied to the point first, so the word
(i_1, ..., i_n) denotes the composition  g_{i_n} o ... o g_{i_1}.
The empty word is the identity.  The identity is never a letter, so length-n
words are exactly the m^n concatenations of non-identity generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator

from .errors import BudgetError

Word = tuple[int, ...]

#: Hard default on the number of words a stream may yield.
DEFAULT_WORD_BUDGET = 10**8


def word_count(m: int, n: int) -> int:
    """Number of length-n words over m letters, as an exact integer."""
    if m < 1:
        raise ValueError(f"alphabet size must be >= 1, got m={m}")
    if n < 0:
        raise ValueError(f"word length must be >= 0, got n={n}")
    return m**n


def enumerate_words(m: int, n: int, budget: int = DEFAULT_WORD_BUDGET) -> Iterator[Word]:
    """Stream all m^n length-n words in lexicographic order.

    The order is deterministic so that any aggregation over the stream is
    reproducible bit-for-bit.  Raises BudgetError before yielding anything
    if m^n exceeds the budget; the stream itself is lazy and never
    materialized.
    """
    total = word_count(m, n)
    if total > budget:
        raise BudgetError(f"word space m^n = {m}^{n} = {total} exceeds budget {budget}")
    return product(range(1, m + 1), repeat=n)


def count_distinct_commuting(m: int, n: int) -> int:
    """Distinct semigroup elements of length n when all m generators commute.

    For pairwise-commuting generators of infinite order a length-n
    concatenation is determined by its letter multiset, so the count is the
    number of multisets of size n over m symbols, C(n+m-1, m-1).  For m = 3
    this is (n+1)(n+2)/2.  The commuting/infinite-order hypothesis is the
    caller's responsibility.
    """
    if m < 1:
        raise ValueError(f"alphabet size must be >= 1, got m={m}")
    if n < 0:
        raise ValueError(f"word length must be >= 0, got n={n}")
    return math.comb(n + m - 1, m - 1)


@dataclass(frozen=True)
class WordCensus:
    """Counts of the length-n word space over an m-letter alphabet."""

    m: int
    n: int
    total: int
    distinct_commuting: int | None = None

    @classmethod
    def take(cls, m: int, n: int, commuting: bool = False) -> "WordCensus":
        return cls(
            m=m,
            n=n,
            total=word_count(m, n),
            distinct_commuting=count_distinct_commuting(m, n) if commuting else None,
        )


def concat(w: Word, v: Word) -> Word:
    """Concatenation w then v: the point passes through w first."""
    return w + v
