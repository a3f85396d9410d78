"""Finite words over a finite alphabet, as plain integer tuples.

A word (a_1, ..., a_n) indexes the composition phi_{a_1} o ... o phi_{a_n};
the empty tuple is the identity.  Words are kept as tuples so they hash,
sort lexicographically, and serialize to JSON integer arrays unchanged.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Iterator, Sequence, Tuple

Word = Tuple[int, ...]


def word(letters: Iterable[int]) -> Word:
    return tuple(int(a) for a in letters)


def check_word(w: Sequence[int], n_letters: int) -> Word:
    w = word(w)
    for a in w:
        if not 0 <= a < n_letters:
            raise IndexError(f"letter {a} outside alphabet of size {n_letters}")
    return w


def concat(*ws: Sequence[int]) -> Word:
    out: tuple = ()
    for w in ws:
        out = out + tuple(w)
    return out


def repeat(w: Sequence[int], times: int) -> Word:
    return tuple(w) * times


def all_words(n_letters: int, length: int) -> Iterator[Word]:
    """Lexicographic enumeration of the alphabet's length-`length` words."""
    return product(range(n_letters), repeat=length)


def interleave(a_blocks: Sequence[Word], b_blocks: Sequence[Word]) -> Word:
    """Interleaving (a0, b1, a1, b2, ..., bk, ak) of k+1 a-blocks with k b-blocks."""
    if len(a_blocks) != len(b_blocks) + 1:
        raise ValueError("need exactly one more a-block than b-blocks")
    out: tuple = tuple(a_blocks[0])
    for b, a in zip(b_blocks, a_blocks[1:]):
        out += tuple(b) + tuple(a)
    return out
