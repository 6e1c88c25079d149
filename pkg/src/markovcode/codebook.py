"""Complete prefix codes: Kraft checks, exhaustive enumeration, Huffman lengths
and canonical codewords.

A complete code is a vector of per-symbol codeword lengths whose Kraft sum is
exactly one. Symbols are addressed 1..N in the public API; arrays are 0-based.
"""

from __future__ import annotations

import functools
import heapq
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import UnsupportedAlphabetError, ValidationError

MIN_ALPHABET = 2
MAX_ALPHABET = 8
PROB_TOL = 1e-9


def _kraft_excess(lengths: Sequence[int]) -> int:
    """Return 2**L * (sum 2**-l) - 2**L in exact integers, L = max length."""
    top = max(lengths)
    return sum(1 << (top - l) for l in lengths) - (1 << top)


def _check_lengths(lengths) -> tuple[int, ...]:
    try:
        out = tuple(int(l) for l in lengths)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"codeword lengths must be integers: {lengths!r}") from exc
    if not out:
        raise ValidationError("codeword length vector is empty")
    if any(l != x for l, x in zip(out, lengths)):
        raise ValidationError(f"codeword lengths must be integers: {lengths!r}")
    if min(out) < 1:
        raise ValidationError(f"codeword lengths must be >= 1, got {out}")
    return out


def is_complete(lengths: Iterable[int]) -> bool:
    """True iff the lengths satisfy Kraft's inequality with equality."""
    return _kraft_excess(_check_lengths(list(lengths))) == 0


class CompleteCode(tuple):
    """Immutable vector of codeword lengths with Kraft sum exactly 1.

    ``code[n - 1]`` is the length for symbol ``n``.
    """

    __slots__ = ()

    def __new__(cls, lengths: Iterable[int]):
        values = _check_lengths(list(lengths))
        if _kraft_excess(values) != 0:
            raise ValidationError(f"lengths {values} do not form a complete code")
        n = len(values)
        if n >= 2 and max(values) > n - 1:
            raise ValidationError(f"lengths {values} exceed the N-1={n - 1} bound")
        if n == 1:
            raise ValidationError("a complete binary code needs at least two symbols")
        return super().__new__(cls, values)

    @property
    def n_symbols(self) -> int:
        return len(self)

    def expected_length(self, p) -> float:
        return float(np.dot(np.asarray(p, dtype=float), np.asarray(self, dtype=float)))

    def __repr__(self) -> str:
        return f"CompleteCode({list(self)})"


def check_alphabet(n: int) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise UnsupportedAlphabetError(f"alphabet size must be an integer, got {n!r}")
    n = int(n)
    if not MIN_ALPHABET <= n <= MAX_ALPHABET:
        raise UnsupportedAlphabetError(
            f"alphabet size N={n} outside the supported range [{MIN_ALPHABET}, {MAX_ALPHABET}]"
        )
    return n


def _sorted_complete_multisets(n: int) -> Iterator[tuple[int, ...]]:
    # Budget in units of 2**-(n-1); every length lies in [1, n-1].
    depth = n - 1
    full = 1 << depth

    def descend(prefix: list[int], lo: int, remaining: int, left: int):
        if left == 0:
            if remaining == 0:
                yield tuple(prefix)
            return
        for l in range(lo, depth + 1):
            unit = 1 << (depth - l)
            # all remaining symbols take length >= l, so each costs at most `unit`
            if left * unit < remaining:
                break
            if unit > remaining:
                continue
            if left * 1 > remaining:  # each symbol costs at least one unit
                return
            prefix.append(l)
            yield from descend(prefix, l, remaining - unit, left - 1)
            prefix.pop()

    yield from descend([], 1, full, n)


def _distinct_permutations(items: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Lexicographic distinct permutations (standard next-permutation walk)."""
    a = sorted(items)
    k = len(a)
    while True:
        yield tuple(a)
        i = k - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = k - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = reversed(a[i + 1:])


@functools.lru_cache(maxsize=None)
def complete_code_array(n: int) -> np.ndarray:
    """All complete codes for alphabet size ``n`` as a read-only (A, n) int64 array,
    rows in lexicographic order."""
    n = check_alphabet(n)
    rows = []
    for multiset in _sorted_complete_multisets(n):
        rows.extend(_distinct_permutations(multiset))
    rows.sort()
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), n)
    arr.setflags(write=False)
    return arr


def enumerate_complete_codes(n: int) -> list[CompleteCode]:
    """Every complete code over ``n`` symbols, lexicographically ordered.

    Raises UnsupportedAlphabetError unless 2 <= n <= 8.
    """
    return [CompleteCode(row) for row in complete_code_array(n).tolist()]


def validate_distribution(p, tol: float = PROB_TOL) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValidationError("probability vector must be 1-D with at least two entries")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("probability vector contains non-finite values")
    if np.any(arr < 0):
        raise ValidationError(f"negative probability in {arr.tolist()}")
    if abs(arr.sum() - 1.0) > tol:
        raise ValidationError(f"probabilities sum to {arr.sum()!r}, expected 1")
    return arr


def huffman_lengths(p) -> CompleteCode:
    """Binary Huffman codeword lengths for distribution ``p``.

    Ties on weight are broken by the smallest symbol index contained in each
    subtree, so every party derives the same code. Zero-probability symbols
    stay in the tree and receive finite lengths.

    >>> huffman_lengths([0.25, 0.25, 0.25, 0.25])
    CompleteCode([2, 2, 2, 2])
    """
    weights = validate_distribution(p)
    n = weights.size
    depth = [0] * n
    # heap entries: (weight, smallest symbol in subtree, member symbols)
    heap = [(float(w), i, (i,)) for i, w in enumerate(weights)]
    heapq.heapify(heap)
    while len(heap) > 1:
        w1, k1, left = heapq.heappop(heap)
        w2, k2, right = heapq.heappop(heap)
        for sym in left + right:
            depth[sym] += 1
        # lower-index subtree on the left; only matters for explicit trees
        if k2 < k1:
            left, right = right, left
        heapq.heappush(heap, (w1 + w2, min(k1, k2), left + right))
    return CompleteCode(depth)


@dataclass(frozen=True)
class Codebook:
    code: CompleteCode
    words: tuple[str, ...]

    def encode(self, symbol: int) -> str:
        return self.words[symbol - 1]

    def decode(self, bits: str) -> list[int]:
        lookup = {w: i + 1 for i, w in enumerate(self.words)}
        out, buf = [], ""
        for b in bits:
            buf += b
            if buf in lookup:
                out.append(lookup[buf])
                buf = ""
        if buf:
            raise ValidationError(f"trailing bits {buf!r} do not form a codeword")
        return out


def assign_codewords(code) -> Codebook:
    """Canonical codewords: symbols sorted by (length, index) take consecutive
    counter values, left-shifted whenever the length grows."""
    code = code if isinstance(code, CompleteCode) else CompleteCode(code)
    order = sorted(range(len(code)), key=lambda i: (code[i], i))
    words = [""] * len(code)
    counter = 0
    prev = code[order[0]]
    for rank, i in enumerate(order):
        length = code[i]
        if rank:
            counter = (counter + 1) << (length - prev)
        words[i] = format(counter, f"0{length}b")
        prev = length
    return Codebook(code=code, words=tuple(words))


def is_prefix_free(words: Sequence[str]) -> bool:
    ordered = sorted(words)
    return all(not b.startswith(a) for a, b in zip(ordered, ordered[1:]))
