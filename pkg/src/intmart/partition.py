"""Interval partitions of the naturals."""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass


def block_start(k: int) -> int:
    """First position of the length-``k`` block in the standard partition.

    The block holds 2^k intervals of length k, so it starts at
    sum_{j<k} j 2^j = (k - 2) 2^k + 2.
    """
    if k < 1:
        raise ValueError("blocks are indexed from 1")
    return (k - 2) * 2**k + 2


def standard_locate(n: int) -> tuple[int, int, int]:
    """(block length k, interval start, offset in interval) for position n."""
    if n < 0:
        raise ValueError("negative position")
    k = 1
    while block_start(k + 1) <= n:
        k += 1
    r = n - block_start(k)
    start = block_start(k) + (r // k) * k
    return k, start, n - start


@dataclass(frozen=True)
class IntervalPartition:
    """Contiguous intervals ``(start, length)`` covering ``[0, end)``."""

    intervals: tuple
    generator: str = "custom"

    def __post_init__(self):
        pos = 0
        for start, length in self.intervals:
            if start != pos:
                raise ValueError(f"interval at {start} leaves a gap or overlap at {pos}")
            if length < 1:
                raise ValueError(f"interval at {start} has length {length}")
            pos += length

    @classmethod
    def standard(cls, horizon: int) -> "IntervalPartition":
        """2^n intervals of length n for n = 1, 2, ..., until ``horizon`` is covered."""
        out, pos, k = [], 0, 1
        while pos < horizon:
            for _ in range(2**k):
                if pos >= horizon:
                    break
                out.append((pos, k))
                pos += k
            k += 1
        return cls(tuple(out), "standard")

    @classmethod
    def uniform(cls, length: int, horizon: int) -> "IntervalPartition":
        count = -(-horizon // length)
        return cls(tuple((i * length, length) for i in range(count)), f"uniform:{length}")

    @property
    def end(self) -> int:
        if not self.intervals:
            return 0
        start, length = self.intervals[-1]
        return start + length

    @property
    def starts(self) -> tuple:
        return tuple(s for s, _ in self.intervals)

    def index_of(self, n: int) -> int:
        if not 0 <= n < self.end:
            raise IndexError(f"position {n} outside partition [0, {self.end})")
        return bisect_right(self.starts, n) - 1

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)
