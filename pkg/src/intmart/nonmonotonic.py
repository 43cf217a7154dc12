"""A monotonic-vs-non-monotonic separation game on rescaled intervals.

Interval I_n (n = 1, 2, ...) guards against the first n listed strategies.
The bounds a_1..a_n cap how much each can be worth inside I_n; I_n is long
enough that the answers to their bets are a minority, so the value at
min(I_n) equals the majority of the rest.  A player allowed to read the
rest of the interval first then never loses its bet.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .adversary import audit_csv
from .core import BitString, Strategy, as_bits, update


class BoundViolation(RuntimeError):
    pass


def nm_bounds(minimum: int, n: int, cap: int | None = None) -> tuple[tuple, tuple]:
    """(a_1..a_n, capped flags) for an interval starting at ``minimum``.

    a_1 = 2^(minimum+1), a_{m+1} = 2^(minimum + m + a_1 + ... + a_m), each
    truncated at ``cap``; later terms are computed from the truncated ones.
    """
    a, capped, total = [], [], 0
    for m in range(1, n + 1):
        exp = minimum + 1 if m == 1 else minimum + (m - 1) + total
        if cap is not None and exp >= cap.bit_length():
            value, hit = cap, True
        else:
            value, hit = 2**exp, False
            if cap is not None and value > cap:
                value, hit = cap, True
        a.append(value)
        capped.append(hit)
        total += value
    return tuple(a), tuple(capped)


@dataclass(frozen=True)
class NmIntervalPlan:
    intervals: tuple  # (min, length), I_1 first
    bounds: tuple  # bounds[n-1] = (a_1, ..., a_n) for I_n
    cap: int | None
    capped: tuple

    @property
    def end(self) -> int:
        lo, ln = self.intervals[-1]
        return lo + ln

    def interval_of(self, x: int) -> int:
        """1-based interval index holding position x."""
        for n, (lo, ln) in enumerate(self.intervals, 1):
            if lo <= x < lo + ln:
                return n
        raise IndexError(f"position {x} beyond plan end {self.end}")


def nm_plan(interval_count: int, cap: int | None = 64) -> NmIntervalPlan:
    if cap is not None and cap < 2:
        raise ValueError("cap must be at least 2")
    if interval_count < 1:
        raise ValueError("need at least one interval")
    intervals, bounds, flags, lo = [], [], [], 0
    for n in range(1, interval_count + 1):
        a, hit = nm_bounds(lo, n, cap)
        length = 2 * (1 + sum(a))
        intervals.append((lo, length))
        bounds.append(a)
        flags.append(hit)
        lo += length
    return NmIntervalPlan(tuple(intervals), tuple(bounds), cap, tuple(flags))


@dataclass
class NmBuild:
    bits: BitString
    determiner: list  # per position: 1-based index of the strategy answered, or 0
    max_capital: list  # per strategy, largest capital seen
    last_bet: list  # per strategy, last position with a positive stake (or None)


def build_a_nm(mono_list: Sequence[Strategy], plan: NmIntervalPlan) -> NmBuild:
    """On I_n, answer the least-indexed of M_1..M_n that bets; otherwise copy A(min(I_n)), which is 0 when unanswered."""
    for m, s in enumerate(mono_list, 1):
        if s.initial > 2**m:
            raise ValueError(f"M_{m} starts with {s.initial} > 2^{m}")
    states = [(s.start, s.initial) for s in mono_list]
    bits, who = [], []
    maxima = [s.initial for s in mono_list]
    last_bet: list = [None] * len(mono_list)
    for n, (lo, length) in enumerate(plan.intervals, 1):
        a = plan.bounds[n - 1]
        bets_here = 0
        head = 0
        for x in range(lo, lo + length):
            bets = [s.bet(st, x, c) for s, (st, c) in zip(mono_list, states)]
            chosen = next((m for m in range(min(n, len(mono_list))) if bets[m][0] > 0), None)
            if chosen is not None:
                bit = 1 - bets[chosen][1]
                bets_here += 1
                who.append(chosen + 1)
            else:
                bit = 0 if x == lo else head
                who.append(0)
            if x == lo:
                head = bit
            bits.append(bit)
            for m, (stake, _) in enumerate(bets):
                if stake > 0:
                    last_bet[m] = x
            states = [
                (s.advance(st, x, c, bit), update(s, c, stake, side, bit))
                for s, (st, c), (stake, side) in zip(mono_list, states, bets)
            ]
            for m, (_, c) in enumerate(states):
                maxima[m] = max(maxima[m], c)
                if m < n and c > a[m]:
                    raise BoundViolation(f"M_{m + 1} reached {c} > a_{m + 1} = {a[m]} in I_{n}")
        if bets_here > sum(a):
            raise BoundViolation(f"{bets_here} answered bets in I_{n} exceed {sum(a)}")
    return NmBuild("".join(map(str, bits)), who, maxima, last_bet)


@dataclass
class NonMonotonicStrategy:
    """Read I_n minus its minimum in ascending order, then stake 1 on the majority at min(I_n)."""

    initial: int = 1

    def play(self, a: BitString, plan: NmIntervalPlan):
        """Yield (interval, min, majority bit, actual bit, capital after) for each interval."""
        a = as_bits(a)
        c = self.initial
        for n, (lo, length) in enumerate(plan.intervals, 1):
            if lo + length > len(a):
                return
            rest = a[lo + 1: lo + length]
            ones = rest.count("1")
            majority = 1 if 2 * ones > len(rest) else 0
            if c >= 1:
                c += 1 if int(a[lo]) == majority else -1
            yield n, lo, majority, int(a[lo]), c


@dataclass
class NmReport:
    rows: list  # (interval, min, majority, nm_capital, mono capitals at interval end...)
    nm_wins: list
    mono_max: list
    bound_ok: bool
    mono_names: list = field(default_factory=list)

    @property
    def header(self) -> tuple:
        return ("interval", "min_position", "majority_bit", "nm_capital", *self.mono_names)

    def to_csv(self) -> str:
        return audit_csv(self.header, self.rows)


def run_nm_game(a: BitString, plan: NmIntervalPlan, nm: NonMonotonicStrategy, mono_list: Sequence[Strategy]) -> NmReport:
    a = as_bits(a)
    states = [(s.start, s.initial) for s in mono_list]
    mono_max = [s.initial for s in mono_list]
    ok = True
    ends = {}
    x = 0
    for n, (lo, length) in enumerate(plan.intervals, 1):
        bound = plan.bounds[n - 1]
        for x in range(lo, min(lo + length, len(a))):
            bit = int(a[x])
            nxt = []
            for m, (s, (st, c)) in enumerate(zip(mono_list, states)):
                stake, side = s.bet(st, x, c)
                c2 = update(s, c, stake, side, bit)
                nxt.append((s.advance(st, x, c, bit), c2))
                mono_max[m] = max(mono_max[m], c2)
                # guarded inside I_n by a_m; otherwise at most doubling per round
                limit = bound[m] if m < n else 2 ** (x + 1 + m + 1)
                ok = ok and c2 <= limit
            states = nxt
        ends[n] = [c for _, c in states]
    rows, wins = [], []
    for n, lo, majority, actual, cap in nm.play(a, plan):
        wins.append(majority == actual)
        rows.append((n, lo, majority, cap, *ends[n]))
    return NmReport(rows, wins, mono_max, ok, [f"mono_{m}" for m in range(1, len(mono_list) + 1)])
