"""Exact betting engine.

A strategy is a deterministic machine that, given the prefix seen so far,
names a stake and the side it is placed on.  The capital function it induces
satisfies ``M(s) = (M(s0) + M(s1)) / 2`` by construction; the checkers below
exist to validate adapters and to catch strategies that overdraw.

Bit strings are plain ``str`` objects over ``"01"``.  Exact capitals are
``int`` or ``fractions.Fraction``; log-flavor capitals are floats holding
``ln M``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence, Union

EXACT = "exact"
LOG = "log"

Number = Union[int, Fraction]
BitString = str

REL_TOL = 1e-9


class StakeExceedsCapital(ValueError):
    pass


class SourceExhausted(RuntimeError):
    pass


def as_bits(x: Union[str, Iterable[int]]) -> BitString:
    """Normalise ``x`` to a ``"01"`` string, rejecting anything else."""
    s = x if isinstance(x, str) else "".join(str(int(b)) for b in x)
    if s.strip("01"):
        raise ValueError(f"not a bit string: {s[:40]!r}")
    return s


def is_prefix(a: BitString, b: BitString) -> bool:
    return b.startswith(a)


def flip(bit: int) -> int:
    return 1 - bit


# ---------------------------------------------------------------------------
# wager sets


@dataclass(frozen=True)
class WagerSet:
    """Allowed wagers.  ``values=None`` means every non-negative integer."""

    values: frozenset | None = None

    @classmethod
    def of(cls, *values: int) -> "WagerSet":
        if not values or any(int(v) != v or v < 0 for v in values):
            raise ValueError(f"wagers must be non-negative integers: {values}")
        return cls(frozenset(int(v) for v in values))

    @classmethod
    def integers(cls) -> "WagerSet":
        return cls(None)

    @property
    def minimum(self) -> int:
        return 0 if self.values is None else min(self.values)

    @property
    def maximum(self) -> int | None:
        return None if self.values is None else max(self.values)

    @property
    def positive_minimum(self) -> int:
        """Smallest non-zero wager; the abstain threshold for capital."""
        if self.values is None:
            return 1
        pos = [v for v in self.values if v > 0]
        return min(pos) if pos else 0

    def __contains__(self, w: Any) -> bool:
        if w < 0 or Fraction(w).denominator != 1:
            return False
        return self.values is None or int(w) in self.values

    def largest_at_most(self, cap: Number) -> int | None:
        """Largest allowed wager not exceeding ``cap`` (None if none fits)."""
        if self.values is None:
            return int(math.floor(cap)) if cap >= 0 else None
        fits = [v for v in self.values if v <= cap]
        return max(fits) if fits else None

    def __str__(self) -> str:
        if self.values is None:
            return "N"
        return ",".join(str(v) for v in sorted(self.values))


# ---------------------------------------------------------------------------
# strategies


BetFn = Callable[[Any, int, Any], "tuple[Any, int]"]
AdvanceFn = Callable[[Any, int, Any, int], Any]


@dataclass(frozen=True, eq=False)
class Strategy:
    """A betting rule packaged as a machine over prefixes.

    ``bet(state, n, capital)`` returns ``(stake, side)`` for position ``n``;
    ``advance(state, n, capital, bit)`` returns the state after seeing
    ``bit`` at ``n``.  Both must be pure.  For the log flavor, ``capital`` is
    ``ln M`` and ``stake`` is the fraction of capital wagered.
    """

    kind: str
    initial: Any
    start: Any
    bet: BetFn
    advance: AdvanceFn
    flavor: str = EXACT
    wagers: WagerSet | None = None
    params: Mapping[str, Any] = field(default_factory=dict)

    @property
    def max_bet(self) -> int | None:
        return None if self.wagers is None else self.wagers.maximum

    def state_at(self, prefix: BitString) -> tuple[Any, Any]:
        state, capital = self.start, self.initial
        for n, ch in enumerate(prefix):
            stake, side = self.bet(state, n, capital)
            bit = int(ch)
            state, capital = self.advance(state, n, capital, bit), update(self, capital, stake, side, bit)
        return state, capital

    def rule(self, prefix: BitString) -> tuple[Any, int]:
        """(stake, side) at ``prefix``; the pure prefix-rule view of the machine."""
        state, capital = self.state_at(prefix)
        return self.bet(state, len(prefix), capital)

    def capital(self, prefix: BitString) -> Any:
        return self.state_at(prefix)[1]

    def __repr__(self) -> str:
        return f"Strategy({self.kind}, {dict(self.params)})"


def update(strategy: Strategy, capital: Any, stake: Any, side: int, bit: int) -> Any:
    """Capital after one round.  Raises StakeExceedsCapital on overdraw."""
    if strategy.flavor == EXACT:
        if stake < 0 or stake > capital:
            raise StakeExceedsCapital(f"stake {stake} with capital {capital}")
        return capital + stake if bit == side else capital - stake
    if not 0 <= stake <= 1:
        raise StakeExceedsCapital(f"stake fraction {stake}")
    if stake == 0:
        return capital
    if bit == side:
        return capital + math.log1p(stake)
    return capital + math.log1p(-stake) if stake < 1 else -math.inf


@dataclass(frozen=True)
class Step:
    n: int
    capital: Any
    stake: Any
    side: int
    bit: int
    after: Any


def walk(strategy: Strategy, bits: Iterable[int]) -> Iterator[Step]:
    state, capital = strategy.start, strategy.initial
    for n, bit in enumerate(bits):
        bit = int(bit)
        stake, side = strategy.bet(state, n, capital)
        after = update(strategy, capital, stake, side, bit)
        yield Step(n, capital, stake, side, bit, after)
        state = strategy.advance(state, n, capital, bit)
        capital = after


def evaluate_capital(strategy: Strategy, x: BitString) -> list:
    """Capitals M(x|0), ..., M(x||x|)."""
    trace = [strategy.initial]
    trace.extend(step.after for step in walk(strategy, as_bits(x)))
    return trace


def capital_tree(strategy: Strategy, depth: int) -> Iterator[tuple[BitString, Any, Any]]:
    """Yield ``(sigma, capital, (stake, side) | None)`` for every |sigma| <= depth."""
    stack = [("", strategy.start, strategy.initial)]
    while stack:
        sigma, state, capital = stack.pop()
        n = len(sigma)
        if n == depth:
            yield sigma, capital, None
            continue
        stake, side = strategy.bet(state, n, capital)
        yield sigma, capital, (stake, side)
        for bit in (1, 0):
            stack.append(
                (sigma + str(bit), strategy.advance(state, n, capital, bit), update(strategy, capital, stake, side, bit))
            )


# ---------------------------------------------------------------------------
# checkers


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: BitString | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _capitals(obj: Union[Strategy, Callable[[BitString], Any]], depth: int) -> dict:
    if isinstance(obj, Strategy):
        return {s: c for s, c, _ in capital_tree(obj, depth)}
    table = {}
    for n in range(depth + 1):
        for k in range(2**n):
            s = format(k, f"0{n}b") if n else ""
            table[s] = obj(s)
    return table


def _by_length(strings: Iterable[BitString]) -> list:
    return sorted(strings, key=lambda s: (len(s), s))


def check_fairness(obj: Union[Strategy, Callable[[BitString], Any]], depth: int, log: bool | None = None) -> CheckResult:
    """Check M(s) = (M(s0)+M(s1))/2 for every |s| < depth.

    ``obj`` is a Strategy or a raw capital function on bit strings (the
    adapter case).  Log-flavor capitals are compared at relative 1e-9.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if log is None:
        log = isinstance(obj, Strategy) and obj.flavor == LOG
    M = _capitals(obj, depth)
    for s in _by_length(x for x in M if len(x) < depth):
        m, m0, m1 = M[s], M[s + "0"], M[s + "1"]
        if log:
            ok = abs((math.exp(m0 - m) + math.exp(m1 - m)) / 2 - 1) <= REL_TOL
        else:
            ok = Fraction(m) * 2 == Fraction(m0) + Fraction(m1) and min(m, m0, m1) >= 0
        if not ok:
            return CheckResult(False, s, f"M={m} M0={m0} M1={m1}")
    return CheckResult(True)


def check_v_valued(strategy: Union[Strategy, Callable[[BitString], Any]], v: WagerSet, depth: int) -> CheckResult:
    """Check the V-valued clauses on every |s| < depth.

    Capital below min(V) forces abstention; otherwise the wager
    |M(sa) - M(s)| must lie in V.
    """
    if isinstance(strategy, Strategy) and strategy.flavor != EXACT:
        raise ValueError("V-valued check needs an exact-flavor strategy")
    M = _capitals(strategy, depth)
    threshold = v.minimum
    for s in _by_length(x for x in M if len(x) < depth):
        m = M[s]
        for a in "01":
            w = abs(M[s + a] - m)
            if m < threshold:
                ok = w == 0
            else:
                ok = w in v
            if not ok:
                return CheckResult(False, s, f"capital {m}, wager {w} not allowed by V={v}")
    return CheckResult(True)


def mean_preservation(strategy: Strategy, n: int) -> Any:
    """Sum over |s| = n of 2^-n M(s); equals M(empty) for a martingale."""
    if not 0 <= n <= 16:
        raise ValueError("exhaustive enumeration is capped at n <= 16")
    leaves = [c for s, c, _ in capital_tree(strategy, n) if len(s) == n]
    if strategy.flavor == LOG:
        return math.fsum(math.exp(c) for c in leaves) / 2**n
    return Fraction(sum(Fraction(c) for c in leaves), 2**n)


# ---------------------------------------------------------------------------
# success criteria


@dataclass(frozen=True)
class OrderFunction:
    """Non-decreasing integer order: a named closed form or an explicit table."""

    name: str = "log2"
    table: tuple = ()

    def __post_init__(self):
        if self.name == "table":
            if any(b < a for a, b in zip(self.table, self.table[1:])):
                raise ValueError("order table must be non-decreasing")
        elif self.name not in _ORDERS:
            raise ValueError(f"unknown order {self.name!r}")

    def __call__(self, n: int) -> int:
        if self.name == "table":
            if n >= len(self.table):
                raise ValueError(f"order table undefined at {n}")
            return self.table[n]
        return _ORDERS[self.name](n)


_ORDERS = {
    "log2": lambda n: n.bit_length(),
    "sqrt": math.isqrt,
    "identity": lambda n: n,
    "loglog": lambda n: max(0, math.floor(math.log(math.log(n)))) if n > 2 else 0,
}


@dataclass(frozen=True)
class PlainAtHorizon:
    threshold: Number


@dataclass(frozen=True)
class SchnorrOrder:
    order: OrderFunction
    count: int = 1


@dataclass(frozen=True)
class KurtzOrder:
    order: OrderFunction


SuccessCriterion = Union[PlainAtHorizon, SchnorrOrder, KurtzOrder]


def _as_real(value: Any, flavor: str) -> float:
    return math.exp(value) if flavor == LOG else value


def judge(trace: Sequence, flavor: str, criterion: SuccessCriterion) -> bool:
    if isinstance(criterion, PlainAtHorizon):
        return max(_as_real(c, flavor) for c in trace) >= criterion.threshold
    hits = [criterion.order(n) < _as_real(c, flavor) for n, c in enumerate(trace)]
    if isinstance(criterion, SchnorrOrder):
        return sum(hits) >= criterion.count
    if isinstance(criterion, KurtzOrder):
        return all(hits)
    raise TypeError(f"unknown criterion {criterion!r}")


@dataclass
class GameOutcome:
    trace: list
    flavor: str
    success: bool
    criterion: SuccessCriterion
    broke_at: int | None = None
    bits: BitString = ""

    @property
    def final(self) -> Any:
        return self.trace[-1]


def _broke_at(trace: Sequence, strategy: Strategy) -> int | None:
    if strategy.flavor == LOG:
        floor = -math.inf
        below = [c <= floor for c in trace]
    else:
        floor = strategy.wagers.positive_minimum if strategy.wagers is not None else 0
        below = [c < floor if floor else c == 0 for c in trace]
    idx = None
    for i in range(len(trace) - 1, -1, -1):
        if not below[i]:
            break
        idx = i
    return idx


def take_bits(source: Union[str, Iterable[int]], horizon: int) -> BitString:
    if isinstance(source, str):
        bits = as_bits(source[:horizon])
    else:
        bits = as_bits(islice(iter(source), horizon))
    if len(bits) < horizon:
        raise SourceExhausted(f"source gave {len(bits)} of {horizon} bits")
    return bits


def run_game(strategy: Strategy, source: Union[str, Iterable[int]], horizon: int, criterion: SuccessCriterion) -> GameOutcome:
    """Play ``horizon`` rounds and judge success by a finite-horizon surrogate."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    bits = take_bits(source, horizon)
    trace = evaluate_capital(strategy, bits)
    return GameOutcome(
        trace=trace,
        flavor=strategy.flavor,
        success=judge(trace, strategy.flavor, criterion),
        criterion=criterion,
        broke_at=_broke_at(trace, strategy),
        bits=bits,
    )


def periodic(pattern: str) -> Iterator[int]:
    pattern = as_bits(pattern)
    while True:
        for ch in pattern:
            yield int(ch)


# ---------------------------------------------------------------------------
# sequence properties


@dataclass(frozen=True)
class LlnReport:
    deviation: float
    passed: bool
    window_start: int
    tolerance: float


def check_lln(x: BitString, tolerance: float = 0.05, window: float = 0.25) -> LlnReport:
    """max |#zeros(x|n) - n/2| / n over the last ``window`` fraction of prefixes."""
    x = as_bits(x)
    if not x:
        raise ValueError("need at least one bit")
    N = len(x)
    start = max(1, math.ceil((1 - window) * N))
    zeros = x[:start].count("0")
    worst = abs(zeros - start / 2) / start
    for n in range(start + 1, N + 1):
        zeros += x[n - 1] == "0"
        worst = max(worst, abs(zeros - n / 2) / n)
    return LlnReport(worst, worst <= tolerance, start, tolerance)


def check_bi_immune_witness(x: BitString, positions: Sequence[int], bit: int) -> bool:
    """True iff ``x`` equals ``bit`` on every listed position (refutes bi-immunity)."""
    if any(b <= a for a, b in zip(positions, positions[1:])):
        raise ValueError("positions must be strictly increasing")
    if positions and (positions[0] < 0 or positions[-1] >= len(x)):
        raise ValueError("positions out of range")
    return all(x[p] == str(bit) for p in positions)


# ---------------------------------------------------------------------------
# serialisation


TRACE_COLUMNS = ("n", "capital_exact_num", "capital_exact_den", "log_capital")


def trace_rows(trace: Sequence, flavor: str) -> Iterator[tuple]:
    for n, c in enumerate(trace):
        if flavor == EXACT:
            c = Fraction(c)
            yield n, c.numerator, c.denominator, ""
        else:
            yield n, "", "", repr(float(c))


def trace_csv(trace: Sequence, flavor: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    w.writerows(trace_rows(trace, flavor))
    return buf.getvalue()


def read_trace_csv(text: str) -> tuple[list, str]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and rows[0]["log_capital"] == "":
        return [Fraction(int(r["capital_exact_num"]), int(r["capital_exact_den"])) for r in rows], EXACT
    return [float(r["log_capital"]) for r in rows], LOG
