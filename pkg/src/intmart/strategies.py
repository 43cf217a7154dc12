"""Catalog of concrete betting strategies.

Every constructor returns a :class:`~intmart.core.Strategy` together with the
wager set it is meant to respect.  ``parse_strategy`` / ``format_strategy``
map strategies to and from one-line ``key=value`` specs such as::

    kind=copy_previous initial=10 invert=true
"""
from __future__ import annotations

import shlex
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from .bernoulli import BernoulliParams
from .core import EXACT, LOG, BitString, Strategy, WagerSet, as_bits
from .enumeration import SimEnumeration, in_f
from .partition import IntervalPartition, standard_locate


class BadParams(ValueError):
    pass


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise BadParams(msg)


def _fit(wagers: WagerSet, desired: int, capital) -> int:
    """``desired`` if affordable, else the largest allowed wager that is."""
    if desired <= capital:
        return desired
    w = wagers.largest_at_most(capital)
    return 0 if w is None else w


def _no_state(state, n, capital, bit):
    return None


# ---------------------------------------------------------------------------
# constructors


def abstain(initial=1) -> Strategy:
    _require(initial >= 0, "initial capital must be >= 0")
    return Strategy(
        "abstain", initial, None, lambda s, n, c: (0, 1), _no_state,
        wagers=WagerSet.of(0), params={"initial": initial},
    )


def proportional_half(initial=1) -> Strategy:
    """Bet half the current capital on 1: M(s0) = M(s)/2, M(s1) = 3M(s)/2."""
    _require(initial >= 0, "initial capital must be >= 0")
    return Strategy(
        "proportional_half", Fraction(initial), None,
        lambda s, n, c: (Fraction(c) / 2, 1), _no_state,
        params={"initial": initial},
    )


def interval_doubling(initial=1, partition: IntervalPartition | None = None) -> Strategy:
    """Inside each interval bet 1, 2, 4, ... on 1 until the first win, then sit out.

    A stake the gambler cannot cover is cut to the whole capital.
    """
    _require(initial >= 0 and int(initial) == initial, "initial capital must be a non-negative integer")
    if partition is None:
        def interval_end(n):
            k, start, _ = standard_locate(n)
            return start + k
        pname = "standard"
    else:
        def interval_end(n):
            start, length = partition.intervals[partition.index_of(n)]
            return start + length
        pname = partition.generator

    def current(state, n):
        end, losses, won = state
        if n >= end:
            return interval_end(n), 0, False
        return state

    def bet(state, n, capital):
        _, losses, won = current(state, n)
        if won:
            return 0, 1
        return min(2**losses, capital), 1

    def advance(state, n, capital, bit):
        end, losses, won = current(state, n)
        if won:
            return end, losses, won
        return (end, losses, True) if bit == 1 else (end, losses + 1, False)

    return Strategy(
        "interval_doubling", int(initial), (0, 0, False), bet, advance,
        wagers=WagerSet.integers(), params={"initial": int(initial), "partition": pname},
    )


def copy_previous(initial=1, invert: bool = False) -> Strategy:
    """Bet $1 that the next bit repeats the last one (or differs, if ``invert``).

    The first round has no predecessor: it bets on 1, or on 0 when inverted.
    """
    _require(initial >= 0 and int(initial) == initial, "initial capital must be a non-negative integer")

    def bet(prev, n, capital):
        side = 1 if prev is None else prev
        if invert:
            side = 1 - side
        return (1 if capital >= 1 else 0), side

    return Strategy(
        "copy_previous", int(initial), None, bet, lambda s, n, c, bit: bit,
        wagers=WagerSet.of(1), params={"initial": int(initial), "invert": bool(invert)},
    )


def period5_one_two(initial=2) -> Strategy:
    """$2 on 0 at positions 0, 1 (mod 5); $1 on 1 at the other three."""
    _require(initial >= 0 and int(initial) == initial, "initial capital must be a non-negative integer")
    wagers = WagerSet.of(1, 2)

    def bet(state, n, capital):
        if n % 5 < 2:
            return _fit(wagers, 2, capital), 0
        return _fit(wagers, 1, capital), 1

    return Strategy(
        "period5", int(initial), None, bet, _no_state,
        wagers=wagers, params={"initial": int(initial)},
    )


def subset_bettor(
    stake: int = 1,
    initial=1,
    side: int = 1,
    members: Iterable[int] | None = None,
    period: int | None = None,
    offset: int = 0,
) -> Strategy:
    """Bet ``stake`` on ``side`` at members of B, nothing elsewhere.

    B is an explicit increasing list or the progression ``offset + period*k``.
    """
    _require(stake >= 1 and int(stake) == stake, "stake must be an integer >= 1")
    _require(side in (0, 1), "side must be 0 or 1")
    params: dict[str, Any] = {"initial": int(initial), "stake": int(stake), "side": side}
    if members is not None:
        members = tuple(int(m) for m in members)
        _require(all(b > a for a, b in zip(members, members[1:])), "members must be strictly increasing")
        _require(not members or members[0] >= 0, "members must be non-negative")
        member_set = frozenset(members)
        contains = member_set.__contains__
        params["members"] = members
    else:
        _require(period is not None and period >= 1, "need members or period >= 1")
        _require(0 <= offset < period, "offset must lie in [0, period)")
        contains = lambda n: n % period == offset
        params.update(period=int(period), offset=int(offset))
    stake = int(stake)

    def bet(state, n, capital):
        return (stake if contains(n) and capital >= stake else 0), side

    return Strategy(
        "subset", int(initial), None, bet, _no_state,
        wagers=WagerSet.of(0, stake), params=params,
    )


def _permit_start(enum: SimEnumeration):
    return "", 4, frozenset(e for e in range(enum.count) if in_f(enum, e, ""))


def _permit_step(enum: SimEnumeration, state, bit: int):
    prefix, permit, hit = state
    prefix = prefix + str(bit)
    fresh = [e for e in range(enum.count) if e not in hit and in_f(enum, e, prefix)]
    if fresh:
        permit = min([permit + 1] + [4 * e + 4 for e in fresh])
        hit = hit | frozenset(fresh)
    else:
        permit += 1
    return prefix, permit, hit


def permit_of(enum: SimEnumeration, sigma: BitString) -> int:
    """permit(s): 4 at the root, +1 per bit, dropping to 4e+4 on an F_e^min hit."""
    state = _permit_start(enum)
    for ch in as_bits(sigma):
        state = _permit_step(enum, state, int(ch))
    return state[1]


def permit_gated(enum: SimEnumeration, initial=12, enum_spec: str | None = None) -> Strategy:
    """Bet $2 on 1 whenever capital >= permit, else abstain."""
    _require(initial >= 0 and int(initial) == initial, "initial capital must be a non-negative integer")

    def bet(state, n, capital):
        return (2 if capital >= state[1] else 0), 1

    return Strategy(
        "permit_gated", int(initial), _permit_start(enum), bet,
        lambda state, n, capital, bit: _permit_step(enum, state, bit),
        wagers=WagerSet.of(0, 2),
        params={"initial": int(initial), "enum": enum_spec or "json:" + enum.to_json()},
    )


def bernoulli_optimal(params: BernoulliParams | None = None) -> Strategy:
    """M(s1) = (1 + 2 d_n) M(s), M(s0) = (1 - 2 d_n) M(s), tracked as ln M."""
    params = params or BernoulliParams()

    def bet(state, n, capital):
        d = params.delta(n)
        return (2 * d, 1) if d >= 0 else (-2 * d, 0)

    return Strategy(
        "bernoulli_optimal", 0.0, None, bet, _no_state, flavor=LOG,
        params={"schedule": params.spec},
    )


def random_finite(seed: int, initial=4, values=(0, 1, 2, 3), window: int = 2, period: int = 3) -> Strategy:
    """Seeded finitely-valued strategy for desk-scale experiments.

    Stake and side are read from a fixed random table indexed by
    ``(n mod period, last `window` bits)``; unaffordable stakes are cut to
    the largest allowed wager.
    """
    values = tuple(sorted(int(v) for v in values))
    _require(values and values[0] >= 0, "values must be non-negative integers")
    _require(window >= 0 and period >= 1, "window >= 0 and period >= 1")
    wagers = WagerSet.of(*values)
    rng = np.random.default_rng(seed)
    stakes = [[values[i] for i in row] for row in rng.integers(0, len(values), size=(period, 2**window)).tolist()]
    sides = rng.integers(0, 2, size=(period, 2**window)).tolist()
    mask = 2**window - 1

    def bet(hist, n, capital):
        r = n % period
        return _fit(wagers, stakes[r][hist], capital), sides[r][hist]

    def advance(hist, n, capital, bit):
        return ((hist << 1) | bit) & mask

    return Strategy(
        "random_finite", int(initial), 0, bet, advance, wagers=wagers,
        params={"seed": int(seed), "initial": int(initial), "values": values, "window": window, "period": period},
    )


def trim_to_sqrt(strategy: Strategy, n0: int) -> Strategy:
    """Freeze ``strategy`` the first time, at some |t| >= n0, a child could exceed sqrt|t|.

    Capital agrees with the original on valid strings and stays at the last
    valid prefix otherwise.
    """
    _require(strategy.flavor == EXACT, "trim needs an exact-flavor strategy")
    _require(n0 >= 0, "n0 must be >= 0")

    def breaks(n, capital, stake):
        return n >= n0 and (capital + stake) ** 2 > n

    def bet(state, n, capital):
        inner, frozen = state
        if frozen:
            return 0, 1
        stake, side = strategy.bet(inner, n, capital)
        return (0, side) if breaks(n, capital, stake) else (stake, side)

    def advance(state, n, capital, bit):
        inner, frozen = state
        if frozen:
            return state
        stake, _ = strategy.bet(inner, n, capital)
        if breaks(n, capital, stake):
            return None, True
        return strategy.advance(inner, n, capital, bit), False

    params = dict(strategy.params)
    params["trim"] = int(n0)
    return Strategy(
        strategy.kind, strategy.initial, (strategy.start, False), bet, advance,
        wagers=strategy.wagers, params=params,
    )


def is_frozen(strategy: Strategy, state) -> bool:
    """True when a trimmed strategy has stopped for good."""
    return "trim" in strategy.params and state[1]


# ---------------------------------------------------------------------------
# text specs


def _bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes"):
        return True
    if v.lower() in ("0", "false", "no"):
        return False
    raise BadParams(f"not a boolean: {v!r}")


def _ints(v: str) -> tuple:
    return tuple(int(x) for x in v.split(",") if x)


def _number(v: str):
    f = Fraction(v)
    return int(f) if f.denominator == 1 else f


def parse_enum(spec: str) -> SimEnumeration:
    """``empty:N``, ``random:SEED:COUNT[:MAX_STRINGS]``, ``json:<list>`` or ``@path``."""
    head, _, rest = spec.partition(":")
    if head == "empty":
        return SimEnumeration.empty(int(rest))
    if head == "random":
        parts = [int(p) for p in rest.split(":")]
        seed, count = parts[0], parts[1]
        max_strings = parts[2] if len(parts) > 2 else 32
        return SimEnumeration.random(seed, count=count, max_strings=max_strings)
    if head == "json":
        return SimEnumeration.from_json(rest)
    if spec.startswith("@"):
        with open(spec[1:]) as fh:
            return SimEnumeration.from_json(fh.read())
    raise BadParams(f"unknown enumeration spec {spec!r}")


def parse_partition(spec: str) -> IntervalPartition | None:
    if spec == "standard":
        return None
    head, _, rest = spec.partition(":")
    if head == "uniform":
        length, _, horizon = rest.partition(":")
        return IntervalPartition.uniform(int(length), int(horizon or 10**6))
    raise BadParams(f"unknown partition {spec!r}")


_KNOWN = {
    "abstain": {"initial"},
    "proportional_half": {"initial"},
    "interval_doubling": {"initial", "partition"},
    "copy_previous": {"initial", "invert"},
    "period5": {"initial"},
    "subset": {"initial", "stake", "side", "members", "period", "offset"},
    "permit_gated": {"initial", "enum"},
    "bernoulli_optimal": {"schedule"},
    "random_finite": {"seed", "initial", "values", "window", "period"},
}


def parse_strategy(text: str) -> Strategy:
    """Build a strategy from ``kind=... key=value ...``; ``trim=N`` wraps it."""
    try:
        fields = dict(tok.split("=", 1) for tok in shlex.split(text))
    except ValueError as exc:
        raise BadParams(f"malformed spec {text!r}") from exc
    kind = fields.pop("kind", None)
    _require(kind in _KNOWN, f"unknown strategy kind {kind!r}")
    trim = fields.pop("trim", None)
    unknown = set(fields) - _KNOWN[kind]
    _require(not unknown, f"unknown keys for {kind}: {sorted(unknown)}")
    f = fields
    try:
        if kind == "abstain":
            s = abstain(_number(f.get("initial", "1")))
        elif kind == "proportional_half":
            s = proportional_half(_number(f.get("initial", "1")))
        elif kind == "interval_doubling":
            spec = f.get("partition", "standard")
            s = interval_doubling(int(f.get("initial", "1")), parse_partition(spec))
            s.params["partition"] = spec
        elif kind == "copy_previous":
            s = copy_previous(int(f.get("initial", "1")), _bool(f.get("invert", "false")))
        elif kind == "period5":
            s = period5_one_two(int(f.get("initial", "2")))
        elif kind == "subset":
            kw = dict(stake=int(f.get("stake", "1")), initial=int(f.get("initial", "1")), side=int(f.get("side", "1")))
            if "members" in f:
                s = subset_bettor(members=_ints(f["members"]), **kw)
            else:
                s = subset_bettor(period=int(f.get("period", "1")), offset=int(f.get("offset", "0")), **kw)
        elif kind == "permit_gated":
            spec = f.get("enum", "empty:0")
            s = permit_gated(parse_enum(spec), int(f.get("initial", "12")), enum_spec=spec)
        elif kind == "bernoulli_optimal":
            s = bernoulli_optimal(BernoulliParams.parse(f.get("schedule", "standard")))
        else:
            s = random_finite(
                int(f["seed"]), int(f.get("initial", "4")), _ints(f.get("values", "0,1,2,3")),
                int(f.get("window", "2")), int(f.get("period", "3")),
            )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, BadParams):
            raise
        raise BadParams(f"bad parameters in {text!r}: {exc}") from exc
    if trim is not None:
        s = trim_to_sqrt(s, int(trim))
    return s


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def format_strategy(strategy: Strategy) -> str:
    parts = [f"kind={strategy.kind}"]
    for k, v in strategy.params.items():
        parts.append(shlex.quote(f"{k}={_fmt(v)}"))
    return " ".join(parts)


def load_strategies(text: str) -> list[Strategy]:
    """One spec per line; blank lines and ``#`` comments are skipped."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_strategy(line))
    return out


def catalog(enum: SimEnumeration | None = None) -> list[Strategy]:
    """One instance of every strategy kind, used by the validators."""
    enum = enum or SimEnumeration.random(0, count=4, max_strings=8, max_len=8, max_stage=12)
    return [
        abstain(5),
        proportional_half(1),
        interval_doubling(1),
        copy_previous(3),
        copy_previous(3, invert=True),
        period5_one_two(2),
        subset_bettor(stake=2, initial=3, period=3, offset=0),
        permit_gated(enum),
        bernoulli_optimal(BernoulliParams()),
        random_finite(1, initial=4),
        trim_to_sqrt(interval_doubling(1), 4),
    ]
