"""Sequence constructions that diagonalize against lists of strategies.

All "there exists an extension" searches are budgeted, and every list of
opponents is finite; results are statements about the supplied finite data.
Ties are broken by length, then lexicographically.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import BitString, Strategy, as_bits, update
from .enumeration import SimEnumeration, f_sets, shortest_extension_in_f
from .partition import IntervalPartition
from .strategies import permit_gated, permit_of

__all__ = [
    "IntervalPartition", "SimEnumeration", "f_sets", "defeat_search", "build_one_generic", "l_of",
    "build_b_fv", "build_a_mod6", "build_a_period5", "build_bihyperimmune", "rle_encode", "rle_decode",
]


class InfeasibleInterval(ValueError):
    pass


class HorizonOverflow(RuntimeError):
    def __init__(self, msg, f_values, completed_pairs):
        super().__init__(msg)
        self.f_values = f_values
        self.completed_pairs = completed_pairs


def rle_encode(bits: BitString) -> str:
    """``"1110"`` -> ``"1*3 0*1"``."""
    bits = as_bits(bits)
    runs, i = [], 0
    while i < len(bits):
        j = i
        while j < len(bits) and bits[j] == bits[i]:
            j += 1
        runs.append(f"{bits[i]}*{j - i}")
        i = j
    return " ".join(runs)


def rle_decode(text: str) -> BitString:
    out = []
    for run in text.split():
        bit, _, count = run.partition("*")
        out.append(as_bits(bit) * int(count))
    return "".join(out)


def audit_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# defeat search


@dataclass(frozen=True)
class DefeatSearch:
    found: bool
    tau: BitString
    capital: int
    rounds: int
    nodes: int


def _lower_extension(strategy, tau, state, capital, budget, node_cap):
    """Shortest, lexicographically least extension of tau (<= budget bits) with smaller capital."""
    level = [(tau, state, capital)]
    nodes = 0
    for _ in range(budget):
        nxt = []
        for s, st, c in level:
            n = len(s)
            stake, side = strategy.bet(st, n, c)
            for bit in (0, 1):
                c2 = update(strategy, c, stake, side, bit)
                nodes += 1
                if c2 < capital:
                    return (s + str(bit), strategy.advance(st, n, c, bit), c2), nodes
                nxt.append((s + str(bit), strategy.advance(st, n, c, bit), c2))
            if node_cap is not None and nodes > node_cap:
                raise _NodeCap(nodes)
        level = nxt
    return None, nodes


class _NodeCap(Exception):
    def __init__(self, nodes):
        self.nodes = nodes


def defeat_search(strategy: Strategy, sigma: BitString, budget: int, max_nodes: int | None = None) -> DefeatSearch:
    """Move to a lower-capital extension while one exists within ``budget`` bits.

    Each move lowers an integer capital by at least one, so the loop runs at
    most M(sigma) times.  ``found=False`` means ``max_nodes`` ran out first;
    ``tau`` is then the best string reached.
    """
    sigma = as_bits(sigma)
    state, capital = strategy.state_at(sigma)
    tau, rounds, nodes = sigma, 0, 0
    while True:
        try:
            nxt, used = _lower_extension(
                strategy, tau, state, capital, budget, None if max_nodes is None else max_nodes - nodes
            )
        except _NodeCap as cap:
            return DefeatSearch(False, tau, capital, rounds, nodes + cap.nodes)
        nodes += used
        if nxt is None:
            return DefeatSearch(True, tau, capital, rounds, nodes)
        tau, state, capital = nxt
        rounds += 1


# ---------------------------------------------------------------------------
# the 1-generic construction


@dataclass
class GenericTrace:
    gammas: list
    zetas: list
    cases: list  # "a" or "b" for each stage
    budget_exhausted: list  # stage took case b although an extension exists beyond the budget
    permit_gamma: list = field(default_factory=list)
    permit_zeta: list = field(default_factory=list)
    capital_gamma: list = field(default_factory=list)

    @property
    def prefix(self) -> BitString:
        return self.gammas[-1]


def build_one_generic(enum: SimEnumeration, stages: int, budget: int, initial: int = 12) -> GenericTrace:
    """gamma_{n+1} = zeta_{n+1} + 1^8, zeta_{n+1} the shortest extension of gamma_n in F_n (or gamma_n)."""
    if stages > enum.count:
        raise ValueError(f"{stages} stages need at least as many indices (have {enum.count})")
    M = permit_gated(enum, initial)
    gammas, zetas, cases, exhausted = [""], [""], [], []
    for n in range(stages):
        g = gammas[-1]
        z = shortest_extension_in_f(enum, n, g, budget)
        if z is None:
            cases.append("b")
            exhausted.append(shortest_extension_in_f(enum, n, g, 10**9) is not None)
            z = g
        else:
            cases.append("a")
            exhausted.append(False)
        zetas.append(z)
        gammas.append(z + "1" * 8)
    trace = GenericTrace(gammas, zetas, cases, exhausted)
    trace.permit_gamma = [permit_of(enum, g) for g in gammas]
    trace.permit_zeta = [permit_of(enum, z) for z in zetas]
    trace.capital_gamma = [M.capital(g) for g in gammas]
    return trace


# ---------------------------------------------------------------------------
# finitely-valued diagonalization on the interval partition


def l_of(fv_list: Sequence[Strategy], e: int) -> int:
    """L(e) = sum_{j <= e} (max bet of M_j + 1)."""
    total = 0
    for s in fv_list[: max(e + 1, 0)]:
        if s.max_bet is None:
            raise ValueError(f"{s.kind} has no declared maximum bet")
        total += s.max_bet + 1
    return total


@dataclass
class BuildResult:
    bits: BitString
    audit_header: tuple
    audit: list
    capitals: list  # final capital of each listed strategy
    broke_at: list  # first position at which each listed strategy was broke, or None
    notes: dict = field(default_factory=dict)

    def audit_csv(self) -> str:
        return audit_csv(self.audit_header, self.audit)


def _priority_fill(strats, players, start, length, forced):
    """Fill one interval against the lowest-indexed bettor; position ``forced`` gets a 1."""
    states = [(st, c) for st, c in players]
    out = []
    for n in range(start, start + length):
        bets = [s.bet(st, n, c) for s, (st, c) in zip(strats, states)]
        if n == forced:
            bit = 1
        else:
            bit = 0
            for stake, side in bets:
                if stake:
                    bit = 1 - side
                    break
        out.append(bit)
        states = [
            (s.advance(st, n, c, bit), update(s, c, stake, side, bit))
            for s, (st, c), (stake, side) in zip(strats, states, bets)
        ]
    return out, states


def build_b_fv(fv_list: Sequence[Strategy], partition: IntervalPartition, horizon: int) -> BuildResult:
    """A class-A sequence (a 1 in every interval) defeating finitely-valued strategies.

    Per interval, every fill is tried that answers the lowest-indexed active
    bettor adversarially except for one forced 1 (or none, if the adversarial
    fill already holds a 1).  The fill chosen minimises the gain vector
    (g_0, g_1, ...) lexicographically: the lowest-indexed strategy that can be
    made to lose does lose, and no lower-indexed one profits.
    """
    for s in fv_list:
        if s.max_bet is None:
            raise ValueError(f"{s.kind} is not finitely-valued")
    players = [(s.start, s.initial) for s in fv_list]
    bits: list = []
    audit = []
    broke_at: list = [None] * len(fv_list)
    strats = list(fv_list)
    for idx, (start, length) in enumerate(partition.intervals):
        if start >= horizon:
            break
        if length < 1:
            raise InfeasibleInterval(f"interval {idx} at {start} is empty")
        best = None
        for forced in [None] + list(range(start, start + length)):
            fill, states = _priority_fill(strats, players, start, length, forced)
            if forced is None and 1 not in fill:
                continue
            gains = tuple(c - c0 for (_, c), (_, c0) in zip(states, players))
            if best is None or gains < best[0]:
                best = (gains, forced, fill, states)
        gains, forced, fill, states = best
        target = next((j for j, g in enumerate(gains) if g < 0), "")
        audit.append(
            (idx, start, length, "" if forced is None else forced, target, ";".join(str(g) for g in gains))
        )
        bits.extend(fill)
        players = states
        for j, (s, (_, c)) in enumerate(zip(fv_list, players)):
            if broke_at[j] is None and c < max(s.wagers.positive_minimum, 1):
                broke_at[j] = start + length
    return BuildResult(
        "".join(map(str, bits)),
        ("interval", "start", "length", "forced_one", "target", "gains"),
        audit,
        [c for _, c in players],
        broke_at,
        {"L": [l_of(fv_list, e) for e in range(len(fv_list))]},
    )


# ---------------------------------------------------------------------------
# single-valued games


def _sequential_game(gamblers, horizon, period, fixed: dict, solvent_floor=1):
    """Shared loop for the mod-6 and period-5 games.

    ``fixed`` maps residues mod ``period`` to forced bits; other positions
    oppose the current target, the first listed gambler not yet broke.
    """
    states = [(g.start, g.initial) for g in gamblers]
    broke_at = [None] * len(gamblers)
    target = 0
    bits = []
    audit = []
    block_start_caps = [c for _, c in states]
    block_target = None
    for n in range(horizon):
        while target < len(gamblers) and states[target][1] < solvent_floor:
            target += 1
        if n % period == 0:
            block_target = target if target < len(gamblers) else ""
        bets = [g.bet(st, n, c) for g, (st, c) in zip(gamblers, states)]
        r = n % period
        if r in fixed:
            bit = fixed[r]
        elif target < len(gamblers):
            stake, side = bets[target]
            bit = 1 - side if stake else 0
        else:
            bit = 0
        bits.append(bit)
        states = [
            (g.advance(st, n, c, bit), update(g, c, stake, side, bit))
            for g, (st, c), (stake, side) in zip(gamblers, states, bets)
        ]
        for j, (_, c) in enumerate(states):
            if broke_at[j] is None and c < solvent_floor:
                broke_at[j] = n + 1
        if r == period - 1 or n == horizon - 1:
            caps = [c for _, c in states]
            first = n - r
            one = next((first + k for k in fixed if fixed[k] == 1 and first + k <= n), "")
            audit.append((n // period, one, block_target,
                          ";".join(str(c - c0) for c, c0 in zip(caps, block_start_caps))))
            block_start_caps = caps
    return "".join(map(str, bits)), broke_at, [c for _, c in states], audit


def _require_valued(gamblers, allowed):
    for g in gamblers:
        if g.wagers is None or g.wagers.values is None or not g.wagers.values <= allowed:
            raise ValueError(f"{g!r} is not {sorted(allowed)}-valued")


def build_a_mod6(gamblers: Sequence[Strategy], horizon: int) -> BuildResult:
    """A(n) = 1 for n = 0 mod 6, 0 for n = 3 mod 6, adversarial elsewhere."""
    _require_valued(gamblers, {1})
    bits, broke, caps, audit = _sequential_game(gamblers, horizon, 6, {0: 1, 3: 0})
    return BuildResult(bits, ("block", "forced_one", "target", "capital_deltas"), audit, caps, broke)


def build_a_period5(sv_list: Sequence[Strategy], horizon: int) -> BuildResult:
    """A(n) = 0 for n = 0, 1 mod 5; the last three of each block are adversarial."""
    _require_valued(sv_list, {1})
    bits, broke, caps, audit = _sequential_game(sv_list, horizon, 5, {0: 0, 1: 0})
    return BuildResult(bits, ("block", "forced_one", "target", "capital_deltas"), audit, caps, broke)


# ---------------------------------------------------------------------------
# bi-hyperimmune construction


@dataclass
class BiHyperimmune:
    f: list
    bits: BitString
    pairs: int


def build_bihyperimmune(funcs: Sequence[Callable[[int], int]], pair_count: int, limit: int = 10**6) -> BiHyperimmune:
    """f(n+1) = max(f(n)+1, max_{e<n} funcs[e](f(n)) + 3); A = union of [f(2n), f(2n+1)).

    Raises HorizonOverflow (carrying the completed pairs) if f passes ``limit``.
    """
    f = [0]
    for n in range(2 * pair_count):
        x = f[-1]
        nxt = x + 1
        for e in range(min(n, len(funcs))):
            nxt = max(nxt, int(funcs[e](x)) + 3)
        if nxt > limit:
            done = (len(f) - 1) // 2
            raise HorizonOverflow(f"f({n + 1}) = {nxt} exceeds {limit}", f, done)
        f.append(nxt)
    bits = []
    for n in range(2 * pair_count):
        bits.append(("1" if n % 2 == 0 else "0") * (f[n + 1] - f[n]))
    return BiHyperimmune(f, "".join(bits), pair_count)
