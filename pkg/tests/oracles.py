"""Reference computations written straight from the definitions.

Nothing here imports the package's evaluators; the strategy objects are only
used through their raw ``bet``/``advance`` callables.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def all_strings(n):
    return ["".join(p) for p in itertools.product("01", repeat=n)]


def raw_capital(strategy, sigma):
    """Capital after sigma, starting from the raw rule, no overdraft checks."""
    state, c = strategy.start, strategy.initial
    for n, ch in enumerate(sigma):
        stake, side = strategy.bet(state, n, c)
        bit = int(ch)
        state = strategy.advance(state, n, c, bit)
        c = c + stake if bit == side else c - stake
    return c


def copy_previous_trace(initial, invert, x):
    out, c, prev = [initial], initial, None
    for ch in x:
        want = 1 if prev is None else prev
        if invert:
            want = 1 - want
        if c >= 1:
            c += 1 if int(ch) == want else -1
        out.append(c)
        prev = int(ch)
    return out


def standard_intervals(limit):
    """(start, length) of the standard partition, generated block by block."""
    pos, k = 0, 1
    while pos < limit:
        for _ in range(2**k):
            yield pos, k
            pos += k
        k += 1


def doubling_trace(initial, x):
    """Within each standard interval: bet 1, 2, 4, ... on 1 until a win (capped at capital)."""
    c = initial
    out = [c]
    ends = {}
    for s, k in standard_intervals(len(x) + 1):
        for i in range(s, s + k):
            ends[i] = s
    won, losses, cur = False, 0, None
    for n, ch in enumerate(x):
        if ends[n] != cur:
            cur, won, losses = ends[n], False, 0
        if not won:
            stake = min(2**losses, c)
            if ch == "1":
                c += stake
                won = True
            else:
                c -= stake
                losses += 1
        out.append(c)
    return out


def f_membership(sets, e, tau):
    """(tau in F_e, tau in F_e^min) by listing W_{e,|t|} for every prefix."""
    def in_f(t):
        return any(t.startswith(w) and stage <= len(t) for w, stage in sets[e])
    if not in_f(tau):
        return False, False
    return True, all(not in_f(tau[:k]) for k in range(len(tau)))


def permit(sets, sigma):
    p = 4
    for k in range(1, len(sigma) + 1):
        cands = [p + 1] + [4 * e + 4 for e in range(len(sets)) if f_membership(sets, e, sigma[:k])[1]]
        p = min(cands)
    return p


def permit_capital(sets, sigma, initial=12):
    m = initial
    for k in range(len(sigma)):
        if m >= permit(sets, sigma[:k]):
            m += 2 if sigma[k] == "1" else -2
    return m


def brute_lower(strategy, tau, budget):
    """Shortest-then-least extension of tau by <= budget bits with smaller capital."""
    base = raw_capital(strategy, tau)
    for extra in range(1, budget + 1):
        for tail in all_strings(extra):
            if raw_capital(strategy, tau + tail) < base:
                return tau + tail
    return None


def brute_defeat(strategy, sigma, budget):
    tau, rounds = sigma, 0
    while True:
        nxt = brute_lower(strategy, tau, budget)
        if nxt is None:
            return tau, rounds
        tau, rounds = nxt, rounds + 1


def shortest_in_f(sets, e, gamma, budget):
    for extra in range(budget + 1):
        for tail in all_strings(extra):
            if f_membership(sets, e, gamma + tail)[0]:
                return gamma + tail
    return None


def delta(n):
    return 0.0 if n < 4 else 1 / math.sqrt(n * math.log(n))


def kakutani(n):
    return math.fsum(delta(i) ** 2 for i in range(2, n + 1))


def en(d):
    return (0.5 + d) * math.log(1 + 2 * d) + (0.5 - d) * math.log(1 - 2 * d)


def nm_bounds_uncapped(minimum, n):
    a = [2 ** (minimum + 1)]
    while len(a) < n:
        m = len(a)
        a.append(2 ** (minimum + m + sum(a)))
    return a


def exact_mean(strategy, n):
    return sum(Fraction(raw_capital(strategy, s)) for s in all_strings(n)) / 2**n


def lowest_extension_capital(strategy, tau, budget):
    """Least capital over all extensions of tau by at most ``budget`` bits (full tree walk)."""
    state, c = strategy.start, strategy.initial
    for n, ch in enumerate(tau):
        stake, side = strategy.bet(state, n, c)
        state, c = strategy.advance(state, n, c, int(ch)), c + stake if int(ch) == side else c - stake
    best = c
    stack = [(state, c, len(tau), budget)]
    while stack:
        state, c, n, left = stack.pop()
        best = min(best, c)
        if left == 0:
            continue
        stake, side = strategy.bet(state, n, c)
        for bit in (0, 1):
            stack.append((strategy.advance(state, n, c, bit), c + stake if bit == side else c - stake, n + 1, left - 1))
    return best
