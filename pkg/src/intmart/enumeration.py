"""Finite stand-ins for an effective enumeration of c.e. sets of strings.

Each index ``e`` carries a finite map ``string -> stage``; ``W_{e,s}`` is the
set of strings whose stage is at most ``s``.  Real enumerations are infinite
and not decidable; everything built on top of this reports results relative
to the finite data supplied.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import BitString, as_bits


@dataclass(frozen=True)
class SimEnumeration:
    sets: tuple  # tuple of tuples of (string, stage), sorted

    @classmethod
    def from_lists(cls, sets) -> "SimEnumeration":
        norm = []
        for entries in sets:
            items = entries.items() if isinstance(entries, dict) else entries
            norm.append(tuple(sorted((as_bits(s), int(t)) for s, t in items)))
        return cls(tuple(norm))

    @classmethod
    def empty(cls, count: int) -> "SimEnumeration":
        return cls(tuple(() for _ in range(count)))

    @classmethod
    def random(
        cls, seed: int, count: int = 8, max_strings: int = 32, max_len: int = 24, max_stage: int = 48
    ) -> "SimEnumeration":
        rng = np.random.default_rng(seed)
        sets = []
        for _ in range(count):
            k = int(rng.integers(0, max_strings + 1))
            entries = {}
            for _ in range(k):
                length = int(rng.integers(1, max_len + 1))
                s = "".join(str(b) for b in rng.integers(0, 2, size=length))
                entries.setdefault(s, int(rng.integers(0, max_stage + 1)))
            sets.append(entries)
        return cls.from_lists(sets)

    @property
    def count(self) -> int:
        return len(self.sets)

    def stage_set(self, e: int, s: int) -> list:
        """W_{e,s}."""
        return [w for w, t in self.sets[e] if t <= s]

    def to_json(self) -> str:
        return json.dumps([[[w, t] for w, t in entries] for entries in self.sets], separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "SimEnumeration":
        return cls.from_lists(json.loads(text))


def in_f(enum: SimEnumeration, e: int, tau: BitString) -> bool:
    """tau extends some string enumerated into W_e by stage |tau|."""
    n = len(tau)
    return any(t <= n and tau.startswith(w) for w, t in enum.sets[e])


def f_sets(enum: SimEnumeration, e: int, tau: BitString) -> tuple[bool, bool]:
    """(tau in F_e, tau in F_e^min)."""
    if not 0 <= e < enum.count:
        raise IndexError(f"index {e} outside enumeration of {enum.count}")
    tau = as_bits(tau)
    hit = in_f(enum, e, tau)
    if not hit:
        return False, False
    return True, not any(in_f(enum, e, tau[:k]) for k in range(len(tau)))


def shortest_extension_in_f(enum: SimEnumeration, e: int, gamma: BitString, budget: int) -> BitString | None:
    """Shortest, then lexicographically least, tau extending gamma with tau in F_e.

    Only extensions by at most ``budget`` bits are considered.
    """
    best = None
    g = len(gamma)
    for w, t in enum.sets[e]:
        if w.startswith(gamma):
            tau = w + "0" * max(0, t - len(w))
        elif gamma.startswith(w):
            tau = gamma + "0" * max(0, t - g)
        else:
            continue
        if len(tau) - g > budget:
            continue
        if best is None or (len(tau), tau) < (len(best), best):
            best = tau
    return best
