"""Generalized Bernoulli measures and the slow-growth / defeat experiments.

The measure tosses independent coins, the n-th landing 1 with probability
``1/2 + delta_n``.  With ``delta_n = 1/sqrt(n ln n)`` the squared biases
diverge like ``ln ln n``, so the optimal martingale wins, but only at a
sub-polynomial rate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import EXACT, BitString, Strategy, as_bits, update

DEFAULT_CHECKPOINTS = (10**2, 10**3, 10**4, 10**5)

# ln(0) is taken to be -1 when logging integer capitals.
LN_ZERO = -1.0


class NotTrimmed(RuntimeError):
    pass


def ln_capital(m) -> float:
    return math.log(m) if m > 0 else LN_ZERO


def ln1p_conv(x: float) -> float:
    """ln(1+x) for x >= -1 with the ln(0) = -1 convention."""
    if x < -1:
        raise ValueError("x must be >= -1")
    return math.log1p(x) if x > -1 else LN_ZERO


@dataclass(frozen=True)
class BernoulliParams:
    """Bias schedule.

    ``standard``: delta_n = 1/sqrt(n ln n) for n >= first, 0 before.  The
    formula exceeds 1/2 at n = 2, 3, so ``first`` defaults to 4.
    ``zero``: the uniform measure.  ``constant``: delta_n = value for all n.
    """

    schedule: str = "standard"
    value: float = 0.0
    first: int = 4

    def __post_init__(self):
        if self.schedule not in ("standard", "zero", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "constant" and not -0.5 <= self.value <= 0.5:
            raise ValueError("constant bias must lie in [-1/2, 1/2]")
        if self.schedule == "standard":
            if self.first < 2:
                raise ValueError("standard schedule needs first >= 2")
            bad = [n for n in range(self.first, 4) if _standard(n) > 0.5]
            if bad:
                raise ValueError(f"1/sqrt(n ln n) > 1/2 at n={bad}; use first >= 4")

    def delta(self, n: int) -> float:
        if self.schedule == "zero":
            return 0.0
        if self.schedule == "constant":
            return self.value
        return _standard(n) if n >= self.first else 0.0

    def deltas(self, horizon: int) -> np.ndarray:
        if self.schedule == "zero":
            return np.zeros(horizon)
        if self.schedule == "constant":
            return np.full(horizon, float(self.value))
        n = np.arange(horizon, dtype=float)
        out = np.zeros(horizon)
        m = n >= self.first
        out[m] = 1.0 / np.sqrt(n[m] * np.log(n[m]))
        return out

    def p(self, n: int) -> float:
        return 0.5 + self.delta(n)

    @property
    def spec(self) -> str:
        if self.schedule == "standard":
            return "standard" if self.first == 4 else f"standard:{self.first}"
        if self.schedule == "constant":
            return f"constant:{self.value!r}"
        return "zero"

    @classmethod
    def parse(cls, text: str) -> "BernoulliParams":
        head, _, rest = text.partition(":")
        if head == "standard":
            return cls("standard", first=int(rest) if rest else 4)
        if head == "constant":
            return cls("constant", value=float(rest))
        if head == "zero":
            return cls("zero")
        raise ValueError(f"unknown schedule {text!r}")


def _standard(n: int) -> float:
    return 1.0 / math.sqrt(n * math.log(n))


def cylinder_measure(params: BernoulliParams, sigma: BitString) -> float:
    """ln mu([sigma])."""
    total = 0.0
    for n, ch in enumerate(as_bits(sigma)):
        p = params.p(n) if ch == "1" else 1 - params.p(n)
        if p == 0:
            return -math.inf
        total += math.log(p)
    return total


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class McConfig:
    samples: int = 2000
    horizon: int = 10**5
    seed: int = 7
    r: float = 0.5
    checkpoints: tuple = DEFAULT_CHECKPOINTS
    n0: int = 100
    tail: float = 0.5

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if self.r <= 0:
            raise ValueError("r must be > 0")
        if not 0 < self.tail <= 1:
            raise ValueError("tail must be in (0, 1]")

    @property
    def active_checkpoints(self) -> tuple:
        cps = tuple(c for c in sorted(set(self.checkpoints)) if 2 <= c <= self.horizon)
        return cps or (self.horizon,)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for sample ``index``; depends only on (seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_bits(params: BernoulliParams, horizon: int, seed: int, index: int = 0, probs: np.ndarray | None = None) -> np.ndarray:
    if probs is None:
        probs = 0.5 + params.deltas(horizon)
    u = sample_rng(seed, index).random(horizon)
    return (u < probs[:horizon]).astype(np.uint8)


def sample_sequence(params: BernoulliParams, config: McConfig, index: int = 0) -> BitString:
    bits = sample_bits(params, config.horizon, config.seed, index)
    return bits.tobytes().translate(bytes.maketrans(b"\x00\x01", b"01")).decode()


# ---------------------------------------------------------------------------
# analytic side


def en_drift(delta: float) -> float:
    """E[L_{n+1} - L_n] for the optimal martingale at bias ``delta``."""
    if not abs(delta) < 0.5:
        raise ValueError("|delta| must be < 1/2")
    return (0.5 + delta) * math.log1p(2 * delta) + (0.5 - delta) * math.log1p(-2 * delta)


def en_drifts(deltas: np.ndarray) -> np.ndarray:
    d = np.asarray(deltas, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(0.5 - d > 0, (0.5 - d) * np.log1p(-2 * d), 0.0)
        hi = np.where(0.5 + d > 0, (0.5 + d) * np.log1p(2 * d), 0.0)
    return hi + lo


def azuma_tail(a: float, prefix: float) -> float:
    """exp(-a^2 / prefix): bound on mu{L'_n >= a} given prefix = sum (e_i + 2 d_i)^2."""
    if a <= 0 or prefix <= 0:
        raise ValueError("need a > 0 and prefix > 0")
    return math.exp(-a * a / prefix)


@dataclass(frozen=True)
class KakutaniSums:
    n: int
    delta_sq: float  # sum_{i=2}^{n} d_i^2
    azuma_prefix: float  # sum_{i=0}^{n-1} (e_i + 2 d_i)^2
    drift: float  # sum_{i=0}^{n-1} e_i


def kakutani_partial_sum(params: BernoulliParams, n: int) -> KakutaniSums:
    if n < 3:
        raise ValueError("n must be >= 3")
    d = params.deltas(n + 1)
    e = en_drifts(d[:n])
    return KakutaniSums(
        n=n,
        delta_sq=math.fsum((d[2:] ** 2).tolist()),
        azuma_prefix=math.fsum(((e + 2 * d[:n]) ** 2).tolist()),
        drift=math.fsum(e.tolist()),
    )


# ---------------------------------------------------------------------------
# slow win of the optimal martingale


@dataclass
class SlowWinRow:
    n: int
    exceed_frac: float  # empirical mu{L'_n >= r ln n}
    azuma_bound: float
    bound_se: float  # binomial standard error at the bound's probability
    exceed_se: float
    mean_lprime: float
    se_lprime: float
    mean_increment: float  # mean of L'_n - L'_{previous checkpoint}
    se_increment: float
    frac_above_power: float  # empirical mu{V_n >= n^r}
    median_l: float
    drift_sum: float  # sum_{i<n} e_i
    azuma_prefix: float
    quantiles_l: dict = field(default_factory=dict)


@dataclass
class SlowWinReport:
    config: McConfig
    schedule: str
    rows: list
    per_sample: np.ndarray | None = None  # (samples, checkpoints) of L_n

    def to_dict(self) -> dict:
        return {
            "schema": "intmart.slow_win/1",
            "config": asdict(self.config),
            "schedule": self.schedule,
            "checkpoints": [asdict(r) for r in self.rows],
        }


def mc_slow_win(config: McConfig, params: BernoulliParams | None = None, keep_samples: bool = False) -> SlowWinReport:
    """Monte Carlo profile of ln M(X|n) for the optimal martingale under mu."""
    params = params or BernoulliParams()
    cps = config.active_checkpoints
    H = max(cps)
    d = params.deltas(H)
    probs = 0.5 + d
    with np.errstate(divide="ignore"):
        up, down = np.log1p(2 * d), np.log1p(-2 * d)
    e = en_drifts(d)
    e_cum = np.concatenate([[0.0], np.cumsum(e)])
    idx = np.array(cps) - 1
    L = np.empty((config.samples, len(cps)))
    for i in range(config.samples):
        bits = sample_bits(params, H, config.seed, i, probs)
        inc = np.where(bits == 1, up, down)
        L[i] = np.cumsum(inc)[idx]
    drift = e_cum[np.array(cps)]
    Lp = L - drift
    N = config.samples
    rows = []
    prev = np.zeros(N)
    for k, n in enumerate(cps):
        thresh = config.r * math.log(n)
        prefix = float(np.sum((e[:n] + 2 * d[:n]) ** 2))
        bound = azuma_tail(thresh, prefix)
        frac = float(np.mean(Lp[:, k] >= thresh))
        incr = Lp[:, k] - prev
        prev = Lp[:, k]
        rows.append(
            SlowWinRow(
                n=n,
                exceed_frac=frac,
                azuma_bound=bound,
                bound_se=math.sqrt(bound * (1 - bound) / N),
                exceed_se=math.sqrt(frac * (1 - frac) / N),
                mean_lprime=float(Lp[:, k].mean()),
                se_lprime=float(Lp[:, k].std(ddof=1) / math.sqrt(N)) if N > 1 else math.inf,
                mean_increment=float(incr.mean()),
                se_increment=float(incr.std(ddof=1) / math.sqrt(N)) if N > 1 else math.inf,
                frac_above_power=float(np.mean(L[:, k] >= thresh)),
                median_l=float(np.median(L[:, k])),
                drift_sum=float(drift[k]),
                azuma_prefix=prefix,
                quantiles_l={q: float(np.quantile(L[:, k], q)) for q in (0.05, 0.5, 0.95)},
            )
        )
    return SlowWinReport(config, params.spec, rows, L if keep_samples else None)


# ---------------------------------------------------------------------------
# defeat of trimmed integer-valued strategies


@dataclass
class DriftBucket:
    upto: int
    steps: int = 0
    sum_gap: float = 0.0  # sum of (realized dL - bound)
    sum_gap_sq: float = 0.0
    sum_dl: float = 0.0
    sum_bound: float = 0.0
    rho_violations: int = 0

    @property
    def mean_gap(self) -> float:
        return self.sum_gap / self.steps if self.steps else 0.0

    @property
    def se_gap(self) -> float:
        if self.steps < 2:
            return math.inf if self.steps else 0.0
        var = (self.sum_gap_sq - self.sum_gap**2 / self.steps) / (self.steps - 1)
        return math.sqrt(max(var, 0.0) / self.steps)

    @property
    def mean_dl(self) -> float:
        return self.sum_dl / self.steps if self.steps else 0.0

    @property
    def mean_bound(self) -> float:
        return self.sum_bound / self.steps if self.steps else 0.0

    def to_dict(self) -> dict:
        return {
            "upto": self.upto, "steps": self.steps, "mean_dl": self.mean_dl, "mean_bound": self.mean_bound,
            "mean_gap": self.mean_gap, "se_gap": self.se_gap if math.isfinite(self.se_gap) else None,
            "rho_violations": self.rho_violations,
        }


@dataclass
class SampleOutcome:
    index: int
    max_capital: int
    final_capital: int
    last_change: int
    stopped_at: int | None  # position where the strategy froze or went broke
    converged: bool


@dataclass
class DefeatReport:
    config: McConfig
    schedule: str
    strategy: str
    samples: list
    buckets: list
    violations: int = 0

    @property
    def converged_fraction(self) -> float:
        return sum(s.converged for s in self.samples) / len(self.samples)

    @property
    def active_steps(self) -> int:
        return sum(b.steps for b in self.buckets)

    def to_dict(self) -> dict:
        return {
            "schema": "intmart.defeat/1",
            "config": asdict(self.config),
            "schedule": self.schedule,
            "strategy": self.strategy,
            "violations": self.violations,
            "converged_fraction": self.converged_fraction,
            "active_steps": self.active_steps,
            "max_capital": max(s.max_capital for s in self.samples),
            "buckets": [b.to_dict() for b in self.buckets],
        }


def mc_defeat(strategy: Strategy, config: McConfig, params: BernoulliParams | None = None, block: int = 1024) -> DefeatReport:
    """Run a trimmed integer-valued strategy against mu-samples.

    Drift statistics cover bets placed at n >= ``config.n0``: the realized
    change of ln-capital (ln 0 = -1) is compared with -rho^2/2 + 2 d rho,
    where rho is the signed fraction of capital bet on 1.
    """
    if strategy.flavor != EXACT:
        raise ValueError("mc_defeat needs an exact-flavor strategy")
    from .strategies import is_frozen  # local: strategies imports this module

    params = params or BernoulliParams()
    H = config.horizon
    n0 = config.n0
    d = params.deltas(H)
    probs = 0.5 + d
    cps = config.active_checkpoints
    buckets = [DriftBucket(c) for c in cps]
    if cps[-1] < H:
        buckets.append(DriftBucket(H))
    bucket_ends = [b.upto for b in buckets]
    outcomes = []
    for i in range(config.samples):
        rng = sample_rng(config.seed, i)
        state, capital = strategy.start, strategy.initial
        max_c, last_change, stopped = capital, 0, None
        bits = np.empty(0, dtype=np.uint8)
        b_idx = 0
        for n in range(H):
            if n % block == 0:
                size = min(block, H - n)
                bits = (rng.random(size) < probs[n:n + size]).astype(np.uint8)
            if capital == 0 or is_frozen(strategy, state):
                stopped = n
                break
            bit = int(bits[n % block])
            stake, side = strategy.bet(state, n, capital)
            after = update(strategy, capital, stake, side, bit)
            if stake and n >= n0:
                if (capital + stake) ** 2 > n:
                    raise NotTrimmed(f"sample {i}: bet of {stake} at n={n} with capital {capital} can exceed sqrt(n)")
                while n >= bucket_ends[b_idx]:
                    b_idx += 1
                bkt = buckets[b_idx]
                rho = (stake if side == 1 else -stake) / capital
                bound = -rho * rho / 2 + 2 * float(d[n]) * rho
                dl = ln_capital(after) - ln_capital(capital)
                gap = dl - bound
                bkt.steps += 1
                bkt.sum_gap += gap
                bkt.sum_gap_sq += gap * gap
                bkt.sum_dl += dl
                bkt.sum_bound += bound
                if abs(rho) * math.sqrt(n) < 1 - 1e-12:
                    bkt.rho_violations += 1
            state = strategy.advance(state, n, capital, bit)
            if after != capital:
                last_change = n + 1
            capital = after
            max_c = max(max_c, capital)
        converged = stopped is not None or last_change <= H * (1 - config.tail)
        outcomes.append(SampleOutcome(i, int(max_c), int(capital), last_change, stopped, converged))
    return DefeatReport(config, params.spec, strategy.kind + str(dict(strategy.params)), outcomes, buckets)


def per_sample_csv(report) -> str:
    """Per-sample table for either report type."""
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, SlowWinReport):
        if report.per_sample is None:
            raise ValueError("report was built without keep_samples=True")
        cps = [r.n for r in report.rows]
        w.writerow(["sample"] + [f"L_{n}" for n in cps])
        for i, row in enumerate(report.per_sample):
            w.writerow([i] + [repr(float(v)) for v in row])
    else:
        w.writerow(["sample", "max_capital", "final_capital", "last_change", "stopped_at", "converged"])
        for s in report.samples:
            w.writerow([s.index, s.max_capital, s.final_capital, s.last_change,
                        "" if s.stopped_at is None else s.stopped_at, int(s.converged)])
    return buf.getvalue()
