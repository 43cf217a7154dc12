"""``intmart`` command line.

Every run writes its artifacts plus ``manifest.json`` into ``--out-dir``.  The
manifest stores the argument vector and a sha256 per artifact, so
``intmart rerun DIR/manifest.json`` can replay the run and compare bytes.
Wall time goes to ``timing.json``, which is not hashed.

Exit codes: 0 success, 1 a check failed (or a rerun differed), 2 bad arguments.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import tempfile
import time
from fractions import Fraction
from dataclasses import asdict
from pathlib import Path

from . import __version__
from . import adversary, nonmonotonic
from .bernoulli import BernoulliParams, McConfig, kakutani_partial_sum, azuma_tail, mc_defeat, mc_slow_win, per_sample_csv, sample_sequence
from .core import (LOG, check_fairness, check_v_valued, evaluate_capital, mean_preservation,
                   periodic, take_bits, trace_rows)
from .strategies import (BadParams, catalog, format_strategy, interval_doubling, load_strategies, parse_enum,
                         parse_partition, parse_strategy)

MANIFEST_SCHEMA = "intmart.manifest/1"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types


def _ranged(kind, lo=None, hi=None):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            try:
                f = float(text)
            except ValueError:
                f = math.nan
            if kind is not int or not f.is_integer():
                raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
            v = int(f)
        if lo is not None and v < lo:
            raise argparse.ArgumentTypeError(f"{v} is below the minimum {lo}")
        if hi is not None and v > hi:
            raise argparse.ArgumentTypeError(f"{v} is above the maximum {hi}")
        return v
    return conv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _common(p, horizon=None, seed=True):
    p.add_argument("--out-dir", default="intmart-out", help="artifact directory (default: %(default)s)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    if seed:
        p.add_argument("--seed", type=_ranged(int, 0, 2**63 - 1), default=7)
    if horizon is not None:
        p.add_argument("--horizon", type=_ranged(int, 1, 10**7), default=horizon)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="intmart", description="integer-valued martingale laboratory")
    ap.add_argument("--version", action="version", version=f"intmart {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="fairness / V-valued / mean-preservation over strategies")
    _common(p, seed=False)
    p.add_argument("--depth", type=_ranged(int, 1, 16), default=12)
    p.add_argument("--strategies", help="strategy list file (default: built-in catalog)")

    p = sub.add_parser("construct", help="diagonalization builders")
    p.add_argument("kind", choices=("bfv", "mod6", "period5", "bihyper", "generic", "nm"))
    _common(p, horizon=600)
    p.add_argument("--strategies", "--gamblers", dest="strategies", help="opponent list file")
    p.add_argument("--partition", default="standard", help="standard | uniform:L (bfv)")
    p.add_argument("--enum", default="random:11:8", help="enumeration spec (generic)")
    p.add_argument("--stages", type=_ranged(int, 1, 10**4), default=8)
    p.add_argument("--budget", type=_ranged(int, 0, 10**6), default=16)
    p.add_argument("--cap", type=_ranged(int, 2, 10**9), default=64)
    p.add_argument("--intervals", type=_ranged(int, 1, 64), default=6, help="intervals (nm)")
    p.add_argument("--pairs", type=_ranged(int, 1, 10**4), default=4, help="block pairs (bihyper)")
    p.add_argument("--funcs", default="identity,double", help="comma-separated: identity double square affine:A:B power:K")
    p.add_argument("--limit", type=_ranged(int, 1, 10**9), default=10**6)

    p = sub.add_parser("tournament", help="strategies x sources capital traces")
    _common(p, horizon=1000)
    p.add_argument("--strategies", help="strategy list file (default: built-in catalog)")
    p.add_argument("--sources", default="ones,zeros,alternating,mu:0",
                   help="comma list: ones zeros alternating bits:<01..> periodic:<01..> mu:<index> file:<path>")
    p.add_argument("--traces", action="store_true", help="also write full capital traces")

    p = sub.add_parser("bernoulli-mc", help="Monte Carlo under the generalized Bernoulli measure")
    _common(p, horizon=10**5)
    p.add_argument("--mode", choices=("slow-win", "defeat"), default="slow-win")
    p.add_argument("--samples", type=_ranged(int, 1, 10**6), default=2000)
    p.add_argument("--r", type=_ranged(float, 1e-9), default=0.5)
    p.add_argument("--n0", type=_ranged(int, 1), default=100)
    p.add_argument("--schedule", default="standard", help="standard | zero | constant:V")
    p.add_argument("--strategy", default="kind=interval_doubling initial=1 trim=100", help="defeat mode strategy spec")
    p.add_argument("--checkpoints", default="100,1000,10000,100000")

    p = sub.add_parser("bounds", help="Azuma tail and Kakutani partial-sum tables")
    _common(p, seed=False)
    p.add_argument("--points", default="100,1000,10000,100000,1000000")
    p.add_argument("--r", type=_ranged(float, 1e-9), default=0.5)
    p.add_argument("--schedule", default="standard")

    p = sub.add_parser("rerun", help="replay a manifest and compare outputs byte for byte")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None, help="where to replay (default: temporary directory)")
    return ap


# ---------------------------------------------------------------------------
# output helpers


def _table(header, rows, fmt) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _ext(fmt):
    return "json" if fmt == "json" else "csv"


def _read_strategies(path, default):
    if path is None:
        return default()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--strategies: {exc}")
    try:
        found = load_strategies(text)
    except (BadParams, ValueError) as exc:
        raise UsageError(f"--strategies {path}: {exc}")
    if not found:
        raise UsageError(f"--strategies {path}: no strategies listed")
    return found


def _ints(text, flag):
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated integers, got {text!r}")


_FUNCS = {
    "identity": lambda: (lambda x: x),
    "double": lambda: (lambda x: 2 * x),
    "square": lambda: (lambda x: x * x),
}


def parse_func(spec: str):
    name, *args = spec.split(":")
    if name in _FUNCS and not args:
        return _FUNCS[name]()
    try:
        if name == "affine" and len(args) == 2:
            a, b = map(int, args)
            return lambda x: a * x + b
        if name == "power" and len(args) == 1:
            k = int(args[0])
            return lambda x: x**k
    except ValueError:
        pass
    raise UsageError(f"--funcs: unknown function {spec!r}")


# ---------------------------------------------------------------------------
# subcommands; each returns (status, {name: text}, summary line)


def cmd_validate(args):
    strategies = _read_strategies(args.strategies, catalog)
    rows, bad = [], 0
    for s in strategies:
        fair = check_fairness(s, args.depth)
        if s.wagers is not None and s.flavor != LOG:
            vv = check_v_valued(s, s.wagers, args.depth)
            vv_cell = "pass" if vv else f"fail:{vv.witness}"
        else:
            vv, vv_cell = True, "n/a"
        n = min(args.depth, 12)
        mean = mean_preservation(s, n)
        if s.flavor == LOG:
            mean_ok = math.isclose(mean, math.exp(s.initial), rel_tol=1e-9)
        else:
            mean_ok = mean == s.initial
        ok = bool(fair) and bool(vv) and mean_ok
        bad += not ok
        rows.append((format_strategy(s), "pass" if fair else f"fail:{fair.witness}", vv_cell, n, str(mean),
                     "pass" if ok else "fail"))
    header = ("strategy", "fairness", "v_valued", "mean_depth", "mean", "status")
    out = {f"validate.{_ext(args.format)}": _table(header, rows, args.format)}
    return (1 if bad else 0), out, f"{len(rows) - bad}/{len(rows)} strategies pass at depth {args.depth}"


def _default_fv():
    return load_strategies(
        "kind=copy_previous initial=5\n"
        "kind=copy_previous initial=7 invert=true\n"
        "kind=period5 initial=2\n"
        "kind=random_finite seed=1 initial=8\n"
        "kind=subset stake=1 initial=4 period=3 offset=1\n"
    )


def _default_sv():
    return load_strategies("kind=copy_previous initial=10\nkind=copy_previous initial=10 invert=true\n")


def cmd_construct(args):
    status, files, summary = _construct(args)
    if "sequence.txt" in files:
        files["sequence.rle"] = adversary.rle_encode(files["sequence.txt"].strip()) + "\n"
    return status, files, summary


def _construct(args):
    kind, fmt = args.kind, args.format
    ext = _ext(fmt)
    try:
        if kind == "bfv":
            part = parse_partition(args.partition)
            if part is None or part.generator == "standard":
                part = adversary.IntervalPartition.standard(args.horizon)
            elif part.end < args.horizon:
                part = adversary.IntervalPartition.uniform(part.intervals[0][1], args.horizon)
            opp = _read_strategies(args.strategies, _default_fv)
            res = adversary.build_b_fv(opp, part, args.horizon)
            doubling = evaluate_capital(interval_doubling(1, part), res.bits)
            final = [str(c) for c in res.capitals]
            summary = f"{len(res.bits)} bits, final capitals {final}, interval_doubling ends at {doubling[-1]}"
            return 0, {"sequence.txt": res.bits + "\n", f"audit.{ext}": _table(res.audit_header, res.audit, fmt)}, summary
        if kind in ("mod6", "period5"):
            opp = _read_strategies(args.strategies, _default_sv)
            build = adversary.build_a_mod6 if kind == "mod6" else adversary.build_a_period5
            res = build(opp, args.horizon)
            broke = sum(b is not None for b in res.broke_at)
            return 0, {"sequence.txt": res.bits + "\n", f"audit.{ext}": _table(res.audit_header, res.audit, fmt)}, \
                f"{len(res.bits)} bits, {broke}/{len(opp)} opponents broke"
        if kind == "bihyper":
            funcs = [parse_func(f) for f in args.funcs.split(",") if f]
            try:
                res = adversary.build_bihyperimmune(funcs, args.pairs, args.limit)
            except adversary.HorizonOverflow as exc:
                raise UsageError(f"--limit: {exc} after {exc.completed_pairs} complete pairs")
            rows = [(n, v) for n, v in enumerate(res.f)]
            return 0, {"sequence.txt": res.bits + "\n", f"audit.{ext}": _table(("n", "f"), rows, fmt)}, \
                f"{len(res.bits)} bits, f = {res.f}"
        if kind == "generic":
            enum = parse_enum(args.enum)
            tr = adversary.build_one_generic(enum, args.stages, args.budget)
            rows = [(n, tr.cases[n - 1] if n else "", len(tr.zetas[n]), len(tr.gammas[n]), tr.permit_zeta[n],
                     tr.permit_gamma[n], tr.capital_gamma[n], int(tr.budget_exhausted[n - 1]) if n else 0)
                    for n in range(len(tr.gammas))]
            header = ("stage", "case", "zeta_len", "gamma_len", "permit_zeta", "permit_gamma", "capital_gamma",
                      "budget_exhausted")
            return 0, {"sequence.txt": tr.prefix + "\n", f"audit.{ext}": _table(header, rows, fmt)}, \
                f"{args.stages} stages, prefix length {len(tr.prefix)}, cases {''.join(tr.cases)}"
        if kind == "nm":
            opp = _read_strategies(args.strategies, lambda: load_strategies(
                "kind=copy_previous initial=2\nkind=interval_doubling initial=4\nkind=random_finite seed=3 initial=8\n"))
            plan = nonmonotonic.nm_plan(args.intervals, args.cap)
            try:
                b = nonmonotonic.build_a_nm(opp, plan)
            except nonmonotonic.BoundViolation as exc:
                return 1, {}, f"bound violation: {exc} (rerun with a larger --cap)"
            rep = nonmonotonic.run_nm_game(b.bits, plan, nonmonotonic.NonMonotonicStrategy(), opp)
            ok = all(rep.nm_wins) and rep.bound_ok
            return (0 if ok else 1), {"sequence.txt": b.bits + "\n", f"audit.{ext}": _table(rep.header, rep.rows, fmt)}, \
                f"{sum(rep.nm_wins)}/{len(rep.nm_wins)} majority bets won, bounds {'held' if rep.bound_ok else 'violated'}"
    except (BadParams, adversary.InfeasibleInterval) as exc:
        raise UsageError(str(exc))
    raise UsageError(f"unknown construction {kind}")


def _source(spec: str, horizon: int, seed: int):
    name, _, arg = spec.partition(":")
    try:
        if name == "ones":
            return "1" * horizon
        if name == "zeros":
            return "0" * horizon
        if name == "alternating":
            return take_bits(periodic("01"), horizon)
        if name == "periodic":
            return take_bits(periodic(arg), horizon)
        if name == "bits":
            return take_bits(arg, horizon)
        if name == "file":
            return take_bits(Path(arg).read_text().strip(), horizon)
        if name == "mu":
            return sample_sequence(BernoulliParams(), McConfig(samples=1, horizon=max(horizon, 2), seed=seed),
                                   int(arg or 0))[:horizon]
    except (OSError, ValueError, RuntimeError) as exc:
        raise UsageError(f"--sources {spec}: {exc}")
    raise UsageError(f"--sources: unknown source {spec!r}")


def _ln_exact(c) -> float:
    # float(c) overflows for long horizons; logs of numerator and denominator do not
    c = Fraction(c)
    if c <= 0:
        return -math.inf
    return math.log(c.numerator) - math.log(c.denominator)


def cmd_tournament(args):
    strategies = _read_strategies(args.strategies, catalog)
    sources = [s for s in args.sources.split(",") if s]
    bits = {s: _source(s, args.horizon, args.seed) for s in sources}
    rows, traces = [], []
    for st in strategies:
        name = format_strategy(st)
        for src in sources:
            trace = evaluate_capital(st, bits[src])
            logs = trace if st.flavor == LOG else [_ln_exact(c) for c in trace]
            rows.append((name, src, args.horizon, str(trace[-1]), repr(max(logs)), repr(min(logs))))
            if args.traces:
                traces.extend((name, src, *r) for r in trace_rows(trace, st.flavor))
    fmt, ext = args.format, _ext(args.format)
    out = {f"tournament.{ext}": _table(("strategy", "source", "horizon", "final", "ln_max", "ln_min"), rows, fmt)}
    if args.traces:
        out[f"traces.{ext}"] = _table(("strategy", "source", "n", "capital_exact_num", "capital_exact_den",
                                       "log_capital"), traces, fmt)
    return 0, out, f"{len(strategies)} strategies x {len(sources)} sources"


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=float) + "\n"


def cmd_bernoulli(args):
    try:
        params = BernoulliParams.parse(args.schedule)
        cfg = McConfig(samples=args.samples, horizon=args.horizon, seed=args.seed, r=args.r, n0=args.n0,
                       checkpoints=tuple(_ints(args.checkpoints, "--checkpoints")))
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.mode == "slow-win":
        rep = mc_slow_win(cfg, params)
        out = {"slow_win.json": _json(rep.to_dict())}
        if args.format == "csv":
            fields = [k for k in asdict(rep.rows[0]) if k != "quantiles_l"]
            out["slow_win.csv"] = _table(fields, [[asdict(r)[k] for k in fields] for r in rep.rows], "csv")
        ok = all(r.exceed_frac <= r.azuma_bound + 3 * r.bound_se for r in rep.rows)
        return (0 if ok else 1), out, "exceedance " + ("within" if ok else "ABOVE") + " Azuma bound at every checkpoint"
    try:
        strategy = parse_strategy(args.strategy)
    except (BadParams, ValueError) as exc:
        raise UsageError(f"--strategy: {exc}")
    from .bernoulli import NotTrimmed
    try:
        rep = mc_defeat(strategy, cfg, params)
    except NotTrimmed as exc:
        return 1, {}, f"strategy is not sqrt-trimmed: {exc}"
    out = {"defeat.json": _json(rep.to_dict())}
    if args.format == "csv":
        out["defeat_samples.csv"] = per_sample_csv(rep)
    return 0, out, f"converged fraction {rep.converged_fraction:.4f}, {rep.active_steps} active steps"


def cmd_bounds(args):
    try:
        params = BernoulliParams.parse(args.schedule)
    except ValueError as exc:
        raise UsageError(str(exc))
    points = _ints(args.points, "--points")
    if any(n < 2 or n > 10**8 for n in points):
        raise UsageError("--points: each point must be in [2, 1e8]")
    rows = []
    for n in points:
        k = kakutani_partial_sum(params, n)
        a = args.r * math.log(n)
        rows.append((n, repr(params.delta(n)), repr(k.delta_sq), repr(k.drift), repr(k.azuma_prefix),
                     repr(azuma_tail(a, k.azuma_prefix)), repr(math.log(math.log(n)))))
    header = ("n", "delta", "kakutani_sum", "drift_sum", "azuma_prefix", "azuma_tail", "lnln_n")
    return 0, {f"bounds.{_ext(args.format)}": _table(header, rows, args.format)}, f"{len(rows)} rows"


COMMANDS = {
    "validate": cmd_validate,
    "construct": cmd_construct,
    "tournament": cmd_tournament,
    "bernoulli-mc": cmd_bernoulli,
    "bounds": cmd_bounds,
}


# ---------------------------------------------------------------------------
# manifest


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _params(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir",)}


def execute(argv, out_dir: Path | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        return rerun(Path(args.manifest), Path(args.out_dir) if args.out_dir else None)
    out = Path(out_dir or args.out_dir)
    t0 = time.perf_counter()
    status, files, summary = COMMANDS[args.command](args)
    elapsed = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": __version__,
        "command": args.command,
        "argv": [a for a in _strip_out_dir(argv)],
        "params": _params(args),
        "seed": getattr(args, "seed", None),
        "status": status,
        "summary": summary,
        "outputs": {name: _sha(text) for name, text in sorted(files.items())},
    }
    (out / "manifest.json").write_text(_json(manifest))
    (out / "timing.json").write_text(_json({"wall_seconds": round(elapsed, 3)}))
    print(summary)
    print(f"wrote {', '.join(sorted(files)) or 'no artifacts'} to {out}")
    return status


def _strip_out_dir(argv):
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out-dir":
            skip = True
            continue
        if a.startswith("--out-dir="):
            continue
        res.append(a)
    return res


def rerun(manifest_path: Path, out_dir: Path | None) -> int:
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"manifest {manifest_path}: {exc}")
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise UsageError(f"manifest {manifest_path}: unknown schema {manifest.get('schema')!r}")
    if manifest.get("version") != __version__:
        print(f"warning: manifest from version {manifest.get('version')}, running {__version__}", file=sys.stderr)
    with tempfile.TemporaryDirectory() as tmp:
        target = out_dir or Path(tmp)
        execute(list(manifest["argv"]), target)
        fresh = json.loads((target / "manifest.json").read_text())
    diffs = [n for n in sorted(set(manifest["outputs"]) | set(fresh["outputs"]))
             if manifest["outputs"].get(n) != fresh["outputs"].get(n)]
    if diffs:
        print(f"rerun differs in: {', '.join(diffs)}")
        return 1
    print(f"rerun identical: {len(fresh['outputs'])} artifacts")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    # exact capitals over long horizons have more digits than the default str() limit
    limit = getattr(sys, "get_int_max_str_digits", lambda: None)()
    if limit is not None:
        sys.set_int_max_str_digits(0)
    try:
        return execute(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if limit is not None:
            sys.set_int_max_str_digits(limit)


if __name__ == "__main__":
    sys.exit(main())
