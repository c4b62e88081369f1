"""Command-line front end.

Every subcommand parses and validates its arguments before doing any work.
Exit status: 0 on success, 1 when a verification fails, 2 on bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import sampling, spectral, stationary
from .arrays import RateVector, TriangularArray
from .chains import check_composition, compositions, parse_tuple
from .exact import format_rational, parse_rational
from .report import Report, jsonable

DEFAULT_CAPS = {"enum": stationary.DEFAULT_ENUM_CAP, "matrix": spectral.MAX_GENERATOR_N,
                "iter": 100_000, "series": 400}
REPLICA_SIZE = 100_000
SUITES = ("master-y", "master-x", "blocks", "eigenvectors", "identity",
          "normalization", "partition", "coupling-oracle")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    fmt: str = "json"
    seed: int = 0
    workers: int = 1
    caps: dict = field(default_factory=lambda: dict(DEFAULT_CAPS))


def parse_caps(text: str | None) -> dict:
    caps = dict(DEFAULT_CAPS)
    if not text:
        return caps
    for item in text.split(","):
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in caps or not val.strip().isdigit():
            raise UsageError(f"bad cap {item!r}; known caps: {', '.join(sorted(caps))}")
        caps[key] = int(val)
    return caps


def random_rates(count: int, seed: int) -> RateVector:
    """Positive rationals ``p/q`` with ``1 <= p, q <= 9`` from a seeded stream."""
    rng = sampling.SeededStream(seed).rng
    pq = rng.integers(1, 10, size=(count, 2))
    return RateVector(tuple(Fraction(int(p), int(q)) for p, q in pq))


def resolve_rates(text: str | None, count: int, seed: int, required: bool = True):
    if text is None:
        if required:
            raise UsageError(f"--rates is required (x_0..x_{count - 1})")
        return None
    if text == "random":
        return random_rates(count, seed)
    try:
        rates = RateVector.parse(text)
    except ValueError as err:
        raise UsageError(f"malformed rates {text!r}: {err}") from None
    if len(rates) < count:
        raise UsageError(f"dimension mismatch: need {count} rates x_0..x_{count - 1}, got {len(rates)}")
    return rates


def _tuple_arg(text: str, what: str):
    try:
        return parse_tuple(text)
    except ValueError as err:
        raise UsageError(f"malformed {what} {text!r}: {err}") from None


# -- subcommands ---------------------------------------------------------------

def cmd_stationary(cfg: RunConfig):
    a = cfg.args
    if a.chain == "x":
        if not a.array:
            raise UsageError("--array is required for the enriched chain")
        try:
            A = TriangularArray.from_json(json.loads(a.array))
        except (ValueError, TypeError) as err:
            raise UsageError(f"malformed array: {err}") from None
        x = None if a.symbolic else resolve_rates(a.rates, A.size + 1, cfg.seed)
        value = stationary.pi_X(A, x, symbolic=a.symbolic)
        return {"chain": "x", "array": A.to_json(), "value": value}, None
    if a.n is None:
        raise UsageError("--n is required")
    n = a.n
    if a.chain == "z":
        if not a.state:
            raise UsageError("--state is required for the bin chain (a prefix c_1..c_l)")
        c = _tuple_arg(a.state, "state")
        if len(c) > n:
            raise UsageError(f"dimension mismatch: prefix of length {len(c)} exceeds n={n}")
        x = None if a.symbolic else resolve_rates(a.rates, len(c) + 1, cfg.seed)
        value = stationary.pi_Z_prefix(c, x, n, symbolic=a.symbolic)
        return {"chain": "z", "n": n, "state": list(c), "value": value}, None
    x = None if a.symbolic else resolve_rates(a.rates, n, cfg.seed)
    if a.symbolic and n > stationary.SYMBOLIC_MAX_N:
        raise UsageError(f"symbolic mode is capped at n <= {stationary.SYMBOLIC_MAX_N}")
    if not a.state:
        dist = stationary.pi_Y_all(n, x, symbolic=a.symbolic)
        rows = [(",".join(map(str, c)), v) for c, v in dist.items()]
        csv = "state,probability\n" + "".join(
            f"{s.replace(',', '-')},{format_rational(v) if isinstance(v, Fraction) else v}\n"
            for s, v in rows)
        return {"chain": "y", "n": n, "distribution": dist}, csv
    try:
        c = check_composition(_tuple_arg(a.state, "state"), n)
    except ValueError as err:
        raise UsageError(str(err)) from None
    out = {"chain": "y", "n": n, "state": list(c)}
    if a.series:
        tol = parse_rational(a.tolerance)
        res = stationary.pi_Y_series(c, x, tolerance=tol, max_s=cfg.caps["series"])
        out.update(value=res.value, tail_bound=res.tail_bound, terms=res.terms,
                   converged=res.converged, approx=float(res.value))
    else:
        out["value"] = stationary.pi_Y_finite(c, x, symbolic=a.symbolic)
    return out, None


def cmd_spectrum(cfg: RunConfig):
    a = cfg.args
    if a.n > cfg.caps["matrix"]:
        raise UsageError(f"n={a.n} exceeds the matrix cap {cfg.caps['matrix']}")
    x = resolve_rates(a.rates, a.n, cfg.seed, required=False)
    rep = spectral.spectrum(a.n, x, geometric=a.geometric and x is not None)
    out = rep.to_json()
    if a.gap:
        if x is None:
            raise UsageError("--gap needs numeric --rates")
        out["gap"] = spectral.spectral_gap(a.n, x)
    flat = [ev for e in rep.eigenvalues for ev in [e.to_json()["value"]] * e.alg_mult]
    out["values"] = flat
    csv = "form,value,alg_mult\n" + "".join(
        f"{e['form']},{e['value']},{e['alg_mult']}\n" for e in out["eigenvalues"])
    return out, csv


def cmd_simulate(cfg: RunConfig):
    a = cfg.args
    count = a.n + 1 if a.chain == "z" else a.n
    x = resolve_rates(a.rates, count, cfg.seed)
    if a.initial:
        init = _tuple_arg(a.initial, "initial state")
    else:
        init = (0,) * a.n if a.chain == "z" else (a.n,)
    if a.steps < 0:
        raise UsageError("--steps must be nonnegative")
    res = sampling.simulate_ctmc(a.chain, a.n, x, init, a.steps, sampling.SeededStream(cfg.seed),
                                 skip_self_loops=a.skip_self_loops)
    out = {"chain": a.chain, "n": a.n, "steps": a.steps, "seed": cfg.seed,
           "final_state": list(res.final_state), "elapsed": res.elapsed,
           "jump_average": _histogram(res.jumps),
           "time_average": dict(sorted(res.time_average().items()))}
    return out, res.jumps.to_csv()


def _histogram(dist: sampling.EmpiricalDistribution) -> dict:
    return {",".join(map(str, s)): dist.counts[s] for s in sorted(dist.counts)}


def _replica(job):
    method, n, rates, size, seed, replica, bins, max_steps = job
    stream = sampling.SeededStream(seed, replica)
    if method == "z-perfect":
        Z = sampling.sample_Z_perfect(n, rates, stream, count=size, bins=bins)
        return sampling.EmpiricalDistribution.from_samples(map(tuple, Z.tolist()))
    return sampling.cftp_samples(n, rates, size, stream, max_steps=max_steps)


def run_replicas(method, n, rates, count, seed, workers=1, bins=None, max_steps=100_000):
    """Split ``count`` draws into fixed-size replicas; the merge ignores worker count."""
    jobs = []
    for r, start in enumerate(range(0, count, REPLICA_SIZE)):
        jobs.append((method, n, rates, min(REPLICA_SIZE, count - start), seed, r, bins, max_steps))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replica, jobs))
    else:
        parts = [_replica(j) for j in jobs]
    total = sampling.EmpiricalDistribution()
    for p in parts:
        total = total.merge(p)
    return total


def cmd_sample(cfg: RunConfig):
    a = cfg.args
    if a.count < 1:
        raise UsageError("--count must be positive")
    if a.method == "z-perfect":
        bins = a.bins if a.bins is not None else a.n
        if not 0 <= bins <= a.n:
            raise UsageError(f"--bins must lie in 0..{a.n}")
        x = resolve_rates(a.rates, bins + 1, cfg.seed)
        exact = None
    else:
        bins = None
        x = resolve_rates(a.rates, a.n, cfg.seed)
        if any(r <= 0 for r in x.rates[:a.n]):
            raise UsageError("cftp needs x_0..x_{n-1} > 0")
        exact = stationary.pi_Y_all(a.n, x) if a.n <= 12 else None
    dist = run_replicas(a.method, a.n, tuple(x.rates), a.count, cfg.seed, cfg.workers,
                        bins, cfg.caps["iter"])
    out = {"method": a.method, "n": a.n, "count": a.count, "seed": cfg.seed,
           "histogram": _histogram(dist)}
    if exact is not None:
        out["tv_distance"] = sampling.tv_distance(dist, exact)
    return out, dist.to_csv()


def cmd_coupling(cfg: RunConfig):
    a = cfg.args
    n = a.n
    if a.sequence:
        u = _tuple_arg(a.sequence, "sequence")
        if any(not 0 <= j < n for j in u):
            raise UsageError(f"sequence entries must lie in 0..{n - 1}")
        tau = sampling.grand_coupling_time_formula(u, n)
        out = {"n": n, "sequence": list(u), "effective": sampling.classify_effective(u),
               "tau": tau}
        if n <= 16:
            brute = sampling.grand_coupling_time_bruteforce(u, n)
            out["tau_bruteforce"] = brute
            out["coalesced_state"] = sampling.coalesced_state(u, n)
        return out, None
    if not a.random:
        raise UsageError("give --sequence or --random")
    x = resolve_rates(a.rates, n, cfg.seed) if a.rates else RateVector((1,) * n)
    stream = sampling.SeededStream(cfg.seed)
    mean = sampling.mean_coupling_time(n, x, a.trials, stream)
    return {"n": n, "trials": a.trials, "seed": cfg.seed, "mean_tau": mean}, None


def _random_array(stream, size: int, max_entry: int = 3) -> TriangularArray:
    cells = stream.rng.integers(0, max_entry + 1, size=size * (size + 1) // 2).tolist()
    rows, pos = [], 0
    for k in range(1, size + 1):
        rows.append(tuple(cells[pos:pos + k]))
        pos += k
    return TriangularArray(tuple(rows))


def coupling_oracle(n: int, trials: int, seed: int, length: int | None = None) -> Report:
    stream = sampling.SeededStream(seed)
    length = length or 8 * n
    agree = 0
    for t in range(trials):
        u = stream.rng.integers(0, n, size=length).tolist()
        f = sampling.grand_coupling_time_formula(u, n)
        b = sampling.grand_coupling_time_bruteforce(u, n)
        if f != b:
            return Report("coupling-oracle", False, {"n": n, "agree": agree, "trials": trials},
                          {"sequence": u, "formula": f, "bruteforce": b})
        agree += 1
    return Report("coupling-oracle", True, {"n": n, "agree": agree, "trials": trials})


def cmd_verify(cfg: RunConfig):
    a = cfg.args
    suite, n = a.suite, a.n
    if suite == "master-y":
        rep = stationary.verify_master_Y(n, resolve_rates(a.rates, n, cfg.seed))
    elif suite == "master-x":
        x = resolve_rates(a.rates, n + 1, cfg.seed)
        if any(r <= 0 for r in x.rates[:n + 1]):
            raise UsageError("master-x needs x_0..x_n > 0")
        stream = sampling.SeededStream(cfg.seed)
        rep = Report("master-x", True, {"n": n, "trials": a.trials})
        cases = {"I": 0, "II": 0}
        for _ in range(a.trials):
            size = int(stream.rng.integers(1, n + 1))
            r = stationary.verify_master_X(_random_array(stream, size), x)
            if not r.ok:
                rep = r
                break
            cases[r.details["case"]] += 1
        else:
            rep.details["cases"] = cases
    elif suite == "blocks":
        rep = spectral.verify_blocks(n, resolve_rates(a.rates, n, cfg.seed, required=False))
    elif suite == "eigenvectors":
        rep = spectral.eigenvector_suite(n, resolve_rates(a.rates, n, cfg.seed, required=False))
    elif suite == "identity":
        deltas = _tuple_arg(a.deltas, "deltas") if a.deltas else (0,) * (n - 1)
        if len(deltas) != n - 1:
            raise UsageError(f"dimension mismatch: --deltas needs {n - 1} entries")
        x = resolve_rates(a.rates, n + 1, cfg.seed)
        rep = stationary.diagonal_identity_check(deltas, x, parse_rational(a.tolerance))
    elif suite == "normalization":
        x = resolve_rates(a.rates, n + 1, cfg.seed)
        rep = stationary.normalization_check(n, x, parse_rational(a.tolerance))
    elif suite == "partition":
        if n > stationary.SYMBOLIC_MAX_N:
            raise UsageError(f"partition suite is symbolic; n <= {stationary.SYMBOLIC_MAX_N}")
        rep = stationary.partition_divisibility(n)
    else:
        rep = coupling_oracle(n, a.trials, cfg.seed)
    return rep, None


COMMANDS = {"stationary": cmd_stationary, "spectrum": cmd_spectrum, "simulate": cmd_simulate,
            "sample": cmd_sample, "coupling-time": cmd_coupling, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--caps", help="comma list such as enum=100000,matrix=10,iter=5000")

    p = argparse.ArgumentParser(prog="ballbins",
                                description="Exact and Monte Carlo tools for the ball-and-bin chains.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stationary", parents=[common], help="exact stationary probabilities")
    s.add_argument("--chain", choices=("y", "z", "x"), default="y")
    s.add_argument("--n", type=int)
    s.add_argument("--rates")
    s.add_argument("--state", help="composition (y) or bin prefix (z), e.g. 2,3")
    s.add_argument("--array", help="JSON rows for the enriched chain, e.g. [[1],[0,2]]")
    s.add_argument("--symbolic", action="store_true")
    s.add_argument("--series", action="store_true", help="use the positive-series form")
    s.add_argument("--tolerance", default="1/1000000000")

    s = sub.add_parser("spectrum", parents=[common], help="generator eigenvalues")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rates")
    s.add_argument("--geometric", action="store_true", help="also compute geometric multiplicities")
    s.add_argument("--gap", action="store_true")

    s = sub.add_parser("simulate", parents=[common], help="event-driven simulation")
    s.add_argument("--chain", choices=("y", "z"), default="y")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rates", required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--initial")
    s.add_argument("--skip-self-loops", action="store_true")

    s = sub.add_parser("sample", parents=[common], help="perfect sampling")
    s.add_argument("--method", choices=("z-perfect", "cftp"), required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rates", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--bins", type=int, help="z-perfect: sample only the leading bins")

    s = sub.add_parser("coupling-time", parents=[common], help="grand coupling time")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--sequence")
    s.add_argument("--random", action="store_true")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--rates")

    s = sub.add_parser("verify", parents=[common], help="verification suites")
    s.add_argument("--suite", choices=SUITES, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rates")
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--deltas")
    s.add_argument("--tolerance", default="1/1000000000")
    return p


def _text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not all(not isinstance(i, (dict, list)) for i in v):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v) if isinstance(v, (dict, list)) else v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(_text(v, indent) for v in obj)
    return f"{pad}{obj}"


def render(result, csv, fmt: str) -> str:
    data = jsonable(result.to_json() if isinstance(result, Report) else result)
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        if csv is None:
            raise UsageError("csv output is only available for histograms and spectra")
        return csv
    return _text(data) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        for name in ("n", "count", "trials"):
            if getattr(args, name, None) is not None and getattr(args, name) < 1:
                raise UsageError(f"--{name} must be positive")
        if args.workers < 1:
            raise UsageError("--workers must be positive")
        cfg = RunConfig(args.command, args, args.format, args.seed, args.workers,
                        parse_caps(args.caps))
        result, csv = COMMANDS[args.command](cfg)
        sys.stdout.write(render(result, csv, cfg.fmt))
    except UsageError as err:
        print(f"ballbins {args.command}: error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"ballbins {args.command}: error: {err}", file=sys.stderr)
        return 2
    if isinstance(result, Report) and not result.ok:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
