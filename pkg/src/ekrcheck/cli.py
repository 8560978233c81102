"""Command-line runner: enumeration, verification suites and Monte Carlo sweeps.

Every table starts with ``#`` comment lines holding the library version, the
full configuration and a timestamp, so a run can be repeated from its header.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .combinat import Universe, binom, binsum_bound, chernoff_bound, uppertail_bound
from .containers import (
    ContainerParams,
    build_record,
    check_record,
    g0_lemma_chains,
    record_to_json,
)
from .ekr import VERDICT_LIMIT_K, ekr_context, verdict_batch
from .families import (
    check_frankl,
    decompose,
    enumerate_M,
    enumerate_M_bruteforce,
    family_summary,
    from_closed,
    write_families,
)
from .layergraph import (
    check_link_propagation,
    layer_graph,
    sweep_kk,
    verify_tree_bound,
)
from .randmodel import mc_estimate_batch, wilson
from .sperner import check_shadow_events, check_wwXX, sample_cube, width

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "EKRCHECK_THREADS"


class GuardError(ValueError):
    """A request outside the sizes the library handles."""


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def parse_grid(text: str) -> list[float]:
    """``"0.5:0.05:1.0"`` (inclusive) or a comma list."""
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:step:stop")
        start, step, stop = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + i * step, 10) for i in range(count)]
    else:
        grid = [float(t) for t in text.split(",") if t]
    if not grid or any(not 0 <= p <= 1 for p in grid):
        raise argparse.ArgumentTypeError("probabilities must lie in [0, 1]")
    return grid


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "out", "gnuplot"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _header(args: argparse.Namespace) -> list[str]:
    return [
        f"ekrcheck {__version__}",
        "config " + json.dumps(_config(args), sort_keys=True),
        "generated " + datetime.now(timezone.utc).isoformat(timespec="seconds"),
    ]


def emit_table(args: argparse.Namespace, columns: list[str], rows: list[dict]) -> str:
    """Render rows as CSV (``#`` header lines) or JSON, write to ``--out`` or stdout."""
    header = _header(args)
    if args.format == "json":
        text = json.dumps({"header": header, "columns": columns, "rows": rows}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
        if getattr(args, "gnuplot", False) and args.format == "csv":
            write_gnuplot(args.out, columns)
    else:
        sys.stdout.write(text)
    return text


def write_gnuplot(csv_path: str, columns: list[str]) -> Path:
    """Companion script plotting every numeric column against the first."""
    script = Path(csv_path).with_suffix(".gp")
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        f"set xlabel '{columns[0]}'",
        "plot " + ", \\\n     ".join(
            f"'{Path(csv_path).name}' using 1:{i + 1} with linespoints" for i in range(1, len(columns))
        ),
    ]
    script.write_text("\n".join(lines) + "\n")
    return script


# enumerate


def cmd_enumerate(args: argparse.Namespace) -> int:
    u = Universe(args.n, args.k)
    if args.n == 2 * args.k + 1:
        if args.k > VERDICT_LIMIT_K:
            raise GuardError(f"enumeration of M is limited to k <= {VERDICT_LIMIT_K}")
        families = [F.members for F in enumerate_M(u)]
    else:
        print(f"warning: n={args.n} is not 2k+1; using clique enumeration", file=sys.stderr)
        if u.size > 64:
            raise GuardError("clique enumeration limited to C(n,k) <= 64")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            families = list(enumerate_M_bruteforce(u))
    if args.out:
        write_families(args.out, families, u)
    summary = family_summary(u, (len(F) for F in families))
    if args.format == "json":
        print(json.dumps({"n": u.n, "k": u.k, **summary}, sort_keys=True))
    else:
        print(f"|M| = {summary['count']}")
        print("size histogram: " + ", ".join(f"{s}:{c}" for s, c in summary["histogram"].items()))
        print(f"max size {summary['max_size']} vs star size C(n-1,k-1) = {summary['star_size']}")
    return EXIT_OK


# verification suites


def suite_kk(args) -> dict[str, bool]:
    res = sweep_kk(args.k)
    return {
        "isoperimetric bound": res["kk_violations"] == 0,
        "real-x shadow bound": res["lovasz_violations"] == 0,
        "half-layer star has zero expansion": res["star_shadow"] == res["star_size"],
    }


def _closed_linked(k: int, count: int | None, seed: int) -> list[int]:
    lg = layer_graph(k)
    if count is None:
        return [A for A in lg.enumerate_closed(min_size=1) if lg.is_linked(A)]
    rng = np.random.Generator(np.random.Philox(key=seed))
    out: list[int] = []
    while len(out) < count:
        size = int(rng.integers(1, lg.N // 2 + 1))
        pick = rng.choice(lg.N, size=size, replace=False)
        A = lg.closure(sum(1 << int(r) for r in pick))
        block = lg.linked_components(A).blocks[0]
        out.append(lg.closure(block))
    return out


def suite_containers(args) -> dict[str, bool]:
    lg = layer_graph(args.k)
    sets = _closed_linked(args.k, None if args.k <= 3 else args.count, args.seed)
    params = ContainerParams(zeta=args.zeta, eta=args.eta, pilot=args.pilot, retry_cap=args.retry_cap)
    ok: dict[str, bool] = {}
    for i, A in enumerate(sets):
        record = build_record(lg, A, params, seed=args.seed + i)
        for name, val in {**check_record(lg, record, params), **g0_lemma_chains(lg, A, params)}.items():
            ok[name] = ok.get(name, True) and val
    return ok


def suite_frankl(args) -> dict[str, bool]:
    return {f"i={args.i}": check_frankl(Universe(args.n, args.k), args.i)}


def _random_graph(rng: random.Random, nv: int, density: float) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in range(nv)}
    for a in range(nv):
        for b in range(a + 1, nv):
            if rng.random() < density:
                adj[a].append(b)
                adj[b].append(a)
    return adj


def suite_links(args) -> dict[str, bool]:
    rng = random.Random(args.seed)
    ok, tested = True, 0
    while tested < args.trials:
        adj = _random_graph(rng, rng.randint(4, 14), rng.uniform(0.15, 0.6))
        verts = list(adj)
        A = rng.sample(verts, rng.randint(1, len(verts)))
        NA = sorted({v for u in A for v in adj[u]})
        if not NA:
            continue
        T = [v for v in NA if rng.random() < 0.7] or NA[:1]
        res = check_link_propagation(adj, A, T, rng.randint(1, 4))
        if res is None:
            continue
        tested += 1
        ok &= res
    return {f"{tested} valid instances": ok}


def suite_trees(args) -> dict[str, bool]:
    rng = random.Random(args.seed)
    ok = True
    for _ in range(args.trials):
        adj = _random_graph(rng, rng.randint(2, 12), rng.uniform(0.15, 0.7))
        ok &= all(verify_tree_bound(adj, u) for u in range(1, 6))
    return {"rooted subtree bound": ok}


def suite_sperner(args) -> dict[str, bool]:
    full = all(width(sample_cube(n, 1.0, 0)).width == binom(n, n // 2) for n in range(0, args.n + 1))
    implication = True
    for t in range(args.trials):
        X = sample_cube(args.n, args.p, args.seed, t)
        if check_shadow_events(X).holds:
            implication &= check_wwXX(X)
    cert = all(width(sample_cube(args.n, args.p, args.seed, t)).certified for t in range(args.trials))
    return {"full cube width": full, "shadow events imply width identity": implication, "certificates": cert}


def suite_bounds(args) -> dict[str, bool]:
    from scipy.stats import binom as binom_dist

    cher = up = True
    for m in range(1, 51):
        for q in np.arange(0.05, 0.96, 0.05):
            mu = m * q
            for lam in np.linspace(0, m, 11):
                b = chernoff_bound(m, float(q), float(lam))
                cher &= binom_dist.sf(math.floor(mu + lam), m, q) <= b.upper * (1 + 1e-12)
                cher &= binom_dist.cdf(math.ceil(mu - lam) - 1, m, q) <= b.lower * (1 + 1e-12)
            for K in (0.5, 1, 2, math.e, 4, 8, 16):
                bound = uppertail_bound(m, float(q), K)
                if bound.meaningful:
                    up &= binom_dist.sf(math.floor(K * mu), m, q) <= bound.bound * (1 + 1e-12)
    cnt = all(
        sum(binom(b, i) for i in range(a + 1)) <= binsum_bound(a, b) for b in range(2, 31) for a in range(1, b // 2 + 1)
    )
    return {"chernoff": bool(cher), "upper tail": bool(up), "binomial sum": cnt}


def suite_bijection(args) -> dict[str, bool]:
    u = Universe(args.n, args.k)
    fams = list(enumerate_M(u))
    round_trip = all(
        from_closed(u, x, decompose(F.members, x).A).members == F.members
        for F in fams
        for x in range(1, u.n + 1)
        if decompose(F.members, x).A
    )
    out = {"round trip": round_trip}
    if u.size <= 64:
        brute = {F.members for F in enumerate_M_bruteforce(u)}
        out["matches clique enumeration"] = brute == {F.members.members for F in fams}
    return out


SUITES: dict[str, Callable[[argparse.Namespace], dict[str, bool]]] = {
    "kk": suite_kk,
    "containers": suite_containers,
    "frankl": suite_frankl,
    "links": suite_links,
    "trees": suite_trees,
    "sperner": suite_sperner,
    "bounds": suite_bounds,
    "bijection": suite_bijection,
}


def cmd_verify(args: argparse.Namespace) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite == "all":
        args.k = min(args.k, 3)
    failed = False
    for name in names:
        t0 = time.perf_counter()
        results = SUITES[name](args)
        elapsed = time.perf_counter() - t0
        for check, ok in results.items():
            failed |= not ok
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {check}")
        print(f"      {name} took {elapsed:.2f}s")
    return EXIT_FAIL if failed else EXIT_OK


# sweeps


def _parallel_sum(fn: Callable[[int, int], np.ndarray], trials: int, threads: int, chunk: int = 2048) -> np.ndarray:
    jobs = [(s, min(chunk, trials - s)) for s in range(0, trials, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda j: fn(*j), jobs))
    else:
        parts = [fn(*j) for j in jobs]
    return np.sum(parts, axis=0)


def cmd_sweep(args: argparse.Namespace) -> int:
    u = Universe(args.n, args.k)
    if args.n != 2 * args.k + 1 or args.k > VERDICT_LIMIT_K:
        raise GuardError(f"sweeps need n = 2k+1 with k <= {VERDICT_LIMIT_K}")
    ctx = ekr_context(u)
    rows = []
    for p in args.p:
        strong = mc_estimate_batch(lambda R: verdict_batch(R, ctx)[0], u, p, args.trials, args.seed, args.threads)
        weak = mc_estimate_batch(lambda R: verdict_batch(R, ctx)[1], u, p, args.trials, args.seed, args.threads)
        rows.append(
            {
                "p": p,
                "trials": args.trials,
                "ekr_strong_freq": f"{strong.estimate:.6f}",
                "ekr_weak_freq": f"{weak.estimate:.6f}",
                "wilson_lo": f"{strong.lo:.6f}",
                "wilson_hi": f"{strong.hi:.6f}",
                "seed": args.seed,
            }
        )
    emit_table(args, list(rows[0]), rows)
    return EXIT_OK


def cmd_sperner(args: argparse.Namespace) -> int:
    if args.n > 12:
        raise GuardError("exact widths are limited to n <= 12")
    rows = []
    for p in args.p:

        def chunk(start: int, count: int, p=p) -> np.ndarray:
            acc = np.zeros(4)
            for t in range(start, start + count):
                res = width(sample_cube(args.n, p, args.seed, t))
                acc += (res.width == res.layer_max, res.width, res.width**2, res.layer_max)
            return acc

        hits, total, total_sq, layer = _parallel_sum(chunk, args.trials, args.threads, chunk=64)
        lo, hi = wilson(int(hits), args.trials)
        mean = total / args.trials
        var = max(total_sq / args.trials - mean**2, 0.0)
        half = 1.96 * math.sqrt(var / args.trials)
        rows.append(
            {
                "p": p,
                "trials": args.trials,
                "wwXX_freq": f"{hits / args.trials:.6f}",
                "wwXX_lo": f"{lo:.6f}",
                "wwXX_hi": f"{hi:.6f}",
                "mean_width": f"{mean:.4f}",
                "mean_width_lo": f"{mean - half:.4f}",
                "mean_width_hi": f"{mean + half:.4f}",
                "layer_max_mean": f"{layer / args.trials:.4f}",
                "seed": args.seed,
            }
        )
    emit_table(args, list(rows[0]), rows)
    return EXIT_OK


def cmd_containers(args: argparse.Namespace) -> int:
    lg = layer_graph(args.k)
    params = ContainerParams(zeta=args.zeta, eta=args.eta, pilot=args.pilot, retry_cap=args.retry_cap)
    sets = _closed_linked(args.k, args.count, args.seed)
    lines = [json.dumps({"header": _header(args)})]
    failed = False
    for i, A in enumerate(sets):
        record = build_record(lg, A, params, seed=args.seed + i)
        checks = check_record(lg, record, params)
        failed |= not all(checks.values())
        entry = json.loads(record_to_json(lg, record))
        entry["checks"] = checks
        lines.append(json.dumps(entry, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_FAIL if failed else EXIT_OK


# argument parsing


def _probability(text: str) -> float:
    p = float(text)
    if not 0 <= p <= 1:
        raise argparse.ArgumentTypeError("probability must lie in [0, 1]")
    return p


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_container_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--zeta", type=float, default=0.2)
    p.add_argument("--eta", type=float, default=0.08)
    p.add_argument("--pilot", type=_positive, default=64)
    p.add_argument("--retry-cap", type=_positive, default=1024)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ekrcheck", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ekrcheck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list the nonprincipal maximal intersecting families")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    _add_output(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify", help="run an invariant suite")
    p.add_argument("suite", choices=[*SUITES, "all"])
    p.add_argument("--n", type=_positive, default=7)
    p.add_argument("--k", type=_positive, default=3)
    p.add_argument("--i", type=int, default=3)
    p.add_argument("--p", type=_probability, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=_positive, default=200)
    p.add_argument("--count", type=_positive, default=100, help="sampled sets when k > 3")
    _add_container_params(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="strong and weak EKR frequencies over a p grid")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--p", type=parse_grid, required=True, help="start:step:stop or a comma list")
    p.add_argument("--trials", type=_positive, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive, default=_default_threads())
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script next to the CSV")
    _add_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sperner", help="width statistics of random subsets of the cube")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--p", type=parse_grid, required=True)
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive, default=_default_threads())
    p.add_argument("--gnuplot", action="store_true")
    _add_output(p)
    p.set_defaults(func=cmd_sperner)

    p = sub.add_parser("containers", help="emit container records as JSON lines")
    p.add_argument("--k", type=_positive, default=3)
    p.add_argument("--count", type=_positive, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _add_container_params(p)
    p.set_defaults(func=cmd_containers)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (GuardError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
