"""Command-line entry point: ``qexpander <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from qexpander import bits
from qexpander.errors import QExpanderError
from qexpander.experiment import (
    BOUND_COLUMNS,
    ExperimentConfig,
    ResultWriter,
    bounds_table,
    simulate_to_dir,
)
from qexpander.graphs import (
    BipartiteGraph,
    Graph,
    circular_ladder,
    complete_tree,
    cycle_graph,
    enumerate_connected_sets,
    path_graph,
    random_regular_graph,
    raney_count_bound,
    read_graph,
    torus_grid,
)
from qexpander.hgp import adjacency_graph, build_code, code_params, load_bundle, save_bundle
from qexpander.noise import sample_iid_array
from qexpander.percolation import K_d, cycle_run_tail_exact, estimate_maxconn_tail
from qexpander.ssf import DecodeRun, DecoderParams, build_flip_catalog, decode_ssf


def parse_fixture(spec: str) -> Graph:
    """``cycle:N``, ``path:N``, ``ladder:R``, ``torus:RxC``, ``tree:D:H``, ``regular:N:D:SEED`` or a graph file."""
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    if kind == "cycle":
        return cycle_graph(int(args[0]))
    if kind == "path":
        return path_graph(int(args[0]))
    if kind == "ladder":
        return circular_ladder(int(args[0]))
    if kind == "torus":
        r, c = args[0].split("x")
        return torus_grid(int(r), int(c))
    if kind == "tree":
        return complete_tree(int(args[0]), int(args[1]))
    if kind == "regular":
        return random_regular_graph(int(args[0]), int(args[1]), int(args[2]))
    g = read_graph(spec)
    if isinstance(g, BipartiteGraph):
        raise QExpanderError("expected a plain graph, got a bipartite one")
    return g


def _emit(obj, fmt: str, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=str) if fmt == "json" else _as_csv(obj)
    if out:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        print(text)


def _as_csv(obj) -> str:
    rows = obj if isinstance(obj, list) else [obj]
    cols = list(rows[0].keys()) if rows else []
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join("" if r.get(c) is None else str(r.get(c)) for c in cols))
    return "\n".join(lines)


def _read_indices(path) -> int:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return bits.from_indices(json.loads(text))
    return bits.from_indices(int(x) for x in text.replace(",", " ").split())


def cmd_build_code(a) -> int:
    code = build_code(a.n_a, a.n_b, a.d_a, a.d_b, a.seed, no_4cycles=a.no_4cycles)
    if a.out:
        save_bundle(code, a.out)
    params = code_params(code, a.gamma, a.gamma, Fraction(a.beta), distance_budget=a.distance_budget)
    info = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in vars(params).items()}
    info["code_id"] = code.code_id
    _emit(info, a.format)
    return 0


def cmd_decode(a) -> int:
    code = load_bundle(a.bundle)
    cat = build_flip_catalog(code, a.side)
    if a.error:
        e = _read_indices(a.error)
        sigma = cat.side.syndrome(e)
    elif a.syndrome:
        e = None
        sigma = _read_indices(a.syndrome)
    else:
        raise QExpanderError("decode needs --syndrome or --error")
    run = decode_ssf(cat, sigma, DecoderParams(beta=Fraction(a.beta), mode=a.mode))
    out = run.to_json()
    if e is not None:
        out["equivalent"] = run.converged and cat.side.equivalent(e, run.e_hat)
    _emit(out, "json", a.out)
    return 0


def cmd_simulate(a) -> int:
    data = json.loads(Path(a.config).read_text()) if a.config else {}
    if a.seed is not None:
        data["seed"] = a.seed
    if a.threads is not None:
        data["threads"] = a.threads
    if "seed" not in data:
        raise QExpanderError("simulate needs a base seed (--seed or in the config)")
    cfg = ExperimentConfig.from_json(data)
    out = a.out or cfg.out or "results"
    path, rows = simulate_to_dir(cfg, out)
    if a.format == "json":
        _emit([vars(r) for r in rows], "json")
    else:
        print(path.read_text(), end="")
    return 0


def cmd_percolation(a) -> int:
    g = parse_fixture(a.graph)
    alpha = Fraction(a.alpha)
    est = estimate_maxconn_tail(g, lambda rng: sample_iid_array(g.n, a.p, rng), alpha, a.t, a.trials,
                                seed=a.seed or 0)
    row = {"graph": a.graph, "n": g.n, "d": g.d_max, "alpha": str(alpha), "p": a.p, "t": a.t,
           "trials": est.trials, "hits": est.hits, "empirical": est.estimate,
           "ci_low": est.ci_low, "ci_high": est.ci_high, "seed": a.seed or 0}
    if a.graph.startswith("cycle:") and alpha == 1:
        row["exact"] = cycle_run_tail_exact(g.n, a.p, a.t)
    _emit(row, a.format, a.out)
    return 0


def cmd_bounds(a) -> int:
    rows = bounds_table(a.d, a.alpha, a.p, a.t, n_vertices=a.n_vertices)
    if a.format == "json":
        _emit(rows, "json", a.out)
        return 0
    if a.out:
        w = ResultWriter(a.out, BOUND_COLUMNS)
        for r in rows:
            w.write(r)
        w.close()
    else:
        print(",".join(BOUND_COLUMNS))
        for r in rows:
            print(",".join("" if r.get(c) is None else repr(r[c]) if isinstance(r.get(c), float) else str(r.get(c, ""))
                           for c in BOUND_COLUMNS))
    return 0


def cmd_audit_locality(a) -> int:
    from qexpander.locality import verify_locality

    code = load_bundle(a.bundle)
    cat = build_flip_catalog(code, a.side)
    e = _read_indices(a.error)
    params = DecoderParams(beta=Fraction(a.beta), mode=a.mode)
    if a.run:
        run = DecodeRun.from_json(json.loads(Path(a.run).read_text()), cat.side)
        # recover (generator, column) steps by replaying the decoder on the same input
        fresh = decode_ssf(cat, run.sigma0, params)
        if fresh.flips != run.flips:
            raise QExpanderError("stored run does not match this decoder configuration")
        run = fresh
    else:
        run = decode_ssf(cat, cat.side.syndrome(e), params)
    report = verify_locality(code, cat, e, run, params, adjacency_graph(code))
    _emit(report.to_json(), "json", a.out)
    return 0


def cmd_count_connected(a) -> int:
    g = parse_fixture(a.graph)
    counts = enumerate_connected_sets(g, a.s_max)
    d = max(g.d_max, 3)
    rows = [{"s": s, "exact": c, "raney": float(raney_count_bound(g.n, d, s)), "k_bound": g.n * K_d(d) ** s}
            for s, c in enumerate(counts, start=1)]
    _emit(rows, a.format, a.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qexpander", description="Hypergraph-product codes, small-set-flip decoding, α-percolation.")
    raw = ap.add_subparsers(dest="cmd", required=True)


    def add(name, fmt="json", seed=None, **kw):
        # shared options are added per subcommand so per-command defaults stay local
        p = raw.add_parser(name, **kw)
        p.add_argument("--config")
        p.add_argument("--seed", type=int, default=seed)
        p.add_argument("--out")
        p.add_argument("--threads", type=int)
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        return p

    p = add("build-code", seed=0, help="sample a seed graph and write a code bundle")
    p.add_argument("--n-a", type=int, required=True)
    p.add_argument("--n-b", type=int, required=True)
    p.add_argument("--d-a", type=int, required=True)
    p.add_argument("--d-b", type=int, required=True)
    p.add_argument("--gamma", default="1/4")
    p.add_argument("--beta", default="1/4")
    p.add_argument("--distance-budget", type=int, default=1 << 16)
    p.add_argument("--no-4cycles", action="store_true", help="reject seed graphs with 4-cycles")
    p.set_defaults(func=cmd_build_code)

    p = add("decode", help="decode a syndrome or error with small-set flip")
    p.add_argument("--bundle", required=True)
    p.add_argument("--syndrome")
    p.add_argument("--error")
    p.add_argument("--side", choices=("X", "Z"), default="X")
    p.add_argument("--beta", default="1/4")
    p.add_argument("--mode", choices=("alg1", "alg2"), default="alg2")
    p.set_defaults(func=cmd_decode)

    p = add("simulate", fmt="csv", help="run a Monte Carlo campaign from a config")
    p.set_defaults(func=cmd_simulate)

    p = add("percolation", help="estimate P(MaxConn_α >= t) on a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--alpha", default="1")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_percolation)

    p = add("bounds", fmt="csv", help="tabulate thresholds and tail bounds")
    p.add_argument("--d", type=int, nargs="+", required=True)
    p.add_argument("--alpha", type=float, nargs="+", required=True)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--t", type=int, nargs="+", required=True)
    p.add_argument("--n-vertices", type=int, default=1)
    p.set_defaults(func=cmd_bounds)

    p = add("audit-locality", help="replay a decode run component by component")
    p.add_argument("--bundle", required=True)
    p.add_argument("--error", required=True)
    p.add_argument("--run")
    p.add_argument("--side", choices=("X", "Z"), default="X")
    p.add_argument("--beta", default="1/4")
    p.add_argument("--mode", choices=("alg1", "alg2"), default="alg2")
    p.set_defaults(func=cmd_audit_locality)

    p = add("count-connected", help="count connected vertex sets by size")
    p.add_argument("--graph", required=True)
    p.add_argument("--s-max", type=int, default=6)
    p.set_defaults(func=cmd_count_connected)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except QExpanderError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}), file=sys.stderr)
        return exc.exit_code
    except (ValueError, ZeroDivisionError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 2}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
