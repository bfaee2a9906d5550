"""Command-line interface.

Exit codes: 0 for a positive result ("yes", verification passed, census
agreement), 1 for a negative or incomplete one, 2 for usage, input or
internal errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .graphmodel import GraphError, load_graph, tian_decompose, trek_weights
from .groebner import EffortExceeded
from .ident import InvalidDegree, algorithm1, garcia_puente, substitute_formula_chain
from .polyring import var_name

log = logging.getLogger("degid")


class CliError(Exception):
    pass


def _positive_float(s: str) -> float:
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _degree(s: str) -> int:
    d = int(s)
    if d < 2:
        raise argparse.ArgumentTypeError("degree must be at least 2")
    return d


def _probability(s: str) -> Fraction:
    try:
        x = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {s}") from exc
    if not 0 <= x <= 1:
        raise argparse.ArgumentTypeError("probability must lie in [0, 1]")
    return x


def _read_graph(path: str):
    try:
        return load_graph(path)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from exc
    except (GraphError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _trace(args):
    if not args.trace:
        return None
    return lambda line: print(line, file=sys.stderr)


def _add_common(p: argparse.ArgumentParser, timeout_default=None):
    p.add_argument("--degree", type=_degree, default=5, help="degree bound d (default 5)")
    p.add_argument("--tian", dest="tian", action="store_true", default=True,
                   help="split into mixed components first (default)")
    p.add_argument("--no-tian", dest="tian", action="store_false")
    p.add_argument("--early-stop-lambda", action="store_true",
                   help="stop once all edge coefficients are identified; recover the rest")
    p.add_argument("--timeout", type=_positive_float, default=timeout_default, help="seconds")
    p.add_argument("--timeout-scope", choices=("all", "gb"), default="all",
                   help="count preprocessing against the timeout (all) or only basis computations (gb)")
    p.add_argument("--spair-cap", type=int, default=None, help="maximal number of S-pairs")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--trace", action="store_true", help="log S-pair processing to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="decide identifiability of one graph")
    p.add_argument("--graph", required=True)
    _add_common(p)
    p.add_argument("--method", choices=("degbd", "gp"), default="degbd")
    p.add_argument("--emit-formulas", action="store_true",
                   help="add formulas in covariance entries only, with earlier parameters substituted")
    p.add_argument("--verify", type=int, default=0, metavar="TRIALS",
                   help="check the formulas at TRIALS sampled points")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("census", help="all small graphs, compared with the full-basis baseline")
    _add_common(p)
    p.add_argument("--gp-timeout", type=_positive_float, default=60.0,
                   help="time limit for the full-basis baseline (default 60)")
    p.add_argument("--nodes", type=int, default=4)
    p.add_argument("--max-edges", type=int, default=None)
    p.add_argument("--labeled", action="store_true", help="all labeled graphs instead of isomorphism classes")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--verify-trials", type=int, default=0)
    p.add_argument("--summary", default=None, help="summary JSON path (default stdout)")
    p.add_argument("--no-timings", action="store_true", help="omit timing columns for byte-stable output")

    p = sub.add_parser("random-exp", help="random graphs, counts per edge number")
    _add_common(p, timeout_default=10.0)
    p.add_argument("--gp-timeout", type=_positive_float, default=None,
                   help="time limit for the baseline (default: same as --timeout)")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--edge-prob", type=_probability, default=Fraction(1, 5))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-edges", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--verify-trials", type=int, default=0)
    p.add_argument("--graphs-out", default=None, help="per-graph CSV path")
    p.add_argument("--summary", default=None, help="summary JSON path (default stderr)")
    p.add_argument("--no-timings", action="store_true", help="leave the time columns empty")

    p = sub.add_parser("verify", help="identify a graph and check its formulas numerically")
    p.add_argument("--graph", required=True)
    _add_common(p)
    p.add_argument("--samples", type=int, default=10, help="number of trials")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("trek-info", help="trek weights and mixed components")
    p.add_argument("--graph", required=True)
    p.add_argument("--degree", type=_degree, default=5)
    p.add_argument("--out", default=None)
    return parser


def cmd_identify(args) -> int:
    g = _read_graph(args.graph)
    if args.method == "gp":
        try:
            rep = garcia_puente(g, effort_cap=args.spair_cap, timeout=args.timeout, trace=_trace(args))
        except EffortExceeded as exc:
            _write(json.dumps({"method": "gp", "verdict": "partial", "stop_reason": exc.reason}, indent=2) + "\n", args.out)
            return 1
    else:
        rep = algorithm1(
            g, args.degree, tian=args.tian, early_stop_lambda=args.early_stop_lambda,
            timeout=args.timeout, spair_cap=args.spair_cap, timeout_scope=args.timeout_scope,
            trace=_trace(args),
        )
    if args.verify:
        from .verify import check_formulas

        rep.verification = check_formulas(g, rep, args.verify, args.seed).to_json()
    doc = rep.to_json()
    if args.emit_formulas and rep.verdict == "yes":
        chained = substitute_formula_chain(rep, rng_seed=args.seed)
        doc["covariance_formulas"] = {
            var_name(q): {"numerator": n.to_string(), "denominator": d.to_string()}
            for q, (n, d) in chained.items()
        }
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    if rep.verification is not None and not rep.verification["passed"]:
        return 1
    return 0 if rep.verdict == "yes" else 1


def _progress(args, total):
    if not args.verbose:
        return None
    done = [0]

    def report(res):
        done[0] += 1
        log.info("%d/%d %s gp=%s degbd=%s", done[0], total, res.graph, res.gp_verdict, res.degbd_verdict)

    return report


def cmd_census(args) -> int:
    from . import experiments as ex

    max_edges = args.max_edges if args.max_edges is not None else args.nodes * (args.nodes - 1) // 2
    jobs = ex.census_jobs(
        args.nodes, max_edges, args.degree, args.tian, args.early_stop_lambda,
        timeout=args.timeout, gp_timeout=args.gp_timeout, spair_cap=args.spair_cap,
        verify_trials=args.verify_trials, up_to_isomorphism=not args.labeled,
    )
    results = ex.run_jobs(jobs, args.workers, progress=_progress(args, len(jobs)))
    _write(ex.census_csv(results, timings=not args.no_timings), args.out)
    summary = ex.census_summary(results, args.nodes, max_edges, not args.labeled)
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    elif args.out:
        sys.stdout.write(text)
    else:
        sys.stderr.write(text)
    ok = not summary["disagreements"] and not summary["verification_failures"]
    return 0 if ok else 1


def cmd_random(args) -> int:
    from . import experiments as ex

    jobs = ex.random_jobs(
        args.samples, args.nodes, args.edge_prob, args.seed, args.degree, args.tian,
        args.early_stop_lambda, timeout=args.timeout,
        gp_timeout=args.gp_timeout if args.gp_timeout is not None else args.timeout,
        spair_cap=args.spair_cap, verify_trials=args.verify_trials, max_edges=args.max_edges,
    )
    results = ex.run_jobs(jobs, args.workers, progress=_progress(args, len(jobs)))
    _write(ex.table_csv(ex.edge_table(results), timings=not args.no_timings), args.out)
    if args.graphs_out:
        Path(args.graphs_out).write_text(ex.census_csv(results, timings=not args.no_timings))
    text = json.dumps(ex.random_summary(results), indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stderr.write(text)
    return 0 if not ex.random_summary(results)["verification_failures"] else 1


def cmd_verify(args) -> int:
    from .verify import check_formulas

    g = _read_graph(args.graph)
    rep = algorithm1(
        g, args.degree, tian=args.tian, early_stop_lambda=args.early_stop_lambda,
        timeout=args.timeout, spair_cap=args.spair_cap, timeout_scope=args.timeout_scope,
        trace=_trace(args),
    )
    res = check_formulas(g, rep, args.samples, args.seed)
    doc = {"verdict": rep.verdict, "verification": res.to_json(),
           "identified": [var_name(q) for q in rep.identification_order]}
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0 if res.passed and rep.verdict == "yes" else 1


def cmd_trek_info(args) -> int:
    g = _read_graph(args.graph)
    tw = trek_weights(g)
    doc = {
        "weights": {f"s_{{{u},{v}}}": w for (u, v), w in sorted(tw.sigma_weight.items())},
        "w_trek": tw.w_trek,
        "degree": args.degree,
        "d_prime": args.degree * tw.w_trek,
        "components": [
            {
                "internal": list(c.internal),
                "nodes": list(c.nodes),
                "directed": [list(e) for e in sorted(c.directed)],
                "bidirected": [list(e) for e in sorted(c.bidirected)],
            }
            for c in tian_decompose(g)
        ],
    }
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


COMMANDS = {
    "identify": cmd_identify,
    "census": cmd_census,
    "random-exp": cmd_random,
    "verify": cmd_verify,
    "trek-info": cmd_trek_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidDegree as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 2
    except Exception as exc:  # internal failure
        log.exception("internal error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
