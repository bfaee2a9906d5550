"""Acceptance suite: one PASS/FAIL line per criterion.

The census and the random-graph experiment run once per session.  Per-graph
results are cached under ``DEGID_CACHE_DIR`` (default ``.degid-cache`` at the
repository root), keyed by the graph, the settings and a digest of the package
source, so a rerun after a code change recomputes everything.
"""

import csv
import heapq
import io
import os
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from conftest import bow_graph, fig1_graph, fig3_graph
from degid import experiments as ex
from degid.graphmodel import enumerate_graphs, random_graph
from degid.groebner import buchberger_full, buchberger_truncated, is_reduced_basis
from degid.ident import (
    _elimination_order,
    algorithm1,
    build_ideal,
    garcia_puente,
    lam,
    sigma_polynomials,
    treks_enumerate,
)
from degid.polyring import MonomialOrder, VariableTable, from_terms
from degid.verify import component_covariance_from, covariance_exact, sample_params, sigma_assignment

ROOT = Path(__file__).resolve().parent.parent
CACHE = os.environ.get(ex.CACHE_ENV) or str(ROOT / ".degid-cache")

CENSUS_BUDGET_S = 30 * 60
L, T, A, Y = 1, 2, 3, 4


@pytest.fixture(scope="session")
def census():
    jobs = ex.census_jobs(4, 6, d=5, timeout=None, gp_timeout=60.0, verify_trials=10)
    t = time.perf_counter()
    results = ex.run_jobs(jobs, cache_dir=CACHE)
    wall = time.perf_counter() - t
    return results, ex.census_summary(results, 4, 6), wall


@pytest.fixture(scope="session")
def random_experiment():
    jobs = ex.random_jobs(200, 10, Fraction(1, 5), seed=0, d=5, timeout=10.0, gp_timeout=10.0)
    results = ex.run_jobs(jobs, cache_dir=CACHE)
    return results, ex.edge_table(results), ex.random_summary(results)


# -- criterion 1 ---------------------------------------------------------------------------


def _recovered(graph, report, S):
    """Parameter values produced by the report's formulas from the covariance matrix alone."""
    out = {}
    for comp in report.components:
        if comp.index is None:
            values = sigma_assignment(S)
        else:
            values = sigma_assignment(component_covariance_from(graph, S, comp.index), comp.nodes)
        for q in comp.order:
            f = comp.formulas[q]
            values[q] = f.numerator.evaluate(values) / f.denominator.evaluate(values)
            if q not in comp.auxiliary:
                out[q] = values[q]
    return out


def _printed_fig1(S, lam_ly):
    s = lambda u, v: S[u - 1][v - 1]
    return {
        lam(L, T): s(L, T) / s(L, L),
        lam(T, A): s(T, A) / s(T, T),
        lam(A, Y): (s(L, T) * s(L, Y) - s(L, L) * s(T, Y)) / (s(L, T) * s(L, A) - s(L, L) * s(T, A)),
        # the chain form, with lambda_LY identified beforehand
        "AY-chain": (s(T, Y) - lam_ly * s(L, T)) / s(T, A),
    }


def test_criterion_1_fig1_formulas(criterion):
    graph = fig1_graph()
    t = time.perf_counter()
    rep = algorithm1(graph, 2)
    elapsed = time.perf_counter() - t
    lambdas = [lam(L, T), lam(L, Y), lam(T, A), lam(A, Y)]
    ok = rep.verdict == "yes" and all(q in rep.formulas for q in lambdas)
    mismatches = 0
    for seed in range(20):
        S = covariance_exact(graph, sample_params(graph, 1000 + seed))
        got = _recovered(graph, rep, S)
        printed = _printed_fig1(S, got[lam(L, Y)])
        s = lambda u, v: S[u - 1][v - 1]
        corrected_ly = (s(L, Y) - got[lam(A, Y)] * s(L, A)) / s(L, L)
        checks = [
            got[lam(L, T)] == printed[lam(L, T)],
            got[lam(T, A)] == printed[lam(T, A)],
            got[lam(A, Y)] == printed[lam(A, Y)],
            got[lam(A, Y)] == printed["AY-chain"],
            got[lam(L, Y)] == corrected_ly,
        ]
        mismatches += checks.count(False)
    deg_ay = rep.formulas[lam(A, Y)].plain_degree
    gp_deg = garcia_puente(graph).formulas[lam(A, Y)].plain_degree
    ok = ok and mismatches == 0 and deg_ay == 2 and gp_deg == 3 and elapsed < 5
    criterion(1, "confounded mediator formulas at d=2", ok,
              f"20 points, {mismatches} mismatches, deg(lambda_AY)={deg_ay} vs baseline {gp_deg}, {elapsed:.2f}s")


@pytest.mark.xfail(strict=True, reason="printed lambda_LY = s_LY/s_LL ignores the path L->T->A->Y")
def test_printed_lambda_ly_formula_is_wrong():
    graph = fig1_graph()
    sample = sample_params(graph, 1000)
    S = covariance_exact(graph, sample)
    assert S[0][3] / S[0][0] == sample.lambda_values[(L, Y)]


# -- criterion 2 ---------------------------------------------------------------------------


def test_criterion_2_fig3_polynomials(criterion):
    t = time.perf_counter()
    rep = algorithm1(fig3_graph(), 2)
    elapsed = time.perf_counter() - t
    polys = {p.get("polynomial") for p in rep.to_json()["parameters"].values()}
    wanted = [
        "l_{1,2}*s_{1,1} - s_{1,2}",
        "l_{1,4}*s_{1,1} - s_{1,4}",
        "l_{1,2}*s_{1,4} - s_{2,4} + l_{3,4}*s_{2,3}",
    ]
    found = [w in polys for w in wanted]
    criterion(2, "two-confounder identifying polynomials", all(found) and elapsed < 5,
              f"{sum(found)}/3 present, {elapsed:.2f}s")


# -- criterion 3 ---------------------------------------------------------------------------


def _trek_rule_holds(graph):
    ideal = build_ideal(graph)
    tau = sigma_polynomials(graph, ideal.table)
    zero = ideal.table.zero()
    return all(
        f == sum(treks_enumerate(graph, u, v, table=ideal.table), zero) for (u, v), f in tau.items()
    )


def test_criterion_3_trek_rule(criterion):
    census_graphs = list(enumerate_graphs(4, 6, up_to_isomorphism=True))
    bad = sum(not _trek_rule_holds(g) for g in census_graphs)
    rand = [random_graph(6, Fraction(1, 3), seed) for seed in range(50)]
    bad += sum(not _trek_rule_holds(g) for g in rand)
    criterion(3, "matrix parametrization equals trek sum", bad == 0,
              f"{len(census_graphs)} census + {len(rand)} random 6-node graphs, {bad} mismatches")


# -- criteria 4, 5, 7 (census) -------------------------------------------------------------


def _makespan(times, workers):
    """Longest-processing-time schedule of per-graph times over a worker pool."""
    loads = [0.0] * workers
    for t in sorted(times, reverse=True):
        heapq.heapreplace(loads, loads[0] + t)
    return max(loads)


def test_criterion_4_census_agreement(criterion, census):
    results, summary, wall = census
    times = [r.degbd_time + r.gp_time for r in results]
    workers = os.cpu_count() or 1
    sweep = _makespan(times, workers)
    ok = (
        not summary["disagreements"]
        and summary["enumerated"] == ex.REFERENCE_CENSUS_TOTAL
        and summary["degbd_identifiable"] == ex.REFERENCE_CENSUS_IDENTIFIABLE
        and summary["degbd_unfinished"] == 0
        and sweep < CENSUS_BUDGET_S
    )
    criterion(4, "census agreement with the full-basis baseline", ok,
              f"{summary['enumerated']} graphs (reference 715), {summary['degbd_identifiable']} identifiable "
              f"(reference 343), baseline finished on {summary['gp_terminated']}, "
              f"{len(summary['disagreements'])} disagreements, {summary['degbd_unfinished']} unfinished, "
              f"sweep {sweep / 60:.1f} min on {workers} worker(s) (sequential {sum(times) / 60:.1f} min, "
              f"4 workers {_makespan(times, 4) / 60:.1f} min)")


def test_criterion_5_census_roundtrip(criterion, census):
    results, summary, _ = census
    with_formulas = [r for r in results if r.verified]
    failed = [r.graph for r in with_formulas if r.verified != "pass"]
    criterion(5, "census formulas pass exact verification (10 trials)", not failed,
              f"{len(with_formulas)} graphs checked, {len(failed)} failures")


def test_criterion_7_degree_bound(criterion, census):
    results, summary, _ = census
    bad = summary["degree_bound_violations"]
    top = max(r.max_w_degree for r in results)
    criterion(7, "identifying polynomials respect deg_w <= d * w_trek", not bad,
              f"{len(bad)} violations, largest weighted degree {top}")


# -- criterion 6 ----------------------------------------------------------------------------


def _weighted_monomials(weights, d):
    if not weights:
        return [()] if d == 0 else []
    w, rest = weights[0], weights[1:]
    return [(e,) + tail for e in range(d // w + 1) for tail in _weighted_monomials(rest, d - e * w)]


def _property_case(seed):
    rng = random.Random(seed)
    if seed % 2:
        graph = random_graph(3, Fraction(1, 2), seed)
        ideal = build_ideal(graph)
        theta = list(ideal.theta)
        return ideal.generators, _elimination_order(ideal.table, theta, rng.choice(theta))
    names = [f"x{i}" for i in range(3)]
    weights = [rng.randint(1, 2) for _ in names]
    table = VariableTable(names, weights)
    gens = []
    for _ in range(3):
        monos = [e for e in _weighted_monomials(weights, rng.randint(2, 4)) if rng.random() < 0.5]
        f = from_terms(table, [(rng.choice([-2, -1, 1, 3]), dict(zip(names, e))) for e in monos])
        if not f.is_zero():
            gens.append(f)
    return gens, MonomialOrder(table, rng.sample(names, rng.randint(0, 3)))


def test_criterion_6_randomized_properties(criterion):
    failures = {"homogeneous": 0, "slice": 0, "reduced": 0}
    for seed in range(100):
        gens, order = _property_case(seed)
        if not all(g.is_w_homogeneous() for g in gens):
            failures["homogeneous"] += 1
            continue
        full = buchberger_full(gens, order).elements
        if not is_reduced_basis(full, order):
            failures["reduced"] += 1
        top = max((g.weighted_degree() for g in full), default=0)
        for k in range(top + 2):
            trunc = buchberger_truncated(gens, order, k).elements
            want = {g.to_string() for g in full if g.weighted_degree() <= k}
            if {g.to_string() for g in trunc} != want:
                failures["slice"] += 1
            if not is_reduced_basis(trunc, order):
                failures["reduced"] += 1
    criterion(6, "homogeneity, truncation slices, reduced-basis divisibility", not any(failures.values()),
              f"100 cases, failures {failures}")


# -- criterion 8 ----------------------------------------------------------------------------


def test_criterion_8_random_graphs(criterion, random_experiment):
    results, rows, summary = random_experiment
    text = ex.table_csv(rows)
    header = next(csv.reader(io.StringIO(text)))
    frac = summary["degbd_fraction"]
    mean_t = summary["degbd_mean_time_identified"]
    ok = (
        summary["degbd_identified"] > summary["gp_identified"]
        and 0.55 <= frac <= 0.85
        and header == ex.TABLE_COLUMNS
        and (mean_t is None or mean_t <= 10)
    )
    criterion(8, "random 10-node graphs (200 samples, p=0.2, d=5, 10 s)", ok,
              f"degree-bounded {summary['degbd_identified']}, baseline {summary['gp_identified']}, "
              f"fraction {frac:.3f}, mean time {'n/a' if mean_t is None else f'{mean_t:.2f}s'}")


# -- criterion 9 ----------------------------------------------------------------------------


def test_criterion_9_negative_control(criterion):
    # census graphs have at most 6 edges, so |theta| <= 10 = p(p+1)/2 there; the
    # controls come from the same 4-node enumeration one edge further
    over = [g for g in enumerate_graphs(4, 7, up_to_isomorphism=True) if g.n_edges == 7][:10]
    graphs = [bow_graph()] + over
    verdicts = [algorithm1(g, d).verdict for g in graphs for d in (2, 5)]
    wrong = sum(v != "no" for v in verdicts)
    criterion(9, "over-parametrized graphs are not identified", wrong == 0 and len(over) >= 10,
              f"bow + {len(over)} graphs with |theta| = 11, d in (2, 5), {wrong} non-'no' verdicts")
