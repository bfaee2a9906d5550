"""Exact-rational numerical oracle for identification formulas.

Parameters are sampled as small rationals, the covariance matrix is computed
exactly, and every formula of a report is evaluated and compared with the
sampled truth.  Nothing here uses floating point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .graphmodel import MixedGraph, tian_decompose, topological_order


class PersistentZeroDenominator(RuntimeError):
    """A formula denominator vanished at every resampled point."""

    def __init__(self, parameter, attempts: int):
        self.parameter = parameter
        self.attempts = attempts
        super().__init__(f"denominator of {parameter} vanished in {attempts} consecutive samples")


class ComponentMismatch(AssertionError):
    """A regression left a nonzero coefficient outside its mixed component."""


@dataclass
class ParameterSample:
    lambda_values: dict
    omega_values: dict
    seed: int

    def values(self) -> dict:
        """Mapping from parameter variables (``("l", u, v)``, ``("w", u, v)``) to values."""
        out = {("l", u, v): x for (u, v), x in self.lambda_values.items()}
        out.update({("w", u, v): x for (u, v), x in self.omega_values.items()})
        return out


def _nonzero_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.choice((-1, 1)) * rng.randint(1, 9), rng.randint(1, 9))


def sample_params(graph: MixedGraph, rng_seed: int) -> ParameterSample:
    """Random edge weights and a strictly diagonally dominant error covariance."""
    rng = random.Random(rng_seed)
    lam = {e: _nonzero_rational(rng) for e in sorted(graph.directed)}
    omega = {e: _nonzero_rational(rng) for e in sorted(graph.bidirected)}
    for v in graph.nodes:
        off = sum(abs(x) for e, x in omega.items() if v in e and e[0] != e[1])
        omega[(v, v)] = off + Fraction(rng.randint(1, 9), rng.randint(1, 9))
    return ParameterSample(lam, omega, rng_seed)


def _matrix(p: int, entries: dict, symmetric: bool = False) -> list[list[Fraction]]:
    m = [[Fraction(0)] * p for _ in range(p)]
    for (u, v), x in entries.items():
        m[u - 1][v - 1] = x
        if symmetric:
            m[v - 1][u - 1] = x
    return m


def _mul(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return [[sum((a[i][t] * b[t][j] for t in range(k) if a[i][t] and b[t][j]), Fraction(0))
             for j in range(m)] for i in range(n)]


def _transpose(a):
    return [list(r) for r in zip(*a)]


def covariance_exact(graph: MixedGraph, sample: ParameterSample) -> list[list[Fraction]]:
    """``(I - Lambda)^{-T} Omega (I - Lambda)^{-1}`` via the nilpotent series."""
    p = graph.p
    if set(sample.lambda_values) != set(graph.directed):
        raise ValueError("sample edge coefficients do not match the graph")
    L = _matrix(p, sample.lambda_values)
    Om = _matrix(p, sample.omega_values, symmetric=True)
    M = [[Fraction(int(i == j)) for j in range(p)] for i in range(p)]
    power = L
    while any(any(r) for r in power):
        M = [[M[i][j] + power[i][j] for j in range(p)] for i in range(p)]
        power = _mul(power, L)
    return _mul(_mul(_transpose(M), Om), M)


def is_positive_definite(a: list[list[Fraction]]) -> bool:
    """Exact check through the pivots of symmetric Gaussian elimination."""
    n = len(a)
    m = [list(map(Fraction, r)) for r in a]
    for k in range(n):
        if m[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = m[i][k] / m[k][k]
            if f:
                for j in range(k, n):
                    m[i][j] -= f * m[k][j]
    return True


def _solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(a)
    m = [list(a[i]) + [b[i]] for i in range(n)]
    for k in range(n):
        piv = next(i for i in range(k, n) if m[i][k])
        m[k], m[piv] = m[piv], m[k]
        for i in range(n):
            if i != k and m[i][k]:
                f = m[i][k] / m[k][k]
                for j in range(k, n + 1):
                    m[i][j] -= f * m[k][j]
    return [m[i][n] / m[i][i] for i in range(n)]


def component_covariance_from(graph: MixedGraph, S: list[list[Fraction]], index: int) -> list[list[Fraction]]:
    """Covariance matrix of mixed component ``index`` computed from the full ``S``.

    Each internal node is regressed on all of its predecessors in the
    topological order.  The coefficients vanish outside the component's node
    set; together with the residual variances and unit-variance independent
    incoming nodes they define the component covariance.  Rows and columns
    follow the component's sorted node labels.
    """
    comp = tian_decompose(graph)[index]
    nodes = comp.nodes
    inside = set(nodes)
    internal = set(comp.internal)
    topo = topological_order(graph)
    beta: dict = {}
    resid: dict = {}
    for pos, v in enumerate(topo):
        if v not in internal:
            continue
        preds = topo[:pos]
        if preds:
            A = [[S[a - 1][b - 1] for b in preds] for a in preds]
            rhs = [S[a - 1][v - 1] for a in preds]
            coef = _solve(A, rhs)
        else:
            coef = []
        for a, c in zip(preds, coef):
            if c and a not in inside:
                raise ComponentMismatch(f"node {v} regresses on {a} outside its component")
        beta[v] = {a: c for a, c in zip(preds, coef) if c}
        resid[v] = S[v - 1][v - 1] - sum(c * S[a - 1][v - 1] for a, c in zip(preds, coef))
    # covariances of the recursive system, built in topological order
    C: dict = {}
    seen: list = []
    for v in topo:
        if v not in inside:
            continue
        for a in seen:
            if v in internal:
                C[(v, a)] = sum((c * C[(p, a)] for p, c in beta[v].items()), Fraction(0))
            else:
                C[(v, a)] = Fraction(0)
            C[(a, v)] = C[(v, a)]
        if v in internal:
            C[(v, v)] = resid[v] + sum((c * C[(p, v)] for p, c in beta[v].items()), Fraction(0))
        else:
            C[(v, v)] = Fraction(1)
        seen.append(v)
    return [[C[(a, b)] for b in nodes] for a in nodes]


def component_covariance(graph: MixedGraph, sample: ParameterSample, index: int) -> list[list[Fraction]]:
    return component_covariance_from(graph, covariance_exact(graph, sample), index)


def sigma_assignment(S: list[list[Fraction]], labels=None) -> dict:
    """Values for the covariance variables ``("s", u, v)`` from a matrix."""
    n = len(S)
    labels = tuple(labels) if labels is not None else tuple(range(1, n + 1))
    return {
        ("s", labels[i], labels[j]): S[i][j] for i in range(n) for j in range(i, n)
    }


@dataclass
class VerificationResult:
    trials: int
    passed: bool
    counterexample: dict | None = None
    checked: int = 0

    def to_json(self) -> dict:
        doc = {"trials": self.trials, "passed": self.passed}
        if self.counterexample is not None:
            doc["counterexample"] = self.counterexample
        return doc


def _component_sigma(report, comp, sample):
    if comp.index is None:
        return sigma_assignment(covariance_exact(report.graph, sample))
    return sigma_assignment(component_covariance(report.graph, sample, comp.index), comp.nodes)


def check_formulas(graph: MixedGraph, report, trials: int = 10, rng_seed: int = 0, resamples: int = 5) -> VerificationResult:
    """Evaluate every formula of ``report`` at sampled points and compare exactly."""
    from .polyring import var_name

    checked = 0
    for trial in range(trials):
        for comp in report.components:
            if not comp.order:
                continue
            aux = set(comp.auxiliary)
            for attempt in range(resamples):
                seed = rng_seed * 1_000_003 + trial * 101 + attempt
                sample = sample_params(graph, seed)
                truth = sample.values()
                for q in aux:
                    truth[q] = Fraction(1)
                values = _component_sigma(report, comp, sample)
                zero_at = None
                bad = None
                for q in comp.order:
                    f = comp.formulas[q]
                    den = f.denominator.evaluate(values)
                    if den == 0:
                        zero_at = q
                        break
                    got = f.numerator.evaluate(values) / den
                    values[q] = got
                    if got != truth[q] and bad is None:
                        bad = (q, got)
                if zero_at is None:
                    break
            else:
                raise PersistentZeroDenominator(var_name(zero_at), resamples)
            checked += 1
            if bad is not None:
                q, got = bad
                return VerificationResult(trials, False, {
                    "trial": trial,
                    "seed": seed,
                    "component": comp.index,
                    "parameter": var_name(q),
                    "expected": str(truth[q]),
                    "recovered": str(got),
                }, checked)
    return VerificationResult(trials, True, None, checked)
