"""Model ideals, degree-bounded identification and the full-basis baseline.

Variables are tuples: ``("l", u, v)`` for the edge coefficient of ``u -> v``,
``("w", u, v)`` (``u <= v``) for error covariances, ``("s", u, v)``
(``u <= v``) for covariance entries and ``("h",)`` for the homogenization
variable.  Node labels are those of the input graph, also inside mixed
components.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .graphmodel import MixedGraph, TianComponent, tian_decompose, trek_weights
from .groebner import Budget, EffortExceeded, Engine
from .polyring import MonomialOrder, Polynomial, VariableTable, var_name

H = ("h",)


class InvalidDegree(ValueError):
    pass


class DegenerateDenominator(RuntimeError):
    """Every sampled witness point made a chained denominator vanish."""


def lam(u: int, v: int) -> tuple:
    return ("l", u, v)


def om(u: int, v: int) -> tuple:
    return ("w", min(u, v), max(u, v))


def sig(u: int, v: int) -> tuple:
    return ("s", min(u, v), max(u, v))


def is_lambda(var) -> bool:
    return var[0] == "l"


def is_theta(var) -> bool:
    return var[0] in ("l", "w")


# -- model table and covariance parametrization ---------------------------------


def _labels(graph: MixedGraph, labels) -> tuple:
    if labels is None:
        return tuple(graph.nodes)
    labels = tuple(labels)
    if len(labels) != graph.p or list(labels) != sorted(labels):
        raise ValueError("labels must be increasing, one per node")
    return labels


def theta(graph: MixedGraph, labels=None) -> list[tuple]:
    """Parameters in canonical order: edge coefficients, then error covariances."""
    lb = _labels(graph, labels)
    out = [lam(lb[u - 1], lb[v - 1]) for u, v in graph.lambdas()]
    out += [om(lb[u - 1], lb[v - 1]) for u, v in graph.omegas()]
    return out


def model_table(graph: MixedGraph, labels=None, weights=None) -> VariableTable:
    lb = _labels(graph, labels)
    if weights is None:
        weights = trek_weights(graph)
    variables = theta(graph, lb)
    wts = [1] * len(variables)
    for u in graph.nodes:
        for v in range(u, graph.p + 1):
            variables.append(sig(lb[u - 1], lb[v - 1]))
            wts.append(weights[(u, v)])
    variables.append(H)
    wts.append(1)
    return VariableTable(variables, wts)


def _matmul(a: dict, b: dict, zero: Polynomial) -> dict:
    # sparse matrices as {(i, j): Polynomial}
    rows: dict = {}
    for (i, k), x in a.items():
        rows.setdefault(k, []).append((i, x))
    out: dict = {}
    for (k, j), y in b.items():
        for i, x in rows.get(k, ()):
            prod = x * y
            cur = out.get((i, j))
            out[(i, j)] = prod if cur is None else cur + prod
    return {key: v for key, v in out.items() if not v.is_zero()}


def sigma_polynomials(graph: MixedGraph, table: VariableTable | None = None, labels=None) -> dict:
    """Covariance entries as polynomials in the parameters.

    Uses ``(I - Lambda)^{-1} = sum_k Lambda^k`` (nilpotent since the directed
    part is acyclic) and returns ``{(u, v): tau(sigma_uv)}`` for ``u <= v``,
    keyed by node label.
    """
    lb = _labels(graph, labels)
    if table is None:
        table = model_table(graph, lb)
    zero = table.zero()
    L = {(u, v): table.gen(lam(lb[u - 1], lb[v - 1])) for u, v in graph.directed}
    M = {(v, v): table.const(1) for v in graph.nodes}
    power = dict(L)
    while power:
        for key, val in power.items():
            M[key] = M[key] + val if key in M else val
        power = _matmul(power, L, zero)
    Om = {(v, v): table.gen(om(lb[v - 1], lb[v - 1])) for v in graph.nodes}
    for u, v in graph.bidirected:
        w = table.gen(om(lb[u - 1], lb[v - 1]))
        Om[(u, v)] = w
        Om[(v, u)] = w
    Mt = {(j, i): x for (i, j), x in M.items()}
    S = _matmul(_matmul(Mt, Om, zero), M, zero)
    return {
        (lb[u - 1], lb[v - 1]): S.get((u, v), zero)
        for u in graph.nodes
        for v in range(u, graph.p + 1)
    }


def _directed_paths(graph: MixedGraph, s: int, max_edges: int | None) -> dict:
    """All directed paths from ``s``, grouped by end node, as edge lists."""
    children = {v: graph.children(v) for v in graph.nodes}
    out: dict = {}
    stack = [(s, [])]
    while stack:
        v, path = stack.pop()
        out.setdefault(v, []).append(path)
        if max_edges is not None and len(path) >= max_edges:
            continue
        for c in children[v]:
            stack.append((c, path + [(v, c)]))
    return out


def treks_enumerate(
    graph: MixedGraph,
    u: int,
    v: int,
    max_len: int | None = None,
    table: VariableTable | None = None,
    labels=None,
) -> list[Polynomial]:
    """Trek monomials between ``u`` and ``v`` (local node indices), one per trek.

    A trek is a top (a node ``s`` or a bidirected edge ``s <-> t``) with a
    directed path from the top down to each endpoint; its length is the
    number of edges on both legs plus one.
    """
    lb = _labels(graph, labels)
    if table is None:
        table = model_table(graph, lb)
    paths = {s: _directed_paths(graph, s, max_len) for s in graph.nodes}
    tops = [(s, s) for s in graph.nodes]
    for a, b in sorted(graph.bidirected):
        tops += [(a, b), (b, a)]
    out = []
    for s, t in tops:
        for left in paths[s].get(u, []):
            for right in paths[t].get(v, []):
                length = len(left) + len(right) + 1
                if max_len is not None and length > max_len:
                    continue
                mono = table.var_monomial(om(lb[s - 1], lb[t - 1]))
                for a, b in left + right:
                    mono += table.var_monomial(lam(lb[a - 1], lb[b - 1]))
                out.append(Polynomial(table, {mono: 1}))
    return out


@dataclass
class ModelIdeal:
    """Homogenized model ideal of a graph (or of one relabeled mixed component)."""

    graph: MixedGraph
    labels: tuple
    table: VariableTable
    theta: list
    sigma: dict
    generators: list
    w_trek: int

    def generator(self, u: int, v: int) -> Polynomial:
        """Generator of ``sigma_uv`` (labels)."""
        pairs = list(self.sigma)
        return self.generators[pairs.index((min(u, v), max(u, v)))]

    def affine_generators(self) -> list[Polynomial]:
        return [g.dehomogenize() for g in self.generators]


def build_ideal(graph: MixedGraph, labels=None) -> ModelIdeal:
    lb = _labels(graph, labels)
    weights = trek_weights(graph)
    table = model_table(graph, lb, weights)
    sigma = sigma_polynomials(graph, table, lb)
    gens = []
    for (u, v), tau in sigma.items():
        s = table.gen(sig(u, v))
        gens.append(s if tau.is_zero() else s - tau.homogenize())
    return ModelIdeal(graph, lb, table, theta(graph, lb), sigma, gens, weights.w_trek)


# -- formulas and reports ------------------------------------------------------


@dataclass
class IdentifyingFormula:
    """``parameter = numerator / denominator`` in earlier parameters and covariances."""

    parameter: tuple
    numerator: Polynomial
    denominator: Polynomial
    depends_on: tuple
    w_degree: int
    plain_degree: int
    polynomial: Polynomial | None = None  # source element, homogenized when it came from the degree-bounded search
    source: str = "groebner"
    component: int | None = None

    def to_json(self) -> dict:
        doc = {
            "formula_numerator": self.numerator.to_string(),
            "formula_denominator": self.denominator.to_string(),
            "depends_on": [var_name(v) for v in self.depends_on],
            "w_degree": self.w_degree,
            "plain_degree": self.plain_degree,
            "source": self.source,
            "component": self.component,
        }
        if self.polynomial is not None:
            doc["polynomial"] = self.polynomial.dehomogenize().to_string()
        return doc


@dataclass
class ComponentResult:
    index: int | None
    internal: tuple
    nodes: tuple
    parameters: list
    auxiliary: list
    formulas: dict
    order: list
    w_trek: int
    d_prime: int
    stop_reason: str | None = None
    elapsed: float = 0.0
    ideal: ModelIdeal | None = None

    @property
    def complete(self) -> bool:
        return all(q in self.formulas for q in self.parameters + self.auxiliary)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "internal": list(self.internal),
            "nodes": list(self.nodes),
            "parameters": [var_name(q) for q in self.parameters],
            "auxiliary": [var_name(q) for q in self.auxiliary],
            "identification_order": [var_name(q) for q in self.order],
            "w_trek": self.w_trek,
            "d_prime": self.d_prime,
            "stop_reason": self.stop_reason,
            "elapsed": self.elapsed,
        }


@dataclass
class IdentificationReport:
    graph: MixedGraph
    method: str
    verdict: str
    parameters: list
    formulas: dict
    identification_order: list
    components: list
    settings: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    stop_reason: str | None = None
    verification: dict | None = None

    def status(self, q) -> str:
        return "identified" if q in self.formulas else "not-identified"

    def to_json(self, timings: bool = True) -> dict:
        params = {}
        for q in self.parameters:
            entry = {"status": self.status(q)}
            if q in self.formulas:
                entry.update(self.formulas[q].to_json())
            params[var_name(q)] = entry
        doc = {
            "graph": self.graph.to_json(),
            "method": self.method,
            "verdict": self.verdict,
            "stop_reason": self.stop_reason,
            "parameters": params,
            "identification_order": [var_name(q) for q in self.identification_order],
            "settings": dict(self.settings),
            "components": [c.to_json() for c in self.components],
        }
        if timings:
            doc["timings"] = dict(self.timings)
        else:
            for c in doc["components"]:
                c.pop("elapsed", None)
        if self.verification is not None:
            doc["verification"] = self.verification
        return doc


# -- detection -----------------------------------------------------------------


def _mask(table: VariableTable, variables: Iterable) -> int:
    from .polyring import FIELD_BITS

    m = 0
    for v in variables:
        m |= ((1 << FIELD_BITS) - 1) << (FIELD_BITS * table.index[v])
    return m


def _formula_from(g: Polynomial, q, theta_set, component=None, source="groebner") -> IdentifyingFormula:
    table = g.table
    A, B = g.split_by(q)
    num = (-B).dehomogenize()
    den = A.dehomogenize()
    deps = tuple(v for v in table.variables if v in theta_set and v != q and v in g.variables())
    return IdentifyingFormula(
        parameter=q,
        numerator=num,
        denominator=den,
        depends_on=deps,
        w_degree=g.weighted_degree(),
        plain_degree=g.dehomogenize().total_degree(),
        polynomial=g,
        source=source,
        component=component,
    )


def detect_identifying(basis: Sequence[Polynomial], q, theta_rem: Iterable, theta_id: Iterable = ()):
    """Lowest-degree basis element of the form ``q*a - b`` with ``a, b`` free of ``theta_rem``.

    ``basis`` must be a reduced (truncated) basis for an elimination order of
    ``theta_rem``; then ``a`` is automatically outside the elimination ideal.
    Returns an :class:`IdentifyingFormula` or ``None``.
    """
    found = _scan(list(basis), [q], list(theta_rem))
    if not found:
        return None
    theta_set = set(theta_rem) | set(theta_id)
    return _formula_from(found[q], q, theta_set)


def _scan(basis: list[Polynomial], targets: list, theta_rem: list) -> dict:
    """For each target, the first lowest-degree identifying element in ``basis``."""
    if not basis:
        return {}
    table = basis[0].table
    rem_mask = _mask(table, theta_rem)
    want = {table.var_monomial(q): q for q in targets}
    best: dict = {}
    for g in basis:
        qm = None
        ok = True
        for m in g.terms:
            part = m & rem_mask
            if not part:
                continue
            if qm is None and part in want:
                qm = part
            elif part != qm:
                ok = False
                break
        if not ok or qm is None:
            continue
        q = want[qm]
        wd = g.weighted_degree()
        if q not in best or wd < best[q].weighted_degree():
            best[q] = g
    return best


# -- degree-bounded search -----------------------------------------------------------


def _elimination_order(table: VariableTable, theta_rem: list, q) -> MonomialOrder:
    block1 = [v for v in theta_rem if v != q] + [q]
    return MonomialOrder(table, block1, graded=True)


def _run_component(
    ideal: ModelIdeal,
    d: int,
    early_stop_lambda: bool,
    budget: Budget,
    incremental: bool,
    trace,
    index,
    parameters: list,
    auxiliary: list,
) -> ComponentResult:
    t0 = time.perf_counter()
    table = ideal.table
    d_prime = d * ideal.w_trek
    theta_all = list(ideal.theta)
    theta_set = set(theta_all)
    theta_rem = list(theta_all)
    formulas: dict = {}
    order_seen: list = []
    stop = None

    def targets():
        if early_stop_lambda:
            return [q for q in theta_rem if is_lambda(q)]
        return list(theta_rem)

    try:
        while targets():
            found = None
            engines: dict = {}
            scanned: dict = {}
            finished: set = set()
            for k in range(1, d_prime + 1):
                for q in targets():
                    if q in finished:
                        continue
                    if incremental:
                        eng = engines.get(q)
                        if eng is None:
                            order = _elimination_order(table, theta_rem, q)
                            eng = engines[q] = Engine(ideal.generators, order, budget, trace, max_degree=d_prime)
                    else:
                        order = _elimination_order(table, theta_rem, q)
                        eng = Engine(ideal.generators, order, budget, trace, max_degree=d_prime)
                    budget.resume()
                    try:
                        eng.extend(k)
                    finally:
                        budget.pause()
                    if eng.exhausted:
                        # the complete basis is known; higher k adds nothing
                        finished.add(q)
                    # nothing new since the last scan means nothing new to find
                    if incremental and scanned.get(q) == eng.stats["new"]:
                        continue
                    scanned[q] = eng.stats["new"]
                    hits = _scan(eng.basis(k), targets(), theta_rem)
                    if hits:
                        r = next(t for t in targets() if t in hits)
                        found = (r, hits[r], k, q)
                        break
                if found or finished.issuperset(targets()):
                    break
            if not found:
                break
            r, g, k, q = found
            if trace:
                trace(f"identified {var_name(r)} at degree {k} (order with {var_name(q)} smallest)")
            formulas[r] = _formula_from(g, r, theta_set, component=index)
            order_seen.append(r)
            theta_rem.remove(r)
    except EffortExceeded as exc:
        stop = exc.reason

    if early_stop_lambda and stop is None and not targets():
        for f in recover_omega(ideal, component=index):
            formulas[f.parameter] = f
            order_seen.append(f.parameter)

    return ComponentResult(
        index=index,
        internal=tuple(n for n in ideal.labels if any(om(n, n) == q for q in parameters)),
        nodes=ideal.labels,
        parameters=parameters,
        auxiliary=auxiliary,
        formulas=formulas,
        order=order_seen,
        w_trek=ideal.w_trek,
        d_prime=d_prime,
        stop_reason=stop,
        elapsed=time.perf_counter() - t0,
        ideal=ideal,
    )


def recover_omega(ideal: ModelIdeal, component=None) -> list[IdentifyingFormula]:
    """Error covariances from ``Omega = (I - Lambda)^T Sigma (I - Lambda)``.

    Edge coefficients enter as already identified symbols.
    """
    g, lb, table = ideal.graph, ideal.labels, ideal.table
    pos = {v: i + 1 for i, v in enumerate(lb)}
    one = table.const(1)

    def ilam(s, u):
        # entry (s, u) of I - Lambda, local indices
        if s == u:
            return one
        if (s, u) in g.directed:
            return -table.gen(lam(lb[s - 1], lb[u - 1]))
        return None

    out = []
    for q in ideal.theta:
        if is_lambda(q):
            continue
        u, v = pos[q[1]], pos[q[2]]
        expr = table.zero()
        for s in g.nodes:
            a = ilam(s, u)
            if a is None:
                continue
            for t in g.nodes:
                b = ilam(t, v)
                if b is None:
                    continue
                expr = expr + a * b * table.gen(sig(lb[s - 1], lb[t - 1]))
        src = table.gen(q) - expr
        deps = tuple(x for x in table.variables if is_lambda(x) and x in expr.variables())
        out.append(
            IdentifyingFormula(
                parameter=q,
                numerator=expr,
                denominator=one,
                depends_on=deps,
                w_degree=src.weighted_degree(),
                plain_degree=src.total_degree(),
                polynomial=src,
                source="omega-recovery",
                component=component,
            )
        )
    return out


def _component_ideal(comp: TianComponent) -> tuple[ModelIdeal, list, list]:
    sub, labels = comp.subgraph()
    ideal = build_ideal(sub, labels)
    aux = [om(v, v) for v in comp.incoming]
    params = [q for q in ideal.theta if q not in aux]
    return ideal, params, aux


def algorithm1(
    graph: MixedGraph,
    d: int = 5,
    tian: bool = True,
    early_stop_lambda: bool = False,
    timeout: float | None = None,
    spair_cap: int | None = None,
    incremental: bool = True,
    timeout_scope: str = "all",
    short_circuit: bool = False,
    trace: Callable[[str], None] | None = None,
) -> IdentificationReport:
    """Degree-bounded identification.

    Returns a report with verdict ``"yes"`` (all parameters identified),
    ``"no"`` (search finished without identifying everything) or
    ``"partial"`` (effort budget exhausted first).  With ``tian`` each mixed
    component is handled separately and its formulas are expressed in the
    covariance matrix of that component (see :func:`degid.verify.component_covariance`).
    With ``short_circuit`` the remaining components are skipped once one
    component ends without full identification.
    """
    if not isinstance(d, int) or d < 2:
        raise InvalidDegree(f"degree bound must be an integer >= 2, got {d!r}")
    if timeout_scope not in ("all", "gb"):
        raise ValueError("timeout_scope must be 'all' or 'gb'")
    t0 = time.perf_counter()
    budget = Budget(spair_cap=spair_cap, timeout=timeout, running=timeout_scope == "all")
    results: list[ComponentResult] = []
    stop = None
    try:
        if tian:
            comps = tian_decompose(graph)
            prepared = []
            for j, comp in enumerate(comps):
                budget.check_time()
                prepared.append(_component_ideal(comp) + (j,))
        else:
            ideal = build_ideal(graph)
            prepared = [(ideal, list(ideal.theta), [], None)]
        for ideal, params, aux, j in prepared:
            res = _run_component(ideal, d, early_stop_lambda, budget, incremental, trace, j, params, aux)
            results.append(res)
            if res.stop_reason:
                stop = res.stop_reason
            if not res.complete and (short_circuit or res.stop_reason):
                break
    except EffortExceeded as exc:
        stop = exc.reason

    return _merge(graph, "degbd", results, stop, time.perf_counter() - t0, {
        "d": d,
        "d_prime": max((r.d_prime for r in results), default=d * trek_weights(graph).w_trek),
        "tian": tian,
        "early_stop_lambda": early_stop_lambda,
        "incremental": incremental,
        "timeout": timeout,
        "timeout_scope": timeout_scope,
        "spair_cap": spair_cap,
    }, budget)


def _merge(graph, method, results, stop, elapsed, settings, budget) -> IdentificationReport:
    params = theta(graph)
    formulas: dict = {}
    order: list = []
    for r in results:
        aux = set(r.auxiliary)
        for q in r.order:
            if q not in aux:
                formulas[q] = r.formulas[q]
                order.append(q)
    if all(q in formulas for q in params):
        verdict = "yes"
    elif stop:
        verdict = "partial"
    else:
        verdict = "no"
    if len(results) == 1 and results[0].index is None:
        settings["d_prime"] = results[0].d_prime
    return IdentificationReport(
        graph=graph,
        method=method,
        verdict=verdict,
        parameters=params,
        formulas=formulas,
        identification_order=order,
        components=results,
        settings=settings,
        timings={"total": elapsed, "spairs": budget.spairs},
        stop_reason=stop,
    )


# -- baseline ------------------------------------------------------------------


def garcia_puente(
    graph: MixedGraph,
    effort_cap: int | None = None,
    timeout: float | None = None,
    trace: Callable[[str], None] | None = None,
) -> IdentificationReport:
    """Full reduced basis of the affine model ideal under a lex-elimination order.

    Raises :class:`EffortExceeded` when the S-pair cap or the deadline runs out.
    """
    from .groebner import buchberger_full

    t0 = time.perf_counter()
    budget = Budget(spair_cap=effort_cap, timeout=timeout)
    ideal = build_ideal(graph)
    table = ideal.table
    params = list(ideal.theta)
    lams = [q for q in params if is_lambda(q)]
    oms = [q for q in params if not is_lambda(q)]
    # largest first: error covariances, then edge coefficients in edge order
    block1 = oms + lams
    order = MonomialOrder(table, block1, graded=False)
    basis = buchberger_full(ideal.affine_generators(), order, budget=budget, trace=trace)
    theta_mask = _mask(table, params)
    theta_set = set(params)
    ident: dict = {}
    seq: list = []
    for q in reversed(block1):
        qm = table.var_monomial(q)
        best = None
        for g in basis.elements:
            lm = max(g.terms, key=order.key)
            if lm & theta_mask != qm:
                continue
            if g.degree_in(q) != 1:
                continue
            if not all(v == q or v in ident for v in g.variables() if v in theta_set):
                continue
            if best is None or g.total_degree() < best.total_degree():
                best = g
        if best is not None:
            ident[q] = _formula_from(best, q, theta_set, source="gp")
            seq.append(q)
    verdict = "yes" if len(ident) == len(params) else "no"
    comp = ComponentResult(
        index=None,
        internal=tuple(graph.nodes),
        nodes=tuple(graph.nodes),
        parameters=params,
        auxiliary=[],
        formulas=ident,
        order=seq,
        w_trek=ideal.w_trek,
        d_prime=0,
        elapsed=time.perf_counter() - t0,
        ideal=ideal,
    )
    report = _merge(graph, "gp", [comp], None, time.perf_counter() - t0, {
        "effort_cap": effort_cap,
        "timeout": timeout,
        "basis_size": len(basis.elements),
    }, budget)
    report.verdict = verdict
    return report


# -- formula chains --------------------------------------------------------------


def _chain_substitute_poly(poly: Polynomial, resolved: dict, deps: list, exps: dict) -> Polynomial:
    table = poly.table
    for s in deps:
        a, b = resolved[s]
        out = table.zero()
        for m, c in poly.terms.items():
            e = table.exponent(m, s)
            base = Polynomial._raw(table, {m - e * table.var_monomial(s): c})
            out = out + base * a ** e * b ** (exps[s] - e)
        poly = out
    return poly


def substitute_formula_chain(report: IdentificationReport, rng_seed: int = 0, retries: int = 5) -> dict:
    """Pure-covariance numerator/denominator for every identified parameter.

    Earlier formulas are substituted into later ones and denominators are
    cleared.  Each resulting denominator is checked to be nonzero at a
    sampled parameter point; formulas of mixed components refer to the
    covariance matrix of their component.
    """
    from .verify import component_covariance, covariance_exact, sample_params, sigma_assignment

    out: dict = {}
    for comp in report.components:
        resolved: dict = {}
        for q in comp.order:
            f = comp.formulas[q]
            deps = [s for s in f.depends_on if s in resolved]
            if len(deps) != len(f.depends_on):
                raise ValueError(f"{var_name(q)} depends on a parameter without a formula")
            exps = {s: max(f.numerator.degree_in(s), f.denominator.degree_in(s)) for s in deps}
            num = _chain_substitute_poly(f.numerator, resolved, deps, exps)
            den = _chain_substitute_poly(f.denominator, resolved, deps, exps)
            resolved[q] = (num, den)
        for q in comp.order:
            if q in comp.auxiliary:
                continue
            num, den = resolved[q]
            for attempt in range(retries):
                sample = sample_params(report.graph, rng_seed + attempt)
                if comp.index is None:
                    values = sigma_assignment(covariance_exact(report.graph, sample))
                else:
                    S = component_covariance(report.graph, sample, comp.index)
                    values = sigma_assignment(S, comp.nodes)
                if den.evaluate(values) != 0:
                    break
            else:
                raise DegenerateDenominator(f"denominator of {var_name(q)} vanished at every sample")
            out[q] = (num, den)
    return out
