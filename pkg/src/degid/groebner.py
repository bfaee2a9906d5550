"""Buchberger's algorithm with degree truncation for weighted-homogeneous ideals.

One engine serves both the truncated and the full computation.  Pending work
(input generators and critical pairs) sits in a heap keyed by sugar degree,
which for weighted-homogeneous input is the exact weighted degree of the
S-polynomial.  Processing therefore runs degree by degree, and after every
item of degree ``<= k`` has been handled the elements of degree ``<= k`` are
exactly the low-degree part of the reduced Gröbner basis.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .polyring import FIELD_BITS, MonomialOrder, Polynomial, QQ, _FIELD_MASK


class NotHomogeneous(ValueError):
    pass


class NotGradedOrder(ValueError):
    pass


class EffortExceeded(RuntimeError):
    """The S-pair budget or the wall-clock deadline ran out.

    Carries statistics only; a partial basis is never handed out.
    """

    def __init__(self, reason: str, stats: dict | None = None):
        self.reason = reason
        self.stats = dict(stats or {})
        super().__init__(reason)


class Budget:
    """Shared effort budget: a cap on processed S-pairs and an optional time limit.

    The clock only runs between :meth:`resume` and :meth:`pause`, so callers
    can exclude preprocessing from the limit.
    """

    def __init__(self, spair_cap: int | None = None, timeout: float | None = None, running: bool = True):
        self.spair_cap = spair_cap
        self.timeout = timeout
        self.spairs = 0
        self.used = 0.0
        self.deadline = None
        self._started = None
        self._always = running
        self.resume()

    def resume(self):
        if self.timeout is not None and self._started is None:
            self._started = time.monotonic()
            self.deadline = self._started + self.timeout - self.used

    def pause(self):
        if self._always or self._started is None:
            return
        self.used += time.monotonic() - self._started
        self._started = None
        self.deadline = None

    def tick(self):
        self.spairs += 1
        if self.spair_cap is not None and self.spairs > self.spair_cap:
            raise EffortExceeded("S-pair cap reached", {"spairs": self.spairs})
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise EffortExceeded("time limit reached", {"spairs": self.spairs})

    def check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise EffortExceeded("time limit reached", {"spairs": self.spairs})


@dataclass
class GroebnerBasis:
    elements: list
    order: MonomialOrder
    degree_bound: int | None
    reduced: bool = True
    complete: bool = False
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def leading_monomials(self) -> list[int]:
        return [max(g.terms, key=self.order.key) for g in self.elements]


class _Elem:
    __slots__ = ("lm", "lk", "tail", "sugar", "wdeg", "reduced_tail")

    def __init__(self, terms, sugar, wdeg):
        # terms: list of (key, mono, coeff) sorted by decreasing key, leading coeff 1
        lk, lm, _ = terms[0]
        self.lm = lm
        self.lk = lk
        self.tail = [(m, k, c) for k, m, c in terms[1:]]
        self.sugar = sugar
        self.wdeg = wdeg
        self.reduced_tail = None


class Engine:
    """Incremental Buchberger state for one monomial order.

    ``extend(k)`` processes every pending item of sugar degree ``<= k`` and
    may be called repeatedly with growing ``k``.  ``basis(k)`` returns the
    inter-reduced monic elements of weighted degree ``<= k``.

    With ``max_degree`` set, critical pairs above that sugar degree are never
    queued; ``exhausted`` then means complete up to ``max_degree``.
    """

    def __init__(
        self,
        generators: Sequence[Polynomial],
        order: MonomialOrder,
        budget: Budget | None = None,
        trace: Callable[[str], None] | None = None,
        max_degree: int | None = None,
    ):
        self.order = order
        self.max_degree = max_degree
        self.table = order.table
        self.budget = budget or Budget()
        self.trace = trace
        self.homogeneous = all(g.is_w_homogeneous() for g in generators)
        self.elems: list[_Elem] = []
        self.active: list[int] = []
        self.queue: list = []
        self._seq = 0
        self.done = -1
        self.stats = {"pairs": 0, "zero": 0, "new": 0, "criteria": 0}
        # monomial -> reducer, and monomial -> element count at a failed lookup
        self._pos: dict = {}
        self._neg: dict = {}
        # divisor index: bit i of _le[v][a] is set when element i has exponent
        # <= a in variable v; _active holds the bits of non-retired elements
        self._le: list = [[] for _ in range(self.table.n)]
        self._lm_vars: list = []
        self._index: list = []
        self._active = 0
        self._seen = 0
        self._gens = []
        wdeg = self.table.wdeg
        for g in generators:
            if g.is_zero():
                continue
            if g.table != self.table:
                raise ValueError("generator over a different variable table")
            s = max(wdeg(m) for m in g.terms)
            self._gens.append(g)
            self._push(s, order.key(max(g.terms, key=order.key)), ("gen", len(self._gens) - 1))

    # -- queue ---------------------------------------------------------------

    def _push(self, sugar, key, item):
        self._seq += 1
        heapq.heappush(self.queue, (sugar, key, self._seq, item))

    @property
    def exhausted(self) -> bool:
        return not self.queue

    def next_degree(self) -> int | None:
        return self.queue[0][0] if self.queue else None

    # -- reduction -----------------------------------------------------------

    def _divisor(self, m):
        hit = self._pos.get(m)
        if hit is not None:
            return hit
        # elements older than the last failed lookup cannot divide m
        start = self._neg.get(m, 0)
        cand = (self._active >> start) << start
        for shift, col, n in self._index:
            a = (m >> shift) & _FIELD_MASK
            if a < n:
                cand &= col[a]
                if not cand:
                    break
        if cand:
            e = self.elems[(cand & -cand).bit_length() - 1]
            self._pos[m] = e
            return e
        self._neg[m] = len(self.elems)
        return None

    def _reduce(self, f: dict, keys: dict, skip_top: bool = False):
        """Fully reduce ``f`` (mono -> coeff, with ``keys`` mono -> order key).

        Returns the remainder as ``[(key, mono, coeff), ...]`` in decreasing order.
        """
        heap = [(-k, m) for m, k in keys.items()]
        heapq.heapify(heap)
        rem = []
        pop, push = heapq.heappop, heapq.heappush
        first = skip_top
        steps = 0
        budget = self.budget
        while heap:
            steps += 1
            if steps & 4095 == 0:
                budget.check_time()
            nk, m = pop(heap)
            c = f.pop(m, None)
            if c is None:
                continue
            if first:
                first = False
                rem.append((-nk, m, c))
                continue
            e = self._divisor(m)
            if e is None:
                rem.append((-nk, m, c))
                continue
            shift = m - e.lm
            kshift = -nk - e.lk
            for tm, tk, tc in e.tail:
                nm = tm + shift
                old = f.get(nm)
                if old is None:
                    f[nm] = -c * tc
                    push(heap, (-(tk + kshift), nm))
                else:
                    v = old - c * tc
                    if v:
                        f[nm] = v
                    else:
                        del f[nm]
        return rem

    def _spoly(self, i, j):
        a, b = self.elems[i], self.elems[j]
        lcm = self.table.lcm(a.lm, b.lm)
        lk = self.order.key(lcm)
        f: dict = {}
        keys: dict = {}
        sa, ka = lcm - a.lm, lk - a.lk
        for m, k, c in a.tail:
            nm = m + sa
            f[nm] = c
            keys[nm] = k + ka
        sb, kb = lcm - b.lm, lk - b.lk
        for m, k, c in b.tail:
            nm = m + sb
            old = f.get(nm)
            if old is None:
                f[nm] = -c
                keys[nm] = k + kb
            else:
                v = old - c
                if v:
                    f[nm] = v
                else:
                    del f[nm]
        return f, {m: keys[m] for m in f}

    # -- main loop -----------------------------------------------------------

    def extend(self, bound: float):
        """Process all pending items with sugar ``<= bound``."""
        while self.queue and self.queue[0][0] <= bound:
            sugar, _, _, item = heapq.heappop(self.queue)
            if item[0] == "gen":
                g = self._gens[item[1]]
                f = dict(g.terms)
                keys = {m: self.order.key(m) for m in f}
                label = f"gen {item[1]}"
            else:
                _, i, j, _ = item
                self.budget.tick()
                self.stats["pairs"] += 1
                f, keys = self._spoly(i, j)
                label = f"pair ({i},{j})"
            rem = self._reduce(f, keys) if f else []
            if not rem:
                self.stats["zero"] += 1
                if self.trace:
                    self.trace(f"deg={sugar} {label} -> zero")
                continue
            lc = rem[0][2]
            if lc != 1:
                inv = 1 / lc
                rem = [(k, m, c * inv) for k, m, c in rem]
            wdeg = self.table.wdeg(rem[0][1])
            self._add(_Elem(rem, sugar, wdeg))
            if self.trace:
                self.trace(f"deg={sugar} {label} -> new #{len(self.elems) - 1}")
        if self.budget.deadline is not None:
            self.budget.check_time()
        self.done = max(self.done, bound)

    def _add(self, h: _Elem):
        table = self.table
        g = table.guard
        lcm_of = table.lcm
        key = self.order.key
        elems = self.elems
        hi = len(elems)
        elems.append(h)
        self.stats["new"] += 1
        hlm = h.lm

        # Gebauer-Moeller: drop queued pairs whose lcm is strictly covered via h
        if self.queue:
            filtered = []
            dropped = 0
            for entry in self.queue:
                item = entry[3]
                if item[0] == "pair":
                    l = item[3]
                    if ((l | g) - hlm) & g == g:
                        li, lj = elems[item[1]].lm, elems[item[2]].lm
                        if lcm_of(li, hlm) != l and lcm_of(lj, hlm) != l:
                            dropped += 1
                            continue
                filtered.append(entry)
            if dropped:
                heapq.heapify(filtered)
                self.queue = filtered
                self.stats["criteria"] += dropped

        # new pairs in increasing lcm order; a pair is redundant when an earlier
        # kept lcm divides its lcm (equal lcms keep the first, coprime pairs first)
        deg = table.degree
        cap = self.max_degree
        cands = []
        for gi in self.active:
            glm = elems[gi].lm
            l = lcm_of(glm, hlm)
            coprime = l == glm + hlm
            cands.append((deg(l), not coprime, gi, l))
        cands.sort()
        kept = []
        for k, notcop, gi, l in cands:
            lg = l | g
            if any((lg - l2) & g == g for _, _, l2 in kept):
                self.stats["criteria"] += 1
                continue
            kept.append((gi, notcop, l))
        for gi, notcop, l in kept:
            if not notcop:
                self.stats["criteria"] += 1
                continue
            e = elems[gi]
            wl = table.wdeg(l)
            sugar = max(e.sugar + wl - e.wdeg, h.sugar + wl - h.wdeg)
            if cap is not None and sugar > cap:
                continue
            self._push(sugar, deg(l), ("pair", gi, hi, l))

        self._activate(hi)

    def _activate(self, hi: int):
        """Make element ``hi`` active and retire the elements it makes redundant."""
        g = self.table.guard
        elems = self.elems
        hlm = elems[hi].lm
        keep = []
        for gi in self.active:
            if ((elems[gi].lm | g) - hlm) & g == g:
                self._active &= ~(1 << gi)
            else:
                keep.append(gi)
        self.active = keep + [hi]
        bit = 1 << hi
        self._active |= bit
        le = self._le
        for v, a in enumerate(self.table.exponents(hlm)):
            col = le[v]
            if a >= len(col):
                if not col:
                    if not a:
                        continue
                    self._lm_vars.append(v)
                    self._lm_vars.sort()
                # new exponent range: every element seen so far lies below it
                col.extend([self._seen] * (a + 1 - len(col)))
            for x in range(a, len(col)):
                col[x] |= bit
        self._seen |= bit
        self._index = [(FIELD_BITS * v, le[v], len(le[v])) for v in self._lm_vars]

    # -- output --------------------------------------------------------------

    def _reduced_terms(self, i: int, final: bool):
        e = self.elems[i]
        if e.reduced_tail is not None:
            return e.reduced_tail
        f = {e.lm: QQ(1)}
        keys = {e.lm: e.lk}
        for m, k, c in e.tail:
            f[m] = c
            keys[m] = k
        rem = self._reduce(f, keys, skip_top=True)
        if final:
            e.reduced_tail = rem
        return rem

    def basis_terms(self, bound: float | None = None):
        """Reduced elements as term lists, sorted by increasing leading monomial."""
        out = []
        for i in self.active:
            e = self.elems[i]
            if bound is not None and e.wdeg > bound:
                continue
            # an element's reduced form only depends on elements of degree <= its own
            final = not self.queue or (self.homogeneous and e.wdeg <= self.done)
            out.append(self._reduced_terms(i, final))
        out.sort(key=lambda t: t[0][0])
        return out

    def basis(self, bound: float | None = None) -> list[Polynomial]:
        return [
            Polynomial._raw(self.table, {m: c for _, m, c in terms})
            for terms in self.basis_terms(bound)
        ]


def _check_homogeneous(generators, order):
    for g in generators:
        if not g.is_w_homogeneous():
            raise NotHomogeneous(f"generator {g} is not weighted-homogeneous")
    if not order.graded:
        raise NotGradedOrder("degree truncation needs a weighted-graded order")


def buchberger_truncated(
    generators: Sequence[Polynomial],
    order: MonomialOrder,
    bound: int,
    budget: Budget | None = None,
    trace: Callable[[str], None] | None = None,
) -> GroebnerBasis:
    """Elements of the reduced Gröbner basis of weighted degree ``<= bound``."""
    _check_homogeneous(generators, order)
    eng = Engine(generators, order, budget, trace)
    eng.extend(bound)
    return GroebnerBasis(
        eng.basis(bound), order, bound, reduced=True, complete=eng.exhausted, stats=dict(eng.stats)
    )


def buchberger_full(
    generators: Sequence[Polynomial],
    order: MonomialOrder,
    effort_cap: int | None = None,
    budget: Budget | None = None,
    trace: Callable[[str], None] | None = None,
) -> GroebnerBasis:
    """Reduced Gröbner basis; raises :class:`EffortExceeded` when the budget runs out."""
    if budget is None:
        budget = Budget(spair_cap=effort_cap)
    eng = Engine(generators, order, budget, trace)
    try:
        eng.extend(float("inf"))
    except EffortExceeded as exc:
        exc.stats.update(eng.stats)
        raise
    return GroebnerBasis(eng.basis(), order, None, reduced=True, complete=True, stats=dict(eng.stats))


def normal_form(f: Polynomial, basis: Sequence[Polynomial], order: MonomialOrder) -> Polynomial:
    """Remainder of ``f`` on division by ``basis``.

    Always reduces the largest reducible monomial, using the first basis
    element (in sequence order) whose leading monomial divides it.
    """
    table = f.table
    key = order.key
    heads = []
    for g in basis:
        if g.is_zero():
            raise ValueError("basis elements must be nonzero")
        lm = max(g.terms, key=key)
        heads.append((lm, g.terms[lm], g))
    work = dict(f.terms)
    heap = [(-key(m), m) for m in work]
    heapq.heapify(heap)
    rem = {}
    divides = table.divides
    while heap:
        _, m = heapq.heappop(heap)
        c = work.pop(m, None)
        if c is None:
            continue
        for lm, lc, g in heads:
            if divides(lm, m):
                factor = c / lc
                shift = m - lm
                for gm, gc in g.terms.items():
                    if gm == lm:
                        continue
                    nm = gm + shift
                    old = work.get(nm)
                    if old is None:
                        work[nm] = -factor * gc
                        heapq.heappush(heap, (-key(nm), nm))
                    else:
                        v = old - factor * gc
                        if v:
                            work[nm] = v
                        else:
                            del work[nm]
                break
        else:
            rem[m] = c
    return Polynomial._raw(table, rem)


def is_reduced_basis(elements: Sequence[Polynomial], order: MonomialOrder) -> bool:
    """Reduced-basis check: monic leading terms, and no monomial of any
    element divisible by the leading monomial of another element."""
    if not elements:
        return True
    table = elements[0].table
    lms = []
    for g in elements:
        lm = max(g.terms, key=order.key)
        if g.terms[lm] != 1:
            return False
        lms.append(lm)
    for i, g in enumerate(elements):
        for j, lm in enumerate(lms):
            if i != j and any(table.divides(lm, m) for m in g.terms):
                return False
    return True
