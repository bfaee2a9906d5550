"""Exact sparse multivariate polynomials with weighted gradings.

Monomials are packed into a single Python integer: every variable owns a
fixed-width bit field whose top bit is a guard bit that stays clear.  That
makes multiplication an integer addition and divisibility a subtraction
followed by a mask test.  Coefficients are exact rationals (``gmpy2.mpq``
when available, :class:`fractions.Fraction` otherwise).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

try:
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover
    QQ = Fraction

FIELD_BITS = 10
MAX_EXPONENT = (1 << (FIELD_BITS - 1)) - 1
_FIELD_MASK = (1 << FIELD_BITS) - 1

# Order keys are linear functionals written in a balanced radix 2**KEY_BITS.
KEY_BITS = 24


class TableMismatch(ValueError):
    """Raised when polynomials over different variable tables are combined."""


class ZeroPolynomial(ValueError):
    """Raised by operations that are undefined for the zero polynomial."""


def to_qq(c):
    if isinstance(c, QQ):
        return c
    if isinstance(c, Fraction):
        return QQ(c.numerator, c.denominator)
    return QQ(c)


def to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def var_name(var: Hashable) -> str:
    """Render a variable identity: ``("l", 1, 2)`` becomes ``l_{1,2}``."""
    if isinstance(var, tuple):
        if len(var) == 1:
            return str(var[0])
        return f"{var[0]}_{{{','.join(str(i) for i in var[1:])}}}"
    return str(var)


class VariableTable:
    """Ordered list of variables with positive integer weights.

    Variable identities are arbitrary hashables.  The structural-model tables
    use tuples ``("l", u, v)``, ``("w", u, v)``, ``("s", u, v)`` and ``("h",)``.
    """

    def __init__(self, variables: Sequence[Hashable], weights: Sequence[int] | None = None):
        variables = tuple(variables)
        if weights is None:
            weights = (1,) * len(variables)
        weights = tuple(int(w) for w in weights)
        if len(weights) != len(variables):
            raise ValueError("one weight per variable is required")
        if len(set(variables)) != len(variables):
            raise ValueError("variable identities must be unique")
        if any(w < 1 for w in weights):
            raise ValueError("weights must be positive integers")
        self.variables = variables
        self.weights = weights
        self.n = len(variables)
        self.index = {v: i for i, v in enumerate(variables)}
        self.names = tuple(var_name(v) for v in variables)
        self.name_index = {s: i for i, s in enumerate(self.names)}
        self.guard = sum(1 << (FIELD_BITS * i + FIELD_BITS - 1) for i in range(self.n))
        self.hvar = next((v for v in variables if v in (("h",), "h")), None)
        # Degrees by multiplication: m * (1 + 2^F + 2^2F + ...) collects the sum
        # of all fields in the top field.  Exact while the total degree stays
        # below 2^F, far above anything a truncated computation reaches.
        self.ones = sum(1 << (FIELD_BITS * i) for i in range(self.n))
        self._top = FIELD_BITS * (self.n - 1)
        groups: dict = {}
        for i, w in enumerate(weights):
            groups[w] = groups.get(w, 0) | (_FIELD_MASK << (FIELD_BITS * i))
        self._weight_masks = tuple(sorted(groups.items()))

    def __repr__(self):
        return f"VariableTable({list(self.names)})"

    def __eq__(self, other):
        return (
            isinstance(other, VariableTable)
            and self.variables == other.variables
            and self.weights == other.weights
        )

    def __hash__(self):
        return hash((self.variables, self.weights))

    def weight(self, var) -> int:
        return self.weights[self.index[var]]

    # -- monomials ---------------------------------------------------------

    def monomial(self, exponents: Mapping[Hashable, int]) -> int:
        m = 0
        for var, e in exponents.items():
            if e < 0 or e > MAX_EXPONENT:
                raise ValueError(f"exponent {e} out of range")
            m += e << (FIELD_BITS * self.index[var])
        return m

    def var_monomial(self, var) -> int:
        return 1 << (FIELD_BITS * self.index[var])

    def exponents(self, m: int) -> list[int]:
        out = []
        for _ in range(self.n):
            out.append(m & _FIELD_MASK)
            m >>= FIELD_BITS
        return out

    def sparse(self, m: int) -> dict:
        """Sparse exponent mapping ``variable -> exponent`` (zeros omitted)."""
        return {self.variables[i]: e for i, e in enumerate(self.exponents(m)) if e}

    def exponent(self, m: int, var) -> int:
        return (m >> (FIELD_BITS * self.index[var])) & _FIELD_MASK

    def wdeg(self, m: int) -> int:
        ones, top = self.ones, self._top
        return sum(w * ((((m & mask) * ones) >> top) & _FIELD_MASK) for w, mask in self._weight_masks)

    def degree(self, m: int) -> int:
        return ((m * self.ones) >> self._top) & _FIELD_MASK

    def divides(self, a: int, b: int) -> bool:
        """True iff monomial ``a`` divides monomial ``b``."""
        g = self.guard
        return ((b | g) - a) & g == g

    def lcm(self, a: int, b: int) -> int:
        g = self.guard
        sel = (((a | g) - b) & g) >> (FIELD_BITS - 1)
        mask = sel * _FIELD_MASK
        return (a & mask) | (b & ~mask)

    def gcd_is_one(self, a: int, b: int) -> bool:
        return self.lcm(a, b) == a + b

    def support(self, m: int) -> set:
        return {self.variables[i] for i, e in enumerate(self.exponents(m)) if e}

    def monomial_str(self, m: int) -> str:
        parts = []
        for i, e in enumerate(self.exponents(m)):
            if e == 1:
                parts.append(self.names[i])
            elif e:
                parts.append(f"{self.names[i]}^{e}")
        return "*".join(parts) if parts else "1"

    # -- polynomials -------------------------------------------------------

    def gen(self, var) -> "Polynomial":
        if isinstance(var, str) and var not in self.index:
            var = self.variables[self.name_index[var]]
        return Polynomial(self, {self.var_monomial(var): QQ(1)})

    def const(self, c) -> "Polynomial":
        c = to_qq(c)
        return Polynomial(self, {0: c} if c else {})

    def zero(self) -> "Polynomial":
        return Polynomial(self, {})


def _check(f: "Polynomial", g: "Polynomial"):
    if f.table is not g.table and f.table != g.table:
        raise TableMismatch("polynomials live over different variable tables")


class Polynomial:
    """Sparse polynomial: a mapping packed monomial -> nonzero rational."""

    __slots__ = ("table", "terms")

    def __init__(self, table: VariableTable, terms: Mapping[int, object] | None = None):
        self.table = table
        if terms:
            self.terms = {m: to_qq(c) for m, c in terms.items() if c}
        else:
            self.terms = {}

    @classmethod
    def _raw(cls, table, terms):
        p = cls.__new__(cls)
        p.table = table
        p.terms = terms
        return p

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            _check(self, other)
            return other
        return self.table.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Polynomial._raw(self.table, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.table, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = to_qq(other)
            if not c:
                return self.table.zero()
            return Polynomial._raw(self.table, {m: v * c for m, v in self.terms.items()})
        _check(self, other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 + m2
                v = out.get(m)
                out[m] = c1 * c2 if v is None else v + c1 * c2
        return Polynomial._raw(self.table, {m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative exponent")
        result = self.table.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.table == other.table and self.terms == other.terms
        if isinstance(other, (int, Fraction)) or type(other) is QQ:
            return self == self.table.const(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"Polynomial({self.to_string()})"

    def __str__(self):
        return self.to_string()

    # -- structure ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def monic(self) -> "Polynomial":
        """Scale so the coefficient of the default leading monomial is 1."""
        if not self.terms:
            return self
        _, c = leading_term(self, default_order(self.table))
        return self * (1 / c)

    def weighted_degree(self) -> int | None:
        if not self.terms:
            return None
        return max(self.table.wdeg(m) for m in self.terms)

    def total_degree(self) -> int | None:
        if not self.terms:
            return None
        return max(self.table.degree(m) for m in self.terms)

    def is_w_homogeneous(self) -> bool:
        return len({self.table.wdeg(m) for m in self.terms}) <= 1

    def variables(self) -> set:
        seen = 0
        for m in self.terms:
            seen |= m
        # OR of packed monomials is nonzero in exactly the fields used by some term
        return self.table.support(seen)

    def degree_in(self, var) -> int:
        return max((self.table.exponent(m, var) for m in self.terms), default=0)

    def homogenize(self) -> "Polynomial":
        """Pad each monomial with powers of ``h`` up to the weighted degree."""
        table = self.table
        if not self.terms:
            raise ZeroPolynomial("cannot homogenize the zero polynomial")
        if table.hvar is None:
            raise ValueError("variable table has no homogenization variable")
        if self.degree_in(table.hvar):
            raise ValueError("input must be free of the homogenization variable")
        d = self.weighted_degree()
        h = table.var_monomial(table.hvar)
        return Polynomial._raw(
            table, {m + (d - table.wdeg(m)) * h: c for m, c in self.terms.items()}
        )

    def dehomogenize(self) -> "Polynomial":
        """Substitute ``h := 1``."""
        table = self.table
        if table.hvar is None:
            return self
        shift = FIELD_BITS * table.index[table.hvar]
        clear = ~(_FIELD_MASK << shift)
        out: dict = {}
        for m, c in self.terms.items():
            m2 = m & clear
            v = out.get(m2)
            out[m2] = c if v is None else v + c
        return Polynomial._raw(table, {m: c for m, c in out.items() if c})

    def evaluate(self, values: Mapping[Hashable, object]) -> Fraction:
        """Exact evaluation at a point; ``values`` must cover every variable used."""
        total = Fraction(0)
        cache: dict = {}
        for m, c in self.terms.items():
            term = to_fraction(c)
            for i, e in enumerate(self.table.exponents(m)):
                if e:
                    var = self.table.variables[i]
                    if var not in cache:
                        cache[var] = Fraction(values[var])
                    term *= cache[var] ** e
            total += term
        return total

    def substitute(self, images: Mapping[Hashable, "Polynomial"]) -> "Polynomial":
        """Replace variables by polynomials (possibly over another table).

        Variables missing from ``images`` are carried over by name into the
        target table, which must then contain them.
        """
        target = next(iter(images.values())).table if images else self.table
        result = target.zero()
        powers: dict = {}
        for m, c in self.terms.items():
            term = target.const(c)
            for i, e in enumerate(self.table.exponents(m)):
                if not e:
                    continue
                var = self.table.variables[i]
                key = (var, e)
                if key not in powers:
                    base = images[var] if var in images else target.gen(var)
                    powers[key] = base ** e
                term = term * powers[key]
            result = result + term
        return result

    def translate(self, table: VariableTable) -> "Polynomial":
        """Re-express over another table holding every variable used here."""
        out = {}
        for m, c in self.terms.items():
            out[table.monomial(self.table.sparse(m))] = c
        return Polynomial._raw(table, out)

    def split_by(self, var) -> tuple["Polynomial", "Polynomial"]:
        """Return ``(a, b)`` with ``self = var*a + b`` where ``b`` is free of ``var``.

        Monomials of higher degree in ``var`` are kept in ``a`` with one factor removed.
        """
        vm = self.table.var_monomial(var)
        a, b = {}, {}
        for m, c in self.terms.items():
            if self.table.exponent(m, var):
                a[m - vm] = c
            else:
                b[m] = c
        return Polynomial._raw(self.table, a), Polynomial._raw(self.table, b)

    def sorted_terms(self, order: "MonomialOrder | None" = None) -> list[tuple[int, object]]:
        order = order or default_order(self.table)
        return sorted(self.terms.items(), key=lambda t: order.key(t[0]), reverse=True)

    def to_string(self, order: "MonomialOrder | None" = None) -> str:
        if not self.terms:
            return "0"
        out = []
        for i, (m, c) in enumerate(self.sorted_terms(order)):
            neg = c < 0
            a = -c if neg else c
            mono = self.table.monomial_str(m)
            if mono == "1":
                body = str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{a}*{mono}"
            if i == 0:
                out.append(("-" if neg else "") + body)
            else:
                out.append((" - " if neg else " + ") + body)
        return "".join(out)


# -- module level operations ------------------------------------------------


def add(f: Polynomial, g: Polynomial) -> Polynomial:
    _check(f, g)
    return f + g


def mul(f: Polynomial, g: Polynomial) -> Polynomial:
    _check(f, g)
    return f * g


def weighted_degree(f: Polynomial) -> int | None:
    return f.weighted_degree()


def is_w_homogeneous(f: Polynomial) -> bool:
    return f.is_w_homogeneous()


def homogenize(f: Polynomial) -> Polynomial:
    return f.homogenize()


def dehomogenize(f: Polynomial) -> Polynomial:
    return f.dehomogenize()


# -- monomial orders ----------------------------------------------------------


class MonomialOrder:
    """Weighted-graded block order with lex on block 1 and grevlex on block 2.

    Monomials are compared by weighted degree first (when ``graded``), then
    lexicographically on the exponents of ``block1`` (listed largest first),
    then by graded reverse lexicographic order on the remaining variables in
    table order.  The comparison is realized as an integer-valued linear
    functional ``key`` so that ``key(a*b) == key(a) + key(b)``.
    """

    def __init__(self, table: VariableTable, block1: Sequence[Hashable] = (), graded: bool = True):
        self.table = table
        self.block1 = tuple(block1)
        b1 = set(self.block1)
        if len(b1) != len(self.block1):
            raise ValueError("block1 lists a variable twice")
        self.block2 = tuple(v for v in table.variables if v not in b1)
        self.graded = graded

        digits: list[list[int]] = []
        if graded:
            digits.append(list(table.weights))
        for v in self.block1:
            row = [0] * table.n
            row[table.index[v]] = 1
            digits.append(row)
        if self.block2:
            row = [0] * table.n
            for v in self.block2:
                row[table.index[v]] = 1
            digits.append(row)
            for v in reversed(self.block2):
                row = [0] * table.n
                row[table.index[v]] = -1
                digits.append(row)
        radix = 1 << KEY_BITS
        coeffs = [0] * table.n
        for row in digits:
            coeffs = [c * radix + r for c, r in zip(coeffs, row)]
        self.coeffs = coeffs
        self._memo: dict[int, int] = {}

    def __repr__(self):
        b1 = ", ".join(var_name(v) for v in self.block1)
        return f"MonomialOrder(graded={self.graded}, block1=[{b1}])"

    def key(self, m: int) -> int:
        k = self._memo.get(m)
        if k is None:
            k = sum(c * e for c, e in zip(self.coeffs, self.table.exponents(m)) if e)
            self._memo[m] = k
        return k

    def compare(self, m1: int, m2: int) -> int:
        k1, k2 = self.key(m1), self.key(m2)
        return (k1 > k2) - (k1 < k2)


def default_order(table: VariableTable) -> MonomialOrder:
    order = getattr(table, "_default_order", None)
    if order is None:
        order = MonomialOrder(table, (), graded=True)
        table._default_order = order
    return order


def compare(order: MonomialOrder, m1: int, m2: int) -> int:
    """-1, 0 or 1 as ``m1`` is smaller than, equal to, or larger than ``m2``."""
    return order.compare(m1, m2)


def leading_term(f: Polynomial, order: MonomialOrder) -> tuple[int, object]:
    if not f.terms:
        raise ZeroPolynomial("the zero polynomial has no leading term")
    m = max(f.terms, key=order.key)
    return m, f.terms[m]


def from_terms(table: VariableTable, terms: Iterable[tuple[object, Mapping]]) -> Polynomial:
    """Build a polynomial from ``(coefficient, {var: exponent})`` pairs."""
    p = table.zero()
    for c, exps in terms:
        p = p + Polynomial(table, {table.monomial(exps): c})
    return p
