"""Characteristic polynomials, certified Perron roots and Perron vectors.

Every quantity that is not a rational number is returned as a
RationalInterval that provably contains it. Decisions (lambda > 1,
signs of functionals) are made from Sturm counts or interval endpoints,
never from floating point.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import networkx as nx
import sympy

from solk.common import AxiomGateError, PrecisionError, SolkError, format_fraction
from solk.exact_linalg import IntMatrix

logger = logging.getLogger(__name__)

DEFAULT_EPS = Fraction(1, 10 ** 30)
MAX_BISECTIONS = 20000
MAX_REFINEMENTS = 256

_X = sympy.Symbol("x")
_DISPLAY = mpmath.MPContext()
_DISPLAY.dps = 50


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise SolkError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def exact(cls, value) -> "RationalInterval":
        return cls(Fraction(value), Fraction(value))

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def overlaps(self, other: "RationalInterval", slack=0) -> bool:
        return self.lo <= other.hi + slack and other.lo <= self.hi + slack

    def __add__(self, other):
        other = _as_interval(other)
        return RationalInterval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_as_interval(other))

    def __rsub__(self, other):
        return _as_interval(other) - self

    def __mul__(self, other):
        other = _as_interval(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return RationalInterval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_interval(other)
        if other.lo <= 0 <= other.hi:
            raise SolkError("interval division by an interval containing 0")
        return self * RationalInterval(1 / other.hi, 1 / other.lo)

    def __pow__(self, k: int):
        out = RationalInterval.exact(1)
        for _ in range(k):
            out = out * self
        return out

    def decimal(self, digits: int = 20) -> str:
        m = self.midpoint
        return _DISPLAY.nstr(_DISPLAY.mpf(m.numerator) / m.denominator, digits)

    def to_json(self):
        return {"lo": format_fraction(self.lo), "hi": format_fraction(self.hi), "decimal": self.decimal()}

    @classmethod
    def from_json(cls, payload) -> "RationalInterval":
        return cls(Fraction(payload["lo"]), Fraction(payload["hi"]))

    def __str__(self):
        if self.is_exact:
            return format_fraction(self.lo)
        return f"{self.decimal()} (width {float(self.width):.1e})"


def _as_interval(x) -> RationalInterval:
    if isinstance(x, RationalInterval):
        return x
    return RationalInterval.exact(Fraction(x))


def dot(weights: Sequence[RationalInterval], vector: Sequence[int]) -> RationalInterval:
    total = RationalInterval.exact(0)
    for w, g in zip(weights, vector):
        if g:
            total = total + w * g
    return total


@dataclass(frozen=True)
class IntPolynomial:
    coefficients: Tuple[int, ...]

    def __post_init__(self):
        coeffs = [int(c) for c in self.coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs) or (0,))

    @property
    def degree(self) -> int:
        if self.coefficients == (0,):
            return -1
        return len(self.coefficients) - 1

    def evaluate(self, x) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def evaluate_matrix(self, M: IntMatrix) -> IntMatrix:
        acc = IntMatrix.zeros(M.rows, M.cols)
        ident = IntMatrix.identity(M.rows)
        for c in reversed(self.coefficients):
            acc = acc @ M + IntMatrix(M.rows, M.cols, tuple(c * e for e in ident.entries))
        return acc

    def to_sympy(self) -> sympy.Poly:
        return sympy.Poly(list(reversed(self.coefficients)), _X, domain=sympy.QQ)

    def __str__(self):
        return str(self.to_sympy().as_expr())


def char_poly(M: IntMatrix) -> IntPolynomial:
    """det(xI - M) by sympy's division-free Berkowitz expansion."""
    if not M.is_square:
        raise SolkError("characteristic polynomial of a non-square matrix")
    poly = sympy.Matrix(M.to_rows()).charpoly(_X)
    return IntPolynomial(tuple(int(c) for c in reversed(poly.all_coeffs())))


def _sturm_chain(p: IntPolynomial) -> List[List[Fraction]]:
    square_free = p.to_sympy().sqf_part()
    chain = []
    for q in sympy.sturm(square_free):
        coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(q.all_coeffs())]
        chain.append(coeffs)
    return chain


def _sign_changes(chain, x: Fraction) -> int:
    changes, last = 0, 0
    for coeffs in chain:
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * x + c
        if acc == 0:
            continue
        s = 1 if acc > 0 else -1
        if last and s != last:
            changes += 1
        last = s
    return changes


def _count(chain, a: Fraction, b: Fraction) -> int:
    return _sign_changes(chain, a) - _sign_changes(chain, b)


def sturm_count(p: IntPolynomial, a, b) -> int:
    """Number of distinct real roots of p in (a, b]."""
    return _count(_sturm_chain(p), Fraction(a), Fraction(b))


def is_irreducible(M: IntMatrix) -> bool:
    if not M.is_square or not M.is_nonnegative():
        return False
    if M.rows == 1:
        return M[0, 0] > 0
    G = nx.DiGraph()
    G.add_nodes_from(range(M.rows))
    G.add_edges_from((i, k) for i in range(M.rows) for k in range(M.cols) if M[i, k] > 0)
    return nx.is_strongly_connected(G)


def _bool_product(A, B):
    n = len(A)
    return [[any(A[i][k] and B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def is_primitive(M: IntMatrix) -> bool:
    """Irreducible and some power is strictly positive; the Wielandt bound (n-1)^2+1 suffices."""
    if not is_irreducible(M):
        return False
    n = M.rows
    k = n * n - 2 * n + 2
    base = [[M[i, j] > 0 for j in range(n)] for i in range(n)]
    result = [[i == j for j in range(n)] for i in range(n)]
    while k:
        if k & 1:
            result = _bool_product(result, base)
        base = _bool_product(base, base)
        k >>= 1
    return all(all(r) for r in result)


def _require_perron_input(M: IntMatrix):
    if not M.is_square or not M.is_nonnegative():
        raise SolkError("Perron data needs a square nonnegative matrix")
    if not is_irreducible(M):
        raise SolkError("Perron data needs an irreducible matrix")


def _row_sums(M: IntMatrix) -> List[int]:
    return [sum(M.row(i)) for i in range(M.rows)]


def _isolate_largest(p: IntPolynomial, chain, lo: Fraction, hi: Fraction, eps: Fraction) -> RationalInterval:
    # invariant: the largest real root lies in (lo, hi]
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= eps and _count(chain, lo, hi) == 1:
            return RationalInterval(lo, hi)
        mid = (lo + hi) / 2
        if _count(chain, mid, hi) >= 1:
            lo = mid
        elif p.evaluate(mid) == 0:
            return RationalInterval.exact(mid)
        else:
            hi = mid
    raise PrecisionError(f"root isolation did not reach width {eps}", achieved=hi - lo)


def perron_root(M: IntMatrix, eps=DEFAULT_EPS) -> RationalInterval:
    """Certified enclosure of the Perron root; exact when the root is rational.

    A monic integer polynomial has only integer rational roots, and the Perron
    root lies between the least and largest row sums, so the rational-root
    test only has to look at that range.
    """
    _require_perron_input(M)
    eps = Fraction(eps)
    if eps <= 0:
        raise SolkError("precision must be positive")
    p = char_poly(M)
    chain = _sturm_chain(p)
    sums = _row_sums(M)
    hi = Fraction(max(sums) + 1)
    for d in range(max(sums), min(sums) - 1, -1):
        if p.evaluate(d) == 0:
            if _count(chain, Fraction(d), hi) == 0:
                return RationalInterval.exact(d)
            break
    return _isolate_largest(p, chain, Fraction(min(sums) - 1), hi, eps)


def refine_root(M: IntMatrix, lam: RationalInterval, eps) -> RationalInterval:
    if lam.is_exact or lam.width <= eps:
        return lam
    p = char_poly(M)
    return _isolate_largest(p, _sturm_chain(p), lam.lo, lam.hi, Fraction(eps))


def is_expanding(M: IntMatrix) -> bool:
    """Perron root > 1, decided by a Sturm count on (1, max row sum + 1]."""
    sums = _row_sums(M)
    if max(sums) <= 1:
        return False
    return sturm_count(char_poly(M), 1, max(sums) + 1) >= 1


@dataclass(frozen=True)
class PerronData:
    lam: RationalInterval
    v: Tuple[RationalInterval, ...]
    w: Tuple[RationalInterval, ...]
    exact: bool

    @property
    def max_width(self) -> Fraction:
        return max(x.width for x in (self.lam,) + self.v + self.w)

    def to_json(self):
        return {
            "lambda": self.lam.to_json(),
            "v": [x.to_json() for x in self.v],
            "w": [x.to_json() for x in self.w],
            "exact": self.exact,
        }


def _to_sympy(q: Fraction):
    return sympy.Rational(q.numerator, q.denominator)


def _from_sympy(r) -> Fraction:
    r = sympy.Rational(r)
    return Fraction(int(r.p), int(r.q))


def _solve_pinned(M: IntMatrix, x: Fraction) -> List[Fraction]:
    """Solve (xI - M')u = b where M' drops row/col 0 and b is column 0 without its first entry."""
    n = M.rows
    A = sympy.Matrix(
        n - 1, n - 1,
        lambda i, j: (_to_sympy(x) if i == j else 0) - M[i + 1, j + 1],
    )
    b = sympy.Matrix(n - 1, 1, lambda i, _: M[i + 1, 0])
    return [_from_sympy(u) for u in A.LUsolve(b)]


def _normalize_exact(u: Sequence[Fraction]) -> Tuple[RationalInterval, ...]:
    vec = [Fraction(1)] + list(u)
    total = sum(vec)
    return tuple(RationalInterval.exact(c / total) for c in vec)


def _enclose(M: IntMatrix, lam: RationalInterval) -> Optional[Tuple[RationalInterval, ...]]:
    n = M.rows
    if n == 1:
        return (RationalInterval.exact(1),)
    if lam.is_exact:
        return _normalize_exact(_solve_pinned(M, lam.lo))
    sub = IntMatrix.from_rows([list(M.row(i))[1:] for i in range(1, n)])
    # (xI - M')^-1 >= 0 for x > rho(M'), so the solution is decreasing in x
    sub_bound = max(_row_sums(sub)) + 1
    if lam.lo < sub_bound:
        sub_poly = char_poly(sub)
        if sub_poly.evaluate(lam.lo) == 0 or sturm_count(sub_poly, lam.lo, sub_bound) != 0:
            return None
    u_at_hi = _solve_pinned(M, lam.hi)
    u_at_lo = _solve_pinned(M, lam.lo)
    boxes = [RationalInterval.exact(1)] + [RationalInterval(a, b) for a, b in zip(u_at_hi, u_at_lo)]
    total = RationalInterval(sum(b.lo for b in boxes), sum(b.hi for b in boxes))
    return tuple(RationalInterval(b.lo / total.hi, b.hi / total.lo) for b in boxes)


def perron_vectors(M: IntMatrix, eps=DEFAULT_EPS) -> PerronData:
    """Right (Mv = lambda v) and left (w^T M = lambda w^T) Perron vectors, each summing to 1."""
    eps = Fraction(eps)
    lam = perron_root(M, eps)
    Mt = M.transpose()
    achieved = None
    for _ in range(MAX_REFINEMENTS):
        v = _enclose(M, lam)
        w = _enclose(Mt, lam)
        if v is not None and w is not None:
            achieved = max(x.width for x in v + w)
            if achieved <= eps:
                return PerronData(lam, v, w, lam.is_exact)
        # single bisection steps: the enclosure for a smaller eps nests inside this one
        lam = refine_root(M, lam, lam.width / 2)
    raise PrecisionError(f"Perron vector enclosure did not reach width {eps}", achieved=achieved)


def edge_measures(P, eps=DEFAULT_EPS) -> Tuple[RationalInterval, ...]:
    """Williams edge measures mu_0(e_i) = v_i."""
    from solk.presentation import adjacency_matrix

    M = adjacency_matrix(P)
    if not is_irreducible(M):
        raise AxiomGateError("edge measures need an irreducible adjacency matrix")
    if not is_expanding(M):
        raise AxiomGateError("edge measures need an expanding presentation (Perron root > 1)")
    return perron_vectors(M, eps).v


def cylinder_measure(P, edge: str, stage: int, eps=DEFAULT_EPS) -> RationalInterval:
    """Measure lambda^-stage * v_edge of a stage-`stage` cylinder whose base maps onto `edge`."""
    from solk.presentation import adjacency_matrix

    M = adjacency_matrix(P)
    data = perron_vectors(M, eps)
    v = data.v[P.index(edge)]
    inverse = RationalInterval.exact(1) / data.lam
    return v * inverse ** stage
