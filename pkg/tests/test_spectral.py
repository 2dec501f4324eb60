import random
from fractions import Fraction

import mpmath
import pytest

from solk.common import AxiomGateError, ROOT, SolkError
from solk.exact_linalg import IntMatrix
from solk.presentation import load_presentation, parse_presentation
from solk.spectral import (
    RationalInterval,
    char_poly,
    cylinder_measure,
    edge_measures,
    is_expanding,
    is_irreducible,
    is_primitive,
    perron_root,
    perron_vectors,
    sturm_count,
)

FIB = IntMatrix.from_rows([[2, 1], [1, 1]])
EPS = Fraction(1, 10 ** 12)


def m(rows):
    return IntMatrix.from_rows(rows)


def test_char_poly_examples():
    assert char_poly(m([[5]])).coefficients == (-5, 1)
    assert char_poly(FIB).coefficients == (1, -3, 1)
    assert char_poly(m([[0, 1], [1, 0]])).coefficients == (-1, 0, 1)


def test_cayley_hamilton():
    rng = random.Random(5)
    for _ in range(40):
        n = rng.randint(1, 4)
        M = m([[rng.randint(0, 4) for _ in range(n)] for _ in range(n)])
        assert char_poly(M).evaluate_matrix(M) == IntMatrix.zeros(n, n)


def test_sturm_count():
    p = char_poly(FIB)
    assert sturm_count(p, 0, 10) == 2
    assert sturm_count(p, 1, 10) == 1
    assert sturm_count(p, 3, 10) == 0


@pytest.mark.parametrize("n", range(1, 11))
def test_full_shift_root_is_exact(n):
    lam = perron_root(m([[n]]))
    assert lam.is_exact
    assert lam.lo == n


def test_fib_root_encloses_golden_square():
    lam = perron_root(FIB, EPS)
    ctx = mpmath.MPContext()
    ctx.dps = 40
    expected = (3 + ctx.sqrt(5)) / 2
    assert not lam.is_exact
    assert lam.width <= EPS
    assert ctx.mpf(lam.lo.numerator) / lam.lo.denominator <= expected
    assert expected <= ctx.mpf(lam.hi.numerator) / lam.hi.denominator
    assert lam.decimal(11) == "2.6180339887"


def test_root_interval_isolates_one_root():
    for rows in ([[2, 1], [1, 1]], [[1, 1, 1], [1, 0, 1], [1, 1, 1]], [[0, 2], [1, 0]]):
        M = m(rows)
        lam = perron_root(M, EPS)
        if not lam.is_exact:
            assert sturm_count(char_poly(M), lam.lo, lam.hi) == 1


def test_root_of_doubling_matrix_is_exact():
    lam = perron_root(m([[1, 1], [1, 1]]))
    assert lam.is_exact and lam.lo == 2


def test_perron_root_rejects_reducible():
    with pytest.raises(SolkError):
        perron_root(m([[2, 1], [0, 2]]))


def test_is_expanding():
    assert is_expanding(FIB)
    assert not is_expanding(m([[1]]))
    assert not is_expanding(m([[0, 1], [1, 0]]))
    assert is_expanding(m([[2]]))


def test_irreducible_and_primitive():
    assert is_irreducible(FIB) and is_primitive(FIB)
    swap = m([[0, 1], [1, 0]])
    assert is_irreducible(swap) and not is_primitive(swap)
    assert not is_irreducible(m([[1, 1], [0, 1]]))
    assert not is_irreducible(m([[0]]))
    assert is_primitive(m([[1]]))
    # period 2
    assert not is_primitive(m([[0, 2], [1, 0]]))


def test_single_edge_vectors_are_exact():
    data = perron_vectors(m([[7]]))
    assert data.exact
    assert data.v == (RationalInterval.exact(1),)
    assert data.w == (RationalInterval.exact(1),)


def test_doubling_vectors_are_exact_halves():
    data = perron_vectors(m([[1, 1], [1, 1]]))
    assert data.exact
    half = RationalInterval.exact(Fraction(1, 2))
    assert data.v == (half, half)
    assert data.w == (half, half)


def test_fib_vectors():
    data = perron_vectors(FIB, EPS)
    assert data.max_width <= EPS
    assert abs(float(data.v[0].midpoint) - 0.6180339887) < 1e-9
    assert abs(float(data.v[1].midpoint) - 0.3819660113) < 1e-9
    # symmetric matrix
    for a, b in zip(data.v, data.w):
        assert a.overlaps(b)


def test_non_symmetric_vectors():
    data = perron_vectors(m([[0, 2], [1, 0]]), EPS)
    assert abs(float(data.v[0].midpoint) - 0.5857864376) < 1e-9
    assert abs(float(data.w[0].midpoint) - 0.4142135624) < 1e-9


def test_vectors_satisfy_eigen_equations():
    for rows in ([[2, 1], [1, 1]], [[1, 1, 1], [1, 0, 1], [1, 1, 1]], [[0, 2], [1, 0]]):
        M = m(rows)
        data = perron_vectors(M, EPS)
        n = M.rows
        slack = Fraction(1, 10 ** 9)
        for i in range(n):
            Mv = sum((data.v[j] * M[i, j] for j in range(n)), RationalInterval.exact(0))
            assert Mv.overlaps(data.lam * data.v[i], slack)
            wM = sum((data.w[j] * M[j, i] for j in range(n)), RationalInterval.exact(0))
            assert wM.overlaps(data.lam * data.w[i], slack)
        assert sum(data.v, RationalInterval.exact(0)).contains(1)
        assert sum(data.w, RationalInterval.exact(0)).contains(1)


def test_edge_measures():
    P = load_presentation(ROOT / "corpus" / "power3.sol")
    assert edge_measures(P) == (RationalInterval.exact(1),)
    mu = edge_measures(parse_presentation("edges: a b / a -> a a b / b -> a b"), EPS)
    assert abs(float(mu[0].midpoint) - 0.618033988749) < 1e-9


def test_edge_measures_gate():
    with pytest.raises(AxiomGateError):
        edge_measures(parse_presentation("edges: a / a -> a"))
    with pytest.raises(AxiomGateError):
        edge_measures(load_presentation(ROOT / "corpus" / "reducible.sol"))


def test_cylinder_measure():
    P = load_presentation(ROOT / "corpus" / "power2.sol")
    assert cylinder_measure(P, "a", 3) == RationalInterval.exact(Fraction(1, 8))


def test_interval_arithmetic():
    a = RationalInterval(1, 2)
    b = RationalInterval(-1, 3)
    assert a + b == RationalInterval(0, 5)
    assert a - b == RationalInterval(-2, 3)
    assert a * b == RationalInterval(-2, 6)
    assert a / RationalInterval(2, 4) == RationalInterval(Fraction(1, 4), 1)
    assert a ** 2 == RationalInterval(1, 4)
    with pytest.raises(SolkError):
        a / b
    with pytest.raises(SolkError):
        RationalInterval(2, 1)


def test_interval_json():
    x = RationalInterval(Fraction(1, 3), Fraction(1, 2))
    payload = x.to_json()
    assert payload["lo"] == "1/3"
    assert RationalInterval.from_json(payload) == x


def test_widths_shrink_with_precision():
    for rows in ([[2, 1], [1, 1]], [[1, 1, 1], [1, 0, 1], [1, 1, 1]], [[0, 2], [1, 0]]):
        M = m(rows)
        eps = Fraction(1, 10 ** 6)
        coarse = perron_vectors(M, eps)
        for _ in range(3):
            eps /= 10
            fine = perron_vectors(M, eps)
            assert fine.max_width <= eps
            for a, b in zip((coarse.lam,) + coarse.v + coarse.w, (fine.lam,) + fine.v + fine.w):
                assert b.width <= a.width
                assert a.lo <= b.lo and b.hi <= a.hi
            coarse = fine
