import random

import pytest

from solk.common import SolkError
from solk.exact_linalg import (
    FGAbelianGroup,
    IntMatrix,
    cokernel,
    describe_group,
    direct_sum,
    ext_to_Z,
    group_iso_eq,
    group_order,
    hom_to_Z,
    kernel_basis,
    smith_normal_form,
)
from solk.oracle import check_snf, random_matrix

FIB = IntMatrix.from_rows([[2, 1], [1, 1]])
SWAP = IntMatrix.from_rows([[0, 1], [1, 0]])


def I(n):
    return IntMatrix.identity(n)


def test_matrix_basics():
    A = IntMatrix.from_rows([[1, 2, 3], [4, 5, 6]])
    assert A.rows == 2 and A.cols == 3
    assert A[1, 2] == 6
    assert A.col(1) == (2, 5)
    assert A.transpose().to_rows() == [[1, 4], [2, 5], [3, 6]]
    assert (A @ A.transpose()).to_rows() == [[14, 32], [32, 77]]
    assert A.apply((1, 0, -1)) == (-2, -2)
    assert FIB.power(0) == I(2)
    assert FIB.power(3).to_rows() == [[13, 8], [8, 5]]
    assert FIB.determinant() == 1
    assert IntMatrix.from_rows([[1, 1], [1, 1]]).rank() == 1


def test_matrix_rejects_bad_shapes():
    with pytest.raises(SolkError):
        IntMatrix.from_rows([[1, 2], [3]])
    with pytest.raises(SolkError):
        IntMatrix.from_rows([])
    with pytest.raises(SolkError):
        FIB @ IntMatrix.from_rows([[1, 2, 3]])
    with pytest.raises(SolkError):
        FIB.power(-1)


def test_matrix_json_keeps_big_integers():
    big = 10 ** 40 + 7
    A = IntMatrix.from_rows([[big, -1], [0, 2]])
    assert A.to_json()[0][0] == str(big)
    assert IntMatrix.from_json(A.to_json()) == A


def test_snf_of_fib_difference():
    A = I(2) - FIB
    assert A.to_rows() == [[-1, -1], [-1, 0]]
    snf = smith_normal_form(A)
    assert snf.diagonal == (1, 1)
    assert snf.U @ A @ snf.V == snf.D


@pytest.mark.parametrize("n", range(2, 11))
def test_snf_of_full_shift_difference(n):
    snf = smith_normal_form(IntMatrix.from_rows([[1 - n]]))
    assert snf.diagonal == (n - 1,)


def test_snf_of_zero_matrix():
    snf = smith_normal_form(IntMatrix.zeros(2, 2))
    assert snf.diagonal == (0, 0)
    assert snf.U == I(2)
    assert snf.V == I(2)


def test_snf_divisibility_chain():
    snf = smith_normal_form(IntMatrix.from_rows([[2, 0], [0, 3]]))
    assert snf.diagonal == (1, 6)
    snf = smith_normal_form(IntMatrix.from_rows([[4, 0, 0], [0, 6, 0], [0, 0, 0]]))
    assert snf.diagonal == (2, 12, 0)


def test_snf_rectangular():
    A = IntMatrix.from_rows([[2, 4, 4], [-6, 6, 12]])
    snf = smith_normal_form(A)
    assert snf.D.rows == 2 and snf.D.cols == 3
    assert snf.diagonal == (2, 6)
    assert snf.U @ A @ snf.V == snf.D


def test_snf_random_fuzz():
    rng = random.Random(7)
    for _ in range(300):
        A = random_matrix(rng, rng.randint(1, 5))
        assert check_snf(A) is None


def test_cokernel_examples():
    assert cokernel(IntMatrix.from_rows([[1 - 2]])) == FGAbelianGroup()
    assert cokernel(IntMatrix.from_rows([[1 - 5]])) == FGAbelianGroup(0, (4,))
    assert cokernel(I(2) - FIB) == FGAbelianGroup()
    assert cokernel(IntMatrix.zeros(2, 2)) == FGAbelianGroup(2)


def test_cokernel_ignores_transpose():
    rng = random.Random(11)
    for _ in range(100):
        A = random_matrix(rng, rng.randint(1, 4))
        assert group_iso_eq(cokernel(A), cokernel(A.transpose()))


def test_kernel_basis():
    assert kernel_basis(I(2) - FIB) == []
    assert kernel_basis(IntMatrix.from_rows([[0]])) == [(1,)]
    (basis,) = kernel_basis(I(2) - SWAP)
    assert basis in ((1, 1), (-1, -1))


def test_kernel_vectors_are_killed():
    rng = random.Random(3)
    for _ in range(100):
        A = random_matrix(rng, rng.randint(1, 4), -2, 2)
        basis = kernel_basis(A)
        assert len(basis) == A.cols - A.rank()
        for v in basis:
            assert not any(A.apply(v))


def test_hom_and_ext():
    assert hom_to_Z(FGAbelianGroup(1, (2,))) == FGAbelianGroup(1)
    assert hom_to_Z(FGAbelianGroup(4)) == FGAbelianGroup(4)
    assert hom_to_Z(FGAbelianGroup(0, (3,))) == FGAbelianGroup()
    assert ext_to_Z(FGAbelianGroup(1, (6,))) == FGAbelianGroup(0, (6,))
    assert ext_to_Z(FGAbelianGroup(3)) == FGAbelianGroup()
    assert ext_to_Z(FGAbelianGroup(0, (2, 6))) == FGAbelianGroup(0, (2, 6))


def test_hom_and_ext_are_additive():
    rng = random.Random(12)
    for _ in range(100):
        G = cokernel(random_matrix(rng, rng.randint(1, 3)))
        H = cokernel(random_matrix(rng, rng.randint(1, 3)))
        assert group_iso_eq(hom_to_Z(direct_sum(G, H)), direct_sum(hom_to_Z(G), hom_to_Z(H)))
        assert group_iso_eq(ext_to_Z(direct_sum(G, H)), direct_sum(ext_to_Z(G), ext_to_Z(H)))


def test_group_normalization():
    assert FGAbelianGroup(1, (1, 1)) == FGAbelianGroup(1)
    assert FGAbelianGroup.from_cyclic_orders([2, 3]) == FGAbelianGroup(0, (6,))
    assert FGAbelianGroup.from_cyclic_orders([0, 2, 2]) == FGAbelianGroup(1, (2, 2))
    with pytest.raises(SolkError):
        FGAbelianGroup(0, (2, 3))
    with pytest.raises(SolkError):
        FGAbelianGroup(-1)


def test_group_iso_eq():
    assert group_iso_eq(FGAbelianGroup(1), FGAbelianGroup(1))
    assert not group_iso_eq(FGAbelianGroup(1, (4,)), FGAbelianGroup(1, (2, 2)))


def test_direct_sum_and_order():
    G = direct_sum(FGAbelianGroup(1, (2,)), FGAbelianGroup(0, (3,)))
    assert G == FGAbelianGroup(1, (6,))
    assert group_order(G) is None
    assert group_order(FGAbelianGroup(0, (2, 4))) == 8
    assert group_order(FGAbelianGroup()) == 1


def test_describe_group():
    assert describe_group(FGAbelianGroup()) == "0"
    assert describe_group(FGAbelianGroup(1)) == "Z"
    assert describe_group(FGAbelianGroup(2, (2,))) == "Z^2 + Z/2"
    assert str(FGAbelianGroup(0, (3,))) == "Z/3"


def test_group_json():
    G = FGAbelianGroup(2, (2, 4))
    assert G.to_json() == {"free_rank": 2, "torsion": [2, 4]}
    assert FGAbelianGroup.from_json(G.to_json()) == G
