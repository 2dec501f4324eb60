"""Arbitrary-precision integer linear algebra.

Smith normal form with unimodular transforms, kernels and cokernels of
integer matrices, and the finitely generated abelian groups they produce
(with Hom(-, Z) and Ext(-, Z)).
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import sympy

from solk.common import SolkError

IntVector = Tuple[int, ...]


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: Tuple[int, ...]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise SolkError(f"matrix must be nonempty, got {self.rows}x{self.cols}")
        if len(self.entries) != self.rows * self.cols:
            raise SolkError(
                f"matrix of shape {self.rows}x{self.cols} needs {self.rows * self.cols} entries, "
                f"got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise SolkError("matrix must be nonempty")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise SolkError("ragged matrix rows")
        return cls(len(rows), width, tuple(int(x) for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    def __getitem__(self, key):
        i, j = key
        return self.entries[i * self.cols + j]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def row(self, i: int) -> IntVector:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> IntVector:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def to_rows(self) -> List[List[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, tuple(self[i, j] for j in range(self.cols) for i in range(self.rows)))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise SolkError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = []
        for i in range(self.rows):
            r = self.row(i)
            for j in range(other.cols):
                out.append(sum(r[k] * other[k, j] for k in range(self.cols)))
        return IntMatrix(self.rows, other.cols, tuple(out))

    def apply(self, vector: Sequence[int]) -> IntVector:
        if len(vector) != self.cols:
            raise SolkError(f"vector length {len(vector)} does not match {self.cols} columns")
        return tuple(sum(a * b for a, b in zip(self.row(i), vector)) for i in range(self.rows))

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        self._check_same_shape(other)
        return IntMatrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        self._check_same_shape(other)
        return IntMatrix(self.rows, self.cols, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def _check_same_shape(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise SolkError("shape mismatch")

    def power(self, k: int) -> "IntMatrix":
        if not self.is_square:
            raise SolkError("power of a non-square matrix")
        if k < 0:
            raise SolkError("negative matrix power")
        result = IntMatrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for x in self.entries)

    def determinant(self) -> int:
        if not self.is_square:
            raise SolkError("determinant of a non-square matrix")
        return int(sympy.Matrix(self.to_rows()).det(method="bareiss"))

    def rank(self) -> int:
        return int(sympy.Matrix(self.to_rows()).rank())

    def to_json(self):
        return [[str(x) for x in self.row(i)] for i in range(self.rows)]

    @classmethod
    def from_json(cls, rows) -> "IntMatrix":
        return cls.from_rows([[int(x) for x in r] for r in rows])


@dataclass(frozen=True)
class SmithDecomposition:
    U: IntMatrix
    D: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> Tuple[int, ...]:
        return tuple(self.D[i, i] for i in range(min(self.D.rows, self.D.cols)))


def _swap_rows(m, a, b):
    m[a], m[b] = m[b], m[a]


def _swap_cols(m, a, b):
    for r in m:
        r[a], r[b] = r[b], r[a]


def _row_axpy(m, target, source, q):
    # row_target -= q * row_source
    src = m[source]
    m[target] = [x - q * y for x, y in zip(m[target], src)]


def _col_axpy(m, target, source, q):
    for r in m:
        r[target] -= q * r[source]


def _min_pivot(D, s):
    best = None
    for i in range(s, len(D)):
        for j in range(s, len(D[0])):
            x = D[i][j]
            if x != 0 and (best is None or abs(x) < best[0]):
                best = (abs(x), i, j)
    return best


def smith_normal_form(A: IntMatrix) -> SmithDecomposition:
    """Return U, D, V with U*A*V = D, U and V unimodular, d_i >= 0 and d_i | d_(i+1).

    Each round moves the nonzero entry of least absolute value to the pivot
    position and clears its row and column by Euclidean steps.
    """
    r, c = A.rows, A.cols
    D = A.to_rows()
    U = IntMatrix.identity(r).to_rows()
    V = IntMatrix.identity(c).to_rows()

    for s in range(min(r, c)):
        while True:
            pivot = _min_pivot(D, s)
            if pivot is None:
                break
            _, pi, pj = pivot
            if pi != s:
                _swap_rows(D, s, pi)
                _swap_rows(U, s, pi)
            if pj != s:
                _swap_cols(D, s, pj)
                _swap_cols(V, s, pj)
            p = D[s][s]
            for i in range(s + 1, r):
                if D[i][s]:
                    q = D[i][s] // p
                    _row_axpy(D, i, s, q)
                    _row_axpy(U, i, s, q)
            for j in range(s + 1, c):
                if D[s][j]:
                    q = D[s][j] // p
                    _col_axpy(D, j, s, q)
                    _col_axpy(V, j, s, q)
            if any(D[i][s] for i in range(s + 1, r)) or any(D[s][j] for j in range(s + 1, c)):
                continue
            # pivot must divide the whole remaining block
            offender = next(
                (i for i in range(s + 1, r) for j in range(s + 1, c) if D[i][j] % p),
                None,
            )
            if offender is None:
                break
            _row_axpy(D, s, offender, -1)
            _row_axpy(U, s, offender, -1)
        if D[s][s] < 0:
            D[s] = [-x for x in D[s]]
            U[s] = [-x for x in U[s]]

    out = SmithDecomposition(IntMatrix.from_rows(U), IntMatrix.from_rows(D), IntMatrix.from_rows(V))
    if out.U @ A @ out.V != out.D:
        raise SolkError("Smith normal form verification failed: U*A*V != D")
    return out


@dataclass(frozen=True)
class FGAbelianGroup:
    """Z^free_rank + Z/t_1 + ... + Z/t_k in invariant-factor form (t_i | t_(i+1))."""

    free_rank: int = 0
    torsion: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise SolkError(f"negative free rank {self.free_rank}")
        torsion = tuple(int(t) for t in self.torsion if int(t) != 1)
        for t in torsion:
            if t < 1:
                raise SolkError(f"torsion coefficients must be > 1, got {t}")
        for a, b in zip(torsion, torsion[1:]):
            if b % a:
                raise SolkError(f"torsion {torsion} is not a divisibility chain")
        object.__setattr__(self, "torsion", torsion)

    @classmethod
    def from_cyclic_orders(cls, orders: Sequence[int]) -> "FGAbelianGroup":
        """Canonical form of Z/o_1 + ... + Z/o_k, where an order of 0 stands for Z."""
        orders = [abs(int(o)) for o in orders]
        if not orders:
            return cls()
        n = len(orders)
        diag = IntMatrix(n, n, tuple(orders[i] if i == j else 0 for i in range(n) for j in range(n)))
        d = smith_normal_form(diag).diagonal
        return cls(sum(1 for x in d if x == 0), tuple(x for x in d if x > 1))

    def to_json(self):
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}

    @classmethod
    def from_json(cls, payload) -> "FGAbelianGroup":
        return cls(int(payload["free_rank"]), tuple(int(t) for t in payload.get("torsion") or []))

    def __str__(self):
        return describe_group(self)


def cokernel(A: IntMatrix) -> FGAbelianGroup:
    d = smith_normal_form(A).diagonal
    nonzero = [x for x in d if x != 0]
    return FGAbelianGroup(A.rows - len(nonzero), tuple(x for x in nonzero if x > 1))


def kernel_basis(A: IntMatrix) -> List[IntVector]:
    snf = smith_normal_form(A)
    d = snf.diagonal
    return [snf.V.col(j) for j in range(A.cols) if j >= len(d) or d[j] == 0]


def hom_to_Z(G: FGAbelianGroup) -> FGAbelianGroup:
    return FGAbelianGroup(G.free_rank, ())


def ext_to_Z(G: FGAbelianGroup) -> FGAbelianGroup:
    return FGAbelianGroup(0, G.torsion)


def group_iso_eq(G: FGAbelianGroup, H: FGAbelianGroup) -> bool:
    return G.free_rank == H.free_rank and G.torsion == H.torsion


def direct_sum(G: FGAbelianGroup, H: FGAbelianGroup) -> FGAbelianGroup:
    torsion = FGAbelianGroup.from_cyclic_orders(G.torsion + H.torsion)
    return FGAbelianGroup(G.free_rank + H.free_rank, torsion.torsion)


def group_order(G: FGAbelianGroup) -> Optional[int]:
    if G.free_rank:
        return None
    order = 1
    for t in G.torsion:
        order *= t
    return order


def describe_group(G: FGAbelianGroup) -> str:
    parts = []
    if G.free_rank == 1:
        parts.append("Z")
    elif G.free_rank > 1:
        parts.append(f"Z^{G.free_rank}")
    parts.extend(f"Z/{t}" for t in G.torsion)
    return " + ".join(parts) if parts else "0"
