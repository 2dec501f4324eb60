"""Brute-force cross-checks of the main computations.

Each oracle recomputes a result by a slower, independent route and reports
agreement. Running out of budget is reported as "exhausted", not as a
disagreement.
"""
import itertools
import logging
import random
from dataclasses import dataclass, field
from math import gcd
from typing import List, Optional

import sympy
from sympy.matrices.normalforms import hermite_normal_form

from solk.dimension_group import (
    NEGATIVE,
    POSITIVE,
    ZERO,
    DGElement,
    dg_positive,
    make_dimension_group,
)
from solk.exact_linalg import IntMatrix, cokernel, group_order, smith_normal_form
from solk.presentation import GraphPresentation, Letter, WrappingRule, check_orientable
from solk.smale import DEFAULT_DEPTH, SmaleModel, check_bracket_identities

logger = logging.getLogger(__name__)

SUBJECTS = ("snf", "cokernel", "positivity", "bracket", "orientable")
MAX_COSETS = 20000
MAX_SIGN_SEARCH_EDGES = 12


@dataclass
class OracleVerdict:
    subject: str
    checked: int = 0
    agreed: int = 0
    exhausted: int = 0
    disagreements: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def disagree(self, message: str):
        self.checked += 1
        if len(self.disagreements) < 20:
            self.disagreements.append(message)
        else:
            logger.debug("further disagreement: %s", message)

    def agree(self):
        self.checked += 1
        self.agreed += 1

    def to_json(self):
        return {
            "subject": self.subject,
            "verdict": "agree" if self.ok else "disagree",
            "checked": self.checked,
            "agreed": self.agreed,
            "exhausted": self.exhausted,
            "disagreements": self.disagreements,
            "notes": self.notes,
        }


def random_matrix(rng: random.Random, n: int, lo: int = -9, hi: int = 9) -> IntMatrix:
    return IntMatrix.from_rows([[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)])


# ---------------------------------------------------------------- Smith normal form


def check_snf(A: IntMatrix) -> Optional[str]:
    """Replay a Smith decomposition; return a description of the first violation."""
    snf = smith_normal_form(A)
    if snf.U @ A @ snf.V != snf.D:
        return "U*A*V != D"
    if abs(snf.U.determinant()) != 1 or abs(snf.V.determinant()) != 1:
        return "transform not unimodular"
    D = snf.D
    for i in range(D.rows):
        for j in range(D.cols):
            if i != j and D[i, j]:
                return f"off-diagonal entry at ({i}, {j})"
    d = snf.diagonal
    if any(x < 0 for x in d):
        return "negative invariant factor"
    for a, b in zip(d, d[1:]):
        if (a == 0 and b != 0) or (a and b % a):
            return f"divisibility chain broken at {a}, {b}"
    if A.is_square:
        det = A.determinant()
        product = 1
        for x in d:
            product *= x
        if det and product != abs(det):
            return f"product of invariant factors {product} != |det| {abs(det)}"
    return None


def oracle_snf(rng: random.Random, trials: int = 100, n_max: int = 4) -> OracleVerdict:
    verdict = OracleVerdict("snf")
    for _ in range(trials):
        A = random_matrix(rng, rng.randint(1, n_max))
        problem = check_snf(A)
        if problem:
            verdict.disagree(f"{A.to_rows()}: {problem}")
        else:
            verdict.agree()
    return verdict


# ---------------------------------------------------------------- cokernel by coset enumeration


def _reduce(H: List[List[int]], x: List[int]) -> tuple:
    """Canonical coset representative of x modulo the column lattice of upper-triangular H."""
    x = list(x)
    for i in reversed(range(len(x))):
        q = x[i] // H[i][i]
        if q:
            for r in range(i + 1):
                x[r] -= q * H[r][i]
    return tuple(x)


def brute_cokernel_counts(A: IntMatrix, exponents, cap: int = MAX_COSETS):
    """Order of Z^n / A Z^n and #{x : kx = 0} for each k, or None past the cap."""
    det = A.determinant()
    if det == 0 or abs(det) > cap:
        return None
    H = hermite_normal_form(sympy.Matrix(A.to_rows())).tolist()
    H = [[int(x) for x in row] for row in H]
    n = A.rows
    if any(H[i][j] for i in range(n) for j in range(i)):
        raise ValueError("Hermite form is not upper triangular")
    for j in range(n):
        if any(_reduce(H, list(A.col(j)))):
            raise ValueError("Hermite form does not span the image lattice")
    reps = list(itertools.product(*(range(H[i][i]) for i in range(n))))
    counts = {}
    for k in exponents:
        counts[k] = sum(1 for x in reps if not any(_reduce(H, [k * c for c in x])))
    return len(reps), counts


def _divisors(m: int) -> List[int]:
    return [k for k in range(1, m + 1) if m % k == 0]


def check_cokernel(A: IntMatrix, verdict: OracleVerdict, cap: int = MAX_COSETS):
    G = cokernel(A)
    exponent = G.torsion[-1] if G.torsion else 1
    try:
        result = brute_cokernel_counts(A, _divisors(exponent), cap)
    except ValueError as e:
        verdict.disagree(f"{A.to_rows()}: {e}")
        return
    if result is None:
        verdict.exhausted += 1
        if A.determinant() == 0 and G.free_rank != A.rows - A.rank():
            verdict.disagree(f"{A.to_rows()}: free rank {G.free_rank} vs {A.rows - A.rank()}")
        return
    order, counts = result
    if order != group_order(G):
        verdict.disagree(f"{A.to_rows()}: order {order} vs {group_order(G)}")
        return
    for k, count in counts.items():
        expected = 1
        for t in G.torsion:
            expected *= gcd(k, t)
        if count != expected:
            verdict.disagree(f"{A.to_rows()}: {count} elements killed by {k}, expected {expected}")
            return
    verdict.agree()


def oracle_cokernel(rng: random.Random, trials: int = 100, n_max: int = 3,
                    matrices: Optional[List[IntMatrix]] = None) -> OracleVerdict:
    verdict = OracleVerdict("cokernel")
    for A in matrices or []:
        check_cokernel(A, verdict)
    for _ in range(trials):
        check_cokernel(random_matrix(rng, rng.randint(1, n_max)), verdict)
    return verdict


# ---------------------------------------------------------------- positivity by long iteration


def brute_positivity(M: IntMatrix, g, steps: int = 60) -> Optional[str]:
    for _ in range(steps + 1):
        if not any(g):
            return ZERO
        if all(x >= 0 for x in g):
            return POSITIVE
        if all(x <= 0 for x in g):
            return NEGATIVE
        g = M.apply(g)
    return None


def oracle_positivity(M: IntMatrix, rng: random.Random, samples: int = 1000,
                      j_max: int = 64, steps: int = 60, entry: int = 9) -> OracleVerdict:
    verdict = OracleVerdict("positivity")
    G = make_dimension_group(M)
    decided = 0
    for _ in range(samples):
        g = tuple(rng.randint(-entry, entry) for _ in range(M.rows))
        main = dg_positive(G, DGElement(g), j_max)
        if main.decided:
            decided += 1
        brute = brute_positivity(M, g, steps)
        if not main.decided or brute is None:
            verdict.exhausted += 1
            continue
        if main.value == brute:
            verdict.agree()
        else:
            verdict.disagree(f"{g}: {main.value} vs iteration {brute}")
    verdict.notes.append(f"decided {decided} of {samples}")
    return verdict


# ---------------------------------------------------------------- bracket identities


def oracle_bracket(model: SmaleModel, rng: random.Random, samples: int = 200,
                   depth: int = DEFAULT_DEPTH) -> OracleVerdict:
    verdict = OracleVerdict("bracket")
    check = check_bracket_identities(model, rng, samples, depth)
    failed = sum(check.failures.values())
    verdict.checked = check.certified
    verdict.agreed = check.certified - min(failed, check.certified)
    verdict.exhausted = samples - check.certified
    for name, count in check.failures.items():
        if count:
            verdict.disagreements.append(f"{name} failed {count} times")
    verdict.notes.append(f"certified {check.certified} of {samples}")
    return verdict


# ---------------------------------------------------------------- orientability by exhaustive search


def exhaustive_orientable(P: GraphPresentation) -> Optional[bool]:
    if P.n > MAX_SIGN_SEARCH_EDGES:
        return None
    for signs in itertools.product((1, -1), repeat=P.n):
        sigma = dict(zip(P.edges, signs))
        if all(sigma[e] * x.sign * sigma[x.edge] == 1 for e, w in P.rule.words for x in w):
            return True
    return False


def random_presentation(rng: random.Random, n_max: int = 4, length_max: int = 4) -> GraphPresentation:
    edges = tuple("abcdefgh"[:rng.randint(1, n_max)])
    words = tuple(
        (e, tuple(Letter(rng.choice(edges), rng.choice((1, -1))) for _ in range(rng.randint(1, length_max))))
        for e in edges
    )
    return GraphPresentation(edges, WrappingRule(words))


def check_orientation(P: GraphPresentation, verdict: OracleVerdict):
    brute = exhaustive_orientable(P)
    if brute is None:
        verdict.exhausted += 1
        return
    result = check_orientable(P)
    if result.orientable != brute:
        verdict.disagree(f"{dict(P.rule.words)}: parity search {result.orientable} vs sign search {brute}")
        return
    if result.orientable and not result.oriented.all_positive():
        verdict.disagree(f"{dict(P.rule.words)}: re-oriented rule still has negative letters")
        return
    verdict.agree()


def oracle_orientable(rng: random.Random, trials: int = 200,
                      presentations: Optional[List[GraphPresentation]] = None) -> OracleVerdict:
    verdict = OracleVerdict("orientable")
    for P in presentations or []:
        check_orientation(P, verdict)
    for _ in range(trials):
        check_orientation(random_presentation(rng), verdict)
    return verdict
