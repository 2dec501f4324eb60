"""The stationary dimension group lim(Z^n, g -> Mg) with its order, automorphism and state."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from solk.common import PrecisionError, SolkError
from solk.exact_linalg import IntMatrix, IntVector
from solk.spectral import (
    DEFAULT_EPS,
    PerronData,
    RationalInterval,
    dot,
    is_irreducible,
    is_primitive,
    perron_vectors,
)

logger = logging.getLogger(__name__)

DEFAULT_POSITIVITY_BOUND = 64

POSITIVE = "positive"
NEGATIVE = "negative"
ZERO = "zero"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class DimensionGroup:
    M: IntMatrix
    perron: PerronData
    primitive: bool

    @property
    def n(self) -> int:
        return self.M.rows

    def to_json(self):
        return {"n": self.n, "matrix": self.M.to_json(), "primitive": self.primitive, "perron": self.perron.to_json()}


@dataclass(frozen=True)
class DGElement:
    vector: IntVector
    stage: int = 0

    def __post_init__(self):
        if self.stage < 0:
            raise SolkError(f"stage must be >= 0, got {self.stage}")
        object.__setattr__(self, "vector", tuple(int(x) for x in self.vector))

    def is_zero_vector(self) -> bool:
        return not any(self.vector)

    def to_json(self):
        return {"vector": [str(x) for x in self.vector], "stage": self.stage}

    @classmethod
    def from_json(cls, payload) -> "DGElement":
        return cls(tuple(int(x) for x in payload["vector"]), int(payload.get("stage", 0)))


@dataclass(frozen=True)
class Positivity:
    value: str
    bound: Optional[int] = None

    @property
    def decided(self) -> bool:
        return self.value != UNDECIDED

    def __str__(self):
        return f"{UNDECIDED}({self.bound})" if self.value == UNDECIDED else self.value

    def to_json(self):
        payload = {"value": self.value}
        if self.bound is not None:
            payload["bound"] = self.bound
        return payload


def make_dimension_group(M: IntMatrix, eps=DEFAULT_EPS) -> DimensionGroup:
    if not is_irreducible(M):
        raise SolkError("the dimension group needs an irreducible nonnegative matrix")
    return DimensionGroup(M, perron_vectors(M, eps), is_primitive(M))


def _check(G: DimensionGroup, a: DGElement):
    if len(a.vector) != G.n:
        raise SolkError(f"element has length {len(a.vector)}, group has rank {G.n}")


def _lift(G: DimensionGroup, a: DGElement, stage: int) -> IntVector:
    _check(G, a)
    return G.M.power(stage - a.stage).apply(a.vector)


def dg_connect(G: DimensionGroup, a: DGElement) -> DGElement:
    _check(G, a)
    return DGElement(G.M.apply(a.vector), a.stage + 1)


def dg_equal(G: DimensionGroup, a: DGElement, b: DGElement) -> bool:
    # integer kernels of M^t stop growing after n extra steps
    m = max(a.stage, b.stage) + G.n
    return _lift(G, a, m) == _lift(G, b, m)


def dg_zero(G: DimensionGroup, stage: int = 0) -> DGElement:
    return DGElement((0,) * G.n, stage)


def dg_add(G: DimensionGroup, a: DGElement, b: DGElement) -> DGElement:
    m = max(a.stage, b.stage)
    return DGElement(tuple(x + y for x, y in zip(_lift(G, a, m), _lift(G, b, m))), m)


def dg_neg(G: DimensionGroup, a: DGElement) -> DGElement:
    _check(G, a)
    return DGElement(tuple(-x for x in a.vector), a.stage)


def delta_apply(G: DimensionGroup, a: DGElement, power: int) -> DGElement:
    """delta_M^power; a negative power moves the class up |power| stages."""
    _check(G, a)
    if power >= 0:
        return DGElement(G.M.power(power).apply(a.vector), a.stage)
    return DGElement(a.vector, a.stage - power)


def _sign_of_vector(g: Sequence[int]) -> Optional[str]:
    if not any(g):
        return ZERO
    if all(x >= 0 for x in g):
        return POSITIVE
    if all(x <= 0 for x in g):
        return NEGATIVE
    return None


def dg_positive(G: DimensionGroup, a: DGElement, j_max: int = DEFAULT_POSITIVITY_BOUND) -> Positivity:
    _check(G, a)
    if a.is_zero_vector():
        return Positivity(ZERO)
    if G.primitive:
        pairing = dot(G.perron.w, a.vector)
        if pairing.lo > 0:
            return Positivity(POSITIVE)
        if pairing.hi < 0:
            return Positivity(NEGATIVE)
    g = a.vector
    for _ in range(j_max + 1):
        sign = _sign_of_vector(g)
        if sign is not None:
            return Positivity(sign)
        g = G.M.apply(g)
    if dg_equal(G, a, dg_zero(G, a.stage)):
        return Positivity(ZERO)
    logger.debug("positivity of %s undecided after %d iterations", a.vector, j_max)
    return Positivity(UNDECIDED, j_max)


def dg_compare(G: DimensionGroup, a: DGElement, b: DGElement, j_max: int = DEFAULT_POSITIVITY_BOUND) -> Positivity:
    """Sign of b - a: positive means a < b."""
    return dg_positive(G, dg_add(G, b, dg_neg(G, a)), j_max)


def _state_value(perron: PerronData, a: DGElement) -> RationalInterval:
    scale = (RationalInterval.exact(1) / perron.lam) ** a.stage
    return dot(perron.w, a.vector) * scale


def state(G: DimensionGroup, a: DGElement, eps=None) -> RationalInterval:
    """lambda^-stage * <w, g>, with w the left Perron vector summing to 1 so the unit class has state 1."""
    _check(G, a)
    value = _state_value(G.perron, a)
    if eps is None or value.width <= eps:
        return value
    eps = Fraction(eps)
    target = eps
    for _ in range(6):
        target = target * eps / (2 * value.width)
        value = _state_value(perron_vectors(G.M, target), a)
        if value.width <= eps:
            return value
    raise PrecisionError(f"state of {a.vector} did not reach width {eps}", achieved=value.width)


def state_generators(G: DimensionGroup) -> List[RationalInterval]:
    return [state(G, DGElement(tuple(int(i == j) for j in range(G.n)))) for i in range(G.n)]


def unit_class(G: DimensionGroup) -> DGElement:
    return DGElement((1,) * G.n)
