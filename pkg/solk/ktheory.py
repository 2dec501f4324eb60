"""K-groups of the stable/unstable algebras and the Ruelle algebras, and the full report pipeline."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from solk.common import AxiomGateError, ResourceCapError, SolkError
from solk.dimension_group import DimensionGroup, make_dimension_group
from solk.exact_linalg import (
    FGAbelianGroup,
    IntMatrix,
    cokernel,
    describe_group,
    direct_sum,
    ext_to_Z,
    group_iso_eq,
    hom_to_Z,
    kernel_basis,
    smith_normal_form,
)
from solk.presentation import (
    DEFAULT_NONFOLDING_BOUND,
    DEFAULT_WORD_CAP,
    AxiomReport,
    GraphPresentation,
    adjacency_matrix,
    check_axioms,
    format_presentation,
)
from solk.spectral import DEFAULT_EPS, perron_vectors

logger = logging.getLogger(__name__)

Z = FGAbelianGroup(1)
DEFAULT_FILTRATION_DEPTH = 6

CITATIONS = (
    "K0(U) is order isomorphic to the dimension group of M and K1(U) = Z (cross-section crossed product).",
    "K_*(R_u) comes from the Pimsner-Voiculescu sequence of the map induced by f on U.",
    "K_*(R_s) is K^(*+1)(R_u) by Spanier-Whitehead duality, evaluated here through the UCT.",
    "R_u and R_s are separable, simple, stable, nuclear and purely infinite with the UCT when the solenoid is mixing.",
    "Equal K-groups then make R_u and R_s *-isomorphic by Kirchberg-Phillips classification.",
    "The splittings of the K-groups are unnatural; only isomorphism classes are reported.",
)


@dataclass(frozen=True)
class StationaryLimit:
    """The group lim(Z^n, M), reported by descriptor rather than invariant factors."""

    M: IntMatrix
    eventual_rank: int

    @property
    def n(self) -> int:
        return self.M.rows

    def as_group(self) -> Optional[FGAbelianGroup]:
        if abs(self.M.determinant()) == 1:
            return FGAbelianGroup(self.n)
        return None

    @property
    def display(self) -> str:
        group = self.as_group()
        if group is not None:
            return describe_group(group)
        if self.n == 1:
            return f"Z[1/{self.M[0, 0]}]" if self.M[0, 0] > 1 else "0"
        return f"lim(Z^{self.n}, M), eventual rank {self.eventual_rank}"

    def to_json(self):
        payload = {
            "kind": "stationary_limit",
            "n": self.n,
            "matrix": self.M.to_json(),
            "eventual_rank": self.eventual_rank,
            "display": self.display,
        }
        group = self.as_group()
        if group is not None:
            payload["group"] = group.to_json()
        return payload


def stationary_limit(M: IntMatrix) -> StationaryLimit:
    return StationaryLimit(M, M.power(M.rows).rank())


@dataclass(frozen=True)
class KGroups:
    k0: Union[FGAbelianGroup, StationaryLimit]
    k1: FGAbelianGroup
    k0_order: Optional[DimensionGroup] = None

    def to_json(self):
        return {"K0": self.k0.to_json(), "K1": self.k1.to_json()}

    def describe(self) -> str:
        k0 = self.k0.display if isinstance(self.k0, StationaryLimit) else describe_group(self.k0)
        return f"K0 = {k0}, K1 = {describe_group(self.k1)}"


def same_groups(a: KGroups, b: KGroups) -> bool:
    return group_iso_eq(a.k0, b.k0) and group_iso_eq(a.k1, b.k1)


# ---------------------------------------------------------------- groups from a matrix


def unstable_from_matrix(M: IntMatrix, eps=None) -> KGroups:
    order = make_dimension_group(M, eps) if eps is not None else None
    return KGroups(stationary_limit(M), Z, order)


def ruelle_unstable_from_matrix(M: IntMatrix) -> KGroups:
    """K0 = Z + coker(I - M), K1 = Z + Z^(rank ker(I - M))."""
    A = IntMatrix.identity(M.rows) - M
    k0 = direct_sum(Z, cokernel(A))
    k1 = FGAbelianGroup(1 + len(kernel_basis(A)))
    return KGroups(k0, k1)


def ruelle_stable_from_unstable(ru: KGroups) -> KGroups:
    """K_i(R_s) = K^(i+1)(R_u) through the UCT: Hom(K_(i+1)) + Ext(K_i)."""
    k0 = direct_sum(hom_to_Z(ru.k1), ext_to_Z(ru.k0))
    k1 = direct_sum(hom_to_Z(ru.k0), ext_to_Z(ru.k1))
    return KGroups(k0, k1)


def closed_form_stable(M: IntMatrix) -> KGroups:
    """Closed form for R_s read straight off the Smith diagonal of I - M."""
    d = smith_normal_form(IntMatrix.identity(M.rows) - M).diagonal
    zeros = sum(1 for x in d if x == 0)
    k0 = FGAbelianGroup.from_cyclic_orders([0] + list(d))
    return KGroups(k0, FGAbelianGroup(1 + zeros))


@dataclass(frozen=True)
class MatrixGroups:
    U: KGroups
    Ru: KGroups
    Rs: KGroups


def groups_from_matrix(M: IntMatrix, eps=None) -> MatrixGroups:
    ru = ruelle_unstable_from_matrix(M)
    return MatrixGroups(unstable_from_matrix(M, eps), ru, ruelle_stable_from_unstable(ru))


# ---------------------------------------------------------------- gated entry points


def _gate(P: GraphPresentation, bound: int, cap: int) -> AxiomReport:
    report = check_axioms(P, bound, cap)
    if not report.passed:
        raise AxiomGateError("axioms fail: " + "; ".join(report.failures()), report)
    return report


def k_unstable(P: GraphPresentation, eps=DEFAULT_EPS, gate=True,
               bound=DEFAULT_NONFOLDING_BOUND, cap=DEFAULT_WORD_CAP) -> KGroups:
    if gate:
        _gate(P, bound, cap)
    return unstable_from_matrix(adjacency_matrix(P), eps)


def k_ruelle_unstable(P: GraphPresentation, gate=True,
                      bound=DEFAULT_NONFOLDING_BOUND, cap=DEFAULT_WORD_CAP) -> KGroups:
    if gate:
        _gate(P, bound, cap)
    return ruelle_unstable_from_matrix(adjacency_matrix(P))


def k_ruelle_stable(P: GraphPresentation, gate=True,
                    bound=DEFAULT_NONFOLDING_BOUND, cap=DEFAULT_WORD_CAP) -> KGroups:
    return ruelle_stable_from_unstable(k_ruelle_unstable(P, gate, bound, cap))


def k_stable_filtration(P: GraphPresentation, depth=DEFAULT_FILTRATION_DEPTH,
                        cap=DEFAULT_WORD_CAP) -> List[int]:
    """Total letter count of the words of f^k for k = 1..depth (sum of the entries of M^k)."""
    if depth < 1:
        raise SolkError(f"filtration depth must be >= 1, got {depth}")
    M = adjacency_matrix(P)
    limit = cap * M.rows
    sizes = []
    power = M
    for k in range(1, depth + 1):
        total = sum(power.entries)
        if total > limit:
            raise ResourceCapError(f"stage {k} size {total} exceeds cap {limit}", achieved=total)
        sizes.append(total)
        power = power @ M
    return sizes


# ---------------------------------------------------------------- report


class KPair(BaseModel):
    model_config = ConfigDict(extra="forbid")

    K0: Dict[str, Any]
    K1: Dict[str, Any]


class StageError(BaseModel):
    stage: str
    error: str
    kind: str = "SolkError"

    @classmethod
    def from_exception(cls, stage: str, e: Exception) -> "StageError":
        return cls(stage=stage, error=str(e), kind=type(e).__name__)


class KTheoryReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    presentation: str
    axioms: Optional[Dict[str, Any]] = None
    adjacency: Optional[List[List[str]]] = None
    perron: Optional[Dict[str, Any]] = None
    U: Optional[KPair] = None
    Ru: Optional[KPair] = None
    Rs: Optional[KPair] = None
    duality_check: Optional[bool] = None
    closed_form_check: Optional[bool] = None
    transpose_check: Optional[bool] = None
    stable_filtration: Optional[List[int]] = None
    citations: List[str] = Field(default_factory=list)
    skipped: List[str] = Field(default_factory=list)
    errors: List[StageError] = Field(default_factory=list)


def _pair(groups: KGroups) -> KPair:
    return KPair(**groups.to_json())


def full_report(P: GraphPresentation, eps=DEFAULT_EPS, bound=DEFAULT_NONFOLDING_BOUND,
                depth=DEFAULT_FILTRATION_DEPTH, cap=DEFAULT_WORD_CAP) -> KTheoryReport:
    report = KTheoryReport(presentation=format_presentation(P))
    M = adjacency_matrix(P)
    report.adjacency = M.to_json()

    axioms = None
    try:
        axioms = check_axioms(P, bound, cap)
        report.axioms = axioms.to_json()
    except SolkError as e:
        report.errors.append(StageError.from_exception("axioms", e))

    if axioms is not None and not axioms.orientation.orientable:
        report.skipped = ["perron", "U", "Ru", "Rs", "stable_filtration"]
        return report

    if axioms is None or axioms.irreducible:
        try:
            report.perron = perron_vectors(M, eps).to_json()
        except SolkError as e:
            report.errors.append(StageError.from_exception("perron", e))
    else:
        report.skipped.append("perron")

    if axioms is None or not axioms.passed:
        reason = "axioms fail" if axioms is not None else "axioms unavailable"
        report.skipped.extend(f"{name}: {reason}" for name in ("U", "Ru", "Rs", "stable_filtration"))
        return report

    report.U = _pair(unstable_from_matrix(M))
    try:
        ru = ruelle_unstable_from_matrix(M)
        rs = ruelle_stable_from_unstable(ru)
        report.Ru = _pair(ru)
        report.Rs = _pair(rs)
        report.duality_check = same_groups(ru, rs)
        report.closed_form_check = same_groups(rs, closed_form_stable(M))
        flipped = groups_from_matrix(M.transpose())
        report.transpose_check = same_groups(ru, flipped.Ru) and same_groups(rs, flipped.Rs)
    except SolkError as e:
        report.errors.append(StageError.from_exception("ruelle", e))

    try:
        report.stable_filtration = k_stable_filtration(P, depth, cap)
    except SolkError as e:
        report.errors.append(StageError.from_exception("stable_filtration", e))

    report.citations = list(CITATIONS)
    return report


def _group_text(payload: Dict[str, Any]) -> str:
    if payload.get("kind") == "stationary_limit":
        return payload["display"]
    return describe_group(FGAbelianGroup.from_json(payload))


def render_report_text(report: KTheoryReport) -> str:
    lines = []
    if report.axioms is not None:
        a = report.axioms
        lines.append(f"axioms: {'pass' if a['passed'] else 'FAIL'}")
        lines.append(f"  orientable: {a['orientable']['status']}")
        for key in ("markov", "irreducible", "primitive", "expanding"):
            lines.append(f"  {key}: {'yes' if a[key] else 'no'}")
        flat = a["flattening"]
        lines.append(f"  flattening: {flat['status']}" + (f" (k={flat['k']})" if flat["k"] else ""))
        lines.append(f"  nonfolding: {a['nonfolding']['status']}")
    if report.adjacency is not None:
        lines.append("adjacency: " + "; ".join(" ".join(r) for r in report.adjacency))
    if report.perron is not None:
        lines.append(f"lambda: {report.perron['lambda']['decimal']}" + (" (exact)" if report.perron["exact"] else ""))
    for name in ("U", "Ru", "Rs"):
        pair = getattr(report, name)
        if pair is not None:
            lines.append(f"{name}: K0 = {_group_text(pair.K0)}, K1 = {_group_text(pair.K1)}")
    for name in ("duality_check", "closed_form_check", "transpose_check"):
        value = getattr(report, name)
        if value is not None:
            lines.append(f"{name}: {'ok' if value else 'MISMATCH'}")
    if report.stable_filtration is not None:
        lines.append("stable_filtration: " + " ".join(str(x) for x in report.stable_filtration))
    for s in report.skipped:
        lines.append(f"skipped: {s}")
    for e in report.errors:
        lines.append(f"error [{e.stage}]: {e.error}")
    return "\n".join(lines)
