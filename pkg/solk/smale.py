"""Finite-depth numerical model of the solenoid as a Smale space.

Each edge is a circle through the wedge point whose length is its Perron
measure v_i. f is piecewise linear with slope lambda: the j-th letter of the
word of e_i occupies a subinterval of length v_(t_j) / lambda, mapped onto
edge t_j. Points of the inverse limit are truncated to coordinates x_0..x_N.
"""
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import mpmath

from solk.common import AxiomGateError, SolkError
from solk.presentation import GraphPresentation, adjacency_matrix, check_orientable
from solk.spectral import DEFAULT_EPS, PerronData, is_expanding, is_irreducible, perron_vectors

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 30
DEFAULT_PREC_BITS = 192
TOL_CONSISTENCY = 1e-12
FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class GraphPoint:
    edge: str
    pos: object

    @property
    def is_vertex(self) -> bool:
        return self.pos == 0

    def to_json(self, ctx):
        return {"edge": self.edge, "pos": ctx.nstr(self.pos, 30)}


@dataclass(frozen=True)
class SolenoidPoint:
    coords: Tuple[GraphPoint, ...]

    @property
    def depth(self) -> int:
        return len(self.coords) - 1

    def to_json(self, ctx):
        return {"coords": [p.to_json(ctx) for p in self.coords], "depth": self.depth}


@dataclass(frozen=True)
class FloatInterval:
    lo: object
    hi: object

    @property
    def width(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class BracketResult:
    point: SolenoidPoint
    certified_depth: int


@dataclass(frozen=True, eq=False)
class SmaleModel:
    presentation: GraphPresentation
    perron: PerronData
    ctx: object
    lam: object
    lengths: Tuple[object, ...]
    # per edge: (start offset, target edge index) for each letter of its word
    subdivision: Tuple[Tuple[Tuple[object, int], ...], ...]
    diam: object
    tol: object
    _index: Dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def edges(self) -> Tuple[str, ...]:
        return self.presentation.edges

    @property
    def contraction(self):
        return 1 / self.lam

    def index(self, edge: str) -> int:
        return self._index[edge]

    def length(self, edge: str):
        return self.lengths[self._index[edge]]

    @property
    def vertex(self) -> GraphPoint:
        return GraphPoint(self.edges[0], self.ctx.mpf(0))

    def tail_bound(self, depth: int):
        return self.lam ** (-depth) * self.diam / (1 - 1 / self.lam)


def build_model(P: GraphPresentation, eps=DEFAULT_EPS, prec_bits: int = DEFAULT_PREC_BITS) -> SmaleModel:
    orientation = check_orientable(P)
    if not orientation.orientable:
        raise AxiomGateError("the Smale model needs an orientable presentation")
    oriented = orientation.oriented
    M = adjacency_matrix(oriented)
    if not is_irreducible(M) or not is_expanding(M):
        raise AxiomGateError("the Smale model needs an irreducible expanding presentation")
    perron = perron_vectors(M, eps)

    ctx = mpmath.MPContext()
    ctx.prec = prec_bits

    def mp(q):
        return ctx.mpf(q.numerator) / q.denominator

    lam = mp(perron.lam.midpoint)
    v = [mp(x.midpoint) for x in perron.v]
    index = {e: i for i, e in enumerate(oriented.edges)}
    subdivision = []
    lengths = []
    for e, word in oriented.rule.words:
        starts, c = [], ctx.mpf(0)
        for letter in word:
            t = index[letter.edge]
            starts.append((c, t))
            c += v[t] / lam
        subdivision.append(tuple(starts))
        lengths.append(c)
    halves = sorted(L / 2 for L in lengths)
    diam = halves[-1] + (halves[-2] if len(halves) > 1 else 0)
    return SmaleModel(
        presentation=oriented,
        perron=perron,
        ctx=ctx,
        lam=lam,
        lengths=tuple(lengths),
        subdivision=tuple(subdivision),
        diam=diam,
        tol=ctx.mpf(2) ** (-(prec_bits // 2)),
        _index=index,
    )


# ---------------------------------------------------------------- graph map


def apply_f(model: SmaleModel, p: GraphPoint) -> GraphPoint:
    if p.is_vertex:
        return model.vertex
    i = model.index(p.edge)
    pieces = model.subdivision[i]
    j = len(pieces) - 1
    while j > 0 and pieces[j][0] > p.pos:
        j -= 1
    start, target = pieces[j]
    local = p.pos - start
    if j > 0 and local <= model.tol:
        logger.warning("point %s hits a subdivision boundary; mapped to the vertex", p)
        return model.vertex
    image = model.lam * local
    if image >= model.lengths[target] - model.tol * model.lam:
        logger.warning("point %s maps onto the end of edge %s; mapped to the vertex", p, model.edges[target])
        return model.vertex
    return GraphPoint(model.edges[target], image)


def preimages(model: SmaleModel, p: GraphPoint) -> List[GraphPoint]:
    if p.is_vertex:
        logger.warning("preimages of the vertex are the vertex and the subdivision points")
        out = [model.vertex]
        for i, pieces in enumerate(model.subdivision):
            out.extend(GraphPoint(model.edges[i], start) for start, _ in pieces[1:])
        return out
    t = model.index(p.edge)
    step = p.pos / model.lam
    return [
        GraphPoint(model.edges[i], start + step)
        for i, pieces in enumerate(model.subdivision)
        for start, target in pieces
        if target == t
    ]


def d0(model: SmaleModel, p: GraphPoint, q: GraphPoint):
    """Length of the shortest path in the wedge of circles."""
    if p.is_vertex and q.is_vertex:
        return model.ctx.mpf(0)

    def to_vertex(x: GraphPoint):
        if x.is_vertex:
            return model.ctx.mpf(0)
        L = model.length(x.edge)
        return min(x.pos, L - x.pos)

    if not p.is_vertex and not q.is_vertex and p.edge == q.edge:
        gap = abs(p.pos - q.pos)
        return min(gap, model.length(p.edge) - gap)
    return to_vertex(p) + to_vertex(q)


# ---------------------------------------------------------------- inverse-limit points


def check_consistency(model: SmaleModel, x: SolenoidPoint, tol=TOL_CONSISTENCY) -> bool:
    return all(d0(model, apply_f(model, x.coords[i + 1]), x.coords[i]) <= tol for i in range(x.depth))


def lift_point(model: SmaleModel, x0: GraphPoint, choices) -> SolenoidPoint:
    """x_(k+1) is preimage number choices[k] (mod the count) of x_k."""
    coords = [x0]
    for c in choices:
        pre = preimages(model, coords[-1])
        coords.append(pre[c % len(pre)])
    x = SolenoidPoint(tuple(coords))
    if not check_consistency(model, x):
        raise SolkError("lifted point is not consistent with the inverse limit")
    return x


def shift(model: SmaleModel, x: SolenoidPoint, direction: str = FORWARD) -> SolenoidPoint:
    if direction == FORWARD:
        return SolenoidPoint((apply_f(model, x.coords[0]),) + x.coords[:-1])
    if direction == BACKWARD:
        if x.depth < 1:
            raise SolkError("backward shift needs depth >= 1")
        return SolenoidPoint(x.coords[1:])
    raise SolkError(f"unknown shift direction {direction!r}")


def metric_d(model: SmaleModel, x: SolenoidPoint, y: SolenoidPoint) -> FloatInterval:
    """sum_i lambda^-i d0(x_i, y_i), truncated at depth N, with the tail as the interval width."""
    if x.depth != y.depth:
        raise SolkError(f"depth mismatch: {x.depth} vs {y.depth}")
    total = model.ctx.mpf(0)
    weight = model.ctx.mpf(1)
    for p, q in zip(x.coords, y.coords):
        total += weight * d0(model, p, q)
        weight /= model.lam
    return FloatInterval(total, total + model.tail_bound(x.depth))


def _nearest_preimage(model: SmaleModel, x: GraphPoint, target: GraphPoint, radius):
    ranked = sorted(((d0(model, c, target), k, c) for k, c in enumerate(preimages(model, x))), key=lambda r: (r[0], r[1]))
    best = ranked[0]
    unique = best[0] <= radius and (len(ranked) == 1 or ranked[1][0] > radius)
    return best[2], unique


def bracket(model: SmaleModel, x: SolenoidPoint, y: SolenoidPoint) -> BracketResult:
    """z_0 = x_0 and z_n the preimage of z_(n-1) closest to y_n, certified unique in the lambda^-(n+1) ball."""
    dist = metric_d(model, x, y)
    if dist.hi > 2 / model.lam:
        raise SolkError(f"points too far apart for the bracket (d <= {model.ctx.nstr(dist.hi, 8)})")
    coords = [x.coords[0]]
    certified = 0
    for n in range(1, x.depth + 1):
        radius = model.lam ** (-(n + 1)) + model.tol
        z, unique = _nearest_preimage(model, coords[-1], y.coords[n], radius)
        if unique and certified == n - 1:
            certified = n
        elif certified == n - 1:
            logger.debug("bracket certification stops at level %d", n)
        coords.append(z)
    return BracketResult(SolenoidPoint(tuple(coords)), certified)


# ---------------------------------------------------------------- sampling


def random_graph_point(model: SmaleModel, rng: random.Random) -> GraphPoint:
    weights = [float(L) for L in model.lengths]
    i = rng.choices(range(len(model.edges)), weights=weights)[0]
    L = model.lengths[i]
    pos = L * model.ctx.mpf(rng.uniform(0.01, 0.99))
    return GraphPoint(model.edges[i], pos)


def random_point(model: SmaleModel, rng: random.Random, depth: int = DEFAULT_DEPTH) -> SolenoidPoint:
    return lift_point(model, random_graph_point(model, rng), [rng.randrange(1 << 30) for _ in range(depth)])


def _follow(model: SmaleModel, y0: GraphPoint, guide: SolenoidPoint, aligned: int, rng: random.Random) -> SolenoidPoint:
    """Lift y0 along the preimages closest to guide for `aligned` levels, then randomly."""
    coords = [y0]
    for n in range(1, guide.depth + 1):
        pre = preimages(model, coords[-1])
        if n <= aligned:
            coords.append(min(pre, key=lambda c: d0(model, c, guide.coords[n])))
        else:
            coords.append(pre[rng.randrange(len(pre))])
    return SolenoidPoint(tuple(coords))


def _nudge(model: SmaleModel, p: GraphPoint, rng: random.Random) -> GraphPoint:
    L = model.length(p.edge)
    room = min(p.pos, L - p.pos) / 2
    magnitude = model.ctx.mpf(rng.uniform(0.25, 1)) * rng.choice((-1, 1))
    step = min(room, model.lam ** -3) * magnitude
    return GraphPoint(p.edge, p.pos + step)


def random_nearby_pair(model: SmaleModel, rng: random.Random, depth: int = DEFAULT_DEPTH):
    """y_0 close to x_0, pasts aligned for a few levels and then independent."""
    x = random_point(model, rng, depth)
    y = _follow(model, _nudge(model, x.coords[0], rng), x, rng.randint(2, 4), rng)
    return x, y


def random_stable_pair(model: SmaleModel, rng: random.Random, depth: int = DEFAULT_DEPTH):
    """Same x_0, pasts diverging after a few levels: y is in the local stable set of x."""
    x = random_point(model, rng, depth)
    return x, _follow(model, x.coords[0], x, rng.randint(2, 4), rng)


def random_unstable_pair(model: SmaleModel, rng: random.Random, depth: int = DEFAULT_DEPTH):
    """y_0 close to x_0 with fully aligned pasts: y is in the local unstable set of x."""
    x = random_point(model, rng, depth)
    return x, _follow(model, _nudge(model, x.coords[0], rng), x, depth, rng)


# ---------------------------------------------------------------- checks


@dataclass
class ContractionReport:
    ratios: List[Tuple[object, object]]
    bound: object
    coincident: bool = False
    precondition_ok: bool = True

    @property
    def max_ratio(self):
        return max((hi for _, hi in self.ratios), default=0)

    @property
    def within_bound(self) -> bool:
        """No ratio is certainly above the bound."""
        return self.precondition_ok and all(lo <= self.bound for lo, _ in self.ratios)

    @property
    def certified(self) -> bool:
        """Every ratio is certainly at most the bound."""
        return self.precondition_ok and all(hi <= self.bound for _, hi in self.ratios)

    def to_json(self, ctx):
        return {
            "ratios": [{"lo": ctx.nstr(lo, 12), "hi": ctx.nstr(hi, 12)} for lo, hi in self.ratios],
            "bound": ctx.nstr(self.bound, 12),
            "coincident": self.coincident,
            "precondition_ok": self.precondition_ok,
            "within_bound": self.within_bound,
            "certified": self.certified,
        }


def _ratio(before: FloatInterval, after: FloatInterval):
    return after.lo / before.hi, after.hi / before.lo


def stable_contraction_check(model: SmaleModel, x: SolenoidPoint, y: SolenoidPoint,
                             steps: int = 5, slack=1e-6) -> ContractionReport:
    bound = model.contraction + slack
    tolerance = 10 * model.tail_bound(x.depth)
    if metric_d(model, x, y).hi <= tolerance:
        return ContractionReport([], bound, coincident=True)
    z = bracket(model, x, y).point
    if metric_d(model, z, y).hi > tolerance:
        logger.warning("stable contraction check: y is not in the local stable set of x")
        return ContractionReport([], bound, precondition_ok=False)
    ratios = []
    before = metric_d(model, x, y)
    for _ in range(steps):
        x, y = shift(model, x), shift(model, y)
        after = metric_d(model, x, y)
        ratios.append(_ratio(before, after))
        before = after
    return ContractionReport(ratios, bound)


def unstable_contraction_check(model: SmaleModel, x: SolenoidPoint, y: SolenoidPoint,
                               steps: int = 5, slack=1e-6) -> ContractionReport:
    bound = model.contraction + slack
    tolerance = 10 * model.tail_bound(x.depth)
    if metric_d(model, x, y).hi <= tolerance:
        return ContractionReport([], bound, coincident=True)
    # y is in the local unstable set of x iff [y, x] = y
    if metric_d(model, bracket(model, y, x).point, y).hi > tolerance:
        logger.warning("unstable contraction check: y is not in the local unstable set of x")
        return ContractionReport([], bound, precondition_ok=False)
    ratios = []
    before = metric_d(model, x, y)
    for _ in range(min(steps, x.depth - 1)):
        x, y = shift(model, x, BACKWARD), shift(model, y, BACKWARD)
        after = metric_d(model, x, y)
        ratios.append(_ratio(before, after))
        before = after
    return ContractionReport(ratios, bound)


IDENTITIES = ("[x,x]=x", "[[x,y],z]=[x,z]", "[x,[y,z]]=[x,z]", "[fx,fy]=f[x,y]")


@dataclass
class BracketCheck:
    samples: int
    certified: int = 0
    failures: Dict[str, int] = field(default_factory=lambda: {name: 0 for name in IDENTITIES})
    max_deviation: object = 0

    @property
    def ok(self) -> bool:
        return self.certified > 0 and not any(self.failures.values())

    def to_json(self, ctx):
        return {
            "samples": self.samples,
            "certified": self.certified,
            "failures": dict(self.failures),
            "max_deviation": ctx.nstr(self.max_deviation, 8),
            "ok": self.ok,
        }


def _certified(model: SmaleModel, x: SolenoidPoint, y: SolenoidPoint) -> Optional[SolenoidPoint]:
    try:
        result = bracket(model, x, y)
    except SolkError:
        return None
    return result.point if result.certified_depth == x.depth else None


def check_bracket_identities(model: SmaleModel, rng: random.Random, samples: int = 1000,
                             depth: int = DEFAULT_DEPTH, max_attempts: Optional[int] = None) -> BracketCheck:
    report = BracketCheck(samples)
    tolerance = 10 * model.tail_bound(depth)
    attempts = max_attempts or max(4 * samples, 50)
    for _ in range(attempts):
        if report.certified >= samples:
            break
        x, y = random_nearby_pair(model, rng, depth)
        z = _follow(model, _nudge(model, x.coords[0], rng), x, rng.randint(2, 4), rng)
        fx, fy = shift(model, x), shift(model, y)
        xx = _certified(model, x, x)
        xy = _certified(model, x, y)
        xz = _certified(model, x, z)
        yz = _certified(model, y, z)
        fxfy = _certified(model, fx, fy)
        if None in (xx, xy, xz, yz, fxfy):
            continue
        xy_z = _certified(model, xy, z)
        x_yz = _certified(model, x, yz)
        if xy_z is None or x_yz is None:
            continue
        report.certified += 1
        checks = (
            ("[x,x]=x", xx, x),
            ("[[x,y],z]=[x,z]", xy_z, xz),
            ("[x,[y,z]]=[x,z]", x_yz, xz),
            ("[fx,fy]=f[x,y]", fxfy, shift(model, xy)),
        )
        for name, a, b in checks:
            deviation = metric_d(model, a, b).lo
            report.max_deviation = max(report.max_deviation, deviation)
            if metric_d(model, a, b).hi > tolerance:
                report.failures[name] += 1
    if report.certified < samples:
        logger.warning("only %d of %d bracket samples certified", report.certified, samples)
    return report
