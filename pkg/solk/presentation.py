"""Elementary presentations (X, f): parsing, orientation and the combinatorial axiom checks.

File format:

    # comment
    edges: a b
    a -> a a b
    b -> a b

`~a` is the edge a traversed backwards. ` / ` separates lines, so
"edges: a b / a -> a a b / b -> a b" is a complete presentation.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from solk.common import (
    PresentationError,
    PresentationSyntaxError,
    ResourceCapError,
    read_text,
)
from solk.exact_linalg import IntMatrix
from solk.spectral import is_expanding, is_irreducible, is_primitive

logger = logging.getLogger(__name__)

IDENT_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
DEFAULT_WORD_CAP = 1_000_000
DEFAULT_NONFOLDING_BOUND = 8

OUT = "out"
IN = "in"


@dataclass(frozen=True)
class Letter:
    edge: str
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PresentationError(f"letter sign must be +1 or -1, got {self.sign}")

    def inverse(self) -> "Letter":
        return Letter(self.edge, -self.sign)

    def __str__(self):
        return self.edge if self.sign > 0 else f"~{self.edge}"


Word = Tuple[Letter, ...]


def invert_word(word: Sequence[Letter]) -> Word:
    return tuple(letter.inverse() for letter in reversed(word))


def format_word(word: Sequence[Letter]) -> str:
    return " ".join(str(letter) for letter in word)


@dataclass(frozen=True)
class WrappingRule:
    """Ordered edge -> word table."""

    words: Tuple[Tuple[str, Word], ...]

    def __post_init__(self):
        for edge, word in self.words:
            if not word:
                raise PresentationError(f"empty word for edge {edge}")

    @classmethod
    def from_mapping(cls, words: Mapping[str, Sequence[Letter]]) -> "WrappingRule":
        return cls(tuple((e, tuple(w)) for e, w in words.items()))

    def word(self, edge: str) -> Word:
        for e, w in self.words:
            if e == edge:
                return w
        raise PresentationError(f"no word for edge {edge}")

    def as_dict(self) -> Dict[str, Word]:
        return dict(self.words)


@dataclass(frozen=True)
class GraphPresentation:
    edges: Tuple[str, ...]
    rule: WrappingRule
    _index: Dict[str, int] = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.edges:
            raise PresentationError("a presentation needs at least one edge")
        if len(set(self.edges)) != len(self.edges):
            raise PresentationError("duplicate edge identifiers")
        if tuple(e for e, _ in self.rule.words) != self.edges:
            raise PresentationError("wrapping rule must list every edge once, in declaration order")
        declared = set(self.edges)
        for e, w in self.rule.words:
            for letter in w:
                if letter.edge not in declared:
                    raise PresentationError(f"word of {e} uses undeclared edge {letter.edge}")
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(self.edges)})

    @property
    def n(self) -> int:
        return len(self.edges)

    def index(self, edge: str) -> int:
        try:
            return self._index[edge]
        except KeyError:
            raise PresentationError(f"unknown edge {edge}") from None

    def word(self, edge: str) -> Word:
        return self.rule.word(edge)

    def with_rule(self, rule: WrappingRule) -> "GraphPresentation":
        return GraphPresentation(self.edges, rule)

    def all_positive(self) -> bool:
        return all(letter.sign > 0 for _, w in self.rule.words for letter in w)


# ---------------------------------------------------------------- parsing


def _segments(text: str):
    """Yield (line, column, tokens) for every non-empty logical line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        cut = raw.find("#")
        body = raw if cut < 0 else raw[:cut]
        for seg in re.finditer(r"[^/]+", body):
            tokens = [(m.group(0), seg.start() + m.start() + 1) for m in re.finditer(r"\S+", seg.group(0))]
            if tokens:
                yield lineno, tokens[0][1], tokens


def _parse_letter(token: str, line: int, column: int) -> Letter:
    sign = 1
    name = token
    if token.startswith("~"):
        sign, name = -1, token[1:]
    if not IDENT_RE.match(name):
        raise PresentationSyntaxError(f"bad letter {token!r}", line, column)
    return Letter(name, sign)


def parse_presentation(text: str) -> GraphPresentation:
    edges: Optional[List[str]] = None
    vertices_seen = False
    words: Dict[str, Word] = {}
    last_line = 1

    for line, column, tokens in _segments(text):
        last_line = line
        head, head_col = tokens[0]
        if head in ("edges:", "vertices:"):
            names = tokens[1:]
            for name, col in names:
                if not IDENT_RE.match(name):
                    raise PresentationSyntaxError(f"bad identifier {name!r}", line, col)
            if head == "vertices:":
                if vertices_seen:
                    raise PresentationSyntaxError("vertices declared twice", line, head_col)
                vertices_seen = True
                if len(names) != 1:
                    raise PresentationError(
                        f"line {line}: only elementary presentations (a single vertex) are supported, "
                        f"got {len(names)} vertices; a power of the map has an elementary presentation"
                    )
                continue
            if edges is not None:
                raise PresentationSyntaxError("edges declared twice", line, head_col)
            if not names:
                raise PresentationSyntaxError("edges: needs at least one identifier", line, head_col)
            edges = []
            for name, col in names:
                if name in edges:
                    raise PresentationError(f"line {line}, column {col}: duplicate edge {name}")
                edges.append(name)
            continue

        if edges is None:
            raise PresentationSyntaxError("rule line before the edges: header", line, head_col)
        if len(tokens) < 2 or tokens[1][0] != "->":
            col = tokens[1][1] if len(tokens) > 1 else head_col + len(head)
            raise PresentationSyntaxError("expected '->'", line, col)
        if not IDENT_RE.match(head):
            raise PresentationSyntaxError(f"bad identifier {head!r}", line, head_col)
        if head not in edges:
            raise PresentationError(f"line {line}, column {head_col}: rule for undeclared edge {head}")
        if head in words:
            raise PresentationError(f"line {line}, column {head_col}: second rule for edge {head}")
        word = []
        for token, col in tokens[2:]:
            letter = _parse_letter(token, line, col)
            if letter.edge not in edges:
                raise PresentationError(f"line {line}, column {col}: undeclared edge {letter.edge}")
            word.append(letter)
        if not word:
            raise PresentationError(f"line {line}: empty word for edge {head}")
        words[head] = tuple(word)

    if edges is None:
        raise PresentationSyntaxError("missing edges: header", last_line, 1)
    missing = [e for e in edges if e not in words]
    if missing:
        raise PresentationError(f"no rule for edge(s): {', '.join(missing)}")
    return GraphPresentation(tuple(edges), WrappingRule(tuple((e, words[e]) for e in edges)))


def load_presentation(path) -> GraphPresentation:
    return parse_presentation(read_text(path))


def format_presentation(P: GraphPresentation) -> str:
    lines = ["edges: " + " ".join(P.edges)]
    lines.extend(f"{e} -> {format_word(w)}" for e, w in P.rule.words)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- matrices and iteration


def adjacency_matrix(P: GraphPresentation) -> IntMatrix:
    n = P.n
    counts = [[0] * n for _ in range(n)]
    for i, (_, w) in enumerate(P.rule.words):
        for letter in w:
            counts[i][P.index(letter.edge)] += 1
    return IntMatrix.from_rows(counts)


def iterate_rule(P: GraphPresentation, k: int, cap: int = DEFAULT_WORD_CAP) -> WrappingRule:
    """Wrapping rule of f^k; a negative letter substitutes the reversed, sign-flipped word."""
    if k < 1:
        raise PresentationError(f"iteration count must be >= 1, got {k}")
    M = adjacency_matrix(P)
    lengths = tuple(len(w) for _, w in P.rule.words)
    for step in range(2, k + 1):
        lengths = M.apply(lengths)
        if max(lengths) > cap:
            raise ResourceCapError(
                f"iterated word length {max(lengths)} exceeds cap {cap} at f^{step}",
                achieved=max(lengths),
            )

    base = P.rule.as_dict()
    inverse = {e: invert_word(w) for e, w in base.items()}
    current = base
    for _ in range(k - 1):
        current = {
            e: tuple(x for letter in w for x in (base if letter.sign > 0 else inverse)[letter.edge])
            for e, w in current.items()
        }
    return WrappingRule(tuple((e, current[e]) for e in P.edges))


def iterate_presentation(P: GraphPresentation, k: int, cap: int = DEFAULT_WORD_CAP) -> GraphPresentation:
    return P.with_rule(iterate_rule(P, k, cap))


# ---------------------------------------------------------------- orientation


@dataclass(frozen=True)
class ParityConstraint:
    """Letter `position` (1-based) of the word of `source` is `target` with `sign`: sigma(source)*sign*sigma(target) = +1."""

    source: str
    position: int
    target: str
    sign: int

    def to_json(self):
        return {"source": self.source, "position": self.position, "target": self.target, "sign": self.sign}

    def __str__(self):
        return f"{self.source}[{self.position}] = {Letter(self.target, self.sign)}"


@dataclass(frozen=True)
class OrientationResult:
    orientable: bool
    signs: Tuple[Tuple[str, int], ...] = ()
    witness: Tuple[ParityConstraint, ...] = ()
    oriented: Optional[GraphPresentation] = None

    def to_json(self):
        if self.orientable:
            return {"status": "yes", "signs": dict(self.signs)}
        return {"status": "no", "witness": [c.to_json() for c in self.witness]}


def _constraints(P: GraphPresentation) -> List[ParityConstraint]:
    return [
        ParityConstraint(e, j, letter.edge, letter.sign)
        for e, w in P.rule.words
        for j, letter in enumerate(w, start=1)
    ]


def check_orientable(P: GraphPresentation) -> OrientationResult:
    """Solve sigma(e_i) * s(i,j) * sigma(e_(i,j)) = +1 over a spanning forest of the constraint graph.

    The first edge of each component (declaration order) gets +1. A violated
    constraint closes a cycle whose signs multiply to -1.
    """
    constraints = _constraints(P)
    G = nx.Graph()
    G.add_nodes_from(P.edges)
    for c in constraints:
        if c.source != c.target and not G.has_edge(c.source, c.target):
            G.add_edge(c.source, c.target, constraint=c)

    sigma: Dict[str, int] = {}
    forest = nx.Graph()
    forest.add_nodes_from(P.edges)
    for root in P.edges:
        if root in sigma:
            continue
        sigma[root] = 1
        for u, v in nx.bfs_edges(G, root):
            c = G.edges[u, v]["constraint"]
            sigma[v] = sigma[u] * c.sign
            forest.add_edge(u, v, constraint=c)

    for c in constraints:
        if sigma[c.source] * c.sign * sigma[c.target] == 1:
            continue
        path = nx.shortest_path(forest, c.target, c.source)
        cycle = tuple(forest.edges[u, v]["constraint"] for u, v in zip(path, path[1:])) + (c,)
        logger.debug("parity conflict through %s", ", ".join(str(x) for x in cycle))
        return OrientationResult(False, witness=cycle)

    signs = tuple((e, sigma[e]) for e in P.edges)
    return OrientationResult(True, signs=signs, oriented=reorient(P, dict(signs)))


def reorient(P: GraphPresentation, sigma: Mapping[str, int]) -> GraphPresentation:
    """Flip every edge with sigma(e) = -1: its word is read backwards and all its occurrences re-signed."""
    words = []
    for e, w in P.rule.words:
        s = sigma[e]
        ordered = reversed(w) if s < 0 else w
        words.append((e, tuple(Letter(x.edge, s * x.sign * sigma[x.edge]) for x in ordered)))
    return P.with_rule(WrappingRule(tuple(words)))


# ---------------------------------------------------------------- directions at the branch point


@dataclass(frozen=True)
class Direction:
    edge: str
    end: str

    def __post_init__(self):
        if self.end not in (OUT, IN):
            raise PresentationError(f"direction end must be '{OUT}' or '{IN}', got {self.end!r}")

    def __str__(self):
        return f"{self.edge}:{self.end}"


DirectionMap = Dict[Direction, Direction]


def all_directions(P: GraphPresentation) -> List[Direction]:
    return [Direction(e, end) for e in P.edges for end in (OUT, IN)]


def direction_map(P: GraphPresentation) -> DirectionMap:
    out: DirectionMap = {}
    for e, w in P.rule.words:
        first, last = w[0], w[-1]
        out[Direction(e, OUT)] = Direction(first.edge, OUT if first.sign > 0 else IN)
        out[Direction(e, IN)] = Direction(last.edge, IN if last.sign > 0 else OUT)
    return out


def compose_direction_maps(d: DirectionMap, k: int) -> DirectionMap:
    if k < 0:
        raise PresentationError("negative power of a direction map")
    result = {x: x for x in d}
    for _ in range(k):
        result = {x: d[y] for x, y in result.items()}
    return result


@dataclass(frozen=True)
class FlatteningResult:
    status: str
    k: Optional[int] = None
    image: Tuple[Direction, ...] = ()

    def to_json(self):
        return {"status": self.status, "k": self.k, "image": [str(d) for d in self.image]}


def check_flattening(P: GraphPresentation) -> FlatteningResult:
    """Least k <= 2n with at most two directions in the image of the k-th power of the direction map."""
    d = direction_map(P)
    order = all_directions(P)
    power = {x: x for x in d}
    image: Tuple[Direction, ...] = ()
    for k in range(1, 2 * P.n + 1):
        power = {x: d[y] for x, y in power.items()}
        reached = set(power.values())
        image = tuple(x for x in order if x in reached)
        if len(image) <= 2:
            if len(image) == 1:
                logger.warning("direction image of f^%d is the single germ %s", k, image[0])
            return FlatteningResult("yes", k, image)
    return FlatteningResult("no", None, image)


@dataclass(frozen=True)
class NonfoldingResult:
    status: str
    bound: int
    iterate: Optional[int] = None
    edge: Optional[str] = None
    pairs: Tuple[Tuple[int, int], ...] = ()

    def to_json(self):
        payload = {"status": self.status, "bound": self.bound}
        if self.status == "fails":
            payload.update({"iterate": self.iterate, "edge": self.edge, "pairs": [list(p) for p in self.pairs]})
        return payload


def cancelling_pairs(word: Sequence[Letter]) -> List[Tuple[int, int]]:
    return [
        (i, i + 1)
        for i, (x, y) in enumerate(zip(word, word[1:]), start=1)
        if x.edge == y.edge and x.sign != y.sign
    ]


def check_nonfolding(P: GraphPresentation, bound: int = DEFAULT_NONFOLDING_BOUND, cap: int = DEFAULT_WORD_CAP) -> NonfoldingResult:
    if P.all_positive():
        return NonfoldingResult("yes", bound)
    for j in range(1, bound + 1):
        try:
            rule = iterate_rule(P, j, cap)
        except ResourceCapError as e:
            logger.warning("nonfolding scan stopped at f^%d: %s", j, e)
            return NonfoldingResult("undecided", j - 1)
        for e, w in rule.words:
            pairs = cancelling_pairs(w)
            if pairs:
                return NonfoldingResult("fails", bound, j, e, tuple(pairs))
    return NonfoldingResult("yes", bound)


# ---------------------------------------------------------------- axioms


@dataclass(frozen=True)
class AxiomReport:
    orientation: OrientationResult
    markov: bool
    irreducible: bool
    primitive: bool
    flattening: FlatteningResult
    nonfolding: NonfoldingResult
    expanding: bool

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> List[str]:
        out = []
        if not self.orientation.orientable:
            out.append("not orientable")
        if not self.irreducible:
            out.append("adjacency matrix is reducible")
        if not self.primitive:
            out.append("adjacency matrix is not primitive")
        if self.flattening.status != "yes":
            out.append(f"flattening: {self.flattening.status}")
        if self.nonfolding.status != "yes":
            out.append(f"nonfolding: {self.nonfolding.status}")
        if not self.expanding:
            out.append("not expanding (Perron root <= 1)")
        return out

    def to_json(self):
        return {
            "orientable": self.orientation.to_json(),
            "markov": self.markov,
            "irreducible": self.irreducible,
            "primitive": self.primitive,
            "flattening": self.flattening.to_json(),
            "nonfolding": self.nonfolding.to_json(),
            "expanding": self.expanding,
            "passed": self.passed,
        }


def check_axioms(P: GraphPresentation, bound: int = DEFAULT_NONFOLDING_BOUND, cap: int = DEFAULT_WORD_CAP) -> AxiomReport:
    orientation = check_orientable(P)
    target = orientation.oriented if orientation.orientable else P
    M = adjacency_matrix(P)
    return AxiomReport(
        orientation=orientation,
        markov=True,
        irreducible=is_irreducible(M),
        primitive=is_primitive(M),
        flattening=check_flattening(target),
        nonfolding=check_nonfolding(target, bound, cap),
        expanding=is_expanding(M),
    )
