"""Metric network data model.

A network is a finite connected graph whose edges are segments with a length
``l`` and a diffusion coefficient ``mu``, glued at vertices. Each vertex i
carries entry probabilities p_{i,a} over its incident edges (summing to one);
the derived jump weights gamma_{i,a} = p_{i,a} / mu_a drive both the density
transmission conditions and the Kirchhoff weights of the value function.

Edges are oriented: an edge runs from its tail (coordinate y = 0) to its head
(y = length). ``normalize_orientation`` rewrites a network so that at every
vertex all incident edges either start or all end there, inserting artificial
midpoint vertices where the underlying graph is not bipartite.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Edge:
    name: str
    tail: int
    head: int
    length: float
    mu: float


@dataclass(frozen=True)
class Span:
    """Footprint of a (possibly split or flipped) edge on an original edge.

    A point at coordinate y on the new edge sits at ``start + sign * y`` on
    original edge ``edge``.
    """

    edge: int
    start: float
    sign: int

    def pull(self, y):
        return self.start + self.sign * np.asarray(y)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def add(self, message: str) -> None:
        self.violations.append(message)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(self.violations)


class MetricNetwork:
    """Immutable-by-convention graph with lengths, diffusions and entry probs.

    Parameters
    ----------
    vertex_names : list of str
    edges : list of Edge (vertex ids are indices into vertex_names)
    entry_probs : optional dict (vertex id, edge index) -> p. When omitted,
        p_{i,a} = mu_a / sum of mu over edges incident to i, which makes the
        jump weight gamma constant per vertex.
    artificial : vertex ids inserted by normalize_orientation.
    spans : per-edge Span mapping back to original coordinates (None = identity).
    """

    def __init__(self, vertex_names, edges, entry_probs=None, artificial=(),
                 spans=None):
        self.vertex_names = list(vertex_names)
        self.edges = list(edges)
        self.artificial = frozenset(artificial)
        self.spans = list(spans) if spans is not None else None

        nv = len(self.vertex_names)
        self._incident: list[list[int]] = [[] for _ in range(nv)]
        for a, e in enumerate(self.edges):
            if 0 <= e.tail < nv and 0 <= e.head < nv:
                self._incident[e.tail].append(a)
                if e.head != e.tail:
                    self._incident[e.head].append(a)

        if entry_probs is None:
            entry_probs = {}
            for i in range(nv):
                mus = np.array([self.edges[a].mu for a in self._incident[i]], float)
                tot = mus.sum()
                for a, m in zip(self._incident[i], mus):
                    entry_probs[(i, a)] = float(m / tot) if tot > 0 else np.nan
        self.p = dict(entry_probs)
        self.gamma = {}
        for (i, a), p in self.p.items():
            if 0 <= a < len(self.edges):
                mu = self.edges[a].mu
                self.gamma[(i, a)] = p / mu if mu > 0 else np.nan

    # -- basic queries -----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_names)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident(self, i: int) -> list[int]:
        return self._incident[i]

    def degree(self, i: int) -> int:
        return len(self._incident[i])

    def is_boundary(self, i: int) -> bool:
        return self.degree(i) == 1

    def side(self, a: int, i: int) -> int:
        """0 if vertex i is the tail of edge a, 1 if it is the head."""
        e = self.edges[a]
        if e.tail == i:
            return 0
        if e.head == i:
            return 1
        raise ValueError(f"vertex {i} is not an endpoint of edge {a}")

    def sign(self, i: int, a: int) -> int:
        """Incidence sign: +1 when i is the head (terminal point), else -1."""
        return 1 if self.side(a, i) == 1 else -1

    def endpoint(self, a: int, side: int) -> int:
        e = self.edges[a]
        return e.tail if side == 0 else e.head

    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges])

    def mus(self) -> np.ndarray:
        return np.array([e.mu for e in self.edges])

    def is_oriented(self) -> bool:
        """True when every vertex is all-tails or all-heads."""
        for i in range(self.n_vertices):
            sides = {self.side(a, i) for a in self._incident[i]}
            if len(sides) > 1:
                return False
        return True

    def connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        seen = {0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for a in self._incident[i]:
                e = self.edges[a]
                for j in (e.tail, e.head):
                    if j not in seen:
                        seen.add(j)
                        queue.append(j)
        return len(seen) == self.n_vertices

    def span(self, a: int) -> Span:
        if self.spans is None:
            return Span(a, 0.0, 1)
        return self.spans[a]

    def __repr__(self):
        return (f"MetricNetwork({self.n_vertices} vertices, {self.n_edges} edges, "
                f"{len(self.artificial)} artificial)")


# -- validation ------------------------------------------------------------

def validate(net: MetricNetwork) -> ValidationReport:
    """Check admissibility; the report lists every violated invariant."""
    rep = ValidationReport()
    nv, ne = net.n_vertices, net.n_edges
    if nv == 0 or ne == 0:
        rep.add("network must have at least one vertex and one edge")
        return rep

    for a, e in enumerate(net.edges):
        if not (0 <= e.tail < nv and 0 <= e.head < nv):
            rep.add(f"edge {e.name}: endpoint out of range")
            continue
        if e.tail == e.head:
            rep.add(f"edge {e.name}: endpoints must be distinct")
        if not e.length > 0:
            rep.add(f"edge {e.name}: length must be positive, got {e.length}")
        if not e.mu > 0:
            rep.add(f"edge {e.name}: diffusion mu must be positive, got {e.mu}")

    pairs = {}
    for e in net.edges:
        key = frozenset((e.tail, e.head))
        pairs[key] = pairs.get(key, 0) + 1
    for key, cnt in pairs.items():
        if cnt > 1 and len(key) == 2:
            i, j = sorted(key)
            rep.add(f"edges may meet in at most one vertex: {cnt} parallel edges "
                    f"between {net.vertex_names[i]} and {net.vertex_names[j]}")

    if not net.connected():
        rep.add("network must be connected")

    for i in range(nv):
        inc = net.incident(i)
        if not inc:
            rep.add(f"vertex {net.vertex_names[i]}: isolated")
            continue
        ps = []
        for a in inc:
            p = net.p.get((i, a))
            if p is None or not np.isfinite(p):
                rep.add(f"vertex {net.vertex_names[i]}: missing entry probability "
                        f"for edge {net.edges[a].name}")
                continue
            if not (0.0 < p < 1.0) and not (net.degree(i) == 1 and p == 1.0):
                rep.add(f"vertex {net.vertex_names[i]}: entry probability "
                        f"p={p} outside (0,1)")
            ps.append(p)
        if ps and abs(sum(ps) - 1.0) > 1e-12:
            rep.add(f"vertex {net.vertex_names[i]}: probabilities sum "
                    f"{sum(ps):.12g} != 1")
        # gamma normalization is equivalent to the probability sum
        gm = sum(net.gamma[(i, a)] * net.edges[a].mu for a in inc
                 if (i, a) in net.gamma)
        if abs(gm - 1.0) > 1e-12 and not any("probabilities sum" in v
                                             for v in rep.violations):
            rep.add(f"vertex {net.vertex_names[i]}: sum gamma*mu = {gm:.12g} != 1")

    return rep


# -- orientation normalization ----------------------------------------------

def normalize_orientation(net: MetricNetwork) -> MetricNetwork:
    """Return an equivalent network where every vertex is all-in or all-out.

    Vertices are 2-colored by breadth-first search from vertex 0; every edge
    joining two same-colored vertices is cut at its midpoint by an artificial
    vertex with entry probability 1/2 on both halves and the same mu on both
    sides. Edges are then oriented from the source color to the sink color.
    Networks that already satisfy the property are returned unchanged, which
    makes the operation idempotent.
    """
    if net.is_oriented():
        return net

    color = np.full(net.n_vertices, -1, dtype=int)
    color[0] = 0
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for a in net.incident(i):
            e = net.edges[a]
            j = e.head if e.tail == i else e.tail
            if color[j] < 0:
                color[j] = 1 - color[i]
                queue.append(j)

    names = list(net.vertex_names)
    artificial = set(net.artificial)
    edges: list[Edge] = []
    spans: list[Span] = []
    probs: dict[tuple[int, int], float] = {}

    def keep_prob(new_a, old_a, vid):
        probs[(vid, new_a)] = net.p[(vid, old_a)]

    for a, e in enumerate(net.edges):
        base = net.span(a)
        cu, cw = color[e.tail], color[e.head]
        if cu != cw:
            # orient source color (0) -> sink color (1)
            if cu == 0:
                new = Edge(e.name, e.tail, e.head, e.length, e.mu)
                spans.append(Span(base.edge, base.start, base.sign))
            else:
                new = Edge(e.name, e.head, e.tail, e.length, e.mu)
                spans.append(Span(base.edge, base.start + base.sign * e.length,
                                  -base.sign))
            na = len(edges)
            edges.append(new)
            keep_prob(na, a, e.tail)
            keep_prob(na, a, e.head)
        else:
            # same color: split at the midpoint, artificial vertex gets the
            # opposite color so both halves run source -> sink
            mid = len(names)
            names.append(f"{e.name}*")
            artificial.add(mid)
            half = e.length / 2.0
            if cu == 0:
                e1 = Edge(f"{e.name}/a", e.tail, mid, half, e.mu)
                s1 = Span(base.edge, base.start, base.sign)
                e2 = Edge(f"{e.name}/b", e.head, mid, half, e.mu)
                s2 = Span(base.edge, base.start + base.sign * e.length,
                          -base.sign)
            else:
                e1 = Edge(f"{e.name}/a", mid, e.tail, half, e.mu)
                s1 = Span(base.edge, base.start + base.sign * half, -base.sign)
                e2 = Edge(f"{e.name}/b", mid, e.head, half, e.mu)
                s2 = Span(base.edge, base.start + base.sign * half, base.sign)
            n1 = len(edges)
            edges.append(e1)
            spans.append(s1)
            n2 = len(edges)
            edges.append(e2)
            spans.append(s2)
            keep_prob(n1, a, e.tail)
            keep_prob(n2, a, e.head)
            probs[(mid, n1)] = 0.5
            probs[(mid, n2)] = 0.5

    return MetricNetwork(names, edges, probs, artificial, spans)


# -- coordinates -------------------------------------------------------------

def edge_coordinate(net: MetricNetwork, a: int, point) -> float:
    """Inverse parametrization of a point on edge a.

    ``point`` is either a coordinate y already expressed on the edge (checked
    to lie in [0, length]) or ``("vertex", i)`` naming an endpoint, which maps
    to 0 at the tail and to the length at the head.
    """
    e = net.edges[a]
    if isinstance(point, tuple) and len(point) == 2 and point[0] == "vertex":
        i = point[1]
        s = net.side(a, i)  # raises if not an endpoint
        return 0.0 if s == 0 else e.length
    y = float(point)
    if not (0.0 <= y <= e.length):
        raise ValueError(f"point y={y} not on edge {e.name} of length {e.length}")
    return y


def original_coordinate(net: MetricNetwork, a: int, y) -> tuple[int, np.ndarray]:
    """Map (edge, y) on a normalized network to its original edge coordinates."""
    s = net.span(a)
    return s.edge, s.pull(y)


# -- file format --------------------------------------------------------------

def net_to_dict(net: MetricNetwork) -> dict:
    d = {
        "vertices": [{"name": n} for n in net.vertex_names],
        "edges": [{"name": e.name, "from": net.vertex_names[e.tail],
                   "to": net.vertex_names[e.head], "length": e.length,
                   "mu": e.mu} for e in net.edges],
        "entry_probs": [{"vertex": net.vertex_names[i],
                         "edge": net.edges[a].name, "p": p}
                        for (i, a), p in sorted(net.p.items())],
    }
    return d


def net_from_dict(d: dict) -> MetricNetwork:
    names = [v["name"] for v in d["vertices"]]
    if len(set(names)) != len(names):
        raise ValueError("duplicate vertex names")
    vid = {n: i for i, n in enumerate(names)}
    edges = []
    eid = {}
    for rec in d["edges"]:
        if rec["name"] in eid:
            raise ValueError(f"duplicate edge name {rec['name']}")
        eid[rec["name"]] = len(edges)
        edges.append(Edge(rec["name"], vid[rec["from"]], vid[rec["to"]],
                          float(rec["length"]), float(rec["mu"])))
    probs = None
    if d.get("entry_probs"):
        probs = {}
        # start from defaults so partially specified files stay normalized
        base = MetricNetwork(names, edges)
        probs.update(base.p)
        for rec in d["entry_probs"]:
            probs[(vid[rec["vertex"]], eid[rec["edge"]])] = float(rec["p"])
    return MetricNetwork(names, edges, probs)


def load_network(path) -> MetricNetwork:
    with open(path) as f:
        return net_from_dict(json.load(f))


def save_network(net: MetricNetwork, path) -> None:
    with open(path, "w") as f:
        json.dump(net_to_dict(net), f, indent=2)
        f.write("\n")
