"""Discrete function spaces on a network.

Functions are sampled on uniform per-edge grids. Three trace disciplines:

* ``continuous``: one shared value per vertex (discrete analogue of the
  continuous space of the value function),
* ``jump``: the per-edge endpoint entries are traces gamma_{i,a} * c_i driven
  by one latent value c_i per vertex (the density space, where traces are
  proportional to the jump weights),
* ``pc``: independent per-edge values with no vertex identification
  (derivatives, couplings, right-hand sides).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import MetricNetwork


@dataclass(frozen=True)
class GridSpec:
    """Per-edge cell counts plus the time grid.

    cells[a] >= 2 cells on edge a, spacing h_a = length_a / cells[a];
    nodes are y_j = j * h_a for j = 0..cells[a]. Time horizon T with nt steps.
    """

    cells: tuple[int, ...]
    horizon: float
    nt: int

    @classmethod
    def uniform(cls, net: MetricNetwork, n: int, horizon: float, nt: int):
        return cls(tuple(int(n) for _ in range(net.n_edges)), float(horizon),
                   int(nt))

    @classmethod
    def per_edge(cls, cells, horizon: float, nt: int):
        return cls(tuple(int(c) for c in cells), float(horizon), int(nt))

    def __post_init__(self):
        if any(c < 2 for c in self.cells):
            raise ValueError("every edge needs at least 2 cells")
        if not self.horizon > 0:
            raise ValueError("time horizon must be positive")
        if self.nt < 1:
            raise ValueError("need at least one time step")

    @property
    def dt(self) -> float:
        return self.horizon / self.nt

    def h(self, net: MetricNetwork, a: int) -> float:
        return net.edges[a].length / self.cells[a]

    def nodes(self, net: MetricNetwork, a: int) -> np.ndarray:
        return np.linspace(0.0, net.edges[a].length, self.cells[a] + 1)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.nt + 1)


@dataclass
class Field:
    """Nodal samples of a function, one array of length cells[a]+1 per edge."""

    net: MetricNetwork
    grid: GridSpec
    kind: str  # 'continuous' | 'jump' | 'pc'
    values: list[np.ndarray]
    latent: np.ndarray | None = None  # per-vertex c_i, jump fields only

    def copy(self) -> "Field":
        lat = None if self.latent is None else self.latent.copy()
        return Field(self.net, self.grid, self.kind,
                     [v.copy() for v in self.values], lat)

    def trace(self, i: int, a: int) -> float:
        """One-sided value of the field at vertex i seen from edge a."""
        side = self.net.side(a, i)
        arr = self.values[a]
        return float(arr[0] if side == 0 else arr[-1])


def zeros(net, grid, kind="continuous") -> Field:
    vals = [np.zeros(grid.cells[a] + 1) for a in range(net.n_edges)]
    lat = np.zeros(net.n_vertices) if kind == "jump" else None
    return Field(net, grid, kind, vals, lat)


def from_function(net, grid, fn, kind="continuous") -> Field:
    """Sample fn(edge_index, y_array) -> values on the grid.

    Continuous fields snap each vertex value to the mean over incident edges;
    jump fields derive the latent vertex values from the mass-weighted mean of
    trace / gamma over incident edges, then overwrite the endpoint samples
    with the resulting traces.
    """
    vals = [np.asarray(fn(a, grid.nodes(net, a)), float).copy()
            for a in range(net.n_edges)]
    f = Field(net, grid, kind, vals)
    if kind == "continuous":
        _snap_continuous(f)
    elif kind == "jump":
        f.latent = _latent_from_traces(f)
        _apply_traces(f)
    return f


def constant(net, grid, c, kind="continuous") -> Field:
    return from_function(net, grid, lambda a, y: np.full_like(y, float(c)), kind)


def _snap_continuous(f: Field) -> None:
    net = f.net
    for i in range(net.n_vertices):
        vals = [f.trace(i, a) for a in net.incident(i)]
        v = float(np.mean(vals))
        for a in net.incident(i):
            if net.side(a, i) == 0:
                f.values[a][0] = v
            else:
                f.values[a][-1] = v


def _latent_from_traces(f: Field) -> np.ndarray:
    """Mass-weighted vertex ratio trace/gamma; preserves the vertex cell mass."""
    net, grid = f.net, f.grid
    lat = np.zeros(net.n_vertices)
    for i in range(net.n_vertices):
        num = den = 0.0
        for a in net.incident(i):
            w = grid.h(net, a) / 2.0
            num += w * f.trace(i, a)
            den += w * net.gamma[(i, a)]
        lat[i] = num / den
    return lat


def _apply_traces(f: Field) -> None:
    net = f.net
    for i in range(net.n_vertices):
        for a in net.incident(i):
            t = net.gamma[(i, a)] * f.latent[i]
            if net.side(a, i) == 0:
                f.values[a][0] = t
            else:
                f.values[a][-1] = t


# -- calculus ----------------------------------------------------------------

def integrate(f: Field) -> float:
    """Composite trapezoid sum over all edges."""
    net, grid = f.net, f.grid
    total = 0.0
    for a in range(net.n_edges):
        total += np.trapezoid(f.values[a], dx=grid.h(net, a))
    return float(total)


def inner(f: Field, g: Field) -> float:
    """Trapezoid approximation of the L2 inner product."""
    net, grid = f.net, f.grid
    total = 0.0
    for a in range(net.n_edges):
        total += np.trapezoid(f.values[a] * g.values[a], dx=grid.h(net, a))
    return float(total)


def norm_l2(f: Field) -> float:
    return float(np.sqrt(max(inner(f, f), 0.0)))


def edge_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Nodal derivative: centered inside, 3-point one-sided at the ends.

    The one-sided stencil is second order, exact on quadratics, so affine
    fields differentiate exactly at every node.
    """
    v = np.asarray(values, float)
    if v.size < 3:
        raise ValueError("need at least 2 cells for the derivative stencil")
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return d


def derivative(f: Field) -> Field:
    """Per-edge derivative in edge coordinates, returned as a pc field."""
    net, grid = f.net, f.grid
    vals = [edge_derivative(f.values[a], grid.h(net, a))
            for a in range(net.n_edges)]
    return Field(net, grid, "pc", vals)


def outward_derivative(f: Field, i: int, a: int) -> float:
    """Second-order outward derivative of f at vertex i along edge a."""
    h = f.grid.h(f.net, a)
    v = f.values[a]
    if f.net.side(a, i) == 0:
        return float((3.0 * v[0] - 4.0 * v[1] + v[2]) / (2.0 * h))
    return float((3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h))


def kirchhoff_residual(f: Field, net: MetricNetwork | None = None) -> np.ndarray:
    """Per-vertex sum of gamma * mu * (outward derivative)."""
    net = net or f.net
    res = np.zeros(net.n_vertices)
    for i in range(net.n_vertices):
        s = 0.0
        for a in net.incident(i):
            s += net.gamma[(i, a)] * net.edges[a].mu * outward_derivative(f, i, a)
        res[i] = s
    return res


def jump_residual(f: Field, net: MetricNetwork | None = None) -> np.ndarray:
    """Per-vertex max over incident pairs of |trace/gamma differences|.

    Zero by construction for latent-backed jump fields; meaningful for raw
    imported data whose traces need not be compatible.
    """
    net = net or f.net
    res = np.zeros(net.n_vertices)
    for i in range(net.n_vertices):
        ratios = [f.trace(i, a) / net.gamma[(i, a)] for a in net.incident(i)]
        if len(ratios) > 1:
            res[i] = max(ratios) - min(ratios)
    return res


def loop_integral(f: Field, cycle: list[tuple[int, int]]) -> float:
    """Integral of the derivative of f along a cycle of whole edges.

    ``cycle`` lists (edge index, direction) with direction +1 for tail-to-head
    traversal. For continuous fields the per-edge integral of the derivative
    telescopes to the value difference, so the result is exactly zero up to
    rounding.
    """
    total = 0.0
    for a, direction in cycle:
        v = f.values[a]
        total += direction * (v[-1] - v[0])
    return float(total)


def eval_on_original(f: Field, orig_edge: int, ys) -> np.ndarray:
    """Evaluate a field at original-edge coordinates through the span maps.

    Collects every edge of the (possibly normalized) network whose footprint
    covers the requested points and interpolates linearly on its grid. Points
    covered by two edges (split boundaries) take either side; the traces agree
    there for both continuous and latent-backed jump fields.
    """
    net, grid = f.net, f.grid
    ys = np.atleast_1d(np.asarray(ys, float))
    out = np.full(ys.shape, np.nan)
    for a in range(net.n_edges):
        s = net.span(a)
        if s.edge != orig_edge:
            continue
        length = net.edges[a].length
        local = s.sign * (ys - s.start)
        mask = (local >= -1e-12) & (local <= length + 1e-12)
        if not np.any(mask):
            continue
        nodes = grid.nodes(net, a)
        out[mask] = np.interp(np.clip(local[mask], 0.0, length),
                              nodes, f.values[a])
    if np.any(np.isnan(out)):
        raise ValueError(f"some points are not covered on original edge "
                         f"{orig_edge}")
    return out


# -- weights -------------------------------------------------------------------

def weight_phi(net: MetricNetwork, grid: GridSpec) -> Field:
    """Affine per-edge weight with vertex traces gamma_{i,a}.

    Constant on edges touching the boundary (value forced by the interior
    end); equal to 1 on an isolated edge with two boundary endpoints.
    """
    return _affine_weight(net, grid, lambda i, a: net.gamma[(i, a)])


def weight_psi(net: MetricNetwork, grid: GridSpec) -> Field:
    """Affine per-edge weight with vertex traces mu_a * gamma_{i,a}."""
    return _affine_weight(net, grid,
                          lambda i, a: net.edges[a].mu * net.gamma[(i, a)])


def _affine_weight(net, grid, vertex_value) -> Field:
    vals = []
    for a, e in enumerate(net.edges):
        y = grid.nodes(net, a)
        tb = net.is_boundary(e.tail)
        hb = net.is_boundary(e.head)
        if tb and hb:
            arr = np.ones_like(y)
        elif hb:
            arr = np.full_like(y, vertex_value(e.tail, a))
        elif tb:
            arr = np.full_like(y, vertex_value(e.head, a))
        else:
            v0 = vertex_value(e.tail, a)
            v1 = vertex_value(e.head, a)
            arr = v0 + (v1 - v0) * y / e.length
        vals.append(arr)
    return Field(net, grid, "pc", vals)


# -- CSV dumps ------------------------------------------------------------------

def field_rows(f: Field, t: float):
    """Yield (edge, node_index, y, value, t) rows for CSV output."""
    for a in range(f.net.n_edges):
        y = f.grid.nodes(f.net, a)
        v = f.values[a]
        for j in range(y.size):
            yield (f.net.edges[a].name, j, y[j], v[j], t)


def trace_rows(f: Field, t: float):
    """Yield (vertex, edge, trace, t) rows for jump-field CSV output."""
    net = f.net
    for i in range(net.n_vertices):
        for a in net.incident(i):
            yield (net.vertex_names[i], net.edges[a].name, f.trace(i, a), t)
