"""Coupling cost operators mapping densities to running costs.

Local operators apply a scalar map F pointwise. The nonlocal operator
mollifies the density over metric balls: mass flowing past a vertex is split
among the incident edges with the vertex entry probabilities, and each row of
the resulting discrete kernel is normalized so constants are preserved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, inner


@dataclass
class CouplingOperator:
    kind: str  # 'local' | 'nonlocal'
    F: object = None  # scalar map for local operators, vectorized
    lipschitz: float = 1.0
    increasing: bool = True
    bandwidth: float = 0.25
    amplitude: float = 1.0
    label: str = "custom"


def identity_coupling() -> CouplingOperator:
    return CouplingOperator("local", F=lambda m: m, lipschitz=1.0,
                            increasing=True, label="identity")


def scaled_identity(lam: float) -> CouplingOperator:
    lam = float(lam)
    return CouplingOperator("local", F=lambda m: lam * m, lipschitz=abs(lam),
                            increasing=lam > 0, label=f"scaled_identity({lam})")


def zero_coupling() -> CouplingOperator:
    return CouplingOperator("local", F=lambda m: np.zeros_like(m),
                            lipschitz=0.0, increasing=False, label="zero")


def bounded_smooth(amplitude: float = 1.0, slope: float = 1.0) -> CouplingOperator:
    """Increasing, bounded, softplus-like map amplitude * sigmoid(slope * m)."""
    amplitude, slope = float(amplitude), float(slope)

    def F(m):
        return amplitude / (1.0 + np.exp(-slope * np.asarray(m, float)))

    return CouplingOperator("local", F=F, lipschitz=amplitude * slope / 4.0,
                            increasing=True,
                            label=f"bounded_smooth({amplitude},{slope})")


def nonlocal_smoothing(bandwidth: float = 0.25,
                       amplitude: float = 1.0) -> CouplingOperator:
    # row-normalized averaging is a contraction in the sup norm; in L2 the
    # truncated rows near boundary vertices push the constant slightly above
    # one, so declare a conservative bound
    return CouplingOperator("nonlocal", lipschitz=2.0 * abs(amplitude),
                            bandwidth=bandwidth, amplitude=amplitude,
                            increasing=False,
                            label=f"nonlocal(bw={bandwidth})")


def apply(op: CouplingOperator, m: Field) -> Field:
    """Evaluate the running cost field V[m] as per-edge nodal values."""
    if op.kind == "local":
        vals = [np.asarray(op.F(v), float) for v in m.values]
        return Field(m.net, m.grid, "pc", vals)
    if op.kind == "nonlocal":
        return _mollify(op, m)
    raise ValueError(f"unknown coupling kind {op.kind!r}")


def monotonicity_gap(op: CouplingOperator, m1: Field, m2: Field) -> float:
    """Integral of (m1 - m2)(V[m1] - V[m2]); nonnegative for increasing maps."""
    if m1.grid is not m2.grid and m1.grid != m2.grid:
        raise ValueError("densities must share a grid")
    v1 = apply(op, m1)
    v2 = apply(op, m2)
    diff_m = Field(m1.net, m1.grid, "pc",
                   [a - b for a, b in zip(m1.values, m2.values)])
    diff_v = Field(m1.net, m1.grid, "pc",
                   [a - b for a, b in zip(v1.values, v2.values)])
    return inner(diff_m, diff_v)


# -- nonlocal smoothing --------------------------------------------------------

def _mollify(op: CouplingOperator, m: Field) -> Field:
    net, grid = m.net, m.grid
    delta = op.bandwidth
    kernel = lambda r: np.maximum(0.0, 1.0 - r / delta)

    # trapezoid node weights per edge
    wts = []
    for a in range(net.n_edges):
        h = grid.h(net, a)
        w = np.full(grid.cells[a] + 1, h)
        w[0] = w[-1] = h / 2.0
        wts.append(w)

    out = []
    for a in range(net.n_edges):
        ys = grid.nodes(net, a)
        res = np.empty_like(ys)
        for j, y0 in enumerate(ys):
            res[j] = _gather(op, m, wts, kernel, a, y0, delta)
        out.append(op.amplitude * res)
    return Field(net, grid, "pc", out)


def _gather(op, m, wts, kernel, a0, y0, delta):
    """Walk the metric ball of radius delta around (a0, y0).

    The kernel is laid out as two half rays of weight 1/2 from interior
    points, matching the symmetric excursion of the underlying diffusion; a
    ray that reaches a vertex continues into every incident edge with the
    entry probabilities (bounce-backs included). A start exactly at a vertex
    skips the halves and splits p-weighted immediately, which makes the
    vertex value independent of the chart used to reach it. The accumulated
    kernel mass normalizes the average.
    """
    net, grid = m.net, m.grid
    acc = 0.0
    nrm = 0.0
    e0 = net.edges[a0]
    tol = 1e-12 * max(1.0, e0.length)
    stack = []

    if y0 <= tol or y0 >= e0.length - tol:
        v = e0.tail if y0 <= tol else e0.head
        for b in net.incident(v):
            stack.append((b, net.side(b, v), 0.0, net.p[(v, b)]))
    else:
        ys = grid.nodes(net, a0)
        for mask, r in (((ys >= y0), ys - y0), ((ys <= y0), y0 - ys)):
            k = np.where(mask, kernel(np.abs(r)), 0.0)
            acc += 0.5 * float(np.sum(wts[a0] * k * m.values[a0]))
            nrm += 0.5 * float(np.sum(wts[a0] * k))
        if y0 + delta > e0.length:
            d = e0.length - y0
            for b in net.incident(e0.head):
                stack.append((b, net.side(b, e0.head), d,
                              0.5 * net.p[(e0.head, b)]))
        if y0 - delta < 0.0:
            for b in net.incident(e0.tail):
                stack.append((b, net.side(b, e0.tail), y0,
                              0.5 * net.p[(e0.tail, b)]))

    while stack:
        b, side, dist, weight = stack.pop()
        if weight < 1e-13 or dist >= delta:
            continue
        e = net.edges[b]
        ys = grid.nodes(net, b)
        local = ys if side == 0 else e.length - ys
        k = kernel(dist + local)
        acc += weight * float(np.sum(wts[b] * k * m.values[b]))
        nrm += weight * float(np.sum(wts[b] * k))
        if dist + e.length < delta:
            far = net.endpoint(b, 1 - side)
            for c in net.incident(far):
                stack.append((c, net.side(c, far), dist + e.length,
                              weight * net.p[(far, c)]))

    return acc / nrm if nrm > 0 else 0.0


def from_config(cfg: dict) -> CouplingOperator:
    kind = cfg.get("kind", "local")
    if kind == "local":
        fname = cfg.get("F", "identity")
        if fname == "identity":
            return identity_coupling()
        if fname == "scaled_identity":
            return scaled_identity(cfg.get("lam", 1.0))
        if fname == "softplus":
            return bounded_smooth(cfg.get("amplitude", 1.0),
                                  cfg.get("slope", 1.0))
        if fname == "zero":
            return zero_coupling()
        raise ValueError(f"unknown local coupling F {fname!r}")
    if kind == "nonlocal":
        return nonlocal_smoothing(cfg.get("bandwidth", 0.25),
                                  cfg.get("amplitude", 1.0))
    raise ValueError(f"unknown coupling kind {kind!r}")
