"""Path simulation of the network diffusion and empirical densities.

Each particle follows an Euler-Maruyama step dy = a dt + sqrt(2 mu) dW on its
current edge. A tentative position that overshoots a vertex by an excess e is
re-inserted a distance e into an incident edge drawn with the vertex entry
probabilities; boundary vertices have a single incident edge with entry
probability one, so the rule reflects there. The resolution loop repeats while
any particle still overshoots.

Drift convention: ``a`` is the process drift. A density solved by the forward
solver with drift coefficient b corresponds to paths with a = -b.

Histogram cells coincide with the solver's dual cells (interior nodes own a
full spacing, vertices own the union of their half cells), so total-variation
comparisons need no interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._disc import Dof
from .fields import Field, GridSpec
from .network import MetricNetwork


@dataclass
class SimConfig:
    n_paths: int
    dt: float
    seed: int
    drift: object = 0.0  # scalar, dict edge->scalar, or callable(e, y, t)
    t_final: float = 1.0
    record_times: tuple = ()  # defaults to (t_final,)
    init: object = "uniform"  # 'uniform' | jump Field | callable(rng, n)->(e, y)
    chunks: int = 1
    max_bounces: int = 200

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("need at least one path")
        if not self.record_times:
            self.record_times = (self.t_final,)


@dataclass
class EmpiricalDensity:
    net: MetricNetwork
    grid: GridSpec
    dof: Dof
    times: np.ndarray
    masses: np.ndarray  # (n_times, n_cells), each row sums to 1

    def edge_histogram(self, k: int, a: int) -> np.ndarray:
        """Cell masses along edge a at record time k (vertex cells included)."""
        return self.masses[k][self.dof.chain(a)]


def _drift_fn(drift, net):
    if np.isscalar(drift):
        c = float(drift)
        return lambda e, y, t: np.full(y.shape, c)
    if isinstance(drift, dict):
        table = np.array([float(drift[a]) for a in range(net.n_edges)])
        return lambda e, y, t: table[e]
    if callable(drift):
        return drift
    raise TypeError("unsupported drift specification")


def _vertex_tables(net):
    """Per-vertex cumulative entry probabilities and insertion data."""
    tables = []
    for i in range(net.n_vertices):
        inc = np.array(net.incident(i), dtype=np.int64)
        ps = np.array([net.p[(i, a)] for a in inc])
        cum = np.cumsum(ps)
        cum[-1] = 1.0
        sides = np.array([net.side(a, i) for a in inc], dtype=np.int64)
        tables.append((inc, cum, sides))
    return tables


def _sample_init(init, net, grid, dof, rng, n):
    lengths = net.lengths()
    if init == "uniform":
        cum = np.cumsum(lengths)
        u = rng.random(n) * cum[-1]
        e = np.searchsorted(cum, u).astype(np.int64)
        offs = np.concatenate(([0.0], cum[:-1]))
        y = u - offs[e]
        return e, y
    if isinstance(init, Field):
        masses = dof.mass_dual() * dof.w_vector(init)
        masses = np.maximum(masses, 0.0)
        masses = masses / masses.sum()
        cells = rng.choice(masses.size, size=n, p=masses)
        e = np.empty(n, dtype=np.int64)
        y = np.empty(n)
        # invert the cell -> (edge, node) map; vertex cells spread uniformly
        # over one incident half cell chosen by its share of the cell mass
        for a in range(net.n_edges):
            c = dof.chain(a)
            h = grid.h(net, a)
            N = grid.cells[a]
            for j in range(1, N):
                sel = cells == c[j]
                if np.any(sel):
                    e[sel] = a
                    y[sel] = (j - 0.5) * h + rng.random(int(sel.sum())) * h
        for i in range(net.n_vertices):
            sel = cells == i
            if not np.any(sel):
                continue
            k = int(sel.sum())
            inc = net.incident(i)
            shares = np.array([grid.h(net, a) / 2.0 * net.gamma[(i, a)]
                               for a in inc])
            shares = shares / shares.sum()
            pick = rng.choice(len(inc), size=k, p=shares)
            for jj, a in enumerate(inc):
                ss = pick == jj
                if not np.any(ss):
                    continue
                h = grid.h(net, a)
                off = rng.random(int(ss.sum())) * (h / 2.0)
                idx = np.flatnonzero(sel)[ss]
                e[idx] = a
                if net.side(a, i) == 0:
                    y[idx] = off
                else:
                    y[idx] = net.edges[a].length - off
        return e, y
    if callable(init):
        return init(rng, n)
    raise TypeError("unsupported initial law")


def simulate(net: MetricNetwork, grid: GridSpec, cfg: SimConfig
             ) -> EmpiricalDensity:
    """Simulate paths and bin them on the dual cells at the record times."""
    dof = Dof(net, grid)
    drift = _drift_fn(cfg.drift, net)
    tables = _vertex_tables(net)
    lengths = net.lengths()
    sig = np.sqrt(2.0 * net.mus() * cfg.dt)
    tails = np.array([e.tail for e in net.edges], dtype=np.int64)
    heads = np.array([e.head for e in net.edges], dtype=np.int64)

    n_steps = int(round(cfg.t_final / cfg.dt))
    rec_steps = [int(round(t / cfg.dt)) for t in cfg.record_times]
    if any(abs(s * cfg.dt - t) > 1e-9 for s, t in zip(rec_steps, cfg.record_times)):
        raise ValueError("record times must be multiples of dt")

    counts = np.zeros((len(rec_steps), dof.n), dtype=np.int64)
    seeds = np.random.SeedSequence(cfg.seed).spawn(max(1, cfg.chunks))
    sizes = np.full(len(seeds), cfg.n_paths // len(seeds))
    sizes[: cfg.n_paths % len(seeds)] += 1

    for seed, size in zip(seeds, sizes):
        if size == 0:
            continue
        rng = np.random.default_rng(seed)
        e, y = _sample_init(cfg.init, net, grid, dof, rng, int(size))
        rec = dict(zip(rec_steps, range(len(rec_steps))))
        if 0 in rec:
            counts[rec[0]] += _bin(net, grid, dof, e, y)
        for step in range(1, n_steps + 1):
            t = step * cfg.dt
            y = y + drift(e, y, t) * cfg.dt + sig[e] * rng.standard_normal(e.size)
            _resolve_overshoots(e, y, lengths, tails, heads, tables, rng,
                                cfg.max_bounces, cfg.dt)
            if step in rec:
                counts[rec[step]] += _bin(net, grid, dof, e, y)

    masses = counts.astype(float) / float(cfg.n_paths)
    return EmpiricalDensity(net, grid, dof, np.asarray(cfg.record_times, float),
                            masses)


def _resolve_overshoots(e, y, lengths, tails, heads, tables, rng,
                        max_bounces, dt):
    for _ in range(max_bounces):
        L = lengths[e]
        over = (y < 0.0) | (y > L)
        if not np.any(over):
            return
        idx = np.flatnonzero(over)
        ei = e[idx]
        yi = y[idx]
        Li = lengths[ei]
        low = yi < 0.0
        vid = np.where(low, tails[ei], heads[ei])
        excess = np.where(low, -yi, yi - Li)
        u = rng.random(idx.size)
        for v in np.unique(vid):
            sel = vid == v
            inc, cum, sides = tables[v]
            pick = np.searchsorted(cum, u[sel])
            new_e = inc[pick]
            enter_tail = sides[pick] == 0
            ex = excess[sel]
            new_y = np.where(enter_tail, ex, lengths[new_e] - ex)
            sub = idx[sel]
            e[sub] = new_e
            y[sub] = new_y
    raise RuntimeError(
        f"overshoot resolution exceeded {max_bounces} bounces; "
        f"reduce the step to about dt={dt / 4:.3e}")


def _bin(net, grid, dof, e, y):
    counts = np.zeros(dof.n, dtype=np.int64)
    for a in range(net.n_edges):
        sel = e == a
        if not np.any(sel):
            continue
        h = grid.h(net, a)
        N = grid.cells[a]
        j = np.rint(y[sel] / h).astype(np.int64)
        np.clip(j, 0, N, out=j)
        ids = dof.chain(a)[j]
        counts += np.bincount(ids, minlength=dof.n)
    return counts


def compare_to_fp(emp: EmpiricalDensity, fp_field: Field, k: int = 0) -> float:
    """Total-variation distance between binned measures on shared cells."""
    dof = emp.dof
    if fp_field.grid != emp.grid:
        raise ValueError("empirical bins and density grid are misaligned")
    q = dof.mass_dual() * dof.w_vector(fp_field)
    total = q.sum()
    if total <= 0:
        raise ValueError("density has no mass")
    q = q / total
    return 0.5 * float(np.sum(np.abs(emp.masses[k] - q)))
