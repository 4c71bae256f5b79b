"""Reference networks and benchmark problems shared by tests and scripts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coupling as cpl
from . import hamiltonian as ham
from .fields import Field, GridSpec, from_function
from .mfg import MFGConfig
from .network import Edge, MetricNetwork


def star_network(mus=(1.0, 1.0, 1.0), ps=(0.5, 0.25, 0.25),
                 lengths=(1.0, 1.0, 1.0)) -> MetricNetwork:
    """Three edges radiating from a center vertex (id 0)."""
    names = ["c"] + [f"l{k}" for k in range(1, len(mus) + 1)]
    edges = [Edge(f"e{k + 1}", 0, k + 1, lengths[k], mus[k])
             for k in range(len(mus))]
    probs = {}
    for k in range(len(mus)):
        probs[(0, k)] = ps[k]
        probs[(k + 1, k)] = 1.0
    return MetricNetwork(names, edges, probs)


def path_network(n_edges=2, mu=1.0, length=1.0) -> MetricNetwork:
    names = [f"v{k}" for k in range(n_edges + 1)]
    edges = [Edge(f"e{k}", k, k + 1, length, mu) for k in range(n_edges)]
    return MetricNetwork(names, edges)


def single_edge(mu=1.0, length=1.0) -> MetricNetwork:
    return path_network(1, mu, length)


def cycle_network(n=3, mu=1.0, length=1.0) -> MetricNetwork:
    """n-cycle; odd cycles need an artificial vertex to orient."""
    names = [f"v{k}" for k in range(n)]
    edges = [Edge(f"e{k}", k, (k + 1) % n, length, mu) for k in range(n)]
    return MetricNetwork(names, edges)


def four_edge_network() -> MetricNetwork:
    """Four vertices, four edges; orienting it inserts one artificial vertex."""
    names = ["v1", "v2", "v3", "v4"]
    edges = [Edge("g1", 0, 1, 1.0, 1.0), Edge("g2", 0, 2, 1.0, 1.0),
             Edge("g3", 0, 3, 1.0, 1.0), Edge("g4", 2, 3, 1.0, 1.0)]
    return MetricNetwork(names, edges)


# -- the coupled star benchmark -----------------------------------------------

@dataclass
class StarBenchmark:
    net: MetricNetwork
    grid: GridSpec
    model: ham.HamiltonianModel
    coupling: cpl.CouplingOperator
    m0: Field
    v_T: Field
    cfg: MFGConfig


def star_benchmark(n=32, nt=100, horizon=1.0, amax=1.0, omega=0.5,
                   tol=1e-8, v0="zero") -> StarBenchmark:
    """Star with asymmetric entry probabilities, identity coupling, and the
    compact-control quadratic Hamiltonian."""
    net = star_network()
    grid = GridSpec.uniform(net, n, horizon, nt)
    model = ham.clipped_quadratic(net, amax)
    op = cpl.identity_coupling()
    m0 = from_function(net, grid,
                       lambda a, y: np.ones_like(y) / net.total_length(),
                       kind="jump")
    amp = (0.6, 0.3, 0.1)
    v_T = from_function(net, grid,
                        lambda a, y: amp[a] * np.cos(np.pi * y) + (1 - amp[a]))
    cfg = MFGConfig(omega=omega, tol=tol, v0=v0)
    return StarBenchmark(net, grid, model, op, m0, v_T, cfg)


# -- manufactured smooth solution for the backward equation ----------------------

@dataclass
class ManufacturedHJB:
    net: MetricNetwork
    model: ham.HamiltonianModel
    horizon: float
    amp: tuple

    def v(self, a, y, t):
        return self._g(t) * self._w(a, y)

    def dv(self, a, y, t):
        return -self._g(t) * self.amp[a] * np.pi * np.sin(np.pi * y)

    def f(self, a, y, t):
        gp = -0.5
        d2v = -self._g(t) * self.amp[a] * np.pi ** 2 * np.cos(np.pi * y)
        p = self.dv(a, y, t)
        return -gp * self._w(a, y) - d2v + np.asarray(self.model.H(a, y, p))

    def terminal(self, grid: GridSpec) -> Field:
        return from_function(self.net, grid,
                             lambda a, y: self.v(a, y, self.horizon))

    def _g(self, t):
        return 1.0 + 0.5 * (self.horizon - t)

    def _w(self, a, y):
        return self.amp[a] * np.cos(np.pi * y) + (1.0 - self.amp[a])


def manufactured_hjb(horizon=0.5, amax=2.0,
                     amp=(0.3, 0.2, 0.1)) -> ManufacturedHJB:
    """Smooth exact solution on the star.

    Each edge profile has vanishing slope at both ends, so the Kirchhoff
    condition holds for any weights and the gradient stays inside the
    unsaturated band of the Hamiltonian.
    """
    net = star_network()
    model = ham.clipped_quadratic(net, amax)
    return ManufacturedHJB(net, model, horizon, tuple(amp))
