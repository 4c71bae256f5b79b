"""Shared discretization core for the network solvers.

Unknown layout (one flat vector of length n):

* slots 0 .. nv-1: one value per vertex. For continuous fields this is the
  shared vertex value; for jump fields it is the latent c_i whose per-edge
  trace is gamma_{i,a} * c_i.
* then, per edge, the interior node values (cells - 1 of them).

The chain of an edge lists the global ids along the edge, vertex slots at the
ends. ``stiffness_wv`` assembles the bilinear form sum_a int mu dv dw with
piecewise-linear trial functions on the continuous space and test functions
with gamma-weighted vertex traces; its transpose is exactly the diffusion
operator of the density equation, which is what makes the discrete
integration-by-parts identities exact.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fields import Field, GridSpec
from .network import MetricNetwork


class Dof:
    def __init__(self, net: MetricNetwork, grid: GridSpec):
        self.net = net
        self.grid = grid
        nv = net.n_vertices
        self.interior_start = []
        n = nv
        for a in range(net.n_edges):
            self.interior_start.append(n)
            n += grid.cells[a] - 1
        self.n = n
        self._chains = [self._build_chain(a) for a in range(net.n_edges)]

    def _build_chain(self, a: int) -> np.ndarray:
        e = self.net.edges[a]
        N = self.grid.cells[a]
        ids = np.empty(N + 1, dtype=np.int64)
        ids[0] = e.tail
        ids[-1] = e.head
        s = self.interior_start[a]
        ids[1:-1] = np.arange(s, s + N - 1)
        return ids

    def chain(self, a: int) -> np.ndarray:
        return self._chains[a]

    def trace_scale(self, a: int) -> np.ndarray:
        """Per-chain-node multiplier turning jump coefficients into values."""
        net = self.net
        e = net.edges[a]
        g = np.ones(self.grid.cells[a] + 1)
        g[0] = net.gamma[(e.tail, a)]
        g[-1] = net.gamma[(e.head, a)]
        return g

    # -- vectors <-> fields --------------------------------------------------

    def v_vector(self, f: Field) -> np.ndarray:
        vec = np.zeros(self.n)
        for a in range(self.net.n_edges):
            c = self.chain(a)
            vec[c] = f.values[a]
        return vec

    def field_v(self, vec: np.ndarray) -> Field:
        vals = [vec[self.chain(a)].copy() for a in range(self.net.n_edges)]
        return Field(self.net, self.grid, "continuous", vals)

    def w_vector(self, f: Field) -> np.ndarray:
        vec = np.zeros(self.n)
        if f.latent is not None:
            vec[: self.net.n_vertices] = f.latent
        else:
            lat = np.zeros(self.net.n_vertices)
            for i in range(self.net.n_vertices):
                rs = [f.trace(i, a) / self.net.gamma[(i, a)]
                      for a in self.net.incident(i)]
                lat[i] = float(np.mean(rs))
            vec[: self.net.n_vertices] = lat
        for a in range(self.net.n_edges):
            c = self.chain(a)
            vec[c[1:-1]] = f.values[a][1:-1]
        return vec

    def field_w(self, vec: np.ndarray) -> Field:
        vals = []
        for a in range(self.net.n_edges):
            g = self.trace_scale(a)
            vals.append(vec[self.chain(a)] * g)
        return Field(self.net, self.grid, "jump", vals,
                     latent=vec[: self.net.n_vertices].copy())

    def pc_arrays(self, vec: np.ndarray, trace_scaled=False) -> list[np.ndarray]:
        out = []
        for a in range(self.net.n_edges):
            arr = vec[self.chain(a)].copy()
            if trace_scaled:
                arr *= self.trace_scale(a)
            out.append(arr)
        return out

    # -- masses ---------------------------------------------------------------

    def mass_plain(self) -> np.ndarray:
        """Trapezoid weights of the continuous pairing (vertex: sum h/2)."""
        w = np.zeros(self.n)
        for a in range(self.net.n_edges):
            h = self.grid.h(self.net, a)
            c = self.chain(a)
            w[c[1:-1]] += h
            w[c[0]] += h / 2.0
            w[c[-1]] += h / 2.0
        return w

    def mass_dual(self) -> np.ndarray:
        """Gamma-weighted trapezoid weights (vertex: sum gamma h/2).

        Serves two roles at once: the lumped mass of the gamma-traced test
        functions in the value equation, and the cell masses of the density
        unknowns (interior nodes own h, a vertex owns its surrounding half
        cells with gamma traces).
        """
        w = np.zeros(self.n)
        net = self.net
        for a in range(net.n_edges):
            h = self.grid.h(net, a)
            c = self.chain(a)
            g = self.trace_scale(a)
            w[c[1:-1]] += h
            w[c[0]] += g[0] * h / 2.0
            w[c[-1]] += g[-1] * h / 2.0
        return w

    def mass_weighted(self, weight: Field) -> np.ndarray:
        """Trapezoid weights of the pairing against a per-edge weight field.

        Vertex slots accumulate (h/2) times the weight's own one-sided traces,
        which differ from the gamma traces on boundary-touching edges.
        """
        w = np.zeros(self.n)
        for a in range(self.net.n_edges):
            h = self.grid.h(self.net, a)
            c = self.chain(a)
            wv = weight.values[a]
            w[c[1:-1]] += h * wv[1:-1]
            w[c[0]] += wv[0] * h / 2.0
            w[c[-1]] += wv[-1] * h / 2.0
        return w

    def weighted_pairing(self, weight: Field, arrays: list[np.ndarray]
                         ) -> np.ndarray:
        """Vector q with q[k] = trapezoid of (arrays * weight * basis_k)."""
        q = np.zeros(self.n)
        for a in range(self.net.n_edges):
            h = self.grid.h(self.net, a)
            c = self.chain(a)
            wv = weight.values[a]
            arr = np.asarray(arrays[a], float)
            q[c[1:-1]] += h * wv[1:-1] * arr[1:-1]
            q[c[0]] += (h / 2.0) * wv[0] * arr[0]
            q[c[-1]] += (h / 2.0) * wv[-1] * arr[-1]
        return q

    # -- bilinear forms ---------------------------------------------------------

    def stiffness_wv(self) -> sp.csr_matrix:
        """Rows: gamma-traced test functions; columns: continuous trials.

        Per cell the entries are mu/h * [[1,-1],[-1,1]] with the test row of a
        vertex scaled by its gamma. Row sums vanish, so constants are in the
        kernel of every row.
        """
        rows, cols, data = [], [], []
        net = self.net
        for a in range(net.n_edges):
            h = self.grid.h(net, a)
            mu = net.edges[a].mu
            c = self.chain(a)
            g = self.trace_scale(a)
            k = mu / h
            left, right = c[:-1], c[1:]
            gl, gr = g[:-1], g[1:]
            rows += [left, left, right, right]
            cols += [left, right, right, left]
            data += [k * gl, -k * gl, k * gr, -k * gr]
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def stiffness_weighted(self, weight: Field) -> sp.csr_matrix:
        """Symmetric form sum_a int mu * weight * du dv, weight affine per edge.

        The cell integral of an affine weight is exact (mean of its endpoint
        values times h), so no quadrature error enters the assembly.
        """
        rows, cols, data = [], [], []
        net = self.net
        for a in range(net.n_edges):
            h = self.grid.h(net, a)
            mu = net.edges[a].mu
            c = self.chain(a)
            wbar = 0.5 * (weight.values[a][:-1] + weight.values[a][1:])
            k = mu * wbar / h
            left, right = c[:-1], c[1:]
            rows += [left, left, right, right]
            cols += [left, right, right, left]
            data += [k, -k, k, -k]
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def gradient_coupling(self, weight: Field) -> sp.csr_matrix:
        """Matrix of the form sum_a int mu * (d weight) * u * dv.

        Entry (k, l) pairs trial derivative dv_l against u_k times the slope
        of the (affine) weight; trapezoid-exact since u is affine per cell.
        """
        rows, cols, data = [], [], []
        net = self.net
        for a in range(net.n_edges):
            h = self.grid.h(net, a)
            mu = net.edges[a].mu
            c = self.chain(a)
            dw = (weight.values[a][1:] - weight.values[a][:-1]) / h
            coef = mu * dw * 0.5  # int over cell of u ~ (h/2)(u_l + u_r); dv = +-1/h
            left, right = c[:-1], c[1:]
            for test, tc in ((left, coef), (right, coef)):
                rows += [test, test]
                cols += [right, left]
                data += [tc, -tc]
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    # -- transport -----------------------------------------------------------

    def face_midpoints(self, a: int) -> np.ndarray:
        h = self.grid.h(self.net, a)
        N = self.grid.cells[a]
        return (np.arange(N) + 0.5) * h

    def transport(self, b_faces: list[np.ndarray], scheme: str = "upwind"
                  ) -> sp.csr_matrix:
        """Flux-form transport matrix T so the density obeys D m' + (K^T + T) m = 0.

        Face flux q = b * m_face with the upwind side chosen by the sign of b
        (or the arithmetic mean for the centered variant). Columns sum to zero
        exactly, which is what conserves mass, and upwinding keeps all
        off-diagonal entries nonpositive (M-matrix with implicit stepping).
        """
        rows, cols, data = [], [], []
        net = self.net
        for a in range(net.n_edges):
            c = self.chain(a)
            g = self.trace_scale(a)
            b = np.asarray(b_faces[a], float)
            left, right = c[:-1], c[1:]
            gl, gr = g[:-1], g[1:]
            if scheme == "upwind":
                pos = b >= 0
                bu = np.where(pos, b, 0.0)  # flux carried by the right value
                bd = np.where(pos, 0.0, b)  # flux carried by the left value
                # face flux q] enters row(left) with -q and row(right) with +q
                rows += [left, right, left, right]
                cols += [right, right, left, left]
                data += [-bu * gr, bu * gr, -bd * gl, bd * gl]
            elif scheme == "centered":
                half = 0.5 * b
                rows += [left, right, left, right]
                cols += [right, right, left, left]
                data += [-half * gr, half * gr, -half * gl, half * gl]
            else:
                raise ValueError(f"unknown transport scheme {scheme!r}")
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    # -- right-hand sides -------------------------------------------------------

    def dual_average(self, edge_arrays: list[np.ndarray]) -> np.ndarray:
        """Project per-edge nodal data onto the unknowns.

        Interior slots copy the nodal value; vertex slots take the
        gamma-and-halfcell weighted mean of the one-sided traces, the same
        pairing the lumped test functions produce.
        """
        num = np.zeros(self.n)
        den = np.zeros(self.n)
        net = self.net
        for a in range(net.n_edges):
            h = self.grid.h(net, a)
            c = self.chain(a)
            g = self.trace_scale(a)
            arr = edge_arrays[a]
            num[c[1:-1]] = arr[1:-1]
            den[c[1:-1]] = 1.0
            for pos in (0, -1):
                w = g[pos] * h / 2.0
                num[c[pos]] += w * arr[pos]
                den[c[pos]] += w
        return num / den

    # -- gradients ---------------------------------------------------------------

    def face_gradients(self, vec: np.ndarray, a: int) -> np.ndarray:
        h = self.grid.h(self.net, a)
        v = vec[self.chain(a)]
        return (v[1:] - v[:-1]) / h

    def nodal_gradient_arrays(self, vec: np.ndarray) -> list[np.ndarray]:
        """Centered interior gradient, 3-point one-sided at edge ends."""
        from .fields import edge_derivative
        out = []
        for a in range(self.net.n_edges):
            h = self.grid.h(self.net, a)
            out.append(edge_derivative(vec[self.chain(a)], h))
        return out
