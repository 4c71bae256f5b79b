"""Backward value-function solver with Kirchhoff vertex coupling.

The equation is -dv/dt - mu v'' + H(x, v') = f on every edge, v continuous
across vertices, sum_a gamma mu (outward derivative) = 0 at every vertex, and
a terminal condition at t = T. Diffusion is implicit; the Hamiltonian is
explicit. The vertex rows close the Kirchhoff condition with the equation
itself through the gamma-weighted half-cell pairing, so the same matrix
transposes into the density solver.

Two gradient evaluations:

* ``monotone`` (default): midpoint gradient with a C0-weighted artificial
  viscosity at interior nodes, and at vertices a one-sided evaluation plus a
  vanishing gamma-mu-weighted correction sized so every off-diagonal of the
  explicit map keeps the sign needed for a discrete comparison principle.
  Requires dt below roughly h / C0; the exact bound is computed and enforced.
* ``centered``: second-order gradients (centered inside, 3-point one-sided at
  vertices), no viscosity. Used for convergence-rate studies.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._disc import Dof
from .fields import Field, GridSpec, edge_derivative
from .hamiltonian import HamiltonianModel
from .network import MetricNetwork


@dataclass
class HJBProblem:
    net: MetricNetwork
    grid: GridSpec
    model: HamiltonianModel
    f: object  # rhs: scalar, callable(edge, y, t), per-slice vectors, or Fields
    v_T: Field  # continuous discipline
    grad_mode: str = "monotone"  # 'monotone' | 'centered'
    inner_iterations: int = 0  # >0: re-evaluate H about the current step


def assemble_hjb_diffusion(net: MetricNetwork, grid: GridSpec,
                           dof: Dof | None = None):
    """Stiffness (gamma-traced tests against continuous trials) and the lumped
    dual masses closing the vertex rows."""
    dof = dof or Dof(net, grid)
    return dof.stiffness_wv(), dof.mass_dual()


def as_rhs(f, net: MetricNetwork, grid: GridSpec, dof: Dof):
    """Canonicalize the right-hand side into slice -> unknown vector."""
    if f is None or (np.isscalar(f) and f == 0):
        zero = np.zeros(dof.n)
        return lambda n: zero
    if np.isscalar(f):
        vec = dof.dual_average([np.full(grid.cells[a] + 1, float(f))
                                for a in range(net.n_edges)])
        return lambda n: vec
    if isinstance(f, np.ndarray) and f.ndim == 2:
        return lambda n: f[n]
    if isinstance(f, (list, tuple)) and f and isinstance(f[0], Field):
        vecs = [dof.dual_average(fld.values) for fld in f]
        return lambda n: vecs[n]
    if callable(f):
        times = grid.times()

        def make(n):
            arrays = [np.asarray(f(a, grid.nodes(net, a), times[n]), float)
                      for a in range(net.n_edges)]
            return dof.dual_average(arrays)

        return make
    raise TypeError("unsupported right-hand side specification")


class HJBOperator:
    """One-step backward operator; the diffusion factorization is reused."""

    def __init__(self, net: MetricNetwork, grid: GridSpec,
                 model: HamiltonianModel, grad_mode: str = "monotone",
                 dof: Dof | None = None):
        self.net = net
        self.grid = grid
        self.model = model
        self.grad_mode = grad_mode
        self.dof = dof or Dof(net, grid)
        self.K = self.dof.stiffness_wv()
        self.D = self.dof.mass_dual()
        self.dt = grid.dt
        A = sp.diags(self.D) + self.dt * self.K
        self._lu = spla.splu(A.tocsc())

        nv = net.n_vertices
        c0 = model.c0
        # vertex correction weights and the explicit-map diagonal bounds
        self.lam = np.zeros(nv)
        diag_bound = 0.0
        for a in range(net.n_edges):
            h = grid.h(net, a)
            if c0 > 0:
                diag_bound = max(diag_bound, c0 / h)
        mdual = np.zeros(nv)
        hmu = np.zeros(nv)
        gsum = np.zeros(nv)
        gmuh = np.zeros(nv)
        for i in range(nv):
            for a in net.incident(i):
                h = grid.h(net, a)
                mu = net.edges[a].mu
                g = net.gamma[(i, a)]
                mdual[i] += g * h / 2.0
                hmu[i] = max(hmu[i], h / mu)
                gsum[i] += g
                gmuh[i] += g * mu / h
        if c0 > 0:
            self.lam = c0 * hmu / (2.0 * mdual)
            vbound = gsum * c0 / (2.0 * mdual)
            if grad_mode == "monotone":
                vbound = vbound + self.lam * gmuh
            diag_bound = max(diag_bound, float(np.max(vbound)))
        self.mdual = mdual
        self.dt_max = np.inf if diag_bound == 0 else 1.0 / diag_bound

    def hamiltonian_vector(self, v: np.ndarray) -> np.ndarray:
        """Numerical Hamiltonian at every unknown, vertex rows phi-averaged."""
        net, grid, model = self.net, self.grid, self.model
        dof = self.dof
        out = np.zeros(dof.n)
        vnum = np.zeros(net.n_vertices)
        vcorr = np.zeros(net.n_vertices)
        monotone = self.grad_mode == "monotone"
        c0 = model.c0
        for a in range(net.n_edges):
            e = net.edges[a]
            h = grid.h(net, a)
            c = dof.chain(a)
            va = v[c]
            y = grid.nodes(net, a)
            dfaces = np.diff(va) / h
            if va.size > 2:
                p_mid = 0.5 * (dfaces[:-1] + dfaces[1:])
                hin = np.asarray(model.H(a, y[1:-1], p_mid), float)
                if monotone and c0 > 0:
                    hin = hin - 0.5 * c0 * (dfaces[1:] - dfaces[:-1])
                out[c[1:-1]] = hin
            if monotone:
                p_tail = dfaces[0]
                p_head = dfaces[-1]
            else:
                p_tail = (-3.0 * va[0] + 4.0 * va[1] - va[2]) / (2.0 * h)
                p_head = (3.0 * va[-1] - 4.0 * va[-2] + va[-3]) / (2.0 * h)
            for vid, yv, p, g_in in ((e.tail, 0.0, p_tail, dfaces[0]),
                                     (e.head, e.length, p_head, -dfaces[-1])):
                gam = net.gamma[(vid, a)]
                w = gam * h / 2.0
                vnum[vid] += w * float(model.H(a, yv, p))
                if monotone:
                    vcorr[vid] += gam * e.mu * g_in
        hv = vnum / self.mdual
        if monotone and c0 > 0:
            hv = hv - self.lam * vcorr
        out[: net.n_vertices] = hv
        return out

    def step_back(self, v_next: np.ndarray, f_vec: np.ndarray,
                  inner_iterations: int = 0) -> np.ndarray:
        """One backward step: (D + dt K) v = D (v_next - dt (H(v*) - f)).

        With inner_iterations = 0, H is evaluated about v_next (semi-implicit);
        otherwise the Hamiltonian is re-frozen about the current iterate.
        """
        v_star = v_next
        v = None
        for _ in range(inner_iterations + 1):
            rhs = self.D * (v_next - self.dt *
                            (self.hamiltonian_vector(v_star) - f_vec))
            v = self._lu.solve(rhs)
            v_star = v
        return v


@dataclass
class HJBTrajectory:
    net: MetricNetwork
    grid: GridSpec
    dof: Dof
    data: np.ndarray  # (nt+1, n)
    kirchhoff: np.ndarray  # (nt+1, nv)

    def field(self, n: int) -> Field:
        return self.dof.field_v(self.data[n])


def _kirchhoff_from_vec(dof: Dof, vec: np.ndarray) -> np.ndarray:
    net, grid = dof.net, dof.grid
    res = np.zeros(net.n_vertices)
    for a in range(net.n_edges):
        e = net.edges[a]
        h = grid.h(net, a)
        va = vec[dof.chain(a)]
        d_tail = (3.0 * va[0] - 4.0 * va[1] + va[2]) / (2.0 * h)  # outward
        d_head = (3.0 * va[-1] - 4.0 * va[-2] + va[-3]) / (2.0 * h)
        res[e.tail] += net.gamma[(e.tail, a)] * e.mu * d_tail
        res[e.head] += net.gamma[(e.head, a)] * e.mu * d_head
    return res


def solve_hjb(problem: HJBProblem, dof: Dof | None = None) -> HJBTrajectory:
    net, grid = problem.net, problem.grid
    dof = dof or Dof(net, grid)
    op = HJBOperator(net, grid, problem.model, problem.grad_mode, dof)
    if grid.dt > op.dt_max * (1.0 + 1e-12):
        need = int(np.ceil(grid.horizon / op.dt_max))
        raise ValueError(
            f"dt={grid.dt:.3e} exceeds the monotone step bound "
            f"{op.dt_max:.3e}; use nt >= {need}")
    rhs = as_rhs(problem.f, net, grid, dof)

    v = dof.v_vector(problem.v_T)
    data = np.empty((grid.nt + 1, dof.n))
    kir = np.empty((grid.nt + 1, net.n_vertices))
    data[grid.nt] = v
    kir[grid.nt] = _kirchhoff_from_vec(dof, v)
    for n in range(grid.nt - 1, -1, -1):
        v = op.step_back(v, rhs(n), problem.inner_iterations)
        data[n] = v
        kir[n] = _kirchhoff_from_vec(dof, v)
    return HJBTrajectory(net, grid, dof, data, kir)


# -- derived gradient-system diagnostics ------------------------------------------

def gradient_system_residual(traj: HJBTrajectory, problem: HJBProblem):
    """Residuals of the vertex conditions satisfied by u = dv.

    Returns (res_flux, res_robin), both (nt+1, n_vertices):

    * res_flux: sum_a gamma mu n u|_a at each vertex (the Dirichlet-type
      condition of the derived system; identical to the Kirchhoff residual).
    * res_robin: max over incident pairs of the Robin expression
      mu n (outward du) - H(nu, u) + f(nu); zero at boundary vertices.
    """
    net, grid = traj.net, traj.grid
    dof = traj.dof
    model = problem.model
    rhs_arrays = _rhs_edge_arrays(problem.f, net, grid)
    nt = grid.nt
    nv = net.n_vertices
    res_a = np.zeros((nt + 1, nv))
    res_b = np.zeros((nt + 1, nv))
    times = grid.times()
    for n in range(nt + 1):
        vec = traj.data[n]
        u = [edge_derivative(vec[dof.chain(a)], grid.h(net, a))
             for a in range(net.n_edges)]
        f_at = rhs_arrays(n, times[n])
        for i in range(nv):
            acc = 0.0
            robin = []
            for a in net.incident(i):
                e = net.edges[a]
                side = net.side(a, i)
                sgn = net.sign(i, a)
                utr = u[a][0] if side == 0 else u[a][-1]
                acc += net.gamma[(i, a)] * e.mu * sgn * utr
                h = grid.h(net, a)
                du_out = ((3.0 * u[a][0] - 4.0 * u[a][1] + u[a][2])
                          if side == 0 else
                          (3.0 * u[a][-1] - 4.0 * u[a][-2] + u[a][-3])) / (2.0 * h)
                yv = 0.0 if side == 0 else e.length
                ftr = f_at[a][0] if side == 0 else f_at[a][-1]
                robin.append(e.mu * sgn * du_out
                             - float(model.H(a, yv, utr)) + ftr)
            res_a[n, i] = acc
            if len(robin) > 1:
                res_b[n, i] = max(robin) - min(robin)
    return res_a, res_b


def _rhs_edge_arrays(f, net, grid):
    if f is None or (np.isscalar(f) and f == 0):
        zero = [np.zeros(grid.cells[a] + 1) for a in range(net.n_edges)]
        return lambda n, t: zero
    if np.isscalar(f):
        const = [np.full(grid.cells[a] + 1, float(f))
                 for a in range(net.n_edges)]
        return lambda n, t: const
    if isinstance(f, (list, tuple)) and f and isinstance(f[0], Field):
        return lambda n, t: f[n].values
    if callable(f):
        return lambda n, t: [np.asarray(f(a, grid.nodes(net, a), t), float)
                             for a in range(net.n_edges)]
    raise TypeError("cannot recover edge traces from this rhs specification")
