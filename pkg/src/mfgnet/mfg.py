"""Coupled solver: damped fixed-point iteration on the best-response map.

One sweep of the map T takes a value trajectory v, pushes the density forward
with the feedback drift b = dH/dp(x, dv), evaluates the coupling cost f = V[m]
and solves the value equation backward. Iterates are damped,
v <- (1-omega) v + omega T(v), and convergence is measured on successive
iterates of both v (discrete L2-in-time H1 norm) and m (same norm per edge).

With duality pairing enabled the feedback drift uses the same face gradients
of v that enter the value equation's flux pairing, so independent runs settle
on the identical discrete fixed point and the uniqueness identity evaluates
to zero up to the iteration tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._disc import Dof
from . import coupling as coupling_mod
from .fields import Field, GridSpec
from .fp import FPProblem, solve_fp, w_norm_slice
from .hamiltonian import HamiltonianModel
from .hjb import HJBProblem, solve_hjb, _kirchhoff_from_vec
from .network import MetricNetwork


@dataclass
class MFGConfig:
    omega: float = 0.5
    max_iter: int = 100
    tol: float = 1e-8
    duality_pairing: bool = True
    grad_mode: str = "monotone"
    fp_scheme: str = "upwind"
    v0: str = "zero"  # 'zero' | 'terminal'

    def __post_init__(self):
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("damping omega must lie in (0, 1]")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class MFGSolution:
    net: MetricNetwork
    grid: GridSpec
    dof: Dof
    model: HamiltonianModel
    coupling: coupling_mod.CouplingOperator
    cfg: MFGConfig
    v_data: np.ndarray  # (nt+1, n)
    m_data: np.ndarray  # (nt+1, n)
    history: list  # per iteration: dict(res_v, res_m)
    converged: bool
    iterations: int
    diagnostics: dict = field(default_factory=dict)

    def v_field(self, n: int) -> Field:
        return self.dof.field_v(self.v_data[n])

    def m_field(self, n: int) -> Field:
        return self.dof.field_w(self.m_data[n])


# -- trajectory norms ------------------------------------------------------------

def v_norm_slice(dof: Dof, vec: np.ndarray) -> float:
    """Discrete H1 norm of a continuous unknown vector."""
    total = 0.0
    for a in range(dof.net.n_edges):
        h = dof.grid.h(dof.net, a)
        vals = vec[dof.chain(a)]
        total += np.trapezoid(vals * vals, dx=h)
        dv = np.diff(vals) / h
        total += float(np.sum(dv * dv) * h)
    return float(np.sqrt(total))


def traj_norm(dof: Dof, data: np.ndarray, slice_norm) -> float:
    dt = dof.grid.dt
    acc = 0.0
    last = data.shape[0] - 1
    for n in range(last + 1):
        w = 0.5 if n in (0, last) else 1.0
        acc += w * dt * slice_norm(dof, data[n]) ** 2
    return float(np.sqrt(acc))


# -- best-response map -------------------------------------------------------------

def feedback_drift(dof: Dof, model: HamiltonianModel, v_data: np.ndarray,
                   duality_pairing: bool = True):
    """Per-slab face drifts b = dH/dp(x, dv), frozen at the implicit level."""
    net, grid = dof.net, dof.grid
    slabs = []
    for n in range(grid.nt):
        vec = v_data[n + 1]
        per_edge = []
        if not duality_pairing:
            grads = dof.nodal_gradient_arrays(vec)
        for a in range(net.n_edges):
            mids = dof.face_midpoints(a)
            if duality_pairing:
                p = dof.face_gradients(vec, a)
            else:
                g = grads[a]
                p = 0.5 * (g[:-1] + g[1:])
            per_edge.append(np.asarray(model.Hp(a, mids, p), float))
        slabs.append(per_edge)
    return slabs


def coupling_rhs(dof: Dof, op: coupling_mod.CouplingOperator,
                 m_data: np.ndarray) -> np.ndarray:
    """Dual-averaged right-hand side vectors f(t_n) = V[m(t_n)]."""
    grid = dof.grid
    out = np.empty_like(m_data)
    for n in range(grid.nt + 1):
        mfield = dof.field_w(m_data[n])
        vfield = coupling_mod.apply(op, mfield)
        out[n] = dof.dual_average(vfield.values)
    return out


def best_response(net, grid, model, op, m0: Field, v_T: Field,
                  cfg: MFGConfig, v_data: np.ndarray, dof: Dof):
    """One undamped sweep of the map: v -> m -> new value trajectory."""
    drift = feedback_drift(dof, model, v_data, cfg.duality_pairing)
    fp_traj = solve_fp(FPProblem(net, grid, drift, m0, scheme=cfg.fp_scheme),
                       dof=dof)
    f_vecs = coupling_rhs(dof, op, fp_traj.data)
    hjb_traj = solve_hjb(HJBProblem(net, grid, model, f_vecs, v_T,
                                    grad_mode=cfg.grad_mode), dof=dof)
    return hjb_traj, fp_traj


def picard_solve(net: MetricNetwork, grid: GridSpec, model: HamiltonianModel,
                 op: coupling_mod.CouplingOperator, m0: Field, v_T: Field,
                 cfg: MFGConfig | None = None) -> MFGSolution:
    cfg = cfg or MFGConfig()
    dof = Dof(net, grid)

    vT_vec = dof.v_vector(v_T)
    if cfg.v0 == "zero":
        v = np.zeros((grid.nt + 1, dof.n))
        v[grid.nt] = vT_vec
    elif cfg.v0 == "terminal":
        v = np.tile(vT_vec, (grid.nt + 1, 1))
    else:
        raise ValueError(f"unknown initial guess {cfg.v0!r}")

    history = []
    m_prev = None
    m_traj = None
    converged = False
    iterations = 0
    for it in range(1, cfg.max_iter + 1):
        iterations = it
        hjb_traj, fp_traj = best_response(net, grid, model, op, m0, v_T,
                                          cfg, v, dof)
        v_new = (1.0 - cfg.omega) * v + cfg.omega * hjb_traj.data
        res_v = traj_norm(dof, v_new - v, v_norm_slice)
        if m_prev is None:
            res_m = np.inf
        else:
            res_m = traj_norm(dof, fp_traj.data - m_prev, w_norm_slice)
        history.append({"res_v": res_v, "res_m": res_m,
                        "mass_drift": float(np.max(fp_traj.mass_drift())),
                        "min_m": float(fp_traj.min_value.min())})
        v = v_new
        m_prev = fp_traj.data
        m_traj = fp_traj
        if res_v <= cfg.tol and res_m <= cfg.tol:
            converged = True
            break

    diag = {
        "mass_drift": float(np.max(m_traj.mass_drift())),
        "min_m": float(m_traj.min_value.min()),
        "kirchhoff_max": float(np.max(np.abs(
            _kirchhoff_from_vec(dof, v[0])))),
        "final_res_v": history[-1]["res_v"],
        "final_res_m": history[-1]["res_m"],
    }
    return MFGSolution(net, grid, dof, model, op, cfg, v, m_traj.data,
                       history, converged, iterations, diag)


def fixed_point_residual(sol: MFGSolution, m0: Field | None = None,
                         v_T: Field | None = None) -> float:
    """Distance between the solution and one more undamped sweep of the map."""
    m0 = m0 or sol.m_field(0)
    v_T = v_T or sol.v_field(sol.grid.nt)
    hjb_traj, _ = best_response(sol.net, sol.grid, sol.model, sol.coupling,
                                m0, v_T, sol.cfg, sol.v_data, sol.dof)
    return traj_norm(sol.dof, hjb_traj.data - sol.v_data, v_norm_slice)


# -- uniqueness identity ---------------------------------------------------------

@dataclass
class DualityResidual:
    coupling_term: float
    bregman_1: float
    bregman_2: float

    @property
    def total(self) -> float:
        return self.coupling_term + self.bregman_1 + self.bregman_2


def duality_residual(sol1: MFGSolution, sol2: MFGSolution) -> DualityResidual:
    """Discrete analogue of the uniqueness identity for two solution pairs.

    Computes the coupling term, integral of (m1-m2)(V[m1]-V[m2]), and the two
    convexity gaps, integral of m_i times the first-order expansion defect of
    H around the i-th gradient. Each term is nonnegative for increasing
    couplings, convex H and nonnegative densities, and all vanish when the
    two solutions coincide.
    """
    if sol1.grid != sol2.grid:
        raise ValueError("solutions live on different grids")
    dof = sol1.dof
    net, grid = sol1.net, sol1.grid
    model = sol1.model
    op = sol1.coupling

    dt = grid.dt
    acc_c = acc_b1 = acc_b2 = 0.0
    for n in range(grid.nt + 1):
        w = (0.5 if n in (0, grid.nt) else 1.0) * dt
        m1 = dof.pc_arrays(sol1.m_data[n], trace_scaled=True)
        m2 = dof.pc_arrays(sol2.m_data[n], trace_scaled=True)
        f1 = coupling_mod.apply(op, dof.field_w(sol1.m_data[n]))
        f2 = coupling_mod.apply(op, dof.field_w(sol2.m_data[n]))
        q1 = dof.nodal_gradient_arrays(sol1.v_data[n])
        q2 = dof.nodal_gradient_arrays(sol2.v_data[n])
        for a in range(net.n_edges):
            h = grid.h(net, a)
            y = grid.nodes(net, a)
            dm = m1[a] - m2[a]
            dv = f1.values[a] - f2.values[a]
            acc_c += w * np.trapezoid(dm * dv, dx=h)
            h1 = np.asarray(model.H(a, y, q1[a]), float)
            h2 = np.asarray(model.H(a, y, q2[a]), float)
            hp1 = np.asarray(model.Hp(a, y, q1[a]), float)
            hp2 = np.asarray(model.Hp(a, y, q2[a]), float)
            b1 = m1[a] * (h2 - h1 - hp1 * (q2[a] - q1[a]))
            b2 = m2[a] * (h1 - h2 - hp2 * (q1[a] - q2[a]))
            acc_b1 += w * np.trapezoid(b1, dx=h)
            acc_b2 += w * np.trapezoid(b2, dx=h)
    return DualityResidual(float(acc_c), float(acc_b1), float(acc_b2))
