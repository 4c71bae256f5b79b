"""Per-edge Hamiltonians with bounded momentum derivative.

A model bundles, for each edge, H(y, p) and its p-derivative together with a
declared constant C0 bounding |dH/dp|, the sublinear growth of H, and the
x-derivative growth. Builders cover the compact-control families used in the
solvers plus a numerical Legendre transform for explicit Lagrangians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import MetricNetwork, ValidationReport

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class HamiltonianModel:
    """Evaluable H and dH/dp per edge on [0, length] x R."""

    lengths: np.ndarray
    h_funcs: list  # per edge: (y, p) -> H
    hp_funcs: list  # per edge: (y, p) -> dH/dp
    c0: float
    label: str = "custom"

    @property
    def n_edges(self) -> int:
        return len(self.h_funcs)

    def _check_y(self, a: int, y) -> None:
        y = np.asarray(y, float)
        if np.any(y < -1e-12) or np.any(y > self.lengths[a] + 1e-12):
            raise ValueError(f"edge coordinate out of [0, {self.lengths[a]}]")

    def H(self, a: int, y, p):
        self._check_y(a, y)
        return self.h_funcs[a](np.asarray(y, float), np.asarray(p, float))

    def Hp(self, a: int, y, p):
        self._check_y(a, y)
        return self.hp_funcs[a](np.asarray(y, float), np.asarray(p, float))


def eval_H(model: HamiltonianModel, a: int, y, p):
    return model.H(a, y, p)


def eval_Hp(model: HamiltonianModel, a: int, y, p):
    return model.Hp(a, y, p)


# -- builtin families ---------------------------------------------------------

def zero_hamiltonian(net: MetricNetwork) -> HamiltonianModel:
    zf = lambda y, p: np.zeros(np.broadcast(y, p).shape)
    ne = net.n_edges
    return HamiltonianModel(net.lengths(), [zf] * ne, [zf] * ne, 0.0, "zero")


def clipped_quadratic(net: MetricNetwork, amax: float = 1.0) -> HamiltonianModel:
    """Legendre transform of L(a) = a^2/2 over controls [-amax, amax].

    H(p) = p^2/2 inside the saturation band, amax*|p| - amax^2/2 outside;
    Hp(p) = clip(p, -amax, amax).
    """
    amax = float(amax)

    def h(y, p):
        p = np.asarray(p, float)
        a = np.clip(p, -amax, amax)
        return a * p - 0.5 * a * a

    def hp(y, p):
        return np.clip(np.asarray(p, float), -amax, amax)

    ne = net.n_edges
    return HamiltonianModel(net.lengths(), [h] * ne, [hp] * ne, amax,
                            f"clipped_quadratic(amax={amax})")


def clipped_linear(net: MetricNetwork, amax: float = 1.0,
                   cost: float = 1.0) -> HamiltonianModel:
    """Legendre transform of L(a) = cost*|a| over [-amax, amax].

    H(p) = amax * max(0, |p| - cost); piecewise C1 with kinks where the
    maximizing control saturates. Hp uses the zero subgradient at a kink.
    """
    amax, cost = float(amax), float(cost)

    def h(y, p):
        p = np.asarray(p, float)
        return amax * np.maximum(0.0, np.abs(p) - cost)

    def hp(y, p):
        p = np.asarray(p, float)
        return np.where(np.abs(p) > cost, amax * np.sign(p), 0.0)

    ne = net.n_edges
    return HamiltonianModel(net.lengths(), [h] * ne, [hp] * ne, amax,
                            f"clipped_linear(amax={amax},cost={cost})")


# -- Legendre transform of explicit Lagrangians -------------------------------

@dataclass
class LagrangianSpec:
    """Per-edge running cost L(y, a) on a compact control interval."""

    lengths: np.ndarray
    bounds: list[tuple[float, float]]  # (a_lo, a_hi) per edge
    l_funcs: list  # per edge: (y, a) -> L, vectorized in a

    @property
    def n_edges(self) -> int:
        return len(self.l_funcs)


def _golden_argmax(obj, lo: float, hi: float, shape, tol: float = 1e-10):
    """Vectorized golden-section maximizer of a strictly concave objective."""
    a = np.full(shape, lo)
    b = np.full(shape, hi)
    while np.max(b - a) > tol:
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        keep_left = obj(c) >= obj(d)
        b = np.where(keep_left, d, b)
        a = np.where(keep_left, a, c)
    return 0.5 * (a + b)


def legendre(spec: LagrangianSpec, control_grid_size: int = 65,
             y_samples: int = 9) -> HamiltonianModel:
    """Numerical convex conjugate H(y,p) = max_a { -a p - L(y,a) }.

    The maximizer is found by golden-section search (the objective is strictly
    concave in a); Hp(y,p) = -a*(y,p). Convexity of L in a is screened on a
    control grid and non-convex data is rejected.
    """
    if control_grid_size < 3:
        raise ValueError("control_grid_size must be at least 3")

    sup_l = 0.0
    amax_abs = 0.0
    for a_idx in range(spec.n_edges):
        lo, hi = spec.bounds[a_idx]
        if not hi > lo:
            raise ValueError(f"edge {a_idx}: empty control interval")
        amax_abs = max(amax_abs, abs(lo), abs(hi))
        grid = np.linspace(lo, hi, control_grid_size)
        ys = np.linspace(0.0, spec.lengths[a_idx], y_samples)
        for y in ys:
            lv = np.asarray(spec.l_funcs[a_idx](y, grid), float)
            sup_l = max(sup_l, float(np.max(np.abs(lv))))
            d2 = lv[:-2] - 2.0 * lv[1:-1] + lv[2:]
            if np.min(d2) < -1e-8 * max(1.0, np.max(np.abs(lv))):
                raise ValueError(
                    f"edge {a_idx}: Lagrangian is not convex in the control "
                    f"(second difference {np.min(d2):.3e} at y={y:.3g})")

    h_funcs, hp_funcs = [], []
    for a_idx in range(spec.n_edges):
        lo, hi = spec.bounds[a_idx]
        lfun = spec.l_funcs[a_idx]

        def make(lfun=lfun, lo=lo, hi=hi):
            def h(y, p):
                y, p = np.broadcast_arrays(np.asarray(y, float),
                                           np.asarray(p, float))
                astar = _golden_argmax(lambda a: -a * p - lfun(y, a),
                                       lo, hi, p.shape)
                return -astar * p - lfun(y, astar)

            def hp(y, p):
                y, p = np.broadcast_arrays(np.asarray(y, float),
                                           np.asarray(p, float))
                astar = _golden_argmax(lambda a: -a * p - lfun(y, a),
                                       lo, hi, p.shape)
                return -astar

            return h, hp

        h, hp = make()
        h_funcs.append(h)
        hp_funcs.append(hp)

    c0 = max(amax_abs, sup_l)
    return HamiltonianModel(np.asarray(spec.lengths, float), h_funcs, hp_funcs,
                            c0, "legendre")


# -- assumption checks ----------------------------------------------------------

@dataclass
class AssumptionSamples:
    p_max: float = 4.0
    n_p: int = 81
    n_y: int = 7
    fd_eps: float = 1e-5
    tol: float = 1e-8


def check_assumptions(model: HamiltonianModel,
                      samples: AssumptionSamples | None = None
                      ) -> ValidationReport:
    """Sampled verification of sublinearity, Lipschitz bound, x-growth and
    convexity in p; reports the worst violation of each."""
    s = samples or AssumptionSamples()
    rep = ValidationReport()
    c0 = model.c0
    pmax = max(s.p_max, 2.0 * (c0 + 1.0))
    ps = np.linspace(-pmax, pmax, s.n_p)

    worst = {"growth": 0.0, "lipschitz": 0.0, "xgrowth": 0.0, "convexity": 0.0}
    where = {}
    for a in range(model.n_edges):
        ys = np.linspace(0.0, model.lengths[a], s.n_y)
        for y in ys:
            hv = np.asarray(model.H(a, y, ps), float)
            hpv = np.asarray(model.Hp(a, y, ps), float)
            g = hv - c0 * (np.abs(ps) + 1.0)
            if np.max(g) > worst["growth"]:
                worst["growth"] = float(np.max(g))
                where["growth"] = (a, y, ps[int(np.argmax(g))])
            lg = np.abs(hpv) - c0
            if np.max(lg) > worst["lipschitz"]:
                worst["lipschitz"] = float(np.max(lg))
                where["lipschitz"] = (a, y, ps[int(np.argmax(lg))])
            d2 = hv[:-2] - 2.0 * hv[1:-1] + hv[2:]
            if -np.min(d2) > worst["convexity"]:
                worst["convexity"] = float(-np.min(d2))
                where["convexity"] = (a, y, ps[int(np.argmin(d2)) + 1])
            eps = min(s.fd_eps, model.lengths[a] / 4.0)
            y0 = min(max(y, eps), model.lengths[a] - eps)
            hx = (np.asarray(model.H(a, y0 + eps, ps), float)
                  - np.asarray(model.H(a, y0 - eps, ps), float)) / (2.0 * eps)
            xg = np.abs(hx) - c0 * (np.abs(ps) + 1.0)
            if np.max(xg) > worst["xgrowth"]:
                worst["xgrowth"] = float(np.max(xg))
                where["xgrowth"] = (a, y0, ps[int(np.argmax(xg))])

    if worst["growth"] > s.tol:
        a, y, p = where["growth"]
        rep.add(f"growth bound violated: H - C0(|p|+1) = {worst['growth']:.3e} "
                f"at edge {a}, y={y:.3g}, p={p:.3g}")
    if worst["lipschitz"] > s.tol:
        a, y, p = where["lipschitz"]
        rep.add(f"momentum Lipschitz bound violated: |Hp| - C0 = "
                f"{worst['lipschitz']:.3e} at edge {a}, y={y:.3g}, p={p:.3g}")
    if worst["xgrowth"] > s.tol:
        a, y, p = where["xgrowth"]
        rep.add(f"x-derivative growth violated by {worst['xgrowth']:.3e} "
                f"at edge {a}, y={y:.3g}, p={p:.3g}")
    if worst["convexity"] > s.tol:
        a, y, p = where["convexity"]
        rep.add(f"convexity in p violated: negative second difference "
                f"{worst['convexity']:.3e} at edge {a}, y={y:.3g}, p={p:.3g}")
    return rep


def from_config(net: MetricNetwork, cfg: dict) -> HamiltonianModel:
    """Builtin family lookup used by the run configuration."""
    kind = cfg.get("kind", "zero")
    if kind == "zero":
        return zero_hamiltonian(net)
    if kind == "clipped_quadratic":
        return clipped_quadratic(net, cfg.get("amax", 1.0))
    if kind == "clipped_linear":
        return clipped_linear(net, cfg.get("amax", 1.0), cfg.get("cost", 1.0))
    raise ValueError(f"unknown hamiltonian kind {kind!r}")
