"""Invariant battery behind the ``check`` subcommand.

Runs the structural invariants of every component on the configured problem
at a reduced size and reports one pass/fail row per group.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coupling as cpl
from . import fields, fp, hjb, spectral
from .fields import GridSpec, constant, from_function


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _small_grid(net, cfg):
    from .cli import build_grid
    grid = build_grid(net, cfg)
    n = min(max(grid.cells), 32)
    nt = min(grid.nt, 100)
    return GridSpec.uniform(net, n, grid.horizon, nt)


def run_checks(net, cfg, seed=0) -> list[CheckResult]:
    from .cli import build_coupling, build_drift, build_hamiltonian

    rng = np.random.default_rng(seed)
    results = []

    from .network import validate
    rep = validate(net)
    results.append(CheckResult("network-admissible", rep.ok,
                               "ok" if rep.ok else "; ".join(rep.violations)))
    if not rep.ok:
        return results

    grid = _small_grid(net, cfg)
    model = build_hamiltonian(net, cfg)
    op = build_coupling(cfg)
    drift = build_drift(net, cfg.get("fp", {}).get("drift"))

    m0 = from_function(net, grid,
                       lambda a, y: np.ones_like(y) / net.total_length(),
                       kind="jump")
    traj = fp.solve_fp(fp.FPProblem(net, grid, drift, m0))
    md = float(np.max(traj.mass_drift()))
    results.append(CheckResult("fp-mass-conservation", md <= 1e-12,
                               f"max per-step drift {md:.2e}"))
    mn = float(traj.min_value.min())
    results.append(CheckResult("fp-positivity", mn >= -1e-12,
                               f"min density {mn:.2e}"))
    jr = float(np.max(fields.jump_residual(traj.field(grid.nt))))
    results.append(CheckResult("fp-jump-condition", jr <= 1e-12,
                               f"max trace-ratio gap {jr:.2e}"))

    vT = constant(net, grid, 1.0)
    htraj = hjb.solve_hjb(hjb.HJBProblem(net, grid, model, 0.0, vT))
    dev = float(np.max(np.abs(htraj.data - 1.0)))
    hz = float(np.max(np.abs(model.H(0, 0.0, 0.0))))
    const_ok = dev <= grid.horizon * hz + 1e-10
    results.append(CheckResult("hjb-constant-data", const_ok,
                               f"deviation {dev:.2e} (|H(.,0)|={hz:.2e})"))

    f_lo = lambda a, y, t: np.sin(2 * np.pi * y) * 0.5
    f_hi = lambda a, y, t: np.sin(2 * np.pi * y) * 0.5 + 0.3
    t1 = hjb.solve_hjb(hjb.HJBProblem(net, grid, model, f_lo, vT))
    t2 = hjb.solve_hjb(hjb.HJBProblem(net, grid, model, f_hi, vT))
    viol = float(np.max(t1.data - t2.data))
    results.append(CheckResult("hjb-comparison", viol <= 1e-10,
                               f"max ordering violation {viol:.2e}"))

    from .hamiltonian import check_assumptions
    hrep = check_assumptions(model)
    results.append(CheckResult("hamiltonian-assumptions", hrep.ok,
                               "ok" if hrep.ok else hrep.violations[0]))

    if op.kind == "local" and op.increasing:
        pert = from_function(
            net, grid,
            lambda a, y: np.abs(np.sin(3 * y + a)) / net.total_length() + 0.1,
            kind="jump")
        gap = cpl.monotonicity_gap(op, m0, pert)
        results.append(CheckResult("coupling-monotone", gap >= -1e-10,
                                   f"gap {gap:.2e}"))

    k = min(6, 2 * net.n_vertices)
    basis = spectral.eigenbasis(net, grid, k)
    lam0 = float(basis.eigenvalues[0])
    gram = float(np.max(np.abs(basis.gram() - np.eye(k))))
    results.append(CheckResult("spectral-kernel", abs(lam0) <= 1e-8,
                               f"smallest eigenvalue {lam0:.2e}"))
    results.append(CheckResult("spectral-orthonormal", gram <= 1e-8,
                               f"Gram deviation {gram:.2e}"))

    kres = float(np.max(np.abs(htraj.kirchhoff)))
    results.append(CheckResult("hjb-kirchhoff-bounded", np.isfinite(kres),
                               f"max residual {kres:.2e}"))

    return results
