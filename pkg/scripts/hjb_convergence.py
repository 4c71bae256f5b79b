#!/usr/bin/env python3
"""Convergence-rate study for the backward solver on the manufactured smooth
star solution: spatial and temporal orders plus Kirchhoff residual decay."""
import argparse

import numpy as np

from mfgnet.fields import GridSpec
from mfgnet.hjb import HJBProblem, solve_hjb
from mfgnet.presets import manufactured_hjb


def run(grad_mode="centered", levels=(32, 64, 128), dt_factor=8.0):
    mfd = manufactured_hjb()
    net, model, T = mfd.net, mfd.model, mfd.horizon

    print(f"gradient mode: {grad_mode}")
    errs, kres = [], []
    for N in levels:
        nt = int(dt_factor * N * N * T)
        grid = GridSpec.uniform(net, N, T, nt)
        vT = mfd.terminal(grid)
        traj = solve_hjb(HJBProblem(net, grid, model, mfd.f, vT,
                                    grad_mode=grad_mode))
        v0 = traj.field(0)
        err = max(np.max(np.abs(v0.values[a] - mfd.v(a, grid.nodes(net, a), 0.0)))
                  for a in range(net.n_edges))
        kr = float(np.max(np.abs(traj.kirchhoff[0])))
        errs.append(err)
        kres.append(kr)
        print(f"  N={N:4d} nt={nt:6d}  max error {err:.3e}  "
              f"Kirchhoff residual {kr:.3e}")
    hs = np.log(1.0 / np.asarray(levels, float))
    p_err = np.polyfit(hs, np.log(errs), 1)[0]
    p_kir = np.polyfit(hs, np.log(kres), 1)[0]
    print(f"  fitted spatial order {p_err:.2f}; Kirchhoff slope {p_kir:.2f}")

    N = 64
    sols = []
    nts = (128, 256, 512)
    for nt in nts:
        grid = GridSpec.uniform(net, N, T, nt)
        vT = mfd.terminal(grid)
        sols.append(solve_hjb(HJBProblem(net, grid, model, mfd.f, vT,
                                         grad_mode=grad_mode)).data[0])
    d1 = np.max(np.abs(sols[0] - sols[1]))
    d2 = np.max(np.abs(sols[1] - sols[2]))
    print(f"  temporal self-differences {d1:.3e} -> {d2:.3e}; "
          f"order {np.log2(d1 / d2):.2f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grad-mode", default="centered",
                    choices=["centered", "monotone"])
    ap.add_argument("--levels", type=int, nargs="+", default=[32, 64, 128])
    args = ap.parse_args()
    run(args.grad_mode, tuple(args.levels))


if __name__ == "__main__":
    main()
