"""Command-line surface: configuration loading, run orchestration, outputs.

Every run writes a manifest (input hashes, config echo, library versions,
seed) next to its CSV outputs, and identical inputs produce byte-identical
files. Configuration documents are strict: unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys

import numpy as np
import scipy

from . import __version__
from . import coupling as cpl
from . import fields, fp, hamiltonian, hjb, mfg, montecarlo, spectral
from .fields import GridSpec, from_function
from .network import load_network, validate

log = logging.getLogger("mfgnet")

_SCHEMA = {
    "grid": {"cells", "horizon", "nt"},
    "hamiltonian": {"kind", "amax", "cost", "overrides"},
    "coupling": {"kind", "F", "lam", "amplitude", "slope", "bandwidth"},
    "fp": {"scheme", "theta", "drift", "m0"},
    "hjb": {"grad_mode", "rhs", "terminal", "inner_iterations"},
    "mfg": {"omega", "max_iter", "tol", "duality_pairing", "grad_mode",
            "fp_scheme", "v0"},
    "sim": {"n_paths", "dt", "t_final", "record_times", "drift", "seed",
            "compare_to_fp"},
    "eig": {"k", "dump_modes"},
    "output": {"dump_every"},
}
_DRIFT_KEYS = {"kind", "value", "values", "amplitude", "frequency"}
_FIELD_KEYS = {"kind", "value", "amplitudes", "offset", "edge", "center",
               "width", "baseline"}


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    with open(path) as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for section, body in cfg.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be an object")
        for key in body:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
        for key in ("drift", "rhs", "terminal", "m0"):
            sub = body.get(key)
            if isinstance(sub, dict):
                allowed = _DRIFT_KEYS if key == "drift" else _FIELD_KEYS
                for k in sub:
                    if k not in allowed:
                        raise ConfigError(f"unknown key {section}.{key}.{k}")
    return cfg


# -- builders -------------------------------------------------------------------

def build_grid(net, cfg) -> GridSpec:
    g = cfg.get("grid", {})
    cells = g.get("cells", 32)
    if isinstance(cells, dict):
        names = {e.name: a for a, e in enumerate(net.edges)}
        per = [32] * net.n_edges
        for name, c in cells.items():
            if name not in names:
                raise ConfigError(f"grid.cells: unknown edge {name!r}")
            per[names[name]] = int(c)
        return GridSpec.per_edge(per, float(g.get("horizon", 1.0)),
                                 int(g.get("nt", 100)))
    return GridSpec.uniform(net, int(cells), float(g.get("horizon", 1.0)),
                            int(g.get("nt", 100)))


def build_hamiltonian(net, cfg) -> hamiltonian.HamiltonianModel:
    h = dict(cfg.get("hamiltonian", {"kind": "zero"}))
    overrides = h.pop("overrides", {})
    base = hamiltonian.from_config(net, h)
    if overrides:
        names = {e.name: a for a, e in enumerate(net.edges)}
        c0 = base.c0
        for name, sub in overrides.items():
            if name not in names:
                raise ConfigError(f"hamiltonian.overrides: unknown edge {name!r}")
            other = hamiltonian.from_config(net, sub)
            a = names[name]
            base.h_funcs[a] = other.h_funcs[a]
            base.hp_funcs[a] = other.hp_funcs[a]
            c0 = max(c0, other.c0)
        base.c0 = c0
        base.label += "+overrides"
    return base


def build_coupling(cfg) -> cpl.CouplingOperator:
    return cpl.from_config(cfg.get("coupling", {"kind": "local",
                                                "F": "identity"}))


def build_drift(net, spec):
    if spec is None:
        return 0.0
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return float(spec.get("value", 0.0))
    if kind == "per_edge":
        names = {e.name: a for a, e in enumerate(net.edges)}
        vals = {names[k]: float(v) for k, v in spec["values"].items()}
        return vals
    if kind == "sine":
        amp = float(spec.get("amplitude", 1.0))
        freq = float(spec.get("frequency", 1.0))
        lengths = net.lengths()
        return lambda a, y, t: amp * np.sin(2 * np.pi * freq * y / lengths[a])
    raise ConfigError(f"unknown drift kind {kind!r}")


def build_density(net, grid, spec) -> fields.Field:
    kind = (spec or {}).get("kind", "uniform")
    if kind == "uniform":
        total = net.total_length()
        return from_function(net, grid, lambda a, y: np.ones_like(y) / total,
                             kind="jump")
    if kind == "bump":
        names = {e.name: a for a, e in enumerate(net.edges)}
        target = names.get(spec.get("edge", net.edges[0].name))
        center = float(spec.get("center", 0.5))
        width = float(spec.get("width", 0.15))
        baseline = float(spec.get("baseline", 0.2))

        def profile(a, y):
            base = np.full_like(y, baseline)
            if a == target:
                base = base + np.exp(-((y - center) / width) ** 2)
            return base

        raw = from_function(net, grid, profile, kind="jump")
        total = fields.integrate(raw)
        for arr in raw.values:
            arr /= total
        raw.latent /= total
        return raw
    raise ConfigError(f"unknown density kind {kind!r}")


def build_terminal(net, grid, spec) -> fields.Field:
    kind = (spec or {}).get("kind", "zero")
    if kind == "zero":
        return fields.constant(net, grid, 0.0)
    if kind == "constant":
        return fields.constant(net, grid, float(spec.get("value", 0.0)))
    if kind == "cosine":
        amps = spec.get("amplitudes", 0.5)
        offset = float(spec.get("offset", 1.0))
        lengths = net.lengths()
        if np.isscalar(amps):
            amps = [float(amps)] * net.n_edges
        return from_function(
            net, grid,
            lambda a, y: amps[a] * np.cos(np.pi * y / lengths[a])
            + (offset - amps[a]))
    raise ConfigError(f"unknown terminal kind {kind!r}")


def build_rhs(net, spec):
    kind = (spec or {}).get("kind", "zero")
    if kind == "zero":
        return 0.0
    if kind == "constant":
        return float(spec.get("value", 0.0))
    if kind == "cosine":
        amps = spec.get("amplitudes", 1.0)
        lengths = net.lengths()
        if np.isscalar(amps):
            amps = [float(amps)] * net.n_edges
        return lambda a, y, t: amps[a] * np.cos(np.pi * y / lengths[a])
    raise ConfigError(f"unknown rhs kind {kind!r}")


# -- output helpers ----------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_manifest(outdir, command, net_path, config_path, cfg, seed):
    def sha(path):
        if path is None or not os.path.exists(path):
            return None
        with open(path, "rb") as f:
            return hashlib.sha256(f.read()).hexdigest()

    manifest = {
        "command": command,
        "network_file": net_path,
        "network_sha256": sha(net_path),
        "config_file": config_path,
        "config_sha256": sha(config_path),
        "config": cfg,
        "seed": seed,
        "versions": {"mfgnet": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def write_field_csv(path, field, t):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["edge", "node_index", "y", "value", "t"])
        for edge, j, y, v, tt in fields.field_rows(field, t):
            w.writerow([edge, j, _fmt(y), _fmt(v), _fmt(tt)])


def write_trace_csv(path, field, t):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["vertex", "edge", "trace", "t"])
        for vx, edge, tr, tt in fields.trace_rows(field, t):
            w.writerow([vx, edge, _fmt(tr), _fmt(tt)])


def write_rows_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


# -- subcommands -----------------------------------------------------------------

def cmd_validate(args):
    net = load_network(args.net)
    rep = validate(net)
    print(f"network: {net.n_vertices} vertices, {net.n_edges} edges, "
          f"total length {net.total_length():g}")
    print(f"oriented: {net.is_oriented()}")
    if rep.ok:
        print("valid")
    else:
        print("violations:")
        for v in rep.violations:
            print(f"  - {v}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_manifest(args.out, "validate", args.net, args.config,
                       {}, args.seed)
        with open(os.path.join(args.out, "validation.txt"), "w") as f:
            f.write(str(rep) + "\n")
    return 0 if rep.ok else 1


def _dump_slices(outdir, prefix, net, grid, dof, data, every, jump):
    times = grid.times()
    for n in range(0, grid.nt + 1, every):
        fld = dof.field_w(data[n]) if jump else dof.field_v(data[n])
        write_field_csv(os.path.join(outdir, f"{prefix}_{n:06d}.csv"),
                        fld, times[n])
        if jump:
            write_trace_csv(os.path.join(outdir, f"{prefix}_{n:06d}_traces.csv"),
                            fld, times[n])


def cmd_solve_fp(args):
    net = load_network(args.net)
    cfg = load_config(args.config)
    grid = build_grid(net, cfg)
    fcfg = cfg.get("fp", {})
    drift = build_drift(net, fcfg.get("drift"))
    m0 = build_density(net, grid, fcfg.get("m0"))
    problem = fp.FPProblem(net, grid, drift, m0,
                           scheme=fcfg.get("scheme", "upwind"),
                           theta=float(fcfg.get("theta", 1.0)))
    traj = fp.solve_fp(problem)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(args.out, "solve-fp", args.net, args.config, cfg, args.seed)
    every = int(cfg.get("output", {}).get("dump_every", max(1, grid.nt // 10)))
    _dump_slices(args.out, "density", net, grid, traj.dof, traj.data, every,
                 jump=True)
    times = grid.times()
    rows = []
    for n in range(grid.nt + 1):
        jres = float(np.max(fields.jump_residual(traj.field(n))))
        rows.append((times[n], traj.mass[n], traj.min_value[n], jres))
    write_rows_csv(os.path.join(args.out, "diagnostics.csv"),
                   ["t", "mass", "min_m", "jump_residual"], rows)
    drift_max = float(np.max(traj.mass_drift()))
    print(f"solved: {grid.nt} steps, mass drift {drift_max:.3e}, "
          f"min m {traj.min_value.min():.3e}")
    return 0


def cmd_solve_hjb(args):
    net = load_network(args.net)
    cfg = load_config(args.config)
    grid = build_grid(net, cfg)
    hcfg = cfg.get("hjb", {})
    model = build_hamiltonian(net, cfg)
    rhs = build_rhs(net, hcfg.get("rhs"))
    v_T = build_terminal(net, grid, hcfg.get("terminal"))
    problem = hjb.HJBProblem(net, grid, model, rhs, v_T,
                             grad_mode=hcfg.get("grad_mode", "monotone"),
                             inner_iterations=int(hcfg.get("inner_iterations", 0)))
    traj = hjb.solve_hjb(problem)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(args.out, "solve-hjb", args.net, args.config, cfg, args.seed)
    every = int(cfg.get("output", {}).get("dump_every", max(1, grid.nt // 10)))
    _dump_slices(args.out, "value", net, grid, traj.dof, traj.data, every,
                 jump=False)
    times = grid.times()
    rows = [(times[n], *traj.kirchhoff[n]) for n in range(grid.nt + 1)]
    write_rows_csv(os.path.join(args.out, "kirchhoff_residual.csv"),
                   ["t"] + [f"vertex_{v}" for v in net.vertex_names], rows)
    res_a, res_b = hjb.gradient_system_residual(traj, problem)
    rows = [(times[n], float(np.max(np.abs(res_a[n]))),
             float(np.max(np.abs(res_b[n])))) for n in range(grid.nt + 1)]
    write_rows_csv(os.path.join(args.out, "gradient_system_residual.csv"),
                   ["t", "flux_residual_max", "robin_residual_max"], rows)
    print(f"solved: {grid.nt} steps, max Kirchhoff residual "
          f"{np.max(np.abs(traj.kirchhoff)):.3e}")
    return 0


def cmd_solve_mfg(args):
    net = load_network(args.net)
    cfg = load_config(args.config)
    grid = build_grid(net, cfg)
    model = build_hamiltonian(net, cfg)
    op = build_coupling(cfg)
    fcfg = cfg.get("fp", {})
    m0 = build_density(net, grid, fcfg.get("m0"))
    v_T = build_terminal(net, grid, cfg.get("hjb", {}).get("terminal"))
    mcfg = cfg.get("mfg", {})
    config = mfg.MFGConfig(
        omega=float(mcfg.get("omega", 0.5)),
        max_iter=int(mcfg.get("max_iter", 100)),
        tol=float(mcfg.get("tol", 1e-8)),
        duality_pairing=bool(mcfg.get("duality_pairing", True)),
        grad_mode=mcfg.get("grad_mode", "monotone"),
        fp_scheme=mcfg.get("fp_scheme", "upwind"),
        v0=mcfg.get("v0", "zero"))
    sol = mfg.picard_solve(net, grid, model, op, m0, v_T, config)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(args.out, "solve-mfg", args.net, args.config, cfg, args.seed)
    write_rows_csv(os.path.join(args.out, "iterations.csv"),
                   ["iteration", "res_v", "res_m", "mass_drift", "min_m"],
                   [(k + 1, h["res_v"],
                     h["res_m"] if np.isfinite(h["res_m"]) else "inf",
                     h["mass_drift"], h["min_m"])
                    for k, h in enumerate(sol.history)])
    every = int(cfg.get("output", {}).get("dump_every", max(1, grid.nt // 10)))
    _dump_slices(args.out, "value", net, grid, sol.dof, sol.v_data, every,
                 jump=False)
    _dump_slices(args.out, "density", net, grid, sol.dof, sol.m_data, every,
                 jump=True)
    fpr = mfg.fixed_point_residual(sol)
    with open(os.path.join(args.out, "summary.txt"), "w") as f:
        f.write(f"converged={str(sol.converged).lower()}\n")
        f.write(f"iterations={sol.iterations}\n")
        f.write(f"final_res_v={_fmt(sol.diagnostics['final_res_v'])}\n")
        f.write(f"final_res_m={_fmt(sol.diagnostics['final_res_m'])}\n")
        f.write(f"fixed_point_residual={_fmt(fpr)}\n")
        f.write(f"mass_drift={_fmt(sol.diagnostics['mass_drift'])}\n")
        f.write(f"min_m={_fmt(sol.diagnostics['min_m'])}\n")
        f.write(f"kirchhoff_max={_fmt(sol.diagnostics['kirchhoff_max'])}\n")
    print(f"converged={sol.converged} iterations={sol.iterations} "
          f"fixed_point_residual={fpr:.3e}")
    return 0 if sol.converged else 1


def cmd_eig(args):
    net = load_network(args.net)
    cfg = load_config(args.config) if args.config else {}
    grid = build_grid(net, cfg)
    k = args.k or int(cfg.get("eig", {}).get("k", 20))
    basis = spectral.eigenbasis(net, grid, k)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(args.out, "eig", args.net, args.config, cfg, args.seed)
    write_rows_csv(os.path.join(args.out, "eigenvalues.csv"),
                   ["index", "eigenvalue"],
                   [(j, basis.eigenvalues[j]) for j in range(k)])
    dump = int(cfg.get("eig", {}).get("dump_modes", min(4, k)))
    for j in range(dump):
        write_field_csv(os.path.join(args.out, f"mode_{j:03d}.csv"),
                        basis.mode(j), 0.0)
    print(f"computed {k} eigenvalues; smallest {basis.eigenvalues[0]:.3e}, "
          f"largest {basis.eigenvalues[-1]:.6g}")
    return 0


def cmd_simulate(args):
    net = load_network(args.net)
    cfg = load_config(args.config)
    grid = build_grid(net, cfg)
    scfg = cfg.get("sim", {})
    seed = args.seed if args.seed is not None else int(scfg.get("seed", 0))
    drift = build_drift(net, scfg.get("drift"))
    sim_cfg = montecarlo.SimConfig(
        n_paths=int(scfg.get("n_paths", 10000)),
        dt=float(scfg.get("dt", 1e-3)),
        seed=seed,
        drift=drift,
        t_final=float(scfg.get("t_final", grid.horizon)),
        record_times=tuple(scfg.get("record_times", [])),
        chunks=max(1, args.threads))
    emp = montecarlo.simulate(net, grid, sim_cfg)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(args.out, "simulate", args.net, args.config, cfg, seed)
    for k, t in enumerate(emp.times):
        rows = []
        for a in range(net.n_edges):
            hist = emp.edge_histogram(k, a)
            for j, m in enumerate(hist):
                rows.append((net.edges[a].name, j, m, t))
        write_rows_csv(os.path.join(args.out, f"histogram_{k:02d}.csv"),
                       ["edge", "cell_index", "mass", "t"], rows)
    msg = f"simulated {sim_cfg.n_paths} paths to t={sim_cfg.t_final:g}"
    if scfg.get("compare_to_fp"):
        # reference density: forward solve with the matching coefficient
        drift_fn = montecarlo._drift_fn(drift, net)
        b = lambda a, y, t: -drift_fn(np.full(np.shape(y), a, dtype=np.int64),
                                      np.asarray(y, float), t)
        m0 = build_density(net, grid, cfg.get("fp", {}).get("m0"))
        traj = fp.solve_fp(fp.FPProblem(net, grid, b, m0,
                                        scheme=cfg.get("fp", {}).get(
                                            "scheme", "centered")))
        rows = []
        for k, t in enumerate(emp.times):
            n = int(round(t / grid.dt))
            tv = montecarlo.compare_to_fp(emp, traj.field(n), k)
            rows.append((t, tv))
        write_rows_csv(os.path.join(args.out, "tv_comparison.csv"),
                       ["t", "tv_distance"], rows)
        msg += f"; TV at t={emp.times[-1]:g}: {rows[-1][1]:.4f}"
    print(msg)
    return 0


def cmd_check(args):
    from .checks import run_checks
    net = load_network(args.net)
    cfg = load_config(args.config) if args.config else {}
    results = run_checks(net, cfg, seed=args.seed or 0)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.detail}")
        failures += 0 if r.ok else 1
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_manifest(args.out, "check", args.net, args.config, cfg,
                       args.seed)
        write_rows_csv(os.path.join(args.out, "checks.csv"),
                       ["name", "status", "detail"],
                       [(r.name, "PASS" if r.ok else "FAIL", r.detail)
                        for r in results])
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


# -- entry point -------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfgnet",
        description="Mean field games on metric networks")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "validate": cmd_validate,
        "solve-fp": cmd_solve_fp,
        "solve-hjb": cmd_solve_hjb,
        "solve-mfg": cmd_solve_mfg,
        "eig": cmd_eig,
        "simulate": cmd_simulate,
        "check": cmd_check,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--net", required=True, help="network JSON file")
        p.add_argument("--config", default=None, help="run config JSON file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--verbose", action="store_true")
        if name == "eig":
            p.add_argument("--k", type=int, default=None)

    args = parser.parse_args(argv)
    level = os.environ.get("MFGNET_LOG", "INFO" if args.verbose else "WARNING")
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING))

    needs_out = {"solve-fp", "solve-hjb", "solve-mfg", "eig", "simulate"}
    if args.command in needs_out and not args.out:
        parser.error(f"{args.command} requires --out")
    needs_cfg = {"solve-fp", "solve-hjb", "solve-mfg", "simulate"}
    if args.command in needs_cfg and not args.config:
        parser.error(f"{args.command} requires --config")

    try:
        return commands[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
