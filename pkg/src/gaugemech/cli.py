"""Scenario-driven command-line entry point.

Subcommands: check, extract, simulate, compare-kk-wong, manton, order.
Exit codes: 0 ok, 1 usage, 2 numerical/validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dynamics import diagnostics, integrate, order_estimate, trajectory_to_csv
from .errors import GaugemechError, InvalidScenario
from .extraction import einstein_mayer_hamiltonian, extract_fields, vertical_jet, wong_hamiltonian
from .kaluza import KKState, integrate_kk, kk_trajectory_to_csv, split_kk_hamiltonian
from .lie_algebra import jacobi_residual
from .poisson import (bivector_at, bivector_partials, casimir_residual,
                      default_casimirs)
from .reduction import manton_report
from .scenario import load_scenario

USAGE_EXIT = 1
FAIL_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_EXIT)


def _jacobi_worst(P, z):
    W = bivector_at(P, z)
    T = bivector_partials(P, z)
    S = (np.einsum("lj,lik->ijk", W, T)
         + np.einsum("li,lkj->ijk", W, T)
         + np.einsum("lk,lji->ijk", W, T))
    idx = np.unravel_index(np.argmax(np.abs(S)), S.shape)
    return float(np.abs(S[idx])), tuple(int(i) + 1 for i in idx)


def _write_manifest(out_dir, name, payload):
    path = Path(out_dir) / name
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load(args):
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc = type(sc)(**{**sc.__dict__, "seed": int(args.seed)})
    return sc


def cmd_check(args):
    sc = _load(args)
    if sc.poisson is None:
        raise InvalidScenario("check needs a poisson structure (or a hamiltonian that implies one)")
    tol = args.tol if args.tol is not None else sc.tolerances["check"]
    rng = np.random.default_rng(sc.seed)
    P = sc.poisson
    worst = (0.0, None, None)
    for _ in range(100):
        z = rng.standard_normal(P.dim)
        res, triple = _jacobi_worst(P, z)
        if res > worst[0]:
            worst = (res, triple, z)
    print(f"jacobi residual over 100 points: {worst[0]:.3e} (tolerance {tol:.1e})")
    ok = worst[0] <= tol
    if not ok:
        i, j, k = worst[1]
        print(f"FAIL: triple (i,j,k)=({i},{j},{k}) at point {np.array2string(worst[2], precision=6)}"
              f" has residual {worst[0]:.3e}")
    if P.algebra is not None:
        ares = jacobi_residual(P.algebra)
        print(f"algebra jacobi residual: {ares:.3e}")
        ok = ok and ares <= max(tol, P.algebra.tol)
    for c in default_casimirs(P):
        samples = rng.standard_normal((20, P.dim))
        cres = casimir_residual(P, c, samples)
        print(f"default casimir residual: {cres:.3e}")
        ok = ok and cres <= max(tol, 1e-10)
    print("check:", "pass" if ok else "fail")
    return 0 if ok else FAIL_EXIT


def cmd_extract(args):
    sc = _load(args)
    if sc.model is None:
        raise InvalidScenario("extract needs a quadratic_gauge or kk hamiltonian")
    model = sc.model
    m, n = model.m, model.n
    grid = sc.grid if sc.grid.size else np.zeros((1, m))
    H = einstein_mayer_hamiltonian(model) if model.chi_inv is not None \
        else wong_hamiltonian(model)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = 0
    for x in grid:
        try:
            jet = vertical_jet(H, x, m, n, tol=sc.tolerances["jet"])
            f = extract_fields(jet)
            rows.append((x, f, None))
            flag = "degenerate" if f.degenerate else "ok"
            print(f"x={np.array2string(x, precision=4)}  cond(gamma)={f.cond_gamma:.2e}  {flag}")
        except GaugemechError as exc:
            rows.append((x, None, str(exc)))
            failures += 1
            print(f"x={np.array2string(x, precision=4)}  ERROR {exc}")
    path = out_dir / "fields.csv"
    header = [f"x{i + 1}" for i in range(m)]
    header += [f"gamma_inv_{i + 1}{j + 1}" for i in range(m) for j in range(m)]
    header += [f"A_{mu + 1}{a + 1}" for mu in range(m) for a in range(n)]
    header += [f"chi_inv_{a + 1}{b + 1}" for a in range(n) for b in range(n)]
    header += ["cond_gamma", "degenerate", "error"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for x, f, err in rows:
            if f is None:
                base = list(x) + [float("nan")] * (m * m + m * n + n * n + 1) + [1, err]
            else:
                base = (list(x) + list(f.gamma_inv.ravel()) + list(f.A.ravel())
                        + list(f.chi_inv.ravel()) + [f.cond_gamma, int(f.degenerate), ""])
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in base) + "\n")
    _write_manifest(out_dir, "extract_manifest.json", {
        "command": "extract",
        "scenario": sc.raw,
        "scenario_hash": sc.hash(),
        "outputs": ["fields.csv"],
        "failures": failures,
        "points": len(rows),
    })
    print(f"wrote {path}")
    return FAIL_EXIT if failures == len(rows) else 0


def _simulate_poisson(sc, system):
    if system == "wong":
        if sc.model is None:
            raise InvalidScenario("wong simulation needs a quadratic_gauge or kk hamiltonian")
        return sc.poisson, wong_hamiltonian(sc.model)
    if system == "em":
        if sc.model is None:
            raise InvalidScenario("em simulation needs a quadratic_gauge or kk hamiltonian")
        return sc.poisson, einstein_mayer_hamiltonian(sc.model)
    if system in ("lie_poisson", "general"):
        if sc.hamiltonian is None:
            raise InvalidScenario(f"{system} simulation needs a polynomial or euler_top hamiltonian")
        if sc.poisson is None:
            raise InvalidScenario("no poisson structure available")
        return sc.poisson, sc.hamiltonian
    raise InvalidScenario(f"unknown system {system!r}")


def cmd_simulate(args):
    sc = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    if args.system == "kk":
        if sc.kk_spec is None:
            raise InvalidScenario("kk simulation needs a kk hamiltonian")
        spec = sc.kk_spec
        parts = sc.initial_parts or {}
        if parts:
            s0 = KKState.from_wong(spec, parts.get("x", np.zeros(spec.m)),
                                   parts.get("p", np.zeros(spec.m)),
                                   parts.get("r", np.zeros(spec.n)))
        else:
            z = sc.initial
            s0 = KKState.from_wong(spec, z[:spec.m], z[spec.m:2 * spec.m], z[2 * spec.m:])
        traj = integrate_kk(spec, s0, sc.integrator)
        path = out_dir / "trajectory_kk.csv"
        kk_trajectory_to_csv(traj, spec, path)
        outputs.append(path.name)
        e_drift = float(np.max(np.abs(traj.energy - traj.energy[0])) / max(1.0, abs(traj.energy[0])))
        m_drift = float(np.max(np.abs(traj.moments - traj.moments[0])))
        report = {"energy_drift": e_drift, "moment_drift": m_drift}
        split = split_kk_hamiltonian(spec)
        report["split_residual"] = split.residual
        report["split_classification"] = split.classification
        print(f"energy drift {e_drift:.3e}  moment drift {m_drift:.3e}  "
              f"split residual {split.residual:.3e} ({split.classification})")
        if args.plot:
            from .plots import plot_energy, plot_trajectory
            xs = np.array([s.x for s in traj.states])
            plot_trajectory(traj.times, xs, out_dir / "trajectory_kk.png", "bundle geodesic (base)")
            plot_energy(traj.times, traj.energy, out_dir / "energy_kk.png")
            outputs += ["trajectory_kk.png", "energy_kk.png"]
    else:
        P, H = _simulate_poisson(sc, args.system)
        traj = integrate(P, H, sc.initial, sc.integrator)
        rep = diagnostics(traj, P, H)
        path = out_dir / "trajectory.csv"
        trajectory_to_csv(traj, path)
        outputs.append(path.name)
        report = {"energy_drift": rep.energy_drift, "casimir_drifts": rep.casimir_drifts}
        print(f"energy drift {rep.energy_drift:.3e}  casimir drifts "
              + ", ".join(f"{d:.3e}" for d in rep.casimir_drifts))
        if args.plot:
            from .plots import plot_energy, plot_trajectory
            plot_trajectory(traj.times, traj.states, out_dir / "trajectory.png",
                            f"{args.system} trajectory")
            plot_energy(traj.times, traj.energy, out_dir / "energy.png")
            outputs += ["trajectory.png", "energy.png"]
    _write_manifest(out_dir, "run_manifest.json", {
        "command": "simulate",
        "system": args.system,
        "scenario": sc.raw,
        "scenario_hash": sc.hash(),
        "integrator": {"method": sc.integrator.method, "h": sc.integrator.h,
                       "T": sc.integrator.T, "steps": sc.integrator.steps},
        "outputs": outputs,
        "report": report,
    })
    return 0


def cmd_compare(args):
    sc = _load(args)
    if sc.kk_spec is None:
        raise InvalidScenario("compare-kk-wong needs a kk hamiltonian")
    spec = sc.kk_spec
    model = sc.model
    tol = args.tol if args.tol is not None else sc.tolerances["compare"]
    parts = sc.initial_parts or {}
    x0 = parts.get("x", np.zeros(spec.m))
    p0 = parts.get("p", np.zeros(spec.m))
    r0 = parts.get("r", np.zeros(spec.n))
    z0 = np.concatenate([x0, p0, r0])

    H = wong_hamiltonian(type(model)(model.m, model.n, model.algebra,
                                     model.gamma_inv, model.A, None))
    tw = integrate(sc.poisson, H, z0, sc.integrator)
    tk = integrate_kk(spec, KKState.from_wong(spec, x0, p0, r0), sc.integrator)
    proj = tk.projected(spec)
    dev = np.abs(proj - tw.states)
    per_comp = dev.max(axis=0)
    labels = ([f"x{i + 1}" for i in range(spec.m)] + [f"p{i + 1}" for i in range(spec.m)]
              + [f"r{a + 1}" for a in range(spec.n)])
    for lab, d in zip(labels, per_comp):
        print(f"sup-norm deviation {lab}: {d:.3e}")
    worst = float(per_comp.max())
    ok = worst <= tol
    print(f"overall {worst:.3e} vs tolerance {tol:.1e}: {'pass' if ok else 'FAIL'}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dev_path = out_dir / "deviation.csv"
    with open(dev_path, "w") as fh:
        fh.write("t," + ",".join(f"dev_{lab}" for lab in labels) + "\n")
        for i in range(len(tw.times)):
            fh.write(",".join(f"{v:.17g}" for v in [tw.times[i], *dev[i]]) + "\n")
    _write_manifest(out_dir, "compare_manifest.json", {
        "command": "compare-kk-wong",
        "scenario": sc.raw,
        "scenario_hash": sc.hash(),
        "tolerance": tol,
        "per_component": {lab: float(d) for lab, d in zip(labels, per_comp)},
        "max_deviation": worst,
        "pass": bool(ok),
        "outputs": ["deviation.csv"],
    })
    if args.plot:
        from .plots import plot_deviation
        plot_deviation(tw.times, dev.max(axis=1), out_dir / "deviation.png",
                       "bundle-geodesic projection vs minimal-coupling flow")
    return 0 if ok else FAIL_EXIT


def cmd_manton(args):
    try:
        report = manton_report()
    except GaugemechError as exc:
        print(f"FAIL: {exc}")
        return FAIL_EXIT
    print(report.format_table())
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "reduction_report.json", "w") as fh:
            fh.write(report.to_json() + "\n")
        print(f"wrote {out_dir / 'reduction_report.json'}")
    return 0


def cmd_order(args):
    sc = _load(args)
    if args.system == "kk":
        raise InvalidScenario("order studies run on poisson-side systems")
    P, H = _simulate_poisson(sc, args.system)
    est = order_estimate(P, H, sc.initial, sc.integrator)
    if est.reliable:
        print(f"observed order {est.value:.3f} (method {sc.integrator.method}, "
              f"deltas {est.deltas[0]:.2e}/{est.deltas[1]:.2e})")
    else:
        print("observed order: unreliable (differences at rounding level); "
              f"deltas {est.deltas[0]:.2e}/{est.deltas[1]:.2e}")
    return 0


def build_parser():
    parser = _Parser(prog="gaugemech",
                     description="Poisson-manifold gauge extraction, minimal-coupling dynamics, "
                                 "bundle-geodesic cross-checks, and charge-algebra reduction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        if scenario_required:
            p.add_argument("--scenario", required=True, help="path to the scenario JSON document")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tol", type=float, default=None, help="override the relevant tolerance")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p = sub.add_parser("check", help="Jacobi/Casimir residual checks over sampled points")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("extract", help="vertical-jet field extraction on a base grid")
    common(p)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("simulate", help="integrate a system and write trajectory CSV + manifest")
    common(p)
    p.add_argument("--system", required=True,
                   choices=["wong", "em", "lie_poisson", "general", "kk"])
    p.add_argument("--plot", action="store_true", help="render figures next to the CSV output")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare-kk-wong",
                       help="projected bundle geodesics vs minimal-coupling trajectories")
    common(p)
    p.add_argument("--plot", action="store_true", help="render deviation figure")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("manton", help="run the canned charge-algebra reduction report")
    p.add_argument("--out", default=None, help="optional output directory for the JSON report")
    p.set_defaults(fn=cmd_manton)

    p = sub.add_parser("order", help="convergence-order study for the configured integrator")
    common(p)
    p.add_argument("--system", default="general",
                   choices=["wong", "em", "lie_poisson", "general"])
    p.set_defaults(fn=cmd_order)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InvalidScenario as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return FAIL_EXIT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except GaugemechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAIL_EXIT


if __name__ == "__main__":
    sys.exit(main())
