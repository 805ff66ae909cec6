"""``resnet`` command line: JSON reports on stdout, CSV side files via --out-dir.

Exit codes: 0 success, 1 computation or invariant failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import checks
from . import lattice as lat
from . import network as nw
from . import spectral as spec
from . import walk
from .errors import ResnetError
from .operators import GroundedSystem
from .resistance import BRACKET_REL_TOL, free_resistance, resistance_bracket

EXACT_TOL = 1e-10  # reported tolerance of direct (Cholesky) solves


class UsageError(Exception):
    pass


def _num(value, tol, converged=True) -> dict:
    return {"value": float(value), "tol": tol, "converged": bool(converged)}


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


# network sources -------------------------------------------------------------

def _add_source(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lattice", type=int, metavar="D", help="integer lattice Z^D, l1 balls")
    g.add_argument("--tree", action="store_true", help="rooted binary tree")
    g.add_argument("--path", type=int, metavar="N", help="finite path P_N")
    g.add_argument("--k3", action="store_true", help="complete graph K_3")
    g.add_argument("--network", type=Path, metavar="FILE", help="network JSON file")


def _source(args):
    """(description, exhaustion or None, finite network or None)."""
    if args.lattice is not None:
        return {"family": "lattice", "d": args.lattice}, nw.lattice(args.lattice), None
    if args.tree:
        return {"family": "binary-tree"}, nw.tree(), None
    if args.path is not None:
        return {"family": "path", "n": args.path}, None, nw.path(args.path)
    if args.k3:
        return {"family": "complete", "n": 3}, None, nw.complete(3)
    if args.network is not None:
        net = nw.Network.from_json(args.network.read_text())
        return {"family": "file", "path": str(args.network)}, nw.from_file(net), net
    raise UsageError("choose a network: --lattice D, --tree, --path N, --k3 or --network FILE")


def _write_csv(args, name: str, text: str, files: list) -> None:
    if args.out_dir is None:
        return
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / name
    path.write_text(text)
    files.append(str(path))


# commands --------------------------------------------------------------------

def cmd_resistance(args) -> tuple[dict, bool]:
    desc, ex, finite = _source(args)
    x, y = args.pair
    files: list[str] = []
    inputs = {"network": desc, "pair": [x, y]}
    if args.depths is None:
        if finite is None:
            raise UsageError("--depths is required for infinite families")
        r = free_resistance(finite, finite.index(x), finite.index(y))
        return {"inputs": inputs, "outputs": {"resistance": _num(r, EXACT_TOL)},
                "provenance": {"solver": "dense Cholesky"}}, True
    inputs["depths"] = args.depths
    br = resistance_bracket(ex, x, y, args.depths, threads=args.threads)
    _write_csv(args, "resistance_bracket.csv", br.to_csv(), files)
    rows = [{"depth": k, "wired": _num(w, EXACT_TOL), "free": _num(f, EXACT_TOL),
             "gap": _num(f - w, EXACT_TOL)}
            for k, w, f in zip(br.depths, br.wired_values, br.free_values)]
    out = {"bracket": rows,
           "wired_limit_lower": _num(br.wired_values[-1], BRACKET_REL_TOL, br.converged),
           "free_limit_upper": _num(br.free_values[-1], BRACKET_REL_TOL, br.converged),
           "monotone": br.monotone, "closed": br.converged, "notes": br.notes}
    if args.gap is not None:
        bound = spec.gap_resistance_bound(args.gap)
        out["gap_bound"] = {"gamma": _num(args.gap, 0.0), "two_over_gamma": _num(bound, 0.0),
                            "wired_within_bound": bool(max(br.wired_values) <= bound)}
    prov = {"rel_tol": br.rel_tol, "depths": br.depths, "solver": "dense Cholesky / CG",
            "csv": files}
    return {"inputs": inputs, "outputs": out, "provenance": prov}, True


def cmd_spectral(args) -> tuple[dict, bool]:
    desc, ex, finite = _source(args)
    files: list[str] = []
    inputs = {"network": desc}
    if args.measure is not None:
        kind, label = args.measure
        if kind != "delta":
            raise UsageError("only 'delta LABEL' measures are supported")
        if ex is not None and finite is None:
            if args.depth is None:
                raise UsageError("--measure needs --depth on infinite families")
            net = ex.wired(args.depth)
            inputs["depth"] = args.depth
        else:
            net = finite if finite.ground is not None else finite.with_ground(finite.n - 1)
        gs = GroundedSystem(net)
        xi = np.zeros(gs.size)
        xi[gs.position(net.index(label))] = 1.0
        mu = spec.spectral_measure(gs, xi)
        _write_csv(args, "spectral_measure.csv", mu.to_csv(), files)
        inputs["measure"] = ["delta", label]
        out = {"atoms": [{"lambda": _num(a, EXACT_TOL), "mass": _num(m, EXACT_TOL)}
                         for a, m in mu.atoms],
               "total": _num(mu.total, EXACT_TOL),
               "spectral_resistance_to_ground": _num(mu.integrate(lambda t: 1.0 / t), EXACT_TOL)}
        return {"inputs": inputs, "outputs": out,
                "provenance": {"eigensolver": "dense symmetric", "merge_tol": 1e-10,
                               "ground": net.label(net.ground), "csv": files}}, True
    if ex is None:
        raise UsageError("gap studies need an infinite family or a network file")
    if args.depths is None:
        raise UsageError("--depths is required")
    inputs["depths"] = args.depths
    study = spec.dirichlet_gap(ex, args.depths, seed=args.seed)
    _write_csv(args, "dirichlet_gap.csv", study.to_csv(), files)
    rows = [{"depth": k, "lambda_min": _num(v, 1e-10, r <= 1e-8 * max(1.0, v) or r < 1e-8),
             "residual": r} for k, v, r in zip(study.depths, study.values, study.residuals)]
    gamma = study.upper_estimate
    out = {"gap_sequence": rows, "monotone": study.monotone,
           "gap_upper_estimate": _num(gamma, 1e-10, True)}
    if gamma > 0:
        out["two_over_gamma"] = _num(spec.gap_resistance_bound(gamma), 1e-10, True)
    return {"inputs": inputs, "outputs": out,
            "provenance": {"eigensolver": "Lanczos, full reorthogonalization",
                           "tol": 1e-10, "seed": args.seed, "csv": files}}, True


def cmd_lattice(args) -> tuple[dict, bool]:
    d = args.d
    q = lat.TorusQuadrature(d, nodes=args.nodes) if args.nodes else None
    inputs = {"d": d}
    if args.resistance is not None:
        x, y = args.resistance
        rep = lat.lattice_resistance(d, x, y, q, strict=False)
        inputs.update(operation="resistance", points=[x, y])
    elif args.dipole is not None:
        x, y = args.dipole
        rep = lat.lattice_dipole_value(d, x, y, q, strict=False, anchored=args.anchored)
        inputs.update(operation="dipole", points=[x, y], anchored=args.anchored)
    elif args.monopole is not None:
        rep = lat.lattice_monopole_value(d, args.monopole, q, strict=False)
        inputs.update(operation="monopole", points=[args.monopole])
    elif args.transience:
        t = lat.transience_probe(d)
        inputs.update(operation="transience")
        return {"inputs": inputs, "outputs": t.to_dict(),
                "provenance": {"grids": t.grids}}, True
    elif args.ell2 is not None:
        e = lat.ell2_membership_probe(args.ell2, d)
        inputs.update(operation="ell2", kind=args.ell2)
        return {"inputs": inputs, "outputs": e.to_dict(),
                "provenance": {"radii": e.radii, "method": "heat kernel"}}, True
    else:
        raise UsageError("choose one of --resistance, --dipole, --monopole, --transience, --ell2")
    out = rep.to_dict()
    return {"inputs": inputs,
            "outputs": {"value": _num(rep.value, rep.tol, rep.converged),
                        "discrepancy_notes": out["discrepancy_notes"]},
            "provenance": {"grid": rep.grid, "refinements": out["refinements"],
                           "tol": rep.tol}}, rep.converged


def cmd_walk(args) -> tuple[dict, bool]:
    desc, ex, finite = _source(args)
    o, x = args.pair
    inputs = {"network": desc, "pair": [o, x], "episodes": args.episodes, "seed": args.seed,
              "step_cap": args.step_cap}
    absorbing = ()
    if finite is None:
        if args.depth is None:
            raise UsageError("--depth is required for infinite families")
        net = ex.wired(args.depth)
        absorbing = (net.ground,)
        inputs["depth"] = args.depth
    else:
        net = finite
    oi, xi = net.index(o), net.index(x)
    exact = walk.hitting_probability_exact(net, oi, xi, absorbing)
    est = walk.hitting_probability_mc(net, oi, xi, args.episodes, args.step_cap, args.seed,
                                      absorbing, threads=args.threads)
    # the resistance identity uses the unkilled walk, omega being an ordinary vertex
    plain = walk.hitting_probability_exact(net, oi, xi) if absorbing else exact
    resist = 1.0 / (net.conductance(oi) * plain)
    out = {"exact": _num(exact, EXACT_TOL),
           "monte_carlo": {**est.to_dict(), "covers_exact_3sigma": est.covers(exact)},
           "resistance_from_walk": _num(resist, EXACT_TOL),
           "resistance_direct": _num(free_resistance(net, oi, xi), EXACT_TOL)}
    if absorbing:
        out["note"] = "omega is absorbing: escape counted as failure"
    return {"inputs": inputs, "outputs": out,
            "provenance": {"rng": "Philox keyed by (seed, chunk)",
                           "chunk": walk.CHUNK_EPISODES}}, True


def cmd_verify(args) -> tuple[dict, bool]:
    mods = args.module or None
    for m in mods or ():
        if m not in checks.MODULES:
            raise UsageError(f"unknown module {m!r}; choose from {', '.join(checks.MODULES)}")
    results = checks.run(mods, fault=args.fault)
    ok = all(r.passed for r in results)
    return {"inputs": {"modules": mods or list(checks.MODULES), "fault": args.fault},
            "outputs": {"passed": ok, "checks": [r.to_dict() for r in results],
                        "failed": sum(not r.passed for r in results)},
            "provenance": {"fixtures": "random connected networks n=30, seeds 0..5"}}, ok


def cmd_generate(args) -> tuple[dict, bool]:
    desc, ex, finite = _source(args)
    if finite is not None and args.network is None:
        net = finite
    else:
        if args.depth is None:
            raise UsageError("--depth is required")
        net = ex.wired(args.depth) if args.wired else ex.truncation(args.depth)
    # the network file format itself, ready for --network
    return {"raw": net.to_dict()}, True


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: RESNET_THREADS or 1)")
    common.add_argument("--out-dir", type=Path, default=None, help="directory for CSV side files")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("resistance", parents=[common], help="free/wired resistance bracket")
    _add_source(r)
    r.add_argument("--pair", nargs=2, metavar=("X", "Y"), required=True)
    r.add_argument("--depths", type=_ints)
    r.add_argument("--gap", type=float, help="gap estimate for the 2/gamma annotation")
    r.set_defaults(func=cmd_resistance)

    s = sub.add_parser("spectral", parents=[common], help="Dirichlet gaps and spectral measures")
    _add_source(s)
    s.add_argument("--depths", type=_ints)
    s.add_argument("--depth", type=int)
    s.add_argument("--measure", nargs=2, metavar=("KIND", "LABEL"))
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_spectral)

    lt = sub.add_parser("lattice", parents=[common], help="torus integrals on Z^d")
    lt.add_argument("--d", type=int, required=True)
    ops = lt.add_mutually_exclusive_group(required=True)
    ops.add_argument("--resistance", nargs=2, type=_ints, metavar=("X", "Y"))
    ops.add_argument("--dipole", nargs=2, type=_ints, metavar=("X", "Y"))
    ops.add_argument("--monopole", type=_ints, metavar="X")
    ops.add_argument("--transience", action="store_true")
    ops.add_argument("--ell2", choices=("dipole", "monopole"))
    lt.add_argument("--anchored", action="store_true",
                    help="dipole representative vanishing at the origin")
    lt.add_argument("--nodes", type=int, help="finest grid size per axis")
    lt.set_defaults(func=cmd_lattice)

    w = sub.add_parser("walk", parents=[common], help="escape probabilities, exact and simulated")
    _add_source(w)
    w.add_argument("--pair", nargs=2, metavar=("O", "X"), required=True)
    w.add_argument("--episodes", type=int, default=100_000)
    w.add_argument("--step-cap", type=int, default=10_000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--depth", type=int)
    w.set_defaults(func=cmd_walk)

    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--module", action="append", help="restrict to a module (repeatable)")
    v.add_argument("--fault", choices=("perturbed-conductance",), default=None,
                   help="inject a deliberate fault")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("generate", parents=[common], help="emit network JSON")
    _add_source(g)
    g.add_argument("--depth", type=int)
    g.add_argument("--wired", action="store_true")
    g.set_defaults(func=cmd_generate)
    return p


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None:
        os.environ["RESNET_THREADS"] = str(args.threads)
    start = time.perf_counter()
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    head = {"command": argv, "version": __version__}
    try:
        body, ok = args.func(args)
        if "raw" in body:
            _emit(body["raw"])
            return 0
        code = 0 if ok else 1
    except UsageError as exc:
        sys.stderr.write(f"resnet: error: {exc}\n")
        return 2
    except (ResnetError, ValueError) as exc:
        body = {"error": {"type": type(exc).__name__, "message": str(exc).strip("'\"")}}
        code = 1
    report = {**head, **body, "status": "ok" if code == 0 else "failed",
              "timestamp": {"utc": stamp, "wall_seconds": round(time.perf_counter() - start, 3)}}
    _emit(report)
    return code


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
