"""Command line interface: kansa-sphere <command> [options]."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .kansa import assemble_kansa, gram_diagnostics, solve_least_squares
from .kernels import helmholtz_operator, kernel_from_config
from .norming import build_norming_set, norming_check
from .sphere_geom import fibonacci_points, metrics, quadrature_rule, read_points, write_points
from .thinning import solve_thinned, thin

log = logging.getLogger("kansa_sphere")


def load_config(path: str | None) -> dict:
    cfg = json.loads(Path(path).read_text()) if path else {}
    return harness.merged_config(cfg)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _setup(args):
    """Centers, test set, kernel, operator and problem from the config and flags."""
    cfg = load_config(args.config)
    d = int(cfg["d"])
    X = read_points(args.centers, d) if args.centers else fibonacci_points(args.n or cfg["ladder"][0], d)
    if args.tests:
        Y = read_points(args.tests, d)
    else:
        Y = build_norming_set(X, float(cfg["sigma"]), int(cfg["candidate_density"]),
                              seed_index=args.seed)
    kernel = kernel_from_config(cfg["kernel"], d)
    op = helmholtz_operator(float(cfg["operator"]["c"]), d)
    return cfg, X, Y, kernel, op


def cmd_points(args) -> int:
    cfg = load_config(args.config)
    d = int(cfg["d"])
    X = fibonacci_points(args.n, d)
    if args.sigma is not None:
        X = build_norming_set(X, args.sigma, int(cfg["candidate_density"]), seed_index=args.seed)
    h, q, rho = metrics(X, int(cfg["probe_density"]))
    if args.format == "json":
        _write(json.dumps({"n": len(X), "d": d, "h": h, "q": q, "rho": rho,
                           "points": X.points.tolist()}) + "\n", args.out)
    else:
        comment = f"n={len(X)} h={h:.17g} q={q:.17g} rho={rho:.17g}"
        if args.out:
            write_points(args.out, X, comment)
        else:
            sys.stdout.write(f"# {comment}\n")
            for p in X.points:
                sys.stdout.write(" ".join(f"{v:.17g}" for v in p) + "\n")
    return 0


def cmd_kernel_table(args) -> int:
    cfg = load_config(args.config)
    d = int(cfg["d"])
    kernel = kernel_from_config(cfg["kernel"], d)
    op = helmholtz_operator(float(cfg["operator"]["c"]), d)
    ell = np.arange(args.lmax + 1)
    z = kernel.coeff(ell)
    m = op(ell)
    if args.format == "json":
        _write(json.dumps({"kernel": kernel.name, "operator": op.name, "order": kernel.order,
                           "rows": [[int(l), float(a), float(b)] for l, a, b in zip(ell, z, m * z)]})
               + "\n", args.out)
    else:
        lines = ["l,z_l,m_l_z_l"] + [f"{l},{a:.17g},{b:.17g}" for l, a, b in zip(ell, z, m * z)]
        _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_assemble(args) -> int:
    _, X, Y, kernel, op = _setup(args)
    sysm = assemble_kansa(X, Y, kernel, op, args.basis)
    M, N = sysm.K.shape
    lines = ["M,N", f"{M},{N}"]
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in sysm.K)
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_solve_ls(args) -> int:
    cfg, X, Y, kernel, op = _setup(args)
    problem = harness.problem_from_config(cfg)
    rule = quadrature_rule(X.d, int(cfg["quadrature_degree"]))
    sysm = assemble_kansa(X, Y, kernel, op, args.basis)
    rep = solve_least_squares(sysm, problem.f(Y.points), reference=problem.u_true, rule=rule)
    out = {"N": len(X), "M": len(Y), **rep.as_dict(), **gram_diagnostics(sysm)}
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_solve_thin(args) -> int:
    cfg, X, Y, kernel, op = _setup(args)
    problem = harness.problem_from_config(cfg)
    rule = quadrature_rule(X.d, int(cfg["quadrature_degree"]))
    sysm = assemble_kansa(X, Y, kernel, op, args.basis)
    ts = thin(sysm, float(cfg["f_param"]))
    rep = solve_thinned(ts, problem.f(ts.Y_tilde.points), reference=problem.u_true, rule=rule)
    out = {"N": len(X), "M": len(Y), "selected": [int(i) for i in ts.rows],
           "sigma_min_K_red": ts.sigma_min, **rep.as_dict()}
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_check_norming(args) -> int:
    _, X, Y, kernel, op = _setup(args)
    rep = norming_check(Y, X, kernel, op, trials=args.trials, seed=args.seed)
    _write(json.dumps(rep.as_dict(), indent=2) + "\n", args.out)
    return 0


def cmd_convergence(args) -> int:
    cfg = load_config(args.config)
    result = harness.convergence_study(cfg, seed=args.seed)
    fmt = args.format or "csv"
    if args.out:
        harness.emit(result, fmt, args.out)
        if fmt != "svg" and not args.no_plot:
            harness.emit(result, "svg", Path(args.out).with_suffix(".svg"))
    elif fmt == "csv":
        sys.stdout.write(harness.to_csv(result))
    elif fmt == "json":
        sys.stdout.write(harness.to_json(result) + "\n")
    else:
        raise ValueError("svg output needs --out")
    for name, (order, err) in result.fits.items():
        log.info("fitted %s: %.3f +- %.3f", name, order, err)
    return 0 if all(r.status == "ok" for r in result.rows) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=["csv", "json", "svg"])
    common.add_argument("-v", "--verbose", action="store_true")

    systems = argparse.ArgumentParser(add_help=False)
    systems.add_argument("--n", type=int, help="number of Fibonacci centers")
    systems.add_argument("--centers", help="point file with the centers X")
    systems.add_argument("--tests", help="point file with the test set Y")
    systems.add_argument("--basis", choices=["lagrange", "standard"], default="lagrange")

    p = argparse.ArgumentParser(prog="kansa-sphere",
                                description="Kernel collocation solvers for elliptic problems on spheres.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("points", parents=[common], help="Fibonacci centers or a norming net")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--sigma", type=float, help="build a norming net with epsilon = h/sigma")
    sp.set_defaults(func=cmd_points)

    sp = sub.add_parser("kernel-table", parents=[common], help="kernel and applied-kernel coefficients")
    sp.add_argument("--lmax", type=int, default=20)
    sp.set_defaults(func=cmd_kernel_table)

    for name, func, text in [("assemble", cmd_assemble, "export the Kansa matrix as CSV"),
                             ("solve-ls", cmd_solve_ls, "least-squares Kansa solve"),
                             ("solve-thin", cmd_solve_thin, "RRQR-thinned square solve")]:
        sp = sub.add_parser(name, parents=[common, systems], help=text)
        sp.set_defaults(func=func)

    sp = sub.add_parser("check-norming", parents=[common, systems], help="norming constant report")
    sp.add_argument("--trials", type=int, default=200)
    sp.set_defaults(func=cmd_check_norming)

    sp = sub.add_parser("convergence", parents=[common], help="convergence ladder")
    sp.add_argument("--no-plot", action="store_true", help="skip the svg written next to --out")
    sp.set_defaults(func=cmd_convergence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
