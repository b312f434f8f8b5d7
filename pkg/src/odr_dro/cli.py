"""Command-line interface.

Subcommands:
    gen      write a seeded instance to JSON
    solve    run one method on one instance, print a report as JSON
    bench    run a size x seed x method grid, write the results CSV
    report   render a CSV as an aligned table and optional SVG figures
    verify   run the built-in property checks

A JSON config file can pre-populate ``bench`` options; explicit flags win.
Exit codes: 0 success, 1 solver failure or invalid configuration, 2 certified
bound on the wrong side of an exact value (the correctness tripwire).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, admm, apps, bench, fixtures, model, plots, reform
from .errors import InputError, SolverError


def _add_instance_args(p):
    p.add_argument("--instance", help="path to an instance JSON file")
    p.add_argument("--app", choices=["newsvendor", "cvar", "cvar-demo"],
                   help="generate/solve a named instance family")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma1", type=float, default=apps.DEFAULT_GAMMA1)
    p.add_argument("--gamma2", type=float, default=apps.DEFAULT_GAMMA2)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--nonneg-demand", action="store_true",
                   help="newsvendor: add a nonnegative-demand support box")


def _make_instance(args) -> model.DroInstance:
    if args.instance:
        return model.load_instance(args.instance)
    if args.app == "newsvendor":
        return apps.gen_newsvendor(args.m, args.seed, gamma1=args.gamma1,
                                   gamma2=args.gamma2,
                                   nonneg_demand=args.nonneg_demand)
    if args.app == "cvar":
        return apps.gen_cvar(args.m, args.seed, alpha=args.alpha,
                             gamma1=args.gamma1, gamma2=args.gamma2)
    if args.app == "cvar-demo":
        return fixtures.cvar_box_demo()
    raise InputError("either --instance or --app is required")


def _parse_method(token: str) -> bench.RunSpec:
    """Method token with optional width suffix: odr-lb, pca-lb@8, pca-lb@20%."""
    if "@" in token:
        name, width = token.split("@", 1)
        if width.endswith("%"):
            return bench.RunSpec(method=name, m1=float(width[:-1]) / 100.0)
        return bench.RunSpec(method=name, m1=int(width))
    return bench.RunSpec(method=token)


def cmd_gen(args) -> int:
    inst = _make_instance(args)
    diags = model.validate(inst)
    if diags:
        print("\n".join(diags), file=sys.stderr)
        return 1
    model.save_instance(inst, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_solve(args) -> int:
    inst = _make_instance(args)
    spec = _parse_method(args.method)
    if args.m1 is not None:
        spec = bench.RunSpec(method=spec.method, m1=args.m1)
    cfg = admm.AdmmConfig(max_iter=args.admm_iters, rho=args.rho)
    spec = bench.RunSpec(method=spec.method, m1=spec.m1, admm_config=cfg,
                         time_limit=args.time_limit)
    rep = bench.run_method(inst, spec)
    out = {
        "method": rep.method,
        "value": None if not np.isfinite(rep.value) else rep.value,
        "value_text": bench._fmt(rep.value),
        "certified": rep.certified,
        "side": rep.side,
        "iterations": rep.iterations,
        "error": rep.error,
    }
    print(json.dumps(out, indent=1))
    return 0 if rep.error is None else 1


def cmd_bench(args) -> int:
    cfgfile = {}
    if args.config:
        with open(args.config) as fh:
            cfgfile = json.load(fh)

    def opt(name, default):
        flag = getattr(args, name, None)
        if flag not in (None, [], False):
            return flag
        return cfgfile.get(name, default)

    app = opt("app", "newsvendor")
    sizes = opt("sizes", "10")
    if isinstance(sizes, str):
        sizes = [int(s) for s in sizes.split(",")]
    n_seeds = int(opt("seeds", 1))
    methods = opt("methods", "full,odr-lb,odr-ub")
    if isinstance(methods, str):
        methods = methods.split(",")
    admm_iters = int(opt("admm_iters", 120))
    time_limit = float(opt("time_limit", 300.0))
    out_path = opt("out", "bench.csv")

    cfg = admm.AdmmConfig(max_iter=admm_iters)
    cells = []
    for size in sizes:
        for seed in range(n_seeds):
            gen = apps.gen_newsvendor if app == "newsvendor" else apps.gen_cvar
            inst = gen(size, seed)
            for token in methods:
                spec = _parse_method(token.strip())
                spec = bench.RunSpec(method=spec.method, m1=spec.m1,
                                     admm_config=cfg, time_limit=time_limit)
                cells.append(bench.MatrixCell(size=size, inst_no=seed,
                                              instance=inst, spec=spec))
    try:
        rows = bench.run_matrix(cells, include_times=not args.no_times)
    except bench.SandwichViolation as exc:
        print(f"ABORT: {exc}", file=sys.stderr)
        return 2
    bench.fill_interval_gaps(rows)
    text = bench.rows_to_csv(rows)
    with open(out_path, "w") as fh:
        fh.write(text)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


def cmd_report(args) -> int:
    with open(args.csv) as fh:
        rows = bench.read_csv(fh.read())
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) if rows else len(c)
              for c in bench.CSV_COLUMNS}
    lines = ["  ".join(c.ljust(widths[c]) for c in bench.CSV_COLUMNS)]
    for r in rows:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in bench.CSV_COLUMNS))
    table = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    if args.plots:
        import os
        os.makedirs(args.plots, exist_ok=True)
        plots.plot_gaps(rows, os.path.join(args.plots, "gaps.svg"))
        plots.plot_times(rows, os.path.join(args.plots, "times.svg"))
        print(f"wrote figures to {args.plots}")
    return 0


def cmd_verify(args) -> int:
    checks: list[tuple[str, bool]] = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True))
        except Exception as exc:   # noqa: BLE001 - report any failure
            checks.append((f"{name} ({exc})", False))

    def c_linalg():
        from . import linalg
        rng = np.random.default_rng(0)
        a = rng.standard_normal((6, 6))
        a = a + a.T
        f = linalg.sym_eig(a)
        assert np.linalg.norm(f.u @ np.diag(f.lam) @ f.u.T - a) <= 1e-8 * np.linalg.norm(a)
        corr = linalg.random_correlation(6, 1)
        assert np.allclose(np.diag(corr), 1.0, atol=1e-12)
        assert linalg.min_eigenvalue(corr) >= -1e-10

    def c_conic():
        from .conic import smat, svec
        rng = np.random.default_rng(1)
        a = rng.standard_normal((5, 5))
        a = a + a.T
        assert np.allclose(smat(svec(a)), a, atol=1e-12)
        inst = fixtures.cvar_box_demo()
        val, _ = reform.solve_full(inst)
        assert abs(val - 2.0) <= 1e-3

    def c_procrustes():
        rng = np.random.default_rng(2)
        mat = rng.standard_normal((6, 2))
        b_star = admm.procrustes_update(mat)
        best = np.sum(mat * b_star)
        for _ in range(200):
            b = np.linalg.qr(rng.standard_normal((6, 2)))[0]
            assert np.sum(mat * b) <= best + 1e-9

    def c_sandwich():
        for gen in (apps.gen_newsvendor, apps.gen_cvar):
            inst = gen(6, 0)
            full, _ = reform.solve_full(inst)
            lb = reform.certify_lb(inst, np.eye(6)[:, :2]).value
            slack = 1e-6 * (1 + abs(full))
            assert lb <= full + slack
            rep = admm.run_lb(inst, 2, admm.AdmmConfig(max_iter=15))
            assert rep.certified_bound <= full + slack
            rep = admm.run_ub(inst, 2, admm.AdmmConfig(max_iter=15))
            assert rep.certified_bound >= full - slack

    check("linear algebra kernels", c_linalg)
    check("cone utilities and demo solve", c_conic)
    check("orthogonal map update optimality", c_procrustes)
    check("bound sandwich on seeded instances", c_sandwich)
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="odr-dro",
        description="Moment-robust optimization bounds via optimized "
                    "dimensionality reduction",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded instance JSON")
    _add_instance_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("solve", help="run one method on one instance")
    _add_instance_args(p)
    p.add_argument("--method", required=True)
    p.add_argument("--m1", type=int)
    p.add_argument("--admm-iters", type=int, default=120, dest="admm_iters")
    p.add_argument("--rho", type=float, default=10.0)
    p.add_argument("--time-limit", type=float, default=300.0, dest="time_limit")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark grid to CSV")
    p.add_argument("--config", help="JSON file with defaults for these flags")
    p.add_argument("--app", choices=["newsvendor", "cvar"])
    p.add_argument("--sizes", help="comma-separated sizes, e.g. 10,20,40")
    p.add_argument("--seeds", type=int, help="number of seeded instances per size")
    p.add_argument("--methods", help="comma-separated method[@width] tokens")
    p.add_argument("--admm-iters", type=int, dest="admm_iters")
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.add_argument("--out")
    p.add_argument("--no-times", action="store_true",
                   help="write '-' in the Time column (byte-reproducible runs)")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("report", help="format a results CSV; optionally plot")
    p.add_argument("csv")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--plots", help="directory for SVG figures")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("verify", help="run built-in property checks")
    p.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, SolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
