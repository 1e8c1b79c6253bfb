"""Command line entry point.

Subcommands: ``profile``, ``rasterize``, ``solve``, ``analyze``,
``scenario`` and ``sweep``.  Exit status: 0 success, 1 verdict mismatch,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from . import config as cfg
from . import scenarios as sc_mod
from .errors import ConfigError, HopfLabError, NumericalError
from .geometry import GraphFunction, rasterize
from .profile import cone_fit, dini_integral, dyadic_sequence
from .solver import ScalarField, boundary_data, check_max_principle, discretize, solve_dirichlet

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("hopflab")


def _csv_rows(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _scenario_from_args(args) -> sc_mod.Scenario:
    if getattr(args, "config", None):
        s = cfg.to_scenario(cfg.load(args.config))
    elif getattr(args, "scenario", None):
        s = sc_mod.by_id(args.scenario)
    else:
        raise ConfigError("give --config FILE or --scenario ID")
    if getattr(args, "coeffs", None):
        s = s.with_(coeffs=sc_mod.CHECKER if args.coeffs == "checkerboard" else {"kind": args.coeffs})
    return s


def _out_dir(args, tree=None) -> Path | None:
    d = getattr(args, "out", None)
    if d is None and tree is not None:
        d = cfg.output_options(tree)["dir"]
    return None if d is None else Path(d)


# ---------------------------------------------------------------------------
# subcommands


def cmd_profile(args) -> int:
    if args.config:
        tree = cfg.load(args.config)
        spec = tree["profile"]
    else:
        spec = {k: v for k, v in (("kind", args.kind), ("c", args.c), ("p", args.p),
                                  ("q", args.q), ("K", args.K), ("r0", args.r0),
                                  ("table", args.table)) if v is not None}
    prof = sc_mod.build_profile(spec)
    res = dini_integral(prof, abs_tol=args.abs_tol)
    seq = dyadic_sequence(prof, args.k_max)
    print(f"profile {prof.describe()}")
    print(f"dini {res.summary()}")
    print(f"dyadic_sum {res.dyadic_sum!r}")
    if res.convergent and res.value > 0:
        print(f"sandwich {res.value / res.dyadic_sum!r}")
    print(f"value_cap {prof.satisfies_value_cap}")
    if args.K0 is not None:
        fit = cone_fit(prof, args.K0)
        print(f"cone_fit K0={fit.K0!r} k0={fit.k0} R0={fit.R0!r}")
    if args.csv:
        rows = zip(range(seq.r_k.size), seq.r_k, seq.h_k, seq.theta_k, seq.partial_sums)
        _emit(_csv_rows(("k", "r_k", "h_k", "theta_k", "partial_sum"), rows), Path(args.csv))
    return EXIT_OK


def cmd_rasterize(args) -> int:
    s = _scenario_from_args(args)
    h = args.h or s.h
    dom = rasterize(sc_mod.build_body(s.body, sc_mod.build_profile(s.profile)), h)
    counts = dom.counts()
    print(f"{s.id} h={h:g} shape={dom.shape[0]}x{dom.shape[1]} dropped_thin={dom.n_dropped} "
          + " ".join(f"{k}={v}" for k, v in counts.items()))
    out = _out_dir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        dom.to_pgm(out / "mask.pgm")
        dom.to_csv(out / "mask.csv")
    return EXIT_OK


def cmd_solve(args) -> int:
    tree = cfg.load(args.config) if args.config else None
    s = _scenario_from_args(args)
    h = args.h or s.h
    dom = rasterize(sc_mod.build_body(s.body, sc_mod.build_profile(s.profile)), h)
    fld = sc_mod._field_on(s.coeffs, dom)
    st = discretize(fld, dom, require_monotone=not args.allow_nonmonotone)
    data = boundary_data(dom, sc_mod.build_data(s.data), gamma_zero=not args.gamma_data)
    u = solve_dirichlet(st, data, rel_tol=args.rel_tol, method=args.method)
    mp = check_max_principle(u)
    print(f"{s.id} h={h:g} unknowns={st.size} method={u.method} iterations={u.iterations} "
          f"residual={u.residual_norm:.3e} max_principle={'PASS' if mp.holds else 'FAIL'} "
          f"dropped_thin={dom.n_dropped}")
    out = _out_dir(args, tree)
    if out is not None:
        opts = cfg.output_options(tree or {})
        out.mkdir(parents=True, exist_ok=True)
        u.save(out / "u.npz")
        if opts["csv"]:
            u.to_csv(out / "u.csv")
        if opts["plotdata"] or args.plotdata:
            u.to_gnuplot(out / "u.dat")
        if opts["masks"]:
            dom.to_pgm(out / "mask.pgm")
    return EXIT_OK if mp.holds else EXIT_NUMERICAL


def _parse_dir(text: str):
    return cfg._vector(2)(text)


def cmd_analyze(args) -> int:
    u = ScalarField.load(args.field)
    out = _out_dir(args)
    reports = {}
    for k, l in enumerate(args.hopf or ()):
        reports[f"hopf{k}"] = an.hopf_quotient(u, _parse_dir(l), decades=args.decades)
    if args.m_r0 is not None:
        reports["m"] = an.m_ratio(u, args.m_r0)
    if args.harnack is not None:
        reports["harnack"] = an.harnack_ratio(u, args.harnack, mu=args.mu)
    if args.bauman is not None:
        phi = GraphFunction(args.graph, args.slope)
        v = (lambda p: p[..., 1] - phi(p[..., 0])) if args.v == "gap" else ScalarField.load(args.v)
        reports["bauman"] = an.bauman_quotient(u, v, args.bauman, phi=phi)
    if not reports:
        raise ConfigError("nothing to analyze: give --hopf, --m-r0, --harnack or --bauman")
    key = Path(args.field).stem
    for name, r in reports.items():
        print(r.summary(key))
        if out is not None:
            _emit(r.csv_text(), out / f"{name}.csv")
    return EXIT_OK


def _write_bundle(b, out: Path) -> None:
    base = out / b.scenario
    base.mkdir(parents=True, exist_ok=True)
    for name, r in b.reports.items():
        if hasattr(r, "csv_text"):
            (base / f"{name}.csv").write_text(r.csv_text())
    rows = [(c.name, c.expected, c.observed, "PASS" if c.passed else "FAIL") for c in b.checks]
    (base / "checks.csv").write_text(_csv_rows(("check", "expected", "observed", "status"), rows))
    meta = [(k, v) for k, v in sorted(b.metadata.items())]
    (base / "metadata.csv").write_text(_csv_rows(("key", "value"), meta))


def cmd_scenario(args) -> int:
    if args.list:
        for s in sc_mod.catalog():
            print(f"{s.id}\t{s.kind}\t{s.title}")
        return EXIT_OK
    if args.id is None:
        raise ConfigError("give a scenario id, 'all', or --list")
    scs = sc_mod.catalog() if args.id == "all" else [sc_mod.by_id(args.id)]
    if args.coeffs:
        c = sc_mod.CHECKER if args.coeffs == "checkerboard" else {"kind": args.coeffs}
        scs = [s.with_(coeffs=c) for s in scs]
    bundles = sc_mod.run_many(scs, args.h)
    out = _out_dir(args)
    for b in bundles:
        for line in b.summary_lines():
            print(line)
        print(b.verdict_line())
        if out is not None:
            _write_bundle(b, out)
    return EXIT_OK if all(b.passed for b in bundles) else EXIT_MISMATCH


def cmd_sweep(args) -> int:
    s = _scenario_from_args(args)
    if args.epsilons:
        s = s.with_(probes=dict(s.probes, epsilons=cfg._lengths(args.epsilons)))
        levels = (args.h or s.h,)
    else:
        levels = cfg._lengths(args.h_levels) if args.h_levels else (s.levels or (s.h,))
    rows = []
    ok = True
    for h in levels:
        b = sc_mod.run(s, h)
        ok &= b.passed
        for name, r in sorted(b.reports.items()):
            if hasattr(r, "summary"):
                rows.append((h, name, r.summary(s.id)))
        for c in b.checks:
            rows.append((h, c.name, f"{c.observed} {'PASS' if c.passed else 'FAIL'}"))
    text = _csv_rows(("h", "quantity", "value"), rows)
    out = _out_dir(args)
    _emit(text, None if out is None else out / f"sweep_{s.id}.csv")
    return EXIT_OK if ok else EXIT_MISMATCH


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hopflab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hopflab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("profile", help="Dini report for a profile")
    q.add_argument("--config")
    q.add_argument("--kind", default="power",
                   choices=("zero", "cone", "power", "powerlog", "tabulated"))
    for name in ("c", "p", "q", "K", "r0"):
        q.add_argument(f"--{name}", type=cfg.parse_length)
    q.add_argument("--table", help="CSV with columns r, psi")
    q.add_argument("--K0", type=float, help="also fit a cone of this slope")
    q.add_argument("--abs-tol", type=float, default=1e-8)
    q.add_argument("--k-max", type=int, default=64)
    q.add_argument("--csv", help="write the dyadic sequence here")
    q.set_defaults(func=cmd_profile)

    def scenario_source(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--config", help="key = value run file")
        g.add_argument("--scenario", help="catalog scenario id")
        sp.add_argument("--h", type=cfg.parse_length, help="override grid spacing")
        sp.add_argument("--coeffs", choices=("identity", "checkerboard", "rotating"))
        sp.add_argument("--out", help="output directory")

    q = sub.add_parser("rasterize", help="classify grid nodes and write masks")
    scenario_source(q)
    q.set_defaults(func=cmd_rasterize)

    q = sub.add_parser("solve", help="one Dirichlet solve")
    scenario_source(q)
    q.add_argument("--method", default="auto", choices=("auto", "direct", "amg", "ssor"))
    q.add_argument("--rel-tol", type=float, default=1e-10)
    q.add_argument("--plotdata", action="store_true", help="also write gnuplot blocks")
    q.add_argument("--gamma-data", action="store_true",
                   help="use the data function on the vanishing portion instead of 0")
    q.add_argument("--allow-nonmonotone", action="store_true")
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("analyze", help="boundary quantities of a saved field")
    q.add_argument("field", help="u.npz written by 'solve'")
    q.add_argument("--hopf", action="append", metavar="L1,L2", help="probe direction")
    q.add_argument("--decades", type=int, default=2)
    q.add_argument("--m-r0", type=cfg.parse_length)
    q.add_argument("--harnack", type=cfg.parse_length, metavar="DELTA")
    q.add_argument("--mu", type=float)
    q.add_argument("--bauman", type=cfg.parse_length, metavar="R")
    q.add_argument("--v", default="gap", help="'gap' (x2 - phi) or a saved field")
    q.add_argument("--graph", default="flat", choices=("flat", "vee", "wave"))
    q.add_argument("--slope", type=float, default=0.0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_analyze)

    q = sub.add_parser("scenario", help="run catalog scenarios")
    q.add_argument("id", nargs="?", help="scenario id or 'all'")
    q.add_argument("--list", action="store_true")
    q.add_argument("--h", type=cfg.parse_length)
    q.add_argument("--coeffs", choices=("identity", "checkerboard", "rotating"))
    q.add_argument("--out")
    q.set_defaults(func=cmd_scenario)

    q = sub.add_parser("sweep", help="h- or epsilon-refinement series")
    scenario_source(q)
    q.add_argument("--h-levels", help="comma list, e.g. 2^-6,2^-7,2^-8")
    q.add_argument("--epsilons", help="comma list of mollification radii")
    q.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, HopfLabError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
