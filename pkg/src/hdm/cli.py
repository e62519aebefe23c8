"""Command line: ``hdm run``, ``hdm diagnose`` and ``hdm verify-tables``.

Exit codes: 0 on success, 2 when ``verify-tables`` finds a mismatch, 1 on
any error (including bad arguments, so that 2 only ever means a mismatch).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .study import ConfigError, StudyConfig, read_config, report_lines, run_convergence_study, write_csv

log = logging.getLogger("hdm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _study_args(p):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--problem", choices=["ns", "vk"])
    p.add_argument("--method", choices=["morley", "adini", "gr"])
    p.add_argument("--domain", choices=["square", "lshape"])
    p.add_argument("--pattern", choices=["diagonal", "crisscross", "rectangles"])
    p.add_argument("--n0", type=int, help="grid squares per unit length on the coarsest mesh")
    p.add_argument("--levels", type=int)
    p.add_argument("--nu", type=float, help="viscosity (ns only)")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress per level")
    ap = _Parser(prog="hdm", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common], help="convergence study, written as CSV")
    _study_args(run)
    run.add_argument("--newton-tol", type=float)
    run.add_argument("--quad-degree", type=int)
    run.add_argument("--diagnostics", action="store_true", default=None)
    run.add_argument("--out", help="CSV output path")

    dia = sub.add_parser("diagnose", parents=[common], help="accuracy measures on a mesh sequence (no solve)")
    _study_args(dia)
    dia.add_argument("--samples", type=int, default=200)
    dia.add_argument("--out")

    ver = sub.add_parser("verify-tables", parents=[common], help="rerun the reference studies and compare")
    ver.add_argument("--tables", default="1,2,3,4,5", help="comma-separated table numbers")
    ver.add_argument("--out-dir", help="write each study's CSV here")
    return ap


def _config(args, extra=()):
    base = read_config(args.config) if args.config else StudyConfig()
    vals = {f: getattr(base, f) for f in base.__dataclass_fields__}
    # pattern/n0 defaults depend on method and domain; recompute unless given
    if not args.config:
        vals["pattern"], vals["n0"] = "", 0
    for name in ("problem", "method", "domain", "pattern", "n0", "levels", "nu") + tuple(extra):
        v = getattr(args, name, None)
        if v is not None:
            vals[name] = v
    if getattr(args, "newton_tol", None) is not None:
        vals["newton_tol"] = args.newton_tol
    return StudyConfig(**vals)


def _progress(lev, h, nu, errs, dt):
    hess = ", ".join(f"{e['err_hess']:.4e}" for e in errs)
    log.info("level %d  h=%.6g  nu=%d  err_hess=[%s]  %.2fs", lev, h, nu, hess, dt)


def cmd_run(args) -> int:
    cfg = _config(args, ("quad_degree", "diagnostics", "out"))
    rep = run_convergence_study(cfg, progress=_progress)
    print("\n".join(report_lines(rep)))
    if rep.diagnostics:
        from .diagnostics import diagnostics_lines
        print("\n" + "\n".join(diagnostics_lines(rep.diagnostics)))
    if cfg.out:
        write_csv(rep, cfg.out)
        log.info("wrote %s", cfg.out)
    return 0


def cmd_diagnose(args) -> int:
    from .core import build_hd
    from .diagnostics import diagnostics_lines, run_diagnostics
    from .exact import get_case
    from .mesh import mesh_sequence
    from .study import DOMAIN_NAMES

    cfg = _config(args)
    case = get_case(cfg.case_name, cfg.nu)
    reps = []
    for m in mesh_sequence(DOMAIN_NAMES[cfg.domain], cfg.pattern, cfg.n0, cfg.levels):
        reps.append(run_diagnostics(build_hd(m, cfg.method), case=case, n_samples=args.samples))
        log.info("h=%.6g done", m.h)
    lines = diagnostics_lines(reps)
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def cmd_verify(args) -> int:
    from . import tables

    try:
        ids = [int(t) for t in args.tables.split(",") if t.strip()]
        for t in ids:
            tables.reference(t)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad --tables value {args.tables!r}: {exc}") from exc
    failed = 0
    for t in ids:
        cfg = tables.study_config(t)
        t0 = time.perf_counter()
        rep = run_convergence_study(cfg, progress=_progress)
        if args.out_dir:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
            write_csv(rep, Path(args.out_dir) / f"table{t}.csv")
        print(f"Table {t} ({cfg.method}/{cfg.problem}, {cfg.domain}, {time.perf_counter() - t0:.1f} s)")
        for chk in tables.verify(t, rep):
            print("  " + chk.line())
            failed += not chk.passed
    print("all checks passed" if not failed else f"{failed} check(s) failed")
    return 2 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "diagnose": cmd_diagnose, "verify-tables": cmd_verify}[args.command]
    try:
        return handler(args)
    except Exception as exc:          # any failure is a runtime error for the shell
        print(f"hdm: error: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
