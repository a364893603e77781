"""``qnb`` command line: measure states, sweep state families, run verification suites.

Exit codes: 0 success, 1 invalid input, 2 convergence failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, bounds, measures
from .errors import ConvergenceError, DegeneracyError, QnbError
from .landscape import OptimizerConfig
from .qstate import isotropic, load_state, werner
from .verify import SUITES, run_suite

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3
ROW_TOL = 1e-7
FAMILIES = {"isotropic": (isotropic, 0.0, 1.0), "werner": (werner, -1.0, 1.0)}
HEADER = "x,f_min,nonbilocal,bound_thm1,bound_thm2"


@dataclass(frozen=True)
class SweepRow:
    """One sweep grid point; ``bound_thm2`` is None when the b marginal is degenerate."""

    x: float
    f_min: float
    nonbilocal: float
    bound_thm1: float
    bound_thm2: float | None
    certified_gaps: tuple = ()

    def cells(self):
        return ",".join(_fmt(v) for v in (self.x, self.f_min, self.nonbilocal,
                                           self.bound_thm1, self.bound_thm2))

    def violations(self, tol=ROW_TOL):
        return self.nonbilocal < self.f_min - tol or self.bound_thm1 < self.nonbilocal - tol


@dataclass
class RunMetadata:
    seed: int
    config: dict
    degeneracy_tol: float
    feasible_set: str
    version: str = __version__
    extra: dict = field(default_factory=dict)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dump(obj):
    return json.dumps(obj, default=_jsonable, sort_keys=True)


def _config(args, seed=None):
    return OptimizerConfig(starts=args.starts, seed=args.seed if seed is None else seed,
                           degeneracy_tol=args.degeneracy_tol, certify_samples=args.certify_samples)


def _result(res):
    return {"value": res.value, "optimizer_report": res.optimizer_report,
            "certified_gap": res.certified_gap}


def cmd_measure(args):
    a = load_state(args.state_a)
    b = load_state(args.state_b) if args.state_b else None
    which = ["fmin", "hsmin", "gd", "nonbilocal"] if args.which == "all" else [args.which]
    if b is None:
        if args.which == "nonbilocal":
            raise QnbError("dim-mismatch: nonbilocal needs --state-b")
        which = [w for w in which if w != "nonbilocal"]
    cfg = _config(args)
    single = {"fmin": ("f_min", measures.f_min), "hsmin": ("hs_min", measures.hs_min),
              "gd": ("geometric_discord_restricted", measures.geometric_discord_restricted)}
    out = {}
    for w in which:
        if w == "nonbilocal":
            out["nonbilocal"] = _result(measures.nonbilocal(a, b, cfg, args.feasible_set))
        else:
            name, fn = single[w]
            out[name] = _result(fn(a, args.side, cfg))
    if b is not None and args.which in ("all", "nonbilocal"):
        out["bound_thm1"] = {"value": bounds.bound_thm1(a, b).bound}
        try:
            out["bound_thm2"] = {"value": bounds.bound_thm2(a, b, args.degeneracy_tol).bound}
        except DegeneracyError:
            out["bound_thm2"] = {"value": "NA"}
    meta = RunMetadata(args.seed, cfg.as_dict(), args.degeneracy_tol, args.feasible_set,
                       extra={"measured_side": args.side})
    print(_dump({"measures": out, "metadata": asdict(meta)}))
    return EXIT_OK


def point_seed(master, index):
    """Per-point seed that depends only on the master seed and grid index."""
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def sweep_point(family, dim, x, seed, cfg_kwargs, feasible_set):
    """One sweep row: ``rho(x)`` paired with itself, f_min measured on side a."""
    rho = FAMILIES[family][0](dim, x)
    cfg = OptimizerConfig(**{**cfg_kwargs, "seed": seed})
    fm = measures.f_min(rho, 0, cfg)
    nb = measures.nonbilocal(rho, rho, cfg, feasible_set)
    b1 = bounds.bound_thm1(rho, rho).bound
    try:
        b2 = bounds.bound_thm2(rho, rho, cfg.degeneracy_tol).bound
    except DegeneracyError:
        b2 = None
    return SweepRow(x, fm.value, nb.value, b1, b2, (fm.certified_gap, nb.certified_gap))


def _fmt(v):
    return "NA" if v is None else f"{v:.12g}"


def cmd_sweep(args):
    _, lo, hi = FAMILIES[args.family]
    if not (lo <= args.x_min <= args.x_max <= hi):
        raise QnbError(f"range: [{args.x_min}, {args.x_max}] outside {args.family} domain [{lo}, {hi}]")
    if args.steps < 1 or args.dim < 2:
        raise QnbError("range: need steps >= 1 and dim >= 2")
    xs = np.linspace(args.x_min, args.x_max, args.steps) if args.steps > 1 else np.array([args.x_min])
    cfg = _config(args)
    kw = cfg.as_dict()
    jobs = [(args.family, args.dim, float(x), point_seed(args.seed, i), kw, args.feasible_set)
            for i, x in enumerate(xs)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(sweep_point, *zip(*jobs)))
    else:
        rows = [sweep_point(*j) for j in jobs]

    meta = RunMetadata(args.seed, kw, args.degeneracy_tol, args.feasible_set,
                       extra={"family": args.family, "dim": args.dim, "x_min": args.x_min,
                              "x_max": args.x_max, "steps": args.steps, "f_min_side": "a",
                              "point_seed": "SeedSequence([seed, index])"})
    lines = ["# " + _dump(asdict(meta)), HEADER]
    bad = []
    for row in rows:
        lines.append(row.cells())
        if row.violations():
            bad.append(row.x)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if bad:
        print(f"row inequalities violated at x = {bad}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(args):
    if args.trials < 1:
        raise QnbError("range: trials must be >= 1")
    status = EXIT_OK
    reports = []
    for name in args.suite.split(","):
        if name not in SUITES:
            raise QnbError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        rep = run_suite(name, args.trials, args.seed)
        reports.append(rep.as_dict())
        if not rep.passed:
            status = EXIT_VERIFY
    meta = RunMetadata(args.seed, {"trials": args.trials}, OptimizerConfig().degeneracy_tol, "general")
    print(_dump({"suites": reports, "metadata": asdict(meta)}))
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="qnb", description="Fidelity-based MIN and nonbilocal measures.")
    p.add_argument("--version", action="version", version=f"qnb {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def optimizer_flags(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--starts", type=int, default=32)
        sp.add_argument("--degeneracy-tol", type=float, default=1e-8)
        sp.add_argument("--certify-samples", type=int, default=20000,
                        help="oracle samples per optimization; 0 disables certification")
        sp.add_argument("--feasible-set", choices=("general", "product"), default="general")

    m = sub.add_parser("measure", help="measures of one state or a pair of states")
    m.add_argument("--state-a", required=True)
    m.add_argument("--state-b")
    m.add_argument("--which", choices=("all", "fmin", "nonbilocal", "hsmin", "gd"), default="all")
    m.add_argument("--side", type=int, default=0, help="measured subsystem for single-state measures")
    optimizer_flags(m)
    m.set_defaults(func=cmd_measure)

    s = sub.add_parser("sweep", help="CSV sweep over an isotropic or Werner family")
    s.add_argument("--family", choices=sorted(FAMILIES), required=True)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--x-min", type=float)
    s.add_argument("--x-max", type=float)
    s.add_argument("--steps", type=int, default=101)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1)
    optimizer_flags(s)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="randomized property checks")
    v.add_argument("--suite", required=True, help="suite name or comma-separated list: " + ", ".join(SUITES))
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "sweep":
        _, lo, hi = FAMILIES[args.family]
        args.x_min = lo if args.x_min is None else args.x_min
        args.x_max = hi if args.x_max is None else args.x_max
    try:
        return args.func(args)
    except ConvergenceError as e:
        print(f"convergence failure: {e}", file=sys.stderr)
        print(_dump({"report": e.report}), file=sys.stderr)
        return EXIT_CONVERGENCE
    except (QnbError, OSError, json.JSONDecodeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
