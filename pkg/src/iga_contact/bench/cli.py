"""Command line entry point: ``iga-contact run`` and ``iga-contact sweep``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from ..contact import FORMULATIONS
from ..errors import ConfigurationError, InadmissibleStateError, ProjectionError, SolverError
from ..solver import solve
from . import output
from .config import BENCHMARKS, build_config
from .metrics import (
    contact_half_width,
    edge_stress,
    hertz_pressure_profile,
    oscillation_measure,
    patch_test_error,
    sample_fields,
)
from .problems import build_problem
from .reference import HertzReference

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3

log = logging.getLogger("iga_contact")


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 3)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, "%s: error: %s\n" % (self.prog, message))


def _overrides(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigurationError("override %r is not key=value" % item)
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def postprocess(cfg, problem, state, trace, out_dir):
    """Write the benchmark tables and return the summary metrics."""
    model, u = problem.model, state.u
    name = cfg.benchmark
    metrics = {}
    if name == "patch":
        X, err = patch_test_error(model, u, cfg.pressure)
        output.write_csv(os.path.join(out_dir, "patch.csv"), ["x", "y", "sigma_yy_err"],
                         np.c_[X, err])
        metrics["sigma_yy_error"] = float(err.max())
    elif name == "hertz":
        ref = HertzReference(problem.meta["load"], cfg.radius, cfg.young, cfg.poisson)
        x, p = hertz_pressure_profile(model, u)
        a, p0 = ref.half_width, ref.max_pressure
        output.write_csv(os.path.join(out_dir, "hertz.csv"), ["x_over_a", "p_over_p0"],
                         np.c_[x / a, p / p0])
        xr = np.linspace(0.0, 1.2 * a, 121)
        output.write_csv(os.path.join(out_dir, "hertz_reference.csv"), ["x_over_a", "p_over_p0"],
                         np.c_[xr / a, ref.pressure(xr) / p0])
        metrics.update(half_width=a, max_pressure=p0, computed_max_pressure=float(p.max()),
                       computed_half_width=contact_half_width(x, p))
    elif name == "blocks":
        body, side = problem.meta["edge"]
        t, s = edge_stress(model, u, body, side)
        output.write_csv(os.path.join(out_dir, "blocks.csv"), ["t", "sigma_yy"], np.c_[t, s])
        metrics["total_variation"] = oscillation_measure(model, u, body, side)
    elif name == "ironing":
        rows = [(r.step, r.load_factor, *r.reactions.get("slab.south", (np.nan, np.nan)))
                for r in trace.steps if r.converged]
        output.write_csv(os.path.join(out_dir, "ironing.csv"), ["step", "load_factor", "Fx", "Fy"], rows)
        if rows:
            metrics["final_Fy"] = float(rows[-1][3])
    output.write_fields(os.path.join(out_dir, "fields.csv"), sample_fields(model, u, cfg.field_samples))
    return metrics


def run_one(cfg, out_dir):
    """Build, solve and post-process one configuration; returns ``(ok, summary)``."""
    output.ensure_dir(out_dir)
    problem = build_problem(cfg)
    t0 = time.perf_counter()
    try:
        state, trace = solve(problem.model, problem.solve_config, problem.monitors)
    except (ProjectionError, InadmissibleStateError, SolverError) as exc:
        log.error("solver failure: %s", exc)
        output.write_json(os.path.join(out_dir, "summary.json"),
                          {"config": asdict(cfg), "success": False, "message": str(exc)})
        return False, {"success": False, "message": str(exc)}
    elapsed = time.perf_counter() - t0
    output.write_trace(os.path.join(out_dir, "trace.json"), trace)
    summary = {"config": asdict(cfg), "success": trace.success, "message": trace.message,
               "newton_iterations": sum(s.iterations for s in trace.steps)}
    if trace.success:
        summary["metrics"] = postprocess(cfg, problem, state, trace, out_dir)
    output.write_json(os.path.join(out_dir, "summary.json"), summary)
    log.info("%s/%s finished in %.2f s (success=%s)", cfg.benchmark, cfg.formulation, elapsed,
             trace.success)
    summary["seconds"] = elapsed
    return trace.success, summary


def cmd_run(args):
    cfg = build_config(args.benchmark, args.formulation, args.config, _overrides(args.set))
    ok, summary = run_one(cfg, args.out)
    for k, v in sorted(summary.get("metrics", {}).items()):
        print("%s = %.10g" % (k, v))
    if not ok:
        print("solver failed: %s" % summary.get("message", ""), file=sys.stderr)
    return EXIT_OK if ok else EXIT_SOLVER


def _parse_mesh(text):
    try:
        nu, nv = text.lower().split("x")
        return int(nu), int(nv)
    except ValueError:
        raise ConfigurationError("mesh %r is not of the form NUxNV" % text)


def cmd_sweep(args):
    forms = args.formulations.split(",") if args.formulations else list(FORMULATIONS)
    for f in forms:
        if f not in FORMULATIONS:
            raise ConfigurationError("unknown formulation %r" % f)
    base = build_config(args.benchmark, forms[0], args.config, _overrides(args.set))
    meshes = [_parse_mesh(m) for m in args.meshes.split(",")] if args.meshes else [(base.n_u, base.n_v)]
    results, failed = [], False
    for nu, nv in meshes:
        for f in forms:
            cfg = replace(base, formulation=f, n_u=nu, n_v=nv).validate()
            out = os.path.join(args.out, "%s_%dx%d_%s" % (cfg.benchmark, nu, nv, f))
            ok, summary = run_one(cfg, out)
            failed |= not ok
            results.append(("%dx%d" % (nu, nv), f, ok, summary))
    keys = sorted({k for *_, s in results for k in s.get("metrics", {})})
    header = ["mesh", "formulation", "success", "newton_iterations", *keys]
    rows = [[mesh, f, int(ok), s.get("newton_iterations", 0),
             *(s.get("metrics", {}).get(k, float("nan")) for k in keys)]
            for mesh, f, ok, s in results]
    output.ensure_dir(args.out)
    output.write_csv(os.path.join(args.out, "sweep.csv"), header, rows)
    print("  ".join("%-16s" % h for h in header))
    for r in rows:
        print("  ".join("%-16s" % output._fmt(v) for v in r))
    return EXIT_SOLVER if failed else EXIT_OK


def make_parser():
    p = _Parser(prog="iga-contact", description="IGA penalty contact benchmarks")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one benchmark")
    r.add_argument("--benchmark", choices=BENCHMARKS, required=True)
    r.add_argument("--formulation", choices=FORMULATIONS, default=None)
    r.add_argument("--config", default=None, help="key = value file overriding defaults")
    r.add_argument("--out", default="out", help="output directory")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="run a formulation x mesh matrix")
    s.add_argument("--benchmark", choices=BENCHMARKS, required=True)
    s.add_argument("--formulations", default=None, help="comma separated (default: all)")
    s.add_argument("--meshes", default=None, help="comma separated NUxNV (default: config)")
    s.add_argument("--config", default=None)
    s.add_argument("--out", default="sweep")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
