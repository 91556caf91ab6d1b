"""Command-line entry point: ``micromorphx <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input (config, parameters, grid), 2 numerical
failure (solver non-convergence, unstable step, failed invariant).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .cli_io import ConfigError, ScenarioConfig, load_config, write_json, write_manifest, write_snapshot
from .grid import GridError
from .linalg import ConvergenceError
from .tensor_core import InvalidMaterial, IsotropicModuli, MaterialModel, validate_parameters

log = logging.getLogger("micromorphx")

VALIDATION_ERRORS = (ConfigError, InvalidMaterial, GridError, FileNotFoundError)


class NumericalFailure(RuntimeError):
    pass


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MICROMORPHX_THREADS")
    return int(env) if env else None


def _limit_threads(n):
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)
        return None
    return threadpool_limits(limits=n)


def _config(args, required=True) -> ScenarioConfig | None:
    if args.config is None:
        if required:
            raise ConfigError([(None, "--config", "a config file is required for this command")])
        return None
    return load_config(args.config)


def _out_dir(args, cfg):
    out = args.out or (cfg.output["directory"] if cfg else "out")
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands; each returns (payload dict, list of written files)


def cmd_check_params(args, cfg, out):
    report = validate_parameters(cfg.moduli())
    payload = {"variant": cfg.variant.name, "moduli": cfg.moduli().as_dict(), **report.as_dict()}
    path = os.path.join(out, "check_params.json")
    write_json(path, payload)
    print(json.dumps(payload, indent=2))
    if not report.ok:
        raise InvalidMaterial("condpara: " + "; ".join(report.failures))
    return payload, [path]


def cmd_simulate(args, cfg, out):
    from .assembly import assemble_stiffness
    from .dynamics import RunConfig, nodal_energy_density, run

    grid = cfg.build_grid()
    sm = assemble_stiffness(grid, material=cfg.build_material())
    state0 = cfg.build_initial(sm, seed=args.seed)
    loads = cfg.build_loads(grid)
    formats = set(cfg.output["formats"])
    written = []
    snapdir = os.path.join(out, "snapshots")

    def on_snapshot(state, step):
        os.makedirs(snapdir, exist_ok=True)
        path = os.path.join(snapdir, f"snapshot_{step:06d}.vtk")
        write_snapshot(state, grid, path, nodal_energy_density(sm, state))
        written.append(path)

    rc = RunConfig(
        sm, cfg.time["dt"], cfg.time["T"], state0, loads, cfg.time["scheme"],
        ledger_every=cfg.output["ledger_every"],
        snapshot_every=cfg.output["snapshot_every"] if "vtk" in formats else 0,
        dependence=cfg.time["dependence"], on_unstable=cfg.time["on_unstable"], on_snapshot=on_snapshot,
    )
    result = run(rc)
    ledger_path = os.path.join(out, "ledger.csv")
    result.ledger.to_csv(ledger_path)
    written.append(ledger_path)
    payload = {"dof_count": sm.dof_count, **result.report}
    report_path = os.path.join(out, "report.json")
    write_json(report_path, payload)
    written.append(report_path)
    print(json.dumps({k: v for k, v in payload.items() if k != "continuous_dependence"}, indent=2, default=str))
    return payload, written


def cmd_static_solve(args, cfg, out):
    from .assembly import assemble_stiffness
    from .dynamics import State, nodal_energy_density
    from .statics import coercivity_lower_bound, manufactured_rhs, norm_X, solve_resolvent

    grid = cfg.build_grid()
    sm = assemble_stiffness(grid, material=cfg.build_material())
    rhs_state = cfg.build_initial(sm, seed=args.seed)
    q, p = rhs_state.vectors(sm)
    w_star = np.concatenate([q, p])
    res = solve_resolvent(sm, w_star)
    n = sm.dof_count
    sol = State.from_vectors(sm, res.w[:n], res.w[n:])
    rng = np.random.default_rng(args.seed)
    w = np.concatenate([rng.standard_normal(n), rng.standard_normal(n)])
    manu = solve_resolvent(sm, manufactured_rhs(sm, w))
    payload = {
        "dof_count": n,
        "residual": res.residual,
        "manufactured_relative_error": norm_X(sm, manu.w - w) / norm_X(sm, w),
        "coercivity_lambda_min": coercivity_lower_bound(sm).value,
    }
    path = os.path.join(out, "static_solution.vtk")
    write_snapshot(sol, grid, path, nodal_energy_density(sm, sol))
    report = os.path.join(out, "report.json")
    write_json(report, payload)
    print(json.dumps(payload, indent=2))
    if res.residual > 1e-8:
        raise NumericalFailure(f"resolvent residual {res.residual:.3e} above 1e-8")
    return payload, [path, report]


def _levels(text):
    return [int(v) for v in str(text).replace("(", "").replace(")", "").split(",") if v.strip()]


def cmd_estimate_constants(args, cfg, out):
    from .inequalities import refinement_study

    spec = args.spec or (cfg.constants["spec"] if cfg else "korn")
    levels = _levels(args.levels) if args.levels else list(cfg.constants["levels"] if cfg else (4, 8, 16))
    study = refinement_study(spec, levels, seed=args.seed)
    path = os.path.join(out, "constants.csv")
    study.to_csv(path)
    sys.stdout.write(study.to_csv())
    payload = {"spec": study.spec, "levels": levels, "constants": study.constants,
               "classification": study.classification.value}
    return payload, [path]


def cmd_dispersion(args, cfg, out):
    from .dispersion import dispersion_curves, wave_path

    if cfg is not None:
        material = MaterialModel.isotropic(cfg.moduli(), cfg.variant)
        path_pts, samples = cfg.dispersion["path"], cfg.dispersion["samples"]
    else:
        material = MaterialModel.isotropic(IsotropicModuli())
        path_pts, samples = ((0, 0, 0), (5, 0, 0)), 100
    result = dispersion_curves(wave_path(path_pts, samples), material)
    path = os.path.join(out, "dispersion.csv")
    result.to_csv(path)
    payload = {"points": len(result.k), "min_symbol_eigenvalue": result.min_eigenvalue,
               "cutoff_omega": result.omega[0].tolist()}
    print(json.dumps(payload, indent=2))
    return payload, [path]


def cmd_verify(args, cfg, out):
    from .checks import run_checks

    checks = run_checks(seed=args.seed)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}: {c['value']:.3e} (tol {c['tolerance']:g})")
    path = os.path.join(out, "verify.json")
    write_json(path, checks)
    payload = {"checks": checks, "passed": all(c["passed"] for c in checks)}
    if not payload["passed"]:
        raise NumericalFailure("invariant suite failed")
    return payload, [path]


COMMANDS = {
    "simulate": (cmd_simulate, True),
    "static-solve": (cmd_static_solve, True),
    "estimate-constants": (cmd_estimate_constants, False),
    "dispersion": (cmd_dispersion, False),
    "check-params": (cmd_check_params, True),
    "verify": (cmd_verify, False),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="micromorphx", description="Relaxed micromorphic continuum toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="scenario config (INI)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--threads", type=int, help="BLAS thread cap (falls back to MICROMORPHX_THREADS)")
        p.add_argument("--spec", help="inequality name for estimate-constants")
        p.add_argument("--levels", help="comma-separated cells per axis, e.g. 4,8,16")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    threads = _threads(args)
    limiter = _limit_threads(threads)
    func, needs_config = COMMANDS[args.command]
    cfg = None
    out = args.out
    status, code, payload, written = "ok", 0, {}, []
    try:
        cfg = _config(args, required=needs_config)
        out = _out_dir(args, cfg)
        payload, written = func(args, cfg, out)
    except VALIDATION_ERRORS as exc:
        status, code = f"validation error: {exc}", 1
        print(f"error: {exc}", file=sys.stderr)
    except ValueError as exc:
        status, code = f"validation error: {exc}", 1
        print(f"error: {exc}", file=sys.stderr)
    except (ConvergenceError, NumericalFailure, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        status, code = f"numerical failure: {exc}", 2
        print(f"error: {exc}", file=sys.stderr)
    except Exception as exc:  # still leave a manifest behind
        log.exception("unexpected failure")
        status, code = f"failure: {type(exc).__name__}: {exc}", 2
        print(f"error: {exc}", file=sys.stderr)
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    out = out or "out"
    os.makedirs(out, exist_ok=True)
    write_manifest(
        os.path.join(out, "manifest.json"), args.command, argv,
        config_text=cfg.text if cfg else None, config=cfg.as_dict() if cfg else None,
        seed=args.seed, threads=threads, outputs=[os.path.relpath(p, out) for p in written],
        status=status, exit_code=code, extra={"result": payload},
    )
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
