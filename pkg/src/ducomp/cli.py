"""Command-line interface.

Subcommands: ``run`` (single trace), ``sweep`` (a named study),
``validate`` (parameter report), ``oracle`` (exact optimum as CSV),
``weights`` (mixing-matrix dump). Exit codes: 0 success, 1 configuration
error, 2 divergence, 3 I/O error.
"""

import argparse
import os
import sys

import numpy as np

from .compression import CompressorSpec
from .engine import run as engine_run
from .engine import validate_params, write_trace_csv
from .errors import ConfigurationError, DivergenceError, DucompError
from .experiments import load_config, run_study
from .graph import weights_to_csv
from .problem import kkt_oracle


def _build_parser():
    p = argparse.ArgumentParser(prog="ducomp",
                                description="compressed-communication "
                                            "distributed dispatch solver")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one configuration and write its trace")
    run_p.add_argument("config")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--iterations", type=int, default=None)
    run_p.add_argument("--output-dir", default=None)
    run_p.add_argument("--skip-validation", action="store_true")

    sweep_p = sub.add_parser("sweep", help="run a named sweep study")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--study", default=None,
                         help="study name (defaults to study.name in the config)")
    sweep_p.add_argument("--iterations", type=int, default=None)
    sweep_p.add_argument("--output-dir", default=None)

    val_p = sub.add_parser("validate", help="print the parameter validator report")
    val_p.add_argument("config")

    orc_p = sub.add_parser("oracle", help="print the exact optimum as CSV")
    orc_p.add_argument("config")

    w_p = sub.add_parser("weights", help="dump the mixing matrix as CSV")
    w_p.add_argument("config")
    w_p.add_argument("--out", default=None, help="output path (default: stdout)")
    return p


def _apply_overrides(cfg, args):
    if getattr(args, "iterations", None) is not None:
        if args.iterations < 1:
            raise ConfigurationError("--iterations must be >= 1")
        cfg.iterations = args.iterations
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = args.output_dir
    return cfg


def _cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    trace = engine_run(cfg.spec(), cfg.topology(), cfg.weight_matrix(),
                       cfg.params, cfg.compressor, cfg.iterations, seed=seed,
                       skip_validation=args.skip_validation,
                       config_echo=cfg.resolved())
    os.makedirs(cfg.output_dir, exist_ok=True)
    out = os.path.join(cfg.output_dir, f"run_seed{seed}.csv")
    sidecar = write_trace_csv(trace, out)
    final = trace.final()
    print(f"wrote {out} (+ {os.path.basename(sidecar)})")
    print(f"final: residual={final.residual:.6e} "
          f"constraint_violation={final.constraint_violation:.6e} "
          f"bits={final.bits_cumulative}")
    return 0


def _cmd_sweep(args):
    cfg = _apply_overrides(load_config(args.config), args)
    result = run_study(cfg, args.study)
    print(f"wrote {result.index_path} ({len(result.entries)} traces)")
    return 0


def _cmd_validate(args):
    cfg = load_config(args.config)
    report = validate_params(cfg.spec(), cfg.weight_matrix(), cfg.params,
                             cfg.compressor)
    print(report.to_text())
    print("overall:", "pass" if report.passed else "FAIL (advisory)")
    return 0


def _cmd_oracle(args):
    cfg = load_config(args.config)
    spec = cfg.spec()
    sol = kkt_oracle(spec)
    print("agent,z_star,marginal_cost")
    for i, (cost, zi) in enumerate(zip(spec.costs, sol.z_star)):
        grad = cost.gradient(zi)
        marginal = float(grad[0]) if grad.shape == (1,) else float(np.linalg.norm(grad))
        print(f"{i},{float(zi[0]) if zi.shape == (1,) else list(map(float, zi))!r},"
              f"{marginal!r}")
    lam = sol.lambda_star
    lam_repr = repr(float(lam[0])) if lam.shape == (1,) else repr(list(map(float, lam)))
    print(f"# lambda_star = {lam_repr}")
    print(f"# objective = {sol.objective!r}")
    return 0


def _cmd_weights(args):
    cfg = load_config(args.config)
    W = cfg.weight_matrix()
    if args.out:
        weights_to_csv(W.entries, args.out)
        print(f"wrote {args.out} (eta={W.eta!r}, lambda_min={W.lambda_min!r})")
    else:
        for row in W.entries:
            print(",".join(repr(float(v)) for v in row))
    return 0


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate,
             "oracle": _cmd_oracle, "weights": _cmd_weights}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except DucompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
