"""Command line: ``eprghost {simulate,synth,fit,criteria,verify}``.

Exit codes: 0 success, 1 verification failed, 2 validation error,
3 fit did not converge, 4 oracle inconclusive. ``EPR_LOG`` sets the log
level (DEBUG, INFO, WARNING, ...); it never changes results.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

from .config import RunConfig, load_config
from .domain import CorrelationParams, ModelKind, UncertaintyPair, classify, joint_uncertainties
from .exceptions import ConfigError, DataError, DomainError, EPRGhostError, EvaluationError
from .fileio import (emit_plot_data, format_scan, load_scan, read_report, sha256_file,
                     write_report)
from .models import model_values
from .pipeline import build_report, run_fit, run_verify, simulate_curve, synthesize_scan

log = logging.getLogger("eprghost")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_INCONCLUSIVE = 4


def _scan_arg(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected MIN:MAX:STEP") from None
    return lo, hi, step


def _setup_logging():
    level = os.environ.get("EPR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _config(args):
    mode = getattr(args, "mode", None)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        if mode:
            cfg = cfg.with_mode(mode)
    else:
        log.info("notice: no --config given, using default geometry")
        cfg = RunConfig(mode=mode or ModelKind.INTERFERENCE)
    if getattr(args, "scan", None):
        cfg = cfg.with_scan(*args.scan)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _params(args, amplitude=1.0, center=0.0, background=0.0):
    if args.sigma_plus is None or args.sigma_minus is None:
        raise ConfigError("--sigma-plus and --sigma-minus are required", field="sigma",
                          rule="required")
    return CorrelationParams(args.sigma_plus, args.sigma_minus, amplitude, center, background)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = _config(args)
    x, y = simulate_curve(cfg, _params(args))
    lines = ["position_mm,g2"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_synth(args):
    cfg = _config(args)
    scan = synthesize_scan(cfg, _params(args), args.peak_counts)
    _emit(format_scan(scan), args.out)
    return EXIT_OK


def cmd_fit(args):
    cfg = _config(args)
    scan = load_scan(args.data)
    data, fit = run_fit(cfg, scan)
    if not fit.converged:
        log.error("fit did not converge after %d iterations (%s); best parameters: %s",
                  fit.iterations, fit.message, fit.params)
        return EXIT_NO_CONVERGENCE
    report = build_report(cfg, fit, sha256_file(args.data))
    if args.out:
        write_report(report, args.out)
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.plot:
        model = model_values(cfg.mode, data.positions, cfg.geometry, fit.params)
        emit_plot_data(data.positions, data.values, data.sigmas, model, args.plot)
    return EXIT_OK


def cmd_criteria(args):
    if args.report:
        rep = read_report(args.report)
        sp, sm = rep["sigma_plus_per_mm"], rep["sigma_minus_per_mm"]
        cov = [[rep.get("sigma_plus_err_per_mm", 0.0) ** 2, rep.get("sigma_plus_minus_cov", 0.0)],
               [rep.get("sigma_plus_minus_cov", 0.0), rep.get("sigma_minus_err_per_mm", 0.0) ** 2]]
        pair = joint_uncertainties(sp, sm, cov)
    elif args.dp_plus is not None and args.dx_minus is not None:
        pair = UncertaintyPair(args.dp_plus, args.dx_minus)
    else:
        pair = joint_uncertainties(*_params(args).as_array()[:2])
    verdict = classify(pair)
    out = {
        "dp_plus_hbar_per_mm": pair.dp_plus,
        "dp_plus_err_hbar_per_mm": pair.dp_plus_err,
        "dx_minus_mm": pair.dx_minus,
        "dx_minus_err_mm": pair.dx_minus_err,
        "product_hbar2": verdict.product,
        "product_err_hbar2": verdict.product_err,
        "entangled": verdict.entangled,
        "steerable": verdict.steerable,
    }
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args):
    cfg = _config(args)
    result = run_verify(cfg, _params(args))
    _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return {"pass": EXIT_OK, "fail": EXIT_FAIL}.get(result["status"], EXIT_INCONCLUSIVE)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eprghost",
        description="Ghost interference / ghost imaging curves, fits and EPR criteria.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False, sigmas=True, scan=True):
        p.add_argument("--config", help="run configuration (YAML or JSON)")
        p.add_argument("--mode", choices=[ModelKind.INTERFERENCE.value, ModelKind.IMAGING.value])
        if sigmas:
            p.add_argument("--sigma-plus", type=float, help="momentum-sum width (1/mm)")
            p.add_argument("--sigma-minus", type=float, help="momentum-difference width (1/mm)")
        if scan:
            p.add_argument("--scan", type=_scan_arg, metavar="MIN:MAX:STEP")
        if data:
            p.add_argument("--data", required=True, help="scan CSV")
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("simulate", help="evaluate a model curve on the scan grid")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth", help="Poisson-sample a synthetic scan")
    common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--peak-counts", type=int, default=400)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a scan and write a report")
    common(p, data=True, sigmas=False, scan=False)
    p.add_argument("--plot", help="write plot data CSV here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("criteria", help="separability / steering verdict")
    p.add_argument("--sigma-plus", type=float)
    p.add_argument("--sigma-minus", type=float)
    p.add_argument("--dp-plus", type=float, help="momentum-sum uncertainty (hbar/mm)")
    p.add_argument("--dx-minus", type=float, help="position-difference uncertainty (mm)")
    p.add_argument("--report", help="re-derive the verdict from a fit report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("verify", help="closed form against quadrature oracle")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _join_scan(argv):
    # "--scan -3:3:0.1" would otherwise read the value as an option
    out = list(argv)
    for i in range(len(out) - 1):
        if out[i] == "--scan" and out[i + 1].startswith("-"):
            out[i:i + 2] = [f"--scan={out[i + 1]}"]
            break
    return out


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(_join_scan(sys.argv[1:] if argv is None else argv))
    try:
        return args.func(args)
    except (ConfigError, DataError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (EvaluationError, EPRGhostError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
