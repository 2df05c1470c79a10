"""``lutbench`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from . import emulator, experiment, simplex
from .numerics import LinAlgError
from .store import FormatError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("lutbench")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--out", type=Path, default=Path("lutbench-out"),
                        help="output directory (LUTBENCH_OUT overrides)")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--only", choices=experiment.METHODS,
                        help="run a single method family")
    common.add_argument("--threads", type=int, help="cap BLAS worker threads")
    common.add_argument("--nrmse-norm", choices=("per-wavelength", "global"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lutbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write reference and training LUTs")
    run = sub.add_parser("run", parents=[common], help="run the full benchmark")
    run.add_argument("--generate", action="store_true",
                     help="create missing LUT files first")
    val = sub.add_parser("validate", parents=[common],
                         help="score a saved emulator against a LUT")
    val.add_argument("model", type=Path)
    val.add_argument("lut", type=Path)
    return p


def _config(args):
    cfg = (experiment.ExperimentConfig.load(args.config) if args.config
           else experiment.ExperimentConfig())
    d = cfg.to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.only:
        d["methods"] = [args.only]
    if args.nrmse_norm:
        d["nrmse_norm"] = args.nrmse_norm
    return experiment.ExperimentConfig.from_dict(d)


def _dispatch(args):
    out = Path(os.environ.get("LUTBENCH_OUT") or args.out)
    cfg = _config(args)
    if args.command == "generate":
        paths = experiment.generate(cfg, out)
        for key, path in paths.items():
            print(f"{key}: {path}")
    elif args.command == "run":
        experiment.run(cfg, out, generate_missing=args.generate)
        print((out / "summary.txt").read_text(), end="")
    else:
        rep = experiment.validate(args.model, args.lut, cfg.nrmse_norm)
        (out / "reports").mkdir(parents=True, exist_ok=True)
        stem = out / "reports" / f"validate_{args.model.stem}_{args.lut.stem}"
        rep.write_csv(stem.with_suffix(".csv"))
        rep.write_json(stem.with_suffix(".json"))
        print(f"{rep.method} on {args.lut}: RMSE {rep.rmse_mean:.6g}  "
              f"NRMSE {rep.nrmse_mean:.6g} %  ({rep.query_seconds:.3f} s)")


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                _dispatch(args)
        else:
            _dispatch(args)
    except experiment.InvalidConfig as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (LinAlgError, emulator.OptimizationFailed, simplex.OutsideHull,
            simplex.DegenerateInput) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (OSError, FormatError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
