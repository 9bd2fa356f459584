# Proximal point solvers on SPD tensor fields.
#
# python run.py mean field.txt -o mean.txt --trace trace.csv
# python run.py denoise noisy.txt -o filtered.txt --window 3 --filter median --jobs 4
# python run.py synth -o noisy.txt --n 3 --grid 8 8 --noise 0.3 --seed 0
# python run.py bound --eps0 1 --beta0 1 --mu 0.5 --omega 2 --eps 0.01
import argparse
import sys
from warnings import warn

import torch

from spdprox.defs import (EXIT_NUMERIC, EXIT_OK, EXIT_SPD, EXIT_USAGE, EXIT_WARNING,
                          ContractError, FieldParseError, NumericError, SpdValidationError)
from spdprox.field import TensorField, gen_synthetic, load_field, save_field, write_trace_csv
from spdprox.jobs import FILTERS, run_bound, run_denoise, run_mean, run_median, run_prox
from spdprox.utils import Timing
from util import config_util


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Proximal point methods on SPD matrices")
    config_util.define_common_args(parser)

    group = parser.add_argument_group("general")
    group.add_argument('--output', '-o', type=str, default=None,
                       help='output field file')
    group.add_argument('--trace', type=str, default=None,
                       help='write the outer trace as CSV (mean/median)')
    group.add_argument('--log_dir', type=str, default=None,
                       help='tensorboard logging directory')
    group.add_argument('--seed', type=int, default=0)
    group.add_argument('--weights', type=str, default=None,
                       help='comma-separated voxel weights, overrides the file')

    group = parser.add_argument_group("denoise")
    group.add_argument('--window', type=int, default=3, help='odd window size')
    group.add_argument('--filter', choices=FILTERS, default='mean')
    group.add_argument('--jobs', type=int, default=1, help='worker processes')

    group = parser.add_argument_group("bound")
    group.add_argument('--omega', type=float, default=2.0, help='theta2 = 1 / omega')
    group.add_argument('--eps', type=float, default=0.01, help='target distance')

    group = parser.add_argument_group("synth")
    group.add_argument('--n', type=int, default=3)
    group.add_argument('--grid', type=int, nargs=2, default=[8, 8])
    group.add_argument('--noise', type=float, default=0.3)
    group.add_argument('--impulse', type=float, default=0.0,
                       help='fraction of voxels hit by outlier noise')
    group.add_argument('--impulse_scale', type=float, default=3.0)
    return parser


def _load(args) -> TensorField:
    if args.input is None:
        raise ContractError(f"{args.command} needs an input field")
    fld = load_field(args.input)
    if args.weights is not None:
        weights = [float(w) for w in args.weights.split(',')]
        fld = TensorField(fld.dim, fld.mats, weights, fld.grid)
    return fld


def _summary_writer(args):
    if args.log_dir is None:
        return None, None
    from torch.utils.tensorboard import SummaryWriter
    writer = SummaryWriter(args.log_dir)

    def callback(rec):
        for name in ('f', 'beta', 'eps', 'step', 'residual'):
            writer.add_scalar(name, getattr(rec, name), global_step=rec.k)
    return writer, callback


def _save_point(point, path):
    if path is not None:
        save_field(TensorField(point.dim, [point]), path)
    else:
        print(point.mat)


def run(args) -> int:
    torch.manual_seed(args.seed)
    if args.command == 'bound':
        k = run_bound(args.eps0, args.beta0, args.mu, args.omega, args.eps)
        print(f"eps0={args.eps0} beta0={args.beta0} mu={args.mu} omega={args.omega} eps={args.eps}")
        print(k)
        return EXIT_OK

    if args.command == 'synth':
        if args.output is None:
            raise ContractError("synth needs --output")
        fld = gen_synthetic(args.n, tuple(args.grid), args.noise, args.seed,
                            impulse=args.impulse, impulse_scale=args.impulse_scale)
        save_field(fld, args.output)
        return EXIT_OK

    config = config_util.build_prox_config(args)
    fld = _load(args)
    n_warn = 0
    with Timing(args.command):
        if args.command in ('mean', 'median'):
            writer, callback = _summary_writer(args)
            job = run_mean if args.command == 'mean' else run_median
            point, trace = job(fld, config, callback)
            if writer is not None:
                writer.close()
            if args.trace is not None:
                write_trace_csv(trace, args.trace)
            n_warn = trace.n_warnings
            last = trace.records[-1]
            print(f"{args.command}: {len(trace.records) - 1} outer iterations, "
                  f"{trace.total_inner} inner sweeps, f={last.f:.10g}")
            _save_point(point, args.output)
        elif args.command == 'prox':
            point, report = run_prox(fld, config, args.filter)
            n_warn = int(report.warning)
            print(f"prox: {report.n_sweeps} inner sweeps, residual={report.residual:.3e}")
            _save_point(point, args.output)
        elif args.command == 'denoise':
            if args.output is None:
                raise ContractError("denoise needs --output")
            out, n_warn = run_denoise(fld, args.window, config, args.filter, args.jobs)
            save_field(out, args.output)
    if n_warn:
        warn(f"{args.command} finished with {n_warn} solver warning(s); result written")
        return EXIT_WARNING
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config_util.maybe_merge_config_file(args)
        return run(args)
    except SpdValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPD
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FieldParseError, ContractError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
