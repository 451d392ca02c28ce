#!/usr/bin/env python3
"""
KdV Small-Dispersion Study - Main Entry Point

Command-line interface for the numerical study of the small-dispersion
limit of the Korteweg-de Vries equation: spectral KdV runs, Whitham
zones, Painleve transcendents, asymptotic formulas and their error
scaling with epsilon.

Subcommands:
    solve, whitham, painleve, approx, compare, scaling, pipeline
"""

import argparse
import os
import sys

import numpy as np

from utils import csv_handler, run_cache
from utils.config import DEFAULTS, EXTENDED_EPSILONS, parse_config, resolution_for
from utils.env_check import verify_environment
from utils.errors import ConfigError, KdVStudyError
from utils.logger import setup_logger, log_info, get_log_file_path, read_log_file
from modules import harness
from modules.base_operations import (
    get_user_friendly_error, validate_epsilon, validate_time, validate_modes, validate_real,
    estimate_operation_time,
)
from modules.hopf import critical_point, sech2_profile
from modules.kdv_spectral import grid_points
from modules.painleve import HM_DOMAIN, PI2_DOMAIN


def startup_checks():
    """
    Perform startup checks on the numerical stack.

    Returns:
        bool: True if all checks pass, False otherwise
    """
    ok, error = verify_environment()
    if not ok:
        print(f"Environment error: {error}", file=sys.stderr)
        return False
    return True


def _print_progress(update):
    if update['status'] in ('success', 'error', 'dry-run'):
        print(update['message'])


def _resolve_t(value, cp):
    if value in (None, 'tc'):
        return cp.tc
    return validate_time(value)


def _out_path(args, default_name):
    return args.out if args.out and args.out.endswith(('.csv', '.json')) else \
        os.path.join(args.out or DEFAULTS['out'], default_name)


def _write(result, path):
    ok, error = result
    if not ok:
        raise KdVStudyError(error)
    print(f"Wrote {path}")


def cmd_solve(args):
    eps = validate_epsilon(args.epsilon)
    t = _resolve_t(args.t, critical_point(sech2_profile()))
    N, Nt = resolution_for(eps, args.extended)
    N = validate_modes(args.nmodes or N)
    Nt = args.nsteps or Nt
    print(f"Estimated run time: {estimate_operation_time(N, Nt)}")
    run = harness.run_kdv(eps, t, N=N, Nt=Nt, L=args.L, dealias=args.dealias, extended=args.extended)
    final = run.snapshot_at(t)
    print(f"t={t:.6g} eps={eps:.6g} N={N} Nt={Nt}: deltaE={run.energy.deltaE:.3e} "
          f"tail={run.tail:.3e} mass drift={run.mass_drift:.3e}")
    path = _out_path(args, f"snapshot_eps{eps:.6g}_t{t:.6g}.csv")
    _write(csv_handler.write_snapshot(path, final, eps), path)
    spectrum = path[:-4] + '_spectrum.csv'
    _write(csv_handler.write_spectrum(spectrum, final, eps), spectrum)


def cmd_whitham(args):
    t = validate_time(args.t)
    ctx = harness.build_context(t, nc=args.nc)
    if ctx.edges is None:
        print(f"t={t:.6g} is before breaking (tc={ctx.cp.tc:.10f}); no Whitham zone")
        return
    leading, trailing = ctx.edges
    print(f"leading edge  x-={leading.x_edge:.10f} u={leading.u:.10f} v={leading.v:.10f}")
    print(f"trailing edge x+={trailing.x_edge:.10f} u={trailing.u:.10f} v={trailing.v:.10f}")
    print(f"max hodograph residual {np.max(ctx.zone.residuals):.3e}, Chebyshev tail {ctx.zone.tail():.3e}")
    path = _out_path(args, f"branches_t{t:.6g}.csv")
    _write(csv_handler.write_branches(path, ctx.zone), path)


def cmd_painleve(args):
    if args.equation == 'hm':
        sol = run_cache.fetch_hastings_mcleod()
        print(f"Hastings-McLeod on {HM_DOMAIN}: residual {sol.residual:.3e}, {sol.iterations} Newton steps")
        path = _out_path(args, "hastings_mcleod.csv")
        _write(csv_handler.write_table(path, 'hastings-mcleod', {'Nc': sol.grid.Nc},
                                       [sol.x, sol.values, sol.derivs['qp'], sol.derivs['p']]), path)
        return
    T = validate_real(args.t if args.t is not None else 0.0, 'T')
    sol = run_cache.fetch_pi2(T)
    print(f"P_I^2 at T={T:.6g} on {PI2_DOMAIN}: residual {sol.residual:.3e}, {sol.iterations} Newton steps")
    path = _out_path(args, f"pi2_T{T:.6g}.csv")
    d = sol.derivs
    _write(csv_handler.write_table(path, 'pi2', {'T': T, 'Nc': sol.grid.Nc},
                                   [sol.x, sol.values, d['UX'], d['UXX'], d['UXXX'], d['Q']]), path)


def _formula_setup(args):
    eps = validate_epsilon(args.epsilon)
    profile = sech2_profile()
    cp = critical_point(profile)
    t = _resolve_t(args.t, cp)
    ctx = harness.build_context(t, profile, nc=args.nc, need_zone=(args.formula == 'onephase'))
    return eps, ctx


def cmd_approx(args):
    eps, ctx = _formula_setup(args)
    N = validate_modes(args.nmodes or resolution_for(eps, args.extended)[0])
    region = harness.region_for(args.region, ctx, eps, args.delta, L=args.L)
    x = grid_points(args.L, N)
    x = x[region.mask(x)]
    values = np.asarray(harness.build_evaluator(args.formula, ctx, eps)(x), dtype=float)
    path = _out_path(args, f"approx_{args.formula}_{args.region}_eps{eps:.6g}.csv")
    meta = {'formula': args.formula, 'region': args.region, 't': float(ctx.t), 'epsilon': eps}
    _write(csv_handler.write_table(path, 'approximation', meta, [x, values]), path)


def cmd_compare(args):
    eps, ctx = _formula_setup(args)
    run = harness.run_kdv(eps, ctx.t, ctx.profile, N=args.nmodes, Nt=args.nsteps, L=args.L,
                          dealias=args.dealias, extended=args.extended)
    err = harness.compare(run.snapshot_at(ctx.t), eps, args.formula, args.region, ctx, args.delta)
    print(f"L-inf error of {args.formula} on {args.region} [{err.region.x_a:.6g}, {err.region.x_b:.6g}]: "
          f"{err.linf:.6e}")
    path = _out_path(args, f"error_{args.formula}_{args.region}_eps{eps:.6g}.csv")
    meta = {'formula': args.formula, 'region': args.region, 't': float(ctx.t), 'epsilon': eps}
    _write(csv_handler.write_table(path, 'error', meta, [err.x, err.values]), path)


def cmd_scaling(args):
    profile = sech2_profile()
    cp = critical_point(profile)
    t = _resolve_t(args.t, cp)
    ctx = harness.build_context(t, profile, nc=args.nc, need_zone=(args.formula == 'onephase'))
    epsilons = args.epsilons or list(DEFAULTS['epsilons'])
    deltas, kept = [], []
    for eps in sorted((validate_epsilon(e) for e in epsilons), reverse=True):
        try:
            run = harness.run_kdv(eps, t, profile, N=args.nmodes, Nt=args.nsteps, L=args.L,
                                  dealias=args.dealias, extended=args.extended)
            err = harness.compare(run.snapshot_at(t), eps, args.formula, args.region, ctx, args.delta)
        except KdVStudyError as e:
            message, hint = get_user_friendly_error(e)
            print(f"✗ eps={eps:.6g}: {message}" + (f" ({hint})" if hint else ''))
            continue
        print(f"✓ eps={eps:.6g}: L-inf error {err.linf:.6e}")
        kept.append(eps)
        deltas.append(err.linf)
    report = harness.scaling_fit(kept, deltas, region=args.region, formula=args.formula)
    print(f"a = {report.a:.4f} +- {report.sigma_a:.4f}, b = {report.b:.4f}, r = {report.r:.6f}")
    path = _out_path(args, f"scaling_{args.formula}_{args.region}.json")
    _write(harness.write_report(path, [report], meta={'t': float(t)}), path)


def cmd_pipeline(args):
    if args.config:
        ok, settings = parse_config(args.config)
        if not ok:
            raise ConfigError(settings)
    else:
        settings = dict(DEFAULTS)
        settings['study'] = args.study
        settings['extended'] = args.extended
        if args.extended:
            settings['epsilons'] = list(EXTENDED_EPSILONS)
    if args.epsilons:
        settings['epsilons'] = args.epsilons
    if args.out:
        settings['out'] = args.out
    if args.workers:
        settings['workers'] = args.workers
    if settings.get('log_file') and not args.log_file:
        setup_logger(settings['log_file'])
    if args.dry_run:
        for eps, N, Nt in harness.preview_study(settings, progress=_print_progress):
            print(f"eps={eps:.6g}: N={N} Nt={Nt}, estimated {estimate_operation_time(N, Nt)}")
        return
    path = harness.run_pipeline(settings, progress=_print_progress)
    print(f"Report written to {path}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog='kdv-study',
        description='Numerical study of the small-dispersion limit of the KdV equation.',
    )
    parser.add_argument('--log-file', help='Log file path (default kdv_study.log)')
    parser.add_argument('--verbose', action='store_true', help='Print solver summaries on the console')
    parser.add_argument('--show-log', action='store_true', help='Print the log file after the command')
    parser.add_argument('--skip-checks', action='store_true', help='Skip the numerical stack checks')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--t', help="Time (float, or 'tc' for the breaking time)")
    common.add_argument('--nmodes', type=int, help='Fourier modes (power of two)')
    common.add_argument('--nsteps', type=int, help='Time steps')
    common.add_argument('--L', type=float, default=DEFAULTS['L'], help='Domain half-width')
    common.add_argument('--nc', type=int, default=DEFAULTS['nc'], help='Chebyshev nodes per zone half')
    common.add_argument('--out', help='Output file or directory')
    common.add_argument('--extended', action='store_true', help='Allow the large-N, small-epsilon resolutions')
    common.add_argument('--dealias', action='store_true', help='2/3-rule dealiasing')

    formula = argparse.ArgumentParser(add_help=False)
    formula.add_argument('--formula', choices=harness.FORMULAS, default='hopf')
    formula.add_argument('--region', choices=harness.REGION_KINDS, default='whole')
    formula.add_argument('--delta', type=float, default=1.0, help='Region width multiplier')

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', parents=[common], help='Run the spectral KdV solver')
    p.add_argument('--epsilon', type=float, required=True)

    sub.add_parser('whitham', parents=[common], help='Solve the Whitham zone and its edges')

    p = sub.add_parser('painleve', parents=[common], help='Tabulate a Painleve transcendent')
    p.add_argument('--equation', choices=('hm', 'pi2'), default='hm')

    p = sub.add_parser('approx', parents=[common, formula], help='Dump an asymptotic formula')
    p.add_argument('--epsilon', type=float, required=True)

    p = sub.add_parser('compare', parents=[common, formula], help='Error field of a formula')
    p.add_argument('--epsilon', type=float, required=True)

    p = sub.add_parser('scaling', parents=[common, formula], help='Error scaling fit over epsilon')
    p.add_argument('--epsilons', type=float, nargs='+')

    p = sub.add_parser('pipeline', help='Run a full study preset')
    p.add_argument('--config', help='Configuration file (key = value)')
    p.add_argument('--study', choices=sorted(harness.STUDIES), default='prebreakup')
    p.add_argument('--epsilons', type=float, nargs='+')
    p.add_argument('--out', help='Output directory')
    p.add_argument('--workers', type=int, help='Concurrent epsilon runs')
    p.add_argument('--extended', action='store_true')
    p.add_argument('--dry-run', action='store_true', help='List the runs and their cost without solving')
    return parser


COMMANDS = {
    'solve': cmd_solve,
    'whitham': cmd_whitham,
    'painleve': cmd_painleve,
    'approx': cmd_approx,
    'compare': cmd_compare,
    'scaling': cmd_scaling,
    'pipeline': cmd_pipeline,
}


def main(argv=None):
    """
    Main application entry point.

    Returns:
        int: Process exit code
    """
    args = build_parser().parse_args(argv)
    setup_logger(args.log_file, level='INFO' if args.verbose else 'ERROR')

    if not args.skip_checks and not startup_checks():
        return 1

    log_info("Main", f"Command '{args.command}'")
    code = 0
    try:
        COMMANDS[args.command](args)
    except KdVStudyError as e:
        message, hint = get_user_friendly_error(e)
        print(message, file=sys.stderr)
        if hint:
            print(f"Hint: {hint}", file=sys.stderr)
        code = 2

    if args.show_log:
        print(f"--- {get_log_file_path()} ---")
        print(read_log_file())
    return code


if __name__ == "__main__":
    sys.exit(main())
