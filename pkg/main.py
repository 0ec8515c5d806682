#!/usr/bin/env python3
"""
Convex Integration Desk Toolkit - Main Entry Point

Certifies exponent regimes in exact arithmetic, sweeps the building-block
scalings, verifies the identities of one manufactured iteration stage,
runs the gluing stage and the harmonic-analysis lemma experiments.

Usage:
    python main.py <command> [options]

Examples:
    python main.py certify --alpha 5/4 --s 0 --gamma inf --p 7/5
    python main.py blocks-scaling --csv scaling.csv
    python main.py pipeline --preset A1 --report run.json --workbook run.xlsx
"""
import argparse
import logging
import sys
from typing import Any, Dict, List, Mapping, Optional, Sequence

from blocks.scaling import verify_all_blocks
from certify.certificate import certify
from certify.exponents import Exponents, parse_exponent
from config import APP_NAME, APP_VERSION, FAIL, PASS, get_config
from errors import ConvexIntegrationError, InvalidParameterError, OutOfDomainError
from gluing.run import GlueConfig, run_glue
from gluing.state import stored_state
from harness.experiment import EXPERIMENTS, ExperimentConfig, run_experiment
from harness.identities import identity_suite
from harness.pipeline import EXIT_FAIL, EXIT_INPUT, EXIT_PASS, PipelineConfig, run_pipeline
from output.report_writer import generate_report_workbook, write_csv, write_json
from perturbation.decay import measure_decay
from perturbation.stage import GEOMETRIES, StageConfig, iterate_once
from spectral.field import GridSpec
from spectral.snapshot import load_snapshot, save_snapshot

logger = logging.getLogger(__name__)


def _number_list(text: str) -> List[float]:
    """Comma-separated numbers; fractions such as 7/5 allowed."""
    try:
        return [float(parse_exponent(item, allow_infinity=True)) for item in text.split(',') if item.strip()]
    except InvalidParameterError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--report', '-r', default=None, help='Path for the JSON report')
    common.add_argument('--csv', default=None, help='Path for the CSV sweep data')
    common.add_argument('--workbook', '-w', default=None, help='Path for an Excel summary workbook')
    common.add_argument('--seed', type=int, default=None, help='Seed for every random draw')
    common.add_argument('--grid', '-n', type=int, default=None, help='Spatial grid size N')
    common.add_argument('--time-samples', '-m', type=int, default=None, help='Time samples M')
    common.add_argument('--preset', default=None, help='Named preset from presets.yaml (A1, A2, failing)')
    common.add_argument('--verbose', '-v', action='store_true', help='Enable debug logging')

    parser = argparse.ArgumentParser(
        description=f"{APP_NAME}: exact regime certificates and spectral verification runs.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py certify --alpha 5/4 --s 0 --gamma inf --p 7/5
  python main.py certify --preset failing
  python main.py iterate-once --regime A2 --alpha 3/2 --geometry axis --kappa 0 --report stage.json
  python main.py glue --m 8 --theta 0.015625 --out glued.bin --out-stress glued_stress.bin
  python main.py iterate-once --lambda 4 --geometry axis --input glued.bin
  python main.py decorrelation --sigmas 4,8,16,32 --p 2,4 --csv decorrelation.csv
  python main.py pipeline --preset A1 --report run.json --workbook run.xlsx

Exit codes:
  0 - every check passed
  1 - a check failed (certificate, identity, slope or stability)
  2 - exponents out of domain or invalid parameters

Environment Variables:
  CONVINT_SEED                   - Default seed (default: 20240601)
  CONVINT_SPECTRAL_TOL           - Spectral identity tolerance (default: 1e-8)
  CONVINT_LEMMA_SLOPE_TOL        - Lemma slope tolerance (default: 0.2)
        """
    )
    parser.add_argument('--version', action='version', version=f"{APP_NAME} {APP_VERSION}")
    commands = parser.add_subparsers(dest='command', required=True)

    cert = commands.add_parser('certify', parents=[common], help='Exact regime certificate')
    cert.add_argument('--alpha', default=None, help='Dissipation exponent in [1, 5/4) or the A2 range')
    cert.add_argument('--s', default=None, help='Spatial regularity s')
    cert.add_argument('--gamma', default=None, help='Time integrability (inf allowed)')
    cert.add_argument('--p', default=None, help='Spatial integrability (inf allowed)')
    cert.add_argument('--eta-star', default=None, help='eta* (default from config)')
    cert.add_argument('--regime', choices=['A1', 'A2'], default=None, help='Force a regime')

    blocks = commands.add_parser('blocks-scaling', parents=[common], help='Building-block norm slopes')
    blocks.add_argument('--lambdas', type=_number_list, default=None, help='Comma-separated lambda sweep')

    for name, help_text in (('identities', 'Operator, block and perturbation identities'),
                            ('iterate-once', 'One manufactured iteration stage')):
        stage = commands.add_parser(name, parents=[common], help=help_text)
        stage.add_argument('--regime', choices=['A1', 'A2'], default=None)
        stage.add_argument('--alpha', default=None, help='Dissipation exponent')
        stage.add_argument('--lambda', '--lam', dest='lam', type=float, default=None, help='Block frequency lambda')
        stage.add_argument('--geometry', choices=GEOMETRIES, default=None,
                           help='Direction set; axis spans diagonal stresses only')
        stage.add_argument('--kappa', type=float, default=None, help='Shear window strength of the glued state')
        if name == 'iterate-once':
            stage.add_argument('--input', default=None, help='Velocity snapshot to use as the glued state')
            stage.add_argument('--decay', type=_number_list, default=None,
                               help='Also fit ||R_{q+1}||_{L^1} over these lambdas')

    glue_cmd = commands.add_parser('glue', parents=[common], help='Gluing stage on a synthetic or stored state')
    glue_cmd.add_argument('--state', default=None, help='Velocity snapshot to glue instead of the synthetic state')
    glue_cmd.add_argument('--state-stress', default=None, help='Stress snapshot paired with --state')
    glue_cmd.add_argument('--m', '--subdivisions', dest='subdivisions', type=int, default=None,
                          help='Number of subintervals m')
    glue_cmd.add_argument('--theta', '--overlap', dest='overlap', type=float, default=None, help='Overlap theta')
    glue_cmd.add_argument('--out', default=None, help='Binary snapshot path for the glued velocity')
    glue_cmd.add_argument('--out-stress', default=None, help='Binary snapshot path for the glued stress')

    deco = commands.add_parser('decorrelation', parents=[common], help='Decorrelation lemma sweep')
    deco.add_argument('--sigmas', type=_number_list, default=None, help='Comma-separated integer sigmas')
    deco.add_argument('--p', type=_number_list, default=None, help='Comma-separated exponents')

    phase = commands.add_parser('stationary-phase', parents=[common], help='Stationary-phase lemma sweep')
    phase.add_argument('--kappas', type=_number_list, default=None, help='Comma-separated kappas')
    phase.add_argument('--p', type=_number_list, default=None, help='Comma-separated exponents')

    experiment = commands.add_parser('experiment', parents=[common], help='Any named experiment')
    experiment.add_argument('name', choices=EXPERIMENTS)
    experiment.add_argument('--sweep', type=_number_list, default=None)
    experiment.add_argument('--exponents', type=_number_list, default=None)

    commands.add_parser('pipeline', parents=[common], help='certify, scaling, identities, iteration, gluing')

    return parser.parse_args(argv)


def _emit(args: argparse.Namespace, data: Mapping[str, Any],
          tables: Optional[Dict[str, List[Dict[str, Any]]]] = None, title: str = "") -> None:
    """Write whichever outputs the global flags ask for."""
    if args.report:
        write_json(data, args.report)
    rows = [dict(row, table=name) for name, table in (tables or {}).items() for row in table]
    if args.csv and rows:
        write_csv(rows, args.csv)
    if args.workbook:
        generate_report_workbook(data, args.workbook, tables, title=title)


def _exit_code(status: str) -> int:
    return EXIT_PASS if status == PASS else EXIT_FAIL


def _preset(args: argparse.Namespace) -> Dict[str, Any]:
    return get_config().preset(args.preset) if args.preset else {}


def cmd_certify(args: argparse.Namespace) -> int:
    preset = _preset(args)
    values = {key: getattr(args, key) if getattr(args, key) is not None else preset.get(key)
              for key in ('alpha', 's', 'gamma', 'p')}
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise InvalidParameterError(f"Missing exponents: {', '.join(missing)}")
    exponents = Exponents.parse(**values)
    certificate = certify(exponents, eta_star=args.eta_star or preset.get('eta_star'),
                          regime=args.regime or preset.get('regime'))
    # The certificate itself goes to standard output
    print(certificate.to_json())
    _emit(args, certificate.to_dict(), title="Regime certificate")
    return _exit_code(certificate.status)


def cmd_blocks_scaling(args: argparse.Namespace) -> int:
    lambdas = args.lambdas or _preset(args).get('lambdas') or get_config().get("lambdas")
    results = verify_all_blocks(lambdas=lambdas)
    rows = [r.to_row() for r in results]
    status = PASS if all(r.passed for r in results) else FAIL
    for row in rows:
        print(f"  {row['family']:<10} N={row['N']} M={row['M']} p={row['p_or_gamma']!s:<6} "
              f"measured {row['measured_slope']:+.4f} predicted {row['predicted_slope']:+.4f}  {row['status']}")
    _emit(args, {'lambdas': list(lambdas), 'results': [r.to_dict() for r in results], 'status': status},
          {'blocks_scaling': rows}, title="Building-block scaling")
    return _exit_code(status)


def _stage_config(args: argparse.Namespace) -> StageConfig:
    preset = _preset(args)
    alpha = args.alpha or preset.get('alpha')
    return StageConfig.from_config(
        regime=args.regime or preset.get('regime'),
        alpha=float(parse_exponent(alpha)) if alpha is not None else None,
        lam=args.lam,
        geometry=args.geometry,
        kappa=args.kappa,
        time_samples=args.time_samples,
    )


def cmd_identities(args: argparse.Namespace) -> int:
    operator_grid = GridSpec(args.grid) if args.grid else None
    suite = identity_suite(_stage_config(args), operator_grid=operator_grid)
    for row in suite.rows():
        print(f"  {row['group']:<13} {row['identity']:<36} {row['residual']:.3e}  {row['status']}")
    _emit(args, suite.to_dict(), {'identities': suite.rows()}, title="Identity suite")
    return _exit_code(suite.status)


def cmd_iterate_once(args: argparse.Namespace) -> int:
    config = _stage_config(args)
    state = load_snapshot(args.input) if args.input else None
    report = iterate_once(config, state=state)
    data: Dict[str, Any] = {'iteration': report.to_dict(), 'status': report.status}
    tables: Dict[str, List[Dict[str, Any]]] = {}
    if args.decay:
        decay = measure_decay(args.decay, config)
        data['decay'] = decay.to_dict()
        tables['decay'] = [{'lambda': lam, 'total_L1': norms['total']['L1']}
                           for lam, norms in zip(decay.lambdas, decay.norms)]
        if decay.status != PASS:
            data['status'] = FAIL
    print(f"  Stage at lambda={config.lam:g} ({config.regime}): {data['status']}")
    _emit(args, data, tables, title="One iteration stage")
    return _exit_code(data['status'])


def cmd_glue(args: argparse.Namespace) -> int:
    preset = _preset(args)
    config = GlueConfig.from_config(
        m=args.subdivisions or preset.get('subdivisions'),
        theta=args.overlap or preset.get('overlap'),
        n=args.grid,
        time_samples=args.time_samples,
    )
    state = None
    if args.state:
        stress = load_snapshot(args.state_stress) if args.state_stress else None
        state = stored_state(load_snapshot(args.state), config.model(), config.theta_q, stress,
                             lambda_q=config.lambda_q)
    report = run_glue(config, state)
    if args.out:
        save_snapshot(report.result.state.velocity, args.out)
    if args.out_stress:
        save_snapshot(report.result.state.stress, args.out_stress)
    print(f"  Gluing over m={config.m} theta={config.theta:g}: {report.status}")
    _emit(args, report.to_dict(), title="Gluing stage")
    return _exit_code(report.status)


def _run_named(args: argparse.Namespace, name: str, sweep: Optional[List[float]],
               exponents: Optional[List[float]]) -> int:
    overrides = dict(sweep=sweep, exponents=exponents, grid=args.grid, time_samples=args.time_samples,
                     report=None, csv=None)
    if args.preset:
        config = ExperimentConfig.from_preset(args.preset, name, **overrides)
    else:
        config = ExperimentConfig(name, **{k: v for k, v in overrides.items() if v is not None})
    result = run_experiment(config, write=False)
    for report in result.reports:
        print(f"  {getattr(report, 'name', name):<40} {report.status}")
    _emit(args, result.to_dict(), {name: result.rows}, title=f"Experiment: {name}")
    return _exit_code(result.status)


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        preset=args.preset or "A1",
        grid=args.grid,
        time_samples=args.time_samples,
        seed=args.seed,
        report=args.report,
        csv=args.csv,
        workbook=args.workbook,
    )
    report = run_pipeline(config)
    for outcome in report.stages:
        line = f"  {outcome.name:<16} {outcome.status}"
        print(f"{line}  ({outcome.error})" if outcome.error else line)
    return report.exit_code


COMMANDS = {
    'certify': cmd_certify,
    'blocks-scaling': cmd_blocks_scaling,
    'identities': cmd_identities,
    'iterate-once': cmd_iterate_once,
    'glue': cmd_glue,
    'decorrelation': lambda args: _run_named(args, "decorrelation", args.sigmas, args.p),
    'stationary-phase': lambda args: _run_named(args, "stationary_phase", args.kappas, args.p),
    'experiment': lambda args: _run_named(args, args.name, args.sweep, args.exponents),
    'pipeline': cmd_pipeline,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = parse_arguments(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    if args.seed is not None:
        get_config().set("seed", args.seed)

    # certify keeps standard output for the certificate JSON
    banner = args.command != 'certify'
    if banner:
        print(f"\n{'='*60}")
        print(f"{APP_NAME} {APP_VERSION}")
        print(f"{'='*60}")
        print(f"Command: {args.command}")
        if args.preset:
            print(f"Preset: {args.preset}")
        print(f"Seed: {get_config().get('seed')}")
        print(f"{'='*60}\n")

    if args.preset and args.preset not in get_config().presets:
        logger.error("Unknown preset: %s (known: %s)", args.preset, ", ".join(sorted(get_config().presets)))
        return EXIT_INPUT

    try:
        code = COMMANDS[args.command](args)
    except (OutOfDomainError, InvalidParameterError) as e:
        logger.error("Invalid input: %s", e)
        return EXIT_INPUT
    except ConvexIntegrationError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAIL

    if banner:
        print(f"\n{'='*60}")
        print(f"{args.command}: {'PASS' if code == EXIT_PASS else 'FAIL'} (exit {code})")
        if args.report:
            print(f"Report saved to: {args.report}")
        print(f"{'='*60}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
