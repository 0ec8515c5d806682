"""
End-to-end run: certify, block scaling, identities, one iteration and gluing.

Stages run in order. A failed certificate stops the run at the regime gate;
any other stage error is recorded against that stage and the run goes on,
so every report still gets written.
"""
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence

from blocks.scaling import verify_all_blocks
from certify.certificate import Certificate, certify
from certify.exponents import Exponents, parse_exponent
from config import FAIL, PASS, get_config
from errors import ConvexIntegrationError, InvalidParameterError, OutOfDomainError
from gluing.run import GlueConfig, run_glue
from harness.identities import identity_suite
from output.report_writer import generate_report_workbook, write_csv, write_json
from perturbation.decay import DESK_LAMBDAS, DESK_TIME_SAMPLES, measure_decay
from perturbation.stage import StageConfig, iterate_once
from spectral.field import GridSpec

logger = logging.getLogger(__name__)

STAGES = ("certify", "blocks_scaling", "identities", "iterate_once", "glue")
# Time samples of the manufactured stage unless --time-samples is given
STAGE_TIME_SAMPLES = 9

# Exit codes
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


@dataclass
class PipelineConfig:
    """One pipeline run; unset fields come from the preset."""
    preset: str = "A1"
    lambdas: Optional[List[float]] = None
    grid: Optional[int] = None
    time_samples: Optional[int] = None
    seed: Optional[int] = None
    report: Optional[str] = None
    csv: Optional[str] = None
    workbook: Optional[str] = None
    decay: bool = True

    def resolved(self) -> Dict[str, Any]:
        """Preset merged with the explicit overrides."""
        values = dict(get_config().preset(self.preset))
        for key in ('lambdas', 'grid', 'time_samples'):
            if getattr(self, key) is not None:
                values[key] = getattr(self, key)
        values['seed'] = get_config().get("seed") if self.seed is None else self.seed
        return values

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class StageOutcome:
    """Status, report and error of one pipeline stage."""
    name: str
    status: str = "skipped"
    report: Optional[Dict[str, Any]] = None
    error: str = ""
    exit_code: int = EXIT_PASS
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'status': self.status,
            'report': self.report,
            'error': self.error,
        }


@dataclass
class PipelineReport:
    """Every stage outcome in run order."""
    config: PipelineConfig
    stages: List[StageOutcome] = field(default_factory=list)

    def stage(self, name: str) -> Optional[StageOutcome]:
        return next((s for s in self.stages if s.name == name), None)

    @property
    def passed(self) -> bool:
        return len(self.stages) == len(STAGES) and all(s.passed for s in self.stages)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    @property
    def exit_code(self) -> int:
        if self.passed:
            return EXIT_PASS
        return max([EXIT_FAIL] + [s.exit_code for s in self.stages])

    def tables(self) -> Dict[str, List[Dict[str, Any]]]:
        return {s.name: s.rows for s in self.stages if s.rows}

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            'config': self.config.to_dict(),
            'stage_order': [s.name for s in self.stages],
            'status': self.status,
            'exit_code': self.exit_code,
        }
        for outcome in self.stages:
            out[outcome.name] = outcome.to_dict()
        return out


def combined_status(*statuses: str) -> str:
    """PASS only when every part passed."""
    return PASS if statuses and all(s == PASS for s in statuses) else FAIL


def _stage_config(values: Dict[str, Any]) -> StageConfig:
    # The spanning set needs N >= 960; the axis surrogate with a diagonal stress stands in for it
    return StageConfig(
        regime=values.get('regime', "A1"),
        alpha=float(parse_exponent(values.get('alpha', "5/4"))),
        lam=4.0,
        epsilon=0.025,
        time_samples=int(values['stage_time_samples']),
        radius_samples=500,
        seed=int(values['seed']),
        geometry="axis",
        kappa=0.0,
    )


def _run_certify(values: Dict[str, Any], outcome: StageOutcome) -> Certificate:
    exponents = Exponents.parse(values['alpha'], values.get('s', "0"), values['gamma'], values['p'])
    certificate = certify(exponents, eta_star=values.get('eta_star'), regime=values.get('regime'))
    outcome.report = certificate.to_dict()
    outcome.status = certificate.status
    return certificate


def _run_blocks(values: Dict[str, Any], outcome: StageOutcome) -> None:
    results = verify_all_blocks(lambdas=values['lambdas'])
    outcome.rows = [r.to_row() for r in results]
    outcome.report = {'results': [r.to_dict() for r in results]}
    outcome.status = PASS if all(r.passed for r in results) else FAIL


def _run_identities(values: Dict[str, Any], outcome: StageOutcome) -> None:
    suite = identity_suite(_stage_config(values), operator_grid=GridSpec(int(values['grid'])))
    outcome.rows = suite.rows()
    outcome.report = suite.to_dict()
    outcome.status = suite.status


def _run_iteration(values: Dict[str, Any], outcome: StageOutcome, decay: bool) -> None:
    stage_config = _stage_config(values)
    report = iterate_once(stage_config)
    outcome.report = {'iteration': report.to_dict()}
    if decay:
        decay_report = measure_decay(DESK_LAMBDAS, replace(stage_config, time_samples=DESK_TIME_SAMPLES))
        outcome.report['decay'] = decay_report.to_dict()
        outcome.rows = [
            {'lambda': lam, 'total_L1': norms['total']['L1'], 'status': decay_report.status}
            for lam, norms in zip(decay_report.lambdas, decay_report.norms)
        ]
        outcome.status = combined_status(report.status, decay_report.status)
        return
    outcome.status = report.status


def _run_glue(values: Dict[str, Any], outcome: StageOutcome) -> None:
    report = run_glue(GlueConfig.from_config(m=int(values['subdivisions']), theta=float(values['overlap'])))
    outcome.report = report.to_dict()
    outcome.status = report.status


def _guarded(outcome: StageOutcome, action: Callable[[], Any]) -> Any:
    """Run one stage, recording its error instead of raising."""
    try:
        return action()
    except (OutOfDomainError, InvalidParameterError) as e:
        logger.error("%s: invalid input: %s", outcome.name, e)
        outcome.status, outcome.error, outcome.exit_code = FAIL, f"{type(e).__name__}: {e}", EXIT_INPUT
    except ConvexIntegrationError as e:
        logger.error("%s failed: %s", outcome.name, e)
        outcome.status, outcome.error, outcome.exit_code = FAIL, f"{type(e).__name__}: {e}", EXIT_FAIL
    return None


def write_outputs(report: PipelineReport) -> None:
    """Whichever of JSON, CSV and workbook the config names."""
    config = report.config
    if config.report:
        write_json(report.to_dict(), config.report)
    if config.csv:
        rows: List[Dict[str, Any]] = []
        for name, table in report.tables().items():
            rows.extend({'stage': name, **row} for row in table)
        write_csv(rows, config.csv)
    if config.workbook:
        generate_report_workbook(report.to_dict(), config.workbook, report.tables(),
                                 title=f"Pipeline run: preset {config.preset}")


def run_pipeline(config: PipelineConfig, write: bool = True) -> PipelineReport:
    """
    Run every stage for one preset.

    Returns:
        The report; ``exit_code`` is 0 when every stage passed, 2 when the
        inputs were out of domain and 1 otherwise
    """
    report = PipelineReport(config)
    try:
        values = config.resolved()
    except KeyError as e:
        outcome = StageOutcome("certify", status=FAIL, error=str(e), exit_code=EXIT_INPUT)
        report.stages.append(outcome)
        if write:
            write_outputs(report)
        return report
    values['stage_time_samples'] = config.time_samples or STAGE_TIME_SAMPLES

    logger.info("Pipeline for preset %s", config.preset)
    outcome = StageOutcome("certify")
    report.stages.append(outcome)
    certificate = _guarded(outcome, lambda: _run_certify(values, outcome))
    if certificate is None or not certificate.passed:
        logger.warning("Certificate failed (%s); stopping at the regime gate",
                       outcome.error or (certificate.failure if certificate else ""))
        if write:
            write_outputs(report)
        return report

    values['regime'] = certificate.regime
    steps: Sequence = (
        ("blocks_scaling", lambda o: _run_blocks(values, o)),
        ("identities", lambda o: _run_identities(values, o)),
        ("iterate_once", lambda o: _run_iteration(values, o, config.decay)),
        ("glue", lambda o: _run_glue(values, o)),
    )
    for name, step in steps:
        outcome = StageOutcome(name)
        report.stages.append(outcome)
        logger.info("Stage %s", name)
        _guarded(outcome, lambda: step(outcome))
        logger.info("Stage %s: %s", name, outcome.status)

    if write:
        write_outputs(report)
    logger.info("Pipeline %s (exit %d)", report.status, report.exit_code)
    return report
