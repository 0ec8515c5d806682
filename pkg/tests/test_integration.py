"""
Integration tests for the command line and the staged pipeline.
"""
import contextlib
import io
import json
import os
import sys
import tempfile
import unittest
from unittest import mock

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from openpyxl import load_workbook

from config import FAIL, PASS
from harness import pipeline
from harness.pipeline import STAGES, PipelineConfig, run_pipeline
from main import main, parse_arguments
from spectral.snapshot import load_snapshot


def run_cli(*argv):
    """Run the CLI, returning the exit code and captured standard output."""
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(list(argv))
    return code, out.getvalue()


class TestArguments(unittest.TestCase):
    """Argument parsing."""

    def test_global_flags_after_command(self):
        """Shared flags are accepted after the subcommand."""
        args = parse_arguments(['glue', '--seed', '7', '--grid', '8', '--time-samples', '513',
                                '--report', 'out.json'])
        self.assertEqual(args.command, 'glue')
        self.assertEqual(args.seed, 7)
        self.assertEqual(args.grid, 8)
        self.assertEqual(args.time_samples, 513)
        self.assertEqual(args.report, 'out.json')

    def test_fraction_lists(self):
        """Sweeps accept fractions and integers."""
        args = parse_arguments(['decorrelation', '--sigmas', '4,8,16', '--p', '2,7/2'])
        self.assertEqual(args.sigmas, [4.0, 8.0, 16.0])
        self.assertEqual(args.p, [2.0, 3.5])

    def test_snapshot_flag_spellings(self):
        """iterate-once takes --lambda and --input; glue takes --state, --m and --theta."""
        args = parse_arguments(['iterate-once', '--lambda', '4', '--input', 'state.bin', '--geometry', 'axis'])
        self.assertEqual((args.lam, args.input, args.geometry), (4.0, 'state.bin', 'axis'))
        args = parse_arguments(['glue', '--state', 'in.bin', '--m', '4', '--theta', '0.03125'])
        self.assertEqual((args.state, args.subdivisions, args.overlap), ('in.bin', 4, 0.03125))
        args = parse_arguments(['glue', '--subdivisions', '4', '--overlap', '0.5'])
        self.assertEqual((args.subdivisions, args.overlap), (4, 0.5))


class TestCertifyCommand(unittest.TestCase):
    """The certify subcommand and its exit codes."""

    def test_space_endpoint_passes(self):
        """A1 exponents certify with exit 0 and JSON on standard output."""
        code, out = run_cli('certify', '--alpha', '5/4', '--s', '0', '--gamma', 'inf', '--p', '7/5')
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data['status'], PASS)
        self.assertEqual(data['regime'], 'A1')

    def test_failing_preset(self):
        """The Lions exponent with p = 2 fails at the regime gate."""
        code, out = run_cli('certify', '--preset', 'failing')
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(out)['status'], FAIL)

    def test_out_of_domain(self):
        """alpha outside [1, 2) exits with 2."""
        code, _ = run_cli('certify', '--alpha', '3', '--s', '0', '--gamma', 'inf', '--p', '2')
        self.assertEqual(code, 2)

    def test_missing_exponent(self):
        """Exponents must all be given without a preset."""
        code, _ = run_cli('certify', '--alpha', '5/4', '--s', '0')
        self.assertEqual(code, 2)

    def test_unknown_preset(self):
        """Unknown presets are an input error."""
        code, _ = run_cli('certify', '--preset', 'nowhere')
        self.assertEqual(code, 2)

    def test_report_file(self):
        """--report writes the same certificate to disk."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "cert.json")
            code, out = run_cli('certify', '--preset', 'A2', '--report', path)
            self.assertEqual(code, 0)
            with open(path, encoding='utf-8') as fh:
                saved = json.load(fh)
        self.assertEqual(saved['status'], json.loads(out)['status'])
        self.assertEqual(saved['regime'], 'A2')


class TestExperimentCommands(unittest.TestCase):
    """Lemma experiments through the CLI."""

    def test_decorrelation_outputs(self):
        """JSON, CSV and workbook are all written."""
        with tempfile.TemporaryDirectory() as tmp:
            report = os.path.join(tmp, "deco.json")
            csv_path = os.path.join(tmp, "deco.csv")
            workbook = os.path.join(tmp, "deco.xlsx")
            code, _ = run_cli('decorrelation', '--sigmas', '4,8,16,32', '--p', '2',
                              '--report', report, '--csv', csv_path, '--workbook', workbook)
            self.assertEqual(code, 0)
            with open(report, encoding='utf-8') as fh:
                self.assertEqual(json.load(fh)['status'], PASS)
            self.assertTrue(os.path.exists(csv_path))
            self.assertIn("decorrelation", load_workbook(workbook).sheetnames)

    def test_bad_sigma_is_input_error(self):
        """A non-integer sigma exits with 2."""
        code, _ = run_cli('decorrelation', '--sigmas', '4.5,8,16', '--p', '2')
        self.assertEqual(code, 2)

    def test_semigroup_experiment(self):
        """Named experiments run through the generic subcommand."""
        code, _ = run_cli('experiment', 'semigroup', '--grid', '32')
        self.assertEqual(code, 0)


class TestPipeline(unittest.TestCase):
    """The staged pipeline."""

    def test_failing_preset_stops_at_gate(self):
        """A failed certificate short-circuits with exit 1."""
        report = run_pipeline(PipelineConfig(preset="failing"), write=False)
        self.assertEqual([s.name for s in report.stages], ["certify"])
        self.assertEqual(report.exit_code, 1)
        self.assertEqual(report.status, FAIL)

    def test_unknown_preset(self):
        """An unknown preset is recorded as an input error."""
        report = run_pipeline(PipelineConfig(preset="nowhere"), write=False)
        self.assertEqual(report.exit_code, 2)
        self.assertIn("nowhere", report.stages[0].error)

    def test_failing_preset_report_written(self):
        """Even a short-circuited run writes its report."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.json")
            run_pipeline(PipelineConfig(preset="failing", report=path))
            with open(path, encoding='utf-8') as fh:
                data = json.load(fh)
        self.assertEqual(data['stage_order'], ["certify"])
        self.assertEqual(data['exit_code'], 1)


class TestFullPipeline(unittest.TestCase):
    """One complete A1 run."""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.json_path = os.path.join(cls.tmp.name, "run.json")
        cls.workbook_path = os.path.join(cls.tmp.name, "run.xlsx")
        cls.report = run_pipeline(PipelineConfig(preset="A1", decay=False, report=cls.json_path,
                                                 workbook=cls.workbook_path))

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_stage_order(self):
        """Every stage runs in order."""
        self.assertEqual(tuple(s.name for s in self.report.stages), STAGES)

    def test_every_stage_passes(self):
        """The A1 preset passes end to end."""
        for stage in self.report.stages:
            self.assertEqual(stage.status, PASS, f"{stage.name}: {stage.error}")
        self.assertEqual(self.report.exit_code, 0)

    def test_reports_written(self):
        """The JSON report and the workbook exist and agree on status."""
        with open(self.json_path, encoding='utf-8') as fh:
            data = json.load(fh)
        self.assertEqual(data['status'], self.report.status)
        self.assertEqual(data['stage_order'], list(STAGES))
        sheets = load_workbook(self.workbook_path).sheetnames
        self.assertEqual(sheets[0], "Summary")
        self.assertIn("blocks_scaling", sheets)


class TestSnapshotCommands(unittest.TestCase):
    """glue writes snapshots that glue and iterate-once read back."""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.velocity = os.path.join(cls.tmp.name, "glued.bin")
        cls.stress = os.path.join(cls.tmp.name, "glued_stress.bin")
        cls.first, _ = run_cli('glue', '--m', '8', '--theta', '0.015625', '--out', cls.velocity,
                               '--out-stress', cls.stress)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_glue_writes_both_fields(self):
        """The glued velocity and stress share one time-sampled grid."""
        velocity, stress = load_snapshot(self.velocity), load_snapshot(self.stress)
        self.assertEqual((velocity.rank, stress.rank), (1, 2))
        self.assertEqual(velocity.grid, stress.grid)
        self.assertTrue(velocity.time_sampled)

    def test_glue_reads_stored_state(self):
        """A stored state is glued again; its bad set keeps it well prepared."""
        path = os.path.join(self.tmp.name, "again.json")
        code, _ = run_cli('glue', '--state', self.velocity, '--state-stress', self.stress, '--m', '8',
                          '--theta', '0.015625', '--report', path)
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
        self.assertIn(code, (0, 1))
        self.assertEqual(data['input_well_prepared'], PASS)

    def test_iterate_once_reads_stored_velocity(self):
        """iterate-once builds its stage on the stored velocity, resampled to the stage grid."""
        path = os.path.join(self.tmp.name, "stage.json")
        code, _ = run_cli('iterate-once', '--regime', 'A2', '--alpha', '3/2', '--lambda', '4', '--geometry', 'axis',
                          '--time-samples', '9', '--input', self.velocity, '--report', path)
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
        self.assertIn(code, (0, 1))
        self.assertEqual(data['iteration']['geometry']['grid'], 48)
        self.assertFalse(data['iteration']['geometry']['spans'])

    def test_missing_snapshot(self):
        """An unreadable snapshot path is an error, not a silent synthetic run."""
        code, _ = run_cli('glue', '--state', os.path.join(self.tmp.name, "absent.bin"))
        self.assertEqual(code, 2)


class TestIterationStatus(unittest.TestCase):
    """The iterate_once pipeline stage folds in its decay sweep."""

    class Stub:
        def __init__(self, status):
            self.status = status
            self.lambdas = [2.0, 4.0, 8.0]
            self.norms = [{'total': {'L1': 1.0}}] * 3

        def to_dict(self):
            return {'status': self.status}

    values = {'regime': "A1", 'alpha': "5/4", 'stage_time_samples': 9, 'seed': 7}

    def run_stage(self, iteration, decay):
        outcome = pipeline.StageOutcome("iterate_once")
        with mock.patch.object(pipeline, "iterate_once", return_value=self.Stub(iteration)), \
                mock.patch.object(pipeline, "measure_decay", return_value=self.Stub(decay)) as sweep:
            pipeline._run_iteration(self.values, outcome, decay=True)
        return outcome, sweep

    def test_decay_failure_fails_the_stage(self):
        """A passing step with a non-decreasing sweep is a FAIL."""
        outcome, _ = self.run_stage(PASS, FAIL)
        self.assertEqual(outcome.status, FAIL)
        self.assertEqual({row['status'] for row in outcome.rows}, {FAIL})

    def test_both_pass(self):
        """Step and sweep passing give PASS."""
        outcome, sweep = self.run_stage(PASS, PASS)
        self.assertEqual(outcome.status, PASS)
        lambdas, config = sweep.call_args[0]
        self.assertEqual(lambdas, pipeline.DESK_LAMBDAS)
        self.assertEqual((config.geometry, config.kappa, config.time_samples), ("axis", 0.0, 5))

    def test_step_failure_kept(self):
        """A failing step stays FAIL whatever the sweep says."""
        outcome, _ = self.run_stage(FAIL, PASS)
        self.assertEqual(outcome.status, FAIL)

    def test_combined_status(self):
        """Only all-PASS combines to PASS."""
        self.assertEqual(pipeline.combined_status(PASS, PASS), PASS)
        self.assertEqual(pipeline.combined_status(PASS, FAIL), FAIL)
        self.assertEqual(pipeline.combined_status(), FAIL)


if __name__ == '__main__':
    unittest.main()
