import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from classifier.training import TrainConfig
from core.exceptions import ConfigError
from evaluation.reports import read_csv_body
from grid.testing import CASES_DIR
from scenarios.exceptions import NegativeSigmaFrac
from scenarios.storage import load_dataset

from .config import RunConfig, load_run_config
from .exceptions import MissingInput
from .models import ExperimentRun
from .tasks import run_experiment_task

RING = str(CASES_DIR / 'case3_ring.m')
MESH = str(CASES_DIR / 'case4_colocated.m')

SMALL_NN = {'layer_widths': [8, 6], 'epochs': 1, 'batch_size': 16, 'dropout_rate': 0.0}


def write_config(directory, **values):
    path = Path(directory) / 'run.json'
    path.write_text(json.dumps(values), encoding='utf-8')
    return str(path)


def dataset_body(path):
    """Dataset file without its header lines"""
    return path.read_bytes().split(b'\n', 2)[2]


class RunConfigTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        cfg = load_run_config()
        self.assertEqual(cfg.sigma_frac, 0.03)
        self.assertEqual(cfg.eval.K_list, (1, 2, 3))
        self.assertEqual(cfg.nn.layer_widths, (256, 256, 128, 128, 64))
        self.assertEqual(cfg.eval.tol_feasible, 1e-6)

    def test_flags_beat_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, seed=4, n_samples=100, eval={'K_list': [1, 2], 'fallback_lp': True})
            cfg = load_run_config(path, {'seed': 9, 'eval': {'K_list': None}})
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.n_samples, 100)
        self.assertEqual(cfg.eval.K_list, (1, 2))
        self.assertTrue(cfg.eval.fallback_lp)

    def test_network_seed_follows_run_seed(self):
        self.assertEqual(RunConfig.from_dict({'seed': 7}).nn.seed, 7)
        self.assertEqual(RunConfig.from_dict({'seed': 7, 'nn': {'seed': 2}}).nn.seed, 2)

    def test_unknown_keys(self):
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({'sigma': 0.1})
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({'eval': {'K': [1]}})

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({'eval': {'K_list': [0, 1]}})
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({'train_fraction': 1.0})
        with self.assertRaises(NegativeSigmaFrac):
            RunConfig.from_dict({'sigma_frac': -0.1})

    def test_missing_file(self):
        with self.assertRaises(MissingInput) as raised:
            load_run_config('/nonexistent/run.json')
        self.assertEqual(raised.exception.exit_code, 2)

    def test_echo_is_json(self):
        cfg = RunConfig.from_dict({'case_path': RING, 'nn': SMALL_NN})
        echo = json.loads(json.dumps(cfg.to_dict()))
        self.assertEqual(echo['nn']['layer_widths'], [8, 6])
        self.assertEqual(echo['eval']['K_list'], [1, 2, 3])
        self.assertEqual(TrainConfig.from_dict(echo['nn']), cfg.nn)


class PipelineCommandTests(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def call(self, command, *args, **options):
        out = StringIO()
        call_command(command, *args, stdout=out, **options)
        return out.getvalue()

    def generate(self, output, case=MESH, n_samples=60, **extra):
        config = write_config(self.tmp, sigma_frac=0.1, nn=SMALL_NN)
        self.call(
            'generate', config=config, case_path=case, n_samples=n_samples, output_dir=str(output), **extra
        )
        return output / 'dataset.csv'

    def test_full_pipeline(self):
        out = self.tmp / 'run'
        dataset = self.generate(out)
        ds = load_dataset(dataset)
        self.assertEqual(ds.meta.n_requested, 60)
        self.assertEqual(ds.meta.extra['config']['case_path'], MESH)
        self.assertEqual(ds.meta.extra['config']['seed'], 0)
        curve = read_csv_body(out / 'discovery_curve.csv')
        self.assertEqual(curve[0], ['samples', 'active_sets'])
        self.assertEqual(curve[-1], ['60', str(len(ds.dictionary))])

        config = write_config(self.tmp, sigma_frac=0.1, nn=SMALL_NN)
        self.call('train', config=config, case_path=MESH, dataset=str(dataset), output_dir=str(out))
        history = read_csv_body(out / 'history.csv')
        self.assertEqual(history[0], ['epoch', 'mean_loss', 'train_top1'])
        self.assertEqual(len(history), 2)
        run_config = json.loads((out / 'model.json').read_text())['run_config']
        self.assertEqual(run_config['seed'], 0)
        self.assertEqual(run_config['nn']['layer_widths'], [8, 6])
        self.assertEqual(run_config['output_dir'], str(out))

        output = self.call(
            'evaluate', config=config, case_path=MESH, model=str(out / 'model.json'), dataset=str(dataset),
            output_dir=str(out), K_list=[1, 2],
        )
        self.assertIn('eta_1', output)
        accuracy = read_csv_body(out / 'accuracy.csv')
        self.assertEqual([row[0] for row in accuracy], ['K', '1', '2'])
        self.assertLessEqual(float(accuracy[1][1]), float(accuracy[2][1]))
        for name in ('gaps.csv', 'fixed_status.csv', 'fixed_status_elements.csv', 'frequency.csv'):
            self.assertTrue((out / name).is_file(), name)

        self.call('report', case_path=MESH, dataset=str(dataset), output_dir=str(out))
        inventory = read_csv_body(out / 'inventory.csv')
        self.assertEqual(inventory[1], ['case4_colocated', '4', '3', '5', '6', '8', str(len(ds.dictionary))])

        summary = json.loads((out / 'summary.json').read_text())
        self.assertEqual(set(summary['stages']), {'generate', 'train', 'evaluate', 'report'})
        self.assertIn('version', summary)
        self.assertEqual(summary['stages']['evaluate']['accuracy']['2'], float(accuracy[2][1]))

        runs = ExperimentRun.objects.all()
        self.assertEqual(runs.count(), 4)
        self.assertTrue(all(run.status == 'success' and run.exit_code == 0 for run in runs))
        self.assertEqual(runs.filter(command='train').get().case_name, 'case4_colocated')

    def test_single_sample_dataset(self):
        dataset = self.generate(self.tmp / 'one', n_samples=1)
        self.assertEqual(len(load_dataset(dataset)), 1)

    def test_reproducible_across_threads(self):
        first = self.generate(self.tmp / 'a', threads=1)
        second = self.generate(self.tmp / 'b', threads=3)
        self.assertEqual(dataset_body(first), dataset_body(second))
        self.assertEqual(load_dataset(second).meta.extra['config']['threads'], 3)
        self.assertEqual(
            read_csv_body(self.tmp / 'a' / 'discovery_curve.csv'),
            read_csv_body(self.tmp / 'b' / 'discovery_curve.csv'),
        )

    def test_training_is_reproducible(self):
        dataset = self.generate(self.tmp / 'data')
        config = write_config(self.tmp, nn=SMALL_NN)
        for name in ('a', 'b'):
            self.call('train', config=config, dataset=str(dataset), output_dir=str(self.tmp / name))
        first, second = (json.loads((self.tmp / name / 'model.json').read_text()) for name in ('a', 'b'))
        self.assertNotEqual(first.pop('run_config'), second.pop('run_config'))
        self.assertEqual(first, second)

    def test_sweep(self):
        dataset = self.generate(self.tmp / 'data')
        config = write_config(self.tmp, nn=SMALL_NN, eval={'K_list': [1, 2]})
        self.call(
            'sweep', config=config, dataset=str(dataset), output_dir=str(self.tmp / 'sweep'),
            sizes=[10, 20], depths=[1, 2],
        )
        curve = read_csv_body(self.tmp / 'sweep' / 'learning_curve.csv')
        self.assertEqual(curve[0], ['size', 'K', 'accuracy', 'n_train'])
        self.assertEqual([row[:2] for row in curve[1:]], [['10', '1'], ['10', '2'], ['20', '1'], ['20', '2']])
        depth = read_csv_body(self.tmp / 'sweep' / 'accuracy_by_depth.csv')
        self.assertEqual(len(depth), 5)

    def test_missing_case_exits_2(self):
        missing = str(self.tmp / 'nowhere.m')
        with self.assertRaises(CommandError) as raised:
            self.call('generate', case_path=missing, output_dir=str(self.tmp))
        self.assertEqual(raised.exception.returncode, 2)
        self.assertIn('nowhere.m', str(raised.exception))
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertEqual(run.exit_code, 2)

    def test_unknown_bus_exits_2(self):
        text = Path(RING).read_text(encoding='utf-8').replace('\n\t1\t50\t', '\n\t99\t50\t', 1)
        case = self.tmp / 'stray_gen.m'
        case.write_text(text, encoding='utf-8')
        with self.assertRaises(CommandError) as raised:
            self.call('report', case_path=str(case), output_dir=str(self.tmp))
        self.assertEqual(raised.exception.returncode, 2)
        self.assertIn('99', str(raised.exception))

    def test_binding_mismatch_exits_3(self):
        out = self.tmp / 'run'
        dataset = self.generate(out)
        config = write_config(self.tmp, nn=SMALL_NN)
        self.call('train', config=config, dataset=str(dataset), output_dir=str(out))
        model_path = out / 'model.json'
        payload = json.loads(model_path.read_text())
        payload['label_binding'] = '0' * 64
        model_path.write_text(json.dumps(payload))

        with self.assertRaises(CommandError) as raised:
            self.call('evaluate', case_path=MESH, model=str(model_path), dataset=str(dataset), output_dir=str(out))
        self.assertEqual(raised.exception.returncode, 3)

    def test_strict_single_class_training(self):
        out = self.tmp / 'ring'
        config = write_config(self.tmp, nn=SMALL_NN)
        self.call('generate', config=config, case_path=RING, n_samples=20, output_dir=str(out))
        dataset = str(out / 'dataset.csv')

        with self.assertRaises(CommandError) as raised:
            self.call('train', config=config, dataset=dataset, output_dir=str(out), strict=True)
        self.assertEqual(raised.exception.returncode, 3)

        self.call('train', config=config, dataset=dataset, output_dir=str(out))
        self.assertTrue((out / 'model.json').is_file())

    def test_empty_split_exits_2(self):
        out = self.tmp / 'tiny'
        dataset = self.generate(out, n_samples=2)
        config = write_config(self.tmp, nn=SMALL_NN, train_fraction=0.9)
        with self.assertRaises(CommandError) as raised:
            self.call('train', config=config, dataset=str(dataset), output_dir=str(out))
        self.assertEqual(raised.exception.returncode, 2)

    def test_queue_hands_off_to_celery(self):
        with mock.patch('experiments.tasks.run_experiment_task.delay') as delay:
            delay.return_value.id = 'task-1'
            output = self.call('report', case_path=MESH, output_dir=str(self.tmp), queue=True)
        delay.assert_called_once()
        command, options = delay.call_args.args
        self.assertEqual(command, 'report')
        self.assertEqual(options['case_path'], MESH)
        self.assertNotIn('queue', options)
        self.assertIn('task-1', output)
        self.assertFalse(ExperimentRun.objects.exists())


class RunExperimentTaskTests(TestCase):
    def test_runs_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertTrue(run_experiment_task('report', {'case_path': RING, 'output_dir': tmp}))
            self.assertTrue((Path(tmp) / 'inventory.csv').is_file())

    def test_failure_returns_false(self):
        self.assertFalse(run_experiment_task('report', {'case_path': '/nonexistent.m'}))


class ExperimentRunModelTests(TestCase):
    def test_lifecycle(self):
        run = ExperimentRun.objects.create(command='generate', case_name='case3_ring', seed=1)
        self.assertEqual(run.status, 'pending')
        run.mark_as_running()
        self.assertIsNotNone(run.started_at)
        run.mark_as_successful({'active_sets': 1}, [Path('/tmp/dataset.csv')])
        run.refresh_from_db()
        self.assertTrue(run.is_finished)
        self.assertEqual(run.summary, {'active_sets': 1})
        self.assertEqual(run.artifacts, ['/tmp/dataset.csv'])
        self.assertIsNotNone(run.duration)

    def test_failure(self):
        run = ExperimentRun.objects.create(command='train')
        run.mark_as_failed('Cannot train on an empty dataset', 2)
        run.refresh_from_db()
        self.assertEqual(run.status, 'failed')
        self.assertEqual(run.exit_code, 2)
        self.assertIn('case', str(ExperimentRun(command='report', case_name='case')))
