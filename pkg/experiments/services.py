import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from classifier.exceptions import SingleClassDataset
from classifier.serialization import load_model, save_model
from classifier.services import fit_classifier
from core.exceptions import ActiveSetError
from core.versioning import describe_version
from dcopf.polytope import build_polytope
from evaluation import reports
from evaluation.metrics import fixed_status_report, frequency_distribution
from evaluation.services import evaluate_policies
from evaluation.studies import depth_study, learning_curve
from grid.matpower import load_case
from grid.services import build_network, case_inventory, validate
from scenarios.sampling import build_distribution
from scenarios.services import discovery_curve, discovery_run, generate_dataset, relabel, split_dataset
from scenarios.storage import load_dataset, save_dataset

from .exceptions import CaseMismatch, InvalidNetwork, MissingInput, StrictModeViolation
from .models import ExperimentRun

logger = logging.getLogger(__name__)

DATASET = 'dataset.csv'
MODEL = 'model.json'


@dataclass
class CommandOutcome:
    summary: dict
    artifacts: list = field(default_factory=list)


def _existing(path, what):
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, what)
    return path


class ExperimentService:
    """End-to-end pipeline stages, each reading and writing files under output_dir"""

    COMMANDS = ('generate', 'train', 'evaluate', 'sweep', 'report')

    @classmethod
    def run(cls, command, cfg, **inputs):
        """Run one stage and keep an ExperimentRun record of it when the database allows"""
        if command not in cls.COMMANDS:
            raise ValueError(f"Unknown pipeline command: {command}")
        record = cls._start_record(command, cfg)
        try:
            outcome = getattr(cls, command)(cfg, **inputs)
        except ActiveSetError as e:
            cls._close_record(record, error=e, exit_code=e.exit_code)
            raise
        except Exception as e:
            cls._close_record(record, error=e, exit_code=1)
            raise
        cls._close_record(record, outcome=outcome)
        return outcome

    @classmethod
    def _start_record(cls, command, cfg):
        try:
            record = ExperimentRun.objects.create(
                command=command,
                case_name=cfg.case_name,
                seed=cfg.seed,
                config=cfg.to_dict(),
                version=describe_version(),
            )
            record.mark_as_running()
            return record
        except Exception as e:
            logger.error(f"Could not record {command} run: {str(e)}")
            return None

    @classmethod
    def _close_record(cls, record, outcome=None, error=None, exit_code=None):
        if record is None:
            return
        try:
            if error is None:
                record.mark_as_successful(reports.json_safe(outcome.summary), outcome.artifacts)
            else:
                record.mark_as_failed(str(error) or type(error).__name__, exit_code)
        except Exception as e:
            logger.error(f"Could not update run record {record.id}: {str(e)}")

    @classmethod
    def load_network(cls, cfg):
        path = cfg.require_case()
        net = build_network(load_case(path))
        diagnostics = validate(net)
        if diagnostics:
            raise InvalidNetwork(net.case_name, diagnostics)
        return net, build_polytope(net)

    @classmethod
    def _dataset(cls, path):
        return load_dataset(_existing(path, 'dataset file'))

    @classmethod
    def generate(cls, cfg):
        net, poly = cls.load_network(cfg)
        model = build_distribution(net, cfg.sigma_frac)
        out = cfg.output_path
        echo = cfg.to_dict()

        if cfg.n_samples is None:
            discovery = discovery_run(
                net, poly, model, cfg.seed, cfg.stopping.window, cfg.stopping.max_samples,
                tol_active=cfg.eval.tol_active,
            )
            n_samples, curve = discovery.n_samples, discovery.discovery_curve
        else:
            n_samples, curve = cfg.n_samples, None

        ds = generate_dataset(
            net, poly, model, n_samples, cfg.seed, threads=cfg.threads, tol_active=cfg.eval.tol_active,
        ).with_meta(extra={'config': echo})
        if curve is None:
            curve = discovery_curve(ds)

        artifacts = [
            save_dataset(ds, out / DATASET),
            reports.write_discovery_curve(out / reports.DISCOVERY_CURVE, curve, echo),
        ]
        summary = {
            'case': net.case_name,
            'n_requested': n_samples,
            'n_samples': len(ds),
            'n_infeasible': ds.meta.n_infeasible,
            'active_sets': len(ds.dictionary),
            'unseen_mass': ds.dictionary.unseen_mass(),
        }
        artifacts.append(reports.update_summary(out, echo, cfg.seed, 'generate', summary))
        return CommandOutcome(summary, artifacts)

    @classmethod
    def train(cls, cfg, dataset_path, strict=False):
        ds = cls._dataset(dataset_path)
        train_ds, _ = split_dataset(ds, cfg.train_fraction, cfg.seed)
        with warnings.catch_warnings():
            if strict:
                warnings.simplefilter('error', SingleClassDataset)
            try:
                result = fit_classifier(train_ds, cfg.nn)
            except SingleClassDataset as e:
                raise StrictModeViolation(str(e)) from e

        out = cfg.output_path
        echo = cfg.to_dict()
        model_path = out / MODEL
        result.model.run_config = echo
        model_path.parent.mkdir(parents=True, exist_ok=True)
        model_path.write_bytes(save_model(result.model))

        last = result.history[-1]
        summary = {
            'n_train': len(train_ds),
            'classes': result.model.k,
            'layer_widths': list(cfg.nn.layer_widths),
            'epochs': len(result.history),
            'final_loss': last.mean_loss,
            'train_top1': last.train_top1,
            'label_binding': result.model.label_binding,
        }
        artifacts = [
            model_path,
            reports.write_history(out / reports.HISTORY, result.history, echo),
            reports.update_summary(out, echo, cfg.seed, 'train', summary),
        ]
        logger.info(f"Saved model to {model_path}")
        return CommandOutcome(summary, artifacts)

    @classmethod
    def evaluate(cls, cfg, model_path, dataset_path, test_dataset_path=None):
        ds = cls._dataset(dataset_path)
        model = load_model(_existing(model_path, 'model file').read_bytes())
        net, poly = cls.load_network(cfg)
        if ds.meta.fingerprint and ds.meta.fingerprint != poly.fingerprint():
            raise CaseMismatch(net.case_name)

        if test_dataset_path:
            test = relabel(cls._dataset(test_dataset_path), ds.dictionary)
        else:
            _, test = split_dataset(ds, cfg.train_fraction, cfg.seed)

        report = evaluate_policies(
            model, ds.dictionary, poly, test, cfg.eval.K_list, cfg.eval.fallback_lp, cfg.eval.tol_feasible,
        )
        fixed = fixed_status_report(ds, poly)

        out = cfg.output_path
        echo = cfg.to_dict()
        artifacts = [
            reports.write_accuracy(out / reports.ACCURACY, report.accuracy, echo),
            reports.write_gaps(out / reports.GAPS, report, test, echo),
            *reports.write_fixed_status(out, fixed, echo),
            reports.write_frequency(out / reports.FREQUENCY, frequency_distribution(ds), echo),
        ]
        summary = {
            **report.to_dict(),
            'fixed_status': reports.fixed_status_summary(fixed),
            'active_sets': len(ds.dictionary),
        }
        artifacts.append(reports.update_summary(out, echo, cfg.seed, 'evaluate', summary))
        return CommandOutcome(summary, artifacts)

    @classmethod
    def sweep(cls, cfg, dataset_path):
        ds = cls._dataset(dataset_path)
        train_ds, test = split_dataset(ds, cfg.train_fraction, cfg.seed)
        out = cfg.output_path
        echo = cfg.to_dict()
        summary = {}
        artifacts = []

        if cfg.sweep.sizes:
            cells = learning_curve(train_ds, test, cfg.sweep.sizes, cfg.nn, cfg.eval.K_list)
            artifacts.append(reports.write_study(out / reports.LEARNING_CURVE, cells, 'size', echo))
            summary['learning_curve'] = [[c.parameter, c.K, c.accuracy] for c in cells]
        if cfg.sweep.depths:
            cells = depth_study(train_ds, test, cfg.sweep.depths, cfg.nn, cfg.eval.K_list)
            artifacts.append(reports.write_study(out / reports.ACCURACY_BY_DEPTH, cells, 'depth', echo))
            summary['accuracy_by_depth'] = [[c.parameter, c.K, c.accuracy] for c in cells]

        artifacts.append(reports.update_summary(out, echo, cfg.seed, 'sweep', summary))
        return CommandOutcome(summary, artifacts)

    @classmethod
    def report(cls, cfg, dataset_path=None):
        net, poly = cls.load_network(cfg)
        ds = cls._dataset(dataset_path) if dataset_path else None
        out = cfg.output_path
        echo = cfg.to_dict()

        inventory = case_inventory(net, ds.dictionary if ds is not None else None)
        artifacts = [reports.write_inventory(out / reports.INVENTORY, [inventory], echo)]
        summary = {'inventory': asdict(inventory)}
        if ds is not None:
            fixed = fixed_status_report(ds, poly)
            artifacts += reports.write_fixed_status(out, fixed, echo)
            artifacts.append(reports.write_frequency(out / reports.FREQUENCY, frequency_distribution(ds), echo))
            summary['fixed_status'] = reports.fixed_status_summary(fixed)

        artifacts.append(reports.update_summary(out, echo, cfg.seed, 'report', summary))
        return CommandOutcome(summary, artifacts)


def run_command(command, cfg, **inputs):
    return ExperimentService.run(command, cfg, **inputs)
