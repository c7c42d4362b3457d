"""Plot-ready report files.

Every CSV opens with two comment lines, the generation timestamp and the run
configuration as sorted JSON. Everything below them depends only on the
inputs, so two runs with the same config differ in the first line only.
"""
import csv
import json
import logging
import math
from pathlib import Path

from django.utils import timezone

from core.versioning import describe_version

logger = logging.getLogger(__name__)

ACCURACY = 'accuracy.csv'
ACCURACY_BY_DEPTH = 'accuracy_by_depth.csv'
LEARNING_CURVE = 'learning_curve.csv'
FIXED_STATUS = 'fixed_status.csv'
FIXED_STATUS_ELEMENTS = 'fixed_status_elements.csv'
FREQUENCY = 'frequency.csv'
GAPS = 'gaps.csv'
INVENTORY = 'inventory.csv'
DISCOVERY_CURVE = 'discovery_curve.csv'
HISTORY = 'history.csv'
SUMMARY = 'summary.json'


def format_cell(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ''
    if isinstance(value, (tuple, list)):
        return ' '.join(str(v) for v in value)
    return str(value)


def write_csv(path, columns, rows, config=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        handle.write(f"# generated: {timezone.now().isoformat()}\n")
        handle.write(f"# config: {json.dumps(config or {}, sort_keys=True)}\n")
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def read_csv_body(path):
    """The rows below the comment lines, header included"""
    with Path(path).open('r', encoding='utf-8', newline='') as handle:
        lines = [line for line in handle if not line.startswith('#')]
    return list(csv.reader(lines))


def json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_safe(payload), sort_keys=True, indent=2) + '\n', encoding='utf-8')
    logger.debug(f"Wrote {path}")
    return path


def update_summary(output_dir, config, seed, stage, section):
    """Record one pipeline stage in summary.json, keeping the other stages"""
    path = Path(output_dir) / SUMMARY
    stages = {}
    if path.is_file():
        try:
            stages = json.loads(path.read_text(encoding='utf-8')).get('stages', {})
        except ValueError:
            logger.warning(f"Replacing unreadable {path}")
    stages[stage] = {'config': config, 'generated': timezone.now().isoformat(), **section}
    payload = {
        'version': describe_version(),
        'seed': seed,
        'config': config,
        'stages': stages,
    }
    return write_json(path, payload)


def write_study(path, cells, parameter, config=None):
    return write_csv(
        path,
        [parameter, 'K', 'accuracy', 'n_train'],
        [(c.parameter, c.K, c.accuracy, c.n_train) for c in cells],
        config,
    )


def write_accuracy(path, accuracy, config=None):
    return write_csv(path, ['K', 'accuracy'], sorted(accuracy.items()), config)


def write_fixed_status(output_dir, report, config=None):
    rows_path = write_csv(
        Path(output_dir) / FIXED_STATUS,
        ['row', 'constraint', 'active_count', 'n_samples', 'fixed'],
        [(r.row, r.label, r.active_count, report.n_samples, r.fixed) for r in report.rows],
        config,
    )
    elements_path = write_csv(
        Path(output_dir) / FIXED_STATUS_ELEMENTS,
        ['kind', 'element', 'free', 'upper', 'lower', 'fixed'],
        [
            (e.kind, e.element, e.counts['free'], e.counts['upper'], e.counts['lower'], e.fixed)
            for e in report.elements
        ],
        config,
    )
    return [rows_path, elements_path]


def fixed_status_summary(report):
    return {
        'n_samples': report.n_samples,
        'generator_fixed_pct': report.generator_fixed_pct,
        'flow_fixed_pct': report.flow_fixed_pct,
        'generator_element_fixed_pct': report.generator_element_fixed_pct,
        'flow_element_fixed_pct': report.flow_element_fixed_pct,
    }


def write_frequency(path, table, config=None):
    return write_csv(
        path,
        ['label', 'count', 'frequency', 'rows'],
        [(r.label, r.count, r.frequency, r.rows) for r in table],
        config,
    )


def write_gaps(path, report, test, config=None):
    """One row per test sample and policy"""
    rows = []
    for summary in report.policies:
        key = summary.K if summary.K is not None else summary.name
        for sample, result in zip(test.samples, report.results[key]):
            rows.append((
                summary.name, sample.index, sample.label, result.chosen_set, result.outcome.value,
                result.candidates_evaluated, sample.cost, float(result.cost), result.fallback_used,
            ))
    return write_csv(
        path,
        ['policy', 'index', 'true_label', 'chosen_label', 'outcome', 'candidates', 'true_cost', 'policy_cost',
         'fallback'],
        rows,
        config,
    )


def write_inventory(path, rows, config=None):
    return write_csv(
        path,
        ['case', 'buses', 'generators', 'branches', 'generator_constraints', 'flow_constraints', 'active_sets'],
        [
            (r.case, r.buses, r.generators, r.branches, r.generator_constraints, r.flow_constraints, r.active_sets)
            for r in rows
        ],
        config,
    )


def write_discovery_curve(path, curve, config=None):
    return write_csv(path, ['samples', 'active_sets'], curve, config)


def write_history(path, history, config=None):
    return write_csv(
        path,
        ['epoch', 'mean_loss', 'train_top1'],
        [(r.epoch, r.mean_loss, r.train_top1) for r in history],
        config,
    )
