"""Shared plumbing for the pipeline management commands."""
import logging

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ActiveSetError

from .config import load_run_config
from .services import run_command

logger = logging.getLogger(__name__)


class PipelineCommand(BaseCommand):
    """Base for generate/train/evaluate/sweep/report.

    Subclasses set ``command`` and implement ``stage_inputs`` and
    ``describe``. Pipeline errors leave the process with their exit code:
    2 for bad input, 3 for binding or config mismatches, 4 for numerical
    failures.
    """

    command = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON run configuration')
        parser.add_argument('--case', dest='case_path', help='MATPOWER case file')
        parser.add_argument('--seed', type=int, help='Root seed of every random stream')
        parser.add_argument('--threads', type=int, help='Worker threads (default OPF_ACTIVESET_THREADS)')
        parser.add_argument('--output-dir', help='Directory for every file the command writes')
        parser.add_argument(
            '--queue',
            action='store_true',
            help='Hand the command to a Celery worker instead of running it here',
        )
        self.add_stage_arguments(parser)

    def add_stage_arguments(self, parser):
        pass

    def overrides(self, options):
        return {
            'case_path': options.get('case_path'),
            'seed': options.get('seed'),
            'threads': options.get('threads'),
            'output_dir': options.get('output_dir'),
        }

    def stage_inputs(self, options):
        return {}

    def describe(self, outcome):
        return ''

    def handle(self, *args, **options):
        if options.get('queue'):
            return self.enqueue(options)

        try:
            cfg = load_run_config(options.get('config'), self.overrides(options))
            outcome = run_command(self.command, cfg, **self.stage_inputs(options))
        except ActiveSetError as e:
            logger.error(f"{self.command} failed: {str(e)}")
            raise CommandError(str(e), returncode=e.exit_code) from e

        message = self.describe(outcome)
        if message:
            self.stdout.write(message)
        self.stdout.write(self.style.SUCCESS(f"{self.command} complete: {len(outcome.artifacts)} files written"))
        for path in outcome.artifacts:
            self.stdout.write(f"  {path}")

    def enqueue(self, options):
        from .tasks import run_experiment_task

        forwarded = {
            key: value for key, value in options.items()
            if key not in ('queue', 'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color',
                           'force_color', 'skip_checks', 'stdout', 'stderr')
            and value is not None
        }
        result = run_experiment_task.delay(self.command, forwarded)
        self.stdout.write(self.style.SUCCESS(f"Queued {self.command} as task {result.id}"))
