import logging

from celery import shared_task
from django.core.management import call_command
from django.core.management.base import CommandError

logger = logging.getLogger(__name__)


@shared_task
def run_experiment_task(command, options=None):
    """Run a pipeline management command in a worker"""
    try:
        call_command(command, **(options or {}))
        return True
    except CommandError as e:
        logger.error(f"Queued {command} exited with code {e.returncode}: {str(e)}")
        return False
    except Exception as e:
        logger.error(f"Error in run_experiment_task ({command}): {str(e)}")
        return False
