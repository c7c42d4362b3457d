from django.db import models
from django.utils import timezone

from core.models import BaseModel


class ExperimentRun(BaseModel):
    """Audit record of one pipeline command"""

    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('success', 'Success'),
        ('failed', 'Failed'),
    ]

    COMMAND_CHOICES = [
        ('generate', 'Generate'),
        ('train', 'Train'),
        ('evaluate', 'Evaluate'),
        ('sweep', 'Sweep'),
        ('report', 'Report'),
    ]

    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    case_name = models.CharField(max_length=200, blank=True)
    seed = models.BigIntegerField(default=0)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    exit_code = models.IntegerField(null=True, blank=True)

    config = models.JSONField(default=dict, blank=True, help_text="Resolved run configuration")
    summary = models.JSONField(default=dict, blank=True)
    artifacts = models.JSONField(default=list, blank=True, help_text="Paths written by the command")
    version = models.CharField(max_length=100, blank=True)

    started_at = models.DateTimeField(null=True, blank=True)
    finished_at = models.DateTimeField(null=True, blank=True)
    error_message = models.TextField(blank=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', 'status'], name='experiments_command_3f2a1c_idx'),
            models.Index(fields=['case_name', 'created_at'], name='experiments_case_na_8b41d7_idx'),
        ]

    def __str__(self):
        return f"{self.command} {self.case_name or '-'} (seed {self.seed}) - {self.status}"

    @property
    def is_finished(self):
        return self.status in ['success', 'failed']

    @property
    def duration(self):
        if self.started_at and self.finished_at:
            return self.finished_at - self.started_at
        return None

    def mark_as_running(self):
        self.status = 'running'
        self.started_at = timezone.now()
        self.save(update_fields=['status', 'started_at', 'updated_at'])

    def mark_as_successful(self, summary=None, artifacts=None):
        self.status = 'success'
        self.exit_code = 0
        if summary:
            self.summary.update(summary)
        if artifacts:
            self.artifacts = [str(path) for path in artifacts]
        self.finished_at = timezone.now()
        self.save(update_fields=['status', 'exit_code', 'summary', 'artifacts', 'finished_at', 'updated_at'])

    def mark_as_failed(self, error_message=None, exit_code=None):
        self.status = 'failed'
        if error_message:
            self.error_message = error_message
        if exit_code is not None:
            self.exit_code = exit_code
        self.finished_at = timezone.now()
        self.save(update_fields=['status', 'error_message', 'exit_code', 'finished_at', 'updated_at'])
