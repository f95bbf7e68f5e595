"""
Base models and the run registry
"""

import uuid
from django.db import models
from django.utils import timezone
from django.utils.translation import gettext_lazy as _

class BaseModel(models.Model):
    """
    Abstract base model that provides common fields for all models
    """
    id = models.UUIDField(
        primary_key=True, 
        default=uuid.uuid4, 
        editable=False,
        help_text=_("Unique identifier for the record")
    )
    created_at = models.DateTimeField(
        auto_now_add=True,
        verbose_name=_("created at"),
        help_text=_("Date and time when the record was created")
    )
    updated_at = models.DateTimeField(
        auto_now=True,
        verbose_name=_("updated at"),
        help_text=_("Date and time when the record was last updated")
    )
    is_active = models.BooleanField(
        default=True,
        verbose_name=_("is active"),
        help_text=_("Whether this record is active")
    )

    class Meta:
        abstract = True
        indexes = [
            models.Index(fields=['created_at']),
            models.Index(fields=['updated_at']),
            models.Index(fields=['is_active']),
        ]

class RunRecord(BaseModel):
    """
    One invocation of a pipeline command and the artifacts it left behind
    """
    STATUS_CHOICES = [
        ('RUNNING', _('Running')),
        ('COMPLETED', _('Completed')),
        ('FAILED', _('Failed')),
    ]

    command = models.CharField(
        max_length=50,
        verbose_name=_("command"),
        help_text=_("Management command that was executed"),
        db_index=True
    )
    run_dir = models.CharField(
        max_length=500,
        verbose_name=_("run directory"),
        help_text=_("Directory the command wrote its outputs to")
    )
    config_hash = models.CharField(
        max_length=16,
        verbose_name=_("config hash"),
        help_text=_("Short hash of the resolved run configuration"),
        db_index=True
    )
    parameters = models.JSONField(
        default=dict,
        verbose_name=_("parameters"),
        help_text=_("Resolved run configuration")
    )
    manifest = models.JSONField(
        default=dict,
        blank=True,
        verbose_name=_("manifest"),
        help_text=_("Input and output hashes recorded on completion")
    )
    status = models.CharField(
        max_length=15,
        choices=STATUS_CHOICES,
        default='RUNNING',
        verbose_name=_("status"),
        help_text=_("Current status of the run"),
        db_index=True
    )
    completed_at = models.DateTimeField(
        null=True,
        blank=True,
        verbose_name=_("completed at"),
        help_text=_("Date and time when the run finished")
    )
    duration = models.FloatField(
        null=True,
        blank=True,
        verbose_name=_("duration"),
        help_text=_("Wall-clock seconds the run took")
    )
    exit_code = models.IntegerField(
        null=True,
        blank=True,
        verbose_name=_("exit code")
    )
    error_message = models.TextField(
        blank=True,
        verbose_name=_("error message")
    )

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', 'status'], name='core_run_command_status_idx'),
            models.Index(fields=['config_hash', 'command'], name='core_run_hash_command_idx'),
        ]

    def __str__(self):
        return f"{self.command} [{self.status}] {self.run_dir}"

    def _finish(self, status, exit_code):
        self.status = status
        self.exit_code = exit_code
        self.completed_at = timezone.now()
        self.duration = (self.completed_at - self.created_at).total_seconds()

    def mark_completed(self, manifest=None):
        """Mark the run as completed"""
        self._finish('COMPLETED', 0)
        self.manifest = manifest or {}
        self.save(update_fields=['status', 'exit_code', 'completed_at', 'duration', 'manifest'])

    def mark_failed(self, error_message=None, exit_code=4):
        """Mark the run as failed"""
        self._finish('FAILED', exit_code)
        self.error_message = error_message or ''
        self.save(update_fields=['status', 'exit_code', 'completed_at', 'duration', 'error_message'])
