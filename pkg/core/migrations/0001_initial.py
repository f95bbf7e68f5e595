# Generated by Django 5.2.4 on 2026-10-17 09:12

import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, help_text='Unique identifier for the record', primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True, help_text='Date and time when the record was created', verbose_name='created at')),
                ('updated_at', models.DateTimeField(auto_now=True, help_text='Date and time when the record was last updated', verbose_name='updated at')),
                ('is_active', models.BooleanField(default=True, help_text='Whether this record is active', verbose_name='is active')),
                ('command', models.CharField(db_index=True, help_text='Management command that was executed', max_length=50, verbose_name='command')),
                ('run_dir', models.CharField(help_text='Directory the command wrote its outputs to', max_length=500, verbose_name='run directory')),
                ('config_hash', models.CharField(db_index=True, help_text='Short hash of the resolved run configuration', max_length=16, verbose_name='config hash')),
                ('parameters', models.JSONField(default=dict, help_text='Resolved run configuration', verbose_name='parameters')),
                ('manifest', models.JSONField(blank=True, default=dict, help_text='Input and output hashes recorded on completion', verbose_name='manifest')),
                ('status', models.CharField(choices=[('RUNNING', 'Running'), ('COMPLETED', 'Completed'), ('FAILED', 'Failed')], db_index=True, default='RUNNING', help_text='Current status of the run', max_length=15, verbose_name='status')),
                ('completed_at', models.DateTimeField(blank=True, help_text='Date and time when the run finished', null=True, verbose_name='completed at')),
                ('duration', models.FloatField(blank=True, help_text='Wall-clock seconds the run took', null=True, verbose_name='duration')),
                ('exit_code', models.IntegerField(blank=True, null=True, verbose_name='exit code')),
                ('error_message', models.TextField(blank=True, verbose_name='error message')),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', 'status'], name='core_run_command_status_idx'), models.Index(fields=['config_hash', 'command'], name='core_run_hash_command_idx')],
            },
        ),
    ]
