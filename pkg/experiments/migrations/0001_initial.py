# Generated by Django 5.2.5 on 2026-10-18 09:12

import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('command', models.CharField(choices=[('generate', 'Generate'), ('train', 'Train'), ('evaluate', 'Evaluate'), ('sweep', 'Sweep'), ('report', 'Report')], max_length=20)),
                ('case_name', models.CharField(blank=True, max_length=200)),
                ('seed', models.BigIntegerField(default=0)),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('running', 'Running'), ('success', 'Success'), ('failed', 'Failed')], default='pending', max_length=20)),
                ('exit_code', models.IntegerField(blank=True, null=True)),
                ('config', models.JSONField(blank=True, default=dict, help_text='Resolved run configuration')),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('artifacts', models.JSONField(blank=True, default=list, help_text='Paths written by the command')),
                ('version', models.CharField(blank=True, max_length=100)),
                ('started_at', models.DateTimeField(blank=True, null=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('error_message', models.TextField(blank=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', 'status'], name='experiments_command_3f2a1c_idx'), models.Index(fields=['case_name', 'created_at'], name='experiments_case_na_8b41d7_idx')],
            },
        ),
    ]
