from django.contrib import admin
from unfold.admin import ModelAdmin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(ModelAdmin):
    list_display = [
        'command', 'case_name', 'seed', 'status', 'exit_code', 'started_at', 'finished_at'
    ]
    list_filter = ['command', 'status', 'case_name', 'created_at']
    search_fields = ['case_name', 'error_message', 'version']
    readonly_fields = [
        'command', 'case_name', 'seed', 'status', 'exit_code', 'config', 'summary', 'artifacts',
        'version', 'started_at', 'finished_at', 'error_message', 'created_at', 'updated_at',
    ]

    fieldsets = (
        ('Run', {
            'fields': ('command', 'case_name', 'seed', 'status', 'exit_code', 'version')
        }),
        ('Configuration', {
            'fields': ('config',),
            'classes': ('collapse',)
        }),
        ('Results', {
            'fields': ('summary', 'artifacts')
        }),
        ('Timestamps', {
            'fields': ('started_at', 'finished_at', 'created_at', 'updated_at'),
            'classes': ('collapse',)
        }),
        ('Error Information', {
            'fields': ('error_message',),
            'classes': ('collapse',)
        }),
    )

    def has_add_permission(self, request):
        # Runs are only recorded by the pipeline commands
        return False
