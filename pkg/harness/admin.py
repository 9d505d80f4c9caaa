from django.contrib import admin

from .models import ExperimentRun, MetricSample


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = [
        'id', 'name', 'variant', 'blocks', 'seed', 'status', 't_end',
        'message_exchanges', 'final_J', 'algebraic_connectivity', 'created_at',
    ]
    list_filter = ['variant', 'blocks', 'status', 'schedule_rule', 'surrogate']
    search_fields = ['name']
    readonly_fields = [f.name for f in ExperimentRun._meta.fields]
    ordering = ['-created_at']


@admin.register(MetricSample)
class MetricSampleAdmin(admin.ModelAdmin):
    list_display = ['run', 't', 'message_exchanges', 'J', 'D', 'R', 'tracking_residual', 'gamma']
    list_filter = ['run__variant', 'run__blocks']
    readonly_fields = [f.name for f in MetricSample._meta.fields]
    list_select_related = ['run']
