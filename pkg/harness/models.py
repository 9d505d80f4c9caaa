import logging

from django.db import models, transaction

from core.diagnostics import MetricsRecord
from core.rounds import VARIANT_CHOICES
from core.surrogate import SURROGATE_CHOICES
from schedule.rules import RULE_CHOICES
from .config import BASELINE

logger = logging.getLogger(__name__)

RUN_VARIANT_CHOICES = VARIANT_CHOICES + (
    (BASELINE, 'distributed subgradient projection'),
)

STATUS_CONVERGED = 'converged'
STATUS_MAX_ROUNDS = 'max_rounds'

STATUS_CHOICES = (
    (STATUS_CONVERGED, 'Reached the J tolerance'),
    (STATUS_MAX_ROUNDS, 'Stopped at max_rounds'),
)


class ExperimentRunManager(models.Manager):

    def record(self, result, name=''):
        """Store a finished experiment with its full metrics trace."""
        cfg = result.config
        final = result.trace[-1]
        with transaction.atomic():
            run = self.create(
                name=name,
                variant=cfg.algorithm.variant,
                blocks=cfg.algorithm.blocks,
                seed=cfg.seed,
                schedule_rule=cfg.algorithm.schedule_rule,
                surrogate=cfg.algorithm.surrogate,
                config=cfg.to_dict(),
                status=result.status,
                t_end=result.t_end,
                rounds=final.t,
                message_exchanges=final.message_exchanges,
                final_J=final.J,
                final_D=final.D,
                final_R=final.R,
                stationarity_residual=result.stationarity_residual,
                algebraic_connectivity=result.algebraic_connectivity,
            )
            MetricSample.objects.bulk_create(
                MetricSample(run=run, **dict(zip(MetricsRecord.field_names(), record.values())))
                for record in result.trace
            )
        logger.info('stored run %d (%s, B=%d, %d samples)', run.pk, run.variant, run.blocks, len(result.trace))
        return run


class ExperimentRun(models.Model):
    """One finished experiment and its outcome."""
    name = models.CharField(max_length=100, blank=True)
    variant = models.CharField(max_length=20, choices=RUN_VARIANT_CHOICES)
    blocks = models.PositiveIntegerField()
    seed = models.BigIntegerField()
    schedule_rule = models.CharField(max_length=30, choices=RULE_CHOICES)
    surrogate = models.CharField(max_length=30, choices=SURROGATE_CHOICES)
    config = models.JSONField(help_text='TOML-shaped run configuration')

    status = models.CharField(max_length=20, choices=STATUS_CHOICES)
    t_end = models.PositiveIntegerField(null=True, blank=True,
                                        help_text='First round with J below the tolerance')
    rounds = models.PositiveIntegerField(default=0)
    message_exchanges = models.FloatField(default=0)
    final_J = models.FloatField()
    final_D = models.FloatField()
    final_R = models.FloatField()
    stationarity_residual = models.FloatField(null=True, blank=True)
    algebraic_connectivity = models.FloatField()

    created_at = models.DateTimeField(auto_now_add=True)

    objects = ExperimentRunManager()

    class Meta:
        db_table = 'experiment_run'
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f'{self.variant} B={self.blocks} seed={self.seed} ({self.status})'


class MetricSample(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='samples')
    t = models.PositiveIntegerField()
    message_exchanges = models.FloatField()
    J = models.FloatField()
    D = models.FloatField()
    R = models.FloatField()
    tracking_residual = models.FloatField()
    V = models.FloatField()
    gamma = models.FloatField()
    delta_sum = models.FloatField()

    class Meta:
        db_table = 'metric_sample'
        ordering = ['run_id', 't']
        constraints = [
            models.UniqueConstraint(fields=['run', 't'], name='unique_sample_per_round'),
        ]

    def __str__(self):
        return f'run {self.run_id} t={self.t}'
