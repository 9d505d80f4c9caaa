from django.core.management.base import BaseCommand, CommandError

from BSonata.exceptions import BSonataError
from harness.config import load_run_config
from harness.experiment import run_experiment
from harness.export import format_metrics_csv, write_metrics_csv
from harness.models import ExperimentRun
from problems.storage import save_instance


class Command(BaseCommand):
    help = 'Run one experiment from a TOML run configuration and emit its metrics trace as CSV.'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='path to the TOML run configuration')
        parser.add_argument('--out', help='write the CSV here instead of stdout')
        parser.add_argument('--verify', action='store_true',
                            help='check the per-round invariants and stop at the first violation')
        parser.add_argument('--save', action='store_true', help='store the run and its trace in the database')
        parser.add_argument('--name', default='', help='label for the stored run')
        parser.add_argument('--instance-out', help='store the generated instance in this directory')

    def handle(self, *args, **options):
        try:
            cfg = load_run_config(options['config'])
            result = run_experiment(cfg, verify=options['verify'])
        except (BSonataError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        if options['instance_out']:
            save_instance(result.problem, options['instance_out'], x_true=result.x_true)

        if options['out']:
            write_metrics_csv(result.trace, options['out'])
        else:
            self.stdout.write(format_metrics_csv(result.trace), ending='')

        final = result.final
        summary = (
            f'{cfg.algorithm.variant} B={cfg.algorithm.blocks}: {result.status} at t={final.t} '
            f'(J={final.J:.3e}, D={final.D:.3e}, R={final.R:.3e})'
        )
        if options['save']:
            run = ExperimentRun.objects.record(result, name=options['name'])
            summary += f', stored as run {run.pk}'
        if options['out']:
            self.stdout.write(self.style.SUCCESS(summary))
        else:
            self.stderr.write(summary)
