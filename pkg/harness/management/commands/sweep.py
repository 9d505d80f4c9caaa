from django.core.management.base import BaseCommand, CommandError

from BSonata.exceptions import BSonataError
from harness.config import load_run_config
from harness.experiment import completion_time_sweep
from harness.export import write_sweep_csv
from harness.models import ExperimentRun


def _block_list(value):
    try:
        blocks = [int(part) for part in value.split(',') if part.strip()]
    except ValueError as exc:
        raise CommandError(f'--blocks expects comma-separated integers, got {value!r}') from exc
    if not blocks:
        raise CommandError('--blocks is empty')
    return blocks


class Command(BaseCommand):
    help = 'Completion time to reach the J tolerance for several block counts.'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='path to the TOML run configuration')
        parser.add_argument('--blocks', required=True, help='comma-separated block counts, e.g. 1,3,6')
        parser.add_argument('--out', required=True, help='CSV file for the B,t_end,t_end_per_B table')
        parser.add_argument('--tolerance', type=float, default=1e-3)
        parser.add_argument('--threads', type=int, help='worker threads (defaults to BSONATA_THREADS)')
        parser.add_argument('--save', action='store_true', help='store every sweep point in the database')

    def handle(self, *args, **options):
        blocks = _block_list(options['blocks'])
        try:
            cfg = load_run_config(options['config'])
            rows, results = completion_time_sweep(
                cfg, blocks, tolerance=options['tolerance'], threads=options['threads'], keep_results=True,
            )
        except (BSonataError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        write_sweep_csv(rows, options['out'])
        if options['save']:
            for result in results:
                ExperimentRun.objects.record(result, name='sweep')
        reached = sum(row.t_end >= 0 for row in rows)
        self.stdout.write(self.style.SUCCESS(
            f"Wrote {len(rows)} sweep rows to {options['out']} ({reached} reached the tolerance)"
        ))
