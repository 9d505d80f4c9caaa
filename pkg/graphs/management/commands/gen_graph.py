from django.core.management.base import BaseCommand, CommandError

from BSonata.exceptions import BSonataError
from graphs.topology import gen_erdos_renyi, format_edge_list, write_edge_list, algebraic_connectivity
from harness.config import rng_streams


class Command(BaseCommand):
    help = 'Sample a strongly connected Erdos-Renyi digraph and emit its edge list.'

    def add_arguments(self, parser):
        parser.add_argument('--n', type=int, required=True, help='number of agents')
        parser.add_argument('--p', type=float, required=True, help='edge probability in (0, 1]')
        parser.add_argument('--seed', type=int, required=True, help='master seed; the graph uses its graph stream')
        parser.add_argument('--max-retries', type=int, default=100)
        parser.add_argument('--out', help='write the edge list here instead of stdout')

    def handle(self, *args, **options):
        rng = rng_streams(options['seed'])['graph']
        try:
            g = gen_erdos_renyi(options['n'], options['p'], rng, max_retries=options['max_retries'])
        except (BSonataError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        if options['out']:
            write_edge_list(g, options['out'])
            self.stdout.write(self.style.SUCCESS(
                f"Wrote {len(g.edges)} edges to {options['out']} "
                f"(algebraic connectivity {algebraic_connectivity(g):.6g})"
            ))
        else:
            self.stdout.write(format_edge_list(g), ending='')
