import numpy as np
from django.core.management.base import BaseCommand, CommandError

from BSonata.exceptions import BSonataError
from graphs.topology import gen_erdos_renyi
from graphs.weights import base_weights
from harness.config import rng_streams
from pushsum.protocol import PushSumState, consensus_error
from pushsum.simulation import (
    SIGNAL_CHOICES, SIGNAL_NONE, iterate_pushsum, iterate_tracking, demo_trackers, signal_average,
)
from schedule.rules import BlockSchedule, RULE_CHOICES


class Command(BaseCommand):
    help = 'Run block-wise push-sum on a random digraph and print the max consensus error per round.'

    def add_arguments(self, parser):
        parser.add_argument('--n', type=int, required=True, help='number of agents')
        parser.add_argument('--blocks', type=int, required=True, help='number of blocks B')
        parser.add_argument('--p', type=float, required=True, help='edge probability')
        parser.add_argument('--seed', type=int, required=True)
        parser.add_argument('--rounds', type=int, required=True)
        parser.add_argument('--rule', choices=[rule for rule, _ in RULE_CHOICES], default='round_robin')
        parser.add_argument('--dim', type=int, default=2, help='entries per block')
        parser.add_argument('--signal', choices=SIGNAL_CHOICES, default=SIGNAL_NONE,
                            help='track constant or drifting signals instead of plain averaging')

    def handle(self, *args, **options):
        if options['rounds'] < 0 or options['dim'] < 1:
            raise CommandError('--rounds must be nonnegative and --dim positive')
        streams = rng_streams(options['seed'])
        graph_rng, value_rng = streams['graph'], streams['data']
        try:
            g = gen_erdos_renyi(options['n'], options['p'], graph_rng)
            sched = BlockSchedule(block_count=options['blocks'], rule=options['rule'], seed=options['seed'])
            base = base_weights(g)
            self.stdout.write('round,error')
            if options['signal'] == SIGNAL_NONE:
                z0 = value_rng.standard_normal((options['blocks'], options['n'], options['dim']))
                for t, state in iterate_pushsum(base, sched, PushSumState.start(z0), options['rounds']):
                    self.stdout.write(f'{t},{float(consensus_error(state).max())!r}')
            else:
                trackers = demo_trackers(value_rng, options['n'], options['blocks'], options['dim'],
                                         options['signal'])
                for t, state, trackers in iterate_tracking(base, sched, trackers, options['rounds']):
                    target = signal_average(trackers, t)
                    error = sum(np.abs(z - mean).sum(axis=1) for z, mean in zip(state.z, target)).max()
                    self.stdout.write(f'{t},{float(error)!r}')
        except (BSonataError, ValueError) as exc:
            raise CommandError(str(exc)) from exc
