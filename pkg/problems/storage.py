"""
Instance storage.

A stored instance is a directory with two files:

``manifest.json``
    format name and version (1), agent count, dimension, rows per agent,
    ``lam``, ``theta``, ``penalty``, ``box`` (null for an unbounded side),
    the partition as lists of 0-based coordinates, and whether a ground
    truth is stored.
``arrays.npz``
    ``D_<i>`` and ``b_<i>`` for every agent, plus ``ground_truth``.
"""
import json
import logging
from pathlib import Path

import numpy as np

from .exceptions import InstanceFormatError, DimensionError
from .instance import ProblemInstance
from .partition import BlockPartition
from .serializers import InstanceManifestSerializer, FORMAT_NAME, FORMAT_VERSION

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'
ARRAYS_FILE = 'arrays.npz'


def _bound(value):
    return None if np.isinf(value) else float(value)


def save_instance(problem, directory, x_true=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'agent_count': problem.agent_count,
        'dimension': problem.dimension,
        'rows': [d.shape[0] for d in problem.D],
        'lam': float(problem.lam),
        'theta': float(problem.theta),
        'penalty': problem.penalty,
        'box': [_bound(k) for k in problem.box],
        'partition': [idx.tolist() for idx in problem.partition.index_sets],
        'has_ground_truth': x_true is not None,
    }
    arrays = {}
    for i, (d, b) in enumerate(zip(problem.D, problem.b)):
        arrays[f'D_{i}'] = d
        arrays[f'b_{i}'] = b
    if x_true is not None:
        arrays['ground_truth'] = np.asarray(x_true, dtype=float)
    np.savez(directory / ARRAYS_FILE, **arrays)
    (directory / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + '\n', encoding='utf-8')
    logger.info('stored instance with %d agents in %s', problem.agent_count, directory)


def load_instance(directory):
    """Read a stored instance back as ``(problem, x_true or None)``."""
    directory = Path(directory)
    try:
        raw = json.loads((directory / MANIFEST_FILE).read_text(encoding='utf-8'))
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFormatError(f'cannot read {MANIFEST_FILE}: {exc}') from exc

    serializer = InstanceManifestSerializer(data=raw)
    if not serializer.is_valid():
        raise InstanceFormatError('invalid instance manifest', errors=serializer.errors)
    manifest = serializer.validated_data

    lower, upper = manifest['box']
    box = (-np.inf if lower is None else lower, np.inf if upper is None else upper)
    try:
        with np.load(directory / ARRAYS_FILE, allow_pickle=False) as data:
            D = tuple(data[f'D_{i}'] for i in range(manifest['agent_count']))
            b = tuple(data[f'b_{i}'] for i in range(manifest['agent_count']))
            x_true = data['ground_truth'] if manifest['has_ground_truth'] else None
    except (OSError, KeyError, ValueError) as exc:
        raise InstanceFormatError(f'cannot read {ARRAYS_FILE}: {exc}') from exc

    if [d.shape[0] for d in D] != manifest['rows']:
        raise InstanceFormatError('row counts differ from the manifest')
    try:
        problem = ProblemInstance(
            partition=BlockPartition(index_sets=tuple(manifest['partition'])),
            D=D, b=b, box=box, lam=manifest['lam'], theta=manifest['theta'],
            penalty=manifest['penalty'],
        )
    except (DimensionError, ValueError) as exc:
        raise InstanceFormatError(str(exc)) from exc
    return problem, x_true
