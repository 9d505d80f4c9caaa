from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Disjoint index sets ``I_0..I_{B-1}`` covering ``0..m-1``."""

    index_sets: tuple

    def __post_init__(self):
        sets = tuple(np.array(idx, dtype=np.int64).ravel() for idx in self.index_sets)
        if not sets:
            raise ValueError('a partition needs at least one block')
        if any(idx.size == 0 for idx in sets):
            raise ValueError('blocks must be nonempty')
        joined = np.concatenate(sets)
        if not np.array_equal(np.sort(joined), np.arange(joined.size)):
            raise ValueError('index sets must be disjoint and cover 0..m-1')
        for idx in sets:
            idx.setflags(write=False)
        object.__setattr__(self, 'index_sets', sets)

    @classmethod
    def contiguous(cls, dimension, block_count):
        """Consecutive chunks, as equal as ``dimension`` allows."""
        if not 1 <= block_count <= dimension:
            raise ValueError('block_count must lie in 1..dimension')
        return cls(index_sets=tuple(np.array_split(np.arange(dimension), block_count)))

    @property
    def block_count(self):
        return len(self.index_sets)

    @property
    def dimension(self):
        return sum(idx.size for idx in self.index_sets)

    @property
    def sizes(self):
        return tuple(idx.size for idx in self.index_sets)

    @cached_property
    def coordinate_blocks(self):
        """Block id of every coordinate."""
        owner = np.empty(self.dimension, dtype=np.int64)
        for block, idx in enumerate(self.index_sets):
            owner[idx] = block
        owner.setflags(write=False)
        return owner

    def split(self, x):
        return [x[..., idx] for idx in self.index_sets]

    def join(self, blocks):
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        out = np.empty(blocks[0].shape[:-1] + (self.dimension,))
        for idx, values in zip(self.index_sets, blocks):
            out[..., idx] = values
        return out

    def __eq__(self, other):
        if not isinstance(other, BlockPartition):
            return NotImplemented
        return len(self.index_sets) == len(other.index_sets) and all(
            np.array_equal(a, b) for a, b in zip(self.index_sets, other.index_sets)
        )

    __hash__ = None
