from collections.abc import Sequence

from more_itertools import chunked, partition

from spacetoken.scene_synth.models import Scene
from spacetoken.utils import rng_for


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int) -> list[list[int]]:
    """Index batches for one epoch; the shuffle depends only on (seed, epoch)."""
    order = rng_for(seed, 101, epoch).permutation(n)
    return [list(map(int, batch)) for batch in chunked(order, batch_size)]


def steps_per_epoch(n: int, batch_size: int) -> int:
    return -(-n // batch_size)


def split_by_seed_parity(scenes: Sequence[Scene]) -> tuple[list[Scene], list[Scene]]:
    """Train on even scene seeds, hold out odd ones."""
    odd, even = partition(lambda s: s.seed % 2 == 0, scenes)
    return list(even), list(odd)
