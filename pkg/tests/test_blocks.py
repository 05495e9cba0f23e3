import numpy as np
import pytest

from cpheat.blocks import as_seed_sequence, block_sizes, combine_mean_stderr, map_blocks


def test_block_partition():
    assert block_sizes(10, 4) == [4, 4, 2]
    assert block_sizes(8, 4) == [4, 4]
    assert block_sizes(0, 4) == []


def test_worker_count_never_changes_results():
    def fn(rng, count):
        x = rng.random(count)
        return float(x.sum()), float((x * x).sum()), count

    base = map_blocks(fn, 100_000, seed=5, workers=1)
    for workers in (2, 3, 8):
        assert map_blocks(fn, 100_000, seed=5, workers=workers) == base


def test_blocks_partition_is_seed_stable():
    def fn(rng, count):
        return float(rng.random(count).sum())

    a = map_blocks(fn, 50_000, seed=7)
    b = map_blocks(fn, 50_000, seed=7)
    c = map_blocks(fn, 50_000, seed=8)
    assert a == b
    assert a != c


def test_combine_mean_stderr():
    rng = np.random.default_rng(0)
    x = rng.normal(2.0, 3.0, 10_000)
    halves = np.split(x, 2)
    mean, se, n = combine_mean_stderr(
        [h.sum() for h in halves], [(h * h).sum() for h in halves], [len(h) for h in halves]
    )
    assert n == 10_000
    assert mean == pytest.approx(x.mean())
    assert se == pytest.approx(x.std() / 100.0, rel=1e-3)


def test_seed_sequence_forms():
    assert isinstance(as_seed_sequence(3), np.random.SeedSequence)
    assert isinstance(as_seed_sequence((3, 4)), np.random.SeedSequence)
    ss = np.random.SeedSequence(9)
    assert as_seed_sequence(ss) is ss
    with pytest.raises(TypeError):
        as_seed_sequence("nope")
