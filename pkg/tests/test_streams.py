"""Keyed RNG streams: reproducibility, independence, and source semantics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from agelab import streams

KEYS = st_.lists(st_.integers(min_value=0, max_value=2**31 - 1),
                 min_size=1, max_size=5)


@given(KEYS)
@settings(max_examples=50, deadline=None)
def test_stream_reproducible(key):
    a = streams.stream(*key).random(8)
    b = streams.stream(*key).random(8)
    assert np.array_equal(a, b)


@given(KEYS, KEYS)
@settings(max_examples=50, deadline=None)
def test_distinct_keys_distinct_streams(key1, key2):
    if key1 == key2:
        return
    a = streams.stream(*key1).random(4)
    b = streams.stream(*key2).random(4)
    assert not np.array_equal(a, b)


@given(KEYS)
@settings(max_examples=50, deadline=None)
def test_subseed_reproducible(key):
    assert streams.subseed(*key) == streams.subseed(*key)


def test_subseed_differs_from_master():
    assert streams.subseed(7, streams.DOMAIN_LANDSCAPE, 0) != 7


def test_domain_codes_distinct():
    codes = [streams.DOMAIN_LANDSCAPE, streams.DOMAIN_WALK_PATH,
             streams.DOMAIN_SPEED_MEASURE, streams.DOMAIN_DIFFUSION_PATH,
             streams.DOMAIN_FLIP_PATH, streams.DOMAIN_COUPLING,
             streams.DOMAIN_NOISE, streams.DOMAIN_SUBSEED]
    assert len(set(codes)) == len(codes)


def test_uniform_source_sequence_reproducible():
    a = streams.UniformSource(streams.stream(3, 1, 4))
    b = streams.UniformSource(streams.stream(3, 1, 4))
    xs = [a.next() for _ in range(5000)]
    ys = [b.next() for _ in range(5000)]
    assert xs == ys
    assert all(0.0 <= x < 1.0 for x in xs)


def test_uniform_source_buffering_is_transparent():
    """The k-th consumed value never depends on the prefetch block size."""
    small = streams.UniformSource(streams.stream(9), block=1, max_block=2)
    big = streams.UniformSource(streams.stream(9), block=4096)
    assert [small.next() for _ in range(600)] == [big.next() for _ in range(600)]


def test_uniform_source_rejects_bad_block():
    with pytest.raises(ValueError):
        streams.UniformSource(streams.stream(1), block=0)
    with pytest.raises(ValueError):
        streams.UniformSource(streams.stream(1), block=64, max_block=8)
