"""Seeding policy: explicit seeds, stable derivation, distinct streams."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from towerlab.rng import generator, seed_split


def test_generator_deterministic():
    a = generator(7).integers(0, 1 << 32, size=16)
    b = generator(7).integers(0, 1 << 32, size=16)
    assert (a == b).all()


def test_generator_is_philox():
    assert type(generator(0).bit_generator).__name__ == "Philox"


def test_generator_rejects_non_integers():
    with pytest.raises(TypeError):
        generator(1.5)
    with pytest.raises(TypeError):
        generator("3")
    generator(np.int64(3))  # numpy integers are fine


def test_seed_split_stable():
    # frozen: derivation must never change, saved outputs depend on it
    assert seed_split(0) == seed_split(0)
    assert seed_split(123, "floor", 0, 1) == seed_split(123, "floor", 0, 1)
    assert seed_split(123, "floor", 0, 1) != seed_split(123, "floor", 0, 2)
    assert seed_split(123, "a", "b") != seed_split(123, "ab")
    assert seed_split(123, ("a", "b")) != seed_split(123, "a", "b")


def test_seed_split_frozen_value():
    # pin one value so an accidental change of the hash layout is loud
    assert seed_split(20260817, "xi0") == 733910787904958551


@given(st.integers(min_value=0, max_value=2**63 - 1),
       st.lists(st.integers(min_value=0, max_value=99), max_size=4))
def test_seed_split_range(master, path):
    s = seed_split(master, *path)
    assert 0 <= s < 2**63


def test_seed_split_no_collisions_among_siblings():
    seen = {seed_split(42, "site", i) for i in range(20000)}
    assert len(seen) == 20000


def test_split_streams_uncorrelated():
    a = generator(seed_split(5, "a")).standard_normal(20000)
    b = generator(seed_split(5, "b")).standard_normal(20000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.03
