"""Stage schedules: values, exact mass accounting, parsing, divergence."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from towerlab.schedule import StageSchedule, default_schedule, divergence_report


def test_default_schedule_frozen():
    s = default_schedule(5)
    assert s.M == (2, 6, 10, 14, 18)
    assert s.k == (4, 4, 4, 4, 4)
    # R_n = max assigned value through stage n
    assert [s.max_value(n) for n in range(6)] == [0, 5, 9, 13, 17, 21]


def test_stage_lookup_and_bounds():
    s = StageSchedule((2, 6), (4, 3))
    assert s.stage(1) == (2, 4) and s.stage(2) == (6, 3)
    with pytest.raises(ValueError):
        s.stage(0)
    with pytest.raises(ValueError):
        s.stage(3)
    with pytest.raises(ValueError):
        s.max_value(3)


def test_validation():
    with pytest.raises(ValueError):
        StageSchedule((), ())
    with pytest.raises(ValueError):
        StageSchedule((2, 2), (4, 4))  # offsets must increase
    with pytest.raises(ValueError):
        StageSchedule((2,), (0,))
    with pytest.raises(ValueError):
        StageSchedule((0,), (4,))
    with pytest.raises(ValueError):
        StageSchedule((2, 6), (4,))


@given(st.lists(st.tuples(st.integers(1, 30), st.integers(1, 9)),
                min_size=1, max_size=6))
def test_finite_measure_matches_termwise_sum(pairs):
    ms = []
    last = 0
    for dm, k in pairs:
        last += dm
        ms.append((last, k))
    sched = StageSchedule(tuple(m for m, _ in ms), tuple(k for _, k in ms))
    for n in range(1, sched.stages + 1):
        want = sum(Fraction(2 * ms[i][0] + ms[i][1] - 1, 2 ** (i + 2))
                   for i in range(n))
        assert sched.finite_measure_through(n) == want


def test_finite_measure_frozen():
    s = default_schedule(3)
    assert s.finite_measure_through(1) == Fraction(7, 4)
    assert s.finite_measure_through(2) == Fraction(29, 8)
    assert s.finite_measure_through(3) == Fraction(81, 16)


def test_text_roundtrip_and_digest():
    s = default_schedule(2)
    t = StageSchedule.from_text(s.canonical_text())
    assert t == s
    assert s.digest() == t.digest() and len(s.digest()) == 12
    assert s.digest() != default_schedule(3).digest()


def test_from_text_errors():
    with pytest.raises(ValueError, match="missing k.1"):
        StageSchedule.from_text("M.1 = 2\n")
    with pytest.raises(ValueError, match="unknown schedule key"):
        StageSchedule.from_text("M.1 = 2\nk.1 = 4\nq.1 = 3\n")
    with pytest.raises(ValueError, match="must be an integer"):
        StageSchedule.from_text("M.1 = two\nk.1 = 4\n")
    with pytest.raises(ValueError, match="missing M.1"):
        StageSchedule.from_text("M.2 = 6\nk.2 = 4\nk.1 = 4\n")


def test_divergence_report_separates_rules():
    # geometric offsets keep the per-stage mass bounded below: divergent
    geo = divergence_report(lambda n: 3 * 2**n, lambda n: 4)
    assert geo["diverges"] is True
    assert geo["last_term"] >= 3.0
    # the house polynomial rule has vanishing terms: total mass is finite
    poly = divergence_report(lambda n: 2 + 4 * (n - 1), lambda n: 4)
    assert poly["diverges"] is False
