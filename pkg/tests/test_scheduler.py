import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from lbs.scheduler import Event, EventSet, NoEvent, movement_propensity, select_event


def ev(rate, actor=0, kind="delay", branch=0):
    return Event(kind, rate, actor, branch)


def test_event_categories():
    assert ev(1.0).category == "reaction"
    assert ev(1.0, kind="move").category == "movement"
    com = Event("com", 1.0, 0, 1, 2, 0, "a")
    assert com.category == "reaction" and com.key == ("com", 0, 1, 2, 0, "a")


def test_event_set_drops_zero_rates_and_validates():
    es = EventSet([ev(0.0), ev(2.0, 1), ev(3.0, 2, "move")])
    assert len(es) == 2 and es.total == 5.0
    assert [e.actor for e in es.reactions()] == [1]
    for bad in (-1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            EventSet([ev(bad)])


def test_without_removes_one_event():
    a, b = ev(1.0, 0), ev(1.0, 1)
    es = EventSet([a, b]).without(a)
    assert list(es) == [b]


def test_empty_set_has_no_next_event():
    with pytest.raises(NoEvent):
        select_event(EventSet(), np.random.default_rng(0))


@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_selection_is_reproducible(rates, seed):
    es = EventSet([ev(r, k) for k, r in enumerate(rates)])
    assert select_event(es, np.random.default_rng(seed)) == select_event(es, np.random.default_rng(seed))


def test_selection_frequencies_are_proportional_to_rates():
    rates = [0.5, 1.0, 2.5, 6.0]
    es = EventSet([ev(r, k) for k, r in enumerate(rates)])
    rng = np.random.default_rng(4)
    n = 40_000
    counts = np.bincount([select_event(es, rng)[0].actor for _ in range(n)], minlength=4)
    expected = np.array(rates) / sum(rates) * n
    assert stats.chisquare(counts, expected).pvalue > 0.001


def test_waiting_times_are_exponential_in_the_total_rate():
    es = EventSet([ev(1.5, 0), ev(2.5, 1)])
    rng = np.random.default_rng(9)
    dts = np.array([select_event(es, rng)[1] for _ in range(20_000)])
    assert abs(dts.mean() - 0.25) < 0.01
    assert stats.kstest(dts, stats.expon(scale=0.25).cdf).pvalue > 0.001


def test_movement_propensity():
    assert movement_propensity(2.0) == 2.0
    assert movement_propensity(0.0) == 0.0
    with pytest.raises(ValueError):
        movement_propensity(-1.0)
