import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from loadsched.errors import DimensionMismatch, LengthMismatch, NonPositiveParameter
from loadsched.loads import LoadState
from loadsched.schedule_space import (
    DwellConstraint,
    EndRule,
    admissible_rows,
    count_admissible,
    count_fleet,
    counting_table,
    enumerate_fleet,
    enumerate_rows,
    is_admissible,
)

import oracles

OFF_RESTED = LoadState(0.0, False, 4)


def rows_of(text):
    return [int(c) for c in text]


@pytest.mark.parametrize("rule", list(EndRule))
def test_example_rows(rule):
    c = DwellConstraint(4, 4, 6, rule)
    assert is_admissible(rows_of("000000"), c, OFF_RESTED)
    assert not is_admissible(rows_of("010000"), c, OFF_RESTED)
    assert is_admissible(rows_of("000011"), c, OFF_RESTED) == (rule is EndRule.EXTENDABLE)
    assert is_admissible(rows_of("001111"), c, OFF_RESTED)
    assert is_admissible(rows_of("111100"), c, OFF_RESTED)


def test_leading_run_is_credited_with_dwell():
    c = DwellConstraint(3, 3, 5, EndRule.STRICT)
    assert not is_admissible(rows_of("01110"), c, LoadState(0.0, False, 0))
    assert not is_admissible(rows_of("01110"), c, LoadState(0.0, False, 1))
    assert is_admissible(rows_of("01110"), c, LoadState(0.0, False, 2))
    assert is_admissible(rows_of("11100"), c, LoadState(0.0, False, 3))


def test_first_step_fixed():
    c = DwellConstraint(2, 2, 4, EndRule.EXTENDABLE)
    free = list(enumerate_rows(c, OFF_RESTED))
    fixed = list(enumerate_rows(c, OFF_RESTED, first_step_fixed=True))
    assert fixed == [r for r in free if r[0] == 0]
    assert not is_admissible(rows_of("1100"), c, OFF_RESTED, first_step_fixed=True)


def test_row_length_checked():
    with pytest.raises(LengthMismatch):
        is_admissible([0, 0], DwellConstraint(1, 1, 3), OFF_RESTED)
    with pytest.raises(NonPositiveParameter):
        DwellConstraint(0, 1, 3)


@pytest.mark.parametrize("horizon", [1, 5, 9])
def test_unconstrained_gives_every_row(horizon):
    c = DwellConstraint(1, 1, horizon, EndRule.STRICT)
    rows = list(enumerate_rows(c, LoadState(0.0, True, 1)))
    assert rows == list(itertools.product((0, 1), repeat=horizon))
    assert count_admissible(c, LoadState(0.0, True, 1)) == 2 ** horizon


def test_unconstrained_five_is_32():
    assert count_admissible(DwellConstraint(1, 1, 5), OFF_RESTED) == 32


def test_fresh_on_load_stays_on():
    for horizon in (2, 4, 7):
        c = DwellConstraint(4, 2, horizon, EndRule.EXTENDABLE)
        for row in enumerate_rows(c, LoadState(0.5, True, 0)):
            assert all(row[:min(4, horizon)])


@pytest.mark.parametrize("rule", list(EndRule))
@pytest.mark.parametrize("on,dwell", [(False, 0), (False, 2), (True, 1), (True, 5)])
@pytest.mark.parametrize("fixed", [False, True])
def test_enumeration_matches_brute_force(rule, on, dwell, fixed):
    strict = rule is EndRule.STRICT
    for n_on, n_off, horizon in itertools.product(range(1, 5), range(1, 5), range(1, 9)):
        c = DwellConstraint(n_on, n_off, horizon, rule)
        init = LoadState(0.0, on, dwell)
        expected = oracles.brute_rows(horizon, n_on, n_off, on, dwell, strict, fixed)
        got = list(enumerate_rows(c, init, fixed))
        assert got == expected, (n_on, n_off, horizon)
        assert count_admissible(c, init, fixed) == len(expected)
        assert admissible_rows(c, init, fixed).tolist() == [list(r) for r in expected]


@given(
    n_on=st.integers(1, 6), n_off=st.integers(1, 6), horizon=st.integers(1, 10),
    on=st.booleans(), dwell=st.integers(0, 8), strict=st.booleans(),
    row=st.lists(st.integers(0, 1), min_size=10, max_size=10),
)
def test_is_admissible_matches_counter(n_on, n_off, horizon, on, dwell, strict, row):
    row = row[:horizon]
    c = DwellConstraint(n_on, n_off, horizon, EndRule.STRICT if strict else EndRule.EXTENDABLE)
    init = LoadState(0.0, on, dwell)
    assert is_admissible(row, c, init) == oracles.admissible(row, n_on, n_off, on, dwell, strict)


@given(n=st.integers(1, 5), horizon=st.integers(1, 14), dwell=st.integers(0, 6), on=st.booleans())
def test_tighter_dwell_never_adds_rows(n, horizon, dwell, on):
    init = LoadState(0.0, on, dwell)
    for rule in EndRule:
        loose = count_admissible(DwellConstraint(n, n, horizon, rule), init)
        tight = count_admissible(DwellConstraint(n + 1, n + 1, horizon, rule), init)
        assert tight <= loose
    strict = count_admissible(DwellConstraint(n, n, horizon, EndRule.STRICT), init)
    extendable = count_admissible(DwellConstraint(n, n, horizon, EndRule.EXTENDABLE), init)
    assert strict <= extendable


def test_dp_count_scales_past_enumeration():
    c = DwellConstraint(3, 2, 40, EndRule.EXTENDABLE)
    # the DP must agree with enumeration where that is cheap, and stay fast beyond
    assert count_admissible(DwellConstraint(3, 2, 14, EndRule.EXTENDABLE), OFF_RESTED) == \
        len(list(enumerate_rows(DwellConstraint(3, 2, 14, EndRule.EXTENDABLE), OFF_RESTED)))
    assert count_admissible(c, OFF_RESTED) > 10 ** 6


def test_admissible_rows_are_read_only_and_cached():
    c = DwellConstraint(2, 3, 6, EndRule.STRICT)
    a = admissible_rows(c, LoadState(0.0, False, 9))
    b = admissible_rows(c, LoadState(0.0, False, 3))  # dwell beyond the largest minimum is equivalent
    assert a is b
    assert a.dtype == np.uint8 and not a.flags.writeable


def test_fleet_product_order_and_count():
    cs = [DwellConstraint(2, 2, 4, EndRule.EXTENDABLE), DwellConstraint(3, 1, 4, EndRule.STRICT)]
    inits = [OFF_RESTED, LoadState(0.3, True, 1)]
    fleet = list(enumerate_fleet(cs, inits))
    rows = [list(enumerate_rows(c, s)) for c, s in zip(cs, inits)]
    assert len(fleet) == count_fleet(cs, inits) == len(rows[0]) * len(rows[1])
    assert [tuple(map(tuple, f)) for f in fleet] == list(itertools.product(*rows))
    single = list(enumerate_fleet(cs[:1], inits[:1]))
    assert [tuple(f[0]) for f in single] == rows[0]
    with pytest.raises(DimensionMismatch):
        count_fleet(cs, inits[:1])
    with pytest.raises(DimensionMismatch):
        count_fleet([cs[0], DwellConstraint(1, 1, 5)], inits)


def test_unconstrained_fleet_of_three():
    cs = [DwellConstraint(1, 1, 6)] * 3
    assert count_fleet(cs, [LoadState(0.0, False, 1)] * 3) == (2 ** 3) ** 6


def test_counting_table_for_three_loads():
    table = {(r["end_rule"], r["first_step_fixed"]): r for r in counting_table()}
    assert {k: v["per_load"] for k, v in table.items()} == {
        ("strict", False): 7,
        ("strict", True): 4,
        ("extendable", False): 10,
        ("extendable", True): 7,
    }
    for row in table.values():
        assert row["fleet"] == row["per_load"] ** 3 < row["unconstrained"] == 32768
        assert row["per_load"] != 13  # no convention reproduces 13 ** 3 = 2197
        brute = oracles.brute_rows(6, 4, 4, False, 4, row["end_rule"] == "strict", row["first_step_fixed"])
        assert len(brute) == row["per_load"]
