import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bnb_assess.aggregate import (
    AggregationPolicy,
    aggregate,
    arithmetic_mean,
    default_shift,
    geometric_mean,
    max_contribution,
    per_instance_scalability,
    shifted_geometric_mean,
)
from bnb_assess.measures import MeasureValue

positive_lists = st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=30)


def secs(v, censored=False):
    return MeasureValue("t", v, "seconds", censored)


class TestShiftedGeometricMean:
    def test_examples(self):
        assert shifted_geometric_mean([2, 8], 0) == pytest.approx(4, rel=1e-12)
        assert shifted_geometric_mean([2, 8], 10) == pytest.approx(math.sqrt(12 * 18) - 10, rel=1e-12)
        assert shifted_geometric_mean([3.5] * 7, 10) == pytest.approx(3.5, rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            shifted_geometric_mean([])
        with pytest.raises(ValueError):
            shifted_geometric_mean([0.0], 0)

    @given(positive_lists, st.floats(0, 100))
    def test_between_min_and_max(self, xs, s):
        sg = shifted_geometric_mean(xs, s)
        assert min(xs) * (1 - 1e-9) <= sg <= max(xs) * (1 + 1e-9)

    def test_default_shift(self):
        assert default_shift("seconds") == 10
        assert default_shift("count") == 100
        assert default_shift("ratio") == 0


class TestAggregate:
    def test_plain(self):
        r = aggregate([secs(1), secs(2), secs(4)], AggregationPolicy("arithmetic"))
        assert r.summary == pytest.approx(7 / 3)
        assert (r.n_used, r.n_censored) == (3, 0)

    def test_exclude_and_count(self):
        r = aggregate([secs(1), secs(2), secs(100, True)], AggregationPolicy("arithmetic"))
        assert (r.summary, r.n_used, r.n_censored) == (1.5, 2, 1)

    def test_censor_at_limit(self):
        r = aggregate([secs(1), secs(2), secs(100, True)], AggregationPolicy("arithmetic", censoring="censor_at_limit"))
        assert r.summary == pytest.approx(103 / 3)
        assert (r.n_used, r.n_censored) == (3, 1)

    def test_all_censored_is_nan(self):
        r = aggregate([secs(1, True)], AggregationPolicy())
        assert math.isnan(r.summary) and r.n_censored == 1

    def test_mixed_units_rejected(self):
        with pytest.raises(ValueError):
            aggregate([secs(1), MeasureValue("t", 2, "count")], AggregationPolicy())

    def test_bad_policy(self):
        with pytest.raises(ValueError):
            AggregationPolicy("median")
        with pytest.raises(ValueError):
            AggregationPolicy(shift=-1)

    def test_max_contribution(self):
        assert max_contribution([1, 1, 2]) == 0.5
        assert math.isnan(max_contribution([]))


class TestScalability:
    ALPS = dict(zip((1, 4, 8, 16, 32), (132.835, 75.133, 43.736, 22.212, 13.339)))

    def test_table_row(self):
        rows, issues = per_instance_scalability({"knap": {n: secs(t) for n, t in self.ALPS.items()}})
        assert issues == []
        assert [r.cores for r in rows] == [4, 8, 16, 32]
        for r, exp in zip(rows, (1.768, 3.037, 5.98, 9.958)):
            assert r.speedup == pytest.approx(exp, abs=1e-3)
        assert rows[0].efficiency == pytest.approx(1.768 / 4, abs=1e-3)

    def test_censored_baseline(self):
        rows, issues = per_instance_scalability({"p": {1: secs(5, True), 2: secs(3)}})
        assert rows == [] and len(issues) == 1 and issues[0].instance == "p"

    def test_flat(self):
        rows, _ = per_instance_scalability({"p": {1: secs(5), 2: secs(5), 4: secs(5)}})
        assert [r.speedup for r in rows] == [1.0, 1.0]

    def test_non_unit_baseline(self):
        rows, _ = per_instance_scalability({"p": {2: secs(8), 4: secs(4)}})
        assert rows[0].speedup == 2 and rows[0].efficiency == 1.0


@given(positive_lists)
def test_arithmetic_dominates_geometric(xs):
    assert geometric_mean(xs) <= arithmetic_mean(xs) * (1 + 1e-12)
