import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from episbn.metrics import hellinger, mse


def dist(k):
    return arrays(np.float64, k, elements=st.floats(0.0, 1.0)).filter(lambda v: v.sum() > 1e-6).map(
        lambda v: v / v.sum())


class TestHellinger:
    def test_identical(self):
        p = {"A": [0.3, 0.7], "B": [0.1, 0.2, 0.7]}
        assert hellinger(p, p) == 0.0

    def test_disjoint(self):
        assert hellinger({"A": [1.0, 0.0]}, {"A": [0.0, 1.0]}) == pytest.approx(1.0, abs=1e-15)

    def test_hand_value(self):
        got = hellinger({"A": [0.64, 0.36]}, {"A": [0.81, 0.19]})
        want = math.sqrt(((0.8 - 0.9) ** 2 + (0.6 - math.sqrt(0.19)) ** 2) / 2)
        assert got == pytest.approx(want, abs=1e-15)
        assert got == pytest.approx(0.1358898944, abs=1e-9)

    def test_evidence_excluded(self):
        p = {"A": [0.5, 0.5], "E": [1.0, 0.0]}
        q = {"A": [0.5, 0.5], "E": [0.0, 1.0]}
        assert hellinger(p, q, evidence=["E"]) == 0.0

    def test_accepts_result_objects(self):
        class R:
            marginals = {"A": np.array([0.25, 0.75])}
        assert hellinger(R(), R()) == 0.0

    @pytest.mark.parametrize("p, q", [({"A": [0.5, 0.5]}, {"B": [0.5, 0.5]}),
                                      ({"A": [0.5, 0.5]}, {"A": [0.2, 0.3, 0.5]}),
                                      ({"E": [1.0]}, {"E": [1.0]})])
    def test_mismatch(self, p, q):
        with pytest.raises(ValueError):
            hellinger(p, q, evidence=["E"] if "E" in p else ())

    @settings(max_examples=200, deadline=None)
    @given(a=dist(3), b=dist(3), c=dist(2), d=dist(2))
    def test_axioms(self, a, b, c, d):
        p, q = {"X": a, "Y": c}, {"X": b, "Y": d}
        h = hellinger(p, q)
        assert 0.0 <= h <= 1.0 + 1e-12
        assert h == hellinger(q, p)
        assert hellinger(p, p) == 0.0


class TestMse:
    def test_values(self):
        assert mse({"A": [0.3, 0.7]}, {"A": [0.3, 0.7]}) == 0.0
        assert mse({"A": [1.0, 0.0]}, {"A": [0.0, 1.0]}) == 1.0
        assert mse({"A": [0.5, 0.5]}, {"A": [0.6, 0.4]}) == pytest.approx(0.01, abs=1e-15)

    def test_averages_over_all_states(self):
        p = {"A": [1.0, 0.0], "B": [0.5, 0.25, 0.25]}
        q = {"A": [0.0, 1.0], "B": [0.5, 0.25, 0.25]}
        assert mse(p, q) == pytest.approx(2 / 5, abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(a=dist(4), b=dist(4))
    def test_symmetric_and_bounded(self, a, b):
        assert mse({"X": a}, {"X": b}) == mse({"X": b}, {"X": a})
        assert 0.0 <= mse({"X": a}, {"X": b}) <= 1.0
