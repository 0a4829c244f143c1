from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnifilter.prediction import (DEFAULT_NUM_QUERIES, ScoredPrediction,
                                   TeacherPrediction, score)


def make_pred(logits, boxes=None, seed=0):
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    if boxes is None:
        rng = np.random.default_rng(seed)
        k = logits.shape[0]
        boxes = np.column_stack([rng.uniform(0.3, 0.7, k), rng.uniform(0.3, 0.7, k),
                                 rng.uniform(0.1, 0.3, k), rng.uniform(0.1, 0.3, k)])
    return TeacherPrediction(image_id=0, logits=logits,
                             boxes=np.asarray(boxes, dtype=np.float64))


class TestTeacherPrediction:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="logit rows"):
            TeacherPrediction(image_id=0, logits=np.zeros((3, 4)), boxes=np.zeros((2, 4)))

    def test_box_width_must_be_four(self):
        with pytest.raises(ValueError, match="K x 4"):
            TeacherPrediction(image_id=0, logits=np.zeros((3, 4)), boxes=np.zeros((3, 5)))

    def test_non_finite_rejected(self):
        logits = np.zeros((2, 3))
        logits[0, 0] = math.inf
        with pytest.raises(ValueError, match="finite"):
            TeacherPrediction(image_id=0, logits=logits, boxes=np.full((2, 4), 0.5))

    def test_arrays_frozen(self):
        p = make_pred(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            p.logits[0, 0] = 1.0
        with pytest.raises(ValueError):
            p.boxes[0, 0] = 1.0

    def test_counts(self):
        p = make_pred(np.zeros((5, 7)))
        assert p.num_queries == 5
        assert p.num_classes == 7
        assert DEFAULT_NUM_QUERIES == 300


class TestScore:
    def test_uniform_logits(self):
        sp = score(make_pred(np.zeros((2, 3))))
        np.testing.assert_allclose(sp.probs, 1 / 3, atol=1e-15)
        # ties resolve to the smallest class index
        np.testing.assert_array_equal(sp.pred_class, [0, 0])
        np.testing.assert_allclose(sp.score, 1 / 3, atol=1e-15)

    def test_two_class_oracle(self):
        # softmax(ln 2, 0) = (2/3, 1/3)
        sp = score(make_pred([[math.log(2.0), 0.0]]))
        np.testing.assert_allclose(sp.probs[0], [2 / 3, 1 / 3], atol=1e-15)
        assert sp.pred_class[0] == 0
        assert sp.score[0] == pytest.approx(2 / 3, abs=1e-15)

    def test_shift_invariance(self):
        rng = np.random.default_rng(7)
        logits = rng.normal(size=(5, 11))
        a = score(make_pred(logits, seed=1))
        b = score(make_pred(logits + 123.456, seed=1))
        np.testing.assert_allclose(a.probs, b.probs, atol=1e-9)
        np.testing.assert_array_equal(a.pred_class, b.pred_class)

    def test_large_logits_stable(self):
        sp = score(make_pred([[1000.0, 0.0, -1000.0]]))
        assert np.isfinite(sp.probs).all()
        assert sp.probs[0, 0] == pytest.approx(1.0)

    def test_rows_are_distributions(self):
        rng = np.random.default_rng(11)
        sp = score(make_pred(rng.normal(scale=3.0, size=(40, 9))))
        np.testing.assert_allclose(sp.probs.sum(axis=1), 1.0, atol=1e-12)
        assert (sp.probs >= 0).all()
        np.testing.assert_array_equal(sp.pred_class, sp.probs.argmax(axis=1))
        np.testing.assert_array_equal(sp.score, sp.probs.max(axis=1))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 12), st.integers(0, 2**16))
    def test_confidence_at_least_uniform(self, k, c, s):
        rng = np.random.default_rng(s)
        sp = score(make_pred(rng.normal(size=(k, c)), seed=s))
        assert (sp.score >= 1.0 / c - 1e-12).all()


class TestScoredPrediction:
    def test_counts(self):
        sp = score(make_pred(np.zeros((4, 2))))
        assert sp.num_queries == 4
        assert sp.num_classes == 2

    def test_arrays_frozen(self):
        sp = score(make_pred(np.zeros((4, 2))))
        with pytest.raises(ValueError):
            sp.probs[0, 0] = 0.5
