#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""二面體群 D4：反元素、合成、取樣與 tape 上的反向。"""

import os
import sys
from collections import Counter

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from scripts.engine import Tape, Tensor, backward, scale, tensor_sum  # noqa: E402
from scripts.errors import ShapeError  # noqa: E402
from scripts.training.augment import (  # noqa: E402
    ELEMENTS, IDENTITY, DihedralOp, apply, apply_array, apply_each, compose, inverse, sample,
    sample_views,
)

X = np.random.default_rng(7).standard_normal((7, 7)).astype(np.float32)


def test_eight_distinct_actions():
    assert len(ELEMENTS) == 8
    assert len({apply(g, X).tobytes() for g in ELEMENTS}) == 8
    assert IDENTITY.is_identity
    np.testing.assert_array_equal(apply(IDENTITY, X), X)


def test_quarter_turn_convention():
    out = apply(DihedralOp(1, 0), X)
    for i in range(7):
        for j in range(7):
            assert out[i, j] == X[j, 6 - i]


def test_flip_is_horizontal_mirror():
    np.testing.assert_array_equal(apply(DihedralOp(0, 1), X), X[:, ::-1])


@pytest.mark.parametrize("g", ELEMENTS, ids=str)
def test_inverse_undoes(g):
    np.testing.assert_array_equal(apply(inverse(g), apply(g, X)), X)
    np.testing.assert_array_equal(apply(g, apply(inverse(g), X)), X)
    assert g.inverse() == inverse(g)


def test_flips_are_involutions():
    for g in ELEMENTS:
        if g.h:
            assert inverse(g) == g
        else:
            assert inverse(g) == DihedralOp((4 - g.k) % 4, 0)


def test_compose_matches_sequential_application():
    for g1 in ELEMENTS:
        for g2 in ELEMENTS:
            np.testing.assert_array_equal(apply(compose(g2, g1), X), apply(g2, apply(g1, X)))
            assert g1.then(g2) == compose(g2, g1)


def test_compose_is_associative():
    for g1 in ELEMENTS:
        for g2 in ELEMENTS:
            for g3 in ELEMENTS:
                assert compose(compose(g3, g2), g1) == compose(g3, compose(g2, g1))


def test_batch_leading_axes_untouched():
    batch = np.random.default_rng(1).standard_normal((2, 3, 5, 5))
    g = DihedralOp(3, 1)
    out = apply(g, batch)
    for n in range(2):
        for c in range(3):
            np.testing.assert_array_equal(out[n, c], apply(g, batch[n, c]))


def test_odd_rotation_needs_square():
    rect = np.zeros((4, 6))
    with pytest.raises(ShapeError):
        apply(DihedralOp(1, 0), rect)
    assert apply(DihedralOp(2, 1), rect).shape == (4, 6)
    assert apply_array(DihedralOp(1, 0), rect, require_square=False).shape == (6, 4)


def test_invalid_element():
    with pytest.raises(ValueError):
        DihedralOp(4, 0)


def test_apply_backward_is_inverse_permutation():
    x = Tensor(np.random.default_rng(2).standard_normal((1, 1, 4, 4)), requires_grad=True)
    weights = np.random.default_rng(3).standard_normal((1, 1, 4, 4))
    g = DihedralOp(1, 1)
    with Tape() as tape:
        loss = tensor_sum(scale(apply(g, x), weights))
    backward(loss, tape)
    np.testing.assert_array_equal(x.grad, apply_array(inverse(g), weights))


def test_apply_each_per_sample():
    batch = np.random.default_rng(4).standard_normal((3, 2, 4, 4))
    ops = [DihedralOp(0, 0), DihedralOp(1, 0), DihedralOp(2, 1)]
    out = apply_each(ops, batch)
    for i, g in enumerate(ops):
        np.testing.assert_array_equal(out[i], apply(g, batch[i]))
    with pytest.raises(ShapeError):
        apply_each(ops[:2], batch)


def test_sample_consumes_one_draw():
    a, b = np.random.default_rng(0), np.random.default_rng(0)
    sample(a)
    b.integers(0, 8)
    assert a.bit_generator.state == b.bit_generator.state


def test_sample_is_roughly_uniform():
    rng = np.random.default_rng(123)
    draws = 80_000
    counts = Counter(sample(rng) for _ in range(draws))
    assert set(counts) == set(ELEMENTS)
    assert all(0.115 <= c / draws <= 0.135 for c in counts.values())


def test_sample_views_interleaves():
    g1s, g2s = sample_views(np.random.default_rng(5), 4)
    rng = np.random.default_rng(5)
    seq = [sample(rng) for _ in range(8)]
    assert g1s == seq[0::2]
    assert g2s == seq[1::2]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
