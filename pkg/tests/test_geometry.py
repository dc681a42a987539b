import math

import numpy as np
import pytest

from dform.forms import FormError
from dform.geometry import (
    abs_det,
    c1_value,
    c2_literal,
    cluster_exponent,
    cluster_threshold,
    constants,
    wedge_norm,
)


def test_wedge_norm_orthonormal():
    assert wedge_norm(np.eye(3)) == pytest.approx(1.0)
    assert wedge_norm(np.eye(3)[:2]) == pytest.approx(1.0)
    assert wedge_norm([[1, 0], [1, 0]]) == pytest.approx(0.0)


def test_wedge_norm_gram():
    rng = np.random.default_rng(0)
    for _ in range(20):
        V = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
        G = V.conj() @ V.T
        assert wedge_norm(V) == pytest.approx(math.sqrt(abs(np.linalg.det(G))), rel=1e-10)


def test_abs_det():
    assert abs_det([[2, 0], [0, 3]]) == pytest.approx(6.0)


def test_c1_small_values():
    assert c1_value(2, 2) == pytest.approx(1.0)
    assert c1_value(2, 4) == pytest.approx(4 / 6)
    for n in range(2, 6):
        for d in range(n + 1, 12):
            assert 0 < c1_value(n, d) < 1


def test_cluster_exponent_positive():
    for n in range(2, 6):
        for d in range(n, 12):
            for j in range(1, n):
                e = cluster_exponent(n, d, j)
                assert e > 0
                assert cluster_threshold(n, d, j) == pytest.approx(c1_value(n, d) ** e)


@pytest.mark.parametrize("n,d", [(2, 2), (2, 3), (2, 4), (3, 3), (3, 5), (3, 7), (4, 6), (5, 9)])
def test_c2_forms_agree(n, d):
    for a in np.linspace(1.0, d / n, 4):
        t = constants(n, d, a)
        assert t.c2 == pytest.approx(c2_literal(n, d, a), rel=1e-10)


def test_constants_monotone_chain():
    t = constants(3, 6, 1.5)
    assert t.c3 >= 1.0
    assert t.c5 > t.c4 > 0
    assert t.c6 > t.c5
    assert t.c7 == pytest.approx(3 ** (-1.5) / 36)
    assert t.c8 == pytest.approx(3**3.5)


def test_constants_input_checks():
    with pytest.raises(FormError):
        constants(3, 2, 1.0)
    with pytest.raises(FormError):
        constants(2, 4, 3.0)
