import math

import numpy as np
import pytest

from braidflow.analysis import (
    VertexBudgetExceeded,
    burau_matrix,
    entropy_estimate,
    fit_growth,
    poincare_map,
)
from braidflow.braid_algebra import parse_word, random_word

from conftest import schedule_for

GOLDEN = math.log((3 + math.sqrt(5)) / 2)


class TestBurau:
    def test_pseudo_anosov_3braid(self):
        b = burau_matrix(parse_word("s1 s2^-1", 3))
        assert np.allclose(b.matrix, [[2, 1], [1, 1]])
        assert b.value == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-12)
        assert b.log_value == pytest.approx(0.9624237, abs=1e-7)

    def test_identity(self):
        b = burau_matrix(parse_word("", 4))
        assert np.array_equal(b.matrix, np.eye(3)) and b.value == 1.0

    def test_generator_unipotent(self):
        b = burau_matrix(parse_word("s1", 3))
        assert np.allclose(b.matrix, [[1, 1], [0, 1]]) and b.value == pytest.approx(1.0)

    def test_relations_hold(self):
        for a, c, n in [("s1 s2 s1", "s2 s1 s2", 3), ("s1 s3", "s3 s1", 4),
                        ("s2 s3 s2", "s3 s2 s3", 5)]:
            assert np.allclose(burau_matrix(parse_word(a, n)).matrix,
                               burau_matrix(parse_word(c, n)).matrix)

    def test_inverse(self):
        w = random_word(4, 6, 1)
        from braidflow.braid_algebra import inverse_word
        m = burau_matrix(w * inverse_word(w)).matrix
        assert np.allclose(m, np.eye(3))

    def test_conjugation_invariant(self):
        a = burau_matrix(parse_word("s1 s2^-1", 3)).value
        b = burau_matrix(parse_word("s1 s1 s2^-1 s1^-1", 3)).value
        assert a == pytest.approx(b)

    def test_two_strands(self):
        assert burau_matrix(parse_word("s1 s1", 2)).value == 1.0


class TestPoincare:
    def test_empty_identity(self):
        f = poincare_map(schedule_for(""))
        x, y = np.array([0.1, 0.5]), np.array([0.2, -0.1])
        X, Y = f(x, y)
        assert np.array_equal(X, x) and np.array_equal(Y, y)

    def test_swap(self):
        X, Y = poincare_map(schedule_for("s1"))(np.array([0.0, 1 / 3, 2 / 3]), np.zeros(3))
        assert X == pytest.approx([1 / 3, 0.0, 2 / 3], abs=1e-9)
        assert np.abs(Y).max() < 1e-9

    def test_time_reversal(self):
        rng = np.random.default_rng(0)
        x, y = rng.uniform(0, 1, 50), rng.uniform(-0.4, 0.4, 50)
        X, Y = poincare_map(schedule_for("s2 s2^-1"))(x, y)
        assert np.max(np.abs(X - x)) < 1e-8 and np.max(np.abs(Y - y)) < 1e-8

    def test_permutes_marked_points(self):
        sched = schedule_for("s1 s2^-1")
        x0, y0 = sched.layout.marked_points()
        X, _ = poincare_map(sched)(x0, y0)
        # strand from slot i ends in slot perm[i]
        from braidflow.braid_algebra import endpoint_permutation
        perm = endpoint_permutation(sched.word).images
        for i, j in enumerate(perm):
            assert X[i] == pytest.approx(x0[j - 1], abs=1e-6)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            poincare_map(schedule_for(""), "magic")


class TestEntropy:
    def test_empty_word(self):
        r = entropy_estimate(schedule_for(""), iters=6)
        assert r.entropy == pytest.approx(0.0, abs=1e-6)
        assert max(r.lengths) - min(r.lengths) < 1e-12

    def test_trivial_product(self):
        r = entropy_estimate(schedule_for("s1 s1^-1"), iters=6)
        assert r.entropy == pytest.approx(0.0, abs=1e-6)

    def test_finite_order(self):
        r = entropy_estimate(schedule_for("s1"), iters=6)
        assert r.entropy < 0.05
        assert r.burau_bound == pytest.approx(1.0)

    def test_lower_bound_law(self):
        r = entropy_estimate(schedule_for("s1 s2^-1"), iters=5, vertex_budget=20_000,
                             renormalize=True)
        assert r.entropy >= GOLDEN - 0.1
        assert r.truncations > 0

    def test_budget_error(self):
        with pytest.raises(VertexBudgetExceeded):
            entropy_estimate(schedule_for("s1 s2^-1"), iters=5, vertex_budget=5_000)

    def test_report_json(self):
        import json

        r = entropy_estimate(schedule_for(""), iters=4)
        d = json.loads(r.to_json())
        assert set(d) >= {"word", "iters", "h_max", "lengths", "entropy", "burau_bound", "log_burau"}

    @pytest.mark.parametrize("kw", [dict(iters=1), dict(h_max=0.0), dict(h_max=0.1)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            entropy_estimate(schedule_for(""), **kw)

    def test_fit_growth(self):
        assert fit_growth([0, 1, 2, 3, 4.0], 3) == pytest.approx(1.0)
        assert fit_growth([1.0, 1.0, 1.0], 3) == 0.0


class TestPeriodJacobian:
    def test_discrete_area_preserving(self):
        from braidflow.analysis import period_jacobian_det

        rng = np.random.default_rng(8)
        x, y = rng.uniform(0, 1, 40), rng.uniform(-0.4, 0.4, 40)
        det = period_jacobian_det(schedule_for("s1 s2^-1"), x, y)
        assert np.max(np.abs(det - 1)) < 1e-6

    def test_blend_zone_fixed_point_is_hyperbolic(self):
        # each sub-step map has a saddle on y = 0 at the edge of the bump
        from braidflow.generating_function import GeneratorShape
        from braidflow.twist_map import forward_xy

        sh = GeneratorShape(16, 0.6 / 9)
        x0 = 0.20164
        X, Y = forward_xy(sh, np.array([x0]), np.array([0.0]))
        assert abs(Y[0]) < 1e-4 and abs(X[0] - x0) < 1e-4
        h = 1e-7
        cols = []
        for dx, dy in ((h, 0.0), (0.0, h)):
            a = forward_xy(sh, np.array([x0 + dx]), np.array([dy]))
            b = forward_xy(sh, np.array([x0 - dx]), np.array([-dy]))
            cols.append([(a[0][0] - b[0][0]) / (2 * h), (a[1][0] - b[1][0]) / (2 * h)])
        ev = np.linalg.eigvals(np.array(cols).T)
        assert max(abs(ev)) > 1.5

    def test_unknown_method(self):
        from braidflow.analysis import period_jacobian_det

        with pytest.raises(ValueError):
            period_jacobian_det(schedule_for("s1"), [0.1], [0.0], method="fd")
