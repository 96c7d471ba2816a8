import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdpot import (
    Channel,
    CostMatrix,
    Coupling,
    Distribution,
    SupportGrid,
    entropy,
    expected_distortion,
    hamming_matrix,
    kl_divergence,
    marginal,
    mutual_information,
    squared_error_matrix,
    tv_distance,
    zero_pad,
)
from rdpot.errors import (
    AbsoluteContinuityViolation,
    DimensionMismatch,
    InvalidDistribution,
    ShrinkNotAllowed,
)
from rdpot.probability import load_cost_matrix, load_distribution, save_cost_matrix, save_distribution


def dist(*probs):
    return Distribution.from_probs(list(probs))


@st.composite
def distributions(draw, size=None):
    n = size or draw(st.integers(min_value=1, max_value=6))
    raw = draw(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=n, max_size=n))
    v = np.array(raw)
    return Distribution.from_probs(v / v.sum())


class TestTypes:
    def test_support_must_increase(self):
        with pytest.raises(InvalidDistribution):
            SupportGrid([1.0, 1.0])
        with pytest.raises(InvalidDistribution):
            SupportGrid([2.0, 1.0])
        with pytest.raises(InvalidDistribution):
            SupportGrid([])

    def test_distribution_invariants(self):
        with pytest.raises(InvalidDistribution):
            dist(0.5, 0.6)
        with pytest.raises(InvalidDistribution):
            dist(-0.1, 1.1)
        with pytest.raises(DimensionMismatch):
            Distribution(np.array([1.0]), SupportGrid([0.0, 1.0]))

    def test_channel_rows(self):
        with pytest.raises(InvalidDistribution):
            Channel(np.array([[0.5, 0.4], [0.5, 0.5]]))
        Channel(np.array([[0.5, 0.5], [0.1, 0.9]]))

    def test_cost_matrix_nonnegative(self):
        with pytest.raises(InvalidDistribution):
            CostMatrix(np.array([[0.0, -1.0], [1.0, 0.0]]))

    def test_coupling_marginals(self):
        pi = np.array([[0.2, 0.1], [0.3, 0.4]])
        c = Coupling(pi, left=[0.3, 0.7], right=[0.5, 0.5])
        assert c.shape == (2, 2)
        with pytest.raises(InvalidDistribution):
            Coupling(pi, left=[0.5, 0.5], right=[0.5, 0.5])

    def test_immutability(self):
        d = dist(0.3, 0.7)
        with pytest.raises(ValueError):
            d.probs[0] = 0.5


class TestEntropy:
    def test_point_mass(self):
        assert entropy(dist(1.0, 0.0)) == 0.0

    def test_uniform_two(self):
        assert entropy(dist(0.5, 0.5)) == pytest.approx(math.log(2), abs=1e-15)

    def test_binary_point_one(self):
        # H_b(0.1) in nats, as it enters the closed-form baseline.
        assert entropy(dist(0.1, 0.9)) == pytest.approx(0.325083, abs=1e-6)

    @given(distributions())
    @settings(max_examples=60, deadline=None)
    def test_bounds(self, d):
        h = entropy(d)
        assert -1e-12 <= h <= math.log(len(d)) + 1e-12


class TestKl:
    def test_identical(self):
        assert kl_divergence(dist(0.5, 0.5), dist(0.5, 0.5)) == 0.0

    def test_point_vs_uniform(self):
        assert kl_divergence(dist(1.0, 0.0), dist(0.5, 0.5)) == pytest.approx(math.log(2))

    def test_two_term_sum(self):
        # Independent oracle: the two-term definition written out directly.
        expected = 0.1 * math.log(0.1 / 0.2) + 0.9 * math.log(0.9 / 0.8)
        assert kl_divergence(dist(0.1, 0.9), dist(0.2, 0.8)) == pytest.approx(expected, abs=1e-15)

    def test_absolute_continuity(self):
        with pytest.raises(AbsoluteContinuityViolation):
            kl_divergence(dist(0.5, 0.5), dist(1.0, 0.0))

    def test_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kl_divergence(dist(1.0), dist(0.5, 0.5))

    @given(distributions(size=4), distributions(size=4))
    @settings(max_examples=60, deadline=None)
    def test_nonnegative_zero_iff_equal(self, p, q):
        val = kl_divergence(p, q)
        assert val >= -1e-12
        if np.allclose(p.probs, q.probs, atol=1e-15):
            assert val <= 1e-12
        assert kl_divergence(p, p) <= 1e-12


class TestMutualInformation:
    def test_rank_one_channel(self):
        # Rows identical to the output law: X and X_hat independent.
        w = Channel(np.array([[0.3, 0.7], [0.3, 0.7]]))
        assert mutual_information(w, dist(0.1, 0.9)) == pytest.approx(0.0, abs=1e-15)

    def test_identity_channel(self):
        w = Channel(np.eye(2))
        p = dist(0.1, 0.9)
        assert mutual_information(w, p) == pytest.approx(entropy(p), abs=1e-12)
        assert mutual_information(w, p) == pytest.approx(0.325083, abs=1e-6)

    def test_against_double_loop(self, rng):
        w = rng.dirichlet(np.ones(3), size=3)
        p = rng.dirichlet(np.ones(3))
        joint = p[:, None] * w
        r = joint.sum(axis=0)
        expected = sum(
            joint[i, j] * (math.log(joint[i, j]) - math.log(p[i] * r[j]))
            for i in range(3) for j in range(3) if joint[i, j] > 0
        )
        got = mutual_information(Channel(w), Distribution.from_probs(p))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got >= 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mutual_information(Channel(np.eye(3)), dist(0.5, 0.5))


class TestExpectedDistortion:
    def test_identity_hamming(self):
        w = Channel(np.eye(2))
        assert expected_distortion(w, dist(0.1, 0.9), hamming_matrix(2, 2)) == 0.0

    def test_product_coupling_binary(self):
        # Rows equal to p itself: E[d] = sum_ij p_i p_j 1_{i != j} = 2 p q.
        p = dist(0.1, 0.9)
        w = Channel(np.tile(p.probs, (2, 1)))
        assert expected_distortion(w, p, hamming_matrix(2, 2)) == pytest.approx(0.18, abs=1e-15)

    def test_against_double_loop(self, rng):
        w = rng.dirichlet(np.ones(4), size=3)
        p = rng.dirichlet(np.ones(3))
        d = rng.uniform(0, 2, size=(3, 4))
        expected = sum(p[i] * w[i, j] * d[i, j] for i in range(3) for j in range(4))
        got = expected_distortion(Channel(w), Distribution.from_probs(p), CostMatrix(d))
        assert got == pytest.approx(expected, abs=1e-14)


class TestTv:
    def test_equal(self):
        assert tv_distance(dist(0.4, 0.6), dist(0.4, 0.6)) == 0.0

    def test_disjoint(self):
        assert tv_distance(dist(1.0, 0.0), dist(0.0, 1.0)) == 1.0

    def test_direct_sum(self):
        assert tv_distance(dist(0.1, 0.9), dist(0.16, 0.84)) == pytest.approx(0.06, abs=1e-15)

    @given(distributions(size=5), distributions(size=5), distributions(size=5))
    @settings(max_examples=60, deadline=None)
    def test_metric_properties(self, p, q, s):
        assert tv_distance(p, q) == tv_distance(q, p)
        assert 0.0 <= tv_distance(p, q) <= 1.0
        assert tv_distance(p, s) <= tv_distance(p, q) + tv_distance(q, s) + 1e-12


class TestMarginal:
    def test_identity(self):
        p = dist(0.3, 0.7)
        assert np.allclose(marginal(Channel(np.eye(2)), p).probs, p.probs)

    def test_constant_rows(self):
        q = np.array([0.2, 0.8])
        out = marginal(Channel(np.tile(q, (2, 1))), dist(0.5, 0.5))
        assert np.allclose(out.probs, q)

    def test_against_matvec(self, rng):
        w = rng.dirichlet(np.ones(4), size=3)
        p = rng.dirichlet(np.ones(3))
        out = marginal(Channel(w), Distribution.from_probs(p))
        assert np.allclose(out.probs, p @ w, atol=1e-14)
        assert out.probs.sum() == pytest.approx(1.0, abs=1e-14)


class TestZeroPad:
    def test_pad_two_to_three(self):
        out = zero_pad(dist(0.3, 0.7), 3)
        assert np.allclose(out.probs, [0.3, 0.7, 0.0])
        assert len(out.support) == 3

    def test_same_size_identity(self):
        d = dist(0.3, 0.7)
        assert zero_pad(d, 2) is d

    def test_shrink_rejected(self):
        with pytest.raises(ShrinkNotAllowed):
            zero_pad(dist(0.3, 0.7), 1)


class TestCostBuilders:
    def test_hamming(self):
        assert np.array_equal(hamming_matrix(2, 2).entries, [[0, 1], [1, 0]])

    def test_squared_error_binary_grid(self):
        g = SupportGrid([0.0, 1.0])
        assert np.array_equal(squared_error_matrix(g, g).entries, [[0, 1], [1, 0]])

    def test_squared_error_symmetry(self):
        g = SupportGrid([-1.0, 0.0, 1.0])
        e = squared_error_matrix(g, g).entries
        assert np.allclose(np.diag(e), 0.0)
        assert np.allclose(e, e.T)


class TestFileFormats:
    def test_distribution_roundtrip(self, tmp_path):
        d = dist(0.25, 0.75)
        path = tmp_path / "dist.json"
        save_distribution(d, path)
        loaded = load_distribution(path)
        assert np.allclose(loaded.probs, d.probs)
        assert np.allclose(loaded.support.points, d.support.points)
        obj = json.loads(path.read_text())
        assert set(obj) == {"support", "probs"}

    def test_cost_matrix_roundtrip(self, tmp_path):
        c = CostMatrix(np.array([[0.0, 2.0], [1.5, 0.0]]))
        path = tmp_path / "cost.json"
        save_cost_matrix(c, path)
        loaded = load_cost_matrix(path)
        assert np.allclose(loaded.entries, c.entries)
        obj = json.loads(path.read_text())
        assert obj["rows"] == 2 and obj["cols"] == 2

    def test_cost_matrix_shape_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"rows": 3, "cols": 2, "entries": [[0, 1], [1, 0]]}))
        with pytest.raises(DimensionMismatch):
            load_cost_matrix(path)
