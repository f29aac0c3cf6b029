import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fk_ergo.kernels import (DiscretizedKernel, apply_to_function, apply_to_measure,
                             euler_maruyama_kernel, gaussian_rw_kernel, ou_kernel, tilt_kernel)
from fk_ergo.lyapunov import gaussian_lyapunov_action
from fk_ergo.state_space import GridFunction, GridMeasure, GridSpace, integrate

TORUS = GridSpace.torus(-math.pi, math.pi, 256)


def two_node_markov():
    g = GridSpace.segment(0.0, 1.0, 2)
    return DiscretizedKernel(g, np.full((2, 2), 0.5), markov=True)


class TestGaussianRandomWalk:
    def test_rows_sum_to_one_away_from_the_edges(self):
        g = GridSpace.segment(-10, 10, 401)
        Q = gaussian_rw_kernel(g, 1.0)
        inner = np.abs(g.nodes) <= 2.0  # >= 8 sigma from both edges
        np.testing.assert_allclose(Q.row_sums[inner], 1.0, atol=1e-12)

    def test_edge_rows_lose_mass(self):
        Q = gaussian_rw_kernel(GridSpace.segment(-8, 8, 321), 1.0)
        # half the Gaussian lies beyond the edge; the node sum counts the centre node fully
        want = 0.5 - 0.5 * Q.space.dx / math.sqrt(2 * math.pi)
        assert Q.mass_deficit[0] == pytest.approx(want, abs=1e-12)

    def test_symmetric(self):
        Q = gaussian_rw_kernel(GridSpace.segment(-4, 4, 81), 0.7)
        np.testing.assert_array_equal(Q.matrix, Q.matrix.T)

    def test_entry_ratio_matches_density(self):
        Q = gaussian_rw_kernel(GridSpace.segment(-0.5, 0.5, 2), 1.0)
        assert Q.matrix[0, 1] / Q.matrix[0, 0] == pytest.approx(math.exp(-0.5), rel=1e-14)

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_bad_sigma(self, sigma):
        with pytest.raises(ValueError):
            gaussian_rw_kernel(GridSpace.segment(-1, 1, 5), sigma)


class TestOU:
    def test_rho_zero_rows_are_identical(self):
        g = GridSpace.segment(-6, 6, 121)
        Q = ou_kernel(g, 0.0, 1.0)
        np.testing.assert_array_equal(Q.matrix, np.broadcast_to(Q.matrix[0], Q.matrix.shape))

    def test_stationary_variance(self):
        g = GridSpace.segment(-10, 10, 401)  # > 8 stationary deviations (sqrt(4/3))
        Q = ou_kernel(g, 0.5, 1.0)
        mu = GridMeasure.delta(g, 0.0)
        for _ in range(100):
            mu = apply_to_measure(mu, Q)
        assert mu.total_mass == pytest.approx(1.0, abs=1e-6)
        assert integrate(mu, GridFunction(g, g.nodes**2)) == pytest.approx(4.0 / 3.0, abs=1e-6)

    def test_rows_sum_to_one_on_wide_segment(self):
        g = GridSpace.segment(-10, 10, 401)
        Q = ou_kernel(g, 0.5, 1.0)
        inner = np.abs(g.nodes) <= 4.0
        np.testing.assert_allclose(Q.row_sums[inner], 1.0, atol=1e-6)

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_rho_outside_unit_interval(self, rho):
        with pytest.raises(ValueError):
            ou_kernel(GridSpace.segment(-1, 1, 5), rho, 1.0)


class TestEulerMaruyama:
    def test_zero_drift_rows_are_shifts_of_one_row(self):
        Q = euler_maruyama_kernel(TORUS, GridFunction.constant(TORUS, 0.0), 1.0, 0.1)
        for i in (1, 17, 200):
            np.testing.assert_allclose(Q.matrix[i], np.roll(Q.matrix[0], i), rtol=0, atol=1e-15)

    def test_rows_sum_to_one(self):
        Q = euler_maruyama_kernel(TORUS, GridFunction(TORUS, -np.sin(TORUS.nodes)), 1.0, 0.1)
        assert Q.markov
        assert np.max(np.abs(Q.row_sums - 1.0)) <= 1e-10

    def test_mean_displacement_follows_drift(self):
        dt = 0.05
        Q = euler_maruyama_kernel(TORUS, GridFunction(TORUS, -np.sin(TORUS.nodes)), 1.0, dt)
        d = TORUS.displacement(TORUS.nodes[:, None], TORUS.nodes[None, :])
        mean = (Q.matrix * d).sum(axis=1)
        assert np.max(np.abs(mean + dt * np.sin(TORUS.nodes))) <= TORUS.dx

    def test_segment_rejected(self):
        g = GridSpace.segment(-1, 1, 11)
        with pytest.raises(ValueError):
            euler_maruyama_kernel(g, GridFunction.constant(g, 0.0), 1.0, 0.1)

    def test_under_resolved_step_rejected(self):
        coarse = GridSpace.torus(-math.pi, math.pi, 32)
        with pytest.raises(ValueError, match="under-resolved"):
            euler_maruyama_kernel(coarse, GridFunction.constant(coarse, 0.0), 1.0, 1e-4)


class TestTilt:
    def test_zero_weight_is_identity(self):
        Q = gaussian_rw_kernel(GridSpace.segment(-3, 3, 31), 1.0)
        K = tilt_kernel(Q, GridFunction.constant(Q.space, 0.0))
        np.testing.assert_array_equal(K.matrix, Q.matrix)

    def test_row_scaling(self):
        Q = gaussian_rw_kernel(GridSpace.segment(-3, 3, 31), 1.0)
        f = GridFunction(Q.space, -Q.space.nodes**2)
        K = tilt_kernel(Q, f, scale=0.5)
        np.testing.assert_allclose(K.row_sums, np.exp(0.5 * f.values) * Q.row_sums, rtol=1e-14)

    def test_two_node_example(self):
        Q = two_node_markov()
        K = tilt_kernel(Q, GridFunction(Q.space, [math.log(2.0), 0.0]))
        np.testing.assert_allclose(K.matrix, [[1.0, 1.0], [0.5, 0.5]], rtol=1e-15)
        assert not K.markov


class TestApply:
    def test_markov_preserves_constants_and_mass(self):
        Q = two_node_markov()
        np.testing.assert_allclose(apply_to_function(Q, GridFunction.constant(Q.space)).values, 1.0)
        assert apply_to_measure(GridMeasure(Q.space, [0.3, 0.7]), Q).total_mass == pytest.approx(1.0)

    def test_single_positive_column(self):
        g = GridSpace.segment(0, 1, 3)
        M = np.zeros((3, 3))
        M[:, 1] = [1.0, 2.0, 3.0]
        out = apply_to_function(DiscretizedKernel(g, M), GridFunction(g, [5.0, 7.0, 11.0])).values
        np.testing.assert_allclose(out, 7.0 * M[:, 1])

    def test_point_mass_picks_a_row(self):
        Q = gaussian_rw_kernel(GridSpace.segment(-2, 2, 21), 1.0)
        np.testing.assert_array_equal(apply_to_measure(GridMeasure.delta(Q.space, 0.4), Q).masses,
                                      Q.matrix[12])

    def test_gaussian_lyapunov_closed_form(self):
        beta, sigma = 0.3, 1.0
        g = GridSpace.segment(-20, 20, 801)
        Q = gaussian_rw_kernel(g, sigma)
        W = GridFunction(g, np.exp(beta * g.nodes**2))
        s = 1 - 2 * beta * sigma**2
        # the integrand is Gaussian with mean x/s and sd sigma/sqrt(s); keep 6 sd inside
        x = g.nodes
        inside = np.abs(x) / s + 6 * sigma / math.sqrt(s) <= 20
        got = apply_to_function(Q, W).values[inside]
        want = gaussian_lyapunov_action(g, beta, sigma).values[inside]
        assert inside.sum() > 100
        np.testing.assert_allclose(got, want, rtol=1e-3)


class TestValidation:
    def test_negative_entry(self):
        g = GridSpace.segment(0, 1, 2)
        with pytest.raises(ValueError):
            DiscretizedKernel(g, np.array([[1.0, -0.1], [0.5, 0.5]]))

    def test_zero_row(self):
        g = GridSpace.segment(0, 1, 2)
        with pytest.raises(ValueError):
            DiscretizedKernel(g, np.array([[0.0, 0.0], [0.5, 0.5]]))

    def test_markov_flag_checks_row_sums(self):
        g = GridSpace.segment(0, 1, 2)
        with pytest.raises(ValueError):
            DiscretizedKernel(g, np.array([[0.6, 0.6], [0.5, 0.5]]), markov=True)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12))
def test_duality(seed, n):
    rng = np.random.default_rng(seed)
    g = GridSpace.segment(0, 1, n)
    K = DiscretizedKernel(g, rng.random((n, n)) + 1e-3)
    mu = GridMeasure(g, rng.random(n))
    phi = GridFunction(g, rng.normal(size=n))
    lhs = integrate(apply_to_measure(mu, K), phi)
    rhs = integrate(mu, apply_to_function(K, phi))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 2.0))
def test_tilt_rows_exact(seed, scale):
    rng = np.random.default_rng(seed)
    g = GridSpace.segment(-3, 3, 13)
    Q = gaussian_rw_kernel(g, 1.0)
    f = GridFunction(g, rng.normal(size=13))
    K = tilt_kernel(Q, f, scale)
    np.testing.assert_array_equal(K.matrix, np.exp(scale * f.values)[:, None] * Q.matrix)


@given(sigma=st.floats(0.3, 3.0), rho=st.floats(-0.9, 0.9))
def test_entries_positive_within_eight_sigma(sigma, rho):
    g = GridSpace.segment(-5, 5, 51)
    for Q, centers in ((gaussian_rw_kernel(g, sigma), g.nodes), (ou_kernel(g, rho, sigma), rho * g.nodes)):
        near = np.abs(g.nodes[None, :] - centers[:, None]) <= 8 * sigma
        assert np.all(Q.matrix[near] > 0)


@given(dt=st.floats(0.01, 1.0), shift=st.floats(-1, 1))
def test_euler_maruyama_conserves_mass(dt, shift):
    Q = euler_maruyama_kernel(TORUS, GridFunction(TORUS, -np.sin(TORUS.nodes) + shift), 1.0, dt)
    assert np.max(np.abs(Q.row_sums - 1.0)) <= 1e-10
