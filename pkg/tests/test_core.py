import numpy as np
import pytest

from pronykit import (
    MomentSequence,
    SpikeSignal,
    confluent_vandermonde,
    falling_factorial,
    multiplicity_structure,
    prony_mapping,
    solve_coefficient_system,
)
from pronykit.errors import SingularSystem


def random_signal(rng, max_order=6, separation=0.1, radius=2.0, max_mult=3):
    d = int(rng.integers(1, max_order + 1))
    mults = []
    while sum(mults) < d:
        mults.append(int(min(rng.integers(1, max_mult + 1), d - sum(mults))))
    nodes = []
    while len(nodes) < len(mults):
        z = complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
        if abs(z) <= radius and all(abs(z - w) >= separation for w in nodes):
            nodes.append(z)
    coeffs = []
    for dj in mults:
        c = rng.uniform(-1, 1, dj) + 1j * rng.uniform(-1, 1, dj)
        c[-1] = rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        coeffs.append(c)
    return SpikeSignal(nodes, mults, coeffs)


class TestMultiplicityStructure:
    def test_reference_grouping(self):
        ms = multiplicity_structure([3, 1, 2, 1, 0, 3, 2], 0.0)
        assert ms.s == 4
        assert np.allclose(ms.T, [3, 1, 2, 0])
        assert list(ms.D) == [2, 2, 2, 1]

    def test_single_value(self):
        ms = multiplicity_structure([5], 0.0)
        assert ms.s == 1 and ms.T[0] == 5 and ms.D[0] == 1

    def test_merge_within_tolerance(self):
        ms = multiplicity_structure([0, 1e-12, 1], 1e-9)
        assert ms.s == 2
        assert list(ms.D) == [2, 1]

    def test_order_preserved(self):
        # appending a repeat of an existing value only bumps its count
        base = multiplicity_structure([2, -1, 0.5], 0.0)
        extended = multiplicity_structure([2, -1, 0.5, -1], 0.0)
        assert np.allclose(base.T, extended.T)
        assert list(extended.D) == [1, 2, 1]

    def test_order_sums_to_length(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            w = rng.integers(-3, 4, size=rng.integers(1, 9)).astype(complex)
            ms = multiplicity_structure(w, 0.0)
            assert ms.order == len(w)


class TestPronyMapping:
    def test_delta_at_origin(self):
        f = SpikeSignal.simple([0], [1])
        assert np.allclose(prony_mapping(f, 4).values, [1, 0, 0, 0])

    def test_two_symmetric_spikes(self):
        f = SpikeSignal.simple([1, -1], [1, 1])
        assert np.allclose(prony_mapping(f, 4).values, [2, 0, 2, 0])

    def test_derivative_at_origin(self):
        f = SpikeSignal([0], [2], [[0, 1]])
        assert np.allclose(prony_mapping(f, 4).values, [0, 1, 0, 0])

    def test_linear_in_coefficients(self):
        rng = np.random.default_rng(1)
        nodes = [0.3, -0.9 + 0.2j]
        mults = [2, 1]
        c1 = [rng.standard_normal(2) + 1j * rng.standard_normal(2), [1.0]]
        c2 = [rng.standard_normal(2) + 1j * rng.standard_normal(2), [-0.5 + 0.1j]]
        f = SpikeSignal(nodes, mults, c1)
        g = SpikeSignal(nodes, mults, c2)
        a, b = 1.7, -0.4 + 0.3j
        combo = SpikeSignal(nodes, mults, [a * np.asarray(x) + b * np.asarray(y) for x, y in zip(c1, c2)])
        lhs = prony_mapping(combo, 8).values
        rhs = a * prony_mapping(f, 8).values + b * prony_mapping(g, 8).values
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)

    def test_confluent_limit(self):
        # difference quotient of deltas converges to the derivative spike
        target = prony_mapping(SpikeSignal([0], [2], [[0, 1]]), 4).values
        for h in (1e-2, 1e-3, 1e-4):
            f_h = SpikeSignal.simple([0, h], [-1 / h, 1 / h])
            gap = np.max(np.abs(prony_mapping(f_h, 4).values - target))
            assert gap <= 2 * h

    def test_empty_signal(self):
        assert np.allclose(prony_mapping(SpikeSignal.empty(), 3).values, 0)


class TestFallingFactorial:
    def test_values(self):
        ks = np.arange(6)
        assert np.allclose(falling_factorial(ks, 0), np.ones(6))
        assert np.allclose(falling_factorial(ks, 2), [0, 0, 2, 6, 12, 20])
        # vanishes where ell > k
        assert falling_factorial(np.array([1]), 3)[0] == 0


class TestConfluentVandermonde:
    def test_double_node_at_origin(self):
        V = confluent_vandermonde([0], [2])
        assert np.allclose(V, np.eye(2))

    def test_plain_vandermonde(self):
        V = confluent_vandermonde([1, -1], [1, 1])
        assert np.allclose(V, [[1, 1], [1, -1]])

    def test_determinant_formula(self):
        # classical determinant: prod_j prod_{l<d_j} l! * prod_{i<j}(x_j-x_i)^{d_i d_j}
        import math

        rng = np.random.default_rng(2)
        for _ in range(40):
            s = int(rng.integers(1, 4))
            T = rng.standard_normal(s) + 1j * rng.standard_normal(s)
            while np.min(np.abs(T[:, None] - T[None, :]) + np.eye(s)) < 0.2:
                T = rng.standard_normal(s) + 1j * rng.standard_normal(s)
            D = rng.integers(1, 4, size=s)
            if D.sum() > 6:
                continue
            expected = 1.0 + 0j
            for dj in D:
                for ell in range(int(dj)):
                    expected *= math.factorial(ell)
            for i in range(s):
                for j in range(i + 1, s):
                    expected *= (T[j] - T[i]) ** (int(D[i]) * int(D[j]))
            det = np.linalg.det(confluent_vandermonde(T, D))
            assert abs(det - expected) <= 1e-8 * max(1.0, abs(expected))

    def test_rejects_repeated_nodes(self):
        with pytest.raises(ValueError):
            confluent_vandermonde([1, 1], [1, 1])


class TestSolveCoefficientSystem:
    def test_two_spikes(self):
        coeffs = solve_coefficient_system([1, -1], [1, 1], [2, 0])
        assert np.allclose(np.concatenate(coeffs), [1, 1])

    def test_confluent_identity_case(self):
        coeffs = solve_coefficient_system([0], [2], [0, 1])
        assert np.allclose(coeffs[0], [0, 1])

    def test_one_by_one(self):
        coeffs = solve_coefficient_system([2], [1], [1])
        assert np.allclose(coeffs[0], [1])

    def test_round_trip_random(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            f = random_signal(rng, max_order=8, separation=0.1)
            mu = prony_mapping(f, f.order)
            rec = solve_coefficient_system(f.nodes, f.multiplicities, mu.values)
            flat_true = f.flat_coeffs
            flat_rec = np.concatenate(rec)
            scale = np.max(np.abs(flat_true))
            assert np.max(np.abs(flat_rec - flat_true)) <= 1e-9 * max(1.0, scale)

    def test_numerically_repeated_nodes_rejected(self):
        with pytest.raises(SingularSystem):
            solve_coefficient_system([1.0, 1.0 + 1e-16], [1, 1], [1, 1])


class TestContainers:
    def test_signal_validation(self):
        with pytest.raises(ValueError):
            SpikeSignal([0, 0], [1, 1], [[1], [1]])  # repeated nodes
        with pytest.raises(ValueError):
            SpikeSignal([0], [2], [[1, 0]])  # zero leading coefficient
        with pytest.raises(ValueError):
            SpikeSignal([0], [1], [[1, 2]])  # wrong coefficient count

    def test_moment_sequence_validation(self):
        with pytest.raises(ValueError):
            MomentSequence([])
        with pytest.raises(ValueError):
            MomentSequence([1, 2], noise_bounds=[0.1])
        with pytest.raises(ValueError):
            MomentSequence([1, 2], noise_bounds=[-0.1, 0.1])
        assert MomentSequence([1, 2, 3, 4]).order == 2

    def test_signal_json_round_trip(self):
        f = SpikeSignal([0.5 + 0.1j, -1], [2, 1], [[1, 2 - 1j], [3]])
        g = SpikeSignal.from_json(f.to_json())
        assert np.allclose(f.nodes, g.nodes)
        assert np.array_equal(f.multiplicities, g.multiplicities)
        for a, b in zip(f.coeffs, g.coeffs):
            assert np.allclose(a, b)

    def test_moments_json_round_trip(self):
        mu = MomentSequence([1 + 2j, 3], noise_bounds=[0.5, 0.25])
        nu = MomentSequence.from_json(mu.to_json())
        assert np.allclose(mu.values, nu.values)
        assert np.allclose(mu.noise_bounds, nu.noise_bounds)
