import numpy as np
import pytest

from pronykit import (
    MomentSequence,
    SpikeSignal,
    polynomial_roots,
    prony_mapping,
    rational_from_signal,
    solve_prony,
    stieltjes_taylor,
)
from pronykit.errors import RootFindingFailure, Unsolvable
from pronykit.solve import denominator_coefficients
from tests.test_core import random_signal


def match_signals(found: SpikeSignal, truth: SpikeSignal, node_tol, coeff_tol):
    """Compare two signals up to node permutation."""
    assert found.num_nodes == truth.num_nodes
    a = found.sorted_by_nodes()
    b = truth.sorted_by_nodes()
    assert np.array_equal(a.multiplicities, b.multiplicities)
    assert np.max(np.abs(a.nodes - b.nodes)) <= node_tol
    for ca, cb in zip(a.coeffs, b.coeffs):
        assert np.max(np.abs(ca - cb)) <= coeff_tol


class TestPolynomialRoots:
    def test_quadratic(self):
        roots = polynomial_roots([1, 0, -1])
        assert np.allclose(sorted(roots, key=lambda z: z.real), [-1, 1])

    def test_double_root(self):
        roots = polynomial_roots([1, 0, 0])
        assert np.allclose(roots, [0, 0])

    def test_cubic(self):
        roots = polynomial_roots([1, -6, 11, -6])
        assert np.allclose(roots, [1, 2, 3], atol=1e-8)

    def test_residual_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            zs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            coeffs = np.array([1.0 + 0j])
            for z in zs:
                coeffs = np.convolve(coeffs, [1, -z])
            roots = polynomial_roots(coeffs)
            residuals = np.abs(np.polyval(coeffs, roots))
            assert np.max(residuals) <= 1e-8 * np.max(np.abs(coeffs))

    def test_requires_monic(self):
        with pytest.raises(ValueError):
            polynomial_roots([2, 0, -1])


class TestStieltjesTaylor:
    def test_single_spike_at_two(self):
        f = SpikeSignal.simple([2], [1])
        assert np.allclose(stieltjes_taylor(f, 4), [1, 2, 4, 8])

    def test_spike_at_origin(self):
        f = SpikeSignal.simple([0], [1])
        assert np.allclose(stieltjes_taylor(f, 4), [1, 0, 0, 0])

    def test_matches_moments(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            f = random_signal(rng, max_order=6, separation=0.2)
            n = 2 * f.order
            series = stieltjes_taylor(f, n)
            moments = prony_mapping(f, n).values
            scale = 1.0 + np.max(np.abs(moments))
            assert np.max(np.abs(series - moments)) <= 1e-10 * scale

    def test_rational_structure(self):
        f = SpikeSignal([0.5, -1], [2, 1], [[1, 2], [3]])
        rat = rational_from_signal(f)
        assert rat.degree == 3
        assert len(rat.numerator) <= rat.degree
        assert dict(rat.poles) == {0.5 + 0j: 2, -1 + 0j: 1}


class TestSolveProny:
    def test_symmetric_pair(self):
        sig = solve_prony(MomentSequence([2, 0, 2, 0]))
        match_signals(sig, SpikeSignal.simple([1, -1], [1, 1]), 1e-10, 1e-10)

    def test_order_one(self):
        sig = solve_prony(MomentSequence([1, 2]))
        match_signals(sig, SpikeSignal.simple([2], [1]), 1e-12, 1e-12)

    def test_confluent_double_node(self):
        truth = SpikeSignal([0], [2], [[1, 1]])
        mu = prony_mapping(truth, 4)
        assert np.allclose(mu.values, [1, 1, 0, 0])
        sig = solve_prony(mu)
        match_signals(sig, truth, 1e-9, 1e-9)

    def test_unsolvable_raises(self):
        with pytest.raises(Unsolvable):
            solve_prony(MomentSequence([0, 1]))

    def test_zero_sequence_returns_empty(self):
        sig = solve_prony(MomentSequence([0, 0, 0, 0]))
        assert sig.num_nodes == 0

    def test_denominator_recurrence(self):
        mu = MomentSequence([2, 0, 2, 0])
        q = denominator_coefficients(mu, 2)
        assert np.allclose(q, [1, 0, -1])  # z^2 - 1

    def test_recurrence_residual(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            f = random_signal(rng, max_order=5, separation=0.3)
            r = f.order
            mu = prony_mapping(f, 2 * r)
            q = denominator_coefficients(mu, r)
            coeffs = -q[1:][::-1]  # recurrence weights q_0..q_{r-1}
            vals = mu.values
            scale = 1.0 + np.max(np.abs(vals))
            for k in range(r):
                pred = sum(coeffs[i] * vals[k + i] for i in range(r))
                assert abs(vals[k + r] - pred) <= 1e-9 * scale

    def test_inverse_property(self):
        rng = np.random.default_rng(3)
        for _ in range(120):
            f = random_signal(rng, max_order=6, separation=0.1)
            sig = solve_prony(prony_mapping(f, 2 * f.order))
            match_signals(sig, f, 1e-7, 1e-6)

    def test_forced_rank(self):
        f = SpikeSignal.simple([1, -1], [1, 1])
        mu = prony_mapping(f, 4)
        sig = solve_prony(mu, force_rank=2)
        match_signals(sig, f, 1e-10, 1e-9)
