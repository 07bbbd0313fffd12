import numpy as np
import pytest

from pronykit import (
    DDSolution,
    MomentSequence,
    SpikeSignal,
    dd_basis,
    dd_moments,
    dd_to_standard,
    prony_mapping,
    solve_prony,
    solve_prony_dd,
)
from pronykit.errors import Unsolvable
from tests.test_solve import match_signals


def classical_divided_difference(xs, ys):
    """Standard recursive table; pairwise-distinct xs only."""
    n = len(xs)
    table = list(ys)
    for level in range(1, n):
        table = [
            (table[i + 1] - table[i]) / (xs[i + level] - xs[i])
            for i in range(n - level)
        ]
    return table[0]


def distinct_nodes(rng, count, separation=0.25, radius=2.0):
    nodes = []
    while len(nodes) < count:
        z = complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
        if abs(z) <= radius and all(abs(z - w) >= separation for w in nodes):
            nodes.append(z)
    return np.array(nodes)


class TestBasis:
    def test_two_distinct_nodes(self):
        basis = dd_basis([0, 1])
        prefix = basis.prefixes[1]
        assert np.allclose(prefix.structure.T, [0, 1])
        assert np.allclose([c[0] for c in prefix.coefficients], [-1, 1])

    def test_double_node(self):
        basis = dd_basis([0, 0])
        prefix = basis.prefixes[1]
        assert prefix.structure.s == 1
        assert np.allclose(prefix.coefficients[0], [0, 1])

    def test_first_element_is_point_mass(self):
        basis = dd_basis([0.7 - 0.2j])
        prefix = basis.prefixes[0]
        assert np.allclose(prefix.coefficients[0], [1])

    def test_partial_fraction_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            d = int(rng.integers(1, 7))
            # mix exact collisions into the vector
            pool = distinct_nodes(rng, max(1, d // 2 + 1))
            w = rng.choice(pool, size=d)
            basis = dd_basis(w)
            z = complex(rng.uniform(2.5, 4.0), rng.uniform(0.5, 1.5))
            for m, prefix in enumerate(basis.prefixes, start=1):
                product = np.prod(
                    [1.0 / (z - t) ** int(k) for t, k in zip(prefix.structure.T, prefix.structure.D)]
                )
                err = abs(prefix.generating_value(z) - product)
                assert err <= 1e-10 * max(1.0, abs(product))


class TestMoments:
    def test_distinct_pair_column(self):
        nu = dd_moments([0, 1], 6)
        assert np.allclose(nu[:, 1], [0, 1, 1, 1, 1, 1])

    def test_collided_pair_column(self):
        nu = dd_moments([0, 0], 6)
        assert np.allclose(nu[:, 1], [0, 1, 0, 0, 0, 0])

    def test_near_collision_column(self):
        h = 1e-3
        nu = dd_moments([0, h], 4)
        assert np.allclose(nu[:, 1], [0, 1, h, h * h])

    def test_classical_action(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            d = int(rng.integers(2, 7))
            w = distinct_nodes(rng, d)
            nu = dd_moments(w, d)
            for m in range(1, d + 1):
                for k in range(d):
                    expected = classical_divided_difference(w[:m], w[:m] ** k)
                    assert abs(nu[k, m - 1] - expected) <= 1e-9 * max(1.0, abs(expected))

    def test_continuity_under_collision(self):
        from pronykit.bench import fit_loglog_slope

        rng = np.random.default_rng(2)
        for base in ([0.0, 0.0, 1.0], [0.5, 0.5, 0.5]):
            w0 = np.array(base, dtype=complex)
            hs = [1e-2, 1e-3, 1e-4, 1e-5]
            gaps = []
            for h in hs:
                wh = w0 + np.array([0, h, 2 * h])
                gaps.append(np.max(np.abs(dd_moments(wh, 6) - dd_moments(w0, 6))))
            slope, _ = fit_loglog_slope(hs, gaps)
            assert slope >= 0.9

    def test_basis_matrix_nonsingular(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            d = int(rng.integers(1, 6))
            pool = distinct_nodes(rng, max(1, (d + 1) // 2))
            w = rng.choice(pool, size=d)
            nu = dd_moments(w, d)
            cond = np.linalg.cond(nu)
            assert np.isfinite(cond)
            assert abs(np.linalg.det(nu)) > 0


class TestSolveDD:
    def test_symmetric_pair(self):
        sol = solve_prony_dd(MomentSequence([2, 0, 2, 0]))
        assert np.allclose(np.sort_complex(sol.w), [-1, 1])
        assert np.allclose(sol.beta, [2, 2])
        assert sol.residual <= 1e-10

    def test_confluent_pair(self):
        sol = solve_prony_dd(MomentSequence([1, 1, 0, 0]))
        assert np.allclose(sol.w, [0, 0])
        assert np.allclose(sol.beta, [1, 1])

    def test_collision_family_stays_bounded(self):
        betas = []
        for h in (1e-2, 1e-3, 1e-4):
            f = SpikeSignal.simple([0, h], [-1 / h, 1 / h])
            sol = solve_prony_dd(prony_mapping(f, 4))
            betas.append(np.max(np.abs(sol.beta)))
        limit = solve_prony_dd(MomentSequence([0, 1, 0, 0]))
        top = np.max(np.abs(limit.beta))
        for b in betas:
            assert b <= 2 * max(top, 1.0)

    def test_requires_full_rank(self):
        f = SpikeSignal.simple([1], [1])
        mu = prony_mapping(f, 4)  # order 1 data in a d = 2 problem
        with pytest.raises(Unsolvable):
            solve_prony_dd(mu)

    def test_json_fields(self):
        sol = solve_prony_dd(MomentSequence([2, 0, 2, 0]))
        obj = sol.to_json()
        assert set(obj) == {"w", "beta", "condition_number"}


class TestToStandard:
    def test_confluent_expansion(self):
        sol = DDSolution(np.array([0.0 + 0j, 0.0 + 0j]), np.array([1.0 + 0j, 1.0 + 0j]), 1.0, 0.0)
        sig = dd_to_standard(sol)
        assert np.allclose(sig.nodes, [0])
        assert list(sig.multiplicities) == [2]
        assert np.allclose(sig.coeffs[0], [1, 1])

    def test_dropped_second_node(self):
        sol = DDSolution(np.array([0.5 + 0j, 2.0 + 0j]), np.array([3.0 + 0j, 0.0 + 0j]), 1.0, 0.0)
        sig = dd_to_standard(sol)
        assert sig.num_nodes == 1
        assert np.allclose(sig.nodes, [0.5])
        assert np.allclose(sig.coeffs[0], [3])

    def test_agrees_with_standard_solver(self):
        rng = np.random.default_rng(4)
        for _ in range(60):
            d = int(rng.integers(1, 6))
            nodes = distinct_nodes(rng, d)
            amps = rng.uniform(0.5, 1.5, d) * np.exp(1j * rng.uniform(0, 2 * np.pi, d))
            f = SpikeSignal.simple(nodes, amps)
            mu = prony_mapping(f, 2 * d)
            direct = solve_prony(mu)
            via_dd = dd_to_standard(solve_prony_dd(mu))
            match_signals(via_dd, direct, 1e-8, 1e-8)
