import numpy as np
import pytest

from pronykit import (
    MomentSequence,
    SpikeSignal,
    build_hankel,
    classify,
    escape_diagnostic,
    prony_mapping,
    solve_prony,
)
from pronykit.errors import Unsolvable
from tests.test_core import random_signal


class TestBuildHankel:
    def test_reference_layout(self):
        pencil = build_hankel(MomentSequence([2, 0, 2, 0]))
        assert np.allclose(pencil.full, [[2, 0, 2], [0, 2, 0]])

    def test_order_one(self):
        pencil = build_hankel(MomentSequence([1, 2]))
        assert np.allclose(pencil.full, [[1, 2]])

    def test_top_right_entry(self):
        pencil = build_hankel(MomentSequence([0, 0, 0, 1]))
        assert np.allclose(pencil.full, [[0, 0, 0], [0, 0, 1]])

    def test_rejects_odd_length(self):
        with pytest.raises(ValueError):
            build_hankel(MomentSequence([1, 2, 3]))

    def test_anti_diagonal_constancy(self):
        rng = np.random.default_rng(0)
        mu = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        pencil = build_hankel(MomentSequence(mu))
        d = pencil.order
        for i in range(d):
            for j in range(d + 1):
                assert pencil.full[i, j] == mu[i + j]


class TestClassify:
    def test_rank_two_solvable(self):
        rep = classify(MomentSequence([2, 0, 2, 0]))
        assert rep.rank == 2 and rep.solvable
        assert rep.stratum == "sigma_r"
        assert abs(rep.leading_minor_magnitude - 4.0) < 1e-12

    def test_inconsistent_order_one(self):
        rep = classify(MomentSequence([0, 1]))
        assert rep.rank == 1 and not rep.solvable
        assert rep.stratum == "sigma_prime_r"

    def test_order_one_solvable(self):
        rep = classify(MomentSequence([1, 2]))
        assert rep.rank == 1 and rep.solvable
        assert abs(rep.leading_minor_magnitude - 1.0) < 1e-12

    def test_zero_sequence(self):
        rep = classify(MomentSequence([0, 0, 0, 0]))
        assert rep.rank == 0 and rep.solvable

    def test_rank_matches_signal_order(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            f = random_signal(rng, max_order=5, separation=0.3)
            d = int(rng.integers(f.order, 6))
            rep = classify(prony_mapping(f, 2 * d))
            assert rep.rank == f.order
            assert rep.solvable

    def test_json_schema(self):
        rep = classify(MomentSequence([1, 2]))
        obj = rep.to_json()
        assert set(obj) == {"rank", "solvable", "stratum", "leading_minor"}


class TestEscapeDiagnostic:
    def test_escape_on_shrinking_mass(self):
        # closed form for two moments: node m1/m0 runs away as m0 -> 0
        signals = []
        for t in (0.9, 0.99, 0.999, 0.9999, 0.99999):
            signals.append(solve_prony(MomentSequence([1 - t, 1])))
        report = escape_diagnostic(signals)
        assert report.escape_detected
        # a * x stays pinned at m1 = 1 while x -> infinity
        for step in report.node_products:
            assert abs(step[0] - 1.0) < 1e-6

    def test_no_escape_on_constant_path(self):
        signals = [solve_prony(MomentSequence([2, 0, 2, 0])) for _ in range(4)]
        report = escape_diagnostic(signals)
        assert not report.escape_detected
        assert max(report.max_node_magnitudes) <= 1.0 + 1e-9

    def test_no_escape_on_interior_path(self):
        # both endpoints and the whole path stay solvable with bounded nodes
        signals = []
        for t in np.linspace(0.0, 1.0, 5):
            f = SpikeSignal.simple([1.0, -1.0 + 0.5 * t], [1.0, 1.0])
            signals.append(solve_prony(prony_mapping(f, 4)))
        report = escape_diagnostic(signals)
        assert not report.escape_detected
        assert max(report.max_node_magnitudes) < 2.0

    def test_literal_degenerate_path_is_unsolvable(self):
        # the endpoint (1,1,1,2) has vanishing leading minor: solve must refuse
        with pytest.raises(Unsolvable):
            solve_prony(MomentSequence([1, 1, 1, 2]))

    def test_needs_three_points(self):
        f = solve_prony(MomentSequence([1, 2]))
        with pytest.raises(ValueError):
            escape_diagnostic([f, f])
