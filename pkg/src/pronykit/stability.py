"""Explicit perturbation bounds for fixed-structure inversion, and their
Monte Carlo validation.

With the multiplicity structure held fixed, the map from the s0 + r0 free
parameters (nodes and coefficients) to the first s0 + r0 moments is
locally invertible; its Jacobian factors as the confluent Vandermonde on
multiplicities (d_j + 1) times a block-diagonal matrix whose j-th block is
the identity with last column (0, a_{j,0}, ..., a_{j,d_j-1}).  For moment
perturbations of sup-norm at most eps the parameter errors obey

    |dtau_j|  <= (2 / d_j!) (2/delta)^{s0+r0} (1 / |a_{j,d_j-1}|) eps
    |da_{j,l}| <= (2 / l!)  (2/delta)^{s0+r0} (1/2 + (s0+r0)/delta)^{d_j-l}
                  (1 + |a_{j,l-1}| / |a_{j,d_j-1}|) eps

with delta the minimal node separation and a_{j,-1} = 0.  Both bounds are
homogeneous of degree 1 in eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    SpikeSignal,
    confluent_vandermonde,
    moment_jacobian,
    moments_from_arrays,
    prony_mapping,
)
from .errors import DegenerateInput
from ._util import parallel_map

__all__ = [
    "StabilityBounds",
    "ValidationReport",
    "stability_bounds",
    "restricted_jacobian",
    "validate_bounds",
]


@dataclass(frozen=True)
class StabilityBounds:
    """Per-parameter perturbation bounds, with the inputs echoed back."""

    delta_tau: tuple  # per node
    delta_a: tuple  # per node, per derivative order
    epsilon: float
    delta: float
    s0: int
    r0: int

    def to_json(self) -> dict:
        return {
            "delta_tau": list(self.delta_tau),
            "delta_a": [list(row) for row in self.delta_a],
            "epsilon": self.epsilon,
            "delta": self.delta,
            "s0": self.s0,
            "r0": self.r0,
        }


def _min_separation(f: SpikeSignal) -> float:
    if f.num_nodes < 2:
        raise DegenerateInput(
            "node separation is undefined for single-node signals; bounds need s >= 2"
        )
    seps = [
        abs(f.nodes[i] - f.nodes[j])
        for i in range(f.num_nodes)
        for j in range(i + 1, f.num_nodes)
    ]
    return float(min(seps))


def stability_bounds(f: SpikeSignal, epsilon: float) -> StabilityBounds:
    """Evaluate the displayed bound formulas for a given signal and noise level."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    delta = _min_separation(f)
    if delta == 0:
        raise DegenerateInput("collided nodes: delta = 0")
    s0 = f.num_nodes
    r0 = f.order
    base = (2.0 / delta) ** (s0 + r0)
    inner = 0.5 + (s0 + r0) / delta
    d_tau = []
    d_a = []
    for dj, cj in zip(f.multiplicities, f.coeffs):
        top = abs(cj[-1])
        if top == 0:
            raise DegenerateInput("zero leading coefficient")
        d_tau.append(2.0 / math.factorial(int(dj)) * base / top * epsilon)
        row = []
        for ell in range(int(dj)):
            prev = abs(cj[ell - 1]) if ell >= 1 else 0.0  # a_{j,-1} = 0
            row.append(
                2.0
                / math.factorial(ell)
                * base
                * inner ** (int(dj) - ell)
                * (1.0 + prev / top)
                * epsilon
            )
        d_a.append(tuple(row))
    return StabilityBounds(tuple(d_tau), tuple(d_a), float(epsilon), delta, s0, r0)


def restricted_jacobian(f: SpikeSignal) -> np.ndarray:
    """Jacobian of the fixed-structure moment map, as the product
    V(tau_1, d_1+1, ..., tau_s, d_s+1) * blockdiag(E_j).

    E_j is the (d_j+1) x (d_j+1) identity with its last column replaced by
    (0, a_{j,0}, ..., a_{j,d_j-1}).  Parameter order per block:
    (a_{j,0}, ..., a_{j,d_j-1}, tau_j).  Nonsingular whenever the nodes are
    distinct and the leading coefficients nonzero.
    """
    if f.num_nodes == 0:
        raise DegenerateInput("empty signal has no Jacobian")
    scale = 1.0 + float(np.max(np.abs(f.nodes)))
    for i in range(f.num_nodes):
        for j in range(i + 1, f.num_nodes):
            if abs(f.nodes[i] - f.nodes[j]) <= 1e-14 * scale:
                raise DegenerateInput("collided nodes")
    n = f.num_nodes + f.order
    V = confluent_vandermonde(f.nodes, f.multiplicities + 1)
    E = np.zeros((n, n), dtype=complex)
    pos = 0
    for dj, cj in zip(f.multiplicities, f.coeffs):
        size = int(dj) + 1
        block = np.eye(size, dtype=complex)
        block[:, -1] = 0.0
        block[1:, -1] = cj
        E[pos : pos + size, pos : pos + size] = block
        pos += size
    return V @ E


@dataclass(frozen=True)
class ValidationReport:
    """Monte Carlo comparison of empirical errors against the bounds."""

    bounds: StabilityBounds
    max_delta_tau: tuple
    max_delta_a: tuple
    violations: int
    trials: int
    seed: int
    divergences: int

    def to_json(self) -> dict:
        return {
            "bounds": self.bounds.to_json(),
            "empirical": {
                "max_delta_tau": list(self.max_delta_tau),
                "max_delta_a": [list(row) for row in self.max_delta_a],
                "divergences": self.divergences,
            },
            "violations": self.violations,
            "trials": self.trials,
            "seed": self.seed,
        }


def _fixed_structure_resolve(f: SpikeSignal, noisy_moments: np.ndarray, max_iter: int = 50):
    """Newton-solve the square fixed-structure system, seeded at the truth.

    Returns (tau, coeffs) or None on divergence.
    """
    T = np.array(f.nodes, dtype=complex)
    D = f.multiplicities
    coeffs = [np.array(c, dtype=complex) for c in f.coeffs]
    n = len(noisy_moments)
    tol = 1e-14 * (1.0 + float(np.max(np.abs(noisy_moments))))
    for _ in range(max_iter):
        current = moments_from_arrays(T, D, coeffs, n)
        gap = noisy_moments - current
        if float(np.max(np.abs(gap))) <= tol:
            return T, coeffs
        J = moment_jacobian(T, D, coeffs, n)
        try:
            update = np.linalg.solve(J, gap)
        except np.linalg.LinAlgError:
            return None
        pos = 0
        for j, dj in enumerate(D):
            coeffs[j] = coeffs[j] + update[pos : pos + dj]
            pos += dj
            T[j] = T[j] + update[pos]
            pos += 1
        if not np.all(np.isfinite(T)) or float(np.max(np.abs(T))) > 1e6:
            return None
    return None


def validate_bounds(f: SpikeSignal, epsilon: float, trials: int, seed: int) -> ValidationReport:
    """Perturb the first s0 + r0 moments and compare re-solved parameters to the bounds.

    Noise is drawn independently per trial and per moment, uniform in the
    complex disk of radius epsilon (so the sup-norm assumption holds).  The
    re-solve keeps the multiplicity structure fixed and is seeded at the
    true parameters.  Divergent trials are counted, not raised.  Trials are
    independent and seeded individually, so results do not depend on
    execution order.
    """
    bounds = stability_bounds(f, epsilon)
    n = f.num_nodes + f.order
    mu0 = prony_mapping(f, n).values

    def run_trial(t: int):
        rng = np.random.default_rng([seed, t])
        radius = epsilon * np.sqrt(rng.uniform(0.0, 1.0, n))
        phase = rng.uniform(0.0, 2.0 * np.pi, n)
        noisy = mu0 + radius * np.exp(1j * phase)
        return _fixed_structure_resolve(f, noisy)

    results = parallel_map(run_trial, range(trials))
    max_tau = np.zeros(f.num_nodes)
    max_a = [np.zeros(int(dj)) for dj in f.multiplicities]
    divergences = 0
    for res in results:
        if res is None:
            divergences += 1
            continue
        T, coeffs = res
        for j in range(f.num_nodes):
            max_tau[j] = max(max_tau[j], abs(T[j] - f.nodes[j]))
            err = np.abs(coeffs[j] - f.coeffs[j])
            max_a[j] = np.maximum(max_a[j], err)
    violations = 0
    for j in range(f.num_nodes):
        if max_tau[j] > bounds.delta_tau[j]:
            violations += 1
        for ell in range(int(f.multiplicities[j])):
            if max_a[j][ell] > bounds.delta_a[j][ell]:
                violations += 1
    return ValidationReport(
        bounds,
        tuple(float(x) for x in max_tau),
        tuple(tuple(float(x) for x in row) for row in max_a),
        violations,
        trials,
        seed,
        divergences,
    )
