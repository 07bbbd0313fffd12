"""Finite-difference basis for well-posed inversion near node collisions.

For a node vector w = (x_1, ..., x_d), collisions allowed, the m-th basis
element Delta_m(w) is the distribution whose generating function is the
product prod_j (z - tau_{j,m})^{-d_{j,m}} over the distinct values of the
prefix (x_1, ..., x_m).  Its point-mass expansion comes from the partial
fraction decomposition of that product, computed here with analytic
residue formulas (derivatives of the co-factor product via the
logarithmic-derivative recurrence) so that accuracy survives near-collided
prefixes.

For pairwise distinct entries Delta_m acts on polynomials as the classical
divided difference on x_1, ..., x_m; as entries collide it degenerates
continuously into derivative point masses.  Expanding the unknown signal
in this basis keeps the recovered coefficients bounded where the standard
coefficients blow up like 1/h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MomentSequence,
    MultiplicityStructure,
    SpikeSignal,
    falling_factorial,
    multiplicity_structure,
)
from .errors import IllConditionedDDSystem, Unsolvable
from .solvability import DEFAULT_RANK_TOL, classify
from .solve import denominator_coefficients, polynomial_roots

__all__ = [
    "DividedDifferenceBasis",
    "DDSolution",
    "dd_basis",
    "dd_moments",
    "solve_prony_dd",
    "dd_to_standard",
]


@dataclass(frozen=True)
class PrefixExpansion:
    """Partial-fraction data of one prefix: structure (s_m, T, D) and the
    coefficients w[j][l-1] of (z - tau_j)^{-l} for l = 1..d_j."""

    structure: MultiplicityStructure
    coefficients: tuple

    def generating_value(self, z: complex) -> complex:
        """Evaluate sum_j sum_l w_{j,l} / (z - tau_j)^l at a point."""
        total = 0j
        for tau, wj in zip(self.structure.T, self.coefficients):
            for ell, w in enumerate(wj, start=1):
                total += w / (z - tau) ** ell
        return total


@dataclass(frozen=True)
class DividedDifferenceBasis:
    """The basis Delta_1(w), ..., Delta_d(w) as per-prefix expansions."""

    w: np.ndarray
    prefixes: tuple  # tuple[PrefixExpansion]

    @property
    def order(self) -> int:
        return len(self.w)


def _cofactor_derivatives(tau_j, others, orders_needed: int):
    """Derivatives g^{(0..orders_needed-1)}(tau_j) of g = prod (z - tau_i)^{-d_i}.

    Uses g' = h g with h = -sum d_i / (z - tau_i), whose own derivatives have
    the closed form h^{(k)}(t) = -sum d_i (-1)^k k! (t - tau_i)^{-k-1}.
    """
    g0 = 1.0 + 0j
    for tau_i, di in others:
        g0 = g0 / (tau_j - tau_i) ** di
    derivs = [g0]
    if orders_needed == 1:
        return derivs
    h = [
        -sum(di * (-1.0) ** k * math.factorial(k) / (tau_j - tau_i) ** (k + 1) for tau_i, di in others)
        for k in range(orders_needed)
    ]
    for n in range(orders_needed - 1):
        # g^{(n+1)} = (h g)^{(n)} = sum_k C(n,k) h^{(k)} g^{(n-k)}
        acc = 0j
        for k in range(n + 1):
            acc += math.comb(n, k) * h[k] * derivs[n - k]
        derivs.append(acc)
    return derivs


def _prefix_expansion(structure: MultiplicityStructure) -> PrefixExpansion:
    coeff_rows = []
    pairs = list(zip(structure.T, structure.D))
    for j, (tau_j, d_j) in enumerate(pairs):
        others = [p for i, p in enumerate(pairs) if i != j]
        derivs = _cofactor_derivatives(tau_j, others, d_j)
        # w_{j,l} = g^{(d_j - l)}(tau_j) / (d_j - l)!
        row = np.array(
            [derivs[d_j - ell] / math.factorial(d_j - ell) for ell in range(1, d_j + 1)],
            dtype=complex,
        )
        row.flags.writeable = False
        coeff_rows.append(row)
    return PrefixExpansion(structure, tuple(coeff_rows))


def dd_basis(w, collision_tol: float = 0.0) -> DividedDifferenceBasis:
    """Partial-fraction expansions of all prefix products of a node vector.

    collision_tol controls when prefix entries count as equal (0 = exact);
    approximate collisions may stay distinct, which is fine because the
    induced moments vary continuously.
    """
    w = np.array(w, dtype=complex).reshape(-1)
    if len(w) == 0:
        raise ValueError("node vector must be nonempty")
    prefixes = []
    for m in range(1, len(w) + 1):
        structure = multiplicity_structure(w[:m], collision_tol)
        prefixes.append(_prefix_expansion(structure))
    w.flags.writeable = False
    return DividedDifferenceBasis(w, tuple(prefixes))


def dd_moments(w, num_moments: int, collision_tol: float = 0.0) -> np.ndarray:
    """Moment matrix nu[k, m-1] of the basis elements, k = 0..num_moments-1.

    Delta_m = sum_j sum_l (w_{j,l}/(l-1)!) delta^{(l-1)}(x - tau_j), so its
    k-th moment under the package convention is
    sum_j sum_l w_{j,l}/(l-1)! * k!/(k-l+1)! * tau_j^{k-l+1}.
    """
    basis = w if isinstance(w, DividedDifferenceBasis) else dd_basis(w, collision_tol)
    d = basis.order
    ks = np.arange(num_moments)
    nu = np.zeros((num_moments, d), dtype=complex)
    for m, prefix in enumerate(basis.prefixes, start=1):
        col = np.zeros(num_moments, dtype=complex)
        for tau, wj in zip(prefix.structure.T, prefix.coefficients):
            for ell, wcoef in enumerate(wj, start=1):
                ff = falling_factorial(ks, ell - 1)
                live = ks >= ell - 1
                term = np.zeros(num_moments, dtype=complex)
                term[live] = (
                    wcoef / math.factorial(ell - 1) * ff[live] * tau ** (ks[live] - ell + 1)
                )
                col += term
        nu[:, m - 1] = col
    return nu


@dataclass(frozen=True)
class DDSolution:
    """Inversion result in the finite-difference basis: node vector w and
    coefficients beta with sum_m beta_m Delta_m(w) matching the moments."""

    w: np.ndarray
    beta: np.ndarray
    condition_number: float
    residual: float

    def to_json(self) -> dict:
        return {
            "w": [{"re": z.real, "im": z.imag} for z in self.w],
            "beta": [{"re": b.real, "im": b.imag} for b in self.beta],
            "condition_number": self.condition_number,
        }


def solve_prony_dd(
    mu: MomentSequence,
    rank_tol: float = DEFAULT_RANK_TOL,
    residual_tol: float = 1e-6,
    cond_limit: float = 1e14,
) -> DDSolution:
    """Invert a full-rank moment vector in the finite-difference basis.

    Requires the Hankel rank to equal the order d (interior of the top
    solvable stratum).  The node vector comes from the denominator roots
    with no clustering (collisions are representable); the d x d moment
    system on k = 0..d-1 then yields beta, and the remaining d moments act
    as a residual check.

    Raises Unsolvable when classification fails or the rank is below d, and
    IllConditionedDDSystem when the moment system is numerically singular.
    """
    d = mu.order
    report = classify(mu, rank_tol)
    if not report.solvable:
        raise Unsolvable(f"moment vector lies on stratum {report.stratum_label}", report=report)
    if report.rank != d:
        raise Unsolvable(
            f"finite-difference inversion needs full rank {d}, classified rank {report.rank}",
            report=report,
        )
    q = denominator_coefficients(mu, d)
    w = polynomial_roots(q)  # lexicographic (re, im) order fixes the prefix structure
    basis = dd_basis(w)
    nu = dd_moments(basis, 2 * d)
    square = nu[:d, :]
    cond = float(np.linalg.cond(square))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedDDSystem(
            f"finite-difference moment system condition number {cond:.3e}",
            condition_number=cond,
        )
    beta = np.linalg.solve(square, mu.values[:d])
    recon = nu @ beta
    scale = 1.0 + float(np.max(np.abs(mu.values)))
    residual = float(np.max(np.abs(recon - mu.values)) / scale)
    if residual > residual_tol:
        raise IllConditionedDDSystem(
            f"round-trip residual {residual:.3e} exceeds {residual_tol:.1e} "
            f"(condition number {cond:.3e})",
            condition_number=cond,
        )
    beta.flags.writeable = False
    return DDSolution(w, beta, cond, residual)


def dd_to_standard(sol: DDSolution, collision_tol: float = 0.0) -> SpikeSignal:
    """Expand sum_m beta_m Delta_m(w) in the standard point-mass basis.

    Exact linear change of basis; nodes whose coefficients come out exactly
    zero are dropped so the result satisfies the leading-coefficient
    invariant (e.g. beta = (c, 0) on distinct nodes is just one spike).
    """
    basis = dd_basis(sol.w, collision_tol)
    full = basis.prefixes[-1].structure
    index = {complex(tau): j for j, tau in enumerate(full.T)}
    acc = [np.zeros(dj, dtype=complex) for dj in full.D]
    for beta_m, prefix in zip(sol.beta, basis.prefixes):
        for tau, wj in zip(prefix.structure.T, prefix.coefficients):
            j = index[complex(tau)]
            for ell, wcoef in enumerate(wj, start=1):
                acc[j][ell - 1] += beta_m * wcoef / math.factorial(ell - 1)
    nodes, mults, coeffs = [], [], []
    for tau, cj in zip(full.T, acc):
        top = len(cj)
        while top > 0 and cj[top - 1] == 0:
            top -= 1
        if top == 0:
            continue
        nodes.append(tau)
        mults.append(top)
        coeffs.append(cj[:top])
    return SpikeSignal(nodes, mults, coeffs)
