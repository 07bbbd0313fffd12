"""Hankel pencil construction and solvability classification.

A length-2d moment vector is arranged into the d x (d+1) Hankel matrix
M (constant along anti-diagonals).  With r the numerical rank of M, the
moment problem is solvable exactly when the leading r x r minor is
nonvanishing; the solvable stratum of rank r is tagged sigma_r and the
unsolvable one sigma_prime_r.  Near the unsolvable strata at least one
recovered node runs off to infinity, which escape_diagnostic detects on a
sequence of solutions along a moment path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MomentSequence, SpikeSignal

__all__ = [
    "HankelPencil",
    "SolvabilityReport",
    "EscapeReport",
    "build_hankel",
    "classify",
    "escape_diagnostic",
]

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class HankelPencil:
    """The d x (d+1) Hankel matrix of a length-2d moment vector."""

    full: np.ndarray

    @property
    def order(self) -> int:
        return self.full.shape[0]

    def square_minor(self, e: int) -> np.ndarray:
        """Top-left e x e block M_e, 1 <= e <= d."""
        if not 1 <= e <= self.order:
            raise ValueError(f"minor size must be in 1..{self.order}")
        return self.full[:e, :e]


@dataclass(frozen=True)
class SolvabilityReport:
    """Classification of a moment vector: rank, stratum and leading minor size."""

    rank: int
    solvable: bool
    stratum: str  # "sigma_r" | "sigma_prime_r"
    leading_minor_magnitude: float

    @property
    def stratum_label(self) -> str:
        base = "sigma'" if self.stratum == "sigma_prime_r" else "sigma"
        return f"{base}_{self.rank}"

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "solvable": self.solvable,
            "stratum": self.stratum,
            "leading_minor": self.leading_minor_magnitude,
        }


def build_hankel(mu: MomentSequence) -> HankelPencil:
    """Arrange (m_0, ..., m_{2d-1}) into the d x (d+1) matrix with (i, j) entry m_{i+j}."""
    values = mu.values
    if len(values) % 2:
        raise ValueError("moment sequence must have even length")
    d = len(values) // 2
    i, j = np.indices((d, d + 1))
    full = values[i + j]
    full.flags.writeable = False
    return HankelPencil(full)


def classify(mu: MomentSequence, rank_tol: float = DEFAULT_RANK_TOL) -> SolvabilityReport:
    """Numerical rank and solvability of a length-2d moment vector.

    The rank r counts singular values above rank_tol * sigma_max.  The
    solvability test compares |det M_r| against rank_tol times the product
    of the r leading singular values (a relative minor test).  The all-zero
    vector classifies as rank 0, solvable, the empty signal.
    """
    pencil = build_hankel(mu)
    sigma = np.linalg.svd(pencil.full, compute_uv=False)
    if sigma[0] == 0.0:
        return SolvabilityReport(0, True, "sigma_r", 1.0)
    rank = int(np.count_nonzero(sigma > rank_tol * sigma[0]))
    if rank == 0:
        return SolvabilityReport(0, True, "sigma_r", 1.0)
    minor = abs(np.linalg.det(pencil.square_minor(rank)))
    scale = float(np.prod(sigma[:rank]))
    solvable = bool(minor > rank_tol * scale)
    stratum = "sigma_r" if solvable else "sigma_prime_r"
    return SolvabilityReport(rank, solvable, stratum, float(minor))


@dataclass(frozen=True)
class EscapeReport:
    """Diagnostic for node escape along a moment path.

    max_node_magnitudes holds max_j |x_j| per step; node_products holds, per
    step and node, |a_{j,0} * x_j^{2d-1}| (the quantity that stays bounded
    away from zero when a node escapes toward an unsolvable limit).
    """

    max_node_magnitudes: list
    node_products: list
    escape_detected: bool

    def to_json(self) -> dict:
        return {
            "max_node_magnitudes": self.max_node_magnitudes,
            "node_products": self.node_products,
            "escape_detected": self.escape_detected,
        }


def escape_diagnostic(signals: list[SpikeSignal], threshold: float = 1e3) -> EscapeReport:
    """Detect a node escaping to infinity along a path of solved signals.

    Escape is reported when the per-step maximum node magnitude is strictly
    increasing and its final value exceeds ``threshold``.  Purely
    diagnostic: the criterion approximates an asymptotic statement.
    """
    if len(signals) < 3:
        raise ValueError("need at least 3 solutions along the path")
    max_mags = []
    products = []
    for f in signals:
        if f.num_nodes == 0:
            max_mags.append(0.0)
            products.append([])
            continue
        two_d = 2 * f.order
        max_mags.append(float(np.max(np.abs(f.nodes))))
        products.append(
            [float(abs(cj[0]) * abs(tau) ** (two_d - 1)) for tau, cj in zip(f.nodes, f.coeffs)]
        )
    increasing = all(b > a for a, b in zip(max_mags, max_mags[1:]))
    escape = bool(increasing and max_mags[-1] > threshold)
    return EscapeReport(max_mags, products, escape)
