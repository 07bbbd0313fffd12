"""Global inversion: from 2d moments back to the spike signal.

The route is the classical one: solve the r x r Hankel system for the
monic denominator Q(z) = z^r - q_{r-1} z^{r-1} - ... - q_0 (equivalently,
the recurrence m_{k+r} = sum_i q_i m_{k+i}), extract its roots, cluster
them into distinct nodes with multiplicities, and solve the confluent
linear system for the coefficients.  The recovered signal is validated by
a round-trip through the forward map; on failure the solver coarsens the
clustering and, as a last resort, escalates the detected rank, since float
rank detection can under-report near collisions.

stieltjes_taylor provides an independent second route to the moments: it
assembles the rational generating function P(z)/Q(z) of the signal by
polynomial arithmetic and expands it at infinity by power-series division.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    MomentSequence,
    SpikeSignal,
    moment_jacobian,
    moments_from_arrays,
    prony_mapping,
    solve_coefficient_system,
)
from .errors import ResidualTooLarge, RootFindingFailure, SingularSystem, Unsolvable
from .solvability import DEFAULT_RANK_TOL, build_hankel, classify

__all__ = [
    "RationalSolution",
    "solve_prony",
    "polynomial_roots",
    "stieltjes_taylor",
    "rational_from_signal",
    "denominator_coefficients",
]


@dataclass(frozen=True)
class RationalSolution:
    """Rational generating function P(z)/Q(z) of a spike signal.

    numerator and denominator are coefficient arrays in descending powers
    (denominator monic, deg P < deg Q); poles lists (pole, multiplicity)
    pairs matching the recovered nodes.
    """

    numerator: np.ndarray
    denominator: np.ndarray
    poles: tuple

    @property
    def degree(self) -> int:
        return len(self.denominator) - 1


def rational_from_signal(f: SpikeSignal) -> RationalSolution:
    """Assemble P(z)/Q(z) with Q = prod (z - tau_j)^{d_j} by polynomial arithmetic.

    Each term a_{j,l} contributes l! * a_{j,l} * (z - tau_j)^{d_j-l-1} times
    the co-factor product to the numerator.
    """
    q = np.array([1.0 + 0j])
    for tau, dj in zip(f.nodes, f.multiplicities):
        for _ in range(dj):
            q = np.convolve(q, [1.0, -tau])
    d = f.order
    p = np.zeros(max(d, 1), dtype=complex)
    for j, (tau, dj, cj) in enumerate(zip(f.nodes, f.multiplicities, f.coeffs)):
        cofactor = np.array([1.0 + 0j])
        for i, (tau_i, di) in enumerate(zip(f.nodes, f.multiplicities)):
            if i == j:
                continue
            for _ in range(di):
                cofactor = np.convolve(cofactor, [1.0, -tau_i])
        for ell in range(dj):
            term = cofactor
            for _ in range(dj - ell - 1):
                term = np.convolve(term, [1.0, -tau])
            term = float(math.factorial(ell)) * cj[ell] * term
            p[-len(term):] += term
    return RationalSolution(p, q, tuple(zip(f.nodes.tolist(), f.multiplicities.tolist())))


def stieltjes_taylor(f: SpikeSignal, n: int) -> np.ndarray:
    """First n Taylor coefficients at infinity of the signal's generating function.

    Expands R(z) = P(z)/Q(z) as sum_k m_k z^{-k-1} by power-series division;
    by construction of R this must reproduce prony_mapping(f, n), which makes
    the pair a cross-check of both code paths.
    """
    if f.num_nodes == 0:
        return np.zeros(n, dtype=complex)
    rat = rational_from_signal(f)
    d = rat.degree
    # p in ascending order, padded to length d; q ascending without the monic head.
    p_asc = rat.numerator[::-1]
    p = np.zeros(d, dtype=complex)
    p[: len(p_asc)] = p_asc
    q_asc = rat.denominator[::-1][:-1]
    m = np.zeros(n, dtype=complex)
    for t in range(n):
        acc = p[d - 1 - t] if t < d else 0.0
        for j in range(d):
            back = t - (d - j)
            if back >= 0:
                acc = acc - q_asc[j] * m[back]
        m[t] = acc
    return m


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots (with multiplicity) of a monic polynomial, descending coefficients.

    Companion-matrix eigenvalues with one Newton polish per root; the polish
    is skipped where the derivative nearly vanishes (multiple roots).  Roots
    come back sorted lexicographically by (re, im).
    """
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
    if len(coeffs) < 2:
        raise ValueError("polynomial must have degree >= 1")
    if coeffs[0] != 1:
        raise ValueError("polynomial must be monic")
    try:
        roots = np.roots(coeffs)
    except np.linalg.LinAlgError as exc:
        raise RootFindingFailure(f"companion eigenvalue iteration failed: {exc}") from exc
    deriv = np.polyder(coeffs)
    scale = float(np.max(np.abs(coeffs)))
    polished = []
    for z in roots:
        pz = np.polyval(coeffs, z)
        dz = np.polyval(deriv, z)
        if abs(dz) > 1e-8 * max(1.0, abs(pz)):
            step = pz / dz
            if abs(step) < 1.0:  # reject wild steps near multiple roots
                z = z - step
        polished.append(z)
    roots = np.array(polished)
    residuals = np.abs(np.polyval(coeffs, roots))
    if scale > 0 and np.any(residuals > 1e-6 * scale):
        raise RootFindingFailure(
            f"root residual {residuals.max():.3e} above 1e-6 * max|coeff| = {1e-6 * scale:.3e}"
        )
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def denominator_coefficients(mu: MomentSequence, rank: int) -> np.ndarray:
    """Monic denominator of the rank-r recurrence, descending coefficients.

    Solves M_r q = (m_r, ..., m_{2r-1}) and returns
    [1, -q_{r-1}, ..., -q_0], i.e. Q(z) = z^r - sum_i q_i z^i.
    """
    pencil = build_hankel(mu)
    values = mu.values
    M = pencil.square_minor(rank)
    rhs = values[rank : 2 * rank]
    try:
        q = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise Unsolvable(f"leading {rank}x{rank} Hankel minor is singular") from exc
    return np.concatenate(([1.0 + 0j], -q[::-1]))


def _cluster_roots(roots: np.ndarray, cluster_tol: float):
    """Greedy clustering of lexicographically sorted roots; returns (T, D)."""
    reps: list[list[complex]] = []
    for z in roots:
        for group in reps:
            center = sum(group) / len(group)
            if abs(z - center) <= cluster_tol:
                group.append(z)
                break
        else:
            reps.append([z])
    T = [sum(g) / len(g) for g in reps]
    D = [len(g) for g in reps]
    return T, D


def _signal_from_structure(T, D, mu_values):
    d = int(np.sum(D))
    coeffs = solve_coefficient_system(T, D, mu_values[:d])
    keep_nodes, keep_mult, keep_coeffs = [], [], []
    for tau, dj, cj in zip(T, D, coeffs):
        # trim exactly-zero trailing coefficients so the invariant a_{j,dj-1} != 0 holds
        top = dj
        while top > 0 and cj[top - 1] == 0:
            top -= 1
        if top == 0:
            continue
        keep_nodes.append(tau)
        keep_mult.append(top)
        keep_coeffs.append(cj[:top])
    return SpikeSignal(keep_nodes, keep_mult, keep_coeffs)


def _moment_residual(f: SpikeSignal, mu: MomentSequence) -> float:
    recon = prony_mapping(f, len(mu)).values if f.num_nodes else np.zeros(len(mu), dtype=complex)
    scale = 1.0 + float(np.max(np.abs(mu.values)))
    return float(np.max(np.abs(recon - mu.values)) / scale)


def _refine(f: SpikeSignal, mu: MomentSequence, iterations: int = 3) -> SpikeSignal:
    """Gauss-Newton polish of (nodes, coefficients) on all available moments."""
    T = np.array(f.nodes, dtype=complex)
    D = f.multiplicities
    coeffs = [np.array(c, dtype=complex) for c in f.coeffs]
    n = len(mu)
    target = mu.values
    for _ in range(iterations):
        current = moments_from_arrays(T, D, coeffs, n)
        J = moment_jacobian(T, D, coeffs, n)
        update, *_ = np.linalg.lstsq(J, target - current, rcond=None)
        pos = 0
        for j, dj in enumerate(D):
            coeffs[j] = coeffs[j] + update[pos : pos + dj]
            pos += dj
            T[j] = T[j] + update[pos]
            pos += 1
    try:
        return SpikeSignal(T, D, coeffs)
    except ValueError:
        return f


def solve_prony(
    mu: MomentSequence,
    rank_tol: float = DEFAULT_RANK_TOL,
    cluster_tol: float | None = None,
    residual_tol: float = 1e-6,
    force_rank: int | None = None,
    refine: bool = True,
) -> SpikeSignal:
    """Invert the moment map: recover nodes, multiplicities and coefficients.

    Parameters
    ----------
    mu : MomentSequence
        2d moments.
    rank_tol : float
        Relative singular-value threshold for rank detection.
    cluster_tol : float, optional
        Root clustering tolerance; default 1e-6 * (1 + max|root|).  A x10
        ladder of coarser tolerances is tried when the round-trip residual
        exceeds ``residual_tol``.
    residual_tol : float
        Relative round-trip tolerance on all 2d moments.
    force_rank : int, optional
        Bypass rank detection (useful with noisy data).
    refine : bool
        Apply a short Gauss-Newton polish on all 2d moment equations.

    Raises
    ------
    Unsolvable
        classify reports an unsolvable stratum.
    ResidualTooLarge
        No clustering reproduces the input moments.
    """
    d = mu.order
    if force_rank is None:
        report = classify(mu, rank_tol)
        if not report.solvable:
            raise Unsolvable(
                f"moment vector lies on stratum {report.stratum_label}", report=report
            )
        rank = report.rank
    else:
        rank = force_rank
    if rank == 0:
        return SpikeSignal.empty()

    best: tuple[float, SpikeSignal] | None = None
    for r in range(rank, d + 1):
        try:
            q = denominator_coefficients(mu, r)
            roots = polynomial_roots(q)
        except (Unsolvable, RootFindingFailure):
            if r == rank and force_rank is not None:
                raise
            continue
        base_tol = cluster_tol
        if base_tol is None:
            base_tol = 1e-6 * (1.0 + float(np.max(np.abs(roots))))
        for widen in range(5):
            tol = base_tol * 10.0**widen
            T, D = _cluster_roots(roots, tol)
            try:
                candidate = _signal_from_structure(T, D, mu.values)
            except (SingularSystem, np.linalg.LinAlgError):
                continue
            if refine and candidate.num_nodes:
                candidate = _refine(candidate, mu)
            res = _moment_residual(candidate, mu)
            if best is None or res < best[0]:
                best = (res, candidate)
            if res <= residual_tol:
                return candidate
        if force_rank is not None:
            break
    if best is None:
        raise ResidualTooLarge("no clustering produced a solvable coefficient system")
    raise ResidualTooLarge(
        f"round-trip moment residual {best[0]:.3e} exceeds {residual_tol:.1e}",
        residual=best[0],
    )
