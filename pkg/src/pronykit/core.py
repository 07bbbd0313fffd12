"""Domain types and the forward half of the spike-train moment problem.

A spike train is a combination of point masses and their derivatives,

    F(x) = sum_j sum_{l=0..d_j-1} a_{j,l} delta^{(l)}(x - tau_j),

and its k-th moment under the sign-free convention used throughout this
package is

    m_k = sum_j sum_l a_{j,l} * k!/(k-l)! * tau_j^{k-l},

with the falling factorial k!/(k-l)! equal to 0 whenever l > k and with
0^0 = 1, so that a node at the origin contributes correctly.  The linear
part of the problem (coefficients from nodes) is governed by the confluent
Vandermonde matrix built from the same falling-factorial pattern.

All functions here are pure and all containers freeze their arrays after
construction, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularSystem

__all__ = [
    "SpikeSignal",
    "MomentSequence",
    "MultiplicityStructure",
    "multiplicity_structure",
    "prony_mapping",
    "moments_from_arrays",
    "confluent_vandermonde",
    "solve_coefficient_system",
    "falling_factorial",
    "moment_jacobian",
]


def _frozen_complex(values) -> np.ndarray:
    arr = np.array(values, dtype=complex).reshape(-1)
    arr.flags.writeable = False
    return arr


def falling_factorial(k, ell: int):
    """k * (k-1) * ... * (k-ell+1), i.e. k!/(k-ell)!, elementwise in k.

    Returns 0 where ell > k and 1 where ell == 0.  k may be an integer
    array; the result is a float array of the same shape.
    """
    k = np.asarray(k, dtype=float)
    out = np.ones_like(k)
    for i in range(ell):
        out = out * (k - i)
    return out


@dataclass(frozen=True)
class SpikeSignal:
    """Spike train with nodes, per-node multiplicities and coefficients.

    Parameters
    ----------
    nodes : sequence of complex
        Distinct spike positions tau_j.
    multiplicities : sequence of int
        d_j >= 1; node j carries derivatives of order 0 .. d_j - 1.
    coeffs : sequence of sequences of complex
        coeffs[j][l] = a_{j,l}, with the leading a_{j,d_j-1} nonzero.

    The empty signal (no nodes) is allowed and has all moments zero; it is
    the unique solution for the all-zero moment vector.
    """

    nodes: np.ndarray
    multiplicities: np.ndarray
    coeffs: tuple

    def __init__(self, nodes, multiplicities, coeffs):
        nodes = _frozen_complex(nodes)
        mult = np.array(multiplicities, dtype=int).reshape(-1)
        mult.flags.writeable = False
        coeffs = tuple(_frozen_complex(c) for c in coeffs)
        if not (len(nodes) == len(mult) == len(coeffs)):
            raise ValueError("nodes, multiplicities and coeffs must have equal length")
        if len(nodes) != len(set(nodes.tolist())):
            raise ValueError("nodes must be pairwise distinct")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be positive")
        for j, (dj, cj) in enumerate(zip(mult, coeffs)):
            if len(cj) != dj:
                raise ValueError(f"coeffs[{j}] must have length {dj}")
            if cj[-1] == 0:
                raise ValueError(f"leading coefficient a[{j},{dj - 1}] must be nonzero")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def order(self) -> int:
        """Total order d = sum of multiplicities."""
        return int(self.multiplicities.sum())

    @property
    def flat_coeffs(self) -> np.ndarray:
        """Coefficients flattened as (a_{1,0}, ..., a_{1,d_1-1}, a_{2,0}, ...)."""
        if not self.coeffs:
            return np.zeros(0, dtype=complex)
        return np.concatenate(self.coeffs)

    @classmethod
    def empty(cls) -> "SpikeSignal":
        return cls([], [], [])

    @classmethod
    def simple(cls, nodes, amplitudes) -> "SpikeSignal":
        """Signal with all multiplicities 1 (classical spike train)."""
        return cls(nodes, [1] * len(list(nodes)), [[a] for a in amplitudes])

    def sorted_by_nodes(self) -> "SpikeSignal":
        """Copy with nodes in lexicographic (re, im) order, for comparisons."""
        idx = sorted(range(self.num_nodes), key=lambda j: (self.nodes[j].real, self.nodes[j].imag))
        return SpikeSignal(
            [self.nodes[j] for j in idx],
            [self.multiplicities[j] for j in idx],
            [self.coeffs[j] for j in idx],
        )

    def to_json(self) -> dict:
        return {
            "nodes": [{"re": z.real, "im": z.imag} for z in self.nodes],
            "multiplicities": [int(m) for m in self.multiplicities],
            "coeffs": [[{"re": a.real, "im": a.imag} for a in cj] for cj in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SpikeSignal":
        nodes = [complex(z["re"], z["im"]) for z in obj["nodes"]]
        coeffs = [[complex(a["re"], a["im"]) for a in cj] for cj in obj["coeffs"]]
        return cls(nodes, obj["multiplicities"], coeffs)


@dataclass(frozen=True)
class MomentSequence:
    """Measured moments (m_0, ..., m_{n-1}) with optional per-entry noise bounds.

    The Prony problem of order d consumes 2d moments; consumers that need an
    even count (Hankel construction, classification) enforce it themselves.
    """

    values: np.ndarray
    noise_bounds: np.ndarray | None = None

    def __init__(self, values, noise_bounds=None):
        values = _frozen_complex(values)
        if len(values) < 1:
            raise ValueError("moment sequence must be nonempty")
        if noise_bounds is not None:
            noise_bounds = np.array(noise_bounds, dtype=float).reshape(-1)
            if len(noise_bounds) != len(values):
                raise ValueError("noise_bounds must match values in length")
            if np.any(noise_bounds < 0):
                raise ValueError("noise_bounds must be nonnegative")
            noise_bounds.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "noise_bounds", noise_bounds)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def order(self) -> int:
        """d for a length-2d sequence."""
        if len(self.values) % 2:
            raise ValueError("order is defined for even-length sequences only")
        return len(self.values) // 2

    def to_json(self) -> dict:
        return {
            "values": [{"re": m.real, "im": m.imag} for m in self.values],
            "noise_bounds": None if self.noise_bounds is None else [float(b) for b in self.noise_bounds],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MomentSequence":
        values = [complex(m["re"], m["im"]) for m in obj["values"]]
        return cls(values, obj.get("noise_bounds"))


@dataclass(frozen=True)
class MultiplicityStructure:
    """Distinct values of a node vector, in order of first appearance.

    T holds the s distinct representatives, D how many entries merged into
    each one; sum(D) equals the length of the source vector.
    """

    T: np.ndarray
    D: np.ndarray

    def __init__(self, T, D):
        T = _frozen_complex(T)
        D = np.array(D, dtype=int).reshape(-1)
        D.flags.writeable = False
        if len(T) != len(D):
            raise ValueError("T and D must have equal length")
        if np.any(D < 1):
            raise ValueError("D entries must be positive")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "D", D)

    @property
    def s(self) -> int:
        return len(self.T)

    @property
    def order(self) -> int:
        return int(self.D.sum())


def multiplicity_structure(w, collision_tol: float | None = None) -> MultiplicityStructure:
    """Group the entries of a node vector into distinct values with counts.

    Entries within ``collision_tol`` of an earlier representative merge into
    it; representatives keep their order of first appearance.  The default
    tolerance is relative, 1e-8 * (1 + max|w|); pass 0 for exact equality.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    if len(w) == 0:
        raise ValueError("node vector must be nonempty")
    if collision_tol is None:
        collision_tol = 1e-8 * (1.0 + float(np.max(np.abs(w))))
    if collision_tol < 0:
        raise ValueError("collision_tol must be nonnegative")
    reps: list[complex] = []
    counts: list[int] = []
    for x in w:
        for i, t in enumerate(reps):
            if abs(x - t) <= collision_tol:
                counts[i] += 1
                break
        else:
            reps.append(complex(x))
            counts.append(1)
    return MultiplicityStructure(reps, counts)


def moments_from_arrays(nodes, multiplicities, coeffs, num_moments: int) -> np.ndarray:
    """Forward moment formula on raw arrays, without SpikeSignal validation."""
    ks = np.arange(num_moments)
    m = np.zeros(num_moments, dtype=complex)
    for tau, dj, cj in zip(nodes, multiplicities, coeffs):
        for ell in range(dj):
            ff = falling_factorial(ks, ell)
            live = ks >= ell
            term = np.zeros(num_moments, dtype=complex)
            term[live] = cj[ell] * ff[live] * tau ** (ks[live] - ell)
            m += term
    return m


def prony_mapping(f: SpikeSignal, num_moments: int) -> MomentSequence:
    """Forward map: moments (m_0, ..., m_{num_moments-1}) of a spike signal.

    Implements m_k = sum_j sum_l a_{j,l} * k!/(k-l)! * tau_j^{k-l}; terms
    with l > k vanish with the falling factorial and 0^0 counts as 1.
    """
    if num_moments < 1:
        raise ValueError("num_moments must be >= 1")
    return MomentSequence(moments_from_arrays(f.nodes, f.multiplicities, f.coeffs, num_moments))


def confluent_vandermonde(T, D) -> np.ndarray:
    """d x d confluent Vandermonde matrix on distinct nodes T with multiplicities D.

    Row k concatenates, per node j, the block
    [x_j^k, k x_j^{k-1}, ..., k(k-1)...(k-d_j+2) x_j^{k-d_j+1}]; entries
    whose falling factorial vanishes are 0 even when the power is negative.
    """
    T = np.asarray(T, dtype=complex).reshape(-1)
    D = np.asarray(D, dtype=int).reshape(-1)
    if len(T) != len(D) or np.any(D < 1):
        raise ValueError("T and D must have equal length and positive D")
    if len(T) != len(set(T.tolist())):
        raise ValueError("confluent Vandermonde requires pairwise distinct nodes")
    d = int(D.sum())
    ks = np.arange(d)
    cols = []
    for tau, dj in zip(T, D):
        for ell in range(dj):
            ff = falling_factorial(ks, ell)
            col = np.zeros(d, dtype=complex)
            live = ks >= ell
            col[live] = ff[live] * tau ** (ks[live] - ell)
            cols.append(col)
    return np.column_stack(cols)


def solve_coefficient_system(T, D, first_moments) -> list[np.ndarray]:
    """Solve the linear part V(T, D) a = (m_0, ..., m_{d-1}) for the coefficients.

    Returns the per-node coefficient arrays (grouped like SpikeSignal.coeffs).
    Raises SingularSystem when T contains numerically repeated entries, the
    signal that the caller must merge nodes before solving.
    """
    T = np.asarray(T, dtype=complex).reshape(-1)
    D = np.asarray(D, dtype=int).reshape(-1)
    rhs = np.asarray(first_moments, dtype=complex).reshape(-1)
    d = int(D.sum())
    if len(rhs) != d:
        raise ValueError(f"need exactly d = {d} moments, got {len(rhs)}")
    scale = 1.0 + float(np.max(np.abs(T))) if len(T) else 1.0
    for i in range(len(T)):
        for j in range(i + 1, len(T)):
            if abs(T[i] - T[j]) <= 1e-14 * scale:
                raise SingularSystem(
                    f"nodes T[{i}] and T[{j}] coincide numerically; merge before solving"
                )
    V = confluent_vandermonde(T, D)
    try:
        flat = np.linalg.solve(V, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - distinctness checked above
        raise SingularSystem(str(exc)) from exc
    out = []
    pos = 0
    for dj in D:
        out.append(flat[pos : pos + dj])
        pos += dj
    return out


def moment_jacobian(T, D, coeffs, num_rows: int) -> np.ndarray:
    """Jacobian of the first ``num_rows`` moments w.r.t. (a_{j,0..d_j-1}, tau_j).

    Column blocks follow the node order; within a block the coefficient
    columns come first and the node column last, matching the product
    V(tau_1, d_1+1, ...) * blockdiag(E_j) factorization of the restricted
    moment map.
    """
    T = np.asarray(T, dtype=complex).reshape(-1)
    D = np.asarray(D, dtype=int).reshape(-1)
    ks = np.arange(num_rows)
    cols = []
    for tau, dj, cj in zip(T, D, coeffs):
        for ell in range(dj):
            ff = falling_factorial(ks, ell)
            col = np.zeros(num_rows, dtype=complex)
            live = ks >= ell
            col[live] = ff[live] * tau ** (ks[live] - ell)
            cols.append(col)
        dcol = np.zeros(num_rows, dtype=complex)
        for ell in range(dj):
            ff = falling_factorial(ks, ell + 1)
            live = ks >= ell + 1
            dcol[live] += cj[ell] * ff[live] * tau ** (ks[live] - ell - 1)
        cols.append(dcol)
    return np.column_stack(cols)
