"""Reconstruction of piecewise-smooth periodic functions from Fourier data.

A function f on [-pi, pi) with K jump discontinuities and d continuous
derivatives between them splits as f = Phi + Psi: Phi is the piecewise
polynomial built from periodized Bernoulli polynomials that absorbs every
jump of f and its first d derivatives, and Psi is smooth with coefficients
decaying like R * k^{-d-2}.  Phi's coefficients have the closed form

    c_k(Phi) = (1/2pi) sum_j e^{-ik xi_j} sum_l (ik)^{-l-1} a_{l,j},  k != 0,

so for large k the measured c_k(f) are a perturbed exponential sum in
omega_j = e^{-i xi_j} and the jump parameters reduce to a spike-train
moment problem.  The pipeline here:

1. coarse jump locations from an order-0 exponential fit on the top
   coefficients;
2. per-jump localization by multiplying f with a C-infinity bump (flat at
   its support edges), done as a truncated coefficient convolution;
3. per-jump recovery, either from d1 + 2 consecutive top coefficients
   (half order) or from coefficients decimated along the arithmetic
   progression N, 2N, ..., (d+2)N with N = floor(M/(d+2)) (full order);
   both build a finite-difference elimination polynomial whose root is a
   power of omega;
4. assembly of the estimated model and a pointwise evaluator that sums the
   corrected Fourier series plus the estimated jump part.

All angles live on the circle: arithmetic is mod 2pi everywhere, so jumps
at +/-pi need no special casing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .core import MomentSequence
from .errors import (
    BranchAmbiguity,
    NoRootNearCircle,
    PronyFailure,
    ReconstructionError,
    ResidualTooLarge,
    RootFindingFailure,
    Unsolvable,
)
from .solve import denominator_coefficients, polynomial_roots

__all__ = [
    "PiecewiseModel",
    "SmoothPart",
    "FourierData",
    "JumpEstimate",
    "ReconstructionResult",
    "bernoulli_poly",
    "phi_eval",
    "phi_fourier",
    "synthesize_fourier",
    "prony_order0_jumps",
    "localize_jump",
    "halforder_single_jump",
    "decimated_polynomial",
    "fullorder_single_jump",
    "reconstruct",
    "circular_distance",
    "wrap_angle",
]

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Reduce an angle (or array) to [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi


def circular_distance(a, b):
    """Distance on the circle of circumference 2 pi."""
    gap = np.mod(np.asarray(a, dtype=float) - b, TWO_PI)
    return np.minimum(gap, TWO_PI - gap)


@lru_cache(maxsize=None)
def _bernoulli_coeffs(n: int) -> tuple:
    """Ascending coefficients of B_n, from B_0 = 1, B_n' = n B_{n-1} and
    the zero-mean normalization over [0, 1]."""
    if n == 0:
        return (1.0,)
    prev = _bernoulli_coeffs(n - 1)
    integ = [0.0] + [n * c / (k + 1) for k, c in enumerate(prev)]
    mean = sum(c / (k + 1) for k, c in enumerate(integ))
    integ[0] = -mean
    return tuple(integ)


def bernoulli_poly(n: int, x):
    """Bernoulli polynomial B_n evaluated at a scalar or array."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), _bernoulli_coeffs(n))


@dataclass(frozen=True)
class SmoothPart:
    """Real trigonometric series from its nonnegative-index coefficients.

    coeffs[k] = c_k for k = 0..len-1; c_{-k} = conj(c_k).  c_0 must be real
    up to roundoff.
    """

    coeffs: np.ndarray

    def __init__(self, coeffs):
        coeffs = np.array(coeffs, dtype=complex).reshape(-1)
        if len(coeffs) == 0:
            coeffs = np.zeros(1, dtype=complex)
        if abs(coeffs[0].imag) > 1e-9 * (1.0 + abs(coeffs[0])):
            raise ValueError("c_0 must be real for a real-valued series")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def coefficient(self, k: int) -> complex:
        k = int(k)
        if abs(k) >= len(self.coeffs):
            return 0j
        return complex(self.coeffs[k]) if k >= 0 else complex(np.conj(self.coeffs[-k]))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        ks = np.arange(1, len(self.coeffs))
        if len(ks) == 0:
            return np.full_like(x, self.coeffs[0].real)
        phases = np.exp(1j * np.multiply.outer(x, ks))
        return self.coeffs[0].real + 2.0 * np.real(phases @ self.coeffs[1:])


@dataclass(frozen=True)
class PiecewiseModel:
    """Piecewise-smooth model: jump positions, per-jump derivative-jump
    magnitudes a_{l,j} for l = 0..d, and an optional smooth residual.

    magnitudes is a (K, d+1) real matrix, row j for jump j; the zeroth
    column (the jump of the function itself) must be nonzero.
    """

    jumps: np.ndarray
    magnitudes: np.ndarray
    smooth: SmoothPart | None = None

    def __init__(self, jumps, magnitudes, smooth=None):
        jumps = np.array(jumps, dtype=float).reshape(-1)
        magnitudes = np.atleast_2d(np.array(magnitudes, dtype=float))
        if len(jumps) != magnitudes.shape[0]:
            raise ValueError("need one magnitude row per jump")
        if len(jumps) and np.any((jumps < -np.pi) | (jumps >= np.pi)):
            raise ValueError("jumps must lie in [-pi, pi)")
        for i in range(len(jumps)):
            for j in range(i + 1, len(jumps)):
                if circular_distance(jumps[i], jumps[j]) == 0:
                    raise ValueError("jump positions must be distinct")
        if len(jumps) and np.any(magnitudes[:, 0] == 0):
            raise ValueError("zeroth-order jump magnitudes must be nonzero")
        jumps.flags.writeable = False
        magnitudes.flags.writeable = False
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "magnitudes", magnitudes)
        object.__setattr__(self, "smooth", smooth)

    @property
    def num_jumps(self) -> int:
        return len(self.jumps)

    @property
    def degree(self) -> int:
        """Highest derivative order d carried by the jump magnitudes."""
        return self.magnitudes.shape[1] - 1

    def fourier(self, k: int) -> complex:
        """c_k(f) = c_k(Phi) + c_k(Psi); supports any integer k."""
        smooth = self.smooth.coefficient(k) if self.smooth is not None else 0j
        if k == 0 or self.num_jumps == 0:
            return smooth
        return complex(phi_fourier(self, k)) + smooth

    def evaluate(self, x):
        """Pointwise values; at a jump position the right limit is returned."""
        x = np.asarray(x, dtype=float)
        total = phi_eval(self, x)
        if self.smooth is not None:
            total = total + self.smooth.evaluate(x)
        return total

    def to_json(self) -> dict:
        return {
            "jumps": [float(v) for v in self.jumps],
            "magnitudes": [[float(v) for v in row] for row in self.magnitudes],
            "smooth": None
            if self.smooth is None
            else {"coeffs": [{"re": c.real, "im": c.imag} for c in self.smooth.coeffs]},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PiecewiseModel":
        smooth = None
        if obj.get("smooth") is not None:
            smooth = SmoothPart([complex(c["re"], c["im"]) for c in obj["smooth"]["coeffs"]])
        return cls(obj["jumps"], obj["magnitudes"], smooth)


def phi_eval(model: PiecewiseModel, x):
    """The jump-absorbing piecewise polynomial Phi at x (scalar or array).

    Phi = sum_j sum_l a_{l,j} V_l(x; xi_j) with
    V_n(x; xi) = -(2 pi)^n / (n+1)! * B_{n+1}((x - xi)/2 pi), each V_n
    periodized by reducing x - xi into [0, 2 pi).  Every V_n integrates to
    zero over a period, so c_0(Phi) = 0.
    """
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for xi, row in zip(model.jumps, model.magnitudes):
        u = np.mod(x - xi, TWO_PI) / TWO_PI
        for n, a in enumerate(row):
            if a == 0:
                continue
            scale = -(TWO_PI**n) / math.factorial(n + 1)
            total = total + a * scale * bernoulli_poly(n + 1, u)
    return total


def phi_fourier(model: PiecewiseModel, k):
    """Fourier coefficients of Phi at nonzero integer k (scalar or array)."""
    k_arr = np.asarray(k)
    if np.any(k_arr == 0):
        raise ValueError("k must be nonzero; c_0(Phi) = 0 by normalization")
    ik = 1j * k_arr.astype(complex)
    out = np.zeros_like(ik)
    for xi, row in zip(model.jumps, model.magnitudes):
        inner = np.zeros_like(ik)
        power = 1.0 / ik
        for a in row:
            inner = inner + a * power
            power = power / ik
        out = out + np.exp(-1j * k_arr * xi) * inner
    out = out / TWO_PI
    return out if out.shape else complex(out)


@dataclass(frozen=True)
class FourierData:
    """Measured coefficients c_0..c_{m_total} (negative indices by
    conjugation: the underlying function is real), with the reconstruction
    budget M and the smooth-part decay constant R."""

    coeffs: np.ndarray
    M: int
    R: float = 0.0

    def __init__(self, coeffs, M, R=0.0):
        coeffs = np.array(coeffs, dtype=complex).reshape(-1)
        if len(coeffs) < 2:
            raise ValueError("need at least c_0 and c_1")
        if not 1 <= M <= len(coeffs) - 1:
            raise ValueError("budget M must satisfy 1 <= M <= m_total")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "M", int(M))
        object.__setattr__(self, "R", float(R))

    @property
    def m_total(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> complex:
        k = int(k)
        if abs(k) > self.m_total:
            raise IndexError(f"coefficient {k} beyond m_total = {self.m_total}")
        return complex(self.coeffs[k]) if k >= 0 else complex(np.conj(self.coeffs[-k]))

    def to_json(self) -> dict:
        return {
            "coeffs": [{"re": c.real, "im": c.imag} for c in self.coeffs],
            "M": self.M,
            "R": self.R,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FourierData":
        return cls([complex(c["re"], c["im"]) for c in obj["coeffs"]], obj["M"], obj.get("R", 0.0))


def synthesize_fourier(
    model: PiecewiseModel,
    m_total: int,
    budget: int | None = None,
    noise_R: float | None = None,
    rng: np.random.Generator | None = None,
) -> FourierData:
    """Coefficients c_0..c_{m_total} of the model, optionally noised.

    With noise_R set, adds independent complex noise uniform in the disk of
    radius noise_R * k^{-d-2} to each k >= 1 coefficient (saturating the
    smooth-residual envelope).  The R field of the result is noise_R plus
    the envelope constant of the model's own smooth part.
    """
    if m_total < 1:
        raise ValueError("m_total must be >= 1")
    ks = np.arange(1, m_total + 1)
    coeffs = np.zeros(m_total + 1, dtype=complex)
    if model.num_jumps:
        coeffs[1:] = phi_fourier(model, ks)
    if model.smooth is not None:
        coeffs[0] = model.smooth.coefficient(0)
        top = min(m_total, len(model.smooth.coeffs) - 1)
        coeffs[1 : top + 1] += model.smooth.coeffs[1 : top + 1]
    d = model.degree
    r_eff = 0.0
    if model.smooth is not None and len(model.smooth.coeffs) > 1:
        decay = np.arange(1, len(model.smooth.coeffs)) ** (d + 2.0)
        r_eff = float(np.max(np.abs(model.smooth.coeffs[1:]) * decay))
    if noise_R is not None:
        if rng is None:
            raise ValueError("noise_R requires an rng for reproducibility")
        radius = noise_R * ks ** (-d - 2.0) * np.sqrt(rng.uniform(0.0, 1.0, m_total))
        phase = rng.uniform(0.0, TWO_PI, m_total)
        coeffs[1:] += radius * np.exp(1j * phase)
        r_eff += noise_R
    if budget is None:
        budget = max(1, m_total // 3)
    return FourierData(coeffs, budget, r_eff)


def prony_order0_jumps(data: FourierData, K: int) -> np.ndarray:
    """Coarse jump locations from an order-0 exponential fit.

    Treats 2 pi (ik) c_k ~ sum_j a_{0,j} omega_j^k on the 2K consecutive
    samples k = M-2K+1..M, solves the resulting spike problem with forced
    order K, and maps unit-circle projected nodes to angles.  First-order
    accurate in 1/M; raises PronyFailure when the underlying solve fails.
    """
    M = data.M
    if M - 2 * K + 1 < 1:
        raise PronyFailure(f"budget M = {M} too small for {K} jumps")
    ks = np.arange(M - 2 * K + 1, M + 1)
    samples = data.coeffs[ks[0] : M + 1]
    y = TWO_PI * 1j * ks * samples
    try:
        q = denominator_coefficients(MomentSequence(y), K)
        roots = polynomial_roots(q)
    except (Unsolvable, RootFindingFailure, np.linalg.LinAlgError) as exc:
        raise PronyFailure(f"order-0 jump detection failed: {exc}") from exc
    moduli = np.abs(roots)
    if np.any(moduli == 0):
        raise PronyFailure("order-0 jump detection produced a zero node")
    omegas = roots / moduli
    return wrap_angle(-np.angle(omegas))


def _smoothstep(t):
    """C-infinity ramp 0 -> 1 on [0, 1], flat to all orders at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        e0 = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        e1 = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return e0 / (e0 + e1)


@lru_cache(maxsize=8)
def _bump_coefficients(J: float, limit: int, grid: int = 1 << 16) -> np.ndarray:
    """Fourier coefficients c_{-limit}..c_{limit} of the centered bump.

    The bump is 1 on [-J/3, J/3], 0 outside [-J, J], glued with the
    flat-ended smoothstep.  It is C-infinity on the circle, so the uniform
    trapezoid sum (one FFT) is spectrally accurate.
    """
    if not 0 < J < np.pi:
        raise ValueError("bump half-width J must lie in (0, pi)")
    x = -np.pi + TWO_PI * np.arange(grid) / grid
    ax = np.abs(x)
    h = np.where(
        ax <= J / 3.0,
        1.0,
        np.where(ax >= J, 0.0, _smoothstep((J - ax) / (2.0 * J / 3.0))),
    )
    spectrum = np.fft.fft(h) / grid
    ks = np.arange(-limit, limit + 1)
    # sample grid starts at -pi, so each bin carries the phase e^{ik pi}
    out = spectrum[np.mod(ks, grid)] * np.exp(1j * np.pi * ks)
    out.flags.writeable = False
    return out


def localize_jump(data: FourierData, xi_est: float, J: float) -> FourierData:
    """Coefficients c_0..c_M of f * h, h a bump centered at xi_est.

    h is identically 1 on [xi_est - J/3, xi_est + J/3] and vanishes outside
    [xi_est - J, xi_est + J]; the product coefficients come from the
    discrete convolution c_k(f h) = sum_l c_l(f) c_{k-l}(h) truncated at
    |l| <= 3M.  Requires m_total >= 3M.
    """
    M = data.M
    if data.m_total < 3 * M:
        raise ValueError(f"localization needs 3M = {3 * M} coefficients, have {data.m_total}")
    three_m = 3 * M
    cf = np.concatenate([np.conj(data.coeffs[three_m:0:-1]), data.coeffs[: three_m + 1]])
    limit = 4 * M
    ch_centered = _bump_coefficients(float(J), limit)
    ms = np.arange(-limit, limit + 1)
    ch = ch_centered * np.exp(-1j * ms * xi_est)
    conv = fftconvolve(cf, ch)
    # conv index n corresponds to k = n - 3M - limit
    out = conv[three_m + limit : three_m + limit + M + 1]
    return FourierData(out, M, data.R)


@dataclass(frozen=True)
class JumpEstimate:
    """Recovered parameters of one jump plus solver diagnostics."""

    xi: float
    magnitudes: np.ndarray  # complex a_0..a_order estimates
    omega: complex
    root_residual: float
    root_modulus: float
    branch_index: int = 0

    def to_json(self) -> dict:
        return {
            "xi": self.xi,
            "magnitudes": [{"re": a.real, "im": a.imag} for a in self.magnitudes],
            "root_residual": self.root_residual,
            "root_modulus": self.root_modulus,
            "branch_index": self.branch_index,
        }


def _select_branch(root, n: int, prior_xi: float):
    """Angle among the n-th roots of ``root`` closest to the prior.

    Candidates are spaced 2 pi / n apart; BranchAmbiguity is raised when
    the prior sits farther than 0.4 * (2 pi / n) from every candidate, at
    which point it no longer discriminates between neighbors.
    """
    theta = float(np.angle(root))
    branches = np.arange(n)
    cand_xi = wrap_angle(-(theta + TWO_PI * branches) / n)
    dists = circular_distance(cand_xi, prior_xi)
    best = int(np.argmin(dists))
    if dists[best] > 0.4 * (TWO_PI / n):
        raise BranchAmbiguity(
            f"prior {prior_xi:.6f} is {dists[best]:.3e} from the nearest branch "
            f"(spacing {TWO_PI / n:.3e}); cannot choose",
            candidates=cand_xi.tolist(),
        )
    return float(cand_xi[best]), best


def _nearest_circle_root(poly_desc: np.ndarray):
    """Root of the polynomial closest to |z| = 1; ties favor the larger |p'|."""
    roots = np.roots(poly_desc)
    if len(roots) == 0:
        raise NoRootNearCircle("elimination polynomial has no roots")
    dist = np.abs(1.0 - np.abs(roots))
    best = np.min(dist)
    if best > 0.5:
        raise NoRootNearCircle(f"all roots at distance {best:.3f} > 0.5 from the unit circle")
    candidates = np.where(dist <= best + 1e-12)[0]
    if len(candidates) > 1:
        deriv = np.polyder(poly_desc)
        slopes = np.abs(np.polyval(deriv, roots[candidates]))
        choice = candidates[int(np.argmax(slopes))]
    else:
        choice = candidates[0]
    return roots[choice]


def _alphas_to_magnitudes(alphas: np.ndarray) -> np.ndarray:
    """Undo the scaling alpha_j = i^j a_{d-j} of the polynomial-in-k form."""
    d = len(alphas) - 1
    return np.array([alphas[d - ell] * (-1j) ** (d - ell) for ell in range(d + 1)])


def halforder_single_jump(
    data_j: FourierData,
    d1: int,
    M: int | None = None,
    spacing: int = 1,
    prior_xi: float | None = None,
) -> JumpEstimate:
    """Single-jump recovery from d1 + 2 top coefficients at a fixed spacing.

    Scales samples to m_k = 2 pi (ik)^{d1+1} c_k at k = M - j * spacing and
    forms the elimination polynomial
    p(u) = sum_{j=0}^{d1+1} (-1)^j C(d1+1, j) m_{M-j*spacing} u^j, whose
    root at u = omega^spacing follows from the order-(d1+1) finite
    difference annihilating degree-d1 polynomials.  With spacing 1 (the
    default) the root is omega itself and no prior is needed; d1 = 0 then
    reduces to the ratio omega = m_M / m_{M-1}.  A wider spacing raises the
    phase leverage of the window (the noise-driven location error scales as
    spacing^{-d1-1} relative to consecutive samples) at the price of a
    branch choice among the spacing-th roots, resolved against prior_xi
    exactly as in the decimated solver.  Magnitudes come from the
    polynomial-in-k system on the remaining d1 + 1 samples, solved in a
    window-centered basis for conditioning.
    """
    if M is None:
        M = data_j.M
    if d1 < 0:
        raise ValueError("d1 must be >= 0")
    if spacing < 1:
        raise ValueError("spacing must be >= 1")
    if spacing > 1 and prior_xi is None:
        raise ValueError("spacing > 1 needs prior_xi to resolve the root branch")
    if M - (d1 + 1) * spacing < 1:
        raise ValueError(f"budget M = {M} too small for order {d1} at spacing {spacing}")
    ks = M - spacing * np.arange(d1 + 1, -1, -1)
    c = data_j.coeffs[ks]
    m_scaled = TWO_PI * (1j * ks) ** (d1 + 1) * c
    js = np.arange(d1 + 2)
    signs = (-1.0) ** js
    binom = np.array([math.comb(d1 + 1, int(j)) for j in js], dtype=float)
    asc = signs * binom * m_scaled[::-1]  # coefficient of u^j is (-1)^j C m_{M-j*spacing}
    poly_desc = asc[::-1]
    root = _nearest_circle_root(poly_desc)
    scale = float(np.max(np.abs(poly_desc)))
    residual = float(abs(np.polyval(poly_desc, root)) / scale) if scale else 0.0
    branch = 0
    if spacing == 1:
        xi = float(wrap_angle(-np.angle(root)))
    else:
        xi, branch = _select_branch(root, spacing, prior_xi)
    omega = np.exp(-1j * xi)

    sample_ks = ks[:-1]
    rhs = m_scaled[:-1] * np.exp(1j * xi * sample_ks)
    k0 = sample_ks[0]
    offsets = (sample_ks - k0).astype(float)
    V = np.vander(offsets, d1 + 1, increasing=True).astype(complex)
    gamma = np.linalg.solve(V, rhs)
    alphas = np.zeros(d1 + 1, dtype=complex)
    for ell in range(d1 + 1):
        alphas[ell] = sum(
            gamma[t] * math.comb(t, ell) * (-float(k0)) ** (t - ell) for t in range(ell, d1 + 1)
        )
    mags = _alphas_to_magnitudes(alphas)
    return JumpEstimate(xi, mags, complex(omega), residual, float(abs(root)), branch)


def decimated_polynomial(measurements, d: int, N: int) -> np.ndarray:
    """Elimination polynomial of the decimated samples, descending coefficients.

    measurements are the d + 2 scaled values m_N, m_2N, ..., m_{(d+2)N}
    (with m_k = 2 pi (ik)^{d+1} c_k); the polynomial is
    q(u) = sum_{j=0}^{d+1} (-1)^j C(d+1, j) m_{(j+1)N} u^{d+1-j}, and
    u = omega^N is a root on exact single-jump data.
    """
    m = np.asarray(measurements, dtype=complex).reshape(-1)
    if len(m) != d + 2:
        raise ValueError(f"need exactly d + 2 = {d + 2} measurements, got {len(m)}")
    if N < 1:
        raise ValueError("N must be >= 1")
    js = np.arange(d + 2)
    coeffs = (-1.0) ** js * np.array([math.comb(d + 1, int(j)) for j in js]) * m
    return coeffs  # descending: u^{d+1} down to u^0


def fullorder_single_jump(
    data_j: FourierData,
    d: int,
    M: int | None = None,
    prior_xi: float | None = None,
    root_index: int | None = None,
) -> JumpEstimate:
    """Single-jump recovery at full order from decimated coefficients.

    Uses N = floor(M / (d+2)) and the samples k = N, 2N, ..., (d+2)N.  The
    root of the decimated elimination polynomial closest to the unit circle
    equals omega^N; among its N unit-circle roots the branch whose angle
    best matches ``prior_xi`` is selected.  BranchAmbiguity is raised when
    the prior sits farther than 0.4 * (2 pi / N) from every branch, since
    adjacent branches are 2 pi / N apart and the prior then no longer
    discriminates.  Magnitudes solve the decimated polynomial-in-k system
    (a Vandermonde on 1..d+1 after scaling by N).

    root_index overrides nearest-to-circle selection with an explicit root
    of the elimination polynomial (any root works on exact data).
    """
    if M is None:
        M = data_j.M
    if prior_xi is None:
        raise ValueError("full-order recovery needs a prior jump estimate")
    N = M // (d + 2)
    if N < 1:
        raise ValueError(f"budget M = {M} too small for order {d}")
    ks = N * np.arange(1, d + 3)
    c = data_j.coeffs[ks]
    m_scaled = TWO_PI * (1j * ks) ** (d + 1) * c
    q = decimated_polynomial(m_scaled, d, N)
    if root_index is None:
        z = _nearest_circle_root(q)
    else:
        roots = np.roots(q)
        z = roots[int(root_index) % len(roots)]
    scale = float(np.max(np.abs(q)))
    residual = float(abs(np.polyval(q, z)) / scale) if scale else 0.0
    xi, best = _select_branch(z, N, prior_xi)
    omega = np.exp(-1j * xi)

    rows = np.arange(1, d + 2)
    rhs = m_scaled[: d + 1] * np.exp(1j * xi * ks[: d + 1])
    V = np.vander(rows.astype(float), d + 1, increasing=True).astype(complex)
    beta = np.linalg.solve(V, rhs)
    alphas = beta / (float(N) ** np.arange(d + 1))
    mags = _alphas_to_magnitudes(alphas)
    return JumpEstimate(xi, mags, complex(omega), residual, float(abs(z)), best)


def _joint_refine(data: FourierData, estimates, d: int, M: int):
    """Coarse-to-fine Gauss-Newton fit of all jumps on the raw coefficients.

    Parameters are the real jump angles and real magnitudes of every jump;
    the fit runs in the scaled m_k = 2 pi (ik)^{d+1} c_k domain over
    windows whose top doubles from ~4(d+2) up to M, so each stage starts
    inside the phase basin left by the previous one.  Diverged stages fall
    back to the best seen parameters.  Returns (xi array, magnitude matrix).

    This joint fit is what the per-jump solvers cannot provide: with
    several jumps the localization window leaves an O(1)-smoothness
    residual floor, and one-jump-at-a-time peeling couples the per-jump
    errors with an O((d+2)^{d+1} A/B) constant, so iterating it from
    floor-level starting points need not contract.  Solving the coupled
    least-squares problem directly does.
    """
    K = len(estimates)
    xis = np.array([est.xi for est in estimates], dtype=float)
    mags = np.array([np.real(est.magnitudes) for est in estimates], dtype=float)
    n_par = K * (d + 2)

    def pack():
        return np.concatenate([[xis[j], *mags[j]] for j in range(K)])

    def unpack(p):
        x = np.empty(K)
        m = np.empty((K, d + 1))
        for j in range(K):
            x[j] = p[j * (d + 2)]
            m[j] = p[j * (d + 2) + 1 : (j + 1) * (d + 2)]
        return x, m

    def scaled_window(w_top):
        lo = max(1, w_top // 4)
        ks = np.arange(lo, w_top + 1)
        target = TWO_PI * (1j * ks) ** (d + 1) * data.coeffs[lo : w_top + 1]
        return ks, target

    def residual_norm(p, ks, target):
        x, m = unpack(p)
        total = np.zeros(len(ks), dtype=complex)
        ikpow = (1j * ks.astype(complex)) ** np.arange(d, -1, -1)[:, None]  # i^{d-l} k^{d-l}
        for j in range(K):
            poly = sum(m[j, l] * ikpow[l] for l in range(d + 1))
            total += np.exp(-1j * ks * x[j]) * poly
        return target - total

    p = pack()
    w_top = min(M, max(4 * (d + 2), 8))
    tops = []
    while w_top < M:
        tops.append(w_top)
        w_top *= 2
    tops.append(M)
    for w_top in tops:
        ks, target = scaled_window(w_top)
        kf = ks.astype(float)
        best = (float(np.linalg.norm(residual_norm(p, ks, target))), p.copy())
        for _ in range(4):
            x, m = unpack(p)
            cols = []
            r = target.copy()
            for j in range(K):
                phase = np.exp(-1j * kf * x[j])
                basis = [(1j * kf.astype(complex)) ** (d - l) for l in range(d + 1)]
                poly = sum(m[j, l] * basis[l] for l in range(d + 1))
                model_j = phase * poly
                r -= model_j
                cols.append(-1j * kf * model_j)  # d/d xi_j
                cols.extend(phase * basis[l] for l in range(d + 1))
            Jc = np.column_stack(cols)
            J = np.concatenate([Jc.real, Jc.imag], axis=0)
            rhs = np.concatenate([r.real, r.imag])
            norms = np.linalg.norm(J, axis=0)
            norms[norms == 0] = 1.0
            try:
                step, *_ = np.linalg.lstsq(J / norms, rhs, rcond=1e-13)
            except np.linalg.LinAlgError:
                break
            p_new = p + step / norms
            norm_new = float(np.linalg.norm(residual_norm(p_new, ks, target)))
            if not np.isfinite(norm_new):
                break
            if norm_new < best[0]:
                best = (norm_new, p_new.copy())
            p = p_new
        p = best[1]
    xis, mags = unpack(p)
    return wrap_angle(xis), mags


def _peeled_data(data: FourierData, xis, mags, skip: int, M: int) -> FourierData:
    """Raw coefficients minus the modeled contributions of all other jumps.

    Unlike bump localization this leaves no window residual: what remains
    of the other jumps scales with their model errors.
    """
    ks = np.arange(1, M + 1)
    coeffs = np.array(data.coeffs[: M + 1])
    for i in range(len(xis)):
        if i == skip:
            continue
        skeleton = PiecewiseModel([xis[i]], [mags[i]])
        coeffs[1:] -= phi_fourier(skeleton, ks)
    return FourierData(coeffs, M, data.R)


@dataclass(frozen=True)
class ReconstructionResult:
    """Estimated model, per-jump diagnostics, and the evaluator."""

    model: PiecewiseModel
    jump_estimates: tuple
    mode: str
    M: int

    def evaluate(self, x):
        return self.model.evaluate(x)


def reconstruct(
    data: FourierData,
    d: int,
    K: int,
    J: float,
    B: float | None = None,
    A: float | None = None,
    R: float | None = None,
    mode: str = "full",
) -> ReconstructionResult:
    """End-to-end reconstruction from 3M coefficients.

    mode="half" recovers each jump at order d1 = floor(d/2) from top-window
    samples; mode="full" first runs the half pipeline for a prior, then
    refines every jump at order d from decimated samples, and for K >= 2
    runs two peeling sweeps: each jump is re-solved on the raw coefficients
    with the other jumps' estimated contributions subtracted, which removes
    the localization window's residual floor.  The returned model carries
    the corrected smooth series (input coefficients minus the estimated
    jump contribution): its evaluate() implements the truncated corrected
    Fourier sum plus the estimated jump part.  In full mode the model is
    assembled from a final wide-window fit per jump (smaller constants in
    the high-order magnitudes, which otherwise dominate the corrected
    series' tail); jump_estimates reports the decimated-solver values.

    A, B, R are the a-priori model constants; they are accepted for
    interface completeness and recorded but not needed by the pipeline
    itself.  With K = 1 localization is skipped: there is no other jump to
    excise and any admissible bump would only add a smooth residual.

    Per-jump failures re-raise as ReconstructionError with the index
    attached.
    """
    if mode not in ("half", "full"):
        raise ValueError("mode must be 'half' or 'full'")
    M = data.M
    if data.m_total < 3 * M:
        raise ValueError(f"need 3M = {3 * M} coefficients, have {data.m_total}")
    xi0 = prony_order0_jumps(data, K)
    d1 = d // 2
    # Spacing at which the window's noise sensitivity matches the M^{-d1-2}
    # location bound; comes out 1 (consecutive samples) for odd d.
    gap = 2 * d1 - d + 1
    spacing = max(1, math.ceil(M ** (gap / (d1 + 1)))) if gap > 0 else 1
    estimates = []
    localized = []
    for j in range(K):
        try:
            if K == 1:
                loc = data
                half = halforder_single_jump(loc, d1, M, spacing=spacing, prior_xi=float(xi0[j]))
            else:
                # First pass centers the bump on the coarse location; its
                # O(1/M) error lets the neighboring jump bleed through the
                # taper edge, so localize again around the refined estimate
                # (the taper is flat to all orders at its edges, which makes
                # the leakage collapse with the centering error).
                loc = localize_jump(data, float(xi0[j]), J)
                half = halforder_single_jump(loc, d1, M, spacing=spacing, prior_xi=float(xi0[j]))
                loc = localize_jump(data, half.xi, J)
                half = halforder_single_jump(loc, d1, M, spacing=spacing, prior_xi=half.xi)
            localized.append(loc)
            if mode == "full":
                estimates.append(fullorder_single_jump(loc, d, M, prior_xi=half.xi))
            else:
                estimates.append(half)
        except (NoRootNearCircle, BranchAmbiguity, PronyFailure, RootFindingFailure,
                ResidualTooLarge, np.linalg.LinAlgError) as exc:
            raise ReconstructionError(j, exc) from exc

    if mode == "full":
        xis_r, mags_r = _joint_refine(data, estimates, d, M)
        if K >= 2:
            # Reported estimates: the decimated solver on raw data peeled
            # with the refined neighbor models, whose errors are now far
            # below the noise law and no longer couple across jumps.
            reported = []
            for j in range(K):
                try:
                    peeled = _peeled_data(data, xis_r, mags_r, j, M)
                    reported.append(
                        fullorder_single_jump(peeled, d, M, prior_xi=float(xis_r[j]))
                    )
                except (NoRootNearCircle, BranchAmbiguity, np.linalg.LinAlgError) as exc:
                    raise ReconstructionError(j, exc) from exc
            estimates = reported
        jumps = list(xis_r)
        mags = np.array(mags_r)
    else:
        jumps = [est.xi for est in estimates]
        mags = np.array([np.real(est.magnitudes) for est in estimates])
    skeleton = PiecewiseModel(jumps, mags)
    ks = np.arange(1, M + 1)
    corrected = np.zeros(M + 1, dtype=complex)
    corrected[0] = complex(data.coefficient(0).real, 0.0)
    corrected[1:] = data.coeffs[1 : M + 1] - phi_fourier(skeleton, ks)
    model = PiecewiseModel(jumps, mags, SmoothPart(corrected))
    return ReconstructionResult(model, tuple(estimates), mode, M)
