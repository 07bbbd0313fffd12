"""Brute-force closed-form solver for orders 1 and 2, used as an
independent check of the general machinery.

All branch decisions (vanishing determinant, vanishing discriminant, exact
moment verification of rational candidates) run in exact rational
arithmetic via fractions.Fraction, so the oracle never misclassifies on
rational input.  Only irrational square roots fall back to floats, and
those candidates are guaranteed consistent by the algebra.  Real moment
vectors only.
"""

from __future__ import annotations

import cmath
from fractions import Fraction

import numpy as np

from .core import SpikeSignal

__all__ = ["oracle_prony_small"]


def _as_fractions(mu):
    out = []
    for v in mu:
        if isinstance(v, complex) or (hasattr(v, "imag") and getattr(v, "imag") != 0):
            raise TypeError("oracle handles real moment vectors only")
        out.append(Fraction(v) if not isinstance(v, Fraction) else v)
    return out


def _order_one(m0: Fraction, m1: Fraction, tail) -> SpikeSignal | None:
    if m0 == 0:
        return None
    x = m1 / m0
    power = x * x
    for mk in tail:
        if m0 * power != mk:
            return None
        power *= x
    return SpikeSignal.simple([float(x)], [float(m0)])


def oracle_prony_small(mu) -> SpikeSignal | None:
    """Closed-form solution of a length-2 or length-4 real moment vector.

    Returns the recovered signal, the empty signal for the all-zero vector,
    or None when the problem is algebraically inconsistent (unsolvable).
    """
    values = list(mu.values) if hasattr(mu, "values") else list(mu)
    m = _as_fractions(values)
    if len(m) == 2:
        if m[0] == 0:
            return SpikeSignal.empty() if m[1] == 0 else None
        return _order_one(m[0], m[1], [])
    if len(m) != 4:
        raise ValueError("oracle supports orders d <= 2 (2 or 4 moments)")
    m0, m1, m2, m3 = m
    if m0 == m1 == m2 == m3 == 0:
        return SpikeSignal.empty()
    det = m0 * m2 - m1 * m1
    if det == 0:
        # square minor singular: solvable only at order <= 1
        return _order_one(m0, m1, [m2, m3])
    # order 2: recurrence coefficients by Cramer on [[m0,m1],[m1,m2]] q = (m2,m3)
    q0 = (m2 * m2 - m1 * m3) / det
    q1 = (m0 * m3 - m1 * m2) / det
    disc = q1 * q1 + 4 * q0
    if disc == 0:
        x = q1 / 2
        a0 = m0
        a1 = m1 - m0 * x
        if a1 == 0:
            return None  # cannot happen when det != 0; kept as a guard
        if m2 != a0 * x * x + 2 * a1 * x or m3 != a0 * x**3 + 3 * a1 * x * x:
            return None
        return SpikeSignal([float(x)], [2], [[float(a0), float(a1)]])
    root = cmath.sqrt(complex(disc))
    x1 = (complex(q1) + root) / 2
    x2 = (complex(q1) - root) / 2
    a2 = (complex(m1) - complex(m0) * x1) / (x2 - x1)
    a1 = complex(m0) - a2
    scale = 1.0 + max(abs(complex(v)) for v in (m0, m1, m2, m3))
    for k, mk in ((2, m2), (3, m3)):
        recon = a1 * x1**k + a2 * x2**k
        if abs(recon - complex(mk)) > 1e-9 * scale:
            return None
    if a1 == 0 or a2 == 0:
        return None  # would contradict det != 0; kept as a guard
    return SpikeSignal.simple([x1, x2], [a1, a2])
