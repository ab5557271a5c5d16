"""Interpolating polynomials at integer nodes, kept in exact arithmetic."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath

from ..metricspace import DomainError

MP_DPS = 60


@dataclass
class InterpolatingPolynomial:
    """Newton-form interpolant through (node_i, value_i).

    Real data is held as ``Fraction``; complex data (DFT factors) as mpmath
    complex numbers at ``MP_DPS`` digits.  ``coefficients`` are the monomial
    coefficients c_0..c_d in the same arithmetic.
    """

    nodes: list
    values: list
    divided: list = field(repr=False, default=None)
    coefficients: list = field(repr=False, default=None)

    def __post_init__(self):
        if not self.nodes:
            raise DomainError("at least one node required")
        if len(set(self.nodes)) != len(self.nodes):
            raise DomainError("nodes must be distinct")
        if self.divided is None:
            self.divided = _divided_differences(self.nodes, self.values)
        if self.coefficients is None:
            self.coefficients = _newton_to_monomial(self.nodes, self.divided)

    @property
    def degree(self) -> int:
        d = len(self.coefficients) - 1
        while d > 0 and self.coefficients[d] == 0:
            d -= 1
        return d

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.values)

    def __call__(self, t):
        """Evaluate at t (exact for integer/Fraction t and rational data)."""
        acc = self.divided[-1]
        for i in range(len(self.nodes) - 2, -1, -1):
            acc = acc * (t - self.nodes[i]) + self.divided[i]
        return acc

    def to_complex(self, t) -> complex:
        v = self(t)
        if isinstance(v, Fraction):
            return complex(float(v))
        return complex(v)

    def table(self, ts: Sequence[int]) -> list:
        return [self(t) for t in ts]


def _divided_differences(nodes, values):
    coef = list(values)
    n = len(nodes)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (nodes[i] - nodes[i - j])
    return coef


def _newton_to_monomial(nodes, divided):
    zero = divided[0] * 0
    poly = [divided[-1]]
    for i in range(len(nodes) - 2, -1, -1):
        # poly <- poly * (t - nodes[i]) + divided[i]
        new = [zero] * (len(poly) + 1)
        for j, c in enumerate(poly):
            new[j + 1] += c
            new[j] -= c * nodes[i]
        new[0] += divided[i]
        poly = new
    return poly


def window_nodes(center: float, radius: float, clip: Optional[tuple] = None) -> list:
    lo, hi = center - radius, center + radius
    if clip is not None:
        lo, hi = max(lo, clip[0]), min(hi, clip[1])
    nodes = list(range(math.ceil(lo - 1e-12), math.floor(hi + 1e-12) + 1))
    if not nodes:
        raise DomainError(f"window [{lo}, {hi}] contains no integer")
    return nodes


def sign_interpolant(center: float, radius: float, clip: Optional[tuple] = None) -> InterpolatingPolynomial:
    """Polynomial through (t, (-1)^t) for the integers t in [center - radius,
    center + radius] (intersected with ``clip``)."""
    nodes = window_nodes(center, radius, clip)
    return interpolate(nodes, lambda t: Fraction((-1) ** (t % 2)))


def interpolate(nodes: Sequence[int], func: Callable) -> InterpolatingPolynomial:
    return InterpolatingPolynomial(list(nodes), [func(t) for t in nodes])


def phase_interpolant(s: int, nodes: Sequence[int]) -> InterpolatingPolynomial:
    """Polynomial through (t, e(2^-s t)) in extended precision."""
    with mpmath.workdps(MP_DPS):
        vals = [mpmath.expjpi(mpmath.mpf(2 * t) / 2 ** s) for t in nodes]
        return InterpolatingPolynomial(list(nodes), vals)


def complex_table(poly: InterpolatingPolynomial, ts: Sequence[int]) -> list:
    """Values at ``ts`` evaluated at full working precision, then rounded."""
    with mpmath.workdps(MP_DPS):
        return [poly.to_complex(t) for t in ts]


def polynomial_from_coefficients(coeffs: Sequence) -> InterpolatingPolynomial:
    """Wrap monomial coefficients c_0..c_d as an interpolant through d+1 nodes."""
    coeffs = [Fraction(c) for c in coeffs]
    nodes = list(range(len(coeffs)))

    def f(t):
        return sum(c * t ** i for i, c in enumerate(coeffs))

    return interpolate(nodes, f)
