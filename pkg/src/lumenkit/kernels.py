"""Kernel families for the sampling-series operator and a numeric axiom checker.

Three families are provided:

* Jackson: ``J_k(x) = c_k * sinc(x / (2 k pi alpha))**(2k)`` with the
  normalization ``c_k = 1 / integral(sinc(u / (2 k pi alpha))**(2k) du)``
  computed once per spec by adaptive quadrature.
* de la Vallee Poussin: ``theta(x) = (2/pi) sin(x/2) sin(3x/2) / x**2``,
  continuous at 0 with value ``3/(2 pi)``.
* Wendland: compactly supported radial functions built from
  ``phi_{m,0}(r) = max(0, 1-r)**m`` by repeated integration
  ``phi_{m,k+1}(r) = integral_r^inf t phi_{m,k}(t) dt`` (evaluated exactly
  as polynomials on [0, 1]).

The sample lattice is the unit integer grid throughout, so the first two
families are exact partitions of unity; the raw Wendland family is not,
and the checker reports that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

JACKSON = "jackson"
VALLEE_POUSSIN = "vallee_poussin"
WENDLAND = "wendland"
FAMILIES = (JACKSON, VALLEE_POUSSIN, WENDLAND)

# Tail-mass target used when deriving default truncation windows.
TAIL_MASS = 1e-4


class KernelEvalError(Exception):
    """Raised when a kernel evaluation turns non-finite during verification."""


@lru_cache(maxsize=None)
def _sinc_power_integral(two_k: int) -> float:
    """integral over R of sinc(v)**two_k dv (numpy sinc convention).

    Piecewise adaptive quadrature between the integer zeros of sinc, plus
    a tail estimate: beyond the last interval the integrand oscillates as
    sin(pi v)**two_k / (pi v)**two_k, whose mean over a period is
    binom(two_k, two_k/2) / 4**(two_k/2) ... handled via the crude bound
    (pi v)**(-two_k) with the sin-power mean factor.
    """
    if two_k < 2 or two_k % 2:
        raise ValueError("even power >= 2 required")
    # choose the number of unit intervals from the tail bound
    # tail <= mean(sin^two_k) * pi^-two_k * n^(1-two_k) / (two_k - 1)
    mean_sin = math.comb(two_k, two_k // 2) / 4 ** (two_k // 2)
    n = 8
    while True:
        tail = mean_sin * math.pi ** (-two_k) * n ** (1 - two_k) / (two_k - 1)
        if tail < 1e-13 or n >= 4096:
            break
        n *= 2
    total = 0.0
    for j in range(n):
        val, _ = quad(lambda v: np.sinc(v) ** two_k, j, j + 1, limit=100)
        total += val
    return 2.0 * (total + tail)


def _jackson_norm(k: int, alpha: float) -> float:
    """Normalization constant c_k for the Jackson kernel of order k."""
    # substitute v = u / (2 k pi alpha): the integral factors into the
    # stretch times the universal sinc-power integral
    return 1.0 / (2.0 * k * math.pi * alpha * _sinc_power_integral(2 * k))


@lru_cache(maxsize=None)
def _wendland_poly(m: int, smoothness: int) -> tuple[float, ...]:
    """Coefficients (ascending) of phi_{m,k} on [0, 1], exact rationals."""
    if m < 0 or smoothness < 0:
        raise ValueError("wendland parameters must be non-negative")
    # phi_{m,0}(r) = (1-r)^m expanded in powers of r
    coeffs = [Fraction(math.comb(m, j)) * (-1) ** j for j in range(m + 1)]
    for _ in range(smoothness):
        # integrand t * phi(t): shift powers up by one
        shifted = [Fraction(0)] + coeffs
        # antiderivative Q of the integrand
        anti = [Fraction(0)] + [c / (j + 1) for j, c in enumerate(shifted)]
        q1 = sum(anti)  # Q(1)
        # phi_next(r) = Q(1) - Q(r)
        coeffs = [-c for c in anti]
        coeffs[0] += q1
    return tuple(float(c) for c in coeffs)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters; normalization is computed once here.

    ``k`` and ``alpha`` parameterize the Jackson family, ``m`` and
    ``smoothness`` the Wendland recursion. ``c`` is the Jackson
    normalization constant (1.0 for the other families).
    """

    family: str
    k: int = 12
    alpha: float = 1.0
    m: int = 2
    smoothness: int = 1
    c: float = field(default=0.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == JACKSON:
            if self.k < 1:
                raise ValueError("jackson order k must be a positive integer")
            if self.alpha < 1.0:
                raise ValueError("jackson stretch alpha must be >= 1")
            c = _jackson_norm(self.k, self.alpha)
            if not (c > 0.0 and math.isfinite(c)):
                raise ValueError("jackson normalization failed to evaluate")
            object.__setattr__(self, "c", c)
        else:
            if self.family == WENDLAND:
                _wendland_poly(self.m, self.smoothness)  # validates m, smoothness
            object.__setattr__(self, "c", 1.0)

    @classmethod
    def jackson(cls, k: int = 12, alpha: float = 1.0) -> "KernelSpec":
        return cls(family=JACKSON, k=k, alpha=alpha)

    @classmethod
    def vallee_poussin(cls) -> "KernelSpec":
        return cls(family=VALLEE_POUSSIN)

    @classmethod
    def wendland(cls, m: int = 2, smoothness: int = 1) -> "KernelSpec":
        return cls(family=WENDLAND, m=m, smoothness=smoothness)

    @property
    def separable(self) -> bool:
        """Whether the 2-D kernel factors into 1-D coordinate profiles."""
        return self.family in (JACKSON, VALLEE_POUSSIN)

    def default_truncation(self) -> int:
        """Lattice half-width keeping the discarded |kernel| mass below 1e-4.

        Jackson: three main-lobe widths, 3*ceil(2 k pi alpha). The de la
        Vallee Poussin profile decays only like x^-2, so the window is
        ~2/(pi * 1e-4). Wendland is supported in the unit ball.
        """
        if self.family == JACKSON:
            return 3 * math.ceil(2 * self.k * math.pi * self.alpha)
        if self.family == VALLEE_POUSSIN:
            return math.ceil(2.0 / (math.pi * TAIL_MASS))
        return 2


@dataclass(frozen=True)
class KernelAxiomReport:
    """Numeric estimates for the three kernel axioms on the unit lattice."""

    k2_max_deviation: float
    m0: float
    m_beta: float
    beta: float
    l1_norm: float
    bounded_near_zero: bool


def jackson_1d(x, spec: KernelSpec):
    """One-dimensional Jackson kernel c_k * sinc(x / (2 k pi alpha))**(2k)."""
    if spec.family != JACKSON:
        raise ValueError("spec is not a jackson kernel")
    x = np.asarray(x, dtype=np.float64)
    z = x / (2.0 * spec.k * math.pi * spec.alpha)
    s = np.sinc(z)
    # sinc vanishes exactly at nonzero integers; np.sinc leaves ~1e-16 noise
    s = np.where((z == np.round(z)) & (z != 0.0), 0.0, s)
    out = spec.c * s ** (2 * spec.k)
    return float(out) if out.ndim == 0 else out


def vallee_poussin_1d(x):
    """de la Vallee Poussin profile (2/pi) sin(x/2) sin(3x/2) / x**2."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    out = (2.0 / math.pi) * np.sin(safe / 2.0) * np.sin(3.0 * safe / 2.0) / safe**2
    # analytic limit at 0 (the formula is even, error O(x^2) near 0)
    out = np.where(small, 3.0 / (2.0 * math.pi), out)
    return float(out) if out.ndim == 0 else out


def wendland(r, m: int, smoothness: int):
    """Wendland radial profile phi_{m,smoothness}(r); zero for r > 1."""
    arr = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if np.any(arr < 0):
        raise ValueError("wendland radius must be non-negative")
    coeffs = _wendland_poly(m, smoothness)
    acc = np.zeros_like(arr)
    for c in reversed(coeffs):  # Horner on ascending coefficients
        acc = acc * arr + c
    # the profile is non-negative on [0, 1]; Horner noise near the boundary
    # root must not leak tiny negatives (or break the support cutoff)
    out = np.where(arr <= 1.0, np.maximum(acc, 0.0), 0.0)
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))


def kernel_1d(x, spec: KernelSpec):
    """1-D coordinate profile of a separable kernel."""
    if spec.family == JACKSON:
        return jackson_1d(x, spec)
    if spec.family == VALLEE_POUSSIN:
        return vallee_poussin_1d(x)
    raise ValueError(f"{spec.family} kernel has no separable 1-D profile")


def kernel_2d(point, spec: KernelSpec) -> float:
    """Bivariate kernel value: coordinate product for the separable
    families, radial profile of the euclidean norm for Wendland."""
    x, y = point
    if spec.family == WENDLAND:
        return float(wendland(math.hypot(x, y), spec.m, spec.smoothness))
    return float(kernel_1d(x, spec) * kernel_1d(y, spec))


def vallee_poussin_integral(radius: float = 2000.0) -> float:
    """Quadrature of the de la Vallee Poussin profile over [-radius, radius].

    Integrates piecewise on unit intervals (the integrand oscillates);
    the x^-2 tail puts the truncation error near 3/radius**2.
    """
    total, _ = quad(vallee_poussin_1d, 0.0, 1.0, limit=200)
    for j in range(1, int(radius)):
        val, _ = quad(vallee_poussin_1d, float(j), float(j + 1), limit=50)
        total += val
    return 2.0 * total


def _lattice_values_1d(spec: KernelSpec, probe: np.ndarray, truncation: int) -> np.ndarray:
    """Matrix of kernel values chi(u - t) for probe points u and integer t."""
    t = np.arange(-truncation, truncation + 1, dtype=np.float64)
    args = probe[:, None] - t[None, :]
    vals = kernel_1d(args, spec)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise KernelEvalError(
            f"non-finite kernel value at probe u={probe[bad[0]]!r}, lattice t={t[bad[1]]!r}"
        )
    return vals


def verify_kernel(
    spec: KernelSpec,
    beta: float = 1.0,
    probe_step: float = 0.01,
    probe_radius: float = 10.0,
    truncation: int = 200,
) -> KernelAxiomReport:
    """Numerically probe the kernel axioms on the unit lattice.

    Reports the worst deviation of the lattice sum from 1 (partition of
    unity), truncated estimates of the order-0 and order-beta absolute
    discrete moments, a numeric L1 norm, and boundedness near the origin.
    Separable families are probed through their 1-D profile (the product
    inherits the axioms factor-wise); Wendland is probed on the 2-D
    integer lattice.
    """
    probe = np.arange(0.0, probe_radius + probe_step / 2, probe_step)
    if spec.separable:
        vals = _lattice_values_1d(spec, probe, truncation)
        t = np.arange(-truncation, truncation + 1, dtype=np.float64)
        dist = np.abs(probe[:, None] - t[None, :])
        sums = vals.sum(axis=1)
        m0 = np.abs(vals).sum(axis=1).max()
        m_beta = (np.abs(vals) * dist**beta).sum(axis=1).max()
        l1, _ = quad(lambda u: abs(kernel_1d(u, spec)), 0, 1, limit=200)
        for j in range(1, truncation):
            seg, _ = quad(lambda u: abs(kernel_1d(u, spec)), j, j + 1, limit=50)
            l1 += seg
        l1 *= 2.0
        near_zero = np.max(np.abs(kernel_1d(np.linspace(-1, 1, 501), spec)))
    else:
        rad = min(truncation, 4)  # unit support: nearby lattice points only
        t = np.arange(-rad, rad + 1, dtype=np.float64)
        tx, ty = np.meshgrid(t, t, indexing="ij")
        grid = np.stack(np.meshgrid(probe, probe, indexing="ij"), axis=-1).reshape(-1, 2)
        dx = grid[:, 0:1] - tx.ravel()[None, :]
        dy = grid[:, 1:2] - ty.ravel()[None, :]
        r = np.hypot(dx, dy)
        vals = wendland(r, spec.m, spec.smoothness)
        if not np.all(np.isfinite(vals)):
            raise KernelEvalError("non-finite wendland value on the probe grid")
        sums = vals.sum(axis=1)
        m0 = np.abs(vals).sum(axis=1).max()
        m_beta = (np.abs(vals) * r**beta).sum(axis=1).max()
        # radial integral: 2 pi * integral_0^1 r |phi(r)| dr (phi >= 0)
        l1 = 2 * math.pi * quad(lambda r_: r_ * wendland(r_, spec.m, spec.smoothness), 0, 1)[0]
        near_zero = float(wendland(0.0, spec.m, spec.smoothness))
    return KernelAxiomReport(
        k2_max_deviation=float(np.abs(sums - 1.0).max()),
        m0=float(m0),
        m_beta=float(m_beta),
        beta=float(beta),
        l1_norm=float(l1),
        bounded_near_zero=bool(np.isfinite(near_zero)),
    )
