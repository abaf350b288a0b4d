"""Commutator kernels of the massless vacuum two-point function.

For n = 1 and n = 3 the antisymmetric part W^- and its mixed time derivative
are supported on (or bounded by) the light cone and are returned as
:class:`DistributionalKernel` objects: finite sums of Heaviside steps and
delta derivatives in the time difference at fixed spatial distance r.  They
are never sampled pointwise; they are integrated against Gaussians through
:func:`smeared_delta_derivative`.  For n = 2 the kernels are ordinary
functions off the cone and are evaluated pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import special

from .core import Coupling, PairConfig
from .errors import FaddeevaOverflow, OnLightCone, UnsupportedDimension, UnsupportedOrder
from .quad import QuadratureSpec, integrate_semi_infinite, uv_cutoff

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)

# relative width of the band around the light cone where n=2 kernels are
# only available through the smeared omega-integral
LIGHT_CONE_BAND = 1e-6


def faddeeva(z):
    """w(z) = exp(-z^2) erfc(-i z), vectorized.

    Raises :class:`FaddeevaOverflow` when the value is not representable,
    which happens deep in the lower half plane.
    """
    w = special.wofz(np.asarray(z, dtype=complex))
    if not np.all(np.isfinite(w)):
        raise FaddeevaOverflow(f"w(z) overflows for some z (Im z too negative)")
    return w if np.ndim(w) else complex(w)


def bessel_j0(x):
    """Bessel function of the first kind of order zero."""
    out = special.j0(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def angular_factor(dim: int, u):
    """Angular average of exp(i k.x) over directions, as a function of u = k|x|.

    cos(u) for n=1, J0(u) for n=2 and sin(u)/u for n=3; equal to 1 at u=0.
    """
    u = np.asarray(u, dtype=float)
    if dim == 1:
        out = np.cos(u)
    elif dim == 2:
        out = special.j0(u)
    elif dim == 3:
        out = np.sinc(u / np.pi)
    else:
        raise UnsupportedDimension(f"no angular factor for n={dim}")
    return out if np.ndim(out) else float(out)


def sphere_area(dim: int) -> float:
    """Area of the unit sphere S^(n-1); 2 for n=1 (two directions)."""
    _check_dim(dim)
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclass(frozen=True)
class KernelConstants:
    """Coefficients a_j of the odd-n commutator kernels and the angular factors.

    For n=3 only a_0 exists; a_0 = 1/(8 pi) follows from the momentum
    representation (see the tests, which fit it numerically).
    """

    a_coeffs: Mapping[int, tuple[float, ...]] = field(
        default_factory=lambda: {3: (1.0 / (8.0 * math.pi),)})

    def angular(self, dim: int) -> Callable[[np.ndarray], np.ndarray]:
        return lambda u: angular_factor(dim, u)

    def a(self, dim: int, j: int = 0) -> float:
        try:
            return self.a_coeffs[dim][j]
        except (KeyError, IndexError):
            raise UnsupportedDimension(f"a_{j} for n={dim} is not tabulated") from None


KERNEL_CONSTANTS = KernelConstants()


@dataclass(frozen=True)
class GaussianProfile:
    """normalization * exp(-(x - center)^2 / (2 width^2)) / (sqrt(2 pi) width)."""

    center: float
    width: float
    normalization: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"Gaussian width must be positive, got {self.width}")

    def __call__(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.normalization * np.exp(-0.5 * z * z) / (SQRT2PI * self.width)

    def mirrored(self) -> "GaussianProfile":
        return GaussianProfile(-self.center, self.width, self.normalization)

    def tail_above(self, x):
        """Integral of the profile over (x, inf)."""
        z = (np.asarray(x, dtype=float) - self.center) / (SQRT2 * self.width)
        return 0.5 * self.normalization * special.erfc(z)

    def sine_transform(self, k):
        """Integral of profile(x) sin(k x) dx."""
        k = np.asarray(k, dtype=float)
        return self.normalization * np.exp(-0.5 * (k * self.width) ** 2) * np.sin(k * self.center)


MAX_DELTA_ORDER = 4


def smeared_delta_derivative(j: int, center: float, g: GaussianProfile):
    """Integral of delta^(j)(u - center) g(u) du = (-1)^j g^(j)(center).

    Uses g^(j)(x) = (-1)^j He_j(z) g(x) / s^j with z = (x - c)/s, so the
    result is He_j(z) g(center) / s^j.  ``center`` may be an array.
    """
    if j < 0 or j > MAX_DELTA_ORDER or int(j) != j:
        raise UnsupportedOrder(f"delta derivative order {j} not in 0..{MAX_DELTA_ORDER}")
    s = g.width
    z = (np.asarray(center, dtype=float) - g.center) / s
    he = special.eval_hermitenorm(int(j), z)
    out = he * g(center) / s ** j
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class DeltaTerm:
    """coefficient * D(dt - support), D = delta^(order) or Heaviside when order == -1."""

    coefficient: complex | np.ndarray
    order: int
    support: float | np.ndarray


@dataclass(frozen=True)
class DistributionalKernel:
    """Distribution in the time difference dt at fixed spatial distance.

    The kernel is ``constant + sum(terms)``.  ``plateau`` is the pointwise
    value at the requested dt for kernels made only of Heaviside steps (and
    None otherwise).
    """

    terms: tuple[DeltaTerm, ...]
    constant: complex = 0j
    plateau: complex | None = None

    def smear(self, g: GaussianProfile):
        """Integral of the kernel against the profile g(dt)."""
        total = self.constant * g.normalization
        for t in self.terms:
            if t.order == -1:
                total = total + t.coefficient * g.tail_above(t.support)
            else:
                total = total + t.coefficient * smeared_delta_derivative(t.order, t.support, g)
        return _scalar(total)

    def smear_abs(self, g: GaussianProfile, shift: float):
        """Integral of kernel(|u - shift|) g(u) du, with the kernel read at tau >= 0.

        Terms supported at tau = support > 0 are hit on both branches
        u = shift +- support.  Terms at support <= 0 are never hit by tau > 0,
        except Heaviside steps, which are then identically one.  Supports and
        coefficients may be arrays (one kernel per spatial distance).
        """
        total = self.constant * g.normalization
        for t in self.terms:
            s = np.asarray(t.support, dtype=float)
            if t.order == -1:
                outside = g.tail_above(shift + s) + (g.normalization - g.tail_above(shift - s))
                total = total + t.coefficient * np.where(s <= 0, g.normalization, outside)
            else:
                # delta^(j)(|u| - s) = delta^(j)(u - s) + (-1)^j delta^(j)(u + s) for s > 0
                hit = (smeared_delta_derivative(t.order, shift + s, g)
                       + (-1) ** t.order * smeared_delta_derivative(t.order, shift - s, g))
                total = total + t.coefficient * np.where(s > 0, hit, 0.0)
        return _scalar(total)


def _scalar(x):
    x = np.asarray(x, dtype=complex)
    return complex(x) if x.ndim == 0 else x


def _check_dim(n: int) -> None:
    if n not in (1, 2, 3):
        raise UnsupportedDimension(f"kernels available for n in (1, 2, 3), got {n}")


def _near_cone(dt: float, r: float) -> bool:
    return abs(dt * dt - r * r) <= LIGHT_CONE_BAND * (dt * dt + r * r) and (dt != 0 or r != 0)


def w_minus(n: int, dt: float, r: float):
    """Antisymmetric (commutator) part of the vacuum Wightman function.

    Returns a complex number for n=2 and a :class:`DistributionalKernel` for
    n in (1, 3).
    """
    _check_dim(n)
    if n != 2 and np.ndim(r):
        r = np.abs(np.asarray(r, dtype=float))
        if n == 3:
            c = 1j * KERNEL_CONSTANTS.a(3) / r
            return DistributionalKernel((DeltaTerm(c, 0, -r), DeltaTerm(-c, 0, r)))
        c = -0.25j
        return DistributionalKernel((DeltaTerm(c, -1, -r), DeltaTerm(c, -1, r)), constant=-c)
    r = abs(float(r))
    dt = float(dt)
    if n == 1:
        # -(i/4) (Theta(r + dt) - Theta(r - dt)) = -(i/4)(Theta(dt + r) + Theta(dt - r) - 1)
        c = -0.25j
        plateau = c * (np.heaviside(r + dt, 0.5) - np.heaviside(r - dt, 0.5))
        return DistributionalKernel(
            (DeltaTerm(c, -1, -r), DeltaTerm(c, -1, r)), constant=-c, plateau=complex(plateau))
    if n == 3:
        if r == 0:
            raise OnLightCone("n=3 kernel is singular at r=0")
        a0 = KERNEL_CONSTANTS.a(3)
        c = 1j * a0 / r
        return DistributionalKernel((DeltaTerm(c, 0, -r), DeltaTerm(-c, 0, r)))
    if _near_cone(dt, r):
        raise OnLightCone(f"W2^- undefined pointwise at |dt|={abs(dt)}, r={r}")
    if dt * dt <= r * r:
        return 0j
    return complex(-1j * np.sign(dt) / (4 * math.pi) / math.sqrt(dt * dt - r * r))


def w_minus_dtdt(n: int, dt: float, r: float):
    """Mixed time derivative of :func:`w_minus` (the derivative-coupling kernel)."""
    _check_dim(n)
    if n != 2 and np.ndim(r):
        r = np.abs(np.asarray(r, dtype=float))
        if n == 3:
            c = -1j * KERNEL_CONSTANTS.a(3) / r
            return DistributionalKernel((DeltaTerm(c, 2, -r), DeltaTerm(-c, 2, r)))
        return DistributionalKernel((DeltaTerm(0.25j, 1, -r), DeltaTerm(0.25j, 1, r)))
    r = abs(float(r))
    dt = float(dt)
    if n == 1:
        return DistributionalKernel((DeltaTerm(0.25j, 1, -r), DeltaTerm(0.25j, 1, r)))
    if n == 3:
        if r == 0:
            raise OnLightCone("n=3 kernel is singular at r=0")
        a0 = KERNEL_CONSTANTS.a(3)
        c = -1j * a0 / r
        return DistributionalKernel((DeltaTerm(c, 2, -r), DeltaTerm(-c, 2, r)))
    if _near_cone(dt, r):
        raise OnLightCone(f"d_t d_t' W2^- undefined pointwise at |dt|={abs(dt)}, r={r}")
    if dt * dt <= r * r:
        return 0j
    q = dt * dt - r * r
    return complex(1j * np.sign(dt) / (4 * math.pi) * (2 * dt * dt + r * r) / q ** 2.5)


def smeared_w2_dtdt(r: float, g: GaussianProfile, spec: QuadratureSpec = QuadratureSpec()):
    """Integral of d_t d_t' W2^-(dt, r) g(dt) d(dt) through the omega-integral form.

    -(i/4 pi) int_0^inf w^2 J0(w r) [int g(dt) sin(w dt) d(dt)] dw; valid on
    and across the light cone.
    """
    cutoff = uv_cutoff(g.width, 0.0)
    period = 2 * math.pi / max(abs(r), abs(g.center), 1.0)
    val, err = integrate_semi_infinite(
        lambda w: w * w * special.j0(w * r) * g.sine_transform(w), 0.0, spec,
        cutoff=cutoff, period=period)
    return -1j / (4 * math.pi) * val, err / (4 * math.pi)


def smeared_w2(r: float, g: GaussianProfile, spec: QuadratureSpec = QuadratureSpec()):
    """Integral of W2^-(dt, r) g(dt) d(dt) via -(i/4 pi) int J0(w r) (sine transform of g) dw."""
    cutoff = uv_cutoff(g.width, 0.0)
    period = 2 * math.pi / max(abs(r), abs(g.center), 1.0)
    val, err = integrate_semi_infinite(
        lambda w: special.j0(w * r) * g.sine_transform(w), 0.0, spec,
        cutoff=cutoff, period=period)
    return -1j / (4 * math.pi) * val, err / (4 * math.pi)


def spectral_density(config: PairConfig, k, mode: str = "M"):
    """Radial momentum weight of the smeared vacuum two-point function.

    S_{n-1} k^{n-1} omega^{2p-1} exp(-k^2 sigma^2 / 2) Phi_n(k |x_Delta|) / (2 (2 pi)^n)
    with omega = k and p = 1 for derivative coupling, 0 for amplitude.  Mode
    "L" drops the separation factor Phi_n.
    """
    n = config.dim
    p = Coupling.parse(config.coupling).power
    k = np.asarray(k, dtype=float)
    weight = (sphere_area(n) / (2.0 * (2.0 * math.pi) ** n)
              * k ** (n - 1) * k ** (2 * p - 1)
              * np.exp(-0.5 * (k * config.smearing) ** 2))
    if mode == "M":
        weight = weight * angular_factor(n, k * config.separation)
    elif mode != "L":
        raise ValueError(f"mode must be 'L' or 'M', got {mode!r}")
    return weight if np.ndim(weight) else float(weight)
