"""Brute-force L and M from a periodic-box mode sum.

The continuum momentum integral is replaced by the sum over box modes
k = 2 pi m / box_length, m in Z^n without the zero mode.  Each mode
contributes a plane-wave Wightman term; the two time integrals are done by
Gauss-Legendre quadrature in the centred variables s = u + v and
d = u - v (u, v the times relative to each detector's centre), with the
|d - t_D| kink of the time-ordered product placed on a panel edge.

Nothing here reuses the closed forms of :mod:`udwharvest.elements`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Coupling, MatrixElements, PairConfig, validate
from ..errors import InvalidParameter, UnresolvedScales

MAX_MODES = 10 ** 6
# Gaussian exp(-d^2/2) is below 1e-18 beyond this
REACH = 9.0
# momentum where exp(-k^2 sigma^2/2) falls to 1e-30 is this over sigma
DAMPING_REACH = math.sqrt(2 * 30 * math.log(10))
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class ModeBox:
    box_length: float
    mode_cut: int
    dim: int

    def __post_init__(self):
        if not self.box_length > 0:
            raise InvalidParameter(f"box_length must be positive, got {self.box_length}")
        if int(self.mode_cut) != self.mode_cut or self.mode_cut < 1:
            raise InvalidParameter(f"mode_cut must be an integer >= 1, got {self.mode_cut}")
        if self.dim not in (1, 2, 3):
            raise InvalidParameter(f"dim must be 1, 2 or 3, got {self.dim}")

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.box_length

    @property
    def mode_count(self) -> int:
        return (2 * self.mode_cut + 1) ** self.dim

    @classmethod
    def default_for(cls, config: PairConfig) -> "ModeBox":
        """Box of length 10(|x_D| + 7) with enough modes to reach the smearing cutoff.

        The box is enlarged until the mode spacing is a tenth of
        min(1/sigma, 1).  For 1+1D amplitude coupling the spacing is a
        hundredth of the IR cutoff: the sum over the 1/k region above the
        cutoff converges only linearly in the spacing.
        """
        config = validate(config)
        if config.smearing == 0:
            raise UnresolvedScales("the mode sum for M needs a finite smearing width")
        length = max(10.0 * (config.separation + 7.0),
                     20 * math.pi * max(config.smearing, 1.0))
        if config.needs_cutoff:
            length = max(length, 200 * math.pi / config.ir_cutoff)
        length *= 1 + 1e-12
        k_max = DAMPING_REACH / config.smearing
        return cls(length, max(1, math.ceil(k_max * length / (2 * math.pi))), config.dim)


@dataclass(frozen=True)
class ModeSumResult:
    """Mode-sum L and M, with the change seen when mode_cut is doubled (or halved)."""

    elements: MatrixElements
    converged: bool
    change: float
    box: ModeBox


def check_resolution(config: PairConfig, box: ModeBox) -> None:
    """Raise :class:`UnresolvedScales` unless the box resolves every scale of ``config``."""
    if box.dim != config.dim:
        raise UnresolvedScales(f"box dimension {box.dim} != config dimension {config.dim}")
    if config.smearing == 0:
        raise UnresolvedScales("the mode sum for M needs a finite smearing width")
    if box.box_length < 10 * (config.separation + 7.0):
        raise UnresolvedScales(f"box_length {box.box_length:g} < 10(|x_D| + 7)")
    resolution = min(1.0 / config.smearing, 1.0) / 10
    if box.spacing > resolution:
        raise UnresolvedScales(f"mode spacing {box.spacing:.3g} > {resolution:.3g}")
    if config.needs_cutoff and box.spacing > config.ir_cutoff / 10:
        raise UnresolvedScales(f"mode spacing {box.spacing:.3g} does not resolve the IR cutoff")
    if box.mode_count > MAX_MODES:
        raise UnresolvedScales(f"{box.mode_count} modes exceed the limit {MAX_MODES}")
    if box.mode_cut * box.spacing < DAMPING_REACH / config.smearing:
        raise UnresolvedScales("mode_cut does not reach the smearing cutoff")


def _mode_shells(config: PairConfig, box: ModeBox):
    """Distinct frequencies with their summed plane-wave factors.

    Returns (omega, multiplicity, spatial) where ``spatial`` is the sum of
    cos(k . x_D) over each shell, x_D along the first axis.
    """
    m = np.arange(-box.mode_cut, box.mode_cut + 1)
    grids = np.meshgrid(*([m] * box.dim), indexing="ij")
    sq = sum(g.astype(np.int64) ** 2 for g in grids).ravel()
    first = grids[0].ravel()
    keep = sq > 0
    sq, first = sq[keep], first[keep]
    shells, index = np.unique(sq, return_inverse=True)
    multiplicity = np.bincount(index).astype(float)
    spatial = np.bincount(index, weights=np.cos(box.spacing * first * config.separation))
    omega = box.spacing * np.sqrt(shells.astype(float))
    return omega, multiplicity, spatial


def _panels(a: float, b: float, frequency: float, breakpoint: float | None = None):
    edges = [a, b]
    if breakpoint is not None and a < breakpoint < b:
        edges.insert(1, breakpoint)
    nodes, weights = [], []
    width = 2 * math.pi / max(frequency, 1.0)
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil((hi - lo) / width))
        e = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        nodes.append((mid[:, None] + half[:, None] * GL_NODES).ravel())
        weights.append((half[:, None] * GL_WEIGHTS).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _time_factors(omega: np.ndarray, gap: float, delay: float):
    """Per-frequency relative-time integrals for L and for the time-ordered M."""
    out_L = np.empty(len(omega), dtype=complex)
    out_M = np.empty(len(omega), dtype=complex)
    # bucket frequencies so each bucket shares one panel layout
    levels = np.ceil(np.log2(np.maximum(omega + abs(gap), 1.0))).astype(int)
    for level in np.unique(levels):
        sel = np.flatnonzero(levels == level)
        freq = 2.0 ** level
        x, w = _panels(-REACH, REACH, freq, breakpoint=delay)
        base = w * np.exp(-0.5 * x * x)
        for chunk in np.array_split(sel, max(1, len(sel) * len(x) // 2_000_000 + 1)):
            om = omega[chunk, None]
            out_L[chunk] = np.exp(-1j * (gap + om) * x) @ base
            out_M[chunk] = np.exp(-1j * om * np.abs(x - delay)) @ base
    return out_L, out_M


def _sum(config: PairConfig, box: ModeBox):
    lam2 = config.coupling_strength ** 2
    if lam2 == 0:
        return 0.0, 0j
    omega, mult, spatial = _mode_shells(config, box)
    if config.needs_cutoff:
        keep = omega >= config.ir_cutoff
        omega, mult, spatial = omega[keep], mult[keep], spatial[keep]
    p = 1 if config.coupling is Coupling.DERIVATIVE else 0
    weight = omega ** (2 * p - 1) / 2 * np.exp(-0.5 * (omega * config.smearing) ** 2)
    weight /= box.box_length ** box.dim
    # |time factor| <= sqrt(2 pi): drop shells that cannot contribute at 1e-40 of the total
    bound = weight * mult
    live = bound > 1e-40 * bound.sum()
    omega, mult, spatial, weight = omega[live], mult[live], spatial[live], weight[live]
    tL, tM = _time_factors(omega, config.gap, config.delay)

    s, ws = _panels(-REACH, REACH, abs(config.gap))
    env = ws * np.exp(-0.5 * s * s)
    s_L = env.sum()
    s_M = env @ np.exp(1j * config.gap * s)
    # u, v -> (s, d) has Jacobian 1/2
    L = lam2 * 0.5 * s_L * np.sum(weight * mult * tL)
    phase = np.exp(1j * config.gap * config.time_offset)
    M = -lam2 * phase * 0.5 * s_M * np.sum(weight * spatial * tM)
    return float(L.real), complex(M)


def discrete_mode_elements(config: PairConfig, box: ModeBox | None = None,
                           tolerance: float = 1e-6) -> ModeSumResult:
    """L and M from the box mode sum.

    The convergence flag compares against a run with ``2 * mode_cut`` (or
    ``mode_cut // 2`` when doubling would exceed the mode limit); the
    relative change must stay below ``tolerance``.  The remaining fields of
    the returned :class:`MatrixElements` are NaN.
    """
    config = validate(config)
    box = box or ModeBox.default_for(config)
    check_resolution(config, box)
    L, M = _sum(config, box)
    other = ModeBox(box.box_length, 2 * box.mode_cut, box.dim)
    if other.mode_count > MAX_MODES:
        other = ModeBox(box.box_length, max(1, box.mode_cut // 2), box.dim)
    L2, M2 = _sum(config, other)
    change = max(abs(L - L2) / max(abs(L), 1e-300), abs(M - M2) / max(abs(M), 1e-300))
    if L == 0 and M == 0:
        change = 0.0
    nan = complex("nan")
    elements = MatrixElements(L, nan, M, nan, nan, max(abs(M) - L, 0.0),
                              {"local_noise": abs(L - L2), "correlation": abs(M - M2)})
    return ModeSumResult(elements, change < tolerance, change, box)
