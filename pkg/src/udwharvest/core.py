"""Dimensionless configuration types and the leading-order two-detector state.

Every length and time is measured in units of the switching time scale T, so
``gap`` is Omega*T, ``separation`` is |x_Delta|/T, and so on.  The coupling
constant ``coupling_strength`` is the dimensionless lambda-bar; in these units
it equals lambda numerically for every (dimension, coupling) pair.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    ForbiddenCutoff,
    InvalidParameter,
    MissingCutoff,
    NegativeWidth,
    NoisyNegativeDiagonal,
    UnsupportedDimension,
)

SUPPORTED_DIMS = (1, 2, 3)


class Coupling(str, enum.Enum):
    AMPLITUDE = "amplitude"
    DERIVATIVE = "derivative"

    @classmethod
    def parse(cls, value: "str | Coupling") -> "Coupling":
        if isinstance(value, Coupling):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameter(f"unknown coupling {value!r}") from None

    @property
    def power(self) -> int:
        """Exponent p in the spectral weight omega^(2p-1)."""
        return 1 if self is Coupling.DERIVATIVE else 0


@dataclass(frozen=True)
class PairConfig:
    """Two identical detectors with Gaussian switching and smearing."""

    dim: int
    coupling: Coupling
    gap: float
    smearing: float
    delay: float
    separation: float
    time_offset: float = 0.0
    coupling_strength: float = 1.0
    ir_cutoff: float | None = None

    def replace(self, **changes) -> "PairConfig":
        return dataclasses.replace(self, **changes)

    @property
    def needs_cutoff(self) -> bool:
        return self.dim == 1 and self.coupling is Coupling.AMPLITUDE

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["coupling"] = self.coupling.value
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "PairConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise InvalidParameter(f"unknown config keys: {', '.join(unknown)}")
        missing = sorted(n for n in ("dim", "coupling", "gap", "smearing", "delay", "separation")
                         if n not in data)
        if missing:
            raise InvalidParameter(f"missing config keys: {', '.join(missing)}")
        kwargs = dict(data)
        kwargs["coupling"] = Coupling.parse(kwargs["coupling"])
        return cls(**kwargs)


def _finite(name: str, value) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InvalidParameter(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(x):
        raise InvalidParameter(f"{name} must be finite, got {value!r}")
    return x


def validate(config: PairConfig) -> PairConfig:
    """Check every invariant and return the config with separation made non-negative.

    A zero coupling strength is accepted (it yields identically vanishing
    elements); negative values are rejected.
    """
    if isinstance(config.dim, bool) or not isinstance(config.dim, (int, np.integer)):
        raise UnsupportedDimension(f"dimension must be an integer, got {config.dim!r}")
    if config.dim not in SUPPORTED_DIMS:
        raise UnsupportedDimension(f"dimension {config.dim} not in {SUPPORTED_DIMS}")
    coupling = Coupling.parse(config.coupling)
    gap = _finite("gap", config.gap)
    smearing = _finite("smearing", config.smearing)
    delay = _finite("delay", config.delay)
    separation = abs(_finite("separation", config.separation))
    time_offset = _finite("time_offset", config.time_offset)
    strength = _finite("coupling_strength", config.coupling_strength)
    if smearing < 0:
        raise NegativeWidth(f"smearing must be >= 0, got {smearing}")
    if strength < 0:
        raise InvalidParameter(f"coupling_strength must be >= 0, got {strength}")

    needs = int(config.dim) == 1 and coupling is Coupling.AMPLITUDE
    cutoff = config.ir_cutoff
    if needs and cutoff is None:
        raise MissingCutoff("1+1D amplitude coupling requires ir_cutoff (Lambda*T)")
    if not needs and cutoff is not None:
        raise ForbiddenCutoff(f"ir_cutoff is only allowed for dim=1 amplitude coupling")
    if cutoff is not None:
        cutoff = _finite("ir_cutoff", cutoff)
        if cutoff <= 0:
            raise InvalidParameter(f"ir_cutoff must be > 0, got {cutoff}")

    out = PairConfig(int(config.dim), coupling, gap, smearing, delay, separation,
                     time_offset, strength, cutoff)
    return config if out == config else out


@dataclass(frozen=True)
class MatrixElements:
    """The leading-order elements of the joint detector state.

    ``error_estimates`` maps field names to absolute error bounds reported by
    the quadrature engine.
    """

    local_noise: float
    cross_noise: complex
    correlation: complex
    correlation_plus: complex
    correlation_minus: complex
    negativity: float
    error_estimates: Mapping[str, float] = field(default_factory=dict)

    def error(self, name: str) -> float:
        return float(self.error_estimates.get(name, 0.0))


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 two-qubit state in the basis (gg, eg, ge, ee)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def partial_transpose(self) -> np.ndarray:
        """Partial transpose on the second (B) qubit."""
        # index = a + 2*b, so the reshaped axes are (b, a, b', a')
        r = self.entries.reshape(2, 2, 2, 2)
        return r.transpose(2, 1, 0, 3).reshape(4, 4)


def assemble_rho(elements: MatrixElements) -> DensityMatrix:
    """Fill the X-shaped leading-order state from (L, L_AB, M)."""
    L = float(elements.local_noise)
    if 1.0 - 2.0 * L < 0:
        raise NoisyNegativeDiagonal(f"1 - 2L = {1 - 2 * L:.3g} < 0; perturbative regime violated")
    lab = complex(elements.cross_noise)
    m = complex(elements.correlation)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0 - 2.0 * L
    rho[1, 1] = L
    rho[2, 2] = L
    rho[1, 2] = lab
    rho[2, 1] = lab.conjugate()
    rho[3, 0] = m
    rho[0, 3] = m.conjugate()
    return DensityMatrix(rho)
