"""Parameters, basis labels and symmetry bookkeeping for the two-qubit models.

Every solver in the package works in units of the photon energy; raw
inputs are rescaled by :func:`normalize`.  Basis states are ordered
canonically: photon number first, then the qubit pair in the order
``ee, eg, ge, gg``.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Union

from .errors import ConditionError


class Qubit(enum.Enum):
    """Level of a single qubit."""

    E = "e"
    G = "g"

    def __str__(self) -> str:
        return self.value


# sigma_z eigenvalue of each level; the only place the +-1 convention is fixed
_SZ = {Qubit.E: 1, Qubit.G: -1}

QUBIT_PAIRS = (
    (Qubit.E, Qubit.E),
    (Qubit.E, Qubit.G),
    (Qubit.G, Qubit.E),
    (Qubit.G, Qubit.G),
)


class Parity(enum.IntEnum):
    """Eigenvalue of the reflection exp(i pi a^dag a) sigma_1z sigma_2z."""

    EVEN = 1
    ODD = -1

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "Parity":
        if isinstance(value, Parity):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("even", "+", "+1"):
                return cls.EVEN
            if key in ("odd", "-", "-1"):
                return cls.ODD
        elif value in (1, -1):
            return cls(int(value))
        raise ConditionError(f"not a parity: {value!r}")


@dataclass(frozen=True, order=True)
class BasisState:
    """Product state |n, q1, q2> of the photon mode and the two qubits."""

    n: int
    q1: Qubit
    q2: Qubit

    def __post_init__(self):
        if self.n < 0:
            raise ConditionError(f"photon number must be non-negative, got {self.n}")

    @property
    def index(self) -> int:
        """Flat position in the canonical basis."""
        return 4 * self.n + QUBIT_PAIRS.index((self.q1, self.q2))

    @classmethod
    def from_index(cls, i: int) -> "BasisState":
        if i < 0:
            raise ConditionError(f"negative basis index {i}")
        n, k = divmod(i, 4)
        q1, q2 = QUBIT_PAIRS[k]
        return cls(n, q1, q2)

    @classmethod
    def parse(cls, label: str) -> "BasisState":
        """Build a state from a label such as ``"2,e,g"`` or ``"|2,e,g>"``."""
        body = label.strip().lstrip("|").rstrip(">")
        n, q1, q2 = (part.strip() for part in body.split(","))
        return cls(int(n), Qubit(q1), Qubit(q2))

    def shifted(self, dn: int) -> "BasisState":
        return BasisState(self.n + dn, self.q1, self.q2)

    def __str__(self) -> str:
        return f"|{self.n},{self.q1},{self.q2}>"


def basis(n_max: int) -> list[BasisState]:
    """All canonical basis states with photon number up to ``n_max``."""
    return [BasisState(n, q1, q2) for n in range(n_max + 1) for q1, q2 in QUBIT_PAIRS]


def dimension(n_max: int) -> int:
    return 4 * (n_max + 1)


def parity_of(state: BasisState) -> Parity:
    """Reflection parity (-1)^n s1 s2 of a basis state."""
    sign = (-1) ** state.n * _SZ[state.q1] * _SZ[state.q2]
    return Parity(sign)


def jc_conserved_c(state: BasisState) -> int:
    """Excitation number n + (s1 + s2 + 2)/2 conserved by the Jaynes-Cummings model."""
    return state.n + (_SZ[state.q1] + _SZ[state.q2] + 2) // 2


def bare_energy(state: BasisState, delta1: float, delta2: float) -> float:
    """Uncoupled energy n + delta1 s1 + delta2 s2 (photon energy set to one)."""
    return state.n + delta1 * _SZ[state.q1] + delta2 * _SZ[state.q2]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the two-qubit Rabi / Jaynes-Cummings models.

    ``delta1`` and ``delta2`` are half the qubit splittings, ``g1`` and
    ``g2`` the qubit-photon couplings.  After :func:`normalize` the photon
    energy ``omega`` is exactly one.
    """

    omega: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0
    g1: float = 0.0
    g2: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ConditionError(f"omega must be positive, got {self.omega}")
        if self.g1 < 0 or self.g2 < 0:
            raise ConditionError(f"couplings must be non-negative, got g1={self.g1}, g2={self.g2}")

    @property
    def g(self) -> float:
        return self.g1 + self.g2

    @property
    def gprime(self) -> float:
        return self.g1 - self.g2

    def with_total_coupling(self, g: float, ratio: tuple[float, float] | None = None) -> "ModelParams":
        """Copy with total coupling ``g`` and the coupling ratio g1:g2 held fixed.

        The ratio is taken from ``ratio`` when given, otherwise from the
        current couplings.
        """
        g1, g2 = split_coupling(g, ratio if ratio is not None else (self.g1, self.g2))
        return ModelParams(self.omega, self.delta1, self.delta2, g1, g2)


RawParams = Union[ModelParams, Mapping]


def split_coupling(g: float, ratio: tuple[float, float]) -> tuple[float, float]:
    """Split the total coupling ``g`` into (g1, g2) with g1:g2 = ratio."""
    a, b = (float(r) for r in ratio)
    if a < 0 or b < 0 or a + b == 0:
        raise ConditionError(f"invalid coupling ratio {a}:{b}")
    if g < 0:
        raise ConditionError(f"total coupling must be non-negative, got {g}")
    return g * a / (a + b), g * b / (a + b)


def normalize(raw: RawParams) -> ModelParams:
    """Rescale every energy by ``omega`` so that the photon energy is one."""
    if isinstance(raw, ModelParams):
        fields = dict(omega=raw.omega, delta1=raw.delta1, delta2=raw.delta2, g1=raw.g1, g2=raw.g2)
    else:
        unknown = set(raw) - {"omega", "delta1", "delta2", "g1", "g2"}
        if unknown:
            raise ConditionError(f"unknown parameter(s): {sorted(unknown)}")
        fields = {k: float(raw.get(k, 0.0)) for k in ("delta1", "delta2", "g1", "g2")}
        fields["omega"] = float(raw.get("omega", 1.0))
    omega = fields["omega"]
    if not (omega > 0 and math.isfinite(omega)):
        raise ConditionError(f"omega must be positive, got {omega}")
    return ModelParams(
        1.0,
        fields["delta1"] / omega,
        fields["delta2"] / omega,
        fields["g1"] / omega,
        fields["g2"] / omega,
    )


METHODS = ("fock", "gfunc", "jc", "quasi")


@dataclass(frozen=True)
class SpectrumRecord:
    """One energy level of a sweep.

    ``level`` counts upward from zero within a fixed (g, parity, method);
    ``block`` carries the conserved excitation number for Jaynes-Cummings
    records and is ``None`` otherwise.
    """

    g: float
    parity: Parity | str
    level: int
    energy: float
    method: str
    block: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConditionError(f"unknown method tag {self.method!r}")
        if isinstance(self.parity, str) and self.parity != "all":
            raise ConditionError(f"parity must be a Parity or 'all', got {self.parity!r}")

    @property
    def parity_label(self) -> str:
        return self.parity.label if isinstance(self.parity, Parity) else self.parity
