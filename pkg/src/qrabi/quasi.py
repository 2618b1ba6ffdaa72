"""Closed finite-photon subspaces of the two-qubit Rabi model.

With equal couplings g1 = g2 = g/2 the Hamiltonian can leave a chain of
states with photon numbers 0..N invariant, provided the two amplitudes
at the top of the chain are opposite.  Such eigenstates have energy
exactly N.  This module builds the chains, evaluates the closure
determinant, scans the coupling for admissible roots, and constructs
the known closed-form eigenstates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import ConditionError
from .fock import apply_h, build_hamiltonian, fix_signs
from .model import BasisState, ModelParams, Parity, Qubit, basis, dimension, parity_of

E, G = Qubit.E, Qubit.G

# 1e-12 is the stated tolerance on the resonance conditions below
CONDITION_TOL = 1e-12


@dataclass(frozen=True)
class ChainBasis:
    """Ordered chain of the 2(N+1) states of one parity with n <= N."""

    N: int
    parity: Parity
    states: tuple[BasisState, ...]

    def __len__(self) -> int:
        return len(self.states)

    @property
    def top_pair(self) -> tuple[int, int]:
        """Positions of the two photon-number-N states."""
        return len(self.states) - 2, len(self.states) - 1


def _pair(n: int, parity: Parity) -> tuple[BasisState, BasisState]:
    # parity of |n,e,g> is -(-1)^n, of |n,e,e> is (-1)^n
    if (-1) ** n * -1 == int(parity):
        return BasisState(n, E, G), BasisState(n, G, E)
    return BasisState(n, G, G), BasisState(n, E, E)


def _chain_states(N: int, parity: Parity) -> tuple[BasisState, ...]:
    return tuple(s for n in range(N + 1) for s in _pair(n, parity))


def chain_basis(N: int, parity) -> ChainBasis:
    """Chain whose top pair is {|N,e,g>, |N,g,e>}.

    This requires N even for odd parity and N odd for even parity.
    """
    parity = Parity.parse(parity)
    if N < 1:
        raise ConditionError(f"chain needs N >= 1, got {N}")
    states = _chain_states(N, parity)
    if states[-1].q1 == states[-1].q2:
        raise ConditionError(f"N={N} is inconsistent with {parity.label} parity (top states {states[-2]}, {states[-1]})")
    return ChainBasis(N, parity, states)


def _general_chain(N: int, parity) -> ChainBasis:
    # like chain_basis but also allows the {gg, ee} top pair
    parity = Parity.parse(parity)
    if N < 0:
        raise ConditionError(f"chain needs N >= 0, got {N}")
    return ChainBasis(N, parity, _chain_states(N, parity))


def equal_coupling(delta1: float, delta2: float, g: float) -> ModelParams:
    return ModelParams(1.0, delta1, delta2, g / 2, g / 2)


def closure_matrix(N: int, parity, delta1: float, delta2: float, g: float) -> NDArray[np.float64]:
    """H - N restricted to the chain, with g1 = g2 = g/2."""
    chain = _general_chain(N, parity)
    H = build_hamiltonian(equal_coupling(delta1, delta2, g), N)
    idx = [s.index for s in chain.states]
    return H[np.ix_(idx, idx)] - N * np.eye(len(idx))


def closure_det(N: int, parity, delta1: float, delta2: float, g: float) -> float:
    """Determinant of the chain matrix at E = N (LU with partial pivoting)."""
    return float(np.linalg.det(closure_matrix(N, parity, delta1, delta2, g)))


class Residual(NamedTuple):
    residual: float
    leakage: float


def embed(vector, n_max: int) -> NDArray[np.float64]:
    """Zero-pad a canonical-basis vector to photon number ``n_max``."""
    v = np.asarray(vector, dtype=float)
    size = dimension(n_max)
    if v.size > size:
        if np.any(v[size:] != 0):
            raise ConditionError(f"vector has amplitude above n_max={n_max}")
        return v[:size].copy()
    out = np.zeros(size)
    out[: v.size] = v
    return out


def chain_to_canonical(chain: ChainBasis, coefficients, n_max: int | None = None) -> NDArray[np.float64]:
    v = np.zeros(dimension(chain.N if n_max is None else n_max))
    for s, c in zip(chain.states, coefficients):
        v[s.index] = c
    return v


def verify_eigenstate(params: ModelParams, vector, E: float, n_max: int) -> Residual:
    """Relative residual ||(H - E) v|| / ||v|| on the truncated space, plus leakage."""
    v = embed(vector, n_max)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ConditionError("zero vector")
    Hv, leak = apply_h(params, v, n_max)
    return Residual(float(np.linalg.norm(Hv - E * v) / norm), leak / norm)


@dataclass(frozen=True)
class QuasiExactSolution:
    """Finite-photon eigenstate found by the coupling scan."""

    N: int
    parity: Parity
    E: float
    g_star: float
    basis: ChainBasis
    coefficients: NDArray[np.float64]
    residual: float
    leakage: float

    def vector(self, n_max: int | None = None) -> NDArray[np.float64]:
        return chain_to_canonical(self.basis, self.coefficients, n_max)


def _bisect(f, a: float, b: float, fa: float, xtol: float) -> float:
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _relative_sigma(M: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
    _, s, Vt = np.linalg.svd(M)
    scale = s[0] if s[0] > 0 else 1.0
    return s[-1] / scale, Vt[-1]


def _accept(N, parity, chain, delta1, delta2, g, closure_tol, residual_tol) -> QuasiExactSolution | None:
    rel, v = _relative_sigma(closure_matrix(N, parity, delta1, delta2, g))
    if rel > 1e-8:
        return None
    v = fix_signs(v / np.linalg.norm(v))
    i, j = chain.top_pair
    if abs(v[i] + v[j]) > closure_tol:
        return None
    params = equal_coupling(delta1, delta2, g)
    check = verify_eigenstate(params, chain_to_canonical(chain, v), float(N), N + 5)
    if check.residual > residual_tol or check.leakage > residual_tol:
        return None
    return QuasiExactSolution(N, chain.parity, float(N), g, chain, v, check.residual, check.leakage)


def solve_quasiexact_couplings(N: int, parity, delta1: float, delta2: float, g_max: float,
                               step: float = 0.01, xtol: float = 1e-10,
                               closure_tol: float = 1e-8, residual_tol: float = 1e-10) -> list[QuasiExactSolution]:
    """All couplings g in (0, g_max] carrying a closed N-photon eigenstate.

    The closure determinant is sampled every ``step``; sign changes are
    bisected to ``xtol``.  A grid point where the chain matrix is
    numerically singular is itself a candidate, which covers conditions
    that hold for every g.  Each candidate is kept only if its null
    vector has opposite top-pair amplitudes and is an eigenvector of
    the full truncated Hamiltonian.
    """
    if not g_max > 0:
        raise ConditionError(f"g_max must be positive, got {g_max}")
    chain = _general_chain(N, parity)
    count = int(math.floor(g_max / step + 1e-9))
    grid = [step * k for k in range(1, count + 1)]
    if not grid or grid[-1] < g_max - 1e-12:
        grid.append(g_max)

    def det(g):
        return closure_det(N, parity, delta1, delta2, g)

    values = [det(g) for g in grid]
    singular = [_relative_sigma(closure_matrix(N, parity, delta1, delta2, g))[0] < 1e-12 for g in grid]

    candidates = [g for g, flag in zip(grid, singular) if flag]
    for k in range(len(grid) - 1):
        if singular[k] or singular[k + 1]:
            continue
        if (values[k] > 0) != (values[k + 1] > 0):
            candidates.append(_bisect(det, grid[k], grid[k + 1], values[k], xtol))

    solutions = []
    for g in sorted(candidates):
        sol = _accept(N, parity, chain, delta1, delta2, g, closure_tol, residual_tol)
        if sol is not None:
            solutions.append(sol)
    return solutions


def _require(condition: bool, message: str):
    if not condition:
        raise ConditionError(message)


def _vector(amplitudes: dict[BasisState, float], n_max: int) -> NDArray[np.float64]:
    v = np.zeros(dimension(n_max))
    for s, c in amplitudes.items():
        v[s.index] = c
    return v / np.linalg.norm(v)


def psi_norm(delta_combo: float, g: float) -> float:
    """Normalization constant sqrt(4 d^2 + 2 g^2) / g of the one-photon states."""
    return math.sqrt(4 * delta_combo**2 + 2 * g**2) / g


def psi_g1(delta1: float, delta2: float, g: float, n_max: int = 1) -> NDArray[np.float64]:
    """Odd-parity E = 1 state at delta1 - delta2 = 1, any g (g1 = g2)."""
    _require(abs(delta1 - delta2 - 1) <= CONDITION_TOL, f"psi_g1 needs delta1 - delta2 = 1, got {delta1 - delta2}")
    _require(g > 0, f"g must be positive, got {g}")
    return _vector({BasisState(0, E, G): 2 * (delta1 + delta2) / g,
                    BasisState(1, G, G): 1.0,
                    BasisState(1, E, E): -1.0}, n_max)


def psi_g2(delta1: float, delta2: float, g: float, n_max: int = 1) -> NDArray[np.float64]:
    """Odd-parity E = 1 state at delta2 - delta1 = 1, any g (g1 = g2)."""
    _require(abs(delta2 - delta1 - 1) <= CONDITION_TOL, f"psi_g2 needs delta2 - delta1 = 1, got {delta2 - delta1}")
    _require(g > 0, f"g must be positive, got {g}")
    return _vector({BasisState(0, G, E): 2 * (delta1 + delta2) / g,
                    BasisState(1, G, G): 1.0,
                    BasisState(1, E, E): -1.0}, n_max)


def psi_e(delta1: float, delta2: float, g: float, n_max: int = 1) -> NDArray[np.float64]:
    """Even-parity E = 1 state at delta1 + delta2 = 1, any g (g1 = g2)."""
    _require(abs(delta1 + delta2 - 1) <= CONDITION_TOL, f"psi_e needs delta1 + delta2 = 1, got {delta1 + delta2}")
    _require(g > 0, f"g must be positive, got {g}")
    return _vector({BasisState(0, E, E): 2 * (delta1 - delta2) / g,
                    BasisState(1, E, G): -1.0,
                    BasisState(1, G, E): 1.0}, n_max)


def dark_state(N: int, delta1: float, delta2: float, g: float = 0.0, n_max: int | None = None) -> NDArray[np.float64]:
    """Qubit singlet (|N,g,e> - |N,e,g>)/sqrt(2), energy N, for delta1 = delta2 and g1 = g2.

    The state does not depend on g; the argument is only validated.
    """
    _require(N >= 0, f"N must be non-negative, got {N}")
    _require(abs(delta1 - delta2) <= CONDITION_TOL, f"dark state needs delta1 = delta2, got {delta1}, {delta2}")
    _require(g >= 0, f"g must be non-negative, got {g}")
    return _vector({BasisState(N, G, E): 1.0, BasisState(N, E, G): -1.0}, N if n_max is None else n_max)


def sector_parity(vector) -> Parity:
    """Parity of a canonical-basis vector supported in a single sector."""
    v = np.asarray(vector)
    n_max = v.size // 4 - 1
    signs = {parity_of(s) for s in basis(n_max) if v[s.index] != 0}
    if len(signs) != 1:
        raise ConditionError("vector mixes parity sectors")
    return signs.pop()
