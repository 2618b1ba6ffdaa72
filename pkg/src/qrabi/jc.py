"""Two-qubit Jaynes-Cummings model, block by block.

The rotating-wave Hamiltonian conserves the excitation number
C = a^dag a + (sigma_1z + sigma_2z + 2)/2, so it splits into blocks of
dimension 1 (C = 0), 3 (C = 1) and 4 (C >= 2).  Block bases are

* C = 0: {|0,g,g>}
* C = 1: {|0,e,g>, |0,g,e>, |1,g,g>}
* C >= 2: {|C-2,e,e>, |C-1,e,g>, |C-1,g,e>, |C,g,g>}
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._parallel import ordered_map
from .errors import ConditionError
from .model import BasisState, ModelParams, Parity, Qubit, SpectrumRecord, bare_energy, dimension

E, G = Qubit.E, Qubit.G

DEFAULT_CMAX = 12
CONDITION_TOL = 1e-12
# below this |delta1 - delta2| the second degenerate state is not defined
NB_DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class JcBlock:
    C: int
    basis: tuple[BasisState, ...]
    matrix: NDArray[np.float64]

    @property
    def parity(self) -> Parity:
        return Parity.EVEN if self.C % 2 == 0 else Parity.ODD


def block_basis(C: int) -> tuple[BasisState, ...]:
    if C < 0:
        raise ConditionError(f"C must be non-negative, got {C}")
    if C == 0:
        return (BasisState(0, G, G),)
    if C == 1:
        return (BasisState(0, E, G), BasisState(0, G, E), BasisState(1, G, G))
    return (BasisState(C - 2, E, E), BasisState(C - 1, E, G), BasisState(C - 1, G, E), BasisState(C, G, G))


def jc_block(C: int, params: ModelParams) -> JcBlock:
    """Hamiltonian of the excitation-number-C block."""
    states = block_basis(C)
    d1, d2, g1, g2 = params.delta1, params.delta2, params.g1, params.g2
    H = np.diag([bare_energy(s, d1, d2) for s in states])
    if C == 1:
        H[0, 2] = H[2, 0] = g1
        H[1, 2] = H[2, 1] = g2
    elif C >= 2:
        top, bottom = math.sqrt(C - 1), math.sqrt(C)
        H[0, 1] = H[1, 0] = top * g2
        H[0, 2] = H[2, 0] = top * g1
        H[1, 3] = H[3, 1] = bottom * g1
        H[2, 3] = H[3, 2] = bottom * g2
    return JcBlock(C, states, H)


def jc_char_eval(E: float, C: int, params: ModelParams) -> float:
    """Quartic whose roots are the energies of block C >= 2 (closed form)."""
    if C < 2:
        raise ConditionError(f"quartic applies to C >= 2, got {C}")
    N = C
    d1, d2, g1, g2 = params.delta1, params.delta2, params.g1, params.g2
    x = E - N + 1
    return (
        (E - N + d1 + d2) * (E - N + 2 - d1 - d2) * (x**2 - (d1 - d2) ** 2)
        + (g1**2 + g2**2) * (x * (E - N + d1 + d2) - 2 * N * x**2)
        + (g1**2 - g2**2) * ((g1**2 - g2**2) * (N**2 - N) + (d1**2 - d2**2) * (2 * N - 1) + (E + N) * (d2 - d1))
    )


def jc_cubic_eval(E: float, params: ModelParams) -> float:
    """Cubic whose roots are the energies of the C = 1 block (sign-flipped characteristic polynomial)."""
    d1, d2, g1, g2 = params.delta1, params.delta2, params.g1, params.g2
    return (
        E * ((d1 - d2) ** 2 + E * (1 - d1 - d2) - E**2 + g1**2 + g2**2)
        + (d1 + d2 - 1) * (d1 - d2) ** 2
        + (g1**2 - g2**2) * (d1 - d2)
    )


def char_scale(C: int, params: ModelParams) -> float:
    """Magnitude scale for judging jc_char_eval residuals: the fourth power of the block norm."""
    return max(1.0, float(np.abs(jc_block(C, params).matrix).max())) ** 4


def jc_eigenvalues(C: int, params: ModelParams) -> NDArray[np.float64]:
    return np.linalg.eigvalsh(jc_block(C, params).matrix)


def jc_spectrum(params: ModelParams, C_max: int = DEFAULT_CMAX) -> list[SpectrumRecord]:
    """All block energies for C = 0..C_max.

    Block C has parity (-1)^C.  Levels are ranked per parity over the
    union of blocks; each record carries its block in ``block``.
    """
    if C_max < 0:
        raise ConditionError(f"C_max must be non-negative, got {C_max}")
    records = []
    for parity in (Parity.EVEN, Parity.ODD):
        pairs = sorted(
            (float(e), C)
            for C in range(C_max + 1)
            if (C % 2 == 0) == (parity is Parity.EVEN)
            for e in jc_eigenvalues(C, params)
        )
        records.extend(SpectrumRecord(params.g, parity, i, e, "jc", block=C) for i, (e, C) in enumerate(pairs))
    return records


def _sweep_point(g, template, ratio, C_max):
    return jc_spectrum(template.with_total_coupling(g, ratio), C_max)


def jc_sweep(template: ModelParams, g_grid, C_max: int = DEFAULT_CMAX, ratio=None, workers=None) -> list[SpectrumRecord]:
    grid = sorted(float(g) for g in g_grid)
    if not grid:
        raise ConditionError("empty coupling grid")
    fn = functools.partial(_sweep_point, template=template, ratio=ratio, C_max=C_max)
    return [r for chunk in ordered_map(fn, grid, workers) for r in chunk]


def _check_special(params: ModelParams):
    if abs(params.g1 - params.g2) > CONDITION_TOL:
        raise ConditionError(f"needs g1 = g2, got {params.g1}, {params.g2}")
    if abs(params.delta1 + params.delta2 - 1) > CONDITION_TOL:
        raise ConditionError(f"needs delta1 + delta2 = 1, got {params.delta1 + params.delta2}")
    if not params.g > 0:
        raise ConditionError("needs g > 0")


def _unit(v) -> NDArray[np.float64]:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def psi_c_na(C: int, params: ModelParams) -> NDArray[np.float64]:
    """First coupling-independent E = C - 1 state of block C >= 2 (block basis)."""
    _check_special(params)
    if C < 2:
        raise ConditionError(f"needs C >= 2, got {C}")
    d, g = params.delta1 - params.delta2, params.g
    return _unit([2 * d / (math.sqrt(C - 1) * g), -1.0, 1.0, 0.0])


def psi_c_nb(C: int, params: ModelParams) -> NDArray[np.float64]:
    """Second E = C - 1 state of block C >= 2, orthogonal to :func:`psi_c_na`."""
    _check_special(params)
    if C < 2:
        raise ConditionError(f"needs C >= 2, got {C}")
    d, g = params.delta1 - params.delta2, params.g
    if abs(d) < NB_DEGENERACY_TOL:
        raise ConditionError("delta1 = delta2: the degenerate pair has no distinguished second state")
    top = math.sqrt(C - 1) * g / d
    bottom = ((C - 1) * g**2 + 2 * d**2) / (math.sqrt(C) * g * -d)
    return _unit([top, 1.0, -1.0, bottom])


def psi_c0(params: ModelParams) -> NDArray[np.float64]:
    """Coupling-independent E = 0 state of the C = 1 block (block basis)."""
    _check_special(params)
    d, g = params.delta1 - params.delta2, params.g
    return _unit([-1.0, 1.0, 2 * d / g])


def jc_dark_state(C: int) -> NDArray[np.float64]:
    """Singlet (|C-1,e,g> - |C-1,g,e>)/sqrt(2) in the basis of block C >= 2."""
    if C < 2:
        raise ConditionError(f"needs C >= 2, got {C}")
    return _unit([0.0, 1.0, -1.0, 0.0])


def block_to_canonical(C: int, vector, n_max: int | None = None) -> NDArray[np.float64]:
    """Embed a block-basis vector in the canonical full basis."""
    states = block_basis(C)
    n_max = max(s.n for s in states) if n_max is None else n_max
    out = np.zeros(dimension(n_max))
    for s, c in zip(states, vector):
        out[s.index] = c
    return out


def build_jc_hamiltonian(params: ModelParams, n_max: int) -> NDArray[np.float64]:
    """Full Jaynes-Cummings matrix on photon numbers 0..n_max (canonical basis)."""
    H = np.zeros((dimension(n_max), dimension(n_max)))
    for n in range(n_max + 1):
        for q1 in (E, G):
            for q2 in (E, G):
                s = BasisState(n, q1, q2)
                H[s.index, s.index] = bare_energy(s, params.delta1, params.delta2)
        if n == n_max:
            continue
        amp = math.sqrt(n + 1)
        # sigma_i^- a^dag lowers qubit i and adds a photon
        for q in (E, G):
            lo = BasisState(n + 1, G, q).index, BasisState(n, E, q).index
            H[lo] = H[lo[::-1]] = params.g1 * amp
            lo = BasisState(n + 1, q, G).index, BasisState(n, q, E).index
            H[lo] = H[lo[::-1]] = params.g2 * amp
    return H
