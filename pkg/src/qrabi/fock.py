"""Brute-force diagonalization of the two-qubit Rabi Hamiltonian in a truncated Fock space.

This is the reference every other solver is checked against.  Matrices
are dense and indexed by the canonical basis of :mod:`qrabi.model`.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._parallel import ordered_map
from .errors import ConditionError, NumericalFailure
from .model import (
    ModelParams,
    Parity,
    Qubit,
    SpectrumRecord,
    BasisState,
    bare_energy,
    basis,
    dimension,
    parity_of,
)

log = logging.getLogger(__name__)

_FLIP = {Qubit.E: Qubit.G, Qubit.G: Qubit.E}

DEFAULT_NMAX = 60
NMAX_CAP = 480


@dataclass(frozen=True)
class TruncationSpec:
    """How far to truncate and when to call the low-lying spectrum converged.

    The lowest ``k`` eigenvalues count as converged once doubling
    ``n_max`` moves none of them by more than ``tol``.
    """

    n_max: int = DEFAULT_NMAX
    tol: float = 1e-9
    k: int = 10
    n_cap: int = NMAX_CAP

    def __post_init__(self):
        if self.k < 1 or self.n_max < self.k:
            raise ConditionError(f"need n_max >= k >= 1, got n_max={self.n_max}, k={self.k}")
        if not self.tol > 0:
            raise ConditionError(f"tol must be positive, got {self.tol}")


def _coupled(state: BasisState, params: ModelParams):
    """Yield (upper state, matrix element) for the bonds |n> -> |n+1> of ``state``."""
    amp = math.sqrt(state.n + 1)
    yield BasisState(state.n + 1, _FLIP[state.q1], state.q2), params.g1 * amp
    yield BasisState(state.n + 1, state.q1, _FLIP[state.q2]), params.g2 * amp


def build_hamiltonian(params: ModelParams, n_max: int) -> NDArray[np.float64]:
    """Matrix of the two-qubit Rabi Hamiltonian on photon numbers 0..n_max."""
    if n_max < 0:
        raise ConditionError(f"n_max must be non-negative, got {n_max}")
    H = np.zeros((dimension(n_max), dimension(n_max)))
    for s in basis(n_max):
        i = s.index
        H[i, i] = bare_energy(s, params.delta1, params.delta2)
        if s.n == n_max:
            continue
        for t, value in _coupled(s, params):
            j = t.index
            H[i, j] = H[j, i] = value
    return H


def parity_diagonal(n_max: int) -> NDArray[np.int64]:
    """Diagonal of the reflection operator in the canonical basis."""
    return np.array([int(parity_of(s)) for s in basis(n_max)])


def build_parity_block(params: ModelParams, n_max: int, parity) -> tuple[NDArray[np.float64], list[BasisState]]:
    """Restriction of the Hamiltonian to one parity sector.

    Rows follow the canonical order of the retained states, which are
    returned alongside the matrix.
    """
    if n_max < 1:
        raise ConditionError(f"n_max must be at least 1, got {n_max}")
    parity = Parity.parse(parity)
    states = [s for s in basis(n_max) if parity_of(s) is parity]
    idx = [s.index for s in states]
    H = build_hamiltonian(params, n_max)
    return H[np.ix_(idx, idx)], states


def fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    """Flip columns so that the first largest-magnitude component is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.ndim == 1:
        return vectors if vectors[np.argmax(np.abs(vectors))] >= 0 else -vectors
    lead = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    vectors[:, lead < 0] *= -1
    return vectors


def eigen_sym(matrix) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConditionError(f"expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise ConditionError("matrix is not symmetric")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric eigensolver did not converge: {exc}") from exc
    return w, fix_signs(V)


def apply_h(params: ModelParams, vector, n_max: int) -> tuple[NDArray[np.float64], float]:
    """Matrix-free H v on the truncated space.

    Returns ``(Hv, leakage)`` where ``leakage`` is the norm of the
    amplitude H would push onto photon number ``n_max + 1``.
    """
    v = np.asarray(vector, dtype=float)
    if v.shape != (dimension(n_max),):
        raise ConditionError(f"vector length {v.size} does not match n_max={n_max}")
    w = v.reshape(n_max + 1, 4)
    diag = np.array([bare_energy(s, params.delta1, params.delta2) for s in basis(n_max)]).reshape(n_max + 1, 4)
    # sigma_1x and sigma_2x as column permutations of (ee, eg, ge, gg)
    flipped = params.g1 * w[:, [2, 3, 0, 1]] + params.g2 * w[:, [1, 0, 3, 2]]
    root = np.sqrt(np.arange(1, n_max + 1))[:, None]
    out = diag * w
    out[1:] += root * flipped[:-1]
    out[:-1] += root * flipped[1:]
    leakage = float(math.sqrt(n_max + 1) * np.linalg.norm(flipped[-1]))
    return out.reshape(-1), leakage


def _lowest(params: ModelParams, n_max: int, parity, k: int) -> NDArray[np.float64]:
    if parity == "all":
        H = build_hamiltonian(params, n_max)
    else:
        H, _ = build_parity_block(params, n_max, parity)
    return np.linalg.eigvalsh(H)[:k]


def converged_levels(params: ModelParams, parity="all", trunc: TruncationSpec | None = None) -> tuple[NDArray[np.float64], int]:
    """Lowest ``trunc.k`` eigenvalues, doubling n_max until they stop moving.

    Returns the eigenvalues at the final truncation and that truncation.
    """
    trunc = trunc or TruncationSpec()
    n = trunc.n_max
    prev = _lowest(params, n, parity, trunc.k)
    while True:
        n2 = 2 * n
        if n2 > trunc.n_cap:
            raise NumericalFailure(
                f"lowest {trunc.k} levels not stable to {trunc.tol:g} below n_max cap {trunc.n_cap}"
            )
        cur = _lowest(params, n2, parity, trunc.k)
        shift = float(np.max(np.abs(cur - prev)))
        if shift < trunc.tol:
            return cur, n2
        log.debug("n_max %d -> %d moved levels by %.3e", n, n2, shift)
        n, prev = n2, cur


def levels_up_to(params: ModelParams, e_max: float, parity="all", n_max: int = DEFAULT_NMAX,
                 tol: float = 1e-9) -> NDArray[np.float64]:
    """Every converged eigenvalue not above ``e_max``."""
    # one level past e_max keeps the doubling test honest at the top of the window
    k = int((_lowest(params, n_max, parity, 4 * (n_max + 1)) <= e_max).sum()) + 1
    levels, _ = converged_levels(params, parity, TruncationSpec(n_max=max(n_max, k), tol=tol, k=k))
    return levels[levels <= e_max]


def _parity_list(parity) -> list:
    if parity in ("both", None):
        return [Parity.EVEN, Parity.ODD]
    if parity == "all":
        return ["all"]
    return [Parity.parse(parity)]


def _sweep_point(g: float, template: ModelParams, ratio, trunc: TruncationSpec, parity) -> list[SpectrumRecord]:
    params = template.with_total_coupling(g, ratio)
    records = []
    for p in _parity_list(parity):
        levels, _ = converged_levels(params, p, trunc)
        records.extend(SpectrumRecord(g, p, i, float(e), "fock") for i, e in enumerate(levels))
    return records


def spectrum_sweep(template: ModelParams, g_grid, trunc: TruncationSpec | None = None, parity="both",
                   ratio: tuple[float, float] | None = None, workers: int | None = None) -> list[SpectrumRecord]:
    """Converged low-lying spectrum at each total coupling of ``g_grid``.

    The coupling ratio g1:g2 is taken from ``ratio`` or, failing that,
    from the template.  Records come out ordered by g (ascending), then
    parity (even first), then level.
    """
    grid = sorted(float(g) for g in g_grid)
    if not grid:
        raise ConditionError("empty coupling grid")
    if ratio is None and template.g == 0:
        raise ConditionError("template has zero coupling; pass an explicit g1:g2 ratio")
    fn = functools.partial(_sweep_point, template=template, ratio=ratio,
                           trunc=trunc or TruncationSpec(), parity=parity)
    return [r for chunk in ordered_map(fn, grid, workers) for r in chunk]
