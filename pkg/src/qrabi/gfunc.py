"""Analytic spectrum of the two-qubit Rabi model from a G-function.

Each parity sector maps to a two-level problem H+ or H- whose
eigenfunctions are expanded in three ways: around the displaced vacua
of the two Bogoliubov operators (representations A and B) and in the
plain number basis (representation C).  Matching A to B at beta1 and B
to C at beta2 gives an 8x8 linear system M(E)e = 0; its determinant
G(E) vanishes exactly at the eigenvalues.

Conventions used throughout:

* g = g1 + g2 and g' = g1 - g2.  Even parity is H+, odd parity is H-
  (delta1 replaced by -delta1).
* A-series: A_j(beta) = exp(-g beta) sum_m a_{j,m} (beta + g)^m
* B-series: B_j(beta) = exp(-g' beta) sum_m b_{j,m} (beta + g')^m
* C-series: C_j(beta) = sum_m c_{j,m} beta^m
* Unknowns of M, in column order: b1, b2, b4, a1, a2, a3, c1, c2 (the
  free initial coefficients of each representation).

Series are summed through scaled terms t_m = coeff_m x^m, which stay
bounded inside the disk of convergence even when the raw coefficients
grow geometrically.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ._parallel import ordered_map
from .errors import ConditionError, MethodNotApplicable, NumericalFailure, PoleError, RadiusError
from .model import ModelParams, Parity, SpectrumRecord

log = logging.getLogger(__name__)

COLUMNS = ("b1", "b2", "b4", "a1", "a2", "a3", "c1", "c2")
FREE_INITS = {"A": ("a1", "a2", "a3"), "B": ("b1", "b2", "b4"), "C": ("c1", "c2")}
# component (0-based j) that each free initial value seeds
_SEED_SLOT = {"A": (0, 1, 2), "B": (0, 1, 3), "C": (0, 1)}

POLE_ZONE = 1e-6
SERIES_CAP = 500
STOP_REL = 1e-16
STOP_RUN = 10
MAX_MARGIN = 0.95
DEFAULT_STEP = 0.01
XTOL = 1e-10
DEDUPE_TOL = 1e-8
CONFIRM_REL = 1e-8
# roots sitting inside a pole zone get a looser singular-value check
ZONE_CONFIRM_REL = 1e-4
DIP_REL = 1e-2
REFINE_LEVELS = 6
_DEGENERATE_TOL = 1e-12


def h_plus_minus_matrix(params: ModelParams, n_max: int, sign: int) -> NDArray[np.float64]:
    """H+ (sign=+1) or H- (sign=-1) in the basis |e>|n>, |g>|n> interleaved by n."""
    if n_max < 1:
        raise ConditionError(f"n_max must be at least 1, got {n_max}")
    if sign not in (1, -1):
        raise ConditionError(f"sign must be +1 or -1, got {sign}")
    g, gp = params.g, params.gprime
    H = np.zeros((2 * (n_max + 1), 2 * (n_max + 1)))
    for n in range(n_max + 1):
        e, s = 2 * n, 2 * n + 1
        H[e, e] = H[s, s] = n
        H[e, s] = H[s, e] = params.delta2 + sign * params.delta1 * (-1) ** n
        if n < n_max:
            root = math.sqrt(n + 1)
            H[e, e + 2] = H[e + 2, e] = g * root
            H[s, s + 2] = H[s + 2, s] = gp * root
    return H


def parity_sign(parity) -> int:
    return 1 if Parity.parse(parity) is Parity.EVEN else -1


@dataclass(frozen=True)
class _Consts:
    d1: float
    d2: float
    g: float
    gp: float


def _consts(params: ModelParams, sign: int) -> _Consts:
    return _Consts(sign * params.delta1, params.delta2, params.g, params.gprime)


def radii(params: ModelParams) -> dict[str, float]:
    """Convergence radius of each series: distance from its centre to the nearest other singular point.

    Centres are -g (A), -g' (B) and 0 (C).  For g1 > g2 > 0 these are
    g - g', min(g - g', 2g') and g'.
    """
    g, gp = params.g, params.gprime
    return {
        "A": min(abs(g - gp), 2 * g, abs(g + gp)),
        "B": min(abs(g - gp), 2 * abs(gp), abs(g + gp)),
        "C": min(g, abs(gp)),
    }


def _centres(params: ModelParams) -> dict[str, float]:
    return {"A": -params.g, "B": -params.gprime, "C": 0.0}


def check_applicable(params: ModelParams, reps: str = "ABC"):
    """Raise MethodNotApplicable where a recurrence divisor vanishes."""
    g, gp, d1 = params.g, params.gprime, params.delta1
    tol = _DEGENERATE_TOL
    problems = []
    if "A" in reps or "C" in reps:
        if g <= tol:
            problems.append("g = 0")
    if "A" in reps or "B" in reps:
        if abs(g - gp) <= tol:
            problems.append("g2 = 0")
        if abs(g + gp) <= tol:
            problems.append("g1 = 0")
        if abs(d1) <= tol:
            problems.append("delta1 = 0")
    if "B" in reps or "C" in reps:
        if abs(gp) <= tol:
            problems.append("g1 = g2")
    if problems:
        raise MethodNotApplicable("G-function recurrences degenerate: " + ", ".join(sorted(set(problems))))


def poles(params: ModelParams, rep: str, m_max: int = SERIES_CAP) -> NDArray[np.float64]:
    """Energies m - g^2 (A) or m - g'^2 (B), m = 1..m_max, where the algebraic relation divides by zero."""
    shift = {"A": params.g**2, "B": params.gprime**2}.get(rep)
    if shift is None:
        return np.empty(0)
    return np.arange(1, m_max + 1) - shift


def near_pole(E: float, params: ModelParams, tol: float = POLE_ZONE) -> bool:
    for shift in (params.g**2, params.gprime**2):
        m = round(E + shift)
        if m >= 1 and abs(E + shift - m) < tol:
            return True
    return False


def _initial_terms(rep: str, c: _Consts, E, init) -> NDArray[np.float64]:
    t = np.zeros((len(E), 4))
    for k, slot in enumerate(_SEED_SLOT[rep]):
        t[:, slot] = init[:, k]
    if rep == "A":
        t[:, 3] = ((E + c.g**2) * t[:, 0] - c.d2 * t[:, 1]) / c.d1
    elif rep == "B":
        t[:, 2] = ((E + c.gp**2) * t[:, 1] - c.d2 * t[:, 0]) / c.d1
    else:
        t[:, 2], t[:, 3] = t[:, 0], t[:, 1]
    return t


def _close(rep: str, c: _Consts, E, t, m: int):
    """Fill the algebraically determined components of the m-th term (m >= 1)."""
    if rep == "A":
        t[:, 0] = (c.d1 * t[:, 3] + c.d2 * t[:, 1]) / (E - m + c.g**2)
    elif rep == "B":
        t[:, 1] = (c.d1 * t[:, 2] + c.d2 * t[:, 0]) / (E - m + c.gp**2)
    else:
        s = -1.0 if m % 2 else 1.0
        t[:, 2], t[:, 3] = s * t[:, 0], s * t[:, 1]


def _advance(rep: str, c: _Consts, E, x, t, tp, m: int) -> NDArray[np.float64]:
    """Term m+1 of the dependent components from terms m and m-1."""
    g, gp, d1, d2 = c.g, c.gp, c.d1, c.d2
    new = np.zeros_like(t)
    if rep == "A":
        num = {
            1: ((E - m + 2 * g * gp - g * g) * t[:, 1] - d1 * t[:, 2] - d2 * t[:, 0], gp - g),
            2: ((m - E + 3 * g * g) * t[:, 2] + d1 * t[:, 1] + d2 * t[:, 3], 2 * g),
            3: ((m - E + 2 * g * gp + g * g) * t[:, 3] + d1 * t[:, 0] + d2 * t[:, 2], g + gp),
        }
    elif rep == "B":
        num = {
            0: ((E - m + 2 * g * gp - gp * gp) * t[:, 0] - d1 * t[:, 3] - d2 * t[:, 1], g - gp),
            2: ((m - E + 2 * g * gp + gp * gp) * t[:, 2] + d1 * t[:, 1] + d2 * t[:, 3], g + gp),
            3: ((m - E + 3 * gp * gp) * t[:, 3] + d1 * t[:, 0] + d2 * t[:, 2], 2 * gp),
        }
    else:
        num = {
            0: ((E - m) * t[:, 0] - d2 * t[:, 1] - d1 * t[:, 3], g),
            1: ((E - m) * t[:, 1] - d2 * t[:, 0] - d1 * t[:, 2], gp),
        }
    for j, (value, den) in num.items():
        new[:, j] = x * value / (den * (m + 1)) - x * x * tp[:, j] / (m + 1)
    return new


@dataclass
class _SeriesResult:
    sums: NDArray[np.float64]      # (B, 4)
    m_used: NDArray[np.int64]      # (B,)
    last: NDArray[np.float64]      # (B,) largest |term| at the stopping index
    terms: list | None = None      # per-m (B, 4) arrays when kept


def _run_series(rep: str, c: _Consts, E, x, init, m_min: int = 0, cap: int = SERIES_CAP,
                fixed: int | None = None, keep: bool = False) -> _SeriesResult:
    """Sum a batch of series through their scaled terms.

    With ``fixed`` the first fixed+1 terms are summed regardless of size.
    Otherwise summation stops once STOP_RUN consecutive terms are each
    below STOP_REL of the largest running component sum; exhausting
    ``cap`` raises NumericalFailure.  Non-finite entries (exactly on a
    pole) are carried along as NaN.
    """
    E = np.asarray(E, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = _initial_terms(rep, c, E, np.asarray(init, dtype=float))
        tp = np.zeros_like(t)
        sums = np.zeros_like(t)
        run = np.zeros(len(E), dtype=int)
        done = np.zeros(len(E), dtype=bool)
        m_used = np.zeros(len(E), dtype=int)
        last = np.zeros(len(E))
        terms = [] if keep else None
        limit = cap if fixed is None else fixed
        for m in range(limit + 1):
            if m >= 1:
                _close(rep, c, E, t, m)
            if keep:
                terms.append(t.copy())
            live = ~done
            sums[live] += t[live]
            m_used[live] = m + 1
            size = np.abs(t).max(axis=1)
            last[live] = size[live]
            if fixed is None:
                small = size <= STOP_REL * np.abs(sums).max(axis=1)
                run = np.where(small, run + 1, 0)
                finished = (run >= STOP_RUN) & (m >= m_min)
                done |= finished | ~np.isfinite(sums).all(axis=1)
                if done.all():
                    break
            if m < limit:
                t, tp = _advance(rep, c, E, x, t, tp, m), t
        else:
            if fixed is None and not done.all():
                raise NumericalFailure(f"{rep}-series did not converge within {cap} terms")
    return _SeriesResult(sums, m_used, last, terms)


@dataclass(frozen=True)
class RecurrenceTable:
    """Coefficients of one representation generated from a single unit initial condition.

    ``coefficients[j, m]`` is the raw coefficient of component j+1 at
    order m.  ``converged`` is true when the table was grown adaptively
    until the series at ``x`` met the tail criterion; fixed-length
    tables carry ``converged=False``.
    """

    rep: str
    init_id: str
    E: float
    sign: int
    coefficients: NDArray[np.float64]
    m_used: int
    converged: bool
    radius: float
    x: float | None = None

    def __post_init__(self):
        if self.rep not in FREE_INITS:
            raise ConditionError(f"unknown representation {self.rep!r}")


def _parse_init(rep: str, init_id) -> str:
    names = FREE_INITS[rep]
    if isinstance(init_id, int) and not isinstance(init_id, bool):
        label = f"{rep.lower()}{init_id}"
    else:
        label = str(init_id).strip().lower().replace("_", "").replace(",0", "").replace("{", "").replace("}", "")
    if label not in names:
        raise ConditionError(f"{rep}-series initial condition must be one of {names}, got {init_id!r}")
    return label


def _check_pole(rep: str, params: ModelParams, E: float, m_max: int):
    ps = poles(params, rep, m_max)
    if ps.size and np.min(np.abs(E - ps)) < POLE_ZONE:
        m = int(np.argmin(np.abs(E - ps))) + 1
        raise PoleError(f"E={E} is within {POLE_ZONE:g} of the {rep}-series pole at m={m}")


def _recurrence(rep: str, params: ModelParams, E: float, init_id, m_max: int, sign: int, x: float | None):
    check_applicable(params, rep)
    label = _parse_init(rep, init_id)
    c = _consts(params, sign)
    init = np.zeros((1, len(FREE_INITS[rep])))
    init[0, FREE_INITS[rep].index(label)] = 1.0
    E_arr = np.array([float(E)])
    radius = radii(params)[rep]
    if x is None:
        if m_max < 0:
            raise ConditionError(f"m_max must be non-negative, got {m_max}")
        _check_pole(rep, params, E, m_max)
        res = _run_series(rep, c, E_arr, np.ones(1), init, fixed=m_max, keep=True)
        coeffs = np.stack([t[0] for t in res.terms], axis=1)
        return RecurrenceTable(rep, label, float(E), sign, coeffs, m_max, False, radius)
    if radius == 0 or abs(x) / radius >= MAX_MARGIN:
        raise RadiusError(f"|x|={abs(x):.6g} is not inside 0.95 of the {rep}-series radius {radius:.6g}")
    _check_pole(rep, params, E, m_max)
    res = _run_series(rep, c, E_arr, np.array([float(x)]), init, cap=m_max, keep=True)
    n = int(res.m_used[0])
    powers = float(x) ** np.arange(n) if x != 0 else np.r_[1.0, np.zeros(n - 1)]
    with np.errstate(divide="ignore", invalid="ignore"):
        coeffs = np.stack([t[0] for t in res.terms[:n]], axis=1) / np.where(powers == 0, 1.0, powers)
    return RecurrenceTable(rep, label, float(E), sign, coeffs, n - 1, True, radius, float(x))


def recurrence_A(params: ModelParams, E: float, init_id, m_max: int = SERIES_CAP, sign: int = 1,
                 x: float | None = None) -> RecurrenceTable:
    """Coefficients a_{j,m} with the chosen free initial value (a1, a2 or a3) set to one.

    Without ``x`` exactly m_max + 1 orders are generated.  With ``x`` the
    table grows until the series at x converges (m_max is then the cap).
    ``sign=-1`` selects H-.
    """
    return _recurrence("A", params, E, init_id, m_max, sign, x)


def recurrence_B(params: ModelParams, E: float, init_id, m_max: int = SERIES_CAP, sign: int = 1,
                 x: float | None = None) -> RecurrenceTable:
    """Coefficients b_{j,m}; free initial values b1, b2, b4."""
    return _recurrence("B", params, E, init_id, m_max, sign, x)


def recurrence_C(params: ModelParams, E: float, init_id, m_max: int = SERIES_CAP, sign: int = 1,
                 x: float | None = None) -> RecurrenceTable:
    """Coefficients c_{j,m}; free initial values c1, c2."""
    return _recurrence("C", params, E, init_id, m_max, sign, x)


def series_eval(coeffs, x: float, displacement: float = 0.0, radius: float | None = None,
                full_output: bool = False):
    """exp(displacement) * sum_m coeff_m x^m with adaptive truncation.

    ``coeffs`` is a RecurrenceTable, a 1-D coefficient sequence or a
    (components, orders) array.  The sum stops after STOP_RUN consecutive
    terms below STOP_REL of the running sum; running out of coefficients
    first raises NumericalFailure.  With ``full_output`` the return is
    (value, tail_bound, terms_used), the tail bound being the geometric
    estimate |last term| mu / (1 - mu) with mu = |x| / radius.
    """
    if isinstance(coeffs, RecurrenceTable):
        radius = coeffs.radius if radius is None else radius
        data = coeffs.coefficients
    else:
        data = np.asarray(coeffs, dtype=float)
    vector = data.ndim == 2
    data = np.atleast_2d(data)
    mu = MAX_MARGIN
    if radius is not None:
        if not radius > 0 or abs(x) / radius >= MAX_MARGIN:
            raise RadiusError(f"|x|={abs(x):.6g} is not inside 0.95 of the radius {radius}")
        mu = abs(x) / radius
    total = np.zeros(data.shape[0])
    power, run, used, last = 1.0, 0, 0, 0.0
    for m in range(data.shape[1]):
        term = data[:, m] * power
        total += term
        used, last = m + 1, float(np.abs(term).max())
        run = run + 1 if last <= STOP_REL * np.abs(total).max() else 0
        if run >= STOP_RUN:
            break
        power *= x
    else:
        raise NumericalFailure(f"series not converged after {data.shape[1]} coefficients")
    scale = math.exp(displacement)
    value = total * scale if vector else float(total[0] * scale)
    if full_output:
        return value, last * mu / (1 - mu) * scale, used
    return value


@dataclass(frozen=True)
class BetaChoice:
    beta1: float
    beta2: float
    margins: dict = field(default_factory=dict)

    @property
    def worst(self) -> float:
        return max(self.margins.values())


def _margins(params: ModelParams, beta1: float, beta2: float) -> dict[str, float]:
    r, c = radii(params), _centres(params)
    return {
        "A@beta1": abs(beta1 - c["A"]) / r["A"],
        "B@beta1": abs(beta1 - c["B"]) / r["B"],
        "B@beta2": abs(beta2 - c["B"]) / r["B"],
        "C@beta2": abs(beta2 - c["C"]) / r["C"],
    }


def _minimax(c1: float, r1: float, c2: float, r2: float) -> tuple[float, float]:
    """Point minimizing max(|b - c1|/r1, |b - c2|/r2) and that margin."""
    return c1 + (c2 - c1) * r1 / (r1 + r2), abs(c2 - c1) / (r1 + r2)


def choose_betas(params: ModelParams) -> BetaChoice:
    """Matching points inside every relevant disk of convergence.

    Defaults are beta1 = -(g+g')/2 and beta2 = -g'/2.  A default whose
    margin reaches 0.95 is replaced by the point that minimizes the
    larger of its two margins; if even that fails the parameter point is
    out of reach.
    """
    check_applicable(params)
    r, c = radii(params), _centres(params)
    beta1 = -(params.g + params.gprime) / 2
    beta2 = -params.gprime / 2
    m = _margins(params, beta1, beta2)
    if max(m["A@beta1"], m["B@beta1"]) >= MAX_MARGIN:
        beta1, best = _minimax(c["A"], r["A"], c["B"], r["B"])
        if best >= MAX_MARGIN:
            raise MethodNotApplicable(f"no beta1 inside both A and B disks (best margin {best:.3f})")
    if max(m["B@beta2"], m["C@beta2"]) >= MAX_MARGIN:
        beta2, best = _minimax(c["B"], r["B"], c["C"], r["C"])
        if best >= MAX_MARGIN:
            raise MethodNotApplicable(f"no beta2 inside both B and C disks (best margin {best:.3f})")
    return BetaChoice(beta1, beta2, _margins(params, beta1, beta2))


def _as_betas(params: ModelParams, betas) -> BetaChoice:
    if betas is None:
        return choose_betas(params)
    if isinstance(betas, BetaChoice):
        b1, b2 = betas.beta1, betas.beta2
    else:
        b1, b2 = (float(b) for b in betas)
    check_applicable(params)
    choice = BetaChoice(b1, b2, _margins(params, b1, b2))
    if choice.worst >= MAX_MARGIN:
        bad = ", ".join(f"{k}={v:.3f}" for k, v in choice.margins.items() if v >= MAX_MARGIN)
        raise RadiusError(f"matching points outside the convergence disks: {bad}")
    return choice


@dataclass(frozen=True)
class GSample:
    """The matching matrix at one trial energy.

    ``M`` is column-scaled when requested (``scales`` holds the divisors,
    all ones otherwise); ``detM`` and the singular values refer to it.
    """

    E: float
    parity: Parity
    M: NDArray[np.float64]
    detM: float
    sigma_min: float
    sigma_max: float
    pole_flag: bool
    scales: NDArray[np.float64]

    @property
    def relative_sigma(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else math.nan


def _series_values(rep, c, E, xs, disp, n_init, m_min):
    """Series values for every free initial condition: (len(E), 4, n_init) per point in ``xs``."""
    nE = len(E)
    eye = np.eye(n_init)
    E_rep = np.repeat(E, n_init)
    init = np.tile(eye, (nE, 1))
    out = []
    for x, d in zip(xs, disp):
        res = _run_series(rep, c, E_rep, np.full(nE * n_init, x), init, m_min=m_min)
        out.append(math.exp(d) * res.sums.reshape(nE, n_init, 4).transpose(0, 2, 1))
    return out


def _min_terms(E, params: ModelParams) -> int:
    # every pole below the highest trial energy must appear in the summed terms
    return int(math.ceil(float(np.max(E)) + max(params.g**2, params.gprime**2))) + 2 if len(E) else 0


def _raw_matrices(E, params: ModelParams, betas: BetaChoice, sign: int) -> NDArray[np.float64]:
    c = _consts(params, sign)
    g, gp = params.g, params.gprime
    b1, b2 = betas.beta1, betas.beta2
    m_min = max(0, _min_terms(E, params))
    (A1,) = _series_values("A", c, E, [b1 + g], [-g * b1], 3, m_min)
    B1, B2 = _series_values("B", c, E, [b1 + gp, b2 + gp], [-gp * b1, -gp * b2], 3, m_min)
    (C2,) = _series_values("C", c, E, [b2], [0.0], 2, m_min)
    M = np.zeros((len(E), 8, 8))
    M[:, :4, 0:3] = -B1
    M[:, :4, 3:6] = A1
    M[:, 4:, 0:3] = B2
    M[:, 4:, 6:8] = -C2
    return M


def _analyse(M: NDArray[np.float64], scale: bool):
    n = M.shape[0]
    finite = np.isfinite(M).all(axis=(1, 2))
    scales = np.ones((n, 8))
    if scale:
        col = np.abs(M).max(axis=1)
        scales = np.where(finite[:, None] & (col > 0), col, 1.0)
    Ms = M / scales[:, None, :]
    det = np.full(n, np.nan)
    svals = np.full((n, 8), np.nan)
    if finite.any():
        det[finite] = np.linalg.det(Ms[finite])
        svals[finite] = np.linalg.svd(Ms[finite], compute_uv=False)
    return Ms, scales, det, svals


def assemble_M(E: float, params: ModelParams, betas=None, parity="even", scale_columns: bool = True) -> GSample:
    """Matching matrix M(E) for one parity sector.

    Rows 0-3 are A minus B at beta1, rows 4-7 are B minus C at beta2;
    columns follow COLUMNS.  Near a pole the sample is still produced,
    with ``pole_flag`` set.
    """
    parity = Parity.parse(parity)
    betas = _as_betas(params, betas)
    E_arr = np.array([float(E)])
    M = _raw_matrices(E_arr, params, betas, parity_sign(parity))
    Ms, scales, det, svals = _analyse(M, scale_columns)
    return GSample(float(E), parity, Ms[0], float(det[0]), float(svals[0, -1]), float(svals[0, 0]),
                   near_pole(float(E), params), scales[0])


def _pole_count(E, params: ModelParams) -> NDArray[np.int64]:
    # number of A- and B-series poles strictly below E
    E = np.asarray(E, dtype=float)
    count = np.zeros(E.shape, dtype=int)
    for shift in (params.g**2, params.gprime**2):
        count += np.maximum(0, np.ceil(E + shift).astype(int) - 1)
    return count


class _Evaluator:
    """Regularized sign of G(E) and relative smallest singular value, batched over E."""

    def __init__(self, params: ModelParams, betas: BetaChoice, sign: int):
        self.params, self.betas, self.sign = params, betas, sign
        self.calls = 0

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        if E.size == 0:
            return np.empty(0), np.empty(0)
        self.calls += E.size
        M = _raw_matrices(E, self.params, self.betas, self.sign)
        _, _, det, svals = _analyse(M, True)
        # each pole flips the sign of det M once; undo that so only roots change it
        sgn = np.sign(det) * np.where(_pole_count(E, self.params) % 2, -1.0, 1.0)
        rel = svals[:, -1] / svals[:, 0]
        return sgn, rel


def _grid(lo: float, hi: float, step: float, pole_list: NDArray[np.float64]):
    """Scan points with pole zones cut out; returns points and a flag marking zone intervals."""
    count = int(math.floor((hi - lo) / step + 1e-9))
    pts = lo + step * np.arange(count + 1)
    if pts[-1] < hi - 1e-12:
        pts = np.append(pts, hi)
    inside = pole_list[(pole_list > lo - POLE_ZONE) & (pole_list < hi + POLE_ZONE)]
    if inside.size:
        keep = np.min(np.abs(pts[:, None] - inside[None, :]), axis=1) >= POLE_ZONE
        edges = np.concatenate([inside - POLE_ZONE, inside + POLE_ZONE])
        edges = edges[(edges >= lo) & (edges <= hi)]
        pts = np.union1d(pts[keep], edges)
    zone = np.zeros(max(len(pts) - 1, 0), dtype=bool)
    for p in inside:
        zone |= (pts[:-1] <= p) & (pts[1:] >= p)
    return pts, zone


def _bisect(ev: _Evaluator, a, b, sa, xtol: float):
    a, b, sa = np.array(a, dtype=float), np.array(b, dtype=float), np.array(sa, dtype=float)
    while a.size and np.max(b - a) > xtol:
        mid = 0.5 * (a + b)
        sm, _ = ev(mid)
        same = sm == sa
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    return 0.5 * (a + b)


def _refine_dips(ev: _Evaluator, pts, sgn, rel, zone):
    """Extra brackets around singular-value dips that show no sign change (narrow avoided crossings)."""
    brackets = []
    for i in range(1, len(pts) - 1):
        if zone[i - 1] or zone[i]:
            continue
        if not (rel[i] < DIP_REL and rel[i] <= rel[i - 1] and rel[i] <= rel[i + 1]):
            continue
        if sgn[i - 1] != sgn[i] or sgn[i] != sgn[i + 1]:
            continue
        lo, hi = pts[i - 1], pts[i + 1]
        for level in range(1, REFINE_LEVELS + 1):
            sub = np.linspace(lo, hi, 2 ** (level + 1) + 1)
            s, _ = ev(sub)
            change = np.nonzero(s[:-1] != s[1:])[0]
            if change.size:
                brackets.extend((sub[k], sub[k + 1], s[k]) for k in change)
                break
    return brackets


def swap_qubits(params: ModelParams) -> ModelParams:
    """Relabel the qubits; the spectrum and every parity sector are unchanged."""
    return ModelParams(params.omega, params.delta2, params.delta1, params.g2, params.g1)


def oriented(params: ModelParams) -> ModelParams:
    """Equivalent parameters with g1 >= g2.

    For g1 < g2 the A and B disks never overlap enough to match the
    series, so the qubits are relabelled instead.
    """
    return swap_qubits(params) if params.g1 < params.g2 else params


def find_roots(params: ModelParams, parity, E_range, betas=None, step: float = DEFAULT_STEP,
               xtol: float = XTOL) -> list[float]:
    """Zeros of G(E) = det M(E) in E_range, ascending.

    The range is scanned every ``step`` with 1e-6 zones around the poles
    cut out.  Sign changes are bisected to ``xtol``, roots closer than
    1e-8 merged, and each kept only if the column-scaled M has
    sigma_min < 1e-8 sigma_max.  A sign change across a pole zone
    means a root on the pole itself.

    Without explicit ``betas`` the qubits are relabelled when g1 < g2
    (see :func:`oriented`); explicit matching points refer to the
    parameters as given.
    """
    lo, hi = (float(v) for v in E_range)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConditionError(f"E range must be finite, got {E_range}")
    if betas is None:
        params = oriented(params)
    check_applicable(params)
    parity = Parity.parse(parity)
    betas = _as_betas(params, betas)
    if hi <= lo:
        return []
    ev = _Evaluator(params, betas, parity_sign(parity))
    pole_list = np.concatenate([poles(params, "A"), poles(params, "B")])
    pts, zone = _grid(lo, hi, step, pole_list)
    sgn, rel = ev(pts)

    brackets, zone_roots = [], []
    for i in np.nonzero(sgn[:-1] != sgn[1:])[0]:
        if zone[i]:
            if min(rel[i], rel[i + 1]) < ZONE_CONFIRM_REL:
                zone_roots.append(0.5 * (pts[i] + pts[i + 1]))
            else:
                log.warning("sign change across the pole zone at E=%.8f not confirmed", 0.5 * (pts[i] + pts[i + 1]))
        else:
            brackets.append((pts[i], pts[i + 1], sgn[i]))
    brackets.extend(_refine_dips(ev, pts, sgn, rel, zone))

    roots = list(zone_roots)
    if brackets:
        a, b, sa = zip(*brackets)
        cand = _bisect(ev, a, b, sa, xtol)
        _, crel = ev(cand)
        for r, s in zip(cand, crel):
            if s < CONFIRM_REL:
                roots.append(float(r))
            else:
                log.debug("discarding sign change at E=%.10f (relative sigma %.2e)", r, s)
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > DEDUPE_TOL:
            merged.append(r)
    return merged


def representation_values(E: float, params: ModelParams, parity, coefficients, beta: float) -> dict[str, NDArray]:
    """Wavefunction components at ``beta`` from every representation whose disk contains it.

    ``coefficients`` are the unknowns of M (order COLUMNS, unscaled).
    """
    sign = parity_sign(parity)
    c = _consts(params, sign)
    e = np.asarray(coefficients, dtype=float)
    r, centre = radii(params), _centres(params)
    shift = {"A": params.g, "B": params.gprime, "C": 0.0}
    cols = {"A": e[3:6], "B": e[0:3], "C": e[6:8]}
    E_arr = np.array([float(E)])
    out = {}
    for rep in "ABC":
        x = beta - centre[rep]
        if abs(x) / r[rep] >= MAX_MARGIN:
            continue
        (vals,) = _series_values(rep, c, E_arr, [x], [-shift[rep] * beta], len(cols[rep]), _min_terms(E_arr, params))
        out[rep] = vals[0] @ cols[rep]
    return out


def null_coefficients(sample: GSample) -> NDArray[np.float64]:
    """Unscaled null vector of M (order COLUMNS), normalized to unit maximum."""
    _, _, Vt = np.linalg.svd(sample.M)
    e = Vt[-1] / sample.scales
    return e / e[np.argmax(np.abs(e))]


def _sweep_point(g, template, ratio, E_range, parities, betas, step):
    params = template.with_total_coupling(g, ratio)
    records = []
    for p in parities:
        roots = find_roots(params, p, E_range, betas, step)
        records.extend(SpectrumRecord(g, p, i, e, "gfunc") for i, e in enumerate(roots))
    return records


def gfunc_sweep(template: ModelParams, g_grid, E_range, parity="both", ratio=None, betas=None,
                step: float = DEFAULT_STEP, workers=None) -> list[SpectrumRecord]:
    """G-function roots over a coupling grid; levels count roots upward from the bottom of E_range."""
    grid = sorted(float(g) for g in g_grid)
    if not grid:
        raise ConditionError("empty coupling grid")
    if ratio is None and template.g == 0:
        raise ConditionError("template has zero coupling; pass an explicit g1:g2 ratio")
    parities = [Parity.EVEN, Parity.ODD] if parity in ("both", None) else [Parity.parse(parity)]
    fn = functools.partial(_sweep_point, template=template, ratio=ratio, E_range=tuple(E_range),
                           parities=parities, betas=betas, step=step)
    return [r for chunk in ordered_map(fn, grid, workers) for r in chunk]
