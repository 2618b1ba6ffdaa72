import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrabi import fock
from qrabi.errors import ConditionError, NumericalFailure
from qrabi.model import BasisState, ModelParams, Parity, Qubit, basis, bare_energy

E, G = Qubit.E, Qubit.G
ASYM = ModelParams(1, 0.4, 0.3, 0.75, 0.25)

params_st = st.builds(
    ModelParams,
    st.just(1.0),
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.floats(0, 2),
    st.floats(0, 2),
)


def idx(label):
    return BasisState.parse(label).index


def test_decoupled_diagonal():
    H = fock.build_hamiltonian(ModelParams(1, 1.4, 0.4, 0, 0), 0)
    np.testing.assert_allclose(H, np.diag([1.8, 1.0, -1.0, -1.8]), atol=1e-15)


def test_single_photon_elements():
    H = fock.build_hamiltonian(ModelParams(1, 0.4, 0.3, 0.7, 0.2), 3)
    assert H[idx("1,g,g"), idx("0,e,g")] == 0.7
    assert H[idx("1,e,e"), idx("0,e,g")] == 0.2
    assert H[idx("3,e,g"), idx("2,e,e")] == pytest.approx(0.2 * np.sqrt(3))


@given(params_st, st.integers(0, 12))
@settings(max_examples=40, deadline=None)
def test_exact_symmetry_and_parity_commutator(p, n_max):
    H = fock.build_hamiltonian(p, n_max)
    assert np.array_equal(H, H.T)
    R = np.diag(fock.parity_diagonal(n_max)).astype(float)
    assert np.array_equal(H @ R - R @ H, np.zeros_like(H))


@given(params_st)
@settings(max_examples=25, deadline=None)
def test_block_completeness(p):
    n_max = 20
    full = np.linalg.eigvalsh(fock.build_hamiltonian(p, n_max))
    even, _ = fock.build_parity_block(p, n_max, "even")
    odd, _ = fock.build_parity_block(p, n_max, "odd")
    union = np.sort(np.concatenate([np.linalg.eigvalsh(even), np.linalg.eigvalsh(odd)]))
    assert np.abs(union - full).max() <= 1e-12 * max(1.0, np.abs(full).max())


def test_even_block_states():
    _, states = fock.build_parity_block(ASYM, 1, "even")
    assert [str(s) for s in states] == ["|0,e,e>", "|0,g,g>", "|1,e,g>", "|1,g,e>"]


def test_odd_block_matches_displayed_chain_matrix():
    # the N=2 closure matrix is H - 2 restricted to
    # {|0,eg>, |0,ge>, |1,gg>, |1,ee>, |2,eg>, |2,ge>} with g1 = g2 = g/2
    d1, d2, g = 0.5, 0.3, 0.9
    h, r = g / 2, np.sqrt(2) * g / 2
    literal = np.array([
        [d1 - d2 - 2, 0, h, h, 0, 0],
        [0, d2 - d1 - 2, h, h, 0, 0],
        [h, h, -d1 - d2 - 1, 0, r, r],
        [h, h, 0, d2 + d1 - 1, r, r],
        [0, 0, r, r, d1 - d2, 0],
        [0, 0, r, r, 0, d2 - d1],
    ])
    block, states = fock.build_parity_block(ModelParams(1, d1, d2, h, h), 4, "odd")
    order = [states.index(BasisState.parse(s)) for s in ("0,e,g", "0,g,e", "1,g,g", "1,e,e", "2,e,g", "2,g,e")]
    np.testing.assert_allclose(block[np.ix_(order, order)] - 2 * np.eye(6), literal, atol=1e-15)


def test_odd_block_first_rows():
    p = ModelParams(1, 0.5, 0.3, 0.6, 0.2)
    block, states = fock.build_parity_block(p, 3, "odd")
    assert [str(s) for s in states[:4]] == ["|0,e,g>", "|0,g,e>", "|1,e,e>", "|1,g,g>"]
    np.testing.assert_allclose(np.diag(block)[:4], [0.2, -0.2, 1.8, 0.2])
    # |0,eg> couples to |1,gg> through g1 and to |1,ee> through g2
    np.testing.assert_allclose(block[0, :4], [0.2, 0, 0.2, 0.6])
    np.testing.assert_allclose(block[1, :4], [0, -0.2, 0.6, 0.2])


@pytest.mark.parametrize("matrix, expected", [
    (np.eye(4), [1, 1, 1, 1]),
    (np.diag([1.8, 1.0, -1.0, -1.8]), [-1.8, -1.0, 1.0, 1.8]),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), [-1, 1]),
])
def test_eigen_sym_examples(matrix, expected):
    w, _ = fock.eigen_sym(matrix)
    np.testing.assert_allclose(w, expected, atol=1e-14)


def test_eigen_sym_residual_and_orthonormality():
    A = fock.build_hamiltonian(ASYM, 30)
    w, V = fock.eigen_sym(A)
    assert np.all(np.diff(w) >= 0)
    res = np.linalg.norm(A @ V - V * w, axis=0)
    assert np.all(res <= 1e-10 * np.maximum(1, np.abs(w)))
    assert np.abs(V.T @ V - np.eye(len(w))).max() < 1e-10
    lead = V[np.argmax(np.abs(V), axis=0), np.arange(len(w))]
    assert np.all(lead > 0)


def test_eigen_sym_rejects_asymmetric():
    with pytest.raises(ConditionError):
        fock.eigen_sym(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_apply_h_decoupled_ground():
    p = ModelParams(1, 1.4, 0.4, 0, 0)
    v = np.zeros(4 * 3)
    v[idx("0,g,g")] = 1
    Hv, leak = fock.apply_h(p, v, 2)
    np.testing.assert_allclose(Hv, -1.8 * v)
    assert leak == 0


@given(params_st, st.integers(1, 10), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_apply_h_matches_matrix(p, n_max, seed):
    v = np.random.default_rng(seed).normal(size=4 * (n_max + 1))
    Hv, _ = fock.apply_h(p, v, n_max)
    H = fock.build_hamiltonian(p, n_max)
    np.testing.assert_allclose(Hv, H @ v, atol=1e-12 * max(1.0, np.abs(H).max()) * np.abs(v).sum())
    assert np.linalg.norm(H @ (v / np.linalg.norm(v))) <= np.linalg.norm(H, "fro") + 1e-12


def test_apply_h_reports_leakage():
    p = ModelParams(1, 0.4, 0.3, 0.6, 0.2)
    v = np.zeros(4 * 3)
    v[idx("2,e,g")] = 1.0
    _, leak = fock.apply_h(p, v, 2)
    # |2,e,g> would feed |3,g,g> (g1) and |3,e,e> (g2) with amplitude sqrt(3)
    assert leak == pytest.approx(np.sqrt(3) * np.hypot(0.6, 0.2))


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=30, deadline=None)
def test_zero_coupling_closed_form(d1, d2):
    n_max = 15
    levels = np.linalg.eigvalsh(fock.build_hamiltonian(ModelParams(1, d1, d2, 0, 0), n_max))
    closed = np.sort([n + s1 * d1 + s2 * d2 for n in range(n_max + 1) for s1 in (1, -1) for s2 in (1, -1)])
    assert np.abs(levels - closed).max() <= 1e-12


def test_closed_form_uses_bare_energy():
    closed = sorted(bare_energy(s, 0.4, 0.3) for s in basis(3))
    np.testing.assert_allclose(np.linalg.eigvalsh(fock.build_hamiltonian(ModelParams(1, 0.4, 0.3), 3)), closed)


@pytest.mark.parametrize("ratio", [(1, 1), (3, 1), (1, 0)])
@pytest.mark.parametrize("g", [0.5, 1.5, 2.5])
def test_truncation_doubling_40_to_80(g, ratio):
    # 40 -> 80 is already tight for g <= 2.5; at g = 3 the default 60 -> 120 is used instead
    p = ModelParams(1, 2.0, 2.0).with_total_coupling(g, ratio)
    a = np.linalg.eigvalsh(fock.build_hamiltonian(p, 40))[:10]
    b = np.linalg.eigvalsh(fock.build_hamiltonian(p, 80))[:10]
    assert np.abs(a - b).max() < 1e-9


@pytest.mark.parametrize("d", [(2, 2), (0, 0), (2, 0), (1.4, 0.4)])
@pytest.mark.parametrize("ratio", [(1, 1), (3, 1), (1, 0)])
def test_truncation_doubling_default_at_g3(d, ratio):
    p = ModelParams(1, *d).with_total_coupling(3.0, ratio)
    a = np.linalg.eigvalsh(fock.build_hamiltonian(p, 60))[:10]
    b = np.linalg.eigvalsh(fock.build_hamiltonian(p, 120))[:10]
    assert np.abs(a - b).max() < 1e-9


def test_converged_levels_and_cap():
    levels, n_used = fock.converged_levels(ASYM, "even")
    assert len(levels) == 10 and n_used == 120
    with pytest.raises(NumericalFailure):
        fock.converged_levels(ModelParams(1, 0.4, 0.3, 3.0, 3.0), "all", fock.TruncationSpec(n_max=10, k=10, n_cap=40))
    with pytest.raises(ConditionError):
        fock.TruncationSpec(n_max=5, k=10)


def test_levels_up_to():
    levels = fock.levels_up_to(ASYM, 4.0, Parity.ODD)
    H, _ = fock.build_parity_block(ASYM, 120, "odd")
    ref = np.linalg.eigvalsh(H)
    np.testing.assert_allclose(levels, ref[ref <= 4.0], atol=1e-9)


def test_sweep_counts_and_order():
    recs = fock.spectrum_sweep(ASYM, [1.0, 0.5], fock.TruncationSpec(n_max=20, k=3))
    assert len(recs) == 12
    assert [r.g for r in recs] == [0.5] * 6 + [1.0] * 6
    assert [r.parity for r in recs[:6]] == [Parity.EVEN] * 3 + [Parity.ODD] * 3
    assert [r.level for r in recs[:3]] == [0, 1, 2]
    assert all(a.energy <= b.energy for a, b in zip(recs[:2], recs[1:3]))


def test_sweep_parallel_is_deterministic():
    grid = [0.2, 0.6, 1.0, 1.4]
    serial = fock.spectrum_sweep(ASYM, grid, fock.TruncationSpec(n_max=20, k=4), workers=1)
    parallel = fock.spectrum_sweep(ASYM, grid, fock.TruncationSpec(n_max=20, k=4), workers=2)
    assert serial == parallel


def test_sweep_needs_a_ratio():
    with pytest.raises(ConditionError):
        fock.spectrum_sweep(ModelParams(1, 0.4, 0.3), [1.0])
    with pytest.raises(ConditionError):
        fock.spectrum_sweep(ASYM, [])


def test_flat_line_spot_check():
    for g in (0.3, 1.7):
        p = ModelParams(1, 1.4, 0.4).with_total_coupling(g, (1, 1))
        levels = fock.levels_up_to(p, 1.5)
        assert np.min(np.abs(levels - 1.0)) < 1e-8
