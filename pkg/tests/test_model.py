import math

import pytest
from hypothesis import given, strategies as st

from qrabi.errors import ConditionError
from qrabi.model import (
    BasisState,
    ModelParams,
    Parity,
    Qubit,
    SpectrumRecord,
    basis,
    bare_energy,
    dimension,
    jc_conserved_c,
    normalize,
    parity_of,
    split_coupling,
)

E, G = Qubit.E, Qubit.G
qubits = st.sampled_from([E, G])
states = st.builds(BasisState, st.integers(0, 200), qubits, qubits)


@pytest.mark.parametrize("label, expected", [("|0,e,e>", Parity.EVEN), ("|0,e,g>", Parity.ODD), ("|1,e,g>", Parity.EVEN)])
def test_parity_examples(label, expected):
    assert parity_of(BasisState.parse(label)) is expected


@pytest.mark.parametrize("state, c", [(BasisState(0, G, G), 0), (BasisState(4, E, G), 5), (BasisState(3, E, E), 5)])
def test_conserved_c_examples(state, c):
    assert jc_conserved_c(state) == c


def test_normalize_rescales_by_omega():
    p = normalize({"omega": 2, "delta1": 0.8, "delta2": 0.6, "g1": 1, "g2": 1})
    assert (p.omega, p.delta1, p.delta2, p.g1, p.g2) == (1.0, 0.4, 0.3, 0.5, 0.5)
    assert (p.g, p.gprime) == (1.0, 0.0)


def test_normalize_identity_and_derived_couplings():
    p = normalize(ModelParams(1, 1.4, 0.4, 0.5, 0.5))
    assert p == ModelParams(1, 1.4, 0.4, 0.5, 0.5) and p.g == 1.0 and p.gprime == 0.0
    q = normalize({"delta1": 0.4, "delta2": 0.3, "g1": 0.75, "g2": 0.25})
    assert (q.g, q.gprime) == (1.0, 0.5)


@pytest.mark.parametrize("raw", [{"omega": 0}, {"omega": -1.0}, {"omega": math.inf}])
def test_normalize_rejects_bad_omega(raw):
    with pytest.raises(ConditionError):
        normalize(raw)


def test_normalize_rejects_unknown_keys():
    with pytest.raises(ConditionError):
        normalize({"delta": 1.0})


def test_params_validation():
    with pytest.raises(ConditionError):
        ModelParams(1, 0, 0, -0.1, 0)
    with pytest.raises(ConditionError):
        ModelParams(0, 0, 0, 0, 0)


def test_index_bijection():
    states_ = basis(7)
    assert [s.index for s in states_] == list(range(dimension(7)))
    assert all(BasisState.from_index(i) == s for i, s in enumerate(states_))


def test_canonical_order_within_photon_number():
    assert [str(s) for s in basis(0)] == ["|0,e,e>", "|0,e,g>", "|0,g,e>", "|0,g,g>"]


@given(states)
def test_parity_flips_with_photon_number(s):
    assert parity_of(s.shifted(1)) == -parity_of(s)
    assert int(parity_of(s)) ** 2 == 1


@given(states)
def test_conserved_c_increments(s):
    assert jc_conserved_c(s.shifted(1)) == jc_conserved_c(s) + 1
    if s.q1 is G:
        assert jc_conserved_c(BasisState(s.n, E, s.q2)) == jc_conserved_c(s) + 1
    if s.q2 is G:
        assert jc_conserved_c(BasisState(s.n, s.q1, E)) == jc_conserved_c(s) + 1


@given(states)
def test_index_roundtrip(s):
    assert BasisState.from_index(s.index) == s
    assert BasisState.parse(str(s)) == s


def test_bare_energy():
    assert bare_energy(BasisState(2, E, G), 1.4, 0.4) == pytest.approx(3.0)


def test_with_total_coupling_keeps_ratio():
    p = ModelParams(1, 0.4, 0.3, 0.75, 0.25).with_total_coupling(2.0)
    assert (p.g1, p.g2) == (1.5, 0.5)
    assert split_coupling(1.2, (1, 1)) == (0.6, 0.6)
    with pytest.raises(ConditionError):
        split_coupling(1.0, (0, 0))


def test_parity_parse():
    assert Parity.parse("even") is Parity.EVEN and Parity.parse(-1) is Parity.ODD
    with pytest.raises(ConditionError):
        Parity.parse("both")


def test_spectrum_record_validation():
    r = SpectrumRecord(0.5, Parity.ODD, 0, 1.0, "fock")
    assert r.parity_label == "odd"
    assert SpectrumRecord(0.5, "all", 0, 1.0, "fock").parity_label == "all"
    with pytest.raises(ConditionError):
        SpectrumRecord(0.5, Parity.ODD, 0, 1.0, "exact")
