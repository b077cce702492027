import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcv.circuit import Circuit, Reset, parse_text, reset_tensor
from hybridcv.gates import conditional_displacement, displacement, single_qubit, squeeze
from hybridcv.hilbert import HybridState, RegisterLayout, basis_state, fidelity, from_vector

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]])


def small_circuit(n=20):
    lay = RegisterLayout.of(1, [n])
    c = Circuit(lay, metadata={"note": "demo"})
    c.append(single_qubit(0, H, "H"))
    c.append(conditional_displacement(0, 1, 1.0, n))
    c.append(displacement(n, -0.5, 1))
    c.append(squeeze(n, 0.2, 1))
    return c


def test_append_checks_wires_and_dims():
    c = Circuit(RegisterLayout.of(1, [10]))
    with pytest.raises(ValueError):
        c.append(displacement(12, 1.0, 1))
    with pytest.raises(IndexError):
        c.append(displacement(10, 1.0, 2))


def test_duration_counts_and_displacements():
    c = small_circuit()
    assert c.duration == pytest.approx(1.0 + 0.5 + 0.2)
    assert c.counts() == {"H": 1, "CD": 1, "D": 1, "S": 1}
    assert c.displacements(1) == [1.0, -0.5]
    assert c.max_displacement() == 1.0
    assert c.net_displacement_range(1) == 1.0
    assert len(c) == 4


def test_inverse_undoes_circuit():
    c = small_circuit(40)
    s = from_vector(c.layout, np.kron([0.6, 0.8j], np.eye(40)[0]))
    back = c.inverse().apply_to(c.apply_to(s))
    assert fidelity(back, s) == pytest.approx(1.0, abs=1e-9)


def test_unitary_matches_sequential_application():
    c = small_circuit(12)
    s = HybridState(c.layout, basis_state(c.layout, [1, 3]).amplitudes, leak_threshold=1.0)
    v = c.unitary() @ s.amplitudes
    # truncated displacements are sub-unitary; the state path renormalizes
    np.testing.assert_allclose(v / np.linalg.norm(v), c.apply_to(s).amplitudes, atol=1e-12)


def test_text_round_trip():
    c = small_circuit()
    text = c.to_text()
    assert text.splitlines()[0] == "# layout [Q,M20]"
    recs = parse_text(text)
    assert [r["name"] for r in recs] == ["H", "CD", "D", "S"]
    assert recs[1]["wires"] == (0, 1)
    assert recs[1]["params"] == {"beta": 1.0, "ctrl": 1.0}
    assert sum(r["duration"] for r in recs) == pytest.approx(c.duration)


def test_reset_on_product_state_keeps_weight_one():
    lay = RegisterLayout.of(2)
    c = Circuit(lay, [single_qubit(0, X, "X"), Reset((0,), "+")])
    out, info = c.run(basis_state(lay, [0, 1]))
    np.testing.assert_allclose(out.amplitudes, [0, 1, 0, 1] / np.sqrt(2), atol=1e-15)
    assert info.kept_weight == pytest.approx(1.0)
    with pytest.raises(ValueError):
        c.inverse()
    with pytest.raises(ValueError):
        c.unitary()
    assert Reset((0, 1)).describe() == "RESET 0,1 state=0 0"


def test_reset_refuses_modes():
    lay = RegisterLayout.of(0, [3])
    with pytest.raises(ValueError):
        Circuit(lay, [Reset((0,))]).run(basis_state(lay, [0]))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0))
def test_reset_tensor_weight_is_largest_schmidt_weight(p):
    # sqrt(p)|00> + sqrt(1-p)|11>: resetting either qubit keeps max(p, 1-p)
    psi = np.zeros((2, 2))
    psi[0, 0], psi[1, 1] = np.sqrt(p), np.sqrt(1 - p)
    out, w = reset_tensor(psi, [0])
    assert w == pytest.approx(max(p, 1 - p))
    assert np.linalg.norm(out) == pytest.approx(1.0)
    assert np.abs(out[1]).max() == 0.0
    with pytest.raises(ValueError):
        reset_tensor(psi, [0], min_weight=1.01)
