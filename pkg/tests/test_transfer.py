import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcv.gates import displacement, momentum_operator, position_operator, squeeze
from hybridcv.hilbert import HybridState, RegisterLayout, basis_state, fidelity, partial_trace
from hybridcv.qsp import Approx
from hybridcv.transfer import (GaussianLatticeSpec, RangeError, SincLatticeSpec, bits_of,
                               digits_of, encoded_input, encoded_target, gaussian_fock,
                               gaussian_packet, gaussian_wavepacket, lattice_superposition,
                               multimode_transfer, nonabelian_input, phi_basis_matrix, q_s,
                               reliable_range, sign_vectors, sinc_tail_bound, sinc_vacuum,
                               smst_abelian, smst_inverse, smst_nonabelian, suggest_cutoff,
                               transfer_demo)

SPEC = GaussianLatticeSpec.from_squeezing(1.0, 1.2, 4)


def test_spec_validation_and_conjugate():
    with pytest.raises(ValueError):
        GaussianLatticeSpec(1.0, 0.5)
    with pytest.raises(ValueError):
        GaussianLatticeSpec(1.0, 0.1, levels=1)
    s = GaussianLatticeSpec(1.0, 0.1, 4)
    assert s.delta_prime == pytest.approx(math.pi / 2)
    c = s.conjugate()
    assert c.sigma / c.delta == pytest.approx(0.1)
    assert SPEC.squeezing == pytest.approx(1.2)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0))
def test_coherent_packet_matches_poisson_amplitudes(x0):
    # sigma = 1/sqrt(2) is the vacuum width: <n|alpha> = exp(-alpha^2/2) alpha^n / sqrt(n!)
    n = 60
    alpha = x0 / math.sqrt(2)
    oracle = np.array([math.exp(-alpha**2 / 2) * alpha**k / math.sqrt(math.factorial(k))
                       for k in range(n)])
    np.testing.assert_allclose(gaussian_fock(x0, math.sqrt(0.5), n), oracle, atol=1e-10)


def test_squeezed_packet_matches_gate_construction():
    n, r, x0 = 120, 1.0, 1.3
    vac = basis_state(RegisterLayout.of(0, [n]), [0])
    ref = displacement(n, x0).apply_to(squeeze(n, r).apply_to(vac))
    packet = gaussian_wavepacket(x0, math.exp(-r) / math.sqrt(2), n)
    assert fidelity(packet, ref) == pytest.approx(1.0, abs=1e-10)


def test_packet_range_and_level_checks():
    with pytest.raises(RangeError):
        gaussian_wavepacket(reliable_range(20) + 0.1, 0.3, 20)
    with pytest.raises(ValueError):
        gaussian_packet(SPEC, -1, 40)
    with pytest.raises(ValueError):
        gaussian_packet(SPEC, 1.5, 40)


def test_lattice_superposition_mean_position():
    s = lattice_superposition(GaussianLatticeSpec(2.0, 0.2), {0: 1.0, 1: 1.0}, 80)
    v = s.amplitudes
    assert np.vdot(v, position_operator(80) @ v).real == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(1, 1), (2, 1), (2, 2), (4, 2), (6, 3), (8, 4)]), st.data())
def test_digits_reassemble_value(nm, data):
    n, m = nm
    x = data.draw(st.integers(0, 2**n - 1))
    k = n // m
    assert sum(b << (n - 1 - i) for i, b in enumerate(bits_of(x, n))) == x
    digits = digits_of(x, n, m)
    assert len(digits) == m
    assert sum(d * 2 ** (k * (m - 1 - j)) for j, d in enumerate(digits)) == x


def test_partition_must_divide():
    with pytest.raises(ValueError):
        digits_of(3, 3, 2)
    with pytest.raises(ValueError):
        multimode_transfer(3, 2, SPEC)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.05, 0.7))
def test_suggest_cutoff_monotone(extent, sigma):
    base = suggest_cutoff(extent, sigma)
    assert suggest_cutoff(extent + 1.0, sigma) >= base
    assert reliable_range(base) > extent


def test_range_error_for_small_cutoff():
    with pytest.raises(RangeError):
        smst_abelian(3, GaussianLatticeSpec(1.0, 0.2, 8), cutoff=20)


@pytest.mark.parametrize("x", range(4))
def test_basis_input_lands_on_its_lattice_site(x):
    spec = GaussianLatticeSpec(2.0, 0.15)
    n = 2
    amps = np.eye(4)[x]
    out = smst_abelian(n, spec, cutoff=120).apply_to(encoded_input(amps, spec, 1, 120))
    tgt = encoded_target(amps, spec, 1, 120)
    assert fidelity(out, tgt) > 0.999


def test_schedule_displacements_and_durations():
    c = multimode_transfer(4, 2, SPEC, Approx(16), cutoff=40)
    assert c.counts() == {"CD": 4, "R": 4}
    for w in (4, 5):
        assert sorted(c.displacements(w)) == [1.0, 2.0]
        assert c.net_displacement_range(w) == pytest.approx(3.0)
    assert c.duration == pytest.approx(2 * (3.0 + 2 * 16))
    inv = multimode_transfer(4, 2, SPEC, cutoff=40, inverse=True)
    assert inv.counts() == {"R_DG": 4, "CD": 4}
    assert sorted(inv.displacements(4)) == [-2.0, -1.0]


def test_round_trip_single_state():
    spec = GaussianLatticeSpec(1.0, 0.2, 4)
    v = np.array([0.1, 0.5j, -0.7, 0.3])
    st_in = encoded_input(v / np.linalg.norm(v), spec, 1)
    back = smst_inverse(2, spec).apply_to(smst_abelian(2, spec).apply_to(st_in))
    assert fidelity(back, st_in) > 0.999


def test_transfer_demo_conditioning():
    demo = transfer_demo([1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)], SPEC, 2)
    # the Bell input only populates levels 0 and 1 of the first mode
    assert set(demo.conditioned) == {0, 1}
    x = position_operator(80)
    assert demo.conditioned[0].expect(x).real == pytest.approx(0.0, abs=0.05)
    assert demo.conditioned[1].expect(x).real == pytest.approx(1.0, abs=0.05)
    assert demo.probabilities[0] == pytest.approx(demo.probabilities[1], abs=0.01)
    # frozen regression value of this configuration (cutoff 80)
    assert demo.fidelity == pytest.approx(0.94455, abs=5e-5)


# sinc lattice


def test_sign_vectors_and_peaks():
    assert sign_vectors(2) == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    assert [q_s(s, 1.0) for s in sign_vectors(1)] == [-0.5, 0.5]
    assert [q_s(s, 2.0) for s in sign_vectors(2)] == [-1.0, 3.0, -3.0, 1.0]
    # peaks tile the lattice (delta/2)(2k + 1) without repetition
    peaks = sorted(q_s(s, 1.0) for s in sign_vectors(3))
    assert peaks == [k + 0.5 for k in range(-4, 4)]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_phi_basis_unitary(n):
    u = phi_basis_matrix(n)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2**n), atol=1e-14)


def test_sinc_vacuum_position_spread():
    s = sinc_vacuum(1.0, 300)
    x = position_operator(300)
    v = s.amplitudes
    assert np.vdot(v, x @ v).real == pytest.approx(0.0, abs=1e-10)
    # flat momentum support on [-pi, pi]: <p^2> = pi^2 / 3
    p = momentum_operator(300)
    assert np.vdot(v, p @ p @ v).real == pytest.approx(math.pi**2 / 3, rel=0.02)


@pytest.mark.parametrize("n", [1, 2])
def test_nonabelian_peaks_follow_sign_vectors(n):
    cutoff = 200
    spec = SincLatticeSpec(1.0, n)
    circ = smst_nonabelian(n, 1.0, cutoff)
    x = position_operator(cutoff)
    for i, s in enumerate(sign_vectors(n)):
        inp = nonabelian_input(np.eye(2**n)[i], spec, cutoff)
        inp = HybridState(inp.layout, inp.amplitudes, 0.0, 1.0)
        rho = partial_trace(circ.apply_to(inp), [n])
        assert rho.expect(x).real == pytest.approx(q_s(s, 1.0), abs=0.01)


def test_sinc_tail_of_equal_comb_halves_per_qubit():
    tails = [sinc_tail_bound({s: 2 ** (-n / 2) for s in sign_vectors(n)}, 1.0)
             for n in (1, 2, 3, 4)]
    for a, b in zip(tails, tails[1:]):
        assert b / a == pytest.approx(0.5, abs=0.05)
