"""Qubit-to-oscillator state transfer on Gaussian and sinc lattices.

An n-bit register value x = sum_j x_j 2**(n-j) (qubit 1 most significant) is
moved into a mode as a packet at position x*delta. With m modes the qubits
are cut into m equal partitions; partition j feeds mode j, so mode 1 carries
the most significant base-2**(n/m) digit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit
from .gates import (conditional_displacement, hybrid_pauli_exp, position_diagonalization,
                    wavefunction_to_fock)
from .hilbert import (DensityBlock, HybridState, Mode, Qubit, RegisterLayout, fidelity,
                      partial_trace, project_mode, tensor_all)
from .qsp import BlockEncodingMode, DataBit, Ideal, block_encode


class RangeError(ValueError):
    """A packet or displacement falls outside the reliable range of the cutoff."""


@dataclass(frozen=True)
class GaussianLatticeSpec:
    """Packets of width sigma on a lattice of spacing delta encoding ``levels`` values."""

    delta: float
    sigma: float
    levels: int = 2

    def __post_init__(self):
        if self.delta <= 0 or self.sigma <= 0:
            raise ValueError("delta and sigma must be positive")
        if not self.sigma < self.delta / 2:
            raise ValueError(f"sigma={self.sigma} must be below delta/2={self.delta / 2}")
        if self.levels < 2:
            raise ValueError("levels must be >= 2")

    @classmethod
    def from_squeezing(cls, delta: float, r: float, levels: int = 2) -> "GaussianLatticeSpec":
        return cls(delta, math.exp(-r) / math.sqrt(2), levels)

    @property
    def squeezing(self) -> float:
        return -math.log(self.sigma * math.sqrt(2))

    @property
    def delta_prime(self) -> float:
        return 2 * math.pi / (self.levels * self.delta)

    def conjugate(self) -> "GaussianLatticeSpec":
        """Lattice after a Fourier step; the width entry keeps sigma/delta fixed."""
        dp = self.delta_prime
        return GaussianLatticeSpec(dp, self.sigma * dp / self.delta, self.levels)

    def with_levels(self, levels: int) -> "GaussianLatticeSpec":
        return GaussianLatticeSpec(self.delta, self.sigma, levels)


@dataclass(frozen=True)
class SincLatticeSpec:
    delta: float
    n_qubits: int

    def __post_init__(self):
        if self.delta <= 0 or self.n_qubits < 1:
            raise ValueError("delta and n_qubits must be positive")


# --------------------------------------------------------------------------
# state preparation


def reliable_range(cutoff: int) -> float:
    """0.8 times the largest position eigenvalue of the truncated mode."""
    return 0.8 * float(position_diagonalization(cutoff).eigenvalues[-1])


def suggest_cutoff(extent: float, sigma: float) -> int:
    """Fock cutoff for packets of width sigma anywhere within |x| <= extent.

    The disc through the corner of the phase-space box (extent + 6 sigma,
    5.5 / (2 sigma)) must fit below the truncation.
    """
    reach_x = extent + 6 * sigma
    reach_p = 5.5 / (2 * sigma)
    radius2 = reach_x**2 + reach_p**2
    return int(math.ceil(0.5 * radius2 + 3 * math.sqrt(radius2) + 40))


def gaussian_fock(center: float, sigma: float, cutoff: int) -> np.ndarray:
    """Unnormalized Fock coefficients of exp(-(q - center)^2 / (4 sigma^2))."""
    norm = (2 * np.pi * sigma * sigma) ** -0.25

    def psi(q):
        return norm * np.exp(-((q - center) ** 2) / (4 * sigma * sigma))

    step = min(sigma / 8, 2 * np.pi / np.sqrt(2 * cutoff + 1) / 16)
    return wavefunction_to_fock(psi, cutoff, center - 12 * sigma, center + 12 * sigma, step)


def _mode_state(coeffs: np.ndarray) -> HybridState:
    leak = max(0.0, 1.0 - float(np.vdot(coeffs, coeffs).real))
    return HybridState(RegisterLayout((Mode(coeffs.size),)), coeffs, leaked_norm=leak)


def gaussian_wavepacket(center: float, sigma: float, cutoff: int) -> HybridState:
    """Squeezed, displaced vacuum at an arbitrary real position."""
    if abs(center) > reliable_range(cutoff):
        raise RangeError(f"position {center:.4g} is outside the reliable range "
                         f"{reliable_range(cutoff):.4g} of cutoff {cutoff}")
    return _mode_state(gaussian_fock(center, sigma, cutoff))


def gaussian_packet(spec: GaussianLatticeSpec, x: int, cutoff: int) -> HybridState:
    """|x, delta>: packet of width sigma at x*delta."""
    if int(x) != x or x < 0:
        raise ValueError(f"level must be a nonnegative integer, got {x}")
    return gaussian_wavepacket(x * spec.delta, spec.sigma, cutoff)


def lattice_superposition(spec: GaussianLatticeSpec, amplitudes: Mapping[float, complex],
                          cutoff: int) -> HybridState:
    """sum_x C_x |x, delta> (levels may be any reals) normalized as a vector."""
    vec = sum(c * gaussian_fock(x * spec.delta, spec.sigma, cutoff)
              for x, c in amplitudes.items())
    return _mode_state(vec / np.linalg.norm(vec))


def sinc_vacuum(delta: float, cutoff: int) -> HybridState:
    """Mode state with wavefunction sinc(pi q / delta) / sqrt(delta)."""
    def psi(q):
        return np.sinc(q / delta) / np.sqrt(delta)

    reach = np.sqrt(2 * cutoff + 1) + 10
    c = wavefunction_to_fock(psi, cutoff, -reach, reach)
    return _mode_state(c / np.linalg.norm(c))


def qubit_register(amplitudes: Sequence[complex]) -> HybridState:
    amps = np.asarray(amplitudes, dtype=complex)
    n = int(round(math.log2(amps.size)))
    if 2 ** n != amps.size:
        raise ValueError("qubit amplitudes must have power-of-two length")
    return HybridState(RegisterLayout((Qubit(),) * n), amps)


def bits_of(x: int, n: int) -> list[int]:
    """Bits of x, most significant first."""
    return [(x >> (n - 1 - i)) & 1 for i in range(n)]


def digits_of(x: int, n: int, m: int) -> list[int]:
    """Base-2**(n/m) digits of x, one per mode, most significant first."""
    k = _partition_size(n, m)
    return [(x >> (k * (m - 1 - j))) & (2**k - 1) for j in range(m)]


def _partition_size(n: int, m: int) -> int:
    if m < 1 or n < 1 or n % m:
        raise ValueError(f"the number of modes m={m} must divide the number of qubits n={n}")
    return n // m


# --------------------------------------------------------------------------
# abelian transfer


def _check_range(spec: GaussianLatticeSpec, top: float, cutoff: int) -> None:
    reach = reliable_range(cutoff)
    if top > reach:
        raise RangeError(f"lattice reaches {top:.4g} but cutoff {cutoff} is reliable only to "
                         f"{reach:.4g}; raise the cutoff")


def transfer_block(n_bits: int, spec: GaussianLatticeSpec, qubits: Sequence[int], mode_wire: int,
                   cutoff: int, layout: RegisterLayout,
                   mode: BlockEncodingMode = Ideal(), check_range: bool = True) -> Circuit:
    """Controlled displacements 2**(n-j) delta, then the n disentangling encodings."""
    if len(qubits) != n_bits:
        raise ValueError("one qubit per bit")
    if check_range:
        _check_range(spec, (2**n_bits - 1) * spec.delta, cutoff)
    circ = Circuit(layout)
    for j, q in enumerate(qubits, start=1):
        circ.append(conditional_displacement(q, mode_wire, 2 ** (n_bits - j) * spec.delta, cutoff))
    for j, q in enumerate(qubits, start=1):
        circ.append(block_encode(DataBit(j, n_bits, spec.delta), q, mode_wire, cutoff, mode))
    return circ


def smst_abelian(n_qubits: int, spec: GaussianLatticeSpec, mode: BlockEncodingMode = Ideal(),
                 cutoff: int = 80) -> Circuit:
    """Single-mode transfer on the layout (n qubits, 1 mode)."""
    layout = RegisterLayout.of(n_qubits, [cutoff])
    circ = transfer_block(n_qubits, spec, range(n_qubits), n_qubits, cutoff, layout, mode)
    circ.metadata.update(n=n_qubits, m=1, delta=spec.delta, sigma=spec.sigma)
    return circ


def smst_inverse(n_qubits: int, spec: GaussianLatticeSpec, mode: BlockEncodingMode = Ideal(),
                 cutoff: int = 80) -> Circuit:
    """Oscillator-to-qubit direction: reversed order, inverted gates."""
    return smst_abelian(n_qubits, spec, mode, cutoff).inverse()


def multimode_transfer(n: int, m: int, spec: GaussianLatticeSpec,
                       mode: BlockEncodingMode = Ideal(), cutoff: int | Sequence[int] = 80,
                       inverse: bool = False, check_range: bool = True) -> Circuit:
    """m independent transfers, qubit partition j into mode j (layout: qubits, then modes).

    ``check_range=False`` allows schedule-only builds whose cutoff is too small to hold the
    lattice; such circuits are fine for counting gates but not for simulation.
    """
    k = _partition_size(n, m)
    cutoffs = [cutoff] * m if isinstance(cutoff, int) else list(cutoff)
    layout = RegisterLayout.of(n, cutoffs)
    circ = Circuit(layout, metadata=dict(n=n, m=m, delta=spec.delta, sigma=spec.sigma))
    for j in range(m):
        block = transfer_block(k, spec, range(j * k, (j + 1) * k), n + j, cutoffs[j], layout, mode,
                               check_range)
        circ.extend(block.inverse() if inverse else block)
    return circ


def encoded_input(qubit_amplitudes: Sequence[complex], spec: GaussianLatticeSpec,
                  m: int, cutoff: int | Sequence[int] = 80) -> HybridState:
    """|psi>_Q tensor |0, delta>^m."""
    cutoffs = [cutoff] * m if isinstance(cutoff, int) else list(cutoff)
    parts = [qubit_register(qubit_amplitudes)]
    parts += [gaussian_packet(spec, 0, c) for c in cutoffs]
    return tensor_all(parts)


def encoded_target(qubit_amplitudes: Sequence[complex], spec: GaussianLatticeSpec, m: int,
                   cutoff: int | Sequence[int] = 80) -> HybridState:
    """|0>^n tensor sum_x C_x |x^(1), delta> ... |x^(m), delta>."""
    amps = np.asarray(qubit_amplitudes, dtype=complex)
    n = int(round(math.log2(amps.size)))
    cutoffs = [cutoff] * m if isinstance(cutoff, int) else list(cutoff)
    d = 2 ** _partition_size(n, m)
    packets = [[gaussian_fock(y * spec.delta, spec.sigma, c) for y in range(d)] for c in cutoffs]
    vec = 0
    for x, c in enumerate(amps):
        if c == 0:
            continue
        term = np.array([c], dtype=complex)
        for j, y in enumerate(digits_of(x, n, m)):
            term = np.kron(term, packets[j][y])
        vec = vec + term
    vec = vec / np.linalg.norm(vec)
    q0 = np.zeros(2**n)
    q0[0] = 1
    layout = RegisterLayout.of(n, cutoffs)
    return HybridState(layout, np.kron(q0, vec))


@dataclass
class TransferDemo:
    """Outcome of a multimode transfer of a given qubit state."""

    fidelity: float
    leaked_norm: float
    state: HybridState
    target: HybridState
    conditioned: dict[int, DensityBlock]
    probabilities: dict[int, float]


def transfer_demo(qubit_amplitudes: Sequence[complex], spec: GaussianLatticeSpec, m: int,
                  cutoff: int = 80, mode: BlockEncodingMode = Ideal()) -> TransferDemo:
    """Transfer, compare with the ideal oscillator state and condition the last mode.

    ``conditioned[x]`` is the reduced state of the last mode after the first
    mode is projected onto |x, delta> (the other modes are traced out).
    """
    amps = np.asarray(qubit_amplitudes, dtype=complex)
    n = int(round(math.log2(amps.size)))
    circ = multimode_transfer(n, m, spec, mode, cutoff)
    state = circ.apply_to(encoded_input(amps, spec, m, cutoff))
    target = encoded_target(amps, spec, m, cutoff)
    f = fidelity(state, target)
    d = 2 ** _partition_size(n, m)
    cond, probs = {}, {}
    first = n
    for x in range(d):
        packet = gaussian_packet(spec, x, cutoff)
        try:
            rest, prob = project_mode(state, first, packet)
        except ValueError:
            continue
        last = len(rest.layout) - 1
        cond[x] = partial_trace(rest, [last])
        probs[x] = prob
    return TransferDemo(f, state.leaked_norm, state, target, cond, probs)


# --------------------------------------------------------------------------
# sinc-lattice (non-abelian) transfer


def sign_vectors(n: int) -> list[tuple[int, ...]]:
    """All s in {+1, -1}^n, s_1 first."""
    return list(itertools.product((1, -1), repeat=n))


def gamma_s(s: Sequence[int]) -> int:
    """Sign exponent gamma_s of the phi_s basis (0 for a single qubit)."""
    n = len(s)
    if n < 2:
        return 0
    g = sum((s[j] + s[j + 1]) // 2 for j in range(n - 2))
    return g + (s[n - 2] - s[n - 1]) // 2


def q_s(s: Sequence[int], delta: float) -> float:
    """Output peak position for the sign vector s."""
    n = len(s)
    head = sum(s[j] * 2**j for j in range(n - 1))
    return 0.5 * delta * (head - s[n - 1] * 2 ** (n - 1))


def phi_basis_state(s: Sequence[int]) -> np.ndarray:
    """(-1)^gamma_s times the product of (|0> + s_j |1>)/sqrt(2)."""
    vec = np.array([1.0 + 0j])
    for sj in s:
        vec = np.kron(vec, np.array([1.0, sj]) / np.sqrt(2))
    return (-1) ** gamma_s(s) * vec


def phi_basis_matrix(n: int) -> np.ndarray:
    """Columns are phi_s in the order of ``sign_vectors``; unitary."""
    return np.stack([phi_basis_state(s) for s in sign_vectors(n)], axis=1)


def nonabelian_input(c: Mapping[tuple[int, ...], complex] | Sequence[complex],
                     spec: SincLatticeSpec, cutoff: int,
                     leak_threshold: float = 1e-2) -> HybridState:
    """sum_s c_s |phi_s> tensor the sinc vacuum.

    ``c`` is either a mapping from sign vectors or a vector ordered like
    ``sign_vectors``. Composing with ``phi_basis_matrix`` converts from
    computational-basis amplitudes.
    """
    n = spec.n_qubits
    if isinstance(c, Mapping):
        vec = np.array([c.get(s, 0.0) for s in sign_vectors(n)], dtype=complex)
    else:
        vec = np.asarray(c, dtype=complex)
    qubits = phi_basis_matrix(n) @ vec
    out = tensor_all([qubit_register(qubits), sinc_vacuum(spec.delta, cutoff)])
    # sinc tails decay slowly, so the default threshold is looser than for packets
    return HybridState(out.layout, out.amplitudes, out.leaked_norm, leak_threshold)


def smst_nonabelian(n_qubits: int, delta: float, cutoff: int = 200) -> Circuit:
    """Sinc-lattice transfer: per qubit a p-sigma_x displacement then an x-sigma_y rotation.

    Factors are applied in the order written: qubit n first, then qubits
    n-1, ..., 1. The momentum generator enters with the opposite sign to the
    written product so that, under D(beta) = exp(-i beta p), a qubit with
    s_j = +1 moves by the amount that q_s assigns to it.
    """
    layout = RegisterLayout.of(n_qubits, [cutoff])
    mode = n_qubits
    reach = reliable_range(cutoff)
    if 0.5 * delta * (2**n_qubits - 1) > reach:
        raise RangeError(f"sinc lattice reaches {0.5 * delta * (2**n_qubits - 1):.4g} but cutoff "
                         f"{cutoff} is reliable only to {reach:.4g}")
    circ = Circuit(layout, metadata=dict(n=n_qubits, delta=delta, kind="sinc"))
    order = [n_qubits] + list(range(n_qubits - 1, 0, -1))
    for j in order:
        sign = -1.0 if j == n_qubits else 1.0
        circ.append(hybrid_pauli_exp(j - 1, mode, "X", "p", -sign * 0.5 * delta * 2 ** (j - 1), cutoff))
        circ.append(hybrid_pauli_exp(j - 1, mode, "Y", "x", -np.pi / (2**j * delta), cutoff))
    return circ


def sinc_tail_bound(c: Mapping[tuple[int, ...], complex], delta: float,
                    samples: int = 200001) -> float:
    """Mass of sum_s c_s sinc(pi (q - q_s)/delta)/sqrt(delta) beyond (delta/2)(2^n - 1)."""
    n = len(next(iter(c)))
    edge = 0.5 * delta * (2**n - 1)
    reach = edge + 400 * delta
    q = np.linspace(-reach, reach, samples)
    psi = sum(v * np.sinc((q - q_s(s, delta)) / delta) for s, v in c.items()) / np.sqrt(delta)
    dens = np.abs(psi) ** 2
    h = q[1] - q[0]
    total = dens.sum() * h
    outside = dens[np.abs(q) > edge].sum() * h
    return float(outside / total)
