"""Quantum Fourier transform carried out on oscillator lattices.

Each base-d digit sits in its own mode as a packet on a lattice of spacing
delta. A qumode Hadamard is built from

* padding: a ancillas in |+> write a comb of copies spaced d*delta apart,
* a quarter period of free evolution, which swaps position and momentum,
* anti-padding: a sign qubit and a' magnitude qubits read the comb index of
  the resulting Dirichlet peaks, and controlled displacements fold every peak
  back into the first cell.

Controlled rotations between modes are exp(i lam x_j x_k). After the last
Hadamard the digits are read back into qubits with the inverse transfer at
the conjugate spacing delta' = 2 pi / (d delta).

The register layout of the full schedule is: n data qubits, m modes, then a
pool of ancilla qubits shared by all Hadamard blocks.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, Reset, reset_tensor
from .gates import (ControlledGate, GateMatrix, conditional_displacement, cross_phase,
                    displacement, free_evolution, single_qubit, toffoli)
from .hilbert import RegisterLayout
from .qsp import BlockEncodingMode, Ideal, PadBit, ShiftedPadBit, SignStep, block_encode
from .transfer import (GaussianLatticeSpec, _partition_size, encoded_input, suggest_cutoff,
                       transfer_block)

_X = np.array([[0, 1], [1, 0]], dtype=complex)


def a_prime_rule(delta: float, sigma: float) -> int:
    """Smallest anti-padding width that keeps the Gaussian envelope tail negligible."""
    return math.ceil(math.log2(delta / sigma) + 1)


def symmetric_spacing(d: int) -> float:
    """Spacing with delta = delta' = sqrt(2 pi / d)."""
    return math.sqrt(2 * math.pi / d)


@dataclass(frozen=True)
class PaddingParams:
    a: int
    a_prime: int

    def __post_init__(self):
        if self.a < 1 or self.a_prime < 1:
            raise ValueError("a and a_prime must be >= 1")

    @classmethod
    def for_lattice(cls, a: int, delta: float, sigma: float) -> "PaddingParams":
        return cls(a, a_prime_rule(delta, sigma))

    def check(self, delta: float, sigma: float) -> None:
        need = a_prime_rule(delta, sigma)
        if self.a_prime < need:
            raise ValueError(f"a_prime={self.a_prime} is below the rule value {need} "
                             f"for delta/sigma={delta / sigma:.3g}")


@dataclass(frozen=True)
class QftPlan:
    """Parameters of a qumode QFT on n qubits spread over m modes."""

    n: int
    m: int
    a: int = 3
    a_prime: int | None = None
    delta: float | None = None
    sigma_ratio: float = 0.05
    qsp: BlockEncodingMode = Ideal()
    cutoff: int | None = None

    def __post_init__(self):
        _partition_size(self.n, self.m)
        if self.a < 1:
            raise ValueError("a must be >= 1")
        if not 0 < self.sigma_ratio < 0.5:
            raise ValueError("sigma_ratio must lie in (0, 1/2)")
        if self.a_prime is not None:
            self.padding.check(self.spacing, self.sigma)

    @property
    def bits(self) -> int:
        return self.n // self.m

    @property
    def d(self) -> int:
        return 2**self.bits

    @property
    def spacing(self) -> float:
        return self.delta if self.delta is not None else symmetric_spacing(self.d)

    @property
    def spacing_prime(self) -> float:
        return 2 * math.pi / (self.d * self.spacing)

    @property
    def sigma(self) -> float:
        return self.sigma_ratio * self.spacing

    @property
    def spec(self) -> GaussianLatticeSpec:
        return GaussianLatticeSpec(self.spacing, self.sigma, self.d)

    @property
    def padding(self) -> PaddingParams:
        ap = self.a_prime if self.a_prime is not None else a_prime_rule(self.spacing, self.sigma)
        return PaddingParams(self.a, ap)

    @property
    def n_ancillas(self) -> int:
        return max(self.a, self.padding.a_prime + 2)

    @property
    def mode_cutoff(self) -> int:
        return self.cutoff if self.cutoff is not None else auto_cutoff(self)

    @property
    def data_wires(self) -> list[int]:
        return list(range(self.n))

    @property
    def mode_wires(self) -> list[int]:
        return [self.n + j for j in range(self.m)]

    @property
    def ancilla_wires(self) -> list[int]:
        return [self.n + self.m + i for i in range(self.n_ancillas)]

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout.of(self.n, [self.mode_cutoff] * self.m) + \
            RegisterLayout.of(self.n_ancillas)


def auto_cutoff(plan: QftPlan) -> int:
    """Fock cutoff covering the phase-space box the Hadamard blocks visit.

    The centred comb spans 2**(bits + a - 1) spacings either side of the
    origin and each packet carries momentum spread 1/(2 sigma); the quarter
    rotation swaps the two extents, so one disc covers both.
    """
    spacing = max(plan.spacing, plan.spacing_prime)
    sigma = plan.sigma_ratio * min(plan.spacing, plan.spacing_prime)
    return suggest_cutoff(2 ** (plan.bits + plan.a - 1) * spacing, sigma)


# --------------------------------------------------------------------------
# building blocks


def padding_gate(mode: int, ancillas: Sequence[int], bits: int, delta: float, cutoff: int,
                 layout: RegisterLayout, qsp: BlockEncodingMode = Ideal(),
                 centered: bool = False) -> Circuit:
    """|+>^a |y, delta> -> |0>^a 2^(-a/2) sum_k |2**bits k + y, delta>.

    With ``centered`` the comb is shifted down by 2**(bits + a - 1) delta
    first, so it straddles the origin. The ancilla bit targets are read at the
    matching offset; the shift commutes with everything else in the block.
    """
    a = len(ancillas)
    circ = Circuit(layout)
    offset = 0.0
    if centered:
        offset = 2 ** (bits + a - 1) * delta
        circ.append(displacement(cutoff, -offset, mode))
    for j, q in enumerate(ancillas, start=1):
        circ.append(conditional_displacement(q, mode, 2 ** (bits + a - j) * delta, cutoff))
    for j, q in enumerate(ancillas, start=1):
        circ.append(block_encode(PadBit(j, bits, a, delta, offset), q, mode, cutoff, qsp))
    return circ


def anti_padding_entangler(mode: int, sign: int, mags: Sequence[int], bits: int, delta_p: float,
                           cutoff: int, layout: RegisterLayout,
                           qsp: BlockEncodingMode = Ideal()) -> Circuit:
    """Write sign(k) and |k| of x = (2**bits k + y) delta' into fresh qubits."""
    ap = len(mags)
    circ = Circuit(layout)
    circ.append(displacement(cutoff, 0.5 * delta_p, mode))
    circ.append(block_encode(SignStep(0.0), sign, mode, cutoff, qsp))
    circ.append(displacement(cutoff, -0.5 * delta_p, mode))
    for j, q in enumerate(mags, start=1):
        pos = block_encode(PadBit(j, bits, ap, delta_p), q, mode, cutoff, qsp)
        neg = block_encode(ShiftedPadBit(j, bits, ap, delta_p), q, mode, cutoff, qsp)
        circ.append(ControlledGate((sign,), (0,), pos))
        circ.append(ControlledGate((sign,), (1,), neg))
    return circ


def _double_controlled_shift(mode: int, sign: int, mag: int, tof: int, sign_value: int,
                             beta: float, cutoff: int, direct: bool) -> list[GateMatrix]:
    if direct:
        return [ControlledGate((sign, mag), (sign_value, 1), displacement(cutoff, beta, mode))]
    flip = [] if sign_value else [single_qubit(sign, _X, "X")]
    return flip + [toffoli(sign, mag, tof),
                   conditional_displacement(tof, mode, beta, cutoff),
                   toffoli(sign, mag, tof)] + flip


def anti_padding_disentangler(mode: int, sign: int, mags: Sequence[int], tof: int, bits: int,
                              delta_p: float, cutoff: int, layout: RegisterLayout,
                              direct: bool = False) -> Circuit:
    """Fold each comb peak back by its index: D(-+2**(bits + a' - l) delta') per magnitude bit.

    The double control (sign value, magnitude bit) is built from two Toffolis
    onto the ancilla ``tof`` around a singly controlled displacement; with
    ``direct`` a doubly controlled displacement is used instead.
    """
    ap = len(mags)
    circ = Circuit(layout)
    for l, q in enumerate(mags, start=1):
        step = 2 ** (bits + ap - l) * delta_p
        circ.extend(_double_controlled_shift(mode, sign, q, tof, 0, -step, cutoff, direct))
        circ.extend(_double_controlled_shift(mode, sign, q, tof, 1, step, cutoff, direct))
    return circ


def qumode_hadamard(plan: QftPlan, j: int, delta: float) -> Circuit:
    """Hadamard on mode j (0-based) whose lattice currently has spacing ``delta``."""
    layout = plan.layout
    mode = plan.mode_wires[j]
    cutoff = plan.mode_cutoff
    anc = plan.ancilla_wires
    pad = anc[: plan.a]
    ap = plan.padding.a_prime
    sign, mags, tof = anc[0], anc[1: ap + 1], anc[ap + 1]
    delta_p = 2 * math.pi / (plan.d * delta)
    circ = Circuit(layout, metadata=dict(mode=j, delta=delta, delta_prime=delta_p))
    circ.append(Reset(tuple(pad), "+"))
    circ.extend(padding_gate(mode, pad, plan.bits, delta, cutoff, layout, plan.qsp, centered=True))
    circ.append(Reset(tuple(pad), "0"))
    circ.append(free_evolution(cutoff, mode))
    circ.extend(anti_padding_entangler(mode, sign, mags, plan.bits, delta_p, cutoff, layout,
                                       plan.qsp))
    circ.extend(anti_padding_disentangler(mode, sign, mags, tof, plan.bits, delta_p, cutoff,
                                          layout))
    circ.append(Reset(tuple(anc[: ap + 2]), "0"))
    return circ


def controlled_rotation(mode_j: int, mode_k: int, k: int, d: int, spacing_j: float,
                        spacing_k: float, cutoff: int) -> GateMatrix:
    """Phase exp(2 pi i y_j x_k / d**k) on lattice values, as exp(i lam x_j x_k)."""
    lam = 2 * math.pi / (d**k * spacing_j * spacing_k)
    return cross_phase(mode_j, mode_k, lam, (cutoff, cutoff))


# --------------------------------------------------------------------------
# full schedule


@dataclass
class QftSchedule:
    """The QFT as stages; ``circuit`` flattens them."""

    plan: QftPlan
    stages: list[tuple] = field(default_factory=list)

    @property
    def circuit(self) -> Circuit:
        circ = Circuit(self.plan.layout, metadata=dict(n=self.plan.n, m=self.plan.m,
                                                       a=self.plan.a,
                                                       a_prime=self.plan.padding.a_prime))
        for stage in self.stages:
            circ.extend(stage[-1] if isinstance(stage[-1], Circuit) else [stage[-1]])
        return circ

    @property
    def duration(self) -> float:
        return self.circuit.duration


def qft_full(plan: QftPlan) -> QftSchedule:
    """Transfer in, Hadamards and controlled rotations, transfer out at delta'."""
    layout = plan.layout
    cutoff = plan.mode_cutoff
    sched = QftSchedule(plan)
    k = plan.bits
    spec = plan.spec
    forward = Circuit(layout)
    for j in range(plan.m):
        forward.extend(transfer_block(k, spec, plan.data_wires[j * k:(j + 1) * k],
                                      plan.mode_wires[j], cutoff, layout, plan.qsp))
    sched.stages.append(("transfer", forward))
    spacing = [plan.spacing] * plan.m
    for j in range(plan.m):
        sched.stages.append(("hadamard", j, qumode_hadamard(plan, j, spacing[j])))
        spacing[j] = 2 * math.pi / (plan.d * spacing[j])
        for kk in range(j + 1, plan.m):
            gate = controlled_rotation(plan.mode_wires[j], plan.mode_wires[kk], kk - j + 1,
                                       plan.d, spacing[j], spacing[kk], cutoff)
            sched.stages.append(("rotation", gate))
    back = Circuit(layout)
    for j in range(plan.m):
        out_spec = GaussianLatticeSpec(spacing[j], plan.sigma_ratio * spacing[j], plan.d)
        block = transfer_block(k, out_spec, plan.data_wires[j * k:(j + 1) * k],
                               plan.mode_wires[j], cutoff, layout, plan.qsp)
        back.extend(block.inverse())
    sched.stages.append(("transfer", back))
    return sched


# --------------------------------------------------------------------------
# simulation


def dft_matrix(dim: int) -> np.ndarray:
    """F[y, x] = exp(2 pi i x y / dim) / sqrt(dim)."""
    idx = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(idx, idx) / dim) / np.sqrt(dim)


def dit_reversal(n: int, m: int) -> np.ndarray:
    """Permutation matrix that reverses the order of the m base-2**(n/m) digits."""
    k = _partition_size(n, m)
    d = 2**k
    dim = 2**n
    perm = np.zeros((dim, dim))
    for x in range(dim):
        digits = [(x // d**i) % d for i in range(m)]
        y = sum(dig * d ** (m - 1 - i) for i, dig in enumerate(digits))
        perm[y, x] = 1
    return perm


@dataclass
class _Tracker:
    leak: float = 0.0
    kept: list[float] = field(default_factory=list)
    ranks: list[int] = field(default_factory=list)

    def gate(self, op: GateMatrix, psi: np.ndarray, axes: Sequence[int]) -> np.ndarray:
        out = op.apply_tensor(psi, axes)
        sq = float(np.vdot(out, out).real)
        self.leak += max(0.0, 1.0 - sq)
        return out / math.sqrt(sq)


def _run_block(psi: np.ndarray, circ: Circuit, axis_of: dict[int, int], tr: _Tracker) -> np.ndarray:
    for op in circ.ops:
        axes = [axis_of[w] for w in op.wires]
        if isinstance(op, Reset):
            psi, w = reset_tensor(psi, axes, op.state, op.min_weight)
            tr.kept.append(w)
        else:
            psi = tr.gate(op, psi, axes)
    return psi


def _hadamard_compressed(psi: np.ndarray, plan: QftPlan, j: int, circ: Circuit,
                         tr: _Tracker, tol: float) -> np.ndarray:
    """Run a Hadamard block with everything but mode j folded into a Schmidt factor."""
    axis = plan.n + 1 + j  # axis 0 holds the reference register
    moved = np.moveaxis(psi, axis, 0)
    shape = moved.shape
    mat = moved.reshape(shape[0], -1)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    # smallest rank whose discarded weight stays below tol
    tail = np.cumsum((s**2)[::-1])[::-1] / np.sum(s**2)
    rank = max(1, int(np.sum(tail > tol)))
    tr.leak += float(tail[rank]) if rank < s.size else 0.0
    tr.ranks.append(rank)
    core = (u[:, :rank] * s[:rank])
    na = plan.n_ancillas
    work = core.reshape((shape[0], rank) + (1,) * na) * np.zeros((1, 1) + (2,) * na)
    work[(slice(None), slice(None)) + (0,) * na] = core
    axis_of = {plan.mode_wires[j]: 0}
    axis_of.update({w: 2 + i for i, w in enumerate(plan.ancilla_wires)})
    work = _run_block(work, circ, axis_of, tr)
    core = work[(slice(None), slice(None)) + (0,) * na]
    out = (core @ vh[:rank]).reshape(shape)
    return np.moveaxis(out, 0, axis)


@dataclass
class QftReport:
    n: int
    m: int
    a: int
    a_prime: int
    delta: float
    sigma: float
    cutoff: int
    ordering: str
    process_fidelity: float
    average_gate_fidelity: float
    basis_fidelities: list[float]
    kept_weight: float
    leaked_norm: float
    candidates: dict[str, float]

    @property
    def infidelity(self) -> float:
        """Process (entanglement) infidelity against the DFT."""
        return 1.0 - self.process_fidelity

    @property
    def worst_basis_infidelity(self) -> float:
        return 1.0 - min(self.basis_fidelities)

    def to_json(self) -> str:
        out = asdict(self)
        out["infidelity"] = self.infidelity
        out["worst_basis_infidelity"] = self.worst_basis_infidelity
        return json.dumps(out, indent=2, sort_keys=True)


def simulate_qft(plan: QftPlan, svd_tol: float = 1e-10) -> tuple[np.ndarray, _Tracker]:
    """Run the schedule on the maximally entangled input.

    A reference register R of dimension 2**n is entangled with the data
    qubits, sum_x |x>_R |x>_Q / sqrt(2**n). Returns the reduced density
    matrix on (R, Q) after the schedule, plus leak and reset diagnostics.
    """
    dim = 2**plan.n
    cutoff = plan.mode_cutoff
    vac = encoded_input(np.eye(dim)[0], plan.spec, plan.m, cutoff)
    modes = vac.tensor.reshape((dim,) + (cutoff,) * plan.m)[0]
    bell = np.eye(dim, dtype=complex) / np.sqrt(dim)
    psi = np.multiply.outer(bell.reshape((dim,) + (2,) * plan.n), modes)
    tr = _Tracker(leak=vac.leaked_norm)
    shift = {w: w + 1 for w in range(plan.n + plan.m)}
    for stage in qft_full(plan).stages:
        if stage[0] == "hadamard":
            psi = _hadamard_compressed(psi, plan, stage[1], stage[2], tr, svd_tol)
        elif stage[0] == "rotation":
            g = stage[1]
            psi = tr.gate(g, psi, [shift[w] for w in g.wires])
        else:
            psi = _run_block(psi, stage[1], shift, tr)
    mat = psi.reshape(dim * dim, -1)
    rho = mat @ mat.conj().T
    return rho / np.trace(rho).real, tr


def verify_qft(plan: QftPlan, svd_tol: float = 1e-10) -> QftReport:
    """Process fidelity of the qumode QFT against the DFT, best of two digit orders."""
    dim = 2**plan.n
    rho, tr = simulate_qft(plan, svd_tol)
    dft = dft_matrix(dim)
    candidates = {"identity": dft, "dit-reversed": dit_reversal(plan.n, plan.m) @ dft}
    scores = {}
    basis = {}
    for name, u in candidates.items():
        # column x of the target is |x>_R (u|x>)_Q / sqrt(dim)
        phi = u.T.reshape(-1) / np.sqrt(dim)
        scores[name] = float(np.real(np.vdot(phi, rho @ phi)))
        blocks = rho.reshape(dim, dim, dim, dim)
        basis[name] = [float(np.real(np.vdot(u[:, x], blocks[x, :, x, :] @ u[:, x])) * dim)
                       for x in range(dim)]
    best = max(scores, key=scores.get)
    f = scores[best]
    return QftReport(plan.n, plan.m, plan.a, plan.padding.a_prime, plan.spacing, plan.sigma,
                     plan.mode_cutoff, best, f, (dim * f + 1) / (dim + 1), basis[best],
                     float(np.prod(tr.kept)), tr.leak, scores)


def envelope_weight(ell: float, sigma_ratio: float, d: int) -> float:
    """Gaussian envelope exp(-(sigma ell delta')^2) on conjugate peak ell.

    With delta' = 2 pi / (d delta) the value depends only on sigma/delta.
    """
    return math.exp(-((2 * math.pi * sigma_ratio * ell / d) ** 2))
