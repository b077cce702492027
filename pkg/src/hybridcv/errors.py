"""Displacement-error suppression, photon-loss analytics and resource estimates.

The two correction protocols are run as full state-vector simulations. The
loss and runtime expressions are asymptotic bound shapes: every O(.) is
evaluated with unit constants, so only ratios and trends carry meaning.
Logarithms of inverse errors are base 2 throughout.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .circuit import Circuit, Reset
from .gates import conditional_displacement, displacement
from .hilbert import HybridState, RegisterLayout, fidelity, tensor
from .qsp import BlockEncodingMode, Ideal, Step, block_encode
from .transfer import (GaussianLatticeSpec, _partition_size, gaussian_fock, gaussian_packet,
                       gaussian_wavepacket,
                       qubit_register, smst_abelian, suggest_cutoff)


@dataclass(frozen=True)
class NoiseParams:
    """Photon-loss rate per unit of schedule duration."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


@dataclass(frozen=True)
class ResourceParams:
    n: int
    m: int
    a: int = 3
    a_prime: int = 6
    delta: float = 1.0
    sigma: float = 0.05
    eps_total: float = 1e-2
    eps_qsp: float = 1e-3
    gate_time_ratio: float = 1.0

    def __post_init__(self):
        _partition_size(self.n, self.m)
        for name in ("a", "a_prime", "delta", "sigma", "eps_total", "eps_qsp", "gate_time_ratio"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def d(self) -> int:
        return 2 ** (self.n // self.m)


# --------------------------------------------------------------------------
# correction protocols


@dataclass
class CorrectionResult:
    """Fidelities with the undisturbed state before and after correction.

    ``fidelity_after`` is for the mixed state left by the mode reset.
    ``kept_weight`` is the weight of its largest branch.
    """

    fidelity_before: float
    fidelity_after: float
    delta_err: float
    in_guarantee: bool
    kept_weight: float
    leaked_norm: float
    cutoff: int
    notes: list[str] = field(default_factory=list)


def _replace_mode(state: HybridState, wire: int, fresh: HybridState,
                  floor: float = 1e-12) -> list[tuple[float, HybridState]]:
    """Mode reset as a channel: trace ``wire`` out and put ``fresh`` in its place.

    The remaining register is generally mixed. It is returned as its
    eigen-decomposition, a list of (weight, pure state) pairs with weights
    above ``floor``, each already tensored with ``fresh`` on ``wire``.
    """
    rest_idx = [i for i in range(len(state.layout)) if i != wire]
    psi = np.moveaxis(state.tensor, wire, -1)
    m = psi.reshape(-1, state.layout.dims[wire])
    # m = U S V^dag; the columns of U S are the orthogonal branches
    u, sv, _ = np.linalg.svd(m, full_matrices=False)
    weights = sv**2 / np.sum(sv**2)
    out = []
    for w, col in zip(weights, u.T):
        if w < floor:
            continue
        full = np.multiply.outer(col.reshape([state.layout.dims[i] for i in rest_idx]),
                                 fresh.amplitudes)
        full = np.moveaxis(full, -1, wire)
        out.append((float(w), HybridState(state.layout, full.reshape(-1),
                                          state.leaked_norm + fresh.leaked_norm,
                                          state.leak_threshold)))
    return out


def _mixed_fidelity(branches: list[tuple[float, HybridState]], target: HybridState) -> float:
    return float(sum(w * fidelity(b, target) for w, b in branches))


def suppress_displacement_error(n: int, spec: GaussianLatticeSpec, delta_err: float,
                                amplitudes: Sequence[complex] | None = None,
                                mode: BlockEncodingMode = Ideal(),
                                cutoff: int | None = None) -> CorrectionResult:
    """Oscillator-to-qubit transfer, mode reset, qubit-to-oscillator transfer.

    The encoded state sum_x C_x |x delta> is displaced by ``delta_err``
    first. Inside |delta_err| < delta/2 every packet is read as its own level,
    so the qubits carry the logical state and the reset removes the error.
    The default amplitudes are C_x proportional to x + 1, which a cyclic
    relabelling of the levels does not leave invariant.
    """
    dim = 2**n
    amps = np.arange(1, dim + 1, dtype=complex) if amplitudes is None else \
        np.asarray(amplitudes, dtype=complex)
    amps = amps / np.linalg.norm(amps)
    extent = (dim - 1) * spec.delta + abs(delta_err)
    cutoff = cutoff or suggest_cutoff(extent, spec.sigma)
    wire = n
    vec = sum(c * gaussian_fock(x * spec.delta, spec.sigma, cutoff) for x, c in enumerate(amps))
    encoded = HybridState(RegisterLayout.of(0, [cutoff]), vec)
    zero = qubit_register(np.eye(dim)[0])
    original = tensor(zero, encoded)

    state = displacement(cutoff, delta_err, wire).apply_to(original)
    before = fidelity(state, original)
    dac = smst_abelian(n, spec, mode, cutoff)
    state = dac.inverse().apply_to(state)
    branches = _replace_mode(state, wire, gaussian_packet(spec, 0, cutoff))
    branches = [(w, dac.apply_to(b)) for w, b in branches]
    after = _mixed_fidelity(branches, original)
    weight = branches[0][0]
    leak = max(b.leaked_norm for _, b in branches)
    inside = abs(delta_err) < spec.delta / 2
    notes = [] if inside else [f"|delta_err| = {abs(delta_err):.4g} is outside the window "
                               f"delta/2 = {spec.delta / 2:.4g}; recovery is not guaranteed"]
    return CorrectionResult(before, after, delta_err, inside, weight, leak, cutoff, notes)


def cat_state(alpha: float, c0: complex, c1: complex, cutoff: int) -> HybridState:
    """C0 |0_L> + C1 |1_L> with |0_L>, |1_L> the even and odd cats of |+-alpha>.

    ``alpha`` is the position of the coherent components (vacuum width).
    """
    plus = gaussian_fock(alpha, math.sqrt(0.5), cutoff)
    minus = gaussian_fock(-alpha, math.sqrt(0.5), cutoff)
    even = plus + minus
    odd = plus - minus
    vec = c0 * even / np.linalg.norm(even) + c1 * odd / np.linalg.norm(odd)
    return HybridState(RegisterLayout.of(0, [cutoff]), vec)


def cat_correction_circuit(alpha: float, cutoff: int, mode: BlockEncodingMode = Ideal()
                           ) -> Circuit:
    """D(alpha), step at alpha, cD(-2 alpha), mode reset, cD(2 alpha), step inverse, D(-alpha).

    Layout: one ancilla qubit, then the mode. The reset is recorded in the
    schedule; ``correct_cat_qubit`` performs it as an idealized replacement.
    """
    layout = RegisterLayout.of(1, [cutoff])
    step = block_encode(Step(alpha), 0, 1, cutoff, mode)
    circ = Circuit(layout, metadata=dict(alpha=alpha))
    circ.append(displacement(cutoff, alpha, 1))
    circ.append(step)
    circ.append(conditional_displacement(0, 1, -2 * alpha, cutoff))
    circ.append(Reset((1,)))
    circ.append(conditional_displacement(0, 1, 2 * alpha, cutoff))
    circ.append(step.inverse())
    circ.append(displacement(cutoff, -alpha, 1))
    return circ


def correct_cat_qubit(alpha: float, delta_err: float, c0: complex = 1.0, c1: complex = 0.0,
                      mode: BlockEncodingMode = Ideal(), cutoff: int | None = None
                      ) -> CorrectionResult:
    """Remove an unknown position shift from a cat qubit through one ancilla qubit."""
    norm = math.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
    c0, c1 = c0 / norm, c1 / norm
    cutoff = cutoff or suggest_cutoff(2 * alpha + abs(delta_err), math.sqrt(0.5))
    cat = cat_state(alpha, c0, c1, cutoff)
    original = tensor(qubit_register([1, 0]), cat)
    state = displacement(cutoff, delta_err, 1).apply_to(original)
    before = fidelity(state, original)
    vacuum = gaussian_wavepacket(0.0, math.sqrt(0.5), cutoff)
    branches = [(1.0, state)]
    for op in cat_correction_circuit(alpha, cutoff, mode).ops:
        if isinstance(op, Reset):
            branches = [(w * v, b2) for w, b in branches for v, b2 in _replace_mode(b, 1, vacuum)]
        else:
            branches = [(w, op.apply_to(b)) for w, b in branches]
    after = _mixed_fidelity(branches, original)
    weight = max(w for w, _ in branches)
    inside = abs(delta_err) < alpha
    notes = [] if inside else [f"|delta_err| = {abs(delta_err):.4g} is not below alpha = {alpha:.4g}"]
    return CorrectionResult(before, after, delta_err, inside, weight,
                            max(b.leaked_norm for _, b in branches), cutoff, notes)


# --------------------------------------------------------------------------
# photon loss


def _runtime_factor(delta: float, epsilon: float) -> float:
    return delta + math.log2(1.0 / epsilon)


def photon_profile(n: int, m: int, delta: float) -> list[dict]:
    """Mean photon number after each controlled displacement (all bits set).

    A packet at position q holds q**2 / 2 photons; squeezing is neglected.
    Rows give the step, the total over the m modes of the parallel transfer
    and the single-mode sequential value.
    """
    k = _partition_size(n, m)
    rows = []
    for step in range(1, n + 1):
        j = min(step, k)
        q_mm = (2**k - 2 ** (k - j)) * delta
        q_sm = (2**n - 2 ** (n - step)) * delta
        rows.append({"step": step, "parallel": m * q_mm**2 / 2, "sequential": q_sm**2 / 2})
    return rows


@dataclass
class PhotonLossReport:
    n: int
    m: int
    gamma: float
    delta: float
    epsilon: float
    rate_ratio: float
    total_ratio: float
    total_ratio_precollapse: float
    profile: list[dict]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def photon_loss_report(n: int, m: int, gamma: float, delta: float, epsilon: float
                       ) -> PhotonLossReport:
    """Instantaneous and total photon-loss ratios of m-mode to single-mode transfer.

    ``total_ratio`` is the closed final form m / (1 - exp(-gamma 2^n T));
    ``total_ratio_precollapse`` keeps the 2^(n/m) exponent in the numerator,
    m (1 - exp(-gamma 2^(n/m) T)) / (1 - exp(-gamma 2^n T)), T = delta + log2(1/eps).
    """
    NoiseParams(gamma)
    k = _partition_size(n, m)
    t = _runtime_factor(delta, epsilon)
    rate = m * 2.0 ** (2 * n * (1 / m - 1))
    denom = -math.expm1(-gamma * 2**n * t)
    numer = -math.expm1(-gamma * 2**k * t)
    total = m / denom if denom > 0 else math.inf
    pre = m * numer / denom if denom > 0 else float(m) * 2**k / 2**n
    return PhotonLossReport(n, m, gamma, delta, epsilon, rate, total, pre,
                            photon_profile(n, m, delta))


# --------------------------------------------------------------------------
# runtime and fidelity bound shapes


def antipadding_error(a_prime: int, sigma_ratio: float) -> float:
    """2 erfc(2 sqrt(2) pi (sigma/delta) (2^a' / 2 - 1))."""
    return float(2 * erfc(2 * math.sqrt(2) * math.pi * sigma_ratio * (2**a_prime / 2 - 1)))


def theorem_bounds(p: ResourceParams) -> dict:
    """Every term of the transfer and QFT runtime/infidelity shapes, unit constants."""
    k = p.n // p.m
    t = _runtime_factor(p.delta, p.eps_qsp)
    ratio = p.sigma / p.delta
    transfer = {
        "runtime": 2**k * t,
        "depth": 2**k * math.log2(1 / p.eps_qsp) + k,
        "infidelity_qsp": p.n * p.eps_qsp,
        "infidelity_overlap": p.m * math.exp(-(p.delta / p.sigma) ** 2),
    }
    transfer["infidelity"] = transfer["infidelity_qsp"] + transfer["infidelity_overlap"]
    qft = {
        "runtime": p.m * 2 ** (k + max(p.a, p.a_prime)) * t + p.m**2,
        "infidelity_padding": p.m / 2**p.a,
        "infidelity_width": p.m * ratio,
        "infidelity_qsp": (p.n + p.m * p.a + 2 * p.m * p.a_prime) * p.eps_qsp,
        "infidelity_antipadding_stated": p.m * float(erfc(2**p.a_prime / ratio)),
        "infidelity_antipadding": p.m * antipadding_error(p.a_prime, ratio),
    }
    qft["infidelity"] = (qft["infidelity_padding"] + qft["infidelity_width"]
                         + qft["infidelity_qsp"] + qft["infidelity_antipadding"])
    return {"label": "bound shape (unit constants)", "transfer": transfer, "qft": qft}


# --------------------------------------------------------------------------
# break-even against a qubit QFT


def breakeven_ratio(d: float, eps: float, delta: float, eps_qsp: float) -> float:
    """Gate-time ratio T_q / T_o above which the qumode QFT is faster."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if eps <= 0 or delta <= 0 or eps_qsp <= 0:
        raise ValueError("eps, delta and eps_qsp must be positive")
    return 2 * (d / eps) * _runtime_factor(delta, eps_qsp) / math.log2(d) ** 2


def breakeven_grid(d_values: Sequence[float], eps_values: Sequence[float], delta: float = 1.0,
                   eps_qsp: float = 1e-3) -> np.ndarray:
    """Required ratio on the grid, shape (len(d_values), len(eps_values))."""
    return np.array([[breakeven_ratio(d, e, delta, eps_qsp) for e in eps_values]
                     for d in d_values])


def breakeven_csv(d_values: Sequence[float], eps_values: Sequence[float], delta: float = 1.0,
                  eps_qsp: float = 1e-3) -> str:
    grid = breakeven_grid(d_values, eps_values, delta, eps_qsp)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "epsilon", "required_ratio"])
    for i, d in enumerate(d_values):
        for j, e in enumerate(eps_values):
            dd = int(d) if float(d).is_integer() else float(d)
            w.writerow([repr(dd), repr(float(e)), repr(float(grid[i, j]))])
    return buf.getvalue()
