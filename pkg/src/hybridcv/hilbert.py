"""Hybrid qubit/oscillator registers and pure states.

Amplitudes are stored row-major over the wire list, so wire 0 is the most
significant index. A qubit wire has dimension 2 and a mode wire has a fixed
Fock cutoff ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_LEAK_THRESHOLD = 1e-4
_MAX_DIM = 2**31


class TruncationLeakError(RuntimeError):
    """Raised when the cumulative Fock-truncation leak exceeds its threshold."""


@dataclass(frozen=True)
class Qubit:
    @property
    def dim(self) -> int:
        return 2

    def __str__(self) -> str:
        return "Q"


@dataclass(frozen=True)
class Mode:
    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"mode cutoff must be an integer >= 2, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return int(self.cutoff)

    def __str__(self) -> str:
        return f"M{self.cutoff}"


WireKind = Qubit | Mode


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered list of qubit and mode wires."""

    wires: tuple[WireKind, ...]

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(self.wires))
        for w in self.wires:
            if not isinstance(w, (Qubit, Mode)):
                raise TypeError(f"not a wire kind: {w!r}")
        if self.dim > _MAX_DIM:
            raise OverflowError(f"register dimension {self.dim} is too large")

    @classmethod
    def of(cls, n_qubits: int = 0, cutoffs: Sequence[int] = ()) -> "RegisterLayout":
        """Qubits first, then one mode per cutoff."""
        return cls(tuple([Qubit()] * n_qubits) + tuple(Mode(c) for c in cutoffs))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(w.dim for w in self.wires)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=object)) if self.wires else 1

    @property
    def qubits(self) -> list[int]:
        return [i for i, w in enumerate(self.wires) if isinstance(w, Qubit)]

    @property
    def modes(self) -> list[int]:
        return [i for i, w in enumerate(self.wires) if isinstance(w, Mode)]

    def __len__(self) -> int:
        return len(self.wires)

    def __add__(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.wires + other.wires)

    def sub(self, idx: Sequence[int]) -> "RegisterLayout":
        return RegisterLayout(tuple(self.wires[i] for i in idx))

    def check_wires(self, idx: Sequence[int]) -> None:
        if len(set(idx)) != len(idx):
            raise ValueError(f"repeated wire index in {tuple(idx)}")
        for i in idx:
            if not 0 <= i < len(self.wires):
                raise IndexError(f"wire {i} out of range for {len(self.wires)} wires")

    def __str__(self) -> str:
        return "[" + ",".join(str(w) for w in self.wires) + "]"


def apply_matrix(psi: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``mat`` with the tensor ``psi`` over ``axes`` (row-major order)."""
    axes = list(axes)
    k = len(axes)
    moved = np.moveaxis(psi, axes, range(k))
    lead = int(np.prod(moved.shape[:k]))
    out = (mat @ moved.reshape(lead, -1)).reshape(moved.shape)
    return np.moveaxis(out, range(k), axes)


@dataclass(frozen=True)
class HybridState:
    """Normalized amplitude vector over a register.

    ``leaked_norm`` accumulates the squared norm removed by sub-unitary
    (truncated) gates before renormalization.
    """

    layout: RegisterLayout
    amplitudes: np.ndarray
    leaked_norm: float = 0.0
    leak_threshold: float = field(default=DEFAULT_LEAK_THRESHOLD, compare=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.dim:
            raise ValueError(f"expected {self.layout.dim} amplitudes, got {amps.size}")
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("zero state vector")
        object.__setattr__(self, "amplitudes", amps / nrm)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    @classmethod
    def from_tensor(cls, layout: RegisterLayout, psi: np.ndarray, leaked_norm: float = 0.0,
                    leak_threshold: float = DEFAULT_LEAK_THRESHOLD) -> "HybridState":
        return cls(layout, np.asarray(psi).reshape(-1), leaked_norm, leak_threshold)

    def evolve(self, psi: np.ndarray, extra_leak: float = 0.0) -> "HybridState":
        """New state from an unnormalized tensor, booking the norm deficit as leak."""
        sq = float(np.vdot(psi, psi).real)
        leak = self.leaked_norm + max(0.0, 1.0 - sq) + extra_leak
        if leak > self.leak_threshold:
            raise TruncationLeakError(
                f"truncation leak {leak:.3e} exceeds threshold {self.leak_threshold:.1e}; "
                "increase the Fock cutoff")
        return HybridState(self.layout, psi.reshape(-1), leak, self.leak_threshold)

    def apply(self, op) -> "HybridState":
        """Apply a gate or circuit (anything with ``apply_to``)."""
        return op.apply_to(self)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityBlock:
    """Reduced density matrix over a sub-register."""

    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(f"matrix shape {m.shape} does not match layout dim {self.layout.dim}")
        object.__setattr__(self, "matrix", m)

    def check(self, tol: float = 1e-10) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -tol:
            raise ValueError("density matrix is not positive semidefinite")

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))


def basis_state(layout: RegisterLayout, index: Sequence[int]) -> HybridState:
    """Computational/Fock basis state with one level per wire."""
    amps = np.zeros(layout.dims, dtype=complex)
    amps[tuple(index)] = 1.0
    return HybridState(layout, amps.reshape(-1))


def from_vector(layout: RegisterLayout, vec: Sequence[complex]) -> HybridState:
    return HybridState(layout, np.asarray(vec, dtype=complex))


def tensor(a: HybridState, b: HybridState) -> HybridState:
    """Kronecker product of two states; leaks add."""
    layout = a.layout + b.layout
    return HybridState(layout, np.kron(a.amplitudes, b.amplitudes),
                       a.leaked_norm + b.leaked_norm,
                       min(a.leak_threshold, b.leak_threshold))


def tensor_all(states: Sequence[HybridState]) -> HybridState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def _split(psi: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reshape so that the kept axes form the rows (in the given order)."""
    rest = [i for i in range(psi.ndim) if i not in keep]
    moved = np.transpose(psi, list(keep) + rest)
    rows = int(np.prod([psi.shape[i] for i in keep]))
    return moved.reshape(rows, -1)


def partial_trace(s: HybridState, keep: Sequence[int]) -> DensityBlock:
    """Reduced density matrix on ``keep`` (ordered as given)."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    s.layout.check_wires(keep)
    m = _split(s.tensor, keep)
    rho = m @ m.conj().T
    return DensityBlock(s.layout.sub(keep), rho / np.trace(rho).real)


def fidelity(a: DensityBlock | HybridState, b: HybridState) -> float:
    """|<a|b>|^2 for pure a, <b|rho|b> for mixed a."""
    if a.layout != b.layout:
        raise ValueError(f"layout mismatch: {a.layout} vs {b.layout}")
    if isinstance(a, HybridState):
        f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    else:
        v = b.amplitudes
        f = np.real(np.vdot(v, a.matrix @ v))
    return float(min(1.0, max(0.0, f)))


def project_mode(s: HybridState, wire: int, target: HybridState) -> tuple[HybridState, float]:
    """Project ``wire`` onto a single-wire ``target``; the wire is removed.

    Returns the renormalized remainder and the Born probability.
    """
    s.layout.check_wires([wire])
    if len(target.layout) != 1 or target.layout.wires[0] != s.layout.wires[wire]:
        raise ValueError("target must live on exactly the projected wire")
    if len(s.layout) == 1:
        raise ValueError("cannot project the only wire of a state")
    psi = np.tensordot(target.amplitudes.conj(), s.tensor, axes=([0], [wire]))
    prob = float(np.vdot(psi, psi).real)
    if prob < 1e-14:
        raise ValueError("degenerate branch: projection probability is zero")
    rest = s.layout.sub([i for i in range(len(s.layout)) if i != wire])
    return HybridState(rest, psi.reshape(-1), s.leaked_norm, s.leak_threshold), prob


def discard(s: HybridState, wires: Sequence[int], min_weight: float = 0.0) -> tuple[HybridState, float]:
    """Drop ``wires`` by projecting them onto their dominant reduced eigenvector.

    This is the pure-state reset used between circuit stages. The weight of the
    retained branch is returned; it is a lower bound on how much of the state
    survives unchanged, so callers multiply it into their fidelity figures.
    """
    wires = list(wires)
    s.layout.check_wires(wires)
    m = _split(s.tensor, wires)
    rho = m @ m.conj().T
    evals, evecs = np.linalg.eigh(rho)
    u = evecs[:, -1]
    weight = float(evals[-1].real / np.trace(rho).real)
    if weight < min_weight:
        raise ValueError(f"register is not near product form: kept weight {weight:.4f}")
    rest_idx = [i for i in range(len(s.layout)) if i not in wires]
    rest = s.layout.sub(rest_idx)
    psi = u.conj() @ m
    return HybridState(rest, psi, s.leaked_norm, s.leak_threshold), weight


def expectation(s: HybridState, wire: int, op: np.ndarray) -> complex:
    """<op> on one wire."""
    return partial_trace(s, [wire]).expect(op)
