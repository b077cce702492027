"""Ordered gate schedules with durations, resets and a line-oriented text form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .gates import ControlledGate, GateMatrix
from .hilbert import HybridState, Qubit, RegisterLayout


@dataclass(frozen=True)
class Reset:
    """Discard ``wires`` (projecting onto their dominant state) and re-prepare them.

    ``state`` is '0' or '+'. ``min_weight`` guards the near-product check.
    """

    wires: tuple[int, ...]
    state: str = "0"
    min_weight: float = 0.0

    duration = 0.0

    def describe(self) -> str:
        return f"RESET {','.join(map(str, self.wires))} state={self.state} 0"


@dataclass
class RunInfo:
    kept_weights: list[float] = field(default_factory=list)

    @property
    def kept_weight(self) -> float:
        return float(np.prod(self.kept_weights)) if self.kept_weights else 1.0


def reset_tensor(psi: np.ndarray, axes: Sequence[int], state: str = "0",
                 min_weight: float = 0.0) -> tuple[np.ndarray, float]:
    """Reset qubit ``axes`` of a raw amplitude tensor; returns (tensor, kept weight)."""
    axes = list(axes)
    rest = [i for i in range(psi.ndim) if i not in axes]
    moved = np.transpose(psi, axes + rest)
    m = moved.reshape(2 ** len(axes), -1)
    rho = m @ m.conj().T
    evals, evecs = np.linalg.eigh(rho)
    total = float(np.trace(rho).real)
    weight = float(evals[-1].real) / total
    if weight < min_weight:
        raise ValueError(f"register is not near product form: kept weight {weight:.4f}")
    kept = evecs[:, -1].conj() @ m
    kept *= np.sqrt(total / max(float(np.vdot(kept, kept).real), 1e-300))
    fresh = np.array([1.0, 0.0]) if state == "0" else np.array([1.0, 1.0]) / np.sqrt(2)
    vec = np.array([1.0])
    for _ in axes:
        vec = np.kron(vec, fresh)
    out = np.multiply.outer(vec, kept).reshape(moved.shape)
    return np.transpose(out, np.argsort(axes + rest)), weight


def _reset(state: HybridState, op: Reset) -> tuple[HybridState, float]:
    layout = state.layout
    for w in op.wires:
        if not isinstance(layout.wires[w], Qubit):
            raise ValueError("only qubit wires can be reset")
    psi, weight = reset_tensor(state.tensor, op.wires, op.state, op.min_weight)
    return HybridState(layout, psi.reshape(-1), state.leaked_norm, state.leak_threshold), weight


class Circuit:
    """A gate list on a fixed register layout."""

    def __init__(self, layout: RegisterLayout, ops: Iterable = (), metadata: dict | None = None):
        self.layout = layout
        self.ops: list = []
        self.metadata = dict(metadata or {})
        self.extend(ops)

    def append(self, op) -> "Circuit":
        wires = op.wires
        self.layout.check_wires(wires)
        if isinstance(op, GateMatrix):
            for w, d in zip(op.wires, op.dims):
                if self.layout.dims[w] != d:
                    raise ValueError(f"{op.name} expects dim {d} on wire {w}")
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable) -> "Circuit":
        for op in ops:
            if isinstance(op, Circuit):
                self.extend(op.ops)
            else:
                self.append(op)
        return self

    def __iter__(self):
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def gates(self) -> list[GateMatrix]:
        return [op for op in self.ops if isinstance(op, GateMatrix)]

    @property
    def duration(self) -> float:
        return float(sum(op.duration for op in self.ops))

    def run(self, state: HybridState) -> tuple[HybridState, RunInfo]:
        if state.layout != self.layout:
            raise ValueError(f"state layout {state.layout} differs from circuit layout {self.layout}")
        info = RunInfo()
        for op in self.ops:
            if isinstance(op, Reset):
                state, w = _reset(state, op)
                info.kept_weights.append(w)
            else:
                state = op.apply_to(state)
        return state, info

    def apply_to(self, state: HybridState) -> HybridState:
        return self.run(state)[0]

    def inverse(self) -> "Circuit":
        if any(isinstance(op, Reset) for op in self.ops):
            raise ValueError("a circuit with resets has no inverse")
        return Circuit(self.layout, [op.inverse() for op in reversed(self.ops)],
                       dict(self.metadata))

    def unitary(self) -> np.ndarray:
        """Dense matrix of the whole circuit (small registers only)."""
        dim = self.layout.dim
        psi = np.eye(dim, dtype=complex).reshape(self.layout.dims + (dim,))
        for op in self.ops:
            if isinstance(op, Reset):
                raise ValueError("a circuit with resets has no unitary")
            psi = op.apply_tensor(psi, op.wires)
        return psi.reshape(dim, dim)

    def displacements(self, wire: int | None = None) -> list[float]:
        """Displacement amplitudes acting on ``wire`` (all modes if None)."""
        out = []
        for g in self.gates:
            base = g.target if isinstance(g, ControlledGate) else g
            if "beta" in base.params and (wire is None or base.wires[0] == wire):
                out.append(base.params["beta"])
        return out

    def max_displacement(self, wire: int | None = None) -> float:
        d = self.displacements(wire)
        return max((abs(b) for b in d), default=0.0)

    def net_displacement_range(self, wire: int, controls: Sequence[int] | None = None) -> float:
        """Largest total shift the controlled displacements on ``wire`` can add up to."""
        pos = neg = 0.0
        for g in self.gates:
            base = g.target if isinstance(g, ControlledGate) else g
            if "beta" in base.params and base.wires[0] == wire:
                b = base.params["beta"]
                pos += max(b, 0.0)
                neg += min(b, 0.0)
        return max(pos, -neg)

    def to_text(self) -> str:
        head = [f"# layout {self.layout}"]
        head += [f"# {k} = {v}" for k, v in sorted(self.metadata.items())]
        return "\n".join(head + [op.describe() for op in self.ops]) + "\n"

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for op in self.ops:
            key = op.name if isinstance(op, GateMatrix) else "RESET"
            out[key] = out.get(key, 0) + 1
        return out


def parse_text(text: str) -> list[dict]:
    """Parse the text form back into records (name, wires, params, duration)."""
    records = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, wires, params, duration = line.split(" ")
        ps = {}
        if params != "-":
            for kv in params.split(";"):
                k, v = kv.split("=", 1)
                try:
                    ps[k] = float(v)
                except ValueError:
                    ps[k] = v
        records.append({"name": name, "wires": tuple(int(w) for w in wires.split(",")),
                        "params": ps, "duration": float(duration)})
    return records
