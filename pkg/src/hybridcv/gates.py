"""Gate constructions for qubits, oscillator modes and hybrid pairs.

Conventions: x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)), hbar = 1 and
D(beta) = exp(-i beta p), which shifts a wavefunction by +beta in position.

Gates know how to act on a state tensor directly (``apply_tensor``) so that
structured operators (controlled blocks, functions of position) never have to
be densified. ``GateMatrix.matrix`` still returns the dense matrix over the
gate's wires for small-scale checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .hilbert import DensityBlock, HybridState, Mode, apply_matrix

# --------------------------------------------------------------------------
# single-mode operators and position/momentum eigenbases


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)


def position_operator(cutoff: int) -> np.ndarray:
    a = annihilation(cutoff)
    return (a + a.T) / np.sqrt(2)


def momentum_operator(cutoff: int) -> np.ndarray:
    a = annihilation(cutoff)
    return (a - a.T) / (1j * np.sqrt(2))


def number_operator(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float))


@dataclass(frozen=True)
class PositionDiagonalization:
    """Eigen-decomposition of the truncated position operator.

    The eigenvalues are the Gauss-Hermite nodes; each eigenvector column is
    fixed to have a positive vacuum component.
    """

    cutoff: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights w_k such that sum_k w_k f(x_k) ~ integral f."""
        return _dvr_weights(self.cutoff)

    def function(self, values: np.ndarray) -> np.ndarray:
        """V diag(values) V^T."""
        v = self.eigenvectors
        return (v * values) @ v.T


@lru_cache(maxsize=None)
def position_diagonalization(cutoff: int) -> PositionDiagonalization:
    off = np.sqrt(np.arange(1, cutoff) / 2.0)
    lam, vec = np.linalg.eigh(np.diag(off, 1) + np.diag(off, -1))
    vec = vec * np.sign(vec[0])
    lam = 0.5 * (lam - lam[::-1])  # exact symmetry about zero
    lam.setflags(write=False)
    vec.setflags(write=False)
    return PositionDiagonalization(cutoff, lam, vec)


@lru_cache(maxsize=None)
def _momentum_basis(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    # p = F^dag (-x) F with F = diag(i^n), exact in the truncated space
    pd = position_diagonalization(cutoff)
    phases = (1j) ** (-np.arange(cutoff) % 4)
    vec = (phases[:, None] * pd.eigenvectors)[:, ::-1]
    lam = -pd.eigenvalues[::-1]
    return lam, vec


def hermite_functions(q: np.ndarray, cutoff: int) -> np.ndarray:
    """Normalized Hermite functions phi_n(q), n < cutoff, shape (cutoff, len(q)).

    Uses the three-term recurrence with a running log scale so that the
    Gaussian factor never underflows before the polynomial grows.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    out = np.empty((cutoff, q.size))
    p_prev = np.zeros(q.size)
    p = np.full(q.size, np.pi ** -0.25)
    scale = -0.5 * q * q
    big = 1e150
    for n in range(cutoff):
        with np.errstate(divide="ignore"):
            out[n] = np.sign(p) * np.exp(np.log(np.abs(p)) + scale)
        p_next = np.sqrt(2.0 / (n + 1)) * q * p - np.sqrt(n / (n + 1.0)) * p_prev
        p_prev, p = p, p_next
        over = np.abs(p) > big
        if over.any():
            p[over] /= big
            p_prev[over] /= big
            scale[over] += np.log(big)
    return out


@lru_cache(maxsize=None)
def _dvr_weights(cutoff: int) -> np.ndarray:
    x = position_diagonalization(cutoff).eigenvalues
    w = 1.0 / np.sum(hermite_functions(x, cutoff) ** 2, axis=0)
    w.setflags(write=False)
    return w


def wavefunction_to_fock(psi: Callable[[np.ndarray], np.ndarray], cutoff: int,
                         lo: float, hi: float, step: float | None = None) -> np.ndarray:
    """Fock coefficients <n|psi> by trapezoid quadrature over [lo, hi].

    The default step resolves the fastest Hermite oscillation below the cutoff
    with about 16 points per wavelength.
    """
    if step is None:
        step = 2 * np.pi / np.sqrt(2 * cutoff + 1) / 16
    q = np.linspace(lo, hi, int(np.ceil((hi - lo) / step)) + 1)
    h = q[1] - q[0]
    vals = np.asarray(psi(q), dtype=complex)
    w = np.full(q.size, h)
    w[0] = w[-1] = h / 2
    return hermite_functions(q, cutoff) @ (w * vals)


# --------------------------------------------------------------------------
# gate objects


class GateMatrix:
    """A gate on specific wires with an abstract duration.

    Subclasses implement ``apply_tensor``; ``matrix`` is derived from it.
    """

    name: str = "G"
    subunitary: bool = False

    def __init__(self, wires: Sequence[int], dims: Sequence[int], duration: float = 0.0,
                 params: dict | None = None):
        self.wires = tuple(int(w) for w in wires)
        self.dims = tuple(int(d) for d in dims)
        self.duration = float(duration)
        self.params = dict(params or {})

    def apply_tensor(self, psi: np.ndarray, axes: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def apply_to(self, state: HybridState) -> HybridState:
        for w, d in zip(self.wires, self.dims):
            if state.layout.dims[w] != d:
                raise ValueError(f"{self.name}: wire {w} has dim {state.layout.dims[w]}, expected {d}")
        return state.evolve(self.apply_tensor(state.tensor, self.wires))

    @cached_property
    def matrix(self) -> np.ndarray:
        dim = int(np.prod(self.dims))
        eye = np.eye(dim, dtype=complex).reshape(self.dims + (dim,))
        out = self.apply_tensor(eye, range(len(self.dims)))
        return out.reshape(dim, dim)

    @cached_property
    def deviation(self) -> float:
        """max |U^dag U - I|; nonzero only for truncated displacements."""
        m = self.matrix
        return float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())

    def inverse(self) -> "GateMatrix":
        raise NotImplementedError

    def relabel(self, mapping: dict[int, int]) -> "GateMatrix":
        """Same gate on renamed wires."""
        g = self._copy()
        g.wires = tuple(mapping.get(w, w) for w in self.wires)
        return g

    def _copy(self) -> "GateMatrix":
        g = object.__new__(type(self))
        g.__dict__.update({k: v for k, v in self.__dict__.items() if k not in ("matrix", "deviation")})
        return g

    def describe(self) -> str:
        """One line: GATE wire-list params duration."""
        wires = ",".join(str(w) for w in self.wires)
        ps = ";".join(f"{k}={_fmt(v)}" for k, v in self.params.items()) or "-"
        return f"{self.name} {wires} {ps} {self.duration:.12g}"

    def __repr__(self) -> str:
        return f"<{self.describe()}>"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v).replace(" ", "")


class MatrixGate(GateMatrix):
    """Dense operator on its wires."""

    def __init__(self, name: str, wires, dims, op: np.ndarray, duration: float = 0.0,
                 params: dict | None = None, subunitary: bool = False):
        super().__init__(wires, dims, duration, params)
        self.name = name
        self.op = op
        self.subunitary = subunitary

    def apply_tensor(self, psi, axes):
        return apply_matrix(psi, self.op, axes)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.op, dtype=complex)

    def inverse(self) -> "MatrixGate":
        params = dict(self.params)
        if "beta" in params:
            params["beta"] = -params["beta"]
        name = self.name[:-3] if self.name.endswith("_DG") else self.name + "_DG"
        if "beta" in self.params:
            name = self.name
        return MatrixGate(name, self.wires, self.dims, self.op.conj().T, self.duration, params,
                          self.subunitary)


class ControlledGate(GateMatrix):
    """Applies ``target`` on the branch where the controls take ``values``."""

    def __init__(self, controls: Sequence[int], values: Sequence[int], target: GateMatrix,
                 name: str | None = None):
        controls = tuple(controls)
        super().__init__(controls + target.wires, (2,) * len(controls) + target.dims,
                         target.duration, dict(target.params))
        self.controls = controls
        self.values = tuple(int(v) for v in values)
        self.target = target
        self.subunitary = target.subunitary
        self.name = name or ("C" * len(controls) + target.name)
        if len(self.values) != len(controls):
            raise ValueError("one control value per control wire")
        self.params["ctrl"] = "".join(str(v) for v in self.values)

    def apply_tensor(self, psi, axes):
        axes = list(axes)
        nc = len(self.controls)
        c_axes, t_axes = axes[:nc], axes[nc:]
        index = [slice(None)] * psi.ndim
        for a, v in zip(c_axes, self.values):
            index[a] = v
        # target axes inside the sliced tensor shift down past removed axes
        shifted = [a - sum(1 for c in c_axes if c < a) for a in t_axes]
        out = np.array(psi, dtype=complex, copy=True)
        out[tuple(index)] = self.target.apply_tensor(psi[tuple(index)], shifted)
        return out

    def relabel(self, mapping):
        g = super().relabel(mapping)
        g.controls = tuple(mapping.get(w, w) for w in self.controls)
        g.target = self.target.relabel(mapping)
        return g

    def inverse(self) -> "ControlledGate":
        return ControlledGate(self.controls, self.values, self.target.inverse(), self.name)


class PositionGate(GateMatrix):
    """Operator diagonal in the quadrature eigenbasis of its modes.

    ``table`` has shape (N_1, ..., N_k) for a pure phase/function of the mode
    quadratures, or (N_1, ..., N_k, Q, Q) when it also acts on qubits, with
    Q = 2**len(qubits). Each mode uses the basis named in ``bases`` ('x' or 'p').
    Wires are ordered qubits first, then modes.
    """

    def __init__(self, name: str, qubits: Sequence[int], modes: Sequence[int],
                 cutoffs: Sequence[int], table: np.ndarray, bases: Sequence[str] | None = None,
                 duration: float = 0.0, params: dict | None = None):
        qubits, modes = tuple(qubits), tuple(modes)
        super().__init__(qubits + modes, (2,) * len(qubits) + tuple(cutoffs), duration, params)
        self.name = name
        self.n_qubits = len(qubits)
        self.cutoffs = tuple(cutoffs)
        self.bases = tuple(bases or ("x",) * len(modes))
        self.table = table

    def _basis(self, i: int) -> np.ndarray:
        n = self.cutoffs[i]
        if self.bases[i] == "x":
            return position_diagonalization(n).eigenvectors
        return _momentum_basis(n)[1]

    def apply_tensor(self, psi, axes):
        axes = list(axes)
        q_axes, m_axes = axes[: self.n_qubits], axes[self.n_qubits:]
        for i, ax in enumerate(m_axes):
            psi = apply_matrix(psi, self._basis(i).conj().T, [ax])
        front = m_axes + q_axes
        moved = np.moveaxis(psi, front, range(len(front)))
        shape = moved.shape
        grid = int(np.prod(self.cutoffs))
        if self.n_qubits == 0:
            out = moved.reshape(grid, -1) * self.table.reshape(grid, 1)
        else:
            nq = 2 ** self.n_qubits
            tab = self.table.reshape(grid, nq, nq)
            out = np.einsum("gij,gjr->gir", tab, moved.reshape(grid, nq, -1))
        psi = np.moveaxis(out.reshape(shape), range(len(front)), front)
        for i, ax in enumerate(m_axes):
            psi = apply_matrix(psi, self._basis(i), [ax])
        return psi

    def inverse(self) -> "PositionGate":
        if self.n_qubits == 0:
            tab = self.table.conj()
        else:
            tab = np.swapaxes(self.table, -1, -2).conj()
        qubits = self.wires[: self.n_qubits]
        modes = self.wires[self.n_qubits:]
        name = self.name[:-3] if self.name.endswith("_DG") else self.name + "_DG"
        return PositionGate(name, qubits, modes, self.cutoffs, tab, self.bases,
                            self.duration, self.params)


# --------------------------------------------------------------------------
# constructors


def _quadrature_values(cutoff: int, quadrature: str) -> np.ndarray:
    if quadrature == "x":
        return position_diagonalization(cutoff).eigenvalues
    if quadrature == "p":
        return _momentum_basis(cutoff)[0]
    raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")


@lru_cache(maxsize=256)
def _displacement_matrix(beta: float, cutoff: int) -> np.ndarray:
    # <m|D|n> = integral phi_m(q) phi_n(q - beta) dq. After q = t + beta/2 the
    # integrand is a polynomial of degree m + n times exp(-t^2), so the
    # cutoff-point Gauss-Hermite rule on the position grid is exact.
    if beta == 0:
        return np.eye(cutoff)
    t = position_diagonalization(cutoff).eigenvalues
    w = _dvr_weights(cutoff)
    left = hermite_functions(t + beta / 2, cutoff)
    right = hermite_functions(t - beta / 2, cutoff)
    d = (left * w) @ right.T
    d.setflags(write=False)
    return d


def displacement(cutoff: int, beta: float, mode: int = 0) -> MatrixGate:
    """Position shift exp(-i beta p), projected onto the first ``cutoff`` levels."""
    beta = float(beta)
    if not np.isfinite(beta):
        raise ValueError("displacement must be finite")
    return MatrixGate("D", (mode,), (cutoff,), _displacement_matrix(beta, cutoff),
                      duration=abs(beta), params={"beta": beta}, subunitary=beta != 0)


def conditional_displacement(qubit: int, mode: int, beta: float, cutoff: int,
                             control_value: int = 1) -> ControlledGate:
    """|0><0| x I + |1><1| x D(beta) (or the mirror for ``control_value=0``)."""
    return ControlledGate((qubit,), (control_value,), displacement(cutoff, beta, mode))


@lru_cache(maxsize=64)
def _squeeze_matrix(r: float, cutoff: int) -> np.ndarray:
    a = annihilation(cutoff)
    m = expm(0.5 * r * (a @ a - a.T @ a.T))
    m.setflags(write=False)
    return m


def squeeze(cutoff: int, r: float, mode: int = 0) -> MatrixGate:
    """exp((r/2)(a^2 - a^dag^2)); squeezed vacuum has Var(x) = exp(-2r)/2."""
    r = float(r)
    if not np.isfinite(r):
        raise ValueError("squeezing must be finite")
    return MatrixGate("S", (mode,), (cutoff,), _squeeze_matrix(r, cutoff),
                      duration=abs(r), params={"r": r})


def free_evolution(cutoff: int, mode: int = 0, quarters: int = 1) -> MatrixGate:
    """exp(i pi n quarters / 2); one quarter maps a packet at +x to +p."""
    phase = (1j) ** ((quarters * np.arange(cutoff)) % 4)
    return MatrixGate("F", (mode,), (cutoff,), np.diag(phase), duration=np.pi / 2 * abs(quarters),
                      params={"quarters": quarters})


def apply_position_function(cutoff: int, f: Callable[[np.ndarray], np.ndarray],
                            mode: int = 0, name: str = "FX", params: dict | None = None,
                            duration: float = 0.0) -> PositionGate:
    """f(x) as V diag(f(lambda)) V^T on the truncated space."""
    lam = position_diagonalization(cutoff).eigenvalues
    table = np.asarray(f(lam), dtype=complex) * np.ones(cutoff)
    return PositionGate(name, (), (mode,), (cutoff,), table, duration=duration, params=params)


def position_controlled(qubit: int, mode: int, cutoff: int,
                        blocks: Callable[[np.ndarray], np.ndarray], name: str = "RX",
                        params: dict | None = None, duration: float = 0.0) -> PositionGate:
    """Qubit operator that depends on position: blocks(lambda) has shape (N, 2, 2)."""
    lam = position_diagonalization(cutoff).eigenvalues
    table = np.asarray(blocks(lam), dtype=complex)
    return PositionGate(name, (qubit,), (mode,), (cutoff,), table, duration=duration,
                        params=params)


def cross_phase(mode_j: int, mode_k: int, lam: float, cutoffs: tuple[int, int]) -> PositionGate:
    """exp(i lam x_j x_k)."""
    xj = position_diagonalization(cutoffs[0]).eigenvalues
    xk = position_diagonalization(cutoffs[1]).eigenvalues
    table = np.exp(1j * lam * np.outer(xj, xk))
    return PositionGate("XX", (), (mode_j, mode_k), cutoffs, table,
                        duration=abs(lam), params={"lambda": float(lam)})


_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def hybrid_pauli_exp(qubit: int, mode: int, axis: str, quadrature: str, theta: float,
                     cutoff: int) -> PositionGate:
    """exp(i theta q sigma_axis) with q the chosen quadrature of the mode."""
    sigma = _PAULI[axis.upper()]
    q = _quadrature_values(cutoff, quadrature)
    ang = theta * q
    table = (np.cos(ang)[:, None, None] * np.eye(2)
             + 1j * np.sin(ang)[:, None, None] * sigma)
    return PositionGate(f"E{quadrature.upper()}{axis.upper()}", (qubit,), (mode,), (cutoff,),
                        table, bases=(quadrature,), duration=abs(theta),
                        params={"theta": float(theta)})


def w_kappa(qubit: int, mode: int, kappa: float, cutoff: int) -> PositionGate:
    """diag(exp(-i kappa x/2), exp(+i kappa x/2)) on (qubit, mode)."""
    x = position_diagonalization(cutoff).eigenvalues
    table = np.zeros((cutoff, 2, 2), dtype=complex)
    table[:, 0, 0] = np.exp(-0.5j * kappa * x)
    table[:, 1, 1] = np.exp(0.5j * kappa * x)
    return PositionGate("W", (qubit,), (mode,), (cutoff,), table,
                        duration=abs(kappa) / 2, params={"kappa": float(kappa)})


def single_qubit(qubit: int, op: np.ndarray, name: str = "U") -> MatrixGate:
    return MatrixGate(name, (qubit,), (2,), np.asarray(op, dtype=complex))


def toffoli(c1: int, c2: int, target: int) -> MatrixGate:
    m = np.eye(8, dtype=complex)
    m[6:, 6:] = _PAULI["X"]
    return MatrixGate("CCX", (c1, c2, target), (2, 2, 2), m)


# --------------------------------------------------------------------------
# Wigner function


def wigner(rho: DensityBlock | np.ndarray, x_grid: np.ndarray, p_grid: np.ndarray) -> np.ndarray:
    """Wigner function W[p, x] of a single-mode density matrix.

    Uses the Fock-basis kernel built by the usual two-index recursion, with
    W normalized so that its integral over the plane is the trace.
    """
    m = rho.matrix if isinstance(rho, DensityBlock) else np.asarray(rho)
    if isinstance(rho, DensityBlock):
        if len(rho.layout) != 1 or not isinstance(rho.layout.wires[0], Mode):
            raise ValueError("wigner needs a single-mode density block")
    x_grid = np.asarray(x_grid, dtype=float)
    p_grid = np.asarray(p_grid, dtype=float)
    xx, pp = np.meshgrid(x_grid, p_grid)
    amp = (xx + 1j * pp) / np.sqrt(2)
    n = m.shape[0]
    sq = np.sqrt(np.arange(n, dtype=float))
    wl = [None] * n
    wl[0] = np.exp(-2.0 * np.abs(amp) ** 2) / np.pi
    w = np.real(m[0, 0]) * wl[0]
    for k in range(1, n):
        wl[k] = 2.0 * amp * wl[k - 1] / sq[k]
        w = w + 2 * np.real(m[0, k] * wl[k])
    for i in range(1, n):
        temp = wl[i]
        wl[i] = (2 * np.conj(amp) * temp - sq[i] * wl[i - 1]) / sq[i]
        w = w + np.real(m[i, i] * wl[i])
        for k in range(i + 1, n):
            temp2 = (2 * amp * wl[k - 1] - sq[i] * temp) / sq[k]
            temp = wl[k]
            wl[k] = temp2
            w = w + 2 * np.real(m[i, k] * wl[k])
    return w
