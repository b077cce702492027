"""Position-dependent qubit flips: square-wave targets and their block encodings.

Every target here is a bit-valued function of position. The block encoding
puts the complementary selector S = 1 - bit on the diagonal of

    R(x) = [[S, sqrt(1 - S^2)], [-sqrt(1 - S^2), S]]

so a qubit holding the bit is returned to |0> (disentangling direction) and a
qubit starting in |0> picks up the bit (entangling direction, with a sign on
the flipped branch).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .gates import PositionGate, position_diagonalization

# --------------------------------------------------------------------------
# targets


@dataclass(frozen=True)
class DataBit:
    """Bit of weight 2**(n_bits - j) of the lattice level x/delta (j = 1 is the MSB)."""

    j: int
    n_bits: int
    delta: float

    def __post_init__(self):
        if not 1 <= self.j <= self.n_bits:
            raise ValueError(f"DataBit needs 1 <= j <= n_bits, got j={self.j}, n_bits={self.n_bits}")


@dataclass(frozen=True)
class PadBit:
    """Bit j (j = 1 most significant) of the comb index k for x = (2**bits k + y) delta.

    A nonzero ``offset`` reads the same target at x + offset.
    """

    j: int
    bits: int
    a: int
    delta: float
    offset: float = 0.0

    def __post_init__(self):
        if not 1 <= self.j <= self.a:
            raise ValueError(f"PadBit needs 1 <= j <= a, got j={self.j}, a={self.a}")


@dataclass(frozen=True)
class ShiftedPadBit:
    """PadBit read at x + (2**(a_prime - j) - 1) 2**bits delta.

    On a negative comb index k it returns bit j of |k|.
    """

    j: int
    bits: int
    a_prime: int
    delta: float

    def __post_init__(self):
        if not 1 <= self.j <= self.a_prime:
            raise ValueError(f"ShiftedPadBit needs 1 <= j <= a_prime, got j={self.j}")


@dataclass(frozen=True)
class SignStep:
    """Bit 1 for x < threshold, 0 otherwise.

    With a finite ``halfwidth`` L the step is the L-window of a square wave of
    period 2L, which is what a Fourier approximant can represent.
    """

    threshold: float = 0.0
    halfwidth: float = math.inf


@dataclass(frozen=True)
class Step:
    """Bit 1 for x >= threshold, 0 below (the mirror of SignStep)."""

    threshold: float = 0.0
    halfwidth: float = math.inf


@dataclass(frozen=True)
class Constant:
    """Constant selector value (1 means never flip)."""

    value: int = 1
    halfwidth: float = 1.0


SquareWaveSpec = Union[DataBit, PadBit, ShiftedPadBit, SignStep, Step, Constant]


def plateau(spec: SquareWaveSpec) -> tuple[float, float]:
    """(start, L): the selector is 1 on [start, start + L) modulo 2L."""
    if isinstance(spec, DataBit):
        p = 2 ** (spec.n_bits - spec.j)
        return -0.5 * spec.delta, p * spec.delta
    if isinstance(spec, PadBit):
        p = 2 ** (spec.bits + spec.a - spec.j)
        return -0.5 * spec.delta - spec.offset, p * spec.delta
    if isinstance(spec, ShiftedPadBit):
        p = 2 ** (spec.bits + spec.a_prime - spec.j)
        shift = (2 ** (spec.a_prime - spec.j) - 1) * 2 ** spec.bits * spec.delta
        return -0.5 * spec.delta - shift, p * spec.delta
    if isinstance(spec, SignStep):
        return spec.threshold, spec.halfwidth
    if isinstance(spec, Step):
        return spec.threshold - spec.halfwidth, spec.halfwidth
    if isinstance(spec, Constant):
        return 0.0, spec.halfwidth
    raise TypeError(f"unknown target {spec!r}")


def half_period(spec: SquareWaveSpec) -> float:
    return plateau(spec)[1]


def natural_period(spec: SquareWaveSpec) -> float:
    return 2 * half_period(spec)


def lattice_spacing(spec: SquareWaveSpec) -> float:
    return getattr(spec, "delta", 1.0)


def selector(spec: SquareWaveSpec, x) -> np.ndarray:
    """S(x) in {0, 1}: 1 keeps the qubit, 0 flips it."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, Constant):
        return np.full(x.shape, float(spec.value))
    start, L = plateau(spec)
    if math.isinf(L):
        if isinstance(spec, Step):
            return (x < spec.threshold).astype(float)
        return (x >= start).astype(float)
    u = np.mod(x - start, 2 * L)
    return (u < L).astype(float)


def evaluate_target(spec: SquareWaveSpec, x) -> np.ndarray | int:
    """Target bit at x (0 or 1)."""
    bit = 1 - selector(spec, x).astype(int)
    return int(bit) if np.ndim(bit) == 0 else bit


# --------------------------------------------------------------------------
# Fourier approximants


@dataclass(frozen=True)
class Ideal:
    """Exact selector; ``nominal_eps`` only sets the modeled duration."""

    nominal_eps: float = 1e-3


@dataclass(frozen=True)
class Approx:
    """Degree-limited Fourier reconstruction; exclusion is a fraction of the period."""

    degree: int
    exclusion: float = 0.05

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")


BlockEncodingMode = Union[Ideal, Approx]


@dataclass(frozen=True)
class FourierApproximant:
    """S(x) ~ sum_{n=-d}^{d} c_n exp(i n pi (x - origin) / L).

    The origin is the centre of a selector plateau, so the coefficients are
    real and symmetric.
    """

    target: SquareWaveSpec
    degree: int
    half_period: float
    origin: float
    coefficients: np.ndarray
    epsilon_certified: float
    exclusion: float

    def __call__(self, x) -> np.ndarray:
        theta = np.pi * (np.asarray(x, dtype=float) - self.origin) / self.half_period
        d = self.degree
        n = np.arange(-d, d + 1)
        return np.real(np.exp(1j * np.multiply.outer(theta, n)) @ self.coefficients)

    def clamped(self, x) -> np.ndarray:
        return np.clip(self(x), 0.0, 1.0)

    def coefficient(self, n: int) -> float:
        return float(self.coefficients[n + self.degree])

    def harmonic_amplitude(self, n: int) -> float:
        """Amplitude of the real cosine term of order n (c_n + c_-n)."""
        if n == 0:
            return self.coefficient(0)
        return abs(self.coefficient(n) + self.coefficient(-n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,coefficient\n")
        for n, c in zip(range(-self.degree, self.degree + 1), self.coefficients):
            buf.write(f"{n},{c:.17g}\n")
        return buf.getvalue()


def _sup_error(series: np.ndarray, target: np.ndarray, keep: np.ndarray) -> float:
    return float(np.max(np.abs(series - target)[keep])) if keep.any() else 0.0


def fourier_fit(spec: SquareWaveSpec, degree: int, period: float | None = None,
                exclusion: float = 0.05, samples: int | None = None) -> FourierApproximant:
    """Truncated Fourier series of the selector and its certified sup error.

    Coefficients are the exact period integrals of the piecewise-constant
    selector. The certified error is the sup-norm deviation on a dense grid
    over one period with windows of half-width ``exclusion * period`` removed
    around each jump.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    start, L = plateau(spec)
    if math.isinf(L):
        raise ValueError("a Fourier fit needs a finite half-period (set SignStep.halfwidth)")
    if period is not None and not math.isclose(period, 2 * L, rel_tol=1e-12):
        raise ValueError(f"period {period} differs from the natural period {2 * L}")
    origin = start + L / 2
    n = np.arange(-degree, degree + 1)
    if isinstance(spec, Constant):
        coeffs = np.where(n == 0, float(spec.value), 0.0)
    else:
        # (1/2L) integral over the plateau [origin - L/2, origin + L/2]
        with np.errstate(invalid="ignore", divide="ignore"):
            coeffs = np.where(n == 0, 0.5, np.sin(n * np.pi / 2) / (n * np.pi))
    approx = FourierApproximant(spec, degree, L, origin, coeffs.astype(float), 0.0, exclusion)

    m = samples or max(1 << 14, 64 * degree)
    x = origin - L + 2 * L * (np.arange(m) + 0.5) / m
    keep = np.ones(m, dtype=bool)
    if not isinstance(spec, Constant):
        for jump in (origin - L / 2, origin + L / 2):
            dist = np.abs(np.mod(x - jump + L, 2 * L) - L)
            keep &= dist > exclusion * 2 * L
    eps = _sup_error(approx(x), selector(spec, x), keep)
    return FourierApproximant(spec, degree, L, origin, coeffs.astype(float), eps, exclusion)


def nominal_degree(spec: SquareWaveSpec, eps: float) -> int:
    """Modeled QSP degree: (L / lattice spacing) log2(1/eps), at least 1."""
    L = half_period(spec)
    ratio = 1.0 if math.isinf(L) or isinstance(spec, Constant) else L / lattice_spacing(spec)
    return max(1, math.ceil(ratio * math.log2(1.0 / eps)))


def selector_values(spec: SquareWaveSpec, x: np.ndarray, mode: BlockEncodingMode) -> np.ndarray:
    if isinstance(mode, Ideal):
        return selector(spec, x)
    return fourier_fit(spec, mode.degree, exclusion=mode.exclusion).clamped(x)


def rotation_table(s: np.ndarray) -> np.ndarray:
    c = np.sqrt(np.clip(1.0 - s * s, 0.0, None))
    table = np.zeros(s.shape + (2, 2))
    table[..., 0, 0] = s
    table[..., 0, 1] = c
    table[..., 1, 0] = -c
    table[..., 1, 1] = s
    return table


def _spec_params(spec: SquareWaveSpec) -> dict:
    out = {"kind": type(spec).__name__}
    for k, v in spec.__dict__.items():
        out[k] = v
    return out


def block_encode(spec: SquareWaveSpec, qubit: int, mode: int, cutoff: int,
                 mode_: BlockEncodingMode = Ideal()) -> PositionGate:
    """R(x) for ``spec`` on (qubit, mode) as a function of the truncated position."""
    x = position_diagonalization(cutoff).eigenvalues
    s = selector_values(spec, x, mode_)
    if isinstance(mode_, Ideal):
        degree = nominal_degree(spec, mode_.nominal_eps)
    else:
        degree = mode_.degree
    params = _spec_params(spec)
    params["qsp"] = "ideal" if isinstance(mode_, Ideal) else f"approx{mode_.degree}"
    return PositionGate("R", (qubit,), (mode,), (cutoff,), rotation_table(s),
                        duration=float(degree), params=params)


def certified_epsilon(spec: SquareWaveSpec, mode: BlockEncodingMode) -> float:
    if isinstance(mode, Ideal):
        return 0.0
    return fourier_fit(spec, mode.degree, exclusion=mode.exclusion).epsilon_certified
