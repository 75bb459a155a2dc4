"""Small pure-state simulator used to check circuit-level behaviour.

Qubit 0 is the least significant bit of the basis index, and rendered
bitstrings put qubit 0 in the rightmost character.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 8
NORM_TOL = 1e-12


class GateKind(enum.Enum):
    X = "X"
    Z = "Z"
    H = "H"
    CNOT = "CNOT"
    TOFFOLI = "TOFFOLI"
    CLASSICAL_X = "CLASSICAL_X"


_ARITY = {
    GateKind.X: 1,
    GateKind.Z: 1,
    GateKind.H: 1,
    GateKind.CNOT: 2,
    GateKind.TOFFOLI: 3,
    GateKind.CLASSICAL_X: 1,
}


@dataclass(frozen=True)
class Gate:
    """A gate acting on ``targets``.

    For CNOT the targets are ``(control, target)``; for TOFFOLI
    ``(control, control, target)``. CLASSICAL_X flips its target only when
    the classical bit ``control_bit = (register_name, index)`` is set.
    """

    kind: GateKind
    targets: tuple[int, ...]
    control_bit: tuple[str, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind.value} takes {_ARITY[self.kind]} qubit(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated qubit index in {self.targets}")
        if (self.kind is GateKind.CLASSICAL_X) != (self.control_bit is not None):
            raise ValueError("control_bit is required for CLASSICAL_X and only allowed there")

    def __str__(self):
        s = f"{self.kind.value} {','.join(map(str, self.targets))}"
        if self.control_bit is not None:
            s += f" if {self.control_bit[0]}[{self.control_bit[1]}]"
        return s


def X(q):
    return Gate(GateKind.X, (q,))


def Z(q):
    return Gate(GateKind.Z, (q,))


def H(q):
    return Gate(GateKind.H, (q,))


def CNOT(control, target):
    return Gate(GateKind.CNOT, (control, target))


def TOFFOLI(c1, c2, target):
    return Gate(GateKind.TOFFOLI, (c1, c2, target))


def CLASSICAL_X(target, register, bit):
    return Gate(GateKind.CLASSICAL_X, (target,), control_bit=(register, bit))


@dataclass
class ClassicalRegister:
    """Named classical bit registers, e.g. ``sensor`` (3 bits) and ``ancilla`` (2 bits)."""

    registers: dict[str, list[bool]] = field(default_factory=dict)

    @classmethod
    def with_widths(cls, **widths: int) -> "ClassicalRegister":
        return cls({name: [False] * w for name, w in widths.items()})

    def get(self, name: str, index: int) -> bool:
        bits = self._bits(name)
        if not 0 <= index < len(bits):
            raise IndexError(f"bit {index} out of range for register {name!r} of width {len(bits)}")
        return bits[index]

    def set(self, name: str, index: int, value: bool) -> None:
        bits = self._bits(name)
        if not 0 <= index < len(bits):
            raise IndexError(f"bit {index} out of range for register {name!r} of width {len(bits)}")
        bits[index] = bool(value)

    def value(self, name: str) -> int:
        """Integer value of a register, bit k of the result = bit k of the register."""
        return sum(1 << k for k, b in enumerate(self._bits(name)) if b)

    def _bits(self, name):
        try:
            return self.registers[name]
        except KeyError:
            raise KeyError(f"no classical register named {name!r}") from None


@dataclass(frozen=True, eq=False)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in 1..{MAX_QUBITS}, got {self.num_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(f"expected {1 << self.num_qubits} amplitudes, got shape {amps.shape}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        return f"PureState(num_qubits={self.num_qubits}, amplitudes={np.round(self.amplitudes, 6).tolist()})"


def new_state(num_qubits: int) -> PureState:
    """|00...0> on ``num_qubits`` qubits."""
    if not isinstance(num_qubits, (int, np.integer)) or not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be an integer in 1..{MAX_QUBITS}, got {num_qubits!r}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return PureState(int(num_qubits), amps)


def prepare_bloch(theta: float, phi: float) -> PureState:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return PureState(1, [np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def tensor(high: PureState, low: PureState) -> PureState:
    """``high (x) low``: the qubits of ``low`` keep their indices, ``high`` is shifted above them."""
    return PureState(high.num_qubits + low.num_qubits, np.kron(high.amplitudes, low.amplitudes))


def embed(single: PureState, num_qubits: int) -> PureState:
    """Put a one-qubit state on qubit 0 with every other qubit in |0>."""
    if single.num_qubits != 1:
        raise ValueError("embed expects a single-qubit state")
    if num_qubits == 1:
        return single
    return tensor(new_state(num_qubits - 1), single)


def _index_bits(n):
    return np.arange(1 << n)


def apply_gate(state: PureState, gate: Gate, classical: ClassicalRegister | None = None) -> PureState:
    """Return the state after ``gate``; the input is left untouched."""
    n = state.num_qubits
    for q in gate.targets:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for a {n}-qubit state")
    amps = state.amplitudes
    idx = _index_bits(n)
    kind = gate.kind

    if kind is GateKind.CLASSICAL_X:
        if classical is None:
            raise ValueError("CLASSICAL_X needs a classical register")
        name, bit = gate.control_bit
        if not classical.get(name, bit):
            return state
        kind = GateKind.X

    if kind is GateKind.X:
        out = amps[idx ^ (1 << gate.targets[0])]
    elif kind is GateKind.Z:
        sign = np.where((idx >> gate.targets[0]) & 1, -1.0, 1.0)
        out = amps * sign
    elif kind is GateKind.H:
        m = 1 << gate.targets[0]
        partner = amps[idx ^ m]
        is_one = (idx & m) != 0
        out = np.where(is_one, partner - amps, amps + partner) / np.sqrt(2.0)
    elif kind is GateKind.CNOT:
        c, t = gate.targets
        flip = ((idx >> c) & 1) << t
        out = amps[idx ^ flip]
    elif kind is GateKind.TOFFOLI:
        c1, c2, t = gate.targets
        flip = (((idx >> c1) & (idx >> c2)) & 1) << t
        out = amps[idx ^ flip]
    else:  # pragma: no cover
        raise ValueError(f"unknown gate kind {kind}")
    return PureState(n, out)


def apply_gates(state: PureState, gates, classical: ClassicalRegister | None = None) -> PureState:
    for g in gates:
        state = apply_gate(state, g, classical)
    return state


def bitstring(index: int, num_qubits: int) -> str:
    """Render a basis index with qubit 0 as the rightmost character."""
    return format(index, f"0{num_qubits}b")


def sample_index(probs, u: float) -> int:
    """Inverse-CDF pick of an index from a (possibly unnormalised) probability vector."""
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))


def measure_all(state: PureState, rng: np.random.Generator) -> str:
    """Sample a computational-basis outcome. Only one uniform is drawn from ``rng``."""
    return bitstring(sample_index(state.probabilities(), rng.random()), state.num_qubits)


def measure_qubit(state: PureState, qubit: int, rng: np.random.Generator) -> tuple[int, PureState]:
    """Projectively measure one qubit, returning the bit and the collapsed state."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for a {n}-qubit state")
    ones = ((_index_bits(n) >> qubit) & 1).astype(bool)
    probs = state.probabilities()
    p1 = float(probs[ones].sum())
    bit = int(rng.random() < p1)
    keep = ones if bit else ~ones
    out = np.where(keep, state.amplitudes, 0.0)
    out = out / np.sqrt(p1 if bit else 1.0 - p1)
    return bit, PureState(n, out)


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(max(f, 0.0), 1.0))


def reduced_density_matrix(state: PureState, qubit: int) -> np.ndarray:
    """2x2 reduced density matrix of one qubit."""
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    axis = n - 1 - qubit  # reshape puts the most significant qubit first
    psi = np.moveaxis(psi, axis, 0).reshape(2, -1)
    return psi @ psi.conj().T
