"""Sensor-assisted three-qubit bit-flip code.

Masks are 3-bit integers with bit k referring to data qubit k. The circuit
uses data qubits 0-2 and ancillas 3-4; ancilla 3 holds the q0^q1 parity and
ancilla 4 the q0^q2 parity, so syndrome bit 0 is (q0^q1) and bit 1 is (q0^q2).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import statevector as sv
from .statevector import CLASSICAL_X, CNOT, ClassicalRegister, Gate, H, PureState, X, Z


class Standard(enum.Enum):
    C = "C"
    CC = "CC"
    F = "F"


class Assisted(enum.Enum):
    ACCEPT_C = "ACCEPT_C"
    ACCEPT_CC = "ACCEPT_CC"
    ACCEPT_F = "ACCEPT_F"
    REJECT_PT = "REJECT_PT"
    REJECT_S = "REJECT_S"

    @property
    def accepted(self) -> bool:
        return self.name.startswith("ACCEPT")

    @property
    def letter(self) -> str:
        """Short label used in tables: C, CC, F, R_PT or R_S."""
        return {"REJECT_PT": "R_PT", "REJECT_S": "R_S"}.get(self.name, self.name.removeprefix("ACCEPT_"))


_ACCEPT = {Standard.C: Assisted.ACCEPT_C, Standard.CC: Assisted.ACCEPT_CC, Standard.F: Assisted.ACCEPT_F}


class Variant(enum.Enum):
    BITFLIP = "bitflip"
    PHASEFLIP = "phaseflip"


@dataclass(frozen=True, order=True)
class ErrorMask:
    env: int
    ent: int

    def __post_init__(self):
        for name in ("env", "ent"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= 7:
                raise ValueError(f"{name} mask must be in 0..7, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def resultant(self) -> int:
        return self.env ^ self.ent

    def __str__(self):
        return f"[{self.env:03b}]({self.ent:03b})"


@dataclass(frozen=True)
class CaseRecord:
    mask: ErrorMask
    resultant: int
    syndrome: int
    standard: Standard
    assisted: Assisted

    @property
    def exponents(self) -> tuple[int, int]:
        return self.mask.env.bit_count(), self.mask.ent.bit_count()


def syndrome_of(resultant: int) -> int:
    if not 0 <= resultant <= 7:
        raise ValueError(f"resultant must be a 3-bit value, got {resultant}")
    q0, q1, q2 = resultant & 1, (resultant >> 1) & 1, (resultant >> 2) & 1
    return (q0 ^ q1) | ((q0 ^ q2) << 1)


# syndrome -> data qubit to flip; 0x0 means no correction
CORRECTION_FOR_SYNDROME = {0x0: None, 0x3: 0, 0x1: 1, 0x2: 2}


def sensor_reject(sensor_register: int) -> bool:
    """Two or more sensors fired: more flips than the code can fix."""
    if not 0 <= sensor_register <= 7:
        raise ValueError(f"sensor register must be a 3-bit value, got {sensor_register}")
    return sensor_register.bit_count() >= 2


def parity_reject(sensor_register: int, syndrome: int) -> bool:
    """A single sensor fired but the syndrome does not point at that qubit (or at nothing)."""
    if sensor_register.bit_count() != 1:
        return False
    fired = sensor_register.bit_length() - 1
    return syndrome not in (0x0, syndrome_of(1 << fired))


def assisted_decision(standard: Standard, sensor_register: int, syndrome: int) -> Assisted:
    if sensor_reject(sensor_register):
        return Assisted.REJECT_S
    if parity_reject(sensor_register, syndrome):
        return Assisted.REJECT_PT
    return _ACCEPT[standard]


def standard_outcome(mask: ErrorMask) -> Standard:
    if mask.resultant.bit_count() > 1:
        return Standard.F
    return Standard.CC if mask.env & mask.ent else Standard.C


def classify_case(mask: ErrorMask, sensor_register: int | None = None) -> CaseRecord:
    """Classify one error pattern under both the plain and the sensor-assisted code.

    ``sensor_register`` defaults to ``mask.env`` (every environmental flip
    detected); pass a subset of it to model missed detections.
    """
    if sensor_register is None:
        sensor_register = mask.env
    r = mask.resultant
    s = syndrome_of(r)
    std = standard_outcome(mask)
    return CaseRecord(mask, r, s, std, assisted_decision(std, sensor_register, s))


def all_masks() -> list[ErrorMask]:
    return [ErrorMask(env, ent) for env in range(8) for ent in range(8)]


def enumerate_truth_table() -> list[CaseRecord]:
    return [classify_case(m) for m in all_masks()]


TRUTH_TABLE_COLUMNS = (
    "env_mask", "ent_mask", "resultant", "syndrome_hex",
    "o_exp", "p_exp", "obar_exp", "pbar_exp", "standard", "assisted",
)


def truth_table_rows(records=None) -> list[dict[str, str]]:
    records = enumerate_truth_table() if records is None else records
    rows = []
    for rec in records:
        a, b = rec.exponents
        rows.append({
            "env_mask": f"{rec.mask.env:03b}",
            "ent_mask": f"{rec.mask.ent:03b}",
            "resultant": f"{rec.resultant:03b}",
            "syndrome_hex": f"0x{rec.syndrome:X}",
            "o_exp": str(a),
            "p_exp": str(b),
            "obar_exp": str(3 - a),
            "pbar_exp": str(3 - b),
            "standard": rec.standard.value,
            "assisted": rec.assisted.value,
        })
    return rows


def truth_table_csv(records=None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TRUTH_TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(truth_table_rows(records))
    return buf.getvalue()


# -- circuit -----------------------------------------------------------------

DATA = (0, 1, 2)
ANCILLA = (3, 4)
NUM_QUBITS = 5

STAGES = ("prepare", "encode", "error_channel", "sensor_readout", "syndrome", "correction", "decode", "measure")


@dataclass(frozen=True)
class Prepare:
    """Load cos(theta/2)|0> + e^{i phi} sin(theta/2)|1> onto qubit 0."""

    theta: float
    phi: float


@dataclass(frozen=True)
class SensorReadout:
    qubit: int
    fired: bool


@dataclass(frozen=True)
class Measure:
    qubit: int
    register: str
    bit: int


@dataclass(frozen=True)
class ClassicalLogic:
    name: str
    fn: Callable[[ClassicalRegister], None] = field(compare=False)


Step = Union[Prepare, Gate, SensorReadout, Measure, ClassicalLogic]


@dataclass
class CircuitSpec:
    variant: Variant
    steps: list[tuple[str, Step]]

    def stage(self, name: str) -> list[Step]:
        return [op for st, op in self.steps if st == name]

    def gates(self) -> list[Gate]:
        return [op for _, op in self.steps if isinstance(op, Gate)]

    def stage_order(self) -> list[str]:
        seen = []
        for st, _ in self.steps:
            if not seen or seen[-1] != st:
                seen.append(st)
        return seen

    def describe(self) -> str:
        lines = []
        for st, op in self.steps:
            label = str(op) if not isinstance(op, ClassicalLogic) else f"LOGIC {op.name}"
            lines.append(f"{st:15s} {label}")
        return "\n".join(lines)


def _decode_syndrome(reg: ClassicalRegister) -> None:
    target = CORRECTION_FOR_SYNDROME[reg.value("ancilla")]
    for q in DATA:
        reg.set("correction", q, q == target)


def _set_flags(reg: ClassicalRegister) -> None:
    sensors, syndrome = reg.value("sensor"), reg.value("ancilla")
    reg.set("flags", 0, sensor_reject(sensors))
    reg.set("flags", 1, parity_reject(sensors, syndrome))


def new_classical_register() -> ClassicalRegister:
    return ClassicalRegister.with_widths(sensor=3, ancilla=2, correction=3, flags=2, result=3)


def build_circuit(psi: tuple[float, float], mask: ErrorMask, variant: Variant | str = Variant.BITFLIP,
                  sensor_register: int | None = None) -> CircuitSpec:
    """Gate-level circuit for one error pattern.

    The phase-flip variant uses Z errors and wraps the error channel and sensor
    readout in Hadamards on every data qubit.
    """
    variant = Variant(variant)
    if sensor_register is None:
        sensor_register = mask.env
    err = Z if variant is Variant.PHASEFLIP else X
    steps: list[tuple[str, Step]] = [("prepare", Prepare(*psi))]

    steps += [("encode", CNOT(0, 1)), ("encode", CNOT(0, 2))]
    if variant is Variant.PHASEFLIP:
        steps += [("encode", H(q)) for q in DATA]

    steps += [("error_channel", err(q)) for q in DATA if mask.env >> q & 1]
    steps += [("error_channel", err(q)) for q in DATA if mask.ent >> q & 1]

    steps += [("sensor_readout", SensorReadout(q, bool(sensor_register >> q & 1))) for q in DATA]

    if variant is Variant.PHASEFLIP:
        steps += [("syndrome", H(q)) for q in DATA]
    steps += [
        ("syndrome", CNOT(0, 3)),
        ("syndrome", CNOT(1, 3)),
        ("syndrome", CNOT(0, 4)),
        ("syndrome", CNOT(2, 4)),
        ("syndrome", Measure(3, "ancilla", 0)),
        ("syndrome", Measure(4, "ancilla", 1)),
        ("syndrome", ClassicalLogic("reject_flags", _set_flags)),
    ]

    steps.append(("correction", ClassicalLogic("decode_syndrome", _decode_syndrome)))
    steps += [("correction", CLASSICAL_X(q, "correction", q)) for q in DATA]

    steps += [("decode", CNOT(0, 2)), ("decode", CNOT(0, 1))]
    steps += [("measure", Measure(q, "result", q)) for q in DATA]
    return CircuitSpec(variant, steps)


@dataclass
class Execution:
    state_before_measure: PureState
    final_state: PureState
    classical: ClassicalRegister


def execute(spec: CircuitSpec, rng: np.random.Generator | None = None) -> Execution:
    rng = np.random.default_rng(0) if rng is None else rng
    state = sv.new_state(NUM_QUBITS)
    reg = new_classical_register()
    before_measure = None
    for stage, op in spec.steps:
        if stage == "measure" and before_measure is None:
            before_measure = state
        if isinstance(op, Prepare):
            state = sv.embed(sv.prepare_bloch(op.theta, op.phi), NUM_QUBITS)
        elif isinstance(op, Gate):
            state = sv.apply_gate(state, op, reg)
        elif isinstance(op, SensorReadout):
            reg.set("sensor", op.qubit, op.fired)
        elif isinstance(op, Measure):
            bit, state = sv.measure_qubit(state, op.qubit, rng)
            reg.set(op.register, op.bit, bool(bit))
        elif isinstance(op, ClassicalLogic):
            op.fn(reg)
        else:  # pragma: no cover
            raise TypeError(f"unknown circuit step {op!r}")
    if before_measure is None:
        before_measure = state
    return Execution(before_measure, state, reg)


# fidelity threshold used to call the decoded data qubit correct or flipped
FIDELITY_TOL = 1e-9


@dataclass(frozen=True)
class StatevectorOutcome:
    standard: Standard
    assisted: Assisted
    syndrome: int
    fidelity: float


def run_case_on_statevector(psi: tuple[float, float], mask: ErrorMask,
                            variant: Variant | str = Variant.BITFLIP,
                            rng: np.random.Generator | None = None,
                            sensor_register: int | None = None) -> StatevectorOutcome:
    """Execute the circuit and read the outcome off the decoded data qubit.

    Correct vs. faulty comes from the fidelity of qubit 0 with psi; the C/CC
    split is not observable in the state and is labelled from the mask.
    ``psi`` must not be an X eigenstate, otherwise a logical flip is invisible.
    """
    run = execute(build_circuit(psi, mask, variant, sensor_register), rng)
    target = sv.prepare_bloch(*psi)
    rho = sv.reduced_density_matrix(run.state_before_measure, 0)
    f = float(np.real(target.amplitudes.conj() @ rho @ target.amplitudes))

    flipped = sv.apply_gate(target, X(0))
    f_flip = sv.fidelity(target, flipped)
    if f_flip > 1.0 - 1e-6:
        raise ValueError(f"psi={psi} is an X eigenstate; correct and faulty outcomes coincide")

    if abs(f - 1.0) < FIDELITY_TOL:
        std = Standard.CC if mask.env & mask.ent else Standard.C
    elif abs(f - f_flip) < FIDELITY_TOL:
        std = Standard.F
    else:
        raise RuntimeError(f"decoded state matches neither psi nor X psi (fidelity {f:.12f}) for {mask}")

    reg = run.classical
    syndrome = reg.value("ancilla")
    if reg.get("flags", 0):
        assisted = Assisted.REJECT_S
    elif reg.get("flags", 1):
        assisted = Assisted.REJECT_PT
    else:
        assisted = _ACCEPT[std]
    return StatevectorOutcome(std, assisted, syndrome, f)
