"""Noisy balanced Deutsch-Jozsa benchmark with a per-shot sensor veto.

Every error site may inject an X gate. A realised error is sensor-detectable
with probability ``detectable_fraction``; when the veto is on, any shot with
a detected error is thrown away before its result is counted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from . import statevector as sv
from .algebra import DomainError

CANONICAL_CIRCUIT = """\
# balanced oracle f(x) = x0 on three input qubits, q3 is the phase ancilla
X 3
SITE 3
H 3
SITE 3
H 0
SITE 0
H 1
SITE 1
H 2
SITE 2
CNOT 0,3
SITE 0
SITE 3
H 0
SITE 0
# one site in front of each measurement
SITE 0
SITE 1
SITE 2
MEASURE 0,1,2
"""

ODD_STATES = ("001", "011", "101", "111")
STATES = tuple(format(i, "03b") for i in range(8))


@dataclass(frozen=True)
class Site:
    qubit: int


@dataclass
class DjCircuit:
    num_qubits: int
    ops: list  # Gate | Site
    measured: tuple[int, ...]

    @property
    def sites(self) -> list[Site]:
        return [op for op in self.ops if isinstance(op, Site)]

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    def to_text(self) -> str:
        lines = []
        for op in self.ops:
            if isinstance(op, Site):
                lines.append(f"SITE {op.qubit}")
            else:
                lines.append(f"{op.kind.value} {','.join(map(str, op.targets))}")
        lines.append("MEASURE " + ",".join(map(str, self.measured)))
        return "\n".join(lines) + "\n"


_GATE_NAMES = {"X": sv.X, "Z": sv.Z, "H": sv.H, "CNOT": sv.CNOT, "TOFFOLI": sv.TOFFOLI}


def parse_circuit(text: str) -> DjCircuit:
    """Parse the flat gate-list format: ``GATE q[,q2...]``, ``SITE q``, ``MEASURE q,...``; ``#`` starts a comment."""
    ops, measured = [], None
    highest = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        name = parts[0].upper()
        try:
            qubits = tuple(int(q) for q in parts[1].replace(" ", "").split(",")) if len(parts) > 1 else ()
        except ValueError:
            raise ValueError(f"line {lineno}: bad qubit list in {raw!r}") from None
        if not qubits or any(q < 0 for q in qubits):
            raise ValueError(f"line {lineno}: expected qubit indices in {raw!r}")
        highest = max(highest, *qubits)
        if name == "SITE":
            if len(qubits) != 1:
                raise ValueError(f"line {lineno}: SITE takes one qubit")
            ops.append(Site(qubits[0]))
        elif name == "MEASURE":
            measured = qubits
        elif name in _GATE_NAMES:
            try:
                ops.append(_GATE_NAMES[name](*qubits))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        else:
            raise ValueError(f"line {lineno}: unknown instruction {parts[0]!r}")
    if measured is None:
        raise ValueError("circuit has no MEASURE line")
    n = highest + 1
    if not 1 <= n <= sv.MAX_QUBITS:
        raise ValueError(f"circuit uses {n} qubits; at most {sv.MAX_QUBITS} supported")
    return DjCircuit(n, ops, measured)


def build_dj_circuit() -> DjCircuit:
    return parse_circuit(CANONICAL_CIRCUIT)


def final_state(circuit: DjCircuit, error_pattern: int = 0) -> sv.PureState:
    """Statevector after the circuit with X injected at every site whose bit is set in ``error_pattern``."""
    state = sv.new_state(circuit.num_qubits)
    k = 0
    for op in circuit.ops:
        if isinstance(op, Site):
            if error_pattern >> k & 1:
                state = sv.apply_gate(state, sv.X(op.qubit))
            k += 1
        else:
            state = sv.apply_gate(state, op)
    return state


def outcome_distribution(circuit: DjCircuit, error_pattern: int = 0) -> np.ndarray:
    """Probabilities of the measured bitstrings, indexed by the integer value of the measured bits."""
    probs = final_state(circuit, error_pattern).probabilities()
    idx = np.arange(len(probs))
    out_idx = np.zeros_like(idx)
    for pos, q in enumerate(circuit.measured):
        out_idx |= ((idx >> q) & 1) << pos
    return np.bincount(out_idx, weights=probs, minlength=1 << len(circuit.measured))


def distribution_dict(circuit: DjCircuit, error_pattern: int = 0) -> dict[str, float]:
    m = len(circuit.measured)
    return {format(i, f"0{m}b"): float(v) for i, v in enumerate(outcome_distribution(circuit, error_pattern))}


@dataclass(frozen=True)
class DjConfig:
    shots: int = 81920
    trials: int = 1
    gate_error_prob: float = 0.07
    detectable_fraction: float = 0.40
    veto_enabled: bool = True
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.shots) < 1:
            raise DomainError(f"shots must be >= 1, got {self.shots}")
        if int(self.trials) < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        for name in ("gate_error_prob", "detectable_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class ShotRecord:
    measured: str
    sensor_fired: bool
    vetoed: bool
    error_sites_hit: tuple[int, ...]


@dataclass
class ExperimentReport:
    shots: int
    counts: dict[str, int]
    rejected_count: int
    trial: int = 0
    records: list[ShotRecord] | None = field(default=None, repr=False)

    @property
    def accepted_count(self) -> int:
        return self.shots - self.rejected_count

    @property
    def rejected_fraction(self) -> float:
        return self.rejected_count / self.shots

    def fractions(self) -> dict[str, float]:
        n = self.accepted_count
        return {s: (c / n if n else math.nan) for s, c in self.counts.items()}

    @property
    def correct_fraction(self) -> float:
        n = self.accepted_count
        return sum(self.counts[s] for s in ODD_STATES) / n if n else math.nan


class _DistributionCache:
    """Cumulative outcome distributions per error pattern, filled on demand."""

    def __init__(self, circuit: DjCircuit):
        self.circuit = circuit
        self.n_out = 1 << len(circuit.measured)
        self.cdf = np.zeros((1 << circuit.num_sites, self.n_out))
        self.known = np.zeros(1 << circuit.num_sites, dtype=bool)

    def lookup(self, patterns: np.ndarray) -> np.ndarray:
        for pat in np.unique(patterns[~self.known[patterns]]):
            c = np.cumsum(outcome_distribution(self.circuit, int(pat)))
            self.cdf[pat] = c / c[-1]
            self.known[pat] = True
        return self.cdf[patterns]


def _draws(circuit, seed, trial, shots):
    n_sites = circuit.num_sites
    u = rng.uniforms(seed, trial, shots, 2 * n_sites + 1)
    return u[:, :n_sites], u[:, n_sites:2 * n_sites], u[:, 2 * n_sites]


def _sample(circuit, config, trial, cache, keep_records):
    shots = np.arange(config.shots)
    u_err, u_det, u_meas = _draws(circuit, config.seed, trial, shots)
    errors = u_err < config.gate_error_prob
    detected = errors & (u_det < config.detectable_fraction)
    fired = detected.any(axis=1)
    vetoed = fired & config.veto_enabled
    patterns = errors @ (1 << np.arange(circuit.num_sites))

    outcome = (cache.lookup(patterns) <= u_meas[:, None]).sum(axis=1)
    outcome = np.minimum(outcome, cache.n_out - 1)
    kept = outcome[~vetoed]
    counts = np.bincount(kept, minlength=cache.n_out)
    m = len(circuit.measured)
    report = ExperimentReport(
        shots=config.shots,
        counts={format(i, f"0{m}b"): int(c) for i, c in enumerate(counts)},
        rejected_count=int(vetoed.sum()),
        trial=trial,
    )
    if keep_records:
        report.records = [
            ShotRecord(format(int(outcome[i]), f"0{m}b"), bool(fired[i]), bool(vetoed[i]),
                       tuple(int(k) for k in np.flatnonzero(errors[i])))
            for i in range(config.shots)
        ]
    return report


def run_dj_experiment(config: DjConfig, circuit: DjCircuit | None = None, trial: int = 0,
                      keep_records: bool = False) -> ExperimentReport:
    """One trial of ``config.shots`` shots. Results depend only on (seed, trial, shot)."""
    circuit = build_dj_circuit() if circuit is None else circuit
    return _sample(circuit, config, trial, _DistributionCache(circuit), keep_records)


def simulate_shot(config: DjConfig, trial: int, shot: int, circuit: DjCircuit | None = None) -> ShotRecord:
    """Replay a single shot with a direct statevector run, independent of the batched sampler."""
    circuit = build_dj_circuit() if circuit is None else circuit
    stream = rng.ShotStream(config.seed, trial, shot)
    n = circuit.num_sites
    u_err, u_det = stream.random(n), stream.random(n)
    errors = u_err < config.gate_error_prob
    fired = bool((errors & (u_det < config.detectable_fraction)).any())
    pattern = sum(1 << k for k in np.flatnonzero(errors))
    dist = outcome_distribution(circuit, pattern)
    measured = format(sv.sample_index(dist, stream.random()), f"0{len(circuit.measured)}b")
    return ShotRecord(measured, fired, fired and config.veto_enabled, tuple(int(k) for k in np.flatnonzero(errors)))


@dataclass
class TrialStatistics:
    reports: list[ExperimentReport]

    def _matrix(self) -> np.ndarray:
        return np.array([[r.fractions()[s] for s in STATES] for r in self.reports])

    @property
    def state_mean(self) -> dict[str, float]:
        return dict(zip(STATES, self._matrix().mean(axis=0).tolist()))

    @property
    def state_std(self) -> dict[str, float]:
        return dict(zip(STATES, self._matrix().std(axis=0, ddof=1).tolist()))

    @property
    def correct_fractions(self) -> np.ndarray:
        return np.array([r.correct_fraction for r in self.reports])

    @property
    def correct_mean(self) -> float:
        return float(self.correct_fractions.mean())

    @property
    def correct_std(self) -> float:
        return float(self.correct_fractions.std(ddof=1))

    @property
    def rejected_fractions(self) -> np.ndarray:
        return np.array([r.rejected_fraction for r in self.reports])


def run_trials(config: DjConfig, circuit: DjCircuit | None = None) -> TrialStatistics:
    """``config.trials`` independent trials; trial t uses substreams keyed by (seed, t)."""
    if config.trials < 2:
        raise DomainError("run_trials needs trials >= 2")
    circuit = build_dj_circuit() if circuit is None else circuit
    cache = _DistributionCache(circuit)
    for pat in range(1 << circuit.num_sites):  # fill up front so workers only read
        cache.lookup(np.array([pat]))

    def one(t):
        return _sample(circuit, config, t, cache, False)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            reports = list(pool.map(one, range(config.trials)))
    else:
        reports = [one(t) for t in range(config.trials)]
    return TrialStatistics(reports)


def expected_rejected_fraction(n_sites: int, gate_error_prob: float, detectable_fraction: float) -> float:
    """Probability that at least one site both errs and is detected."""
    return 1.0 - (1.0 - gate_error_prob * detectable_fraction) ** n_sites
