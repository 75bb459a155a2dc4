"""Sampled-error validation of the sensor-assisted code."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qec, rng
from .algebra import FRACTION_FIELDS, DomainError, OutcomeFractions

# per-shot draw layout: 3 env, 3 ent, 3 sensor, audit selector, 2 for psi
_ENV, _ENT, _SENS, _AUDIT, _PSI = slice(0, 3), slice(3, 6), slice(6, 9), 9, slice(10, 12)
N_DRAWS = 12
CHUNK = 1 << 17

_JOINT_FIELD = {
    (qec.Standard.C, qec.Assisted.ACCEPT_C): "f_C_C",
    (qec.Standard.CC, qec.Assisted.ACCEPT_CC): "f_CC_CC",
    (qec.Standard.F, qec.Assisted.ACCEPT_F): "f_F_F",
    (qec.Standard.CC, qec.Assisted.REJECT_PT): "f_CC_RPT",
    (qec.Standard.F, qec.Assisted.REJECT_PT): "f_F_RPT",
    (qec.Standard.CC, qec.Assisted.REJECT_S): "f_CC_RS",
    (qec.Standard.F, qec.Assisted.REJECT_S): "f_F_RS",
}


def joint_field(record: qec.CaseRecord) -> str:
    try:
        return _JOINT_FIELD[(record.standard, record.assisted)]
    except KeyError:
        raise RuntimeError(f"unexpected outcome pair {record.standard} / {record.assisted} for {record.mask}") from None


def _lookup_table() -> np.ndarray:
    """Joint-outcome index for every (env, ent, sensor) triple; -1 where sensor is not a subset of env."""
    table = np.full((8, 8, 8), -1, dtype=np.int8)
    for mask in qec.all_masks():
        for sensor in range(8):
            if sensor & ~mask.env:
                continue
            table[mask.env, mask.ent, sensor] = FRACTION_FIELDS.index(joint_field(qec.classify_case(mask, sensor)))
    return table


_TABLE = _lookup_table()
_WEIGHTS = np.array([1, 2, 4])


def _check_prob(name, x):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {x}")


@dataclass(frozen=True)
class QecMonteCarloConfig:
    shots: int
    o: float
    p: float
    seed: int = 0
    sensor_efficiency: float = 1.0
    audit_fraction: float = 0.01
    variant: str = "bitflip"
    workers: int = 1

    def __post_init__(self):
        if int(self.shots) < 1:
            raise DomainError(f"shots must be >= 1, got {self.shots}")
        for name in ("o", "p", "sensor_efficiency", "audit_fraction"):
            _check_prob(name, getattr(self, name))
        qec.Variant(self.variant)


def masks_from_uniforms(u: np.ndarray, o: float, p: float, sensor_efficiency: float = 1.0):
    """Vectorised error sampling from an (n, >=9) uniform block."""
    env_bits = u[:, _ENV] < o
    ent_bits = u[:, _ENT] < p
    sensor_bits = env_bits & (u[:, _SENS] < sensor_efficiency)
    return env_bits @ _WEIGHTS, ent_bits @ _WEIGHTS, sensor_bits @ _WEIGHTS


def sample_error_mask(stream, o: float, p: float, sensor_efficiency: float = 1.0) -> tuple[qec.ErrorMask, int]:
    """One shot of the error channel: the error pattern plus the sensor register it produces."""
    u = np.asarray(stream.random(9), dtype=float).reshape(1, 9)
    env, ent, sensor = masks_from_uniforms(u, o, p, sensor_efficiency)
    return qec.ErrorMask(int(env[0]), int(ent[0])), int(sensor[0])


@dataclass
class QecMonteCarloResult:
    config: QecMonteCarloConfig
    counts: dict[str, int]
    audited: int = 0
    audit_mismatches: list = field(default_factory=list)

    @property
    def fractions(self) -> OutcomeFractions:
        n = self.config.shots
        return OutcomeFractions(**{k: self.counts[k] / n for k in FRACTION_FIELDS})

    def z_scores(self, analytic: OutcomeFractions) -> dict[str, float]:
        """Per-field (empirical - analytic) / binomial sigma; 0 when both sides are exact."""
        n = self.config.shots
        out = {}
        emp = self.fractions
        for k in FRACTION_FIELDS:
            a, e = getattr(analytic, k), getattr(emp, k)
            sigma = math.sqrt(a * (1 - a) / n)
            out[k] = (e - a) / sigma if sigma > 0 else (0.0 if e == a else math.inf)
        return out


def _run_chunk(cfg: QecMonteCarloConfig, start: int, stop: int):
    shots = np.arange(start, stop)
    u = rng.uniforms(cfg.seed, 0, shots, N_DRAWS)
    env, ent, sensor = masks_from_uniforms(u, cfg.o, cfg.p, cfg.sensor_efficiency)
    idx = _TABLE[env, ent, sensor]
    counts = np.bincount(idx, minlength=len(FRACTION_FIELDS))

    mismatches = []
    audit = np.flatnonzero(u[:, _AUDIT] < cfg.audit_fraction)
    for i in audit:
        theta = math.acos(1.0 - 2.0 * u[i, _PSI][0])
        phi = 2.0 * math.pi * u[i, _PSI][1]
        if math.sin(theta) ** 2 * math.cos(phi) ** 2 > 1.0 - 1e-6:
            continue  # X eigenstate: correct and faulty are indistinguishable
        mask = qec.ErrorMask(int(env[i]), int(ent[i]))
        expected = qec.classify_case(mask, int(sensor[i]))
        got = qec.run_case_on_statevector((theta, phi), mask, cfg.variant,
                                          sensor_register=int(sensor[i]),
                                          rng=rng.ShotStream(cfg.seed, 1, int(shots[i])))
        if (got.standard, got.assisted, got.syndrome) != (expected.standard, expected.assisted, expected.syndrome):
            mismatches.append((int(shots[i]), mask, expected, got))
    return counts, len(audit), mismatches


def run_qec_montecarlo(config: QecMonteCarloConfig) -> QecMonteCarloResult:
    """Sample error patterns, classify them, and tally the joint outcomes.

    Classification uses the truth table; a random ``audit_fraction`` of shots
    is also executed on the statevector circuit and any disagreement recorded.
    """
    bounds = [(s, min(s + CHUNK, config.shots)) for s in range(0, config.shots, CHUNK)]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(lambda b: _run_chunk(config, *b), bounds))
    else:
        parts = [_run_chunk(config, *b) for b in bounds]

    total = np.zeros(len(FRACTION_FIELDS), dtype=np.int64)
    audited, mismatches = 0, []
    for counts, n_audit, bad in parts:
        total += counts
        audited += n_audit
        mismatches += bad
    return QecMonteCarloResult(config, dict(zip(FRACTION_FIELDS, map(int, total))), audited, mismatches)
