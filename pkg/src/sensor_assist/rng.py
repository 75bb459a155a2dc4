"""Counter-based random substreams.

Every shot owns a stream keyed by (master seed, trial, shot). Draw ``j`` of
that stream is a pure function of the key and ``j``, so results do not depend
on how shots are chunked or spread across workers.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(z):
    """SplitMix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x):
    return np.uint64(int(x) & _MASK64)


def stream_keys(seed: int, trial: int, shots) -> np.ndarray:
    """Per-shot 64-bit keys for a vector of shot indices."""
    shots = np.asarray(shots, dtype=np.uint64)
    with np.errstate(over="ignore"):
        k = mix64(np.array([_u64(seed)]) + _GAMMA)
        k = mix64(k ^ (np.uint64(int(trial) + 1) * _GAMMA))
        return mix64(k ^ ((shots + np.uint64(1)) * _GAMMA))


def uniforms(seed: int, trial: int, shots, n_draws: int) -> np.ndarray:
    """Array of shape (len(shots), n_draws) of uniforms in [0, 1)."""
    keys = stream_keys(seed, trial, shots)
    j = np.arange(1, n_draws + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = mix64(keys[:, None] + j[None, :] * _GAMMA)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


class ShotStream:
    """Sequential view of one shot's substream, usable where a Generator's ``random()`` is expected."""

    def __init__(self, seed: int, trial: int, shot: int):
        self.key = stream_keys(seed, trial, [shot])[0]
        self.position = 0

    def random(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        j = np.arange(self.position + 1, self.position + n + 1, dtype=np.uint64)
        self.position += n
        with np.errstate(over="ignore"):
            bits = mix64(self.key + j * _GAMMA)
        out = (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        return float(out[0]) if size is None else out.reshape(size)
