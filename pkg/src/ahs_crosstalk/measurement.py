"""Born-rule sampling and per-qubit Rydberg counts.

The observable is the Rydberg count of each qubit: bit value 1 means the atom
was found in |r>. Hardware that detects Rydberg atoms as trap loss reports the
complement; convert before comparing.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .rng import Stream, stream


def probabilities(state) -> np.ndarray:
    amps = getattr(state, "amplitudes", state)
    return np.abs(amps) ** 2


def marginals(probs: np.ndarray) -> np.ndarray:
    """Per-qubit probability of the Rydberg outcome."""
    n = probs.shape[0].bit_length() - 1
    bits = (np.arange(probs.shape[0])[:, None] >> np.arange(n)) & 1
    return probs @ bits


@dataclass(frozen=True, eq=False)
class ShotBatch:
    bitstrings: np.ndarray  # (S, N) uint8, 1 = Rydberg
    seed: object = None

    def __post_init__(self):
        if self.bitstrings.ndim != 2 or self.bitstrings.shape[0] < 1:
            raise ValueError("a shot batch needs at least one row of bits")
        self.bitstrings.setflags(write=False)

    @property
    def shots(self) -> int:
        return self.bitstrings.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.bitstrings.shape[1]

    def __eq__(self, other):
        return isinstance(other, ShotBatch) and np.array_equal(self.bitstrings, other.bitstrings)

    __hash__ = None

    def to_csv(self, fh=None) -> str | None:
        """Write ``shot,q0,q1,...`` rows; returns the text when ``fh`` is None."""
        target = io.StringIO() if fh is None else fh
        w = csv.writer(target, lineterminator="\n")
        w.writerow(["shot"] + [f"q{k}" for k in range(self.n_qubits)])
        for i, row in enumerate(self.bitstrings):
            w.writerow([i, *row.tolist()])
        return target.getvalue() if fh is None else None


def sample_shots(state, shots: int, seed, detection: tuple[float, float] = (0.0, 0.0)) -> ShotBatch:
    """Draw ``shots`` measurement outcomes, then apply readout flips.

    ``detection = (eps_g, eps_r)``: a ground atom reads as Rydberg with
    probability ``eps_g`` and a Rydberg atom reads as ground with ``eps_r``.
    Outcomes come from inverse-CDF lookup of one uniform per shot; flip
    uniforms are drawn afterwards from the same stream.
    """
    eps_g, eps_r = detection
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if not (0 <= eps_g < 0.5 and 0 <= eps_r < 0.5):
        raise ValueError("detection error probabilities must lie in [0, 0.5)")
    p = probabilities(state)
    n = p.shape[0].bit_length() - 1
    rng = stream(seed) if not isinstance(seed, int) else stream(seed, Stream.SHOTS)
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    idx = np.minimum(idx, p.shape[0] - 1)
    bits = ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    if eps_g or eps_r:
        u = rng.random(bits.shape)
        flip = np.where(bits == 0, u < eps_g, u < eps_r)
        bits = bits ^ flip.astype(np.uint8)
    return ShotBatch(bits, seed)


@dataclass(frozen=True)
class CountSummary:
    counts: tuple[int, ...]
    shots: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if self.shots < 1 or any(not 0 <= c <= self.shots for c in counts):
            raise ValueError("counts must lie in [0, shots]")
        object.__setattr__(self, "counts", counts)

    def __add__(self, other: CountSummary) -> CountSummary:
        if len(self.counts) != len(other.counts):
            raise ValueError("cannot add counts over different registers")
        return CountSummary(
            tuple(a + b for a, b in zip(self.counts, other.counts)), self.shots + other.shots
        )

    def select(self, indices) -> CountSummary:
        return CountSummary(tuple(self.counts[i] for i in indices), self.shots)

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.shots


def rydberg_counts(batch: ShotBatch) -> CountSummary:
    return CountSummary(tuple(batch.bitstrings.sum(axis=0).tolist()), batch.shots)
