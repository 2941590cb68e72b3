"""Counting via phase estimation: phase/count maps, sampling, calibration,
and the two bias-correction formulas.

A marked fraction m = M/N maps to the rotation phase phi = arcsin(sqrt(m))/pi
in [0, 1/2]; the search operator has eigenphases +-phi, and the uniform start
state weights them equally, so each trial estimates the phase of a coin-flip
sign.  A single randomized run has exact bias (1-2m)/(2T) in m; the
maximum-likelihood combination of R runs has bias b*(1-2m) with b measured by
simulation at m = 0.  Both laws are affine in m, so each inverts exactly:

    single run:  m' = (m_tilde - 1/(2T)) / (1 - 1/T)
    MLE:         m' = (m_tilde - b) / (1 - 2b)

Corrected values are reported raw (never clamped to [0, 1]: clamping would
reintroduce bias).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .phase_math import PeaParams, Phase, ThetaMode, wrap_phase
from .mle import mle_counting_batch, mle_estimate_counting
from .sampler import RNG_ALGORITHM, RngSeed, derive_seed, make_rng, sample_upea, sample_upea_block

__all__ = [
    "CountingInstance",
    "CountingEstimate",
    "CalibrationRecord",
    "phi_from_m",
    "m_from_phi",
    "sample_uqca",
    "sample_uqca_block",
    "exact_bias_uqca_single",
    "correct_single",
    "calibrate_b",
    "correct_mle",
]


@dataclass(frozen=True)
class CountingInstance:
    """A counting problem: n work qubits, N = 2^n items, and either an
    explicit marked set or just the marked count M (both route to one phi)."""

    n: int
    marked: frozenset[int] | None = None
    M: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        N = self.N
        if self.marked is not None:
            marked = frozenset(int(x) for x in self.marked)
            object.__setattr__(self, "marked", marked)
            if any(not (0 <= x < N) for x in marked):
                raise ValueError("marked items must lie in [0, N)")
            if self.M is None:
                object.__setattr__(self, "M", len(marked))
            elif self.M != len(marked):
                raise ValueError("M disagrees with |marked|")
        elif self.M is None:
            raise ValueError("provide a marked set or a marked count")
        if not (0 <= self.M <= N):
            raise ValueError("M must lie in [0, N]")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def m(self) -> float:
        return self.M / self.N

    @property
    def phi(self) -> Phase:
        return phi_from_m(self.m)


@dataclass(frozen=True)
class CountingEstimate:
    """One counting trial: the folded phase estimate, its count fraction
    m_tilde = sin^2(pi phi_hat), and optionally a bias-corrected fraction
    (set by the caller; may leave [0, 1])."""

    m_tilde: float
    phi_hat: Phase
    R: int
    m_corrected: float | None = None

    def __post_init__(self) -> None:
        if abs(self.m_tilde - m_from_phi(self.phi_hat)) > 1e-12:
            raise ValueError("m_tilde must equal sin^2(pi phi_hat)")
        if self.R < 1:
            raise ValueError("R must be >= 1")


@dataclass(frozen=True)
class CalibrationRecord:
    """Monte Carlo measurement of b = mean(m_tilde) at m = 0 for one (T, R)."""

    T: int
    R: int
    b: float
    stderr_b: float
    n_samples: int
    seed: RngSeed
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self) -> None:
        if not (self.stderr_b > 0.0):
            raise ValueError("stderr_b must be positive")
        if not math.isfinite(self.b):
            raise ValueError("b must be finite")

    def to_json(self) -> str:
        return json.dumps(
            {
                "T": self.T,
                "R": self.R,
                "b": self.b,
                "stderr_b": self.stderr_b,
                "n_samples": self.n_samples,
                "seed": self.seed,
                "rng_algorithm": self.rng_algorithm,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "CalibrationRecord":
        raw = json.loads(text)
        return cls(
            T=int(raw["T"]),
            R=int(raw["R"]),
            b=float(raw["b"]),
            stderr_b=float(raw["stderr_b"]),
            n_samples=int(raw["n_samples"]),
            seed=int(raw["seed"]),
            rng_algorithm=str(raw["rng_algorithm"]),
        )


def phi_from_m(m: float) -> Phase:
    """Phase in [0, 1/2] whose squared sine of a half-turn equals m."""
    m = float(m)
    if not (0.0 <= m <= 1.0):
        raise ValueError("m must lie in [0, 1]")
    return math.asin(math.sqrt(m)) / math.pi


def m_from_phi(phi: float) -> float:
    """sin^2(pi phi); inverse of phi_from_m on [0, 1/2]."""
    return math.sin(math.pi * float(phi)) ** 2


def sample_uqca(params: PeaParams, m: float, rng: np.random.Generator) -> CountingEstimate:
    """One counting trial: draw the eigenphase sign (one flip per trial,
    shared by all R runs), estimate the phase R times, combine with the
    mixture MLE (R = 1: fold), and map back to a count fraction."""
    phi = phi_from_m(m)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    estimates = [sample_upea(params, sign * phi, rng).phi_tilde for _ in range(params.R)]
    phi_hat = mle_estimate_counting(params, estimates).phi_hat
    return CountingEstimate(m_from_phi(phi_hat), phi_hat, params.R)


def sample_uqca_block(
    params: PeaParams, m: float, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized block of n counting trials; returns (phi_hat, m_tilde)
    arrays.  Stream order: sign vector, then per repetition a theta vector
    and a uniform vector (see sampler module on block-vs-scalar streams)."""
    phi = phi_from_m(m)
    sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    est = np.empty((n, params.R))
    base = sign * phi
    # one block per repetition; each trial's R runs share its sign
    for j in range(params.R):
        _, _, est[:, j] = sample_upea_block(params, base, rng, n)
    phi_hat = mle_counting_batch(params, est)
    m_tilde = np.sin(np.pi * phi_hat) ** 2
    return phi_hat, m_tilde


def exact_bias_uqca_single(m: float, T: int) -> float:
    """Exact single-run bias of m_tilde: (1-2m)/(2T), valid for every m."""
    m = float(m)
    if not (0.0 <= m <= 1.0):
        raise ValueError("m must lie in [0, 1]")
    return (1.0 - 2.0 * m) / (2.0 * T)


def correct_single(m_tilde, T: int):
    """Invert the exact single-run bias law; output deliberately unclamped."""
    return (np.asarray(m_tilde, dtype=float) - 1.0 / (2.0 * T)) / (1.0 - 1.0 / T)


def correct_mle(m_tilde, b: float):
    """Invert the MLE bias law m -> m(1-2b) + b; b = 1/2 is degenerate."""
    b = float(b)
    if b == 0.5:
        raise ValueError("b = 1/2 makes the bias law non-invertible")
    return (np.asarray(m_tilde, dtype=float) - b) / (1.0 - 2.0 * b)


_CAL_CHUNK = 4096


def calibrate_b(T: int, R: int, n_samples: int, seed: RngSeed) -> CalibrationRecord:
    """Measure b = B(0): mean folded count fraction over n_samples trials at
    m = 0.  Trials run in fixed-size chunks with child seeds derived from the
    given seed under the 'calibrate' tag, so results are reproducible and
    disjoint from any evaluation stream built on the same base seed."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    params = PeaParams.from_T(T, R, ThetaMode.full())
    vals = np.empty(n_samples)
    done = 0
    chunk_index = 0
    while done < n_samples:
        size = min(_CAL_CHUNK, n_samples - done)
        rng = make_rng(derive_seed(seed, "calibrate", T, R, chunk_index))
        _, m_tilde = sample_uqca_block(params, 0.0, rng, size)
        vals[done : done + size] = m_tilde
        done += size
        chunk_index += 1
    b = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(n_samples))
    return CalibrationRecord(T, R, b, stderr, n_samples, int(seed))
