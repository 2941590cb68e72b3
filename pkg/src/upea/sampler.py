"""Seed-reproducible Monte Carlo sampling of phase-register outcomes.

Two call styles share one outcome law:

* per-trial objects (`sample_pea`, `sample_upea`, `run_batch`) draw from an
  rng stream sequentially (theta then the inverse-CDF uniform, per draw) and
  suit tests and small studies;
* vectorized blocks (`sample_upea_block`) draw a theta vector then a uniform
  vector for a whole block of trials and back the experiment harness.

The two styles consume their streams in different orders, so they produce
different (equally valid) samples from the same seed; each is individually
deterministic.  Seeds are 64-bit integers fed to numpy's PCG64 generator;
the algorithm name is exported as RNG_ALGORITHM for run metadata.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .phase_math import (
    BiasMaeEntry,
    PeaParams,
    Phase,
    ThetaMode,
    _circ_dist_array,
    pea_kernel,
    pea_pmf,
    wrap_phase,
)

__all__ = [
    "RNG_ALGORITHM",
    "RngSeed",
    "PhaseSample",
    "SampleBatch",
    "make_rng",
    "derive_seed",
    "sample_pea",
    "sample_upea",
    "sample_upea_block",
    "run_batch",
    "empirical_bias_mae",
]

RNG_ALGORITHM = "numpy-pcg64"

# 64-bit unsigned seed
RngSeed = int


@dataclass(frozen=True)
class PhaseSample:
    """One randomized run: the raw outcome s, the shift theta that was
    injected, and the estimate phi_tilde = wrap(s/T - theta)."""

    s: int
    theta: float
    phi_tilde: Phase


@dataclass(frozen=True)
class SampleBatch:
    """R repeated runs at one true phase."""

    params: PeaParams
    samples: tuple[PhaseSample, ...]

    def __post_init__(self) -> None:
        if len(self.samples) != self.params.R:
            raise ValueError("batch length must equal params.R")

    @property
    def estimates(self) -> np.ndarray:
        return np.array([x.phi_tilde for x in self.samples])


def make_rng(seed: RngSeed) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def derive_seed(base_seed: RngSeed, *path) -> RngSeed:
    """Strong child seed from a base seed and a path of labels/indices.

    sha256 over the rendered path; collision-free for practical purposes and
    stable across platforms and processes.
    """
    text = "|".join([str(int(base_seed))] + [str(p) for p in path])
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def _draw_theta(mode: ThetaMode, T: int, rng: np.random.Generator, n: int | None = None):
    if mode.kind == "full":
        return rng.random() if n is None else rng.random(n)
    if mode.kind == "period":
        scale = 1.0 / T
        return rng.random() * scale if n is None else rng.random(n) * scale
    return mode.value if n is None else np.full(n, mode.value)


def sample_pea(params: PeaParams, phi: float, rng: np.random.Generator) -> int:
    """Draw one outcome s from the exact outcome table by inverse CDF."""
    table = pea_pmf(params, phi)
    cdf = np.cumsum(table.probs)
    s = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(s, params.T - 1)


def sample_upea(params: PeaParams, phi: float, rng: np.random.Generator) -> PhaseSample:
    """Draw theta per params.theta_mode, run the estimator at phi + theta,
    and return (s, theta, wrap(s/T - theta))."""
    theta = float(_draw_theta(params.theta_mode, params.T, rng))
    s = sample_pea(params, phi + theta, rng)
    return PhaseSample(s, theta, wrap_phase(s / params.T - theta))


def sample_upea_block(
    params: PeaParams, phi, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized block of n independent runs; returns (s, theta, phi_tilde)
    arrays.  Draws the whole theta vector, then the whole uniform vector.
    phi may be a scalar or a length-n vector of per-trial true phases."""
    T = params.T
    theta = np.asarray(_draw_theta(params.theta_mode, T, rng, n), dtype=float)
    shifted = np.asarray(phi, dtype=float) + theta
    pmf = pea_kernel(T, np.arange(T)[None, :] / T - shifted[:, None])
    cdf = np.cumsum(pmf, axis=1)
    u = rng.random(n)
    # count of cdf entries <= u reproduces searchsorted side="right" exactly,
    # so the block and per-trial paths share one inverse-CDF convention
    s = (cdf <= u[:, None]).sum(axis=1)
    np.minimum(s, T - 1, out=s)
    phi_tilde = s / T - theta
    phi_tilde -= np.floor(phi_tilde)
    phi_tilde[phi_tilde >= 1.0] = 0.0
    return s, theta, phi_tilde


def run_batch(params: PeaParams, phi: float, rng: np.random.Generator) -> SampleBatch:
    """R independent runs at one true phase (theta mode taken from params)."""
    return SampleBatch(params, tuple(sample_upea(params, phi, rng) for _ in range(params.R)))


def empirical_bias_mae(
    estimates, ground_truth: float, circular: bool = True
) -> BiasMaeEntry:
    """Sample bias and MAE of a list of estimates against the truth.

    circular=True measures signed circular distance (phase-valued
    estimands); circular=False measures plain differences (estimands on a
    line segment, e.g. normalized counts).  Standard errors are sample
    standard deviations over sqrt(n); zero-variance samples report 0.
    """
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be nonempty")
    if circular:
        d = _circ_dist_array(est, wrap_phase(ground_truth))
    else:
        d = est - float(ground_truth)
    n = est.size
    bias = float(d.mean())
    mae = float(np.abs(d).mean())
    if n > 1:
        se_b = float(d.std(ddof=1) / np.sqrt(n))
        se_m = float(np.abs(d).std(ddof=1) / np.sqrt(n))
    else:
        se_b = se_m = 0.0
    if abs(bias) > mae:  # rounding guard; mathematically |mean| <= mean(|.|)
        bias = float(np.copysign(mae, bias))
    return BiasMaeEntry(float(ground_truth), bias, mae, se_b, se_m, n)
