"""Exact distributions and error functionals for QFT-based phase estimation.

A t-qubit phase register measures an outcome s in {0, ..., T-1}, T = 2^t,
distributed as

    P(s | phi) = ( sin(T pi d) / (T sin(pi d)) )^2,     d = s/T - phi,

with the removable singularity at integer d evaluating to 1.  The randomized
(unbiased) variant shifts the phase by a classical offset theta before the
run and subtracts it afterwards, turning the discrete outcome into the
continuous estimate phi_tilde = s/T - theta with density

    rho(d) = sin^2(T pi d) / (T sin^2(pi d)),           d = phi_tilde - phi,

whose limit at integer d is T.  This module evaluates both laws exactly,
provides circular-distance arithmetic, and computes closed-form / quadrature
bias and mean-absolute-error functionals of the two estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Phase",
    "ThetaMode",
    "PeaParams",
    "DistTable",
    "BiasMaeEntry",
    "wrap_phase",
    "circ_dist",
    "pea_kernel",
    "pea_pmf_at",
    "pea_pmf",
    "upea_pdf",
    "exact_bias_mae_pea",
    "exact_mae_upea",
]

# A phase is a plain float, canonically stored in [0, 1) (fraction of a turn).
Phase = float

# smallest normal float64; kernel arguments reduced below this would push
# pi*e into the subnormal range where sin loses relative precision
_TINY = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class ThetaMode:
    """How the random shift theta is drawn: the full unit interval, one
    register period [0, 1/T), or a fixed deterministic value."""

    kind: str  # "full" | "period" | "fixed"
    value: float = 0.0  # used only by kind="fixed"

    def __post_init__(self) -> None:
        if self.kind not in ("full", "period", "fixed"):
            raise ValueError(f"unknown theta mode kind: {self.kind!r}")
        if self.kind == "fixed" and not (0.0 <= self.value < 1.0):
            raise ValueError("fixed theta must lie in [0, 1)")

    @classmethod
    def full(cls) -> "ThetaMode":
        return cls("full")

    @classmethod
    def period(cls) -> "ThetaMode":
        return cls("period")

    @classmethod
    def fixed(cls, value: float) -> "ThetaMode":
        return cls("fixed", float(value))

    def __str__(self) -> str:
        return f"fixed:{self.value!r}" if self.kind == "fixed" else self.kind

    @classmethod
    def parse(cls, text: str) -> "ThetaMode":
        """Parse 'full' | 'period' | 'fixed:<x>'."""
        if text == "full":
            return cls.full()
        if text == "period":
            return cls.period()
        if text.startswith("fixed:"):
            return cls.fixed(float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse theta mode {text!r}")


@dataclass(frozen=True)
class PeaParams:
    """Register size and repetition count for one estimation experiment.

    t is the number of register qubits, T = 2^t the number of outcomes,
    R the number of repetitions combined by the likelihood estimator.
    t = 0 (single-outcome register) is allowed as the degenerate case.
    """

    t: int
    R: int = 1
    theta_mode: ThetaMode = field(default_factory=ThetaMode.full)

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.R < 1:
            raise ValueError("R must be >= 1")

    @property
    def T(self) -> int:
        return 1 << self.t

    @classmethod
    def from_T(cls, T: int, R: int = 1, theta_mode: ThetaMode | None = None) -> "PeaParams":
        """Build from the outcome count T, which must be a power of two."""
        if T < 1 or (T & (T - 1)) != 0:
            raise ValueError("T must be a positive power of two")
        return cls(T.bit_length() - 1, R, theta_mode or ThetaMode.full())


@dataclass(frozen=True)
class DistTable:
    """Exact outcome pmf over s = 0..T-1 at a fixed true phase."""

    params: PeaParams
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.shape != (self.params.T,):
            raise ValueError("probs must have length T")
        if np.any(p < -1e-15) or np.any(p > 1 + 1e-12):
            raise ValueError("probabilities out of [0, 1]")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities do not sum to 1")


@dataclass(frozen=True)
class BiasMaeEntry:
    """One (ground truth, bias, MAE) record; stderr fields are None for
    exact computations and sample standard errors for Monte Carlo ones."""

    ground_truth: float
    bias: float
    mae: float
    stderr_bias: float | None = None
    stderr_mae: float | None = None
    n_samples: int | None = None

    def __post_init__(self) -> None:
        if not (self.mae >= 0.0):
            raise ValueError("mae must be nonnegative")
        if abs(self.bias) > self.mae + 1e-12:
            raise ValueError("|bias| cannot exceed mae")


def wrap_phase(x: float) -> Phase:
    """Reduce a real phase to its canonical representative in [0, 1)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("phase must be finite")
    r = x - math.floor(x)
    # floor rounding can land exactly on 1.0 for tiny negative inputs
    return 0.0 if r >= 1.0 else r


def circ_dist(a: float, b: float) -> float:
    """Signed circular distance d(a, b) in (-1/2, +1/2]; the antipodal tie
    resolves to +1/2.  d is the unique representative of a - b (mod 1)."""
    d = wrap_phase(float(a) - float(b))
    return d - 1.0 if d > 0.5 else d


def _circ_dist_array(a: np.ndarray, b) -> np.ndarray:
    """Vectorized circ_dist; same tie convention."""
    d = np.asarray(a, dtype=float) - b
    d -= np.floor(d)
    d[d >= 1.0] = 0.0
    return np.where(d > 0.5, d - 1.0, d)


def pea_kernel(T: int, delta) -> np.ndarray | float:
    """The squared Dirichlet-type ratio (sin(T pi delta) / (T sin(pi delta)))^2.

    Evaluated exactly for any real delta: arguments are reduced as
    e = delta - round(delta) and f = T*e - round(T*e); because T is a power
    of two both reductions are exact in binary floating point, so the value
    is exactly 1 at integer delta and exactly 0 at the kernel zeros k/T
    (k not divisible by T).  Sums to 1 over the outcome lattice.
    """
    delta = np.asarray(delta, dtype=float)
    e = delta - np.round(delta)
    u = T * e
    f = u - np.round(u)
    num = np.sin(np.pi * f)
    den = T * np.sin(np.pi * e)
    # for |e| below _TINY the products pi*e and pi*f round in the subnormal
    # range and their ratio loses relative precision (can exceed 1); the true
    # value there is 1.0 to the last bit, so widen the lattice mask (e == 0
    # included; a subnormal f near a kernel zero is harmless, ratio ~ 0)
    lattice = np.abs(e) < _TINY
    r = np.divide(num, den, out=np.ones_like(num), where=~lattice)
    out = r * r
    return float(out) if out.ndim == 0 else out


def pea_pmf_at(params: PeaParams, s: int, phi: float) -> float:
    """Probability of measuring outcome s at true phase phi."""
    T = params.T
    if not (0 <= s < T):
        raise ValueError(f"outcome s must lie in [0, {T})")
    return float(pea_kernel(T, s / T - phi))


def pea_pmf(params: PeaParams, phi: float) -> DistTable:
    """Exact outcome table over all T outcomes at true phase phi."""
    T = params.T
    probs = pea_kernel(T, np.arange(T) / T - float(phi))
    return DistTable(params, np.atleast_1d(probs))


def upea_pdf(params: PeaParams, phi_tilde: float, phi: float) -> float:
    """Density of the randomized estimate at phi_tilde given true phase phi;
    equals T * pea_kernel(phi_tilde - phi) and integrates to 1 per period."""
    T = params.T
    return T * float(pea_kernel(T, float(phi_tilde) - float(phi)))


def exact_bias_mae_pea(params: PeaParams, phi: float) -> BiasMaeEntry:
    """Exact bias and MAE of the raw estimator s/T at true phase phi: finite
    sums of the signed / absolute circular distance against the outcome pmf."""
    T = params.T
    s_over_T = np.arange(T) / T
    p = np.atleast_1d(pea_kernel(T, s_over_T - float(phi)))
    d = _circ_dist_array(s_over_T, wrap_phase(phi))
    bias = float(np.dot(d, p))
    mae = float(np.dot(np.abs(d), p))
    if abs(bias) > mae:  # guard against rounding inverting the triangle bound
        bias = math.copysign(mae, bias)
    return BiasMaeEntry(wrap_phase(phi), bias, mae)


def _mae_pea_grid(T: int, phis: np.ndarray) -> np.ndarray:
    """Vectorized exact single-run MAE at each phase in phis."""
    s_over_T = np.arange(T) / T
    delta = s_over_T[None, :] - phis[:, None]
    p = pea_kernel(T, delta)
    d = delta - np.floor(delta)
    d = np.where(d > 0.5, d - 1.0, d)
    return (np.abs(d) * p).sum(axis=1)


def exact_mae_upea(params: PeaParams, rel_tol: float = 1e-8) -> float:
    """MAE of the randomized estimator: the phase average of the raw
    estimator's exact MAE over one period, which is independent of the true
    phase.  Composite Simpson quadrature on kink-aligned grids (the integrand
    bends at multiples of 1/(2T)), doubled until the relative change is below
    rel_tol.

    Raises RuntimeError if doubling reaches the node cap without converging.
    """
    T = params.T
    if T == 1:
        # single outcome: estimate is theta-shifted 0, error uniform on the
        # half-circle; closed form integral of |d| is 1/4
        return 0.25

    # n must stay a multiple of 2T so Simpson nodes hit every kink
    n = max(4 * T, 256)
    prev = None
    while n <= (1 << 22):
        x = np.arange(n + 1) / n
        y = _mae_pea_grid(T, x)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        val = float(np.dot(w, y) / (3.0 * n))
        if prev is not None and abs(val - prev) <= rel_tol * abs(val):
            return val
        prev = val
        n *= 2
    raise RuntimeError("quadrature did not converge to the requested tolerance")
