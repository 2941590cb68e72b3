"""Experiment harness: named sweeps over phase or count grids with
reproducible seeding, deterministic parallel execution, and CSV/JSON output.

Each sweep cell (grid point, or (R, offset) pair) is split into fixed-size
chunks of trials.  A chunk owns an independent generator seeded by
sha256(base_seed | experiment | cell indices | chunk index), and chunk
results are reduced with exact compensated summation in chunk order, so the
report is a pure function of the config: identical for one worker, many
workers, or repeated runs.

CSV rows carry one grid cell each with the fixed schema
ground_truth,bias,stderr_bias,mae,stderr_mae,n_samples.  Bias and MAE are
circular in the phase domain and plain differences in the count domain.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .counting import (
    CalibrationRecord,
    CountingInstance,
    calibrate_b,
    correct_mle,
    correct_single,
    sample_uqca_block,
)
from .mle import mle_batch
from .phase_math import BiasMaeEntry, PeaParams, ThetaMode, pea_kernel
from .sampler import RNG_ALGORITHM, derive_seed, make_rng, sample_upea_block
from .statevector import analytic_counting_pmf, grover_pea_pmf, _pea_pmf_impl

__all__ = [
    "EXPERIMENTS",
    "PRESETS",
    "SweepConfig",
    "SweepReport",
    "run_sweep",
    "run_verify_circuit",
    "write_csv",
    "write_metadata",
    "csv_text",
]

EXPERIMENTS = (
    "pea-bias-mae",
    "upea-bias-mae",
    "mle-bias-mae",
    "mae-vs-r",
    "qca-bias-mae",
    "uqca-corrected",
    "calibrate",
    "verify-circuit",
)

_CHUNK = 4096
_AUTO_CAL_SAMPLES = 1 << 16

CSV_HEADER = "ground_truth,bias,stderr_bias,mae,stderr_mae,n_samples"


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one experiment run.

    R is a single repetition count or an inclusive (lo, hi) range; ranges are
    accepted by mae-vs-r, qca-bias-mae, and uqca-corrected, which then emit
    one grid-pooled row per R.
    """

    experiment: str
    T: int = 16
    R: int | tuple[int, int] = 1
    grid_points: int = 64
    n_samples: int = 1 << 16
    theta_mode: ThetaMode = field(default_factory=ThetaMode.full)
    base_seed: int = 1
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.T < 1 or (self.T & (self.T - 1)) != 0:
            raise ValueError("T must be a positive power of two")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if isinstance(self.R, tuple):
            lo, hi = self.R
            if not (1 <= lo <= hi):
                raise ValueError("R range must satisfy 1 <= lo <= hi")
            if self.experiment not in ("mae-vs-r", "qca-bias-mae", "uqca-corrected"):
                raise ValueError(f"{self.experiment} takes a single R, not a range")
        elif self.R < 1:
            raise ValueError("R must be >= 1")
        if self.experiment in ("pea-bias-mae", "upea-bias-mae") and self.R != 1:
            raise ValueError(f"{self.experiment} is single-run; R must be 1")
        if self.experiment == "pea-bias-mae" and self.theta_mode.kind != "fixed":
            raise ValueError("pea-bias-mae requires a fixed theta mode (no random shift)")

    def r_values(self) -> list[int]:
        if isinstance(self.R, tuple):
            return list(range(self.R[0], self.R[1] + 1))
        return [self.R]

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "T": self.T,
                "R": list(self.R) if isinstance(self.R, tuple) else self.R,
                "grid_points": self.grid_points,
                "n_samples": self.n_samples,
                "theta_mode": str(self.theta_mode),
                "base_seed": self.base_seed,
                "output_path": self.output_path,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        raw = json.loads(text)
        r = raw["R"]
        return cls(
            experiment=str(raw["experiment"]),
            T=int(raw["T"]),
            R=(int(r[0]), int(r[1])) if isinstance(r, list) else int(r),
            grid_points=int(raw["grid_points"]),
            n_samples=int(raw["n_samples"]),
            theta_mode=ThetaMode.parse(str(raw["theta_mode"])),
            base_seed=int(raw["base_seed"]),
            output_path=raw.get("output_path"),
        )


@dataclass(frozen=True)
class SweepReport:
    config: SweepConfig
    entries: tuple[BiasMaeEntry, ...]
    metadata: dict


PRESETS: dict[str, SweepConfig] = {
    # single-run bias across the phase grid; the mae column of the same run
    # is the constancy series, so the two presets share one config
    "fig3": SweepConfig("upea-bias-mae", T=16, R=1, grid_points=64, n_samples=1 << 16),
    "fig4": SweepConfig("upea-bias-mae", T=16, R=1, grid_points=64, n_samples=1 << 16),
    "fig5": SweepConfig("mle-bias-mae", T=16, R=16, grid_points=64, n_samples=1 << 16),
    "fig6": SweepConfig("mae-vs-r", T=16, R=(1, 16), grid_points=8, n_samples=1 << 13),
    "fig7": SweepConfig("uqca-corrected", T=16, R=3, grid_points=64, n_samples=1 << 16),
    "fig8": SweepConfig("uqca-corrected", T=16, R=(1, 4), grid_points=17, n_samples=1 << 14),
}


class _Moments:
    """Order-independent accumulator: exact compensated reduction of per-chunk
    (sum d, sum d^2, sum |d|, sum |d|^2, n) partials, combined in chunk-index
    order regardless of completion order."""

    def __init__(self, n_chunks: int) -> None:
        self.parts: list[tuple[float, float, float, float, int] | None] = [None] * n_chunks

    def put(self, chunk_index: int, d: np.ndarray) -> None:
        a = np.abs(d)
        self.parts[chunk_index] = (
            float(np.sum(d)),
            float(np.sum(d * d)),
            float(np.sum(a)),
            float(np.sum(a * a)),
            int(d.size),
        )

    def entry(self, ground_truth: float) -> BiasMaeEntry:
        assert all(p is not None for p in self.parts)
        sd = math.fsum(p[0] for p in self.parts)
        sd2 = math.fsum(p[1] for p in self.parts)
        sa = math.fsum(p[2] for p in self.parts)
        sa2 = math.fsum(p[3] for p in self.parts)
        n = sum(p[4] for p in self.parts)
        bias = sd / n
        mae = sa / n
        if n > 1:
            var_d = max(sd2 - n * bias * bias, 0.0) / (n - 1)
            var_a = max(sa2 - n * mae * mae, 0.0) / (n - 1)
            se_b = math.sqrt(var_d / n)
            se_m = math.sqrt(var_a / n)
        else:
            se_b = se_m = 0.0
        if abs(bias) > mae:
            bias = math.copysign(mae, bias)
        return BiasMaeEntry(ground_truth, bias, mae, se_b, se_m, n)


def _chunks(n: int) -> list[tuple[int, int]]:
    """(chunk_index, size) partition of n trials; independent of workers."""
    out = []
    done = 0
    i = 0
    while done < n:
        size = min(_CHUNK, n - done)
        out.append((i, size))
        done += size
        i += 1
    return out


def _circular_err(est: np.ndarray, truth: float) -> np.ndarray:
    d = est - truth
    d -= np.floor(d)
    return np.where(d > 0.5, d - 1.0, d)


def _run_cells(tasks, workers: int) -> None:
    """Execute thunks either inline or on a thread pool; each writes its
    result into a preallocated slot, so scheduling order cannot matter."""
    if workers <= 1:
        for t in tasks:
            t()
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(t) for t in tasks]
        for f in futures:
            f.result()


def _phase_sweep_entries(config: SweepConfig, workers: int) -> list[BiasMaeEntry]:
    """pea-bias-mae / upea-bias-mae / mle-bias-mae: one row per phase."""
    R = config.R
    params = PeaParams.from_T(config.T, R, config.theta_mode)
    phis = np.arange(config.grid_points) / config.grid_points
    chunks = _chunks(config.n_samples)
    moments = [_Moments(len(chunks)) for _ in phis]

    def cell(gi: int, ci: int, size: int):
        def work() -> None:
            rng = make_rng(derive_seed(config.base_seed, config.experiment, gi, ci))
            phi = float(phis[gi])
            if R == 1:
                _, _, est = sample_upea_block(params, phi, rng, size)
            else:
                mat = np.empty((size, R))
                for j in range(R):
                    _, _, mat[:, j] = sample_upea_block(params, phi, rng, size)
                est = mle_batch(params, mat)
            moments[gi].put(ci, _circular_err(est, phi))

        return work

    tasks = [cell(gi, ci, size) for gi in range(len(phis)) for ci, size in chunks]
    _run_cells(tasks, workers)
    return [moments[gi].entry(float(phis[gi])) for gi in range(len(phis))]


def _mae_vs_r_entries(config: SweepConfig, workers: int) -> list[BiasMaeEntry]:
    """One grid-pooled row per R; the grid supplies phase offsets spanning one
    kernel period [0, 1/T), where both estimators' error laws live."""
    r_values = config.r_values()
    offsets = (np.arange(config.grid_points) + 0.5) / (config.grid_points * config.T)
    chunks = _chunks(config.n_samples)
    moments = [_Moments(config.grid_points * len(chunks)) for _ in r_values]

    def cell(ri: int, oi: int, ci: int, size: int):
        def work() -> None:
            R = r_values[ri]
            params = PeaParams.from_T(config.T, R, config.theta_mode)
            rng = make_rng(derive_seed(config.base_seed, config.experiment, R, oi, ci))
            phi = float(offsets[oi])
            if R == 1:
                _, _, est = sample_upea_block(params, phi, rng, size)
            else:
                mat = np.empty((size, R))
                for j in range(R):
                    _, _, mat[:, j] = sample_upea_block(params, phi, rng, size)
                est = mle_batch(params, mat)
            moments[ri].put(oi * len(chunks) + ci, _circular_err(est, phi))

        return work

    tasks = [
        cell(ri, oi, ci, size)
        for ri in range(len(r_values))
        for oi in range(config.grid_points)
        for ci, size in chunks
    ]
    _run_cells(tasks, workers)
    return [moments[ri].entry(float(r_values[ri])) for ri in range(len(r_values))]


def _resolve_calibration(
    config: SweepConfig, R: int, calibration: CalibrationRecord | None
) -> CalibrationRecord | None:
    """Calibration to apply for one R of a corrected sweep; None means the
    exact analytic single-run correction.  A supplied record must match."""
    if R == 1:
        return None
    if calibration is not None:
        if calibration.T != config.T or calibration.R != R:
            raise ValueError(
                f"calibration record is for (T={calibration.T}, R={calibration.R}); "
                f"sweep needs (T={config.T}, R={R})"
            )
        return calibration
    seed = derive_seed(config.base_seed, "calibrate", config.T, R)
    return calibrate_b(config.T, R, _AUTO_CAL_SAMPLES, seed)


def _qca_entries(
    config: SweepConfig, workers: int, calibration: CalibrationRecord | None
) -> tuple[list[BiasMaeEntry], list[CalibrationRecord]]:
    """qca-bias-mae (raw m_tilde) and uqca-corrected (corrected) sweeps.

    Single R: one row per m grid point.  R range: one row per R pooled over
    the m grid.  Count-domain errors are plain differences.
    """
    corrected = config.experiment == "uqca-corrected"
    r_values = config.r_values()
    pooled = isinstance(config.R, tuple)
    ms = np.linspace(0.0, 1.0, config.grid_points)
    chunks = _chunks(config.n_samples)

    if calibration is not None and (not corrected or len(r_values) != 1):
        raise ValueError("a calibration record applies to exactly one corrected (T, R) sweep")
    records: list[CalibrationRecord] = []
    b_for: dict[int, float | None] = {}
    for R in r_values:
        if corrected:
            rec = _resolve_calibration(config, R, calibration)
            if rec is None:
                b_for[R] = None  # exact single-run correction
            else:
                records.append(rec)
                b_for[R] = rec.b
        else:
            b_for[R] = None

    n_rows = len(r_values) if pooled else config.grid_points
    per_row_chunks = config.grid_points * len(chunks) if pooled else len(chunks)
    moments = [_Moments(per_row_chunks) for _ in range(n_rows)]

    def cell(ri: int, mi: int, ci: int, size: int):
        def work() -> None:
            R = r_values[ri]
            params = PeaParams.from_T(config.T, R, config.theta_mode)
            rng = make_rng(derive_seed(config.base_seed, config.experiment, R, mi, ci))
            m = float(ms[mi])
            _, m_tilde = sample_uqca_block(params, m, rng, size)
            if corrected:
                b = b_for[R]
                vals = correct_single(m_tilde, config.T) if b is None else correct_mle(m_tilde, b)
            else:
                vals = m_tilde
            row = ri if pooled else mi
            slot = mi * len(chunks) + ci if pooled else ci
            moments[row].put(slot, vals - m)

        return work

    tasks = [
        cell(ri, mi, ci, size)
        for ri in range(len(r_values))
        for mi in range(config.grid_points)
        for ci, size in chunks
    ]
    _run_cells(tasks, workers)
    truths = [float(r) for r in r_values] if pooled else [float(m) for m in ms]
    return [moments[i].entry(truths[i]) for i in range(n_rows)], records


def run_sweep(
    config: SweepConfig,
    calibration: CalibrationRecord | None = None,
    workers: int = 1,
) -> SweepReport:
    """Execute one experiment; the report depends only on the config (and the
    supplied calibration record), never on the worker count."""
    start = time.perf_counter()
    records: list[CalibrationRecord] = []
    if config.experiment in ("pea-bias-mae", "upea-bias-mae", "mle-bias-mae"):
        if isinstance(config.R, tuple):
            raise ValueError("phase sweeps take a single R")
        entries = _phase_sweep_entries(config, workers)
    elif config.experiment == "mae-vs-r":
        entries = _mae_vs_r_entries(config, workers)
    elif config.experiment in ("qca-bias-mae", "uqca-corrected"):
        entries, records = _qca_entries(config, workers, calibration)
    elif config.experiment == "calibrate":
        rec = calibrate_b(config.T, config.R, config.n_samples, config.base_seed)
        records = [rec]
        entries = []
    else:
        raise ValueError(
            "verify-circuit does not produce sweep entries; call run_verify_circuit"
        )
    metadata: dict = {
        "rng_algorithm": RNG_ALGORITHM,
        "wall_time": time.perf_counter() - start,
    }
    # singular key for the common one-record case; a multi-R corrected sweep
    # carries one record per R and gets the plural list instead
    if len(records) == 1:
        metadata["calibration_record"] = json.loads(records[0].to_json())
    elif records:
        metadata["calibration_records"] = [json.loads(r.to_json()) for r in records]
    return SweepReport(config, tuple(entries), metadata)


def csv_text(entries) -> str:
    """Render entries in the fixed schema; repr floats, LF endings."""
    lines = [CSV_HEADER]
    for e in entries:
        lines.append(
            f"{e.ground_truth!r},{e.bias!r},{e.stderr_bias!r},"
            f"{e.mae!r},{e.stderr_mae!r},{e.n_samples}"
        )
    return "\n".join(lines) + "\n"


def write_csv(report: SweepReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(report.entries))


def write_metadata(report: SweepReport, path: str) -> None:
    payload = {
        "config": json.loads(report.config.to_json()),
        **report.metadata,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def run_verify_circuit(
    pea_max_t: int = 6,
    grover_max_t: int = 5,
    grover_max_n: int = 4,
    n_phi: int = 32,
    n_theta: int = 8,
    seed: int = 1,
    corrupt_theta: bool = False,
    tolerance: float = 1e-10,
) -> dict:
    """Run the two oracle-equivalence suites and report max deviations.

    corrupt_theta flips the sign of the Rz ladder in the estimation circuit,
    a negative control that must make the check fail.
    """
    if pea_max_t > 6:
        raise ValueError("PEA check supports t <= 6")
    if grover_max_t > 5 or grover_max_n > 4:
        raise ValueError("counting check supports t <= 5, n <= 4")
    rng = make_rng(derive_seed(seed, "verify-circuit"))
    checks = []

    worst = 0.0
    sign = -1.0 if corrupt_theta else 1.0
    for t in range(1, pea_max_t + 1):
        T = 1 << t
        phis = rng.random(n_phi)
        thetas = rng.random(n_theta)
        for phi in phis:
            for theta in thetas:
                pmf = _pea_pmf_impl(t, float(phi), float(theta), sign).probs
                ref = pea_kernel(T, np.arange(T) / T - (phi + theta))
                worst = max(worst, float(np.max(np.abs(pmf - ref))))
    checks.append(
        {
            "name": "pea-circuit-vs-analytic",
            "max_deviation": worst,
            "tolerance": tolerance,
            "passed": worst < tolerance,
        }
    )

    worst = 0.0
    for t in range(1, grover_max_t + 1):
        for n in range(1, grover_max_n + 1):
            N = 1 << n
            theta = float(rng.random())
            for M in range(N + 1):
                inst = CountingInstance(n=n, M=M)
                pmf = grover_pea_pmf(t, inst, theta).probs
                ref = analytic_counting_pmf(t, M / N, theta)
                worst = max(worst, float(np.max(np.abs(pmf - ref))))
    checks.append(
        {
            "name": "counting-circuit-vs-mixture",
            "max_deviation": worst,
            "tolerance": tolerance,
            "passed": worst < tolerance,
        }
    )

    return {"checks": checks, "passed": all(c["passed"] for c in checks)}
