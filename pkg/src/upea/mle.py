"""Maximum-likelihood combination of repeated phase estimates.

Given R estimates phi_tilde_j from randomized runs at one unknown phase, the
combined estimate maximizes

    L(c) = sum_j log K(phi_tilde_j - c),

where K is the squared outcome kernel (limit 1 at integer offsets, exact
zeros at k/T).  The counting variant maximizes the even mixture

    L(c) = sum_j log [ K(phi_tilde_j - c)/2 + K(phi_tilde_j + c)/2 ]

over c in [0, 1/2], because the generating process draws the sign of the
phase uniformly and K is even.

Maximization: coarse scan over max(4*T*R, 1024) equispaced candidates (4x
oversampling of the likelihood's O(T*R) oscillations), golden-section
refinement of the winning bracket to width 1e-12, and (plain variant only)
a guarded Newton polish on dL/dc that pins the peak well below the 1e-9
shift-equivariance tolerance.  Ties break toward the smaller phase.

Scalar entry points evaluate the kernel exactly everywhere.  The *_batch
variants serve the Monte Carlo harness: their coarse scan snaps estimates to
the candidate grid and gathers from a precomputed log-kernel table (30x
faster), then refines each winning bracket with exact evaluations, landing
on the same maximizer as the scalar path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_math import _TINY, PeaParams, Phase, pea_kernel, wrap_phase

__all__ = [
    "LOG_ZERO",
    "MleResult",
    "log_kernel",
    "log_likelihood",
    "mle_estimate",
    "mle_estimate_counting",
    "mle_batch",
    "mle_counting_batch",
]

# sentinel for log of an exact kernel zero: the maximizer only compares, so
# a large negative finite value stands in for -infinity
LOG_ZERO = -1e18

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0
_BRACKET_TOL = 1e-12


@dataclass(frozen=True)
class MleResult:
    phi_hat: Phase
    log_likelihood: float
    grid_points: int
    refine_iterations: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.log_likelihood):
            raise ValueError("log_likelihood must be finite")
        if not (0.0 <= self.phi_hat < 1.0):
            raise ValueError("phi_hat must lie in [0, 1)")


def log_kernel(T: int, delta) -> np.ndarray | float:
    """log of pea_kernel with exact zeros mapped to the LOG_ZERO sentinel."""
    delta = np.asarray(delta, dtype=float)
    e = delta - np.round(delta)
    u = T * e
    f = u - np.round(u)
    num = np.abs(np.sin(np.pi * f))
    den = T * np.abs(np.sin(np.pi * e))
    # same subnormal guard as pea_kernel: log of the limit value is exactly 0
    lattice = np.abs(e) < _TINY
    zero = (num == 0.0) & ~lattice
    num = np.where(zero | lattice, 1.0, num)
    den = np.where(zero | lattice, 1.0, den)
    out = 2.0 * (np.log(num) - np.log(den))
    out = np.where(zero, LOG_ZERO, out)
    out = np.where(lattice, 0.0, out)
    return float(out) if out.ndim == 0 else out


def log_likelihood(params: PeaParams, estimates, phi_cand: float) -> float:
    """Sum of log kernel factors at the candidate phase."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be nonempty")
    return float(np.sum(log_kernel(params.T, est - float(phi_cand))))


def _mix_ll(T: int, est: np.ndarray, c) -> np.ndarray:
    """Mixture log likelihood sum_j log[K(e_j - c)/2 + K(e_j + c)/2] for a
    vector of candidates c; est has shape (R,)."""
    c = np.asarray(c, dtype=float)
    a = pea_kernel(T, est[None, :] - c[..., None])
    b = pea_kernel(T, est[None, :] + c[..., None])
    mix = 0.5 * (a + b)
    out = np.where(mix > 0.0, np.log(np.where(mix > 0.0, mix, 1.0)), LOG_ZERO)
    return out.sum(axis=-1)


def mixture_log_likelihood(params: PeaParams, estimates, phi_cand: float) -> float:
    """Counting-variant objective at one candidate."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be nonempty")
    return float(_mix_ll(params.T, est, np.asarray([float(phi_cand)]))[0])


def _golden(f, lo: float, hi: float, seed_best: tuple[float, float]) -> tuple[float, float, int]:
    """Golden-section max of f on [lo, hi] to bracket width 1e-12.

    Tracks the best point seen (seeded with the coarse winner) so the result
    never scores below any evaluated point; ties keep the smaller abscissa.
    Returns (x, f(x), iterations).
    """
    best_x, best_f = seed_best
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    iters = 0
    while (b - a) > _BRACKET_TOL and iters < 200:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        iters += 1
    for x, fx in ((c, fc), (d, fd)):
        if fx > best_f or (fx == best_f and x < best_x):
            best_x, best_f = x, fx
    return best_x, best_f, iters


def _dll(T: int, est: np.ndarray, c: float) -> tuple[float, float]:
    """First and second derivative of the plain log likelihood at c.

    d/dc log K(e - c) = -2 pi [T cot(T pi d) - cot(pi d)], d = e - c, with
    the series branch -2 pi^2 d (T^2-1)/3 * [1 + (pi d)^2 (T^4-1)/(15(T^2-1))]
    near d = 0 where the two cotangents cancel.
    """
    d = est - c
    d = d - np.round(d)
    g = np.empty_like(d)
    gp = np.empty_like(d)
    small = np.abs(d) < (0.02 / T)
    ds = d[small]
    t2 = float(T * T)
    g[small] = -2.0 * np.pi**2 * ds * (t2 - 1.0) / 3.0 * (
        1.0 + (np.pi * ds) ** 2 * (t2 * t2 - 1.0) / (15.0 * (t2 - 1.0))
    )
    gp[small] = -2.0 * np.pi**2 * (t2 - 1.0) / 3.0 * (
        1.0 + 3.0 * (np.pi * ds) ** 2 * (t2 * t2 - 1.0) / (15.0 * (t2 - 1.0))
    )
    dl = d[~small]
    g[~small] = 2.0 * np.pi * (T / np.tan(np.pi * T * dl) - 1.0 / np.tan(np.pi * dl))
    gp[~small] = 2.0 * np.pi**2 * (
        t2 / np.sin(np.pi * T * dl) ** 2 - 1.0 / np.sin(np.pi * dl) ** 2
    )
    # dL/dc = -sum g(d); d2L/dc2 = +sum g'(d)  (two sign flips cancel once)
    return -float(g.sum()), float(gp.sum())


def _newton_polish(
    T: int, est: np.ndarray, x: float, fx: float, lo: float, hi: float, f
) -> tuple[float, float, int]:
    """Up to 3 Newton steps on dL/dc from the golden-section point; keeps the
    incumbent whenever a step leaves the bracket, hits a non-concave point,
    or fails to improve the exact objective."""
    cur = x
    steps = 0
    for _ in range(3):
        d1, d2 = _dll(T, est, cur)
        if not np.isfinite(d1) or not np.isfinite(d2) or d2 >= 0.0:
            break
        step = d1 / d2
        nxt = cur - step
        if not (lo - 1e-9 <= nxt <= hi + 1e-9):
            break
        steps += 1
        if abs(nxt - cur) < 1e-16:
            cur = nxt
            break
        cur = nxt
    if steps and cur != x:
        fcur = f(cur)
        if fcur >= fx:
            return cur, fcur, steps
    return x, fx, 0


def mle_estimate(params: PeaParams, estimates) -> MleResult:
    """Global maximizer of the plain log likelihood over [0, 1)."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be nonempty")
    T, R = params.T, est.size
    if R == 1:
        x = wrap_phase(float(est[0]))
        return MleResult(x, 0.0, 0, 0)
    G = max(4 * T * R, 1024)
    grid = np.arange(G) / G
    ll = log_kernel(T, est[None, :] - grid[:, None]).sum(axis=1)
    k = int(np.argmax(ll))  # first occurrence = smallest candidate on ties

    def f(c: float) -> float:
        return float(np.sum(log_kernel(T, est - c)))

    lo, hi = (k - 1) / G, (k + 1) / G
    x, fx, iters = _golden(f, lo, hi, (grid[k], float(ll[k])))
    x, fx, extra = _newton_polish(T, est, x, fx, lo, hi, f)
    return MleResult(wrap_phase(x), fx, G, iters + extra)


def mle_estimate_counting(params: PeaParams, estimates) -> MleResult:
    """Maximizer of the even mixture log likelihood over [0, 1/2].

    R = 1 takes the fold min(w, 1-w) of the single estimate as an explicit
    fast path: the fold preserves sin^2(pi .) exactly, which is what the
    single-run bias law and its correction assume.  (The literal mixture
    argmax drifts off the fold when the +-phi peaks overlap, i.e. within
    ~1/T of the interval ends; the fold is the contractual estimator.)
    """
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be nonempty")
    T, R = params.T, est.size
    if R == 1:
        w = wrap_phase(float(est[0]))
        x = min(w, 1.0 - w)
        return MleResult(x, float(np.log(0.5 * (1.0 + pea_kernel(T, 2.0 * w)))), 0, 0)
    G = max(4 * T * R, 1024)
    ncand = G // 2 + 1
    grid = np.arange(ncand) / G
    ll = _mix_ll(T, est, grid)
    k = int(np.argmax(ll))

    def f(c: float) -> float:
        return float(_mix_ll(T, est, np.asarray([c]))[0])

    lo = max((k - 1) / G, 0.0)
    hi = min((k + 1) / G, 0.5)
    x, fx, iters = _golden(f, lo, hi, (grid[k], float(ll[k])))
    return MleResult(x, fx, ncand, iters)


# ---------------------------------------------------------------------------
# batch path


def _zero_cells(T: int, G: int) -> tuple[np.ndarray, np.ndarray]:
    """Cells of the i/G candidate grid that sit within half a cell of a
    kernel zero, and the kernel value half a cell away from that zero (the
    cell's representative magnitude)."""
    i = np.arange(G)
    e = i / G - np.round(i / G)
    u = T * e
    f = u - np.round(u)
    near_zero = (np.abs(f) < T / (2.0 * G)) & (e != 0.0)
    den = T * np.abs(np.sin(np.pi * e))
    num_rep = np.sin(np.pi * T / (2.0 * G))
    rep = np.divide(num_rep, den, out=np.ones(G), where=den > 0) ** 2
    return near_zero, rep


def _snap_table(T: int, G: int) -> np.ndarray:
    """log-kernel table on the candidate grid i/G with kernel-zero cells
    clamped to their half-cell representative value, so a snapped coarse scan
    never spuriously discards a candidate whose true factor is merely small."""
    tab = np.asarray(log_kernel(T, np.arange(G) / G), dtype=float)
    near_zero, rep = _zero_cells(T, G)
    with np.errstate(divide="ignore"):
        return np.where(near_zero, np.log(np.where(rep > 0, rep, 1.0)), tab)


def _snap_ktable(T: int, G: int) -> np.ndarray:
    """Kernel-value table with the same zero-cell clamping as _snap_table,
    for the mixture scan (which sums kernels before taking the log)."""
    tab = np.asarray(pea_kernel(T, np.arange(G) / G), dtype=float)
    near_zero, rep = _zero_cells(T, G)
    return np.where(near_zero, rep, tab)


def _golden_batch(f, lo: np.ndarray, hi: np.ndarray, seed_x: np.ndarray, seed_f: np.ndarray):
    """Vectorized golden-section max; f maps a candidate vector to a value
    vector.  Returns (x, f(x), iterations) with best-seen tracking."""
    a = lo.copy()
    b = hi.copy()
    best_x = seed_x.copy()
    best_f = seed_f.copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    iters = 0
    while float(np.max(b - a)) > _BRACKET_TOL and iters < 200:
        left = fc >= fd
        # shrink from the right where the left probe wins, else from the left
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = b - _INVPHI * (b - a)
        d_new = a + _INVPHI * (b - a)
        # where left: new probe is c_new (d_new == old c); where right: d_new
        carry_f = np.where(left, fc, fd)
        probe = np.where(left, c_new, d_new)
        f_probe = f(probe)
        fc = np.where(left, f_probe, carry_f)
        fd = np.where(left, carry_f, f_probe)
        c, d = c_new, d_new
        iters += 1
    for x_, f_ in ((c, fc), (d, fd)):
        better = (f_ > best_f) | ((f_ == best_f) & (x_ < best_x))
        best_x = np.where(better, x_, best_x)
        best_f = np.where(better, f_, best_f)
    return best_x, best_f, iters


_RESCORE = 16  # snapped-scan short-list width re-scored with the exact objective


def _shortlist_argmax(snapped: np.ndarray, exact_at: "callable") -> np.ndarray:
    """Exact argmax over the top candidates of a snapped coarse scan.

    The snapped scan ranks candidates with estimates rounded to the grid,
    which can misorder near-tied likelihood peaks.  Re-scoring the best
    _RESCORE cells per row with the exact objective restores the scalar
    path's ranking; candidate indices are sorted ascending so exact ties
    resolve toward the smaller phase, as in the scalar scan.
    """
    n, ncand = snapped.shape
    m = min(_RESCORE, ncand)
    top = np.argpartition(snapped, ncand - m, axis=1)[:, ncand - m :]
    top.sort(axis=1)
    vals = exact_at(top)
    return top[np.arange(n), np.argmax(vals, axis=1)]


def mle_batch(params: PeaParams, estimates: np.ndarray) -> np.ndarray:
    """Plain MLE for many trials at once; estimates has shape (n, R).
    Returns phi_hat of shape (n,).  Same maximizer as mle_estimate."""
    est = np.asarray(estimates, dtype=float)
    n, R = est.shape
    T = params.T
    if R == 1:
        out = est[:, 0] - np.floor(est[:, 0])
        out[out >= 1.0] = 0.0
        return out
    G = max(4 * T * R, 1024)
    tab = _snap_table(T, G)
    idx = np.rint(est * G).astype(np.int64) % G
    k = np.arange(G)
    ll = np.zeros((n, G))
    for j in range(R):
        ll += tab[(idx[:, j : j + 1] - k[None, :]) % G]

    def exact_at(cands: np.ndarray) -> np.ndarray:
        return log_kernel(T, est[:, None, :] - cands[:, :, None] / G).sum(axis=2)

    best = _shortlist_argmax(ll, exact_at)
    lo = (best - 1.0) / G
    hi = (best + 1.0) / G

    def f(c: np.ndarray) -> np.ndarray:
        return log_kernel(T, est - c[:, None]).sum(axis=1)

    seed_x = best / G
    x, fx, _ = _golden_batch(f, lo, hi, seed_x, f(seed_x))
    x = _newton_polish_batch(T, est, x, fx, lo, hi, f)
    x -= np.floor(x)
    x[x >= 1.0] = 0.0
    return x


def _newton_polish_batch(
    T: int, est: np.ndarray, x: np.ndarray, fx: np.ndarray, lo, hi, f
) -> np.ndarray:
    """Vectorized counterpart of _newton_polish (3 fixed steps, guarded)."""
    d = est - x[:, None]
    d -= np.round(d)
    cur = x.copy()
    for _ in range(3):
        d = est - cur[:, None]
        d -= np.round(d)
        small = np.abs(d) < (0.02 / T)
        t2 = float(T * T)
        with np.errstate(divide="ignore", invalid="ignore"):
            g_big = 2.0 * np.pi * (T / np.tan(np.pi * T * d) - 1.0 / np.tan(np.pi * d))
            gp_big = 2.0 * np.pi**2 * (
                t2 / np.sin(np.pi * T * d) ** 2 - 1.0 / np.sin(np.pi * d) ** 2
            )
        g_small = -2.0 * np.pi**2 * d * (t2 - 1.0) / 3.0 * (
            1.0 + (np.pi * d) ** 2 * (t2 * t2 - 1.0) / (15.0 * (t2 - 1.0))
        )
        gp_small = -2.0 * np.pi**2 * (t2 - 1.0) / 3.0 * (
            1.0 + 3.0 * (np.pi * d) ** 2 * (t2 * t2 - 1.0) / (15.0 * (t2 - 1.0))
        )
        g = np.where(small, g_small, g_big)
        gp = np.where(small, gp_small, gp_big)
        d1 = -g.sum(axis=1)
        d2 = gp.sum(axis=1)
        ok = np.isfinite(d1) & np.isfinite(d2) & (d2 < 0.0)
        step = np.where(ok, d1 / np.where(d2 != 0.0, d2, 1.0), 0.0)
        nxt = cur - step
        ok &= (nxt >= lo - 1e-9) & (nxt <= hi + 1e-9)
        cur = np.where(ok, nxt, cur)
    f_cur = f(cur)
    accept = f_cur >= fx
    return np.where(accept, cur, x)


def mle_counting_batch(params: PeaParams, estimates: np.ndarray) -> np.ndarray:
    """Counting-variant MLE for many trials; estimates (n, R) -> phi_hat (n,)
    in [0, 1/2].  Same maximizer as mle_estimate_counting."""
    est = np.asarray(estimates, dtype=float)
    n, R = est.shape
    T = params.T
    if R == 1:
        w = est[:, 0] - np.floor(est[:, 0])
        w[w >= 1.0] = 0.0
        return np.minimum(w, 1.0 - w)
    G = max(4 * T * R, 1024)
    # kernel-value table (not log): the mixture sums kernels before the log
    k = np.arange(G)
    ktab = _snap_ktable(T, G)
    idx = np.rint(est * G).astype(np.int64) % G
    ncand = G // 2 + 1
    kk = k[:ncand]
    ll = np.zeros((n, ncand))
    with np.errstate(divide="ignore"):
        for j in range(R):
            mix = 0.5 * (
                ktab[(idx[:, j : j + 1] - kk[None, :]) % G]
                + ktab[(idx[:, j : j + 1] + kk[None, :]) % G]
            )
            ll += np.where(mix > 0.0, np.log(np.where(mix > 0.0, mix, 1.0)), LOG_ZERO)

    def exact_at(cands: np.ndarray) -> np.ndarray:
        c = cands[:, :, None] / G
        mix = 0.5 * (pea_kernel(T, est[:, None, :] - c) + pea_kernel(T, est[:, None, :] + c))
        terms = np.where(mix > 0.0, np.log(np.where(mix > 0.0, mix, 1.0)), LOG_ZERO)
        return terms.sum(axis=2)

    best = _shortlist_argmax(ll, exact_at)
    lo = np.maximum((best - 1.0) / G, 0.0)
    hi = np.minimum((best + 1.0) / G, 0.5)

    def f(c: np.ndarray) -> np.ndarray:
        a = pea_kernel(T, est - c[:, None])
        b = pea_kernel(T, est + c[:, None])
        mix = 0.5 * (a + b)
        out = np.where(mix > 0.0, np.log(np.where(mix > 0.0, mix, 1.0)), LOG_ZERO)
        return out.sum(axis=1)

    seed_x = best / G
    x, _, _ = _golden_batch(f, lo, hi, seed_x, f(seed_x))
    return np.clip(x, 0.0, 0.5)
