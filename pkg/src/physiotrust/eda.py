"""Skin-conductance decomposition into tonic and phasic parts.

The processing chain is: mean-pool to a low rate, Gaussian smoothing,
percentile-anchored tonic baseline, then non-negative deconvolution of the
remainder against a Bateman impulse response.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.ndimage import gaussian_filter1d
from scipy.optimize import nnls

from .errors import ConvergenceFailure, InvalidTau

NNLS_MAX_ITER = 10_000
TONIC_PERCENTILE = 0.10


@dataclass(frozen=True, eq=False)
class BatemanKernel:
    tau_rise: float
    tau_decay: float
    rate: float
    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    @property
    def peak_time(self):
        """Continuous argmax of exp(-t/tau_decay) - exp(-t/tau_rise)."""
        r, d = self.tau_rise, self.tau_decay
        return np.log(d / r) * r * d / (d - r)


@dataclass(frozen=True, eq=False)
class EdaDecomposition:
    t: np.ndarray
    smoothed: np.ndarray
    tonic: np.ndarray
    phasic: np.ndarray
    driver: np.ndarray
    residual_rmse: float

    @property
    def residual(self):
        return self.smoothed - self.tonic - self.phasic


def bateman_kernel(tau_rise=0.75, tau_decay=2.0, rate=16.0):
    if not (0 < tau_rise < tau_decay):
        raise InvalidTau(f"need 0 < tau_rise < tau_decay, got {tau_rise}, {tau_decay}")
    if not rate > 0:
        raise ValueError("rate must be positive")
    n = int(np.ceil(5.0 * tau_decay * rate)) + 1
    t = np.arange(n) / rate
    b = np.exp(-t / tau_decay) - np.exp(-t / tau_rise)
    b[0] = 0.0
    b /= b.max()
    b.setflags(write=False)
    return BatemanKernel(float(tau_rise), float(tau_decay), float(rate), b)


def downsample_mean(t, x, target_hz):
    """Mean-pool samples into 1/target_hz bins on a regular grid starting at t=0.

    Empty bins (gaps) are filled by linear interpolation between neighbours.
    """
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    bins = np.floor(t * target_hz + 1e-9).astype(np.int64)
    first, last = bins[0], bins[-1]
    n = last - first + 1
    sums = np.bincount(bins - first, weights=x, minlength=n)
    counts = np.bincount(bins - first, minlength=n)
    grid_t = (np.arange(n) + first) / target_hz
    filled = counts > 0
    out = np.empty(n)
    out[filled] = sums[filled] / counts[filled]
    if not filled.all():
        out[~filled] = np.interp(grid_t[~filled], grid_t[filled], out[filled])
    return grid_t, out


def estimate_tonic(sc, rate, grid_spacing=10.0):
    """Piecewise-linear baseline through low-percentile anchors.

    Grid points sit every ``grid_spacing`` seconds.  Around each one, the sample
    holding the 10th-percentile order statistic of a window two grid steps wide
    becomes an anchor at its own time, so anchors always lie on the signal.
    The baseline interpolates the anchors, extends the outermost segments
    linearly, and is capped at the signal itself.
    """
    sc = np.asarray(sc, dtype=np.float64)
    if sc.size == 0:
        raise ValueError("empty series")
    step = max(1, int(round(grid_spacing * rate)))
    anchors = set()
    for centre in range(0, sc.size + step, step):
        lo = max(0, centre - step)
        hi = min(sc.size, centre + step)
        if lo >= hi:
            continue
        seg = sc[lo:hi]
        order = np.argsort(seg, kind="stable")
        k = int(np.floor(TONIC_PERCENTILE * (seg.size - 1)))
        anchors.add(lo + int(order[k]))
    anchor_idx = np.array(sorted(anchors))
    anchor_val = sc[anchor_idx]
    idx = np.arange(sc.size, dtype=np.float64)
    if anchor_idx.size == 1:
        return np.minimum(np.full(sc.size, anchor_val[0]), sc)
    tonic = np.interp(idx, anchor_idx.astype(np.float64), anchor_val)
    head = idx < anchor_idx[0]
    tail = idx > anchor_idx[-1]
    s0 = (anchor_val[1] - anchor_val[0]) / (anchor_idx[1] - anchor_idx[0])
    s1 = (anchor_val[-1] - anchor_val[-2]) / (anchor_idx[-1] - anchor_idx[-2])
    tonic[head] = anchor_val[0] + s0 * (idx[head] - anchor_idx[0])
    tonic[tail] = anchor_val[-1] + s1 * (idx[tail] - anchor_idx[-1])
    return np.minimum(tonic, sc)


def _convolve(driver, kernel_values, dt):
    return np.convolve(driver, kernel_values)[: driver.size] * dt


def deconvolve_driver(phasic_raw, kernel, block=256, max_iter=NNLS_MAX_ITER):
    """Non-negative driver d minimising ||phasic_raw - B d||, B the causal kernel convolution.

    Solved block by block: each block's unknowns are fitted together with a
    look-ahead of one kernel length (so that later impulses are not forced onto
    the block's tail), then only the block itself is frozen and its
    contribution subtracted from the remaining target.
    """
    y = np.asarray(phasic_raw, dtype=np.float64)
    b = kernel.values
    L = b.size
    if y.size < L:
        raise ValueError(f"series length {y.size} shorter than kernel length {L}")
    dt = 1.0 / kernel.rate
    n = y.size
    driver = np.zeros(n)
    fitted = np.zeros(n + L)
    col = np.zeros(block + L)
    col[:L] = b * dt
    full = toeplitz(col, np.zeros(block + L))
    for a in range(0, n, block):
        w = min(block + L, n - a)
        M = full[:w, :w]
        target = y[a:a + w] - fitted[a:a + w]
        if np.any(target):
            try:
                sol, _ = nnls(M, target, maxiter=max_iter)
            except RuntimeError as exc:
                raise ConvergenceFailure(f"NNLS block at sample {a}: {exc}")
            keep = np.maximum(sol[: min(block, n - a)], 0.0)
        else:
            keep = np.zeros(min(block, n - a))
        driver[a:a + keep.size] = keep
        if keep.any():
            contrib = np.convolve(keep, b)[: keep.size + L - 1] * dt
            fitted[a:a + contrib.size] += contrib
    phasic = _convolve(driver, b, dt)
    rmse = float(np.sqrt(np.mean((y - phasic) ** 2)))
    t = np.arange(n) / kernel.rate
    return EdaDecomposition(t, y, np.zeros(n), phasic, driver, rmse)


def decompose_eda(t, sc, tau_rise=0.75, tau_decay=2.0, downsample_hz=16.0,
                  tonic_grid_s=10.0, smooth_sigma_s=0.2):
    """Full chain from raw timestamps and conductance (µS) to a decomposition."""
    grid_t, x = downsample_mean(t, sc, downsample_hz)
    if smooth_sigma_s > 0:
        x = gaussian_filter1d(x, smooth_sigma_s * downsample_hz, mode="nearest")
    kernel = bateman_kernel(tau_rise, tau_decay, downsample_hz)
    tonic = estimate_tonic(x, downsample_hz, tonic_grid_s)
    raw = x - tonic
    if raw.size < len(kernel):
        raw = np.concatenate([raw, np.zeros(len(kernel) - raw.size)])
    dec = deconvolve_driver(raw, kernel)
    n = x.size
    phasic = dec.phasic[:n]
    resid = x - tonic - phasic
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    return EdaDecomposition(grid_t, x, tonic, phasic, dec.driver[:n], rmse)


def decompose_session(session, cfg=None):
    cfg = cfg or {}
    gsr = session["gsr"]
    return decompose_eda(
        gsr.t, gsr.value,
        tau_rise=cfg.get("tau_rise", 0.75),
        tau_decay=cfg.get("tau_decay", 2.0),
        downsample_hz=cfg.get("downsample_hz", 16.0),
        tonic_grid_s=cfg.get("tonic_grid_s", 10.0),
        smooth_sigma_s=cfg.get("smooth_sigma_s", 0.2),
    )


def gsr_features(window, decomposition, min_coverage=0.8):
    """Mean and max of the phasic reconstruction inside the window."""
    if window.coverage.get("gsr", 0.0) < min_coverage:
        return {"gsr_phasic_mean": np.nan, "gsr_phasic_max": np.nan}
    t = decomposition.t
    i0 = np.searchsorted(t, window.start, side="left")
    i1 = np.searchsorted(t, window.label_time, side="left")
    seg = decomposition.phasic[i0:i1]
    if seg.size == 0:
        return {"gsr_phasic_mean": np.nan, "gsr_phasic_max": np.nan}
    return {"gsr_phasic_mean": float(np.mean(seg)), "gsr_phasic_max": float(np.max(seg))}
