"""Run-comparison metrics: normalized RMSE, peak error, and lag estimation."""

from dataclasses import dataclass

import numpy as np


def align(reference, test):
    """Truncate two signals to their common length."""
    reference = np.asarray(reference, dtype=float)
    test = np.asarray(test, dtype=float)
    n = min(len(reference), len(test))
    return reference[:n], test[:n]


def nrmse(reference, test):
    """Root-mean-square error as a percentage of the reference peak.

        nrmse = 100 * sqrt(mean((test - reference)^2)) / max|reference|

    Peak normalization keeps the number meaningful for near-zero-mean
    seismic response histories. Lengths must match; all-zero references are
    only comparable against an all-zero test.
    """
    reference = np.asarray(reference, dtype=float)
    test = np.asarray(test, dtype=float)
    if reference.shape != test.shape:
        raise ValueError(
            f"length mismatch: reference {reference.shape} vs test {test.shape}; "
            "use align() first"
        )
    if len(reference) == 0:
        raise ValueError("empty signals")
    peak = np.max(np.abs(reference))
    rms = np.sqrt(np.mean((test - reference) ** 2))
    if peak == 0.0:
        if rms == 0.0:
            return 0.0
        raise ValueError("reference signal is identically zero; nRMSE undefined")
    return 100.0 * float(rms / peak)


def peak_error_percent(reference, test):
    """Percent difference of absolute peaks."""
    reference, test = np.asarray(reference, float), np.asarray(test, float)
    ref_peak = np.max(np.abs(reference))
    if ref_peak == 0.0:
        raise ValueError("reference signal is identically zero; peak error undefined")
    return 100.0 * float(abs(np.max(np.abs(test)) - ref_peak) / ref_peak)


def max_abs_error(reference, test):
    reference, test = align(reference, test)
    return float(np.max(np.abs(test - reference)))


def lag_estimate(reference, test, window=2048):
    """Integer lag (in ticks) maximizing the cross-correlation, |lag| <= window.

    Positive lag means the test signal trails the reference: test[i] tracks
    reference[i - lag]. Signals are de-meaned first; ties resolve to the
    smallest |lag| (then to the positive one) for determinism.
    """
    from scipy.signal import correlate

    reference, test = align(reference, test)
    r = reference - np.mean(reference)
    s = test - np.mean(test)
    if not np.any(r) or not np.any(s):
        raise ValueError("lag estimate undefined for constant signals")
    n = len(r)
    window = int(min(window, n - 1))
    xc = correlate(s, r, mode="full")          # index k -> lag k - (n - 1)
    lags = np.arange(-(n - 1), n)
    keep = np.abs(lags) <= window
    xc, lags = xc[keep], lags[keep]
    best = np.max(xc)
    candidates = lags[xc >= best * (1.0 - 1e-12)]
    order = np.lexsort((-np.sign(candidates), np.abs(candidates)))
    return int(candidates[order[0]])


@dataclass
class Metrics:
    nrmse_percent: float
    peak_error_percent: float
    max_abs_error_mm: float
    lag_ticks: int
    lag_s: float
    reference_id: str = ""
    test_id: str = ""

    def to_json_dict(self):
        return {
            "nrmse_percent": self.nrmse_percent,
            "peak_error_percent": self.peak_error_percent,
            "max_abs_error_mm": self.max_abs_error_mm,
            "lag_ticks": self.lag_ticks,
            "lag_s": self.lag_s,
            "reference_id": self.reference_id,
            "test_id": self.test_id,
        }


def compute_metrics(reference, test, dt, window=2048, reference_id="", test_id=""):
    """Bundle of all comparison metrics for two displacement histories."""
    reference, test = align(reference, test)
    lag = lag_estimate(reference, test, window=window)
    return Metrics(
        nrmse_percent=nrmse(reference, test),
        peak_error_percent=peak_error_percent(reference, test),
        max_abs_error_mm=max_abs_error(reference, test),
        lag_ticks=lag,
        lag_s=lag * dt,
        reference_id=reference_id,
        test_id=test_id,
    )
