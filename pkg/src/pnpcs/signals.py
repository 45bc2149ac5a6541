"""Deterministic synthetic test signals.

Both generators are pure functions of the length: campaigns that need a guide
signal or a ground truth call these instead of shipping data files.
"""

from __future__ import annotations

import numpy as np

__all__ = ["scanline", "synthetic_ecg", "load_signal_csv", "save_signal_csv"]


def scanline(n: int) -> np.ndarray:
    """Piecewise-smooth profile in [0, 1], shaped like an image scan line.

    Smooth oscillation, two intensity plateaus and a narrow highlight, so the
    non-local-means kernel sees both repetitive texture and edges.
    """
    t = np.linspace(0.0, 1.0, n)
    out = 0.42 + 0.2 * np.sin(2 * np.pi * 3.1 * t) * np.exp(-1.2 * t)
    out += 0.22 * ((t > 0.33) & (t < 0.58))
    out -= 0.18 * (t > 0.82)
    out += 0.16 * np.exp(-0.5 * ((t - 0.72) / 0.03) ** 2)
    return np.clip(out, 0.02, 0.98)


def synthetic_ecg(n: int, period: int = 260) -> np.ndarray:
    """Piecewise-smooth spike-train stand-in for an ECG trace.

    A couple of narrow P-R-S-T beats on a faint slow wander; narrow waves keep
    the trace compressible enough for greedy sparse surrogates to work with a
    small coefficient budget.
    """
    i = np.arange(n, dtype=float)
    out = 0.01 * np.sin(2 * np.pi * i / 301.0)
    for center in range(period // 2, n + period, period):
        out += 1.00 * np.exp(-0.5 * ((i - center) / 1.4) ** 2)
        out -= 0.20 * np.exp(-0.5 * ((i - center - 7) / 1.3) ** 2)
        out += 0.30 * np.exp(-0.5 * ((i - center - 24) / 1.9) ** 2)
        out += 0.15 * np.exp(-0.5 * ((i - center + 20) / 1.6) ** 2)
    return out


def load_signal_csv(path) -> np.ndarray:
    """Read a one-sample-per-line CSV signal."""
    values = np.loadtxt(path, dtype=float, ndmin=1)
    if values.ndim != 1:
        raise ValueError("signal CSV must hold one sample per line")
    if not np.all(np.isfinite(values)):
        raise ValueError("signal CSV contains non-finite values")
    return values


def save_signal_csv(path, signal: np.ndarray) -> None:
    np.savetxt(path, np.asarray(signal, dtype=float), fmt="%.12g")
