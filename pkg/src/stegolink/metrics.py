"""Recovery quality metrics: MSE, PSNR, and a global-window SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 100.0

_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("grids must share one shape")
    if a.size == 0:
        raise ValueError("grids must be non-empty")
    return a, b


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    """10*log10(peak^2 / mse), capped at 100 dB (the cap is the mse=0 value)."""
    if peak <= 0.0:
        raise ValueError("peak must be positive")
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, 10.0 * np.log10(peak * peak / err)))


def _ssim_terms(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    mu_a = a.mean()
    mu_b = b.mean()
    da = a - mu_a
    db = b - mu_b
    var_a = np.mean(da * da)
    var_b = np.mean(db * db)
    cov = np.mean(da * db)
    c1 = (_SSIM_K1 * peak) ** 2
    c2 = (_SSIM_K2 * peak) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    # exact arithmetic keeps the score in [-1, 1]; rounding can spill over
    return float(min(1.0, max(-1.0, num / den)))


def ssim(a: np.ndarray, b: np.ndarray, peak: float, window: int | None = None) -> float:
    """Structural similarity over one global window, or box windows if set.

    The windowed mode slides a square window over the last two axes (valid
    positions only) and averages the per-window scores; useful on larger
    grids where a single global window washes out structure.
    """
    if peak <= 0.0:
        raise ValueError("peak must be positive")
    a, b = _pair(a, b)
    if window is None:
        return _ssim_terms(a.ravel(), b.ravel(), peak)
    if a.ndim < 2:
        raise ValueError("windowed ssim needs at least two axes")
    h, w = a.shape[-2], a.shape[-1]
    if not 1 <= window <= min(h, w):
        raise ValueError("window must fit inside the grid")
    lead = a.reshape(-1, h, w)
    other = b.reshape(-1, h, w)
    scores = []
    for plane_a, plane_b in zip(lead, other):
        for i in range(h - window + 1):
            for j in range(w - window + 1):
                scores.append(_ssim_terms(plane_a[i:i + window, j:j + window].ravel(),
                                          plane_b[i:i + window, j:j + window].ravel(), peak))
    return float(np.mean(scores))


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    psnr_db: float
    ssim: float

    def to_dict(self) -> dict:
        return {"mse": self.mse, "psnr_db": self.psnr_db, "ssim": self.ssim}

    @staticmethod
    def from_dict(d: dict) -> "MetricsReport":
        return MetricsReport(mse=float(d["mse"]), psnr_db=float(d["psnr_db"]), ssim=float(d["ssim"]))


def compare(recovered: np.ndarray, target: np.ndarray, peak: float) -> MetricsReport:
    """Bundle all three metrics of a recovery against its target."""
    return MetricsReport(mse=mse(recovered, target),
                         psnr_db=psnr(recovered, target, peak),
                         ssim=ssim(recovered, target, peak))
