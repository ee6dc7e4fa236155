"""Spectral diagnostics of expert ensembles.

PCA explained variance of stacked expert deltas, principal angles between
expert subspaces, and singular-value tail statistics binned into log bands
[e^-(k+1), e^-k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tensorio import LowRankDelta, as_matrix

# Singular values below this are exact zeros for rank counting.
_ZERO_SV = 1e-30

N_LOG_BANDS = 13  # k = 0..12, plus overflow [1, inf) and underflow (0, e^-13)


@dataclass(frozen=True)
class SpectrumReport:
    """Singular values with explained-variance fractions and log-band counts.

    counts_per_log_band has N_LOG_BANDS + 2 entries: index 0 is the overflow
    band [e^0, inf), index 1 + k is [e^-(k+1), e^-k) for k = 0..12, and the
    last index collects everything below e^-13 (zeros included).
    """

    singular_values: np.ndarray
    explained_fractions: np.ndarray
    counts_per_log_band: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        sv = np.asarray(self.singular_values, dtype=np.float64)
        fr = np.asarray(self.explained_fractions, dtype=np.float64)
        object.__setattr__(self, "singular_values", sv)
        object.__setattr__(self, "explained_fractions", fr)
        object.__setattr__(
            self, "counts_per_log_band", np.asarray(self.counts_per_log_band, dtype=np.int64)
        )
        if np.any(np.diff(sv) > 0):
            raise ConfigError("singular values must be descending")
        if not self.degenerate and abs(fr.sum() - 1.0) > 1e-10:
            raise ConfigError(f"explained fractions sum to {fr.sum()}, expected 1")

    @property
    def band_fractions(self) -> np.ndarray:
        total = self.counts_per_log_band.sum()
        if total == 0:
            return np.zeros_like(self.counts_per_log_band, dtype=np.float64)
        return self.counts_per_log_band / total

    @property
    def rank(self) -> int:
        return int(np.sum(self.singular_values > _ZERO_SV))


def band_counts(singular_values: np.ndarray) -> np.ndarray:
    """Histogram of singular values over the log bands described above.

    Half-open convention: a value exactly equal to e^-k lands in band k-1,
    i.e. in [e^-k, e^-(k-1)).
    """
    sv = np.asarray(singular_values, dtype=np.float64)
    counts = np.zeros(N_LOG_BANDS + 2, dtype=np.int64)
    for s in sv:
        if s >= 1.0:
            counts[0] += 1
        elif s < math.exp(-N_LOG_BANDS):
            counts[-1] += 1
        else:
            # s in [e^-(k+1), e^-k); an exact edge value e^-k belongs to band k-1.
            k = int(math.floor(-math.log(s)))
            if s >= math.exp(-k):
                k -= 1
            k = min(max(k, 0), N_LOG_BANDS - 1)
            counts[1 + k] += 1
    return counts


def spectrum_report(singular_values: np.ndarray) -> SpectrumReport:
    sv = np.sort(np.asarray(singular_values, dtype=np.float64))[::-1]
    power = sv * sv
    total = power.sum()
    if total <= 0:
        return SpectrumReport(sv, np.zeros_like(sv), band_counts(sv), degenerate=True)
    return SpectrumReport(sv, power / total, band_counts(sv))


def pca_explained(stacked_deltas: np.ndarray, center: bool = True) -> SpectrumReport:
    """Explained-variance spectrum of stacked experts (rows) by SVD.

    Rows are experts, columns flattened parameters. By default the mean
    expert is subtracted first; pass center=False to skip.
    """
    m = as_matrix(stacked_deltas)
    if center:
        m = m - m.mean(axis=0, keepdims=True)
    sv = np.linalg.svd(m, compute_uv=False)
    sv = np.where(sv > _ZERO_SV, sv, 0.0)
    return spectrum_report(sv)


def components_for_threshold(report: SpectrumReport, frac: float) -> int:
    """Smallest component count whose cumulative explained fraction >= frac."""
    if not 0 < frac <= 1:
        raise ConfigError(f"frac must be in (0, 1], got {frac}")
    if report.degenerate:
        raise ConfigError("degenerate (all-zero) spectrum has no components")
    cum = np.cumsum(report.explained_fractions)
    # Tolerate float round-off at frac = 1.
    hits = np.nonzero(cum >= frac - 1e-12)[0]
    return int(hits[0]) + 1


def principal_angles(basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    """Principal angles between column spans, ascending, in degrees."""
    a = as_matrix(basis_a)
    b = as_matrix(basis_b)
    if a.shape[1] == 0 or b.shape[1] == 0:
        raise ConfigError("empty basis")
    if a.shape[0] != b.shape[0]:
        raise ConfigError(f"ambient dims disagree: {a.shape[0]} vs {b.shape[0]}")
    for m in (a, b):
        if np.max(np.abs(m.T @ m - np.eye(m.shape[1]))) > 1e-8:
            raise ConfigError("basis columns are not orthonormal")
    # Re-orthonormalize to kill drift below the rejection threshold.
    a, _ = np.linalg.qr(a)
    b, _ = np.linalg.qr(b)
    cosines = np.clip(np.linalg.svd(a.T @ b, compute_uv=False), -1.0, 1.0)
    return np.degrees(np.sort(np.arccos(cosines)))


def sv_tail_stats(delta) -> SpectrumReport:
    """Log-band singular-value statistics of a delta matrix.

    Accepts a LowRankDelta (SVD of the materialized product, rank-bounded)
    or any dense matrix.
    """
    if isinstance(delta, LowRankDelta):
        m = delta.dense()
    else:
        m = as_matrix(delta)
    sv = np.linalg.svd(m, compute_uv=False)
    if np.all(sv <= _ZERO_SV):
        raise ConfigError("degenerate (all-zero) matrix")
    return spectrum_report(sv)
