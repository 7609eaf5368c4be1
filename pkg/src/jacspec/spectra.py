"""Truncation spectra, closed-form reference spectra, Schatten diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .jacobi import BlockJacobiMatrix, DENSE_CAP
from .sequences import ProbeConfig, ScalarSequence, SeriesVerdict, log_term_stream, series_probe


@dataclass(frozen=True)
class SpectrumSlice:
    """Eigenvalues of one dense truncation plus drift against the half-size cut.

    ritz_stability[i] is the relative drift of the i-th ascending eigenvalue
    between the N//2 and N truncations (NaN where no partner exists); the
    bottom of the spectrum is the meaningful region for semibounded families.
    """

    N: int
    p: int
    eigenvalues: np.ndarray
    ritz_stability: np.ndarray


def truncation_spectrum(J: BlockJacobiMatrix, N: int, cap: int = DENSE_CAP) -> SpectrumSlice:
    """Full Hermitian eigensolve of the leading N-block truncation."""
    dense = J.truncate_dense(N, cap=cap)
    eigs = np.linalg.eigvalsh(dense.H)
    drift = np.full(len(eigs), np.nan)
    half = N // 2
    if half >= 1:
        prev = np.linalg.eigvalsh(J.truncate_dense(half, cap=cap).H)
        k = len(prev)
        drift[:k] = np.abs(eigs[:k] - prev) / (1.0 + np.abs(eigs[:k]))
    return SpectrumSlice(N=N, p=J.p, eigenvalues=eigs, ritz_stability=drift)


def write_csv(slice_: SpectrumSlice, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "index", "eigenvalue", "drift"])
        for i, (ev, dr) in enumerate(zip(slice_.eigenvalues, slice_.ritz_stability)):
            writer.writerow([slice_.N, i, repr(float(ev)), "" if math.isnan(dr) else repr(float(dr))])


def free_schrodinger_spectrum(d: ScalarSequence, n_terms: int, k_max: int, p: int = 1) -> np.ndarray:
    """Sorted eigenvalues pi^2 (2k+1)^2 / (4 d_n^2), each with multiplicity p."""
    ns = np.arange(1, n_terms + 1, dtype=np.float64)
    dn = np.exp(d.eval_log_many(ns))
    ks = np.arange(0, k_max + 1, dtype=np.float64)
    vals = (math.pi ** 2) * (2.0 * ks[None, :] + 1.0) ** 2 / (4.0 * dn[:, None] ** 2)
    return np.sort(np.repeat(vals.ravel(), p))


def free_dirac_spectrum(d: ScalarSequence, c: float, n_terms: int, k_max: int, p: int = 1) -> np.ndarray:
    """Sorted values +-sqrt(c^2 pi^2 (2k+1)^2/(4 d_n^2) + c^4/4), multiplicity p."""
    ns = np.arange(1, n_terms + 1, dtype=np.float64)
    dn = np.exp(d.eval_log_many(ns))
    ks = np.arange(0, k_max + 1, dtype=np.float64)
    mags = np.sqrt(
        (c * math.pi) ** 2 * (2.0 * ks[None, :] + 1.0) ** 2 / (4.0 * dn[:, None] ** 2)
        + (c ** 2 / 2.0) ** 2
    ).ravel()
    return np.sort(np.repeat(np.concatenate([-mags, mags]), p))


def schatten_partial(values, q: float, config: ProbeConfig | None = None) -> tuple[float, SeriesVerdict]:
    """Partial sum of v**(-q) over a stream of positive values.

    q = inf is the compactness proxy: returns sup of 1/v with a verdict that
    only reports convergence when the trailing inverse values decay.
    """
    vals = np.asarray(list(values), dtype=np.float64)
    if np.any(vals <= 0):
        raise ValueError("Schatten diagnostics need positive values")
    if math.isinf(q):
        inv = 1.0 / vals
        sup = float(np.max(inv)) if len(inv) else 0.0
        tail = inv[-max(8, len(inv) // 4):]
        head = inv[: max(8, len(inv) // 4)]
        state = "ConvergedNumerically" if len(inv) >= 16 and float(np.max(tail)) < 0.5 * float(np.max(head)) else "Inconclusive"
        return sup, SeriesVerdict(state, sup, len(inv), math.nan)
    verdict = series_probe(-q * np.log(vals), config)
    return verdict.partial_sum, verdict


def _odd_reciprocal_power_sum(s: float) -> float:
    """sum over k >= 0 of (2k+1)^(-s) for s > 1."""
    if s == 2.0:
        return math.pi ** 2 / 8.0
    if s == 4.0:
        return math.pi ** 4 / 96.0
    ks = np.arange(1, 2_000_000, 2, dtype=np.float64)
    tail = (2.0 ** -s) * (1_000_000.0 ** (1.0 - s)) / (s - 1.0)
    return float(np.sum(ks ** -s)) + tail


def schrodinger_schatten(d: ScalarSequence, q: float, n_terms: int, config: ProbeConfig | None = None) -> tuple[float, SeriesVerdict]:
    """Schatten-q partial sum for the decoupled second-difference spectrum.

    The k-ladder at fixed n sums in closed form, leaving the interval series
    sum_n (4 d_n^2 / pi^2)**q times the odd-reciprocal constant; q > 1/2.
    """
    if q <= 0.5:
        raise ValueError("need q > 1/2")
    const = _odd_reciprocal_power_sum(2.0 * q)
    log_const = math.log(const) + q * math.log(4.0 / math.pi ** 2)

    def terms(ns):
        return log_const + 2.0 * q * d.eval_log_many(ns)

    verdict = series_probe(log_term_stream(terms, 1, n_terms), config)
    return verdict.partial_sum, verdict


def dirac_schatten(d: ScalarSequence, c: float, q: float, n_terms: int, config: ProbeConfig | None = None) -> tuple[float, SeriesVerdict]:
    """Schatten-q diagnostic for the decoupled first-order spectrum; q > 1.

    Bounds the k-ladder by its dominant momentum term, reducing to
    sum_n (2 d_n / (c pi))**q times the odd-reciprocal constant (both signs).
    """
    if q <= 1.0:
        raise ValueError("need q > 1")
    const = 2.0 * _odd_reciprocal_power_sum(q)
    log_const = math.log(const) + q * math.log(2.0 / (c * math.pi))

    def terms(ns):
        return log_const + q * d.eval_log_many(ns)

    verdict = series_probe(log_term_stream(terms, 1, n_terms), config)
    return verdict.partial_sum, verdict
