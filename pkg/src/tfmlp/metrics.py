"""Separation quality metrics: SI-SDR and permutation-invariant scoring."""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DomainError

# denominator floor; caps exact matches near 120 dB instead of infinity
EPS = 1e-12


def _validate_pair(reference, estimate):
    r = np.asarray(reference, dtype=np.float64).ravel()
    e = np.asarray(estimate, dtype=np.float64).ravel()
    if r.shape != e.shape:
        raise DomainError(f"length mismatch: reference {r.shape[0]} vs estimate {e.shape[0]}")
    if r.size == 0:
        raise DomainError("empty signals")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(e))):
        raise DomainError("non-finite samples")
    return r, e


def si_sdr(reference, estimate) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    The target is the least-squares projection of the estimate onto the
    reference, so rescaling the estimate does not change the score.
    """
    r, e = _validate_pair(reference, estimate)
    denom = float(r @ r)
    if denom < EPS:
        raise DomainError("all-zero reference")
    alpha = float(e @ r) / denom
    target = alpha * r
    noise = e - target
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10((target @ target) / (noise @ noise + EPS)))


def si_sdr_improvement(reference, estimate, mixture) -> float:
    """SI-SDR gained by the estimate over the unprocessed mixture."""
    return si_sdr(reference, estimate) - si_sdr(reference, mixture)


def pit_score(references, estimates):
    """Permutation-invariant SI-SDR over stacked (S, N) signals.

    Exhausts every one-to-one assignment of estimates to references and
    keeps the best. Returns (permutation, mean dB) where permutation[i]
    is the estimate index paired with references[i].
    """
    ref = np.asarray(references, dtype=np.float64)
    est = np.asarray(estimates, dtype=np.float64)
    if ref.ndim != 2 or est.ndim != 2 or ref.shape != est.shape:
        raise DomainError(f"expected matching (S, N) stacks, got {ref.shape} and {est.shape}")
    s = ref.shape[0]
    if s > 6:
        raise DomainError("exhaustive matching is limited to S <= 6 streams")
    pair = np.empty((s, s))
    for i in range(s):
        for j in range(s):
            pair[i, j] = si_sdr(ref[i], est[j])
    best, best_perm = -np.inf, None
    for perm in itertools.permutations(range(s)):
        score = float(np.mean([pair[i, perm[i]] for i in range(s)]))
        if score > best:
            best, best_perm = score, perm
    return best_perm, best
