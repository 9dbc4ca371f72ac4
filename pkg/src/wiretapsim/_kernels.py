"""Hot loops of the key-posterior computation.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version.  ``WIRETAPSIM_NO_NUMBA=1`` (or numba missing)
selects the numpy path; both are importable directly for testing and
benchmarks.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("WIRETAPSIM_NO_NUMBA", "") not in ("1", "true", "yes")

# probabilities below this are treated as zero inside logarithms
PROB_FLOOR = 1e-300


def _optional_njit(func):
    if HAVE_NUMBA:
        return njit(cache=True, nogil=True)(func)
    return func


@_optional_njit
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@_optional_njit
def round_logliks_loop(z, stream, base, ucode, pw, flag_tab, a, f_obs, use_flag, genie):
    n_keys, tau = stream.shape
    n_u = ucode.shape[0]
    out = np.empty((n_keys, tau))
    for k in range(n_keys):
        for t in range(tau):
            dec = z[t] ^ stream[k, t]
            if use_flag:
                rec = flag_tab[dec]
                if genie:
                    f = rec == a[t]
                else:
                    f = rec >= 0
                if f != f_obs[t]:
                    out[k, t] = -np.inf
                    continue
            w = dec ^ base[t]
            s = 0.0
            for j in range(n_u):
                s += pw[_popcount(w ^ ucode[j])]
            s /= n_u
            if s < 1e-300:
                out[k, t] = -np.inf
            else:
                out[k, t] = math.log2(s)
    return out


def round_logliks_numpy(z, stream, base, ucode, pw, flag_tab, a, f_obs, use_flag, genie):
    dec = z[None, :] ^ stream
    w = dec ^ base[None, :]
    wt = np.bitwise_count(w[:, :, None] ^ ucode[None, None, :])
    s = pw[wt].mean(axis=2)
    with np.errstate(divide="ignore"):
        out = np.where(s < PROB_FLOOR, -np.inf, np.log2(np.maximum(s, PROB_FLOOR)))
    if use_flag:
        rec = flag_tab[dec]
        f = (rec == a[None, :]) if genie else (rec >= 0)
        out = np.where(f == f_obs[None, :].astype(bool), out, -np.inf)
    return out


@_optional_njit
def prefix_entropies_loop(ll):
    """Entropy (bits) of the normalised posterior after each round prefix.

    ``nan`` marks a prefix where every key has zero likelihood.
    """
    n_keys, tau = ll.shape
    acc = np.zeros(n_keys)
    out = np.empty(tau)
    for t in range(tau):
        mx = -np.inf
        for k in range(n_keys):
            acc[k] += ll[k, t]
            if acc[k] > mx:
                mx = acc[k]
        if mx == -np.inf:
            out[t] = np.nan
            continue
        total = 0.0
        for k in range(n_keys):
            total += 2.0 ** (acc[k] - mx)
        h = 0.0
        for k in range(n_keys):
            q = 2.0 ** (acc[k] - mx) / total
            if q > 1e-300:
                h -= q * math.log2(q)
        out[t] = h
    return out


def prefix_entropies_numpy(ll):
    acc = np.cumsum(ll, axis=1)
    mx = acc.max(axis=0)
    dead = mx == -np.inf
    safe = np.where(dead, 0.0, mx)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.exp2(acc - safe[None, :])
        q = q / q.sum(axis=0)[None, :]
        terms = np.where(q > PROB_FLOOR, -q * np.log2(np.where(q > PROB_FLOOR, q, 1.0)), 0.0)
    h = terms.sum(axis=0)
    return np.where(dead, np.nan, h)


def posterior_from_logliks(ll: np.ndarray) -> np.ndarray | None:
    """Normalised posterior from per-round log2 likelihoods (uniform prior)."""
    acc = ll.sum(axis=1)
    mx = acc.max()
    if mx == -np.inf:
        return None
    q = np.exp2(acc - mx)
    return q / q.sum()


if USE_NUMBA:
    round_logliks = round_logliks_loop
    prefix_entropies = prefix_entropies_loop
else:
    round_logliks = round_logliks_numpy
    prefix_entropies = prefix_entropies_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
