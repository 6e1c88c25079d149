"""Hot inner loops: the policy-improvement action scan and the embedded-chain
simulator.

Each kernel exists as a numba-compiled loop nest and as a numpy (or plain
Python) fallback with identical outputs. The compiled path is used when numba
imports and ``MARKOVCODE_DISABLE_NUMBA`` is unset or false; both variants stay
importable so they can be benchmarked and cross-checked against each other.

State indexing throughout: ``s = n * (N - 1) + (ell - 1)`` with 0-based ``n``.
"""

from __future__ import annotations

import bisect
import os

import numpy as np

TIE_TOL = 1e-12

_FLAG = os.environ.get("MARKOVCODE_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# -- policy improvement ----------------------------------------------------

def _continuation_table(values, n):
    """w[n', l - 1] = l + V[(n', l)]: cost plus relative value of landing in (n', l)."""
    return np.arange(1, n, dtype=np.float64)[None, :] + values.reshape(n, n - 1)


def improve_scan_numpy(powers, codes, values, tol=TIE_TOL):
    """For every state return the index of the minimizing code and its Q-value.

    ``powers`` is (N-1, N, N) holding P**1..P**(N-1), ``codes`` the (A, N)
    lexicographically sorted action table, ``values`` the relative values.
    Ties within ``tol`` go to the smallest code index.
    """
    L, n, _ = powers.shape
    w = _continuation_table(values, n)
    g = w[np.arange(n)[None, :], codes - 1]              # (A, N)
    q = powers.reshape(L * n, n) @ g.T                   # rows ordered (ell, n)
    q = q.reshape(L, n, -1).transpose(1, 0, 2).reshape(L * n, -1)  # rows ordered by state
    qmin = q.min(axis=1)
    within = q <= (qmin + tol * np.maximum(1.0, np.abs(qmin)))[:, None]
    best = within.argmax(axis=1)
    return best.astype(np.int64), q[np.arange(q.shape[0]), best]


def _improve_scan_loops(powers, codes, values, tol):
    L = powers.shape[0]
    n = powers.shape[1]
    A = codes.shape[0]
    g = np.empty((A, n))
    for a in range(A):
        for j in range(n):
            l = codes[a, j]
            g[a, j] = l + values[j * (n - 1) + l - 1]
    S = n * L
    best = np.zeros(S, dtype=np.int64)
    bestq = np.empty(S)
    q = np.empty(A)
    for i in range(n):
        for ell in range(L):
            row = powers[ell, i]
            qmin = np.inf
            for a in range(A):
                acc = 0.0
                for j in range(n):
                    acc += row[j] * g[a, j]
                q[a] = acc
                if acc < qmin:
                    qmin = acc
            thresh = qmin + tol * max(1.0, abs(qmin))
            s = i * L + ell
            for a in range(A):
                if q[a] <= thresh:
                    best[s] = a
                    bestq[s] = q[a]
                    break
    return best, bestq


# -- simulation ------------------------------------------------------------

def _simulate_loops(cum, actions, uniforms, state, visits):
    """Advance the embedded chain once per uniform variate.

    ``cum`` holds cumulative rows of P**ell, shape (N-1, N, N). Returns the
    slots charged and the final state; ``visits`` is incremented in place.
    """
    L = cum.shape[0]
    n = cum.shape[1]
    total = 0
    for k in range(uniforms.shape[0]):
        visits[state] += 1
        sym = state // L
        ell = state - sym * L
        row = cum[ell, sym]
        u = uniforms[k]
        nxt = n - 1
        for j in range(n):
            if u < row[j]:
                nxt = j
                break
        length = actions[state, nxt]
        total += length
        state = nxt * L + length - 1
    return total, state


def simulate_chunk_python(cum, actions, uniforms, state, visits):
    L, n, _ = cum.shape
    rows = cum.tolist()
    acts = actions.tolist()
    counts = [0] * visits.shape[0]
    total = 0
    last = n - 1
    for u in uniforms.tolist():
        counts[state] += 1
        sym, ell = divmod(state, L)
        nxt = bisect.bisect_right(rows[ell][sym], u)
        if nxt > last:
            nxt = last
        length = acts[state][nxt]
        total += length
        state = nxt * L + length - 1
    visits += np.asarray(counts, dtype=visits.dtype)
    return total, state


if HAVE_NUMBA:
    improve_scan_numba = numba.njit(cache=True)(_improve_scan_loops)
    simulate_chunk_numba = numba.njit(cache=True)(_simulate_loops)
else:  # pragma: no cover
    improve_scan_numba = None
    simulate_chunk_numba = None


def improve_scan(powers, codes, values, tol=TIE_TOL):
    powers = np.ascontiguousarray(powers, dtype=np.float64)
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if USE_NUMBA:
        return improve_scan_numba(powers, codes, values, tol)
    return improve_scan_numpy(powers, codes, values, tol)


def simulate_chunk(cum, actions, uniforms, state, visits):
    if USE_NUMBA:
        total, state = simulate_chunk_numba(cum, actions, uniforms, state, visits)
        return int(total), int(state)
    return simulate_chunk_python(cum, actions, uniforms, state, visits)
