"""Discrete- and continuous-time Markov chains over a finite alphabet."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NonErgodicError,
    SeriesConvergenceError,
    SingularSystemError,
    ValidationError,
)

ROW_TOL = 1e-9
RANK_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _as_square(raw, what: str) -> np.ndarray:
    try:
        a = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what} is not a numeric matrix") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{what} must be square, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValidationError(f"{what} needs at least two states")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what} contains non-finite entries")
    return a


def is_irreducible(support: np.ndarray) -> bool:
    n = support.shape[0]
    reach = support.astype(bool) | np.eye(n, dtype=bool)
    # transitive closure by repeated boolean squaring
    for _ in range(max(1, math.ceil(math.log2(n)) + 1)):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def period(support: np.ndarray) -> int:
    """Period of an irreducible support digraph: gcd over edges (u, v) of
    level[u] + 1 - level[v], with BFS levels from state 0."""
    n = support.shape[0]
    level = [-1] * n
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(support[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    g = 0
    for u in range(n):
        for v in np.flatnonzero(support[u]):
            g = math.gcd(g, level[u] + 1 - level[v])
    return g


def is_ergodic(rows: np.ndarray) -> bool:
    support = rows > 0
    return is_irreducible(support) and period(support) == 1


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix of a DTMC. Build through :func:`validate`."""

    rows: np.ndarray
    ergodic: bool = field(default=True)

    @property
    def n_states(self) -> int:
        return self.rows.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)

    def to_dict(self) -> dict:
        return {"n": self.n_states, "rows": self.rows.tolist()}


def validate(raw, *, require_ergodic: bool = True) -> TransitionMatrix:
    """Check a user-supplied transition matrix and wrap it.

    Raises ValidationError on a negative entry or a row sum off by more than
    1e-9, NonErgodicError (unless ``require_ergodic`` is false) when the chain
    is reducible or periodic.
    """
    if isinstance(raw, TransitionMatrix):
        raw = raw.rows
    a = _as_square(raw, "transition matrix")
    if np.any(a < 0):
        r, c = np.argwhere(a < 0)[0]
        raise ValidationError(f"negative transition probability at ({r + 1},{c + 1})")
    if np.any(a > 1):
        raise ValidationError("transition probability greater than 1")
    sums = a.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
    if bad.size:
        raise ValidationError(f"row {bad[0] + 1} sums to {float(sums[bad[0]])!r}, expected 1")
    ergodic = is_ergodic(a)
    if require_ergodic and not ergodic:
        raise NonErgodicError("transition matrix is not irreducible and aperiodic")
    return TransitionMatrix(_readonly(a), ergodic)


def _generated(a: np.ndarray) -> TransitionMatrix:
    # library-built matrices: absorb float drift instead of rejecting
    a = np.clip(a, 0.0, None)
    a = a / a.sum(axis=1, keepdims=True)
    return TransitionMatrix(_readonly(a), is_ergodic(a))


def require_ergodic(P: TransitionMatrix) -> TransitionMatrix:
    if not isinstance(P, TransitionMatrix):
        return validate(P)
    if not P.ergodic:
        raise NonErgodicError("solver requires an ergodic transition matrix")
    return P


def matrix_power(P, ell: int) -> np.ndarray:
    """P**ell by repeated squaring (ell >= 1)."""
    if int(ell) != ell or ell < 1:
        raise ValidationError(f"matrix power exponent must be a positive integer, got {ell!r}")
    base = np.asarray(P, dtype=float)
    result = None
    e = int(ell)
    while e:
        if e & 1:
            result = base.copy() if result is None else result @ base
        e >>= 1
        if e:
            base = base @ base
    return result


def matrix_powers(P, max_len: int) -> np.ndarray:
    """Stack of P**1 .. P**max_len, shape (max_len, N, N)."""
    base = np.asarray(P, dtype=float)
    out = np.empty((max_len,) + base.shape)
    out[0] = base
    for k in range(1, max_len):
        out[k] = out[k - 1] @ base
    return out


def stationary_vector(T) -> np.ndarray:
    """Solve pi (T + 11' - I) = 1' for the stationary row vector of ``T``.

    The system is nonsingular exactly when T has a single recurrent class;
    otherwise SingularSystemError is raised. Tiny negative round-off is
    clamped to zero.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    A = T + 1.0 - np.eye(n)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise SingularSystemError(
            f"stationary system is rank deficient (sigma_min/sigma_max={sv[-1] / sv[0]:.3e})"
        )
    pi = np.linalg.solve(A.T, np.ones(n))
    pi[np.abs(pi) < 1e-12] = 0.0
    if np.any(pi < 0):
        raise SingularSystemError("stationary solve produced negative mass")
    return pi / pi.sum()


def steady_state(P) -> np.ndarray:
    """Stationary distribution of the symbol chain."""
    return stationary_vector(np.asarray(P, dtype=float))


def homogeneous_matrix(n: int, alpha: float) -> TransitionMatrix:
    """Self-transition ``alpha``, every other transition (1 - alpha) / (n - 1)."""
    if n < 2:
        raise ValidationError("homogeneous matrix needs n >= 2")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    off = (1.0 - alpha) / (n - 1)
    a = np.full((n, n), off)
    np.fill_diagonal(a, alpha)
    return TransitionMatrix(_readonly(a), True)


def random_matrix(n: int, rng) -> TransitionMatrix:
    """Uniform(0,1) entries, each row divided by its sum.

    ``rng`` is a numpy Generator or anything accepted by ``default_rng``.
    """
    if n < 2:
        raise ValidationError("random matrix needs n >= 2")
    rng = np.random.default_rng(rng)
    a = rng.random((n, n))
    for i in range(n):
        while a[i].sum() < 1e-12:
            a[i] = rng.random(n)
    return _generated(a)


def blend(H, R, beta: float) -> TransitionMatrix:
    """(1 - beta) H + beta R."""
    h = np.asarray(H, dtype=float)
    r = np.asarray(R, dtype=float)
    if h.shape != r.shape:
        raise ValidationError(f"cannot blend matrices of shapes {h.shape} and {r.shape}")
    if not 0.0 <= beta <= 1.0:
        raise ValidationError(f"beta must lie in [0, 1], got {beta!r}")
    if beta == 0.0:
        a = h.copy()
    elif beta == 1.0:
        a = r.copy()
    else:
        a = (1.0 - beta) * h + beta * r
    return TransitionMatrix(_readonly(a), is_ergodic(a))


@dataclass(frozen=True)
class GeneratorMatrix:
    """CTMC generator: non-negative off-diagonal rates, zero row sums."""

    rates: np.ndarray

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.rates).copy()

    def jump_probabilities(self) -> np.ndarray:
        """rho[n, n'] = Q[n, n'] / sigma_n off the diagonal; absorbing rows stay zero."""
        sigma = self.exit_rates
        rho = np.array(self.rates, dtype=float)
        np.fill_diagonal(rho, 0.0)
        live = sigma > 0
        rho[live] /= sigma[live, None]
        return rho

    def to_dict(self) -> dict:
        return {"n": self.n_states, "rows": self.rates.tolist()}


def validate_generator(raw) -> GeneratorMatrix:
    if isinstance(raw, GeneratorMatrix):
        return raw
    q = _as_square(raw, "generator matrix")
    off = q - np.diag(np.diag(q))
    if np.any(off < 0):
        raise ValidationError("generator has a negative off-diagonal rate")
    sums = q.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums) > ROW_TOL)
    if bad.size:
        raise ValidationError(f"generator row {bad[0] + 1} sums to {float(sums[bad[0]])!r}, expected 0")
    return GeneratorMatrix(_readonly(q))


def expm(A, *, norm_target: float = 0.5, term_tol: float = 1e-16, max_terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling and squaring a truncated Taylor series."""
    A = np.asarray(A, dtype=float)
    norm = np.abs(A).sum(axis=1).max() if A.size else 0.0
    k = 0
    if norm > norm_target:
        k = int(math.ceil(math.log2(norm / norm_target)))
    B = A / (2.0 ** k)
    result = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for j in range(1, max_terms + 1):
        term = term @ B / j
        result += term
        if np.abs(term).max() < term_tol:
            break
    else:
        raise SeriesConvergenceError("Taylor series did not converge")
    for _ in range(k):
        result = result @ result
    return result


def ctmc_to_dtmc(Q, d: float) -> TransitionMatrix:
    """Per-slot transition matrix exp(Q d) of a CTMC sampled every ``d`` seconds.

    The result is returned even when it is not ergodic (e.g. Q = 0); solvers
    reject it later.
    """
    Q = validate_generator(Q)
    if not d > 0:
        raise ValidationError(f"slot duration d must be positive, got {d!r}")
    P = expm(Q.rates * float(d))
    if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL) or np.any(P < -ROW_TOL):
        raise SeriesConvergenceError("exp(Qd) is not stochastic within tolerance")
    P = np.clip(P, 0.0, None)
    return TransitionMatrix(_readonly(P), is_ergodic(P))


# A realization of the uniform-row generator, N = 4, printed to four decimals;
# used for the beta sweep. Row 4 sums to 1.0001 as printed, so the shipped
# matrix is row-normalized.
R0_PRINTED = np.array([
    [0.1426, 0.4996, 0.0409, 0.3169],
    [0.3542, 0.5398, 0.0858, 0.0202],
    [0.1732, 0.3522, 0.0946, 0.3800],
    [0.1124, 0.3401, 0.2936, 0.2540],
])
R0_PRINTED.setflags(write=False)


def reference_random_matrix() -> TransitionMatrix:
    return _generated(R0_PRINTED)


R0 = reference_random_matrix().rows
