"""Augmented-state average-cost MDP for real-time variable-length coding.

A state ``(n, ell)`` pairs the last transmitted symbol with the length of its
codeword; the action is the complete code applied to the next symbol, which is
drawn from row ``n`` of ``P**ell``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from . import kernels
from .chain import TransitionMatrix, matrix_powers, require_ergodic, stationary_vector
from .codebook import CompleteCode, check_alphabet, complete_code_array
from .errors import MultichainPolicyError, SingularSystemError, ValidationError

log = logging.getLogger(__name__)

RANK_TOL = 1e-12
RESIDUAL_TOL = 1e-9


class AugmentedState(NamedTuple):
    symbol: int  # 1..N
    length: int  # 1..N-1

    def __str__(self) -> str:
        return f"{self.symbol},{self.length}"


def n_augmented_states(n: int) -> int:
    return n * (n - 1)


def state_space(n: int) -> list[AugmentedState]:
    """All N(N-1) states, ordered so that (n, ell) sits at (n-1)(N-1) + ell-1."""
    if n < 2:
        raise ValidationError("alphabet size must be at least 2")
    return [AugmentedState(sym, ell) for sym in range(1, n + 1) for ell in range(1, n)]


def state_index(state, n: int) -> int:
    sym, ell = state
    if not (1 <= sym <= n and 1 <= ell <= n - 1):
        raise ValidationError(f"state {tuple(state)} outside the state space for N={n}")
    return (sym - 1) * (n - 1) + (ell - 1)


@dataclass(frozen=True, eq=False)
class CodingPolicy:
    """Total map from augmented states to complete codes.

    ``actions[s]`` is the length vector used after state index ``s``.
    """

    actions: np.ndarray

    def __post_init__(self):
        a = np.array(self.actions, dtype=np.int64, copy=True)
        if a.ndim != 2 or a.shape[0] != n_augmented_states(a.shape[1]):
            raise ValidationError(f"policy table has shape {a.shape}, expected (N(N-1), N)")
        for row in a.tolist():
            CompleteCode(row)
        a.setflags(write=False)
        object.__setattr__(self, "actions", a)

    @property
    def n_symbols(self) -> int:
        return self.actions.shape[1]

    def __getitem__(self, state) -> CompleteCode:
        return CompleteCode(self.actions[state_index(state, self.n_symbols)].tolist())

    def __eq__(self, other) -> bool:
        return isinstance(other, CodingPolicy) and np.array_equal(self.actions, other.actions)

    def __hash__(self) -> int:
        return hash(self.actions.tobytes())

    def items(self):
        for s in state_space(self.n_symbols):
            yield s, self[s]

    @classmethod
    def constant(cls, code, n: int | None = None) -> "CodingPolicy":
        code = CompleteCode(code)
        n = len(code) if n is None else n
        return cls(np.tile(np.asarray(code, dtype=np.int64), (n_augmented_states(n), 1)))

    @classmethod
    def from_mapping(cls, mapping: Mapping, n: int) -> "CodingPolicy":
        table = np.zeros((n_augmented_states(n), n), dtype=np.int64)
        seen = set()
        for state, code in mapping.items():
            i = state_index(state, n)
            table[i] = CompleteCode(code)
            seen.add(i)
        if len(seen) != table.shape[0]:
            raise ValidationError("policy mapping does not cover every augmented state")
        return cls(table)


class SourceModel:
    """Transition matrix plus the cached powers P**1..P**(N-1) used by every
    kernel, cost and evaluation call of one solve."""

    def __init__(self, P):
        self.P = require_ergodic(P)
        self.n = check_alphabet(self.P.n_states)
        self.powers = matrix_powers(self.P.rows, max(1, self.n - 1))
        self.powers.setflags(write=False)

    @property
    def n_states(self) -> int:
        return n_augmented_states(self.n)

    def next_symbol_rows(self) -> np.ndarray:
        """(|S|, N) array; row s is the next-symbol distribution after state s."""
        return self.powers.transpose(1, 0, 2).reshape(self.n_states, self.n)


def as_model(P) -> SourceModel:
    return P if isinstance(P, SourceModel) else SourceModel(P)


def _policy_table(policy, n: int) -> np.ndarray:
    if isinstance(policy, CodingPolicy):
        table = policy.actions
    else:
        table = np.asarray(policy, dtype=np.int64)
    if table.shape != (n_augmented_states(n), n):
        raise ValidationError(f"policy table has shape {table.shape}, expected {(n * (n - 1), n)}")
    return table


def transition_kernel(P, state, code) -> dict[AugmentedState, float]:
    """Distribution of the next augmented state: (n', code[n']) with
    probability (P**ell)[n, n']."""
    model = as_model(P)
    code = CompleteCode(code)
    sym, ell = state
    state_index(state, model.n)
    row = model.powers[ell - 1, sym - 1]
    return {AugmentedState(j + 1, code[j]): float(row[j]) for j in range(model.n)}


def expected_cost(P, state, code) -> float:
    model = as_model(P)
    code = CompleteCode(code)
    sym, ell = state
    state_index(state, model.n)
    return float(model.powers[ell - 1, sym - 1] @ np.asarray(code, dtype=float))


def _assemble(model: SourceModel, table: np.ndarray):
    rows = model.next_symbol_rows()
    n, L = model.n, model.n - 1
    S = model.n_states
    T = np.zeros((S, S))
    targets = np.arange(n)[None, :] * L + table - 1
    np.add.at(T, (np.repeat(np.arange(S), n), targets.ravel()), rows.ravel())
    costs = (rows * table).sum(axis=1)
    return T, costs


def policy_transition_matrix(P, policy) -> np.ndarray:
    model = as_model(P)
    T, _ = _assemble(model, _policy_table(policy, model.n))
    return T


def policy_costs(P, policy) -> np.ndarray:
    """Per-state expected next-codeword length under ``policy``."""
    model = as_model(P)
    _, c = _assemble(model, _policy_table(policy, model.n))
    return c


def stationary_distribution(T, policy=None) -> np.ndarray:
    """Stationary law of the policy-induced chain; transient states get 0.

    Raises MultichainPolicyError when the chain has several recurrent classes.
    """
    T = np.asarray(T, dtype=float)
    try:
        pi = stationary_vector(T)
    except SingularSystemError as exc:
        raise MultichainPolicyError(f"policy is not unichain: {exc}", policy) from exc
    if np.abs(pi @ T - pi).max() > RESIDUAL_TOL:
        raise MultichainPolicyError("stationary residual exceeds tolerance", policy)
    return pi


def long_run_average(P, policy) -> float:
    model = as_model(P)
    T, c = _assemble(model, _policy_table(policy, model.n))
    return float(stationary_distribution(T, policy) @ c)


def _value_system(T: np.ndarray, c: np.ndarray, ref: int = 0):
    S = T.shape[0]
    M = np.eye(S) - T
    M[:, ref] = 1.0  # V[ref] is pinned to 0; its column carries eta
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise SingularSystemError("value-determination system is rank deficient")
    x = np.linalg.solve(M, c)
    eta = float(x[ref])
    V = x.copy()
    V[ref] = 0.0
    resid = np.abs(V - (c - eta + T @ V)).max()
    if resid > RESIDUAL_TOL:
        raise SingularSystemError(f"value-determination residual {resid:.3e}")
    return eta, V


def value_determination(P, policy) -> tuple[float, np.ndarray]:
    """Average cost and relative values of ``policy``, with V at state (1,1) fixed to 0."""
    model = as_model(P)
    T, c = _assemble(model, _policy_table(policy, model.n))
    try:
        return _value_system(T, c)
    except SingularSystemError as exc:
        raise MultichainPolicyError(f"policy is not unichain: {exc}", policy) from exc


def policy_improvement(P, values) -> CodingPolicy:
    """Greedy policy for relative values ``values``: at each state the code
    minimizing c(s,u) + sum T(s,s',u) V[s'], ties to the lexicographically
    smallest code."""
    model = as_model(P)
    V = np.asarray(values, dtype=float)
    if V.shape != (model.n_states,):
        raise ValidationError(f"value vector must have {model.n_states} entries")
    codes = complete_code_array(model.n)
    best, _ = kernels.improve_scan(model.powers, codes, V)
    return CodingPolicy(codes[best])


def bellman_residual(P, eta: float, values) -> np.ndarray:
    """|V_s - min_u {c(s,u) - eta + sum T V}| at every state."""
    model = as_model(P)
    V = np.asarray(values, dtype=float)
    _, q = kernels.improve_scan(model.powers, complete_code_array(model.n), V)
    return np.abs(V - (q - eta))


@dataclass
class SolveReport:
    policy: CodingPolicy
    eta: float
    values: np.ndarray
    stationary: np.ndarray
    iterations: int
    eta_trace: list[float] = field(default_factory=list)
    converged: bool = True
    stop_reason: str = "fixed_point"
    bellman_residual: float = float("nan")

    def to_dict(self) -> dict:
        states = state_space(self.policy.n_symbols)
        return {
            "eta": self.eta,
            "iterations": self.iterations,
            "eta_trace": list(self.eta_trace),
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "bellman_residual": self.bellman_residual,
            "policy": {str(s): list(self.policy[s]) for s in states},
            "values": {str(s): float(v) for s, v in zip(states, self.values)},
            "stationary": {str(s): float(p) for s, p in zip(states, self.stationary)},
        }


def evaluate(P, policy) -> SolveReport:
    """Exact evaluation of a fixed policy, packaged as a one-step report."""
    model = as_model(P)
    policy = policy if isinstance(policy, CodingPolicy) else CodingPolicy(policy)
    T, c = _assemble(model, policy.actions)
    eta, V = value_determination(model, policy)
    pi = stationary_distribution(T, policy)
    return SolveReport(
        policy=policy, eta=eta, values=V, stationary=pi, iterations=0,
        eta_trace=[eta], converged=True, stop_reason="evaluated",
        bellman_residual=float(bellman_residual(model, eta, V).max()),
    )


def policy_iteration(P, initial=None, eps: float | None = None, d_max: int = 30) -> SolveReport:
    """Average-cost policy iteration.

    Starts from ``initial`` (the myopic Huffman policy when omitted) and
    alternates value determination and improvement until the improved policy
    repeats or ``d_max`` evaluations have been made. Hitting ``d_max`` sets
    ``converged=False``.

    ``eps`` enables the early stop |eta(d) - eta(d-1)| <= eps. It can end on a
    policy that is not yet optimal, so it is off by default; pass 1e-4 for the
    common tolerance-based rule.
    """
    model = as_model(P)
    if initial is None:
        from .policies import myopic_policy

        initial = myopic_policy(model)
    policy = initial if isinstance(initial, CodingPolicy) else CodingPolicy(initial)
    codes = complete_code_array(model.n)

    eta, V = value_determination(model, policy)
    trace = [eta]
    reason = None
    d = 1
    while reason is None:
        best, _ = kernels.improve_scan(model.powers, codes, V)
        candidate = CodingPolicy(codes[best])
        if candidate == policy:
            reason = "fixed_point"
            break
        new_eta, new_V = value_determination(model, candidate)
        d += 1
        trace.append(new_eta)
        policy, V = candidate, new_V
        if eps is not None and abs(new_eta - eta) <= eps:
            reason = "eta_tolerance"
        elif d >= d_max:
            reason = "max_iterations"
        eta = new_eta

    T, _ = _assemble(model, policy.actions)
    pi = stationary_distribution(T, policy)
    resid = float(bellman_residual(model, eta, V).max())
    if reason == "max_iterations":
        log.warning("policy iteration stopped at d_max=%d without converging", d_max)
    return SolveReport(
        policy=policy, eta=eta, values=V, stationary=pi, iterations=d,
        eta_trace=trace, converged=reason != "max_iterations",
        stop_reason=reason, bellman_residual=resid,
    )
