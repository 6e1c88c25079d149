"""Huffman benchmark policies and the optimal policy behind one interface."""

from __future__ import annotations

import enum
import logging

import numpy as np

from .chain import steady_state
from .codebook import huffman_lengths
from .errors import MarkovCodeError
from .mdp import CodingPolicy, SolveReport, as_model, evaluate, policy_iteration

log = logging.getLogger(__name__)


class PolicyKind(str, enum.Enum):
    MYOPIC = "myopic"
    STEADY_STATE = "steady_state"
    OPTIMAL = "optimal"


def myopic_policy(P) -> CodingPolicy:
    """Huffman code of the next-symbol distribution at every state."""
    model = as_model(P)
    rows = model.next_symbol_rows()
    return CodingPolicy(np.array([huffman_lengths(r / r.sum()) for r in rows], dtype=np.int64))


def steady_state_policy(P) -> CodingPolicy:
    """One static Huffman code, built from the stationary symbol distribution."""
    model = as_model(P)
    return CodingPolicy.constant(huffman_lengths(steady_state(model.P)), model.n)


def solve_all(P, initial=None, eps: float | None = None, d_max: int = 30) -> dict:
    """Evaluate both benchmarks exactly and solve for the optimal policy.

    Returns ``{PolicyKind: SolveReport or MarkovCodeError}``; a failure in one
    kind is recorded in place of its report and does not stop the others.
    """
    model = as_model(P)
    out: dict = {}
    myopic = None
    try:
        myopic = myopic_policy(model)
        out[PolicyKind.MYOPIC] = evaluate(model, myopic)
    except MarkovCodeError as exc:
        out[PolicyKind.MYOPIC] = exc
    try:
        out[PolicyKind.STEADY_STATE] = evaluate(model, steady_state_policy(model))
    except MarkovCodeError as exc:
        out[PolicyKind.STEADY_STATE] = exc
    try:
        seed = initial if initial is not None else myopic
        out[PolicyKind.OPTIMAL] = policy_iteration(model, seed, eps=eps, d_max=d_max)
    except MarkovCodeError as exc:
        out[PolicyKind.OPTIMAL] = exc
    for kind, rep in out.items():
        if isinstance(rep, Exception):
            log.warning("%s policy failed: %s", kind.value, rep)
    return out


def etas(reports: dict) -> dict:
    """Map kind -> eta, with NaN for failed kinds."""
    return {
        k: (r.eta if isinstance(r, SolveReport) else float("nan"))
        for k, r in reports.items()
    }
