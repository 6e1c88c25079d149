"""Monte-Carlo simulation of the embedded transmission process."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .codebook import validate_distribution
from .mdp import CodingPolicy, as_model, state_space

CHUNK = 1 << 16
CSV_HEADER = ("seed", "policy_kind", "n_transmissions", "empirical_average", "analytic_eta", "abs_gap")


@dataclass(frozen=True)
class SimResult:
    transmissions: int
    total_slots: int
    per_state_visit_counts: np.ndarray
    seed: int

    @property
    def empirical_average(self) -> float:
        return self.total_slots / self.transmissions

    def visit_frequencies(self) -> np.ndarray:
        return self.per_state_visit_counts / self.transmissions

    def csv_row(self, policy_kind: str, analytic_eta: float) -> list:
        gap = abs(self.empirical_average - analytic_eta)
        return [self.seed, policy_kind, self.transmissions,
                f"{self.empirical_average:.6g}", f"{analytic_eta:.6g}", f"{gap:.6g}"]

    def to_dict(self) -> dict:
        count = self.per_state_visit_counts.size
        n = (1 + math.isqrt(1 + 4 * count)) // 2  # count = n(n-1)
        return {
            "seed": self.seed,
            "transmissions": self.transmissions,
            "total_slots": self.total_slots,
            "empirical_average": self.empirical_average,
            "per_state_visit_counts": {
                str(s): int(c) for s, c in zip(state_space(n), self.per_state_visit_counts)
            },
        }


def cumulative_rows(powers: np.ndarray) -> np.ndarray:
    cum = np.cumsum(powers, axis=2)
    cum[..., -1] = 1.0  # last bucket absorbs round-off
    return np.ascontiguousarray(cum)


def sample_next(row, rng) -> int:
    """Draw a 1-based symbol from ``row`` by inverting its CDF at one uniform."""
    p = validate_distribution(row)
    cum = np.cumsum(p)
    cum[-1] = 1.0
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return int(min(np.searchsorted(cum, rng.random(), side="right"), p.size - 1)) + 1


def simulate(P, policy: CodingPolicy, n_transmissions: int, seed: int = 0) -> SimResult:
    """Run the embedded chain from state (1,1) for ``n_transmissions`` transmissions.

    Each transmission draws the next symbol from row n of P**ell, charges the
    policy's codeword length for it, and moves to (next symbol, that length).
    Results are identical per seed on both kernel backends.
    """
    if n_transmissions < 1:
        raise ValueError("n_transmissions must be >= 1")
    model = as_model(P)
    policy = policy if isinstance(policy, CodingPolicy) else CodingPolicy(policy)
    cum = cumulative_rows(model.powers)
    actions = np.ascontiguousarray(policy.actions, dtype=np.int64)
    visits = np.zeros(model.n_states, dtype=np.int64)
    rng = np.random.default_rng(seed)
    state, total, left = 0, 0, n_transmissions
    while left:
        k = min(left, CHUNK)
        slots, state = kernels.simulate_chunk(cum, actions, rng.random(k), state, visits)
        total += slots
        left -= k
    return SimResult(n_transmissions, int(total), visits, seed)
