"""Experiment drivers: beta sweep, random-matrix ensembles, gain tail
probabilities. The CLI writes their rows to CSV; tests call them directly."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import blend, homogeneous_matrix, random_matrix, reference_random_matrix, validate
from .errors import MarkovCodeError, NonErgodicError
from .mdp import SolveReport
from .policies import PolicyKind, solve_all
from .sim import simulate

log = logging.getLogger(__name__)

KINDS = (PolicyKind.STEADY_STATE, PolicyKind.MYOPIC, PolicyKind.OPTIMAL)
COLUMN = {PolicyKind.STEADY_STATE: "L_st", PolicyKind.MYOPIC: "L_m", PolicyKind.OPTIMAL: "L_star"}
# gains below this are float noise between identical policies
GAIN_FLOOR = 1e-9


def default_beta_grid(step: float = 0.05) -> list[float]:
    k = int(round(1.0 / step))
    return [round(i / k, 10) for i in range(k + 1)]


def default_tau_grid() -> list[float]:
    return [round(0.005 * i, 10) for i in range(61)]


def fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if np.isnan(x) else f"{x:.6g}"
    return str(x)


def _map(fn, items, workers: int):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(x) for x in items]


def _row_from_reports(reports: dict) -> tuple[dict, str]:
    row, errors = {}, []
    for kind in KINDS:
        rep = reports[kind]
        if isinstance(rep, SolveReport):
            row[COLUMN[kind]] = rep.eta
        else:
            row[COLUMN[kind]] = float("nan")
            errors.append(f"{kind.value}: {rep}")
    return row, "; ".join(errors)


# -- beta sweep --------------------------------------------------------------

def _sweep_point(args):
    H, R, beta, sim_n, seed = args
    row = {"beta": beta}
    try:
        P = blend(H, R, beta)
        if not P.ergodic:
            raise NonErgodicError(f"blend at beta={beta} is not ergodic")
        reports = solve_all(P)
    except MarkovCodeError as exc:
        row.update({COLUMN[k]: float("nan") for k in KINDS}, error=str(exc))
        return row
    vals, err = _row_from_reports(reports)
    row.update(vals)
    if sim_n:
        for kind in KINDS:
            rep = reports[kind]
            col = "sim_" + COLUMN[kind]
            row[col] = (simulate(P, rep.policy, sim_n, seed).empirical_average
                        if isinstance(rep, SolveReport) else float("nan"))
    row["error"] = err
    return row


def beta_sweep(n: int = 4, alpha: float = 0.5, betas=None, R=None, *,
               simulate_transmissions: int = 0, seed: int = 0, workers: int = 1) -> list[dict]:
    """Solve P = (1 - beta) H(alpha) + beta R over a grid of beta.

    R defaults to the shipped reference realization for n = 4 and to a seeded
    random matrix otherwise. With ``simulate_transmissions`` > 0 each policy is
    also simulated, seed ``seed + grid index``, shared by the three policies.
    """
    betas = default_beta_grid() if betas is None else list(betas)
    H = homogeneous_matrix(n, alpha)
    if R is None:
        R = reference_random_matrix() if n == 4 else random_matrix(n, seed)
    else:
        R = validate(R)
    jobs = [(H, R, float(b), simulate_transmissions, seed + i) for i, b in enumerate(betas)]
    return _map(_sweep_point, jobs, workers)


def sweep_columns(simulated: bool) -> list[str]:
    cols = ["beta", "L_st", "L_m", "L_star"]
    if simulated:
        cols += ["sim_L_st", "sim_L_m", "sim_L_star"]
    return cols + ["error"]


# -- ensembles ----------------------------------------------------------------

def _ensemble_draw(args):
    n, seed, beta, alpha = args
    P = random_matrix(n, seed)
    if beta < 1.0:
        P = blend(homogeneous_matrix(n, alpha), P, beta)
    if not P.ergodic:
        return None
    row, err = _row_from_reports(solve_all(P))
    return {"seed": seed, **row, "error": err}


def ensemble(n: int, n_matrices: int, master_seed: int = 0, *, beta: float = 1.0,
             alpha: float = 0.5, workers: int = 1) -> list[dict]:
    """Solve ``n_matrices`` random matrices; matrix i uses seed master_seed + i.

    ``beta`` < 1 mixes each draw with H(alpha). A non-ergodic draw is skipped
    and the counter moves on to the next seed.
    """
    rows: list[dict] = []
    next_seed = master_seed
    while len(rows) < n_matrices:
        need = n_matrices - len(rows)
        jobs = [(n, next_seed + i, beta, alpha) for i in range(need)]
        next_seed += need
        for job, row in zip(jobs, _map(_ensemble_draw, jobs, workers)):
            if row is None:
                log.warning("seed %d gave a non-ergodic matrix; redrawing", job[1])
            else:
                rows.append(row)
    return rows


ENSEMBLE_COLUMNS = ["seed", "L_st", "L_m", "L_star", "error"]


@dataclass
class EnsembleSummary:
    n_matrices: int
    mean_L_st: float
    mean_L_m: float
    mean_L_star: float
    mean_gain_st: float
    mean_gain_m: float
    failed: int = field(default=0)

    def as_rows(self) -> list[tuple[str, str]]:
        return [
            ("n_matrices", str(self.n_matrices)),
            ("failed", str(self.failed)),
            ("E[L_st]", fmt(self.mean_L_st)),
            ("E[L_m]", fmt(self.mean_L_m)),
            ("E[L_star]", fmt(self.mean_L_star)),
            ("E[L_st-L_star]", fmt(self.mean_gain_st)),
            ("E[L_m-L_star]", fmt(self.mean_gain_m)),
        ]


def summarize(rows: list[dict]) -> EnsembleSummary:
    """Means over the rows with all three values present."""
    arr = np.array([[r["L_st"], r["L_m"], r["L_star"]] for r in rows], dtype=float).reshape(-1, 3)
    ok = np.all(np.isfinite(arr), axis=1)
    a = arr[ok]
    st, m, star = a[:, 0], a[:, 1], a[:, 2]
    return EnsembleSummary(
        n_matrices=int(ok.sum()),
        mean_L_st=float(st.mean()),
        mean_L_m=float(m.mean()),
        mean_L_star=float(star.mean()),
        mean_gain_st=float((st - star).mean()),
        mean_gain_m=float((m - star).mean()),
        failed=int((~ok).sum()),
    )


def gain_tail(rows: list[dict], taus=None) -> list[dict]:
    """Empirical Pr(L_k - L_star > tau) for k in {myopic, steady state}."""
    taus = default_tau_grid() if taus is None else list(taus)
    arr = np.array([[r["L_st"], r["L_m"], r["L_star"]] for r in rows], dtype=float).reshape(-1, 3)
    arr = arr[np.all(np.isfinite(arr), axis=1)]
    gain_st = arr[:, 0] - arr[:, 2]
    gain_m = arr[:, 1] - arr[:, 2]
    out = []
    for tau in taus:
        out.append({
            "tau": float(tau),
            "frac_myopic_gain_gt_tau": float(np.mean(gain_m > tau + GAIN_FLOOR)),
            "frac_steady_gain_gt_tau": float(np.mean(gain_st > tau + GAIN_FLOOR)),
        })
    return out


GAIN_COLUMNS = ["tau", "frac_myopic_gain_gt_tau", "frac_steady_gain_gt_tau"]
