"""Regret of the adaptive policy against a full-information benchmark.

All comparisons assume both trajectories answered the *same* disturbance
sequence; stepwise_regret enforces this.  Two notions are provided: the
model-based one accumulates the weighted distance between the two
trajectories, and the cost-difference one subtracts realized costs.  The
diagnostic for the first checks whether the average regret per step is
flattening out, which is the signature of the adaptive policy locking on
to the true model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

W_MATCH_TOL = 1e-12
RATIO_SLACK = 1e-12
DECAY_FACTOR = 0.5


@dataclass(eq=False)
class RegretReport:
    d: np.ndarray
    R: np.ndarray
    R_over_T: np.ndarray
    cost_diff: np.ndarray
    model_index: int
    kind: str


@dataclass
class GapReport:
    """Distance from the certified level to each model's optimal one."""

    per_model: list
    minimal: float
    maximal: float
    gamma_bar: float


@dataclass(eq=False)
class SublinearityDiagnostic:
    ratio: np.ndarray
    tail_slope: float
    verdict: str


def stepwise_regret(traj_a, traj_b, penalties):
    """Weighted distance between two responses to one disturbance.

    d_k = ||x^a_k - x^b_k||^2_Q + ||u^a_k - u^b_k||^2_R for k < T and the
    terminal state distance at k = T.  Raises ValueError if the two
    trajectories saw different disturbances.
    """
    if traj_a.w.shape != traj_b.w.shape:
        raise ValueError("trajectories have different horizons or dimensions")
    w_gap = float(np.max(np.abs(traj_a.w - traj_b.w))) if traj_a.w.size else 0.0
    if w_gap > W_MATCH_TOL:
        raise ValueError(
            f"trajectories answer different disturbances (gap {w_gap:.3e}); "
            f"replay the recorded sequence on both loops first"
        )
    Q, R = penalties.Q, penalties.R
    dx = traj_a.x - traj_b.x
    du = traj_a.u - traj_b.u
    d = np.einsum("ki,ij,kj->k", dx, Q, dx)
    d[:-1] += np.einsum("ki,ij,kj->k", du, R, du)
    return d


def model_based_regret(d):
    """Cumulative regret R, with R[k] the distance accumulated through k."""
    return np.cumsum(np.asarray(d, dtype=float))


def cost_difference_regret(traj_a, traj_b, penalties):
    """Running sum of the realized cost difference (no disturbance credit).

    May be negative at any point; its final element equals the difference
    of the plain accumulated costs (gamma = 0).  A signed difference says
    nothing about how far apart the trajectories are, which is why the
    weighted-distance regret exists alongside it.
    """
    return np.cumsum(traj_a.step_cost - traj_b.step_cost)


def regret_report(traj_a, traj_b, penalties, kind):
    """Assemble the full report for one adaptive-vs-benchmark pair."""
    d = stepwise_regret(traj_a, traj_b, penalties)
    R = model_based_regret(d)
    steps = np.arange(len(R), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_over_t = np.where(steps > 0, R / steps, np.nan)
    return RegretReport(
        d=d,
        R=R,
        R_over_T=r_over_t,
        cost_diff=cost_difference_regret(traj_a, traj_b, penalties),
        model_index=traj_a.true_index,
        kind=kind,
    )


def total_regret(reports):
    """Pointwise maximum of cumulative regret across scenarios."""
    if not reports:
        raise ValueError("no reports to aggregate")
    stacked = np.stack([r.R for r in reports])
    return np.max(stacked, axis=0)


def suboptimality_gaps(gamma_bar, gamma_stars):
    """Gap between the certified level and each model's optimal level.

    `minimal` is the gap that no certificate for this set can undercut
    (against the hardest member); `maximal` is the gap against the
    easiest member.
    """
    gamma_bar = float(gamma_bar)
    per_model = [gamma_bar - float(g) for g in gamma_stars]
    if not per_model:
        raise ValueError("need at least one optimal level")
    return GapReport(
        per_model=per_model,
        minimal=min(per_model),
        maximal=max(per_model),
        gamma_bar=gamma_bar,
    )


def sublinearity_diagnostic(R, slack=RATIO_SLACK, decay_factor=DECAY_FACTOR):
    """Check whether cumulative regret is flattening out.

    Computes the per-step average ratio[k] = R[k] / k (undefined at
    k = 0) and its least-squares slope over the last quarter of the run.
    Verdict is "consistent-with-sublinear" when the ratio is nonincreasing
    across that tail (up to `slack`) and the final ratio has fallen to at
    most `decay_factor` times its peak; otherwise "inconclusive".  A
    finite run can never prove sublinearity, hence the hedged wording.
    """
    R = np.asarray(R, dtype=float)
    T = len(R) - 1
    if T < 4:
        raise ValueError("diagnostic needs at least 4 steps of regret")
    steps = np.arange(T + 1, dtype=float)
    ratio = np.empty(T + 1)
    ratio[0] = np.nan
    ratio[1:] = R[1:] / steps[1:]

    q = max(2, T // 4)
    tail = ratio[T - q + 1:]
    tail_k = steps[T - q + 1:]
    tail_slope = float(np.polyfit(tail_k, tail, 1)[0])

    nonincreasing = bool(np.all(np.diff(tail) <= slack))
    decayed = bool(ratio[T] <= decay_factor * np.nanmax(ratio))
    verdict = (
        "consistent-with-sublinear" if nonincreasing and decayed else "inconclusive"
    )
    return SublinearityDiagnostic(ratio=ratio, tail_slope=tail_slope, verdict=verdict)
