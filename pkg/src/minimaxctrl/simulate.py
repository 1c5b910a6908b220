"""Closed-loop rollouts of the true model against a controller.

Feedback-type disturbances (worst-case linear, confusing) are only ever
generated along the loop named in their spec.  To expose a second
controller to the identical input, roll out the declaring loop first and
replay the recorded sequence, which `rollout` accepts in place of a spec.
This keeps comparisons honest: both controllers see the same w, not the
same disturbance law.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import disturbance as _dist
from .fileio import write_csv
from .minimax_cert import MinimaxCertificate
from .policies import hinf_step, initial_state, minimax_step, update_residuals

DIVERGENCE_LIMIT = 1e12


class DivergedRollout(RuntimeError):
    """State norm left the trust region; the closed loop is blowing up."""


@dataclass(eq=False)
class Trajectory:
    """One rollout.

    x: (T+1, n) states, u: (T, m) inputs, w: (T, n) disturbances.
    l: (T,) selected model indices (1-based), None for fixed-gain runs.
    alpha_hist: (T+1, F) residuals after k updates, None for fixed-gain.
    step_cost: (T+1,), x_k'Q x_k + u_k'R u_k for k < T and the terminal
    x_T'Q x_T at k = T.
    """

    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    step_cost: np.ndarray
    true_index: int
    l: np.ndarray | None = None
    alpha_hist: np.ndarray | None = None

    @property
    def horizon(self):
        return self.u.shape[0]


def rollout(cfg, controller, disturbance=None):
    """Simulate cfg.horizon steps of the true model under `controller`.

    controller: a MinimaxCertificate (adaptive switching) or a gain matrix
    K for fixed feedback u = -K x.  disturbance: None to use the spec in
    cfg, a DisturbanceSpec override, or a recorded (T, n) array to replay.
    Raises DivergedRollout when the state norm passes DIVERGENCE_LIMIT.
    """
    ms = cfg.model_set
    T, n = cfg.horizon, ms.n
    A, B = ms.pair(cfg.true_index)

    adaptive = isinstance(controller, MinimaxCertificate)
    if adaptive:
        if controller.size != ms.size or controller.gains.shape[2] != n:
            raise ValueError("certificate does not match the model set")
    else:
        controller = np.asarray(controller, dtype=float)
        if controller.ndim == 1:
            controller = controller[None, :]
        if controller.shape != (ms.m, n):
            raise ValueError(
                f"gain must be ({ms.m}, {n}), got {controller.shape}"
            )

    recorded = None
    if disturbance is None:
        spec = cfg.disturbance
    elif isinstance(disturbance, _dist.DisturbanceSpec):
        spec = disturbance
        _dist.validate_spec(spec, ms, cfg.true_index, T)
    else:
        recorded = np.asarray(disturbance, dtype=float)
        if recorded.shape != (T, n):
            raise ValueError(
                f"recorded disturbance must be ({T}, {n}), got {recorded.shape}"
            )
        spec = None

    if spec is not None and spec.generating_loop != "open":
        loop = "minimax" if adaptive else "hinf"
        if spec.generating_loop != loop:
            raise ValueError(
                f"disturbance '{spec.kind}' is generated along the "
                f"'{spec.generating_loop}' loop; record it there and replay "
                f"the sequence against this controller"
            )

    x = np.zeros((T + 1, n))
    u = np.zeros((T, ms.m))
    w = np.zeros((T, n))
    step_cost = np.zeros(T + 1)
    x[0] = cfg.x0

    l = None
    alpha_hist = None
    state = None
    if adaptive:
        l = np.zeros(T, dtype=int)
        alpha_hist = np.zeros((T + 1, ms.size))
        state = initial_state(ms.size)
        alpha_hist[0] = state.alpha

    Q, R = cfg.penalties.Q, cfg.penalties.R
    for k in range(T):
        if adaptive:
            u[k], state = minimax_step(controller, state, x[k])
            l[k] = state.current_index
        else:
            u[k] = hinf_step(controller, x[k])
        w[k] = recorded[k] if recorded is not None else _dist.emit(spec, k, x[k], u[k])
        x[k + 1] = A @ x[k] + B @ u[k] + w[k]
        if not np.all(np.isfinite(x[k + 1])) or np.linalg.norm(x[k + 1]) > DIVERGENCE_LIMIT:
            raise DivergedRollout(
                f"state norm exceeded {DIVERGENCE_LIMIT:.0e} at step {k + 1}"
            )
        if adaptive:
            state = update_residuals(ms, state, x[k], u[k], x[k + 1])
            alpha_hist[k + 1] = state.alpha
        step_cost[k] = x[k] @ Q @ x[k] + u[k] @ R @ u[k]
    step_cost[T] = x[T] @ Q @ x[T]

    return Trajectory(x=x, u=u, w=w, step_cost=step_cost,
                      true_index=cfg.true_index, l=l, alpha_hist=alpha_hist)


def accumulated_cost(traj, penalties, gamma):
    """Soft-constrained cost: sum of step costs minus gamma^2 sum ||w||^2.

    gamma = 0 gives the plain quadratic cost of the trajectory.
    """
    return float(np.sum(traj.step_cost) - gamma ** 2 * np.sum(traj.w * traj.w))


def empirical_l2_gain(traj, penalties):
    """Realized gain sqrt(cost / ||w||^2) for a rollout started at rest.

    Only meaningful from x0 = 0 (otherwise the initial state contributes
    cost the disturbance never paid for) and for nonzero disturbance
    energy; both are enforced.
    """
    if np.any(traj.x[0] != 0.0):
        raise ValueError("empirical gain requires x0 = 0")
    energy = float(np.sum(traj.w * traj.w))
    if energy <= 1e-12:
        raise ValueError("disturbance energy is too small to define a gain")
    return float(np.sqrt(np.sum(traj.step_cost) / energy))


def write_trajectory_csv(traj, path):
    """Write k, x, u, w, selected model and step cost, one row per step.

    The final row carries the terminal state and cost; its u, w and l
    cells are empty.
    """
    T, n = traj.horizon, traj.x.shape[1]
    m = traj.u.shape[1]
    header = (
        ["k"]
        + [f"x_{i + 1}" for i in range(n)]
        + [f"u_{i + 1}" for i in range(m)]
        + [f"w_{i + 1}" for i in range(n)]
        + ["l", "step_cost"]
    )
    rows = []
    for k in range(T + 1):
        last = k == T
        rows.append(
            [k]
            + list(traj.x[k])
            + ([None] * m if last else list(traj.u[k]))
            + ([None] * n if last else list(traj.w[k]))
            + [None if last or traj.l is None else int(traj.l[k])]
            + [traj.step_cost[k]]
        )
    write_csv(path, header, rows)
