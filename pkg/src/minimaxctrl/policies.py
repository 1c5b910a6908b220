"""Online control laws: fixed-gain state feedback and adaptive switching.

The adaptive policy carries one accumulated residual per candidate model
and always plays the gain of the current best explainer (least residual,
lowest index on ties).  Residuals are updated only after the next state
is observed, so the selection at step k uses data through step k.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ControllerState:
    """Switching-controller memory: residuals, active model, step count."""

    alpha: np.ndarray
    current_index: int
    step: int


def initial_state(num_models):
    alpha = np.zeros(num_models)
    return ControllerState(alpha=alpha, current_index=1, step=0)


def minimax_step(cert, state, x_k):
    """Control for the current state: u = -K_l x with l = argmin alpha."""
    l = int(np.argmin(state.alpha)) + 1
    u = -cert.gains[l - 1] @ np.asarray(x_k, dtype=float).reshape(-1)
    return u, replace(state, current_index=l)


def update_residuals(ms, state, x_k, u_k, x_next):
    """Fold one observed transition into every model's residual.

    Model i's residual grows by the squared size of the disturbance it
    would need to explain the step: ||x_next - A_i x_k - B_i u_k||^2.
    """
    x_k = np.asarray(x_k, dtype=float).reshape(-1)
    u_k = np.asarray(u_k, dtype=float).reshape(-1)
    x_next = np.asarray(x_next, dtype=float).reshape(-1)
    w = x_next[None, :] - ms.A @ x_k - ms.B @ u_k
    alpha = state.alpha + np.sum(w * w, axis=1)
    return replace(state, alpha=alpha, step=state.step + 1)


def hinf_step(K_star, x_k):
    """Fixed-gain feedback u = -K x."""
    return -np.asarray(K_star, dtype=float) @ np.asarray(x_k, dtype=float).reshape(-1)
