"""H-infinity state feedback for one known model.

The synthesis solves the soft-constrained dynamic game

    min_u max_w  sum_k ( |x_k|_Q^2 + |u_k|_R^2 - gamma^2 |w_k|^2 )

for x+ = A x + B u + w by iterating the game Riccati map

    M <- Q + A' M Lambda^-1 A,    Lambda = I + (B R^-1 B' - gamma^-2 I) M

from M = Q.  At a feasible attenuation level the iteration converges to a
stabilizing solution with M < gamma^2 I, and the saddle-point strategies are
u = -K x with K = R^-1 B' M Lambda^-1 A and w = L x with
L = gamma^-2 M Lambda^-1 A.  The smallest feasible level is found by
bisection, and an independent frequency-domain oracle evaluates the actual
closed-loop H-infinity norm on a grid.

All functions are pure; `solve_riccati` and `synthesize`-style entry points
signal lack of a solution by returning `Infeasible` (falsy, carries the
reason) rather than raising, since probing infeasible levels is the normal
mode of bisection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RICCATI_BUDGET = 50_000
RICCATI_TOL = 1e-11
FEAS_MARGIN = 1e-10
BISECT_REL_TOL = 1e-5
GAMMA_MAX = 1e6
GRID_SIZE = 4096


class BracketError(RuntimeError):
    """Bisection could not establish a feasible upper bracket."""


@dataclass(frozen=True)
class Infeasible:
    """Falsy marker for 'no solution at this level', with the reason why."""

    reason: str

    def __bool__(self):
        return False


@dataclass(eq=False)
class HinfSolution:
    """Converged game Riccati solution at attenuation level gamma.

    Attributes
    ----------
    M : (n, n) ndarray
        Riccati fixed point, Q <= M < gamma^2 I.
    Lambda : (n, n) ndarray
        I + (B R^-1 B' - gamma^-2 I) M, the operator inverted by the gains.
    K : (m, n) ndarray
        Control gain, u = -K x.
    L : (n, n) ndarray
        Worst-case disturbance gain, w = L x.
    gamma : float
    iterations : int
        Fixed-point iterations used.
    """

    M: np.ndarray
    Lambda: np.ndarray
    K: np.ndarray
    L: np.ndarray
    gamma: float
    iterations: int


def _check_shapes(A, B, Q, R):
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got {A.shape}")
    if B.ndim != 2 or B.shape[0] != n:
        raise ValueError(f"B must be {n} x m, got {B.shape}")
    m = B.shape[1]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be {n} x {n}, got {Q.shape}")
    if R.shape != (m, m):
        raise ValueError(f"R must be {m} x {m}, got {R.shape}")
    return n, m


def _pd_with_margin(S, margin):
    """True if S - margin*I is positive definite (Cholesky test)."""
    n = S.shape[0]
    try:
        np.linalg.cholesky(S - margin * np.eye(n))
        return True
    except np.linalg.LinAlgError:
        return False


def solve_riccati(A, B, penalties, gamma, budget=RICCATI_BUDGET, tol=RICCATI_TOL):
    """Solve the game Riccati equation at level gamma.

    Parameters
    ----------
    A, B : ndarray
        Model matrices, A (n,n) and B (n,m); a 1-D B is read as one column.
    penalties : Penalties
        Positive definite Q and R.
    gamma : float
        Attenuation level to attempt.
    budget, tol : int, float
        Iteration cap and relative-change stopping tolerance.

    Returns
    -------
    HinfSolution or Infeasible
        Infeasible (falsy, with reason) when the iteration escapes the
        feasible region I - gamma^-2 M > 0, violates M < gamma^2 I, or
        fails to converge within the budget.  Structural problems
        (dimension mismatch, non-positive gamma) raise ValueError instead.

    Notes
    -----
    Every iterate is checked for min eig(I - gamma^-2 M) > 1e-10 before
    Lambda is inverted; by similarity, eig(Lambda) >= eig(I - gamma^-2 M),
    so the check also guards the solve.  Iterates are symmetrized each
    step to suppress drift.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    Q, R = penalties.Q, penalties.R
    n, _ = _check_shapes(A, B, Q, R)
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError("gamma must be positive")

    eye = np.eye(n)
    ginv2 = gamma ** -2
    G = B @ np.linalg.solve(R, B.T) - ginv2 * eye

    M = Q.copy()
    for it in range(1, budget + 1):
        if not _pd_with_margin(eye - ginv2 * M, FEAS_MARGIN):
            return Infeasible(
                f"I - gamma^-2 M lost positive definiteness at iteration {it} "
                f"(gamma={gamma:.6g})"
            )
        X = np.linalg.solve(eye + G @ M, A)  # Lambda^-1 A
        Mn = Q + A.T @ (M @ X)
        Mn = 0.5 * (Mn + Mn.T)
        delta = float(np.max(np.abs(Mn - M)))
        M = Mn
        if delta <= tol * max(1.0, float(np.max(np.abs(M)))):
            break
    else:
        return Infeasible(
            f"Riccati iteration did not converge in {budget} steps "
            f"(gamma={gamma:.6g})"
        )

    if not _pd_with_margin(eye - ginv2 * M, FEAS_MARGIN):
        return Infeasible(
            f"converged M violates M < gamma^2 I (gamma={gamma:.6g})"
        )
    Lam = eye + G @ M
    X = np.linalg.solve(Lam, A)
    MX = M @ X
    K = np.linalg.solve(R, B.T @ MX)
    L = ginv2 * MX
    return HinfSolution(M=M, Lambda=Lam, K=K, L=L, gamma=gamma, iterations=it)


_GAMMA_STAR_CACHE = {}


def optimal_attenuation(A, B, penalties, rel_tol=BISECT_REL_TOL,
                        gamma_max=GAMMA_MAX):
    """Smallest feasible attenuation level gamma* for (A, B), by bisection.

    The lower end of the initial bracket is sqrt(max eig Q), below which
    M >= Q already contradicts M < gamma^2 I; the upper end grows by
    doubling until feasible.  Raises BracketError if even `gamma_max`
    is infeasible (e.g. an unstabilizable pair).  Relative tolerance
    on the returned level: `rel_tol`.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    key = (A.tobytes(), B.tobytes(), penalties.Q.tobytes(),
           penalties.R.tobytes(), A.shape, B.shape, rel_tol, gamma_max)
    hit = _GAMMA_STAR_CACHE.get(key)
    if hit is not None:
        return hit

    lo = float(np.sqrt(np.max(np.linalg.eigvalsh(penalties.Q))))
    hi = max(2.0 * lo, 1.0)
    while not solve_riccati(A, B, penalties, hi):
        hi *= 2.0
        if hi > gamma_max:
            if solve_riccati(A, B, penalties, gamma_max):
                hi = gamma_max
                break
            raise BracketError(
                f"no feasible attenuation level up to {gamma_max:.3g}"
            )
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if solve_riccati(A, B, penalties, mid):
            hi = mid
        else:
            lo = mid
    _GAMMA_STAR_CACHE[key] = hi
    return hi


@dataclass(eq=False)
class FrequencyScan:
    """Largest singular value of the weighted closed loop over [0, pi].

    `omega`/`norm` hold the evaluated grid (plus the refined peak sample
    when the local search improved on the grid); `peak_norm` is the
    maximum over that grid and `peak_omega` the first frequency
    attaining it.
    """

    omega: np.ndarray
    norm: np.ndarray
    peak_omega: float
    peak_norm: float


def _weighted_output(penalties, K):
    """Stack [Q^(1/2); R^(1/2) K] for the regulated output."""
    dq, Vq = np.linalg.eigh(penalties.Q)
    dr, Vr = np.linalg.eigh(penalties.R)
    Qh = (Vq * np.sqrt(np.maximum(dq, 0.0))) @ Vq.T
    Rh = (Vr * np.sqrt(np.maximum(dr, 0.0))) @ Vr.T
    return np.vstack([Qh, Rh @ K])


def _golden_max(fun, lo, hi, tol=1e-12, max_iter=200):
    """Golden-section maximization of a unimodal scalar function."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    if fc >= fd:
        return c, fc
    return d, fd


def closed_loop_scan(A, B, K, penalties, grid_size=GRID_SIZE):
    """Frequency response norm of the closed loop u = -Kx.

    Evaluates the largest singular value of

        [Q^(1/2); R^(1/2) K] (e^(j w) I - A + B K)^-1

    on `grid_size` uniform frequencies over [0, pi], then runs one
    golden-section refinement around the grid peak.  The refined sample
    is inserted into the returned grid only when it strictly improves
    on the grid maximum, so flat responses keep the first-occurrence
    peak (e.g. an all-pass reports peak_omega = 0).

    Raises ValueError if A - BK is not Schur stable (spectral radius
    must stay below 1 - 1e-9), since the norm is unbounded otherwise.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    K = np.asarray(K, dtype=float)
    if K.ndim == 0:
        K = K.reshape(1, 1)
    elif K.ndim == 1:
        K = K.reshape(1, -1)
    n, _ = _check_shapes(A, B, penalties.Q, penalties.R)
    if int(grid_size) < 2:
        raise ValueError("grid_size must be at least 2")
    grid_size = int(grid_size)

    Acl = A - B @ K
    radius = float(np.max(np.abs(np.linalg.eigvals(Acl))))
    if radius >= 1.0 - 1e-9:
        raise ValueError(
            f"A - BK must be Schur stable (spectral radius {radius:.6g})"
        )
    C = _weighted_output(penalties, K)
    eye = np.eye(n)

    omegas = np.linspace(0.0, np.pi, grid_size)
    z = np.exp(1j * omegas)[:, None, None] * eye - Acl
    resolvent = np.linalg.solve(z, np.broadcast_to(eye, z.shape))
    tf = C @ resolvent
    norms = np.linalg.svd(tf, compute_uv=False)[:, 0]

    ipk = int(np.argmax(norms))
    peak_omega = float(omegas[ipk])
    peak_norm = float(norms[ipk])

    def sigma_at(w):
        res = np.linalg.solve(np.exp(1j * w) * eye - Acl, eye)
        return float(np.linalg.svd(C @ res, compute_uv=False)[0])

    lo = float(omegas[max(ipk - 1, 0)])
    hi = float(omegas[min(ipk + 1, grid_size - 1)])
    w_ref, s_ref = _golden_max(sigma_at, lo, hi)
    if s_ref > peak_norm * (1.0 + 1e-12):
        pos = int(np.searchsorted(omegas, w_ref))
        omegas = np.insert(omegas, pos, w_ref)
        norms = np.insert(norms, pos, s_ref)
        peak_omega, peak_norm = float(w_ref), float(s_ref)

    return FrequencyScan(omega=omegas, norm=norms,
                         peak_omega=peak_omega, peak_norm=peak_norm)
