"""Finite model sets, quadratic penalties, and experiment configuration.

A plant is one pair (A, B) drawn from a finite family; the controller knows
the family but not which member generates the data.  Everything downstream
(synthesis, simulation, regret) consumes the containers defined here.
Model indices are 1-based throughout, matching the convention used in the
file formats and the CLI.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import disturbance as _dist

SYMMETRY_TOL = 1e-9
PD_MIN_EIG = 1e-12


class ConfigError(ValueError):
    """Raised for malformed configs: bad dimensions, bad values, bad files."""


def enforce_symmetry(M, name="matrix", tol=SYMMETRY_TOL):
    """Return the symmetrized copy of M, rejecting real asymmetry.

    Asymmetry up to `tol` (max-abs of M - M.T) is treated as numerical noise
    and averaged away; anything larger is an input error, not noise.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {M.shape}")
    gap = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if gap > tol:
        raise ConfigError(f"{name} is asymmetric by {gap:.3e} (limit {tol:.1e})")
    return 0.5 * (M + M.T)


@dataclass(eq=False)
class ModelSet:
    """Ordered family of linear models x+ = A_i x + B_i u + w, i = 1..size."""

    A: np.ndarray  # (size, n, n)
    B: np.ndarray  # (size, n, m)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.A.ndim != 3 or self.B.ndim != 3:
            raise ConfigError("ModelSet expects stacked A (F,n,n) and B (F,n,m)")
        F, n, n2 = self.A.shape
        if F < 1:
            raise ConfigError("model set must contain at least one model")
        if n != n2:
            raise ConfigError(f"A matrices must be square, got {self.A.shape[1:]}")
        if self.B.shape[0] != F or self.B.shape[1] != n:
            raise ConfigError(
                f"B stack shape {self.B.shape} does not match A stack {self.A.shape}"
            )

    @classmethod
    def from_pairs(cls, pairs):
        """Build from an ordered list of (A_i, B_i) pairs."""
        if not pairs:
            raise ConfigError("model set must contain at least one model")
        As, Bs = [], []
        for k, (A, B) in enumerate(pairs, start=1):
            A = np.asarray(A, dtype=float)
            B = np.asarray(B, dtype=float)
            if B.ndim == 1:
                B = B.reshape(-1, 1)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ConfigError(f"model {k}: A must be square, got {A.shape}")
            if B.shape[0] != A.shape[0]:
                raise ConfigError(
                    f"model {k}: B has {B.shape[0]} rows, expected {A.shape[0]}"
                )
            As.append(A)
            Bs.append(B)
        shapes_a = {a.shape for a in As}
        shapes_b = {b.shape for b in Bs}
        if len(shapes_a) > 1 or len(shapes_b) > 1:
            raise ConfigError("all models must share the same state/input dimensions")
        return cls(np.stack(As), np.stack(Bs))

    @property
    def size(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.B.shape[2]

    def pair(self, i):
        """Return (A_i, B_i) for 1-based index i."""
        if not 1 <= i <= self.size:
            raise ConfigError(f"model index {i} outside 1..{self.size}")
        return self.A[i - 1], self.B[i - 1]

    def __eq__(self, other):
        if not isinstance(other, ModelSet):
            return NotImplemented
        return np.array_equal(self.A, other.A) and np.array_equal(self.B, other.B)


@dataclass(eq=False)
class Penalties:
    """State and input weights of the quadratic stage cost |x|_Q^2 + |u|_R^2."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.Q = enforce_symmetry(self.Q, "Q")
        self.R = enforce_symmetry(self.R, "R")
        for name, M in (("Q", self.Q), ("R", self.R)):
            lo = float(np.min(np.linalg.eigvalsh(M)))
            if lo <= PD_MIN_EIG:
                raise ConfigError(
                    f"{name} must be positive definite (min eig {lo:.3e})"
                )

    def __eq__(self, other):
        if not isinstance(other, Penalties):
            return NotImplemented
        return np.array_equal(self.Q, other.Q) and np.array_equal(self.R, other.R)


@dataclass(eq=False)
class ExperimentConfig:
    """One simulation experiment: who the plant really is and what hits it."""

    model_set: ModelSet
    penalties: Penalties
    true_index: int
    horizon: int
    gamma: float
    disturbance: _dist.DisturbanceSpec
    x0: np.ndarray = field(default=None)

    def __post_init__(self):
        ms = self.model_set
        if self.penalties.Q.shape[0] != ms.n:
            raise ConfigError(
                f"Q is {self.penalties.Q.shape[0]}x..., state dimension is {ms.n}"
            )
        if self.penalties.R.shape[0] != ms.m:
            raise ConfigError(
                f"R is {self.penalties.R.shape[0]}x..., input dimension is {ms.m}"
            )
        if not 1 <= self.true_index <= ms.size:
            raise ConfigError(
                f"true_index {self.true_index} outside 1..{ms.size}"
            )
        self.horizon = int(self.horizon)
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        self.gamma = float(self.gamma)
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.x0 is None:
            self.x0 = np.ones(ms.n)
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if self.x0.shape[0] != ms.n:
            raise ConfigError(f"x0 has length {self.x0.shape[0]}, expected {ms.n}")
        _dist.validate_spec(self.disturbance, ms, self.true_index, self.horizon)

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return (
            self.model_set == other.model_set
            and self.penalties == other.penalties
            and self.true_index == other.true_index
            and self.horizon == other.horizon
            and self.gamma == other.gamma
            and np.array_equal(self.x0, other.x0)
            and _dist.specs_equal(self.disturbance, other.disturbance)
        )


def _matrix_from_rows(rows, name):
    try:
        M = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected numeric rows ({exc})") from None
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(1, -1)
    return M


def load_config(path):
    """Read an experiment config from a JSON file.

    Layout::

        {
          "models": [{"A": [[...], ...], "B": [[...], ...]}, ...],
          "penalties": {"Q": [[...], ...], "R": [[...], ...]},
          "experiment": {"true_index": 2, "x0": [...], "horizon": 100,
                         "gamma": 31.0},
          "disturbance": {"kind": "sinusoid", ...}
        }

    Matrices are row-major lists of rows; a B given as a flat list is read
    as a single input column.  `x0` may be omitted (defaults to all ones).
    An external disturbance may point at a CSV via "path", resolved
    relative to the config file.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    for section in ("models", "penalties", "experiment", "disturbance"):
        if section not in raw:
            raise ConfigError(f"config is missing the '{section}' section")

    models = raw["models"]
    if not isinstance(models, list) or not models:
        raise ConfigError("'models' must be a non-empty list")
    pairs = []
    for k, entry in enumerate(models, start=1):
        if not isinstance(entry, dict) or "A" not in entry or "B" not in entry:
            raise ConfigError(f"model {k} must be an object with 'A' and 'B'")
        A = _matrix_from_rows(entry["A"], f"model {k} A")
        B = _matrix_from_rows(entry["B"], f"model {k} B")
        if B.shape[0] == 1 and A.shape[0] != 1:
            B = B.reshape(-1, 1)  # flat list means one input column
        pairs.append((A, B))
    ms = ModelSet.from_pairs(pairs)

    pen = raw["penalties"]
    if not isinstance(pen, dict) or "Q" not in pen or "R" not in pen:
        raise ConfigError("'penalties' must contain Q and R")
    penalties = Penalties(
        _matrix_from_rows(pen["Q"], "Q"), _matrix_from_rows(pen["R"], "R")
    )

    exp = raw["experiment"]
    if not isinstance(exp, dict):
        raise ConfigError("'experiment' must be an object")
    for key in ("true_index", "horizon", "gamma"):
        if key not in exp:
            raise ConfigError(f"'experiment' is missing '{key}'")

    spec = _dist.spec_from_dict(raw["disturbance"], ms.n, os.path.dirname(path))
    cfg = ExperimentConfig(
        model_set=ms,
        penalties=penalties,
        true_index=int(exp["true_index"]),
        horizon=int(exp["horizon"]),
        gamma=float(exp["gamma"]),
        disturbance=spec,
        x0=exp.get("x0"),
    )
    return cfg


def save_config(cfg, path):
    """Write a config back to JSON; load_config(save_config(cfg)) == cfg."""
    doc = {
        "models": [
            {"A": cfg.model_set.A[i].tolist(), "B": cfg.model_set.B[i].tolist()}
            for i in range(cfg.model_set.size)
        ],
        "penalties": {
            "Q": cfg.penalties.Q.tolist(),
            "R": cfg.penalties.R.tolist(),
        },
        "experiment": {
            "true_index": cfg.true_index,
            "x0": cfg.x0.tolist(),
            "horizon": cfg.horizon,
            "gamma": cfg.gamma,
        },
        "disturbance": _dist.spec_to_dict(cfg.disturbance),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def lqr_fixed_point(A, B, Q, R, budget=10_000, tol=1e-10):
    """Iterate the standard LQR Riccati map P <- Q + A'PA - A'PB(R+B'PB)^-1 B'PA.

    Returns (P, iterations) on convergence (relative change <= tol), or
    (None, budget) if the budget runs out, which for a detectable (Q > 0)
    problem means the pair is not stabilizable.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    P = np.array(Q, dtype=float)
    for it in range(1, budget + 1):
        PA = P @ A
        PB = P @ B
        G = R + B.T @ PB
        Pn = Q + A.T @ PA - PA.T @ B @ np.linalg.solve(G, PB.T @ A)
        Pn = 0.5 * (Pn + Pn.T)
        delta = float(np.max(np.abs(Pn - P)))
        scale = max(1.0, float(np.max(np.abs(Pn))))
        P = Pn
        if delta <= tol * scale:
            return P, it
        if scale > 1e100:
            break  # unbounded growth, give up before overflow
    return None, budget


@dataclass
class StabilizabilityReport:
    index: int
    stabilizable: bool
    iterations: int


def validate_stabilizability(ms, penalties, budget=10_000, tol=1e-10):
    """Check each (A_i, B_i) by whether its LQR Riccati iteration converges.

    Convergence of the fixed point from P = Q certifies a stabilizing
    solution exists; exhausting the budget flags the pair as not
    stabilizable under these penalties.
    """
    reports = []
    for i in range(1, ms.size + 1):
        A, B = ms.pair(i)
        P, its = lqr_fixed_point(A, B, penalties.Q, penalties.R, budget, tol)
        reports.append(StabilizabilityReport(i, P is not None, its))
    return reports
