"""Disturbance strategies the experiments throw at the controllers.

Implemented kinds:

* ``zero``            -- w = 0.
* ``hinf_worst_case`` -- the saddle-point policy w = L* x of the known-model
  game, with L* taken from an H-infinity solution.
* ``sinusoid``        -- open-loop w_k = amplitude * sin(omega k + phase) * d.
* ``confusing``       -- mixes model responses so that a wrong model's
  one-step residual is exactly zero and the switching law never settles on
  the truth: w_k = (A_i - A_j) x_k + (B_i - B_j) u_k for target i, true j.
* ``external``        -- a supplied sequence, e.g. loaded from CSV.

Feedback strategies are tied to a *generating loop* (which controller's
closed loop produces the recorded sequence): the worst-case policy is
generated along the H-infinity loop, the confusing one along the adaptive
loop; zero/sinusoid/external sequences are open.  The recorded sequence is
then replayed verbatim on the other controller so both see the same inputs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import fileio, hinf

KINDS = ("zero", "hinf_worst_case", "sinusoid", "confusing", "external")
DEFAULT_LOOP = {
    "zero": "open",
    "sinusoid": "open",
    "external": "open",
    "hinf_worst_case": "hinf",
    "confusing": "minimax",
}


@dataclass(eq=False)
class DisturbanceSpec:
    """One disturbance strategy plus the context it needs at emit time.

    Only the fields relevant to `kind` are used.  `model_set` and
    `true_index` are runtime context attached when the spec is validated
    against an experiment; they are not serialized.
    """

    kind: str
    generating_loop: str = None
    amplitude: float = 1.0
    omega: float = 0.0
    phase: float = 0.0
    direction: np.ndarray = None
    target: int = None
    theta: np.ndarray = None
    sequence: np.ndarray = None
    L: np.ndarray = None
    model_set: object = field(default=None, repr=False)
    true_index: int = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.generating_loop is None:
            self.generating_loop = DEFAULT_LOOP[self.kind]


def hinf_worst_case(L_star, x_k):
    """Saddle-point adversary w = L* x."""
    return np.asarray(L_star, dtype=float) @ np.asarray(x_k, dtype=float)


def confusing_disturbance(ms, j, i, x_k, u_k):
    """Disturbance that makes model j's data look exactly like model i's.

    w_k = (A_i - A_j) x_k + (B_i - B_j) u_k, so under the true dynamics of
    model j the successor state is A_i x_k + B_i u_k and model i's one-step
    residual vanishes identically.  Requires i != j (the construction is
    vacuous otherwise).
    """
    if i == j:
        raise ValueError("confusing disturbance needs a target distinct from "
                         "the true model")
    Aj, Bj = ms.pair(j)
    Ai, Bi = ms.pair(i)
    x_k = np.asarray(x_k, dtype=float)
    u_k = np.atleast_1d(np.asarray(u_k, dtype=float))
    return (Ai - Aj) @ x_k + (Bi - Bj) @ u_k


def general_confusing(ms, theta, x_k, u_k):
    """Weighted mix of model responses: w = sum_f theta_f (A_f x + B_f u)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ms.size,):
        raise ValueError(f"theta must have {ms.size} entries, got {theta.shape}")
    x_k = np.asarray(x_k, dtype=float)
    u_k = np.atleast_1d(np.asarray(u_k, dtype=float))
    responses = ms.A @ x_k + ms.B @ u_k  # (F, n)
    return theta @ responses


def peak_sinusoid_spec(A, B, K, penalties, grid_size=hinf.GRID_SIZE):
    """Unit sinusoid at the closed loop's worst frequency.

    Scans the weighted closed-loop frequency response for u = -Kx, places a
    unit-amplitude, zero-phase sinusoid at the peak frequency, and points it
    along the right singular vector of the response there.  The singular
    vector is complex in general; it is made real by rotating its largest
    entry to the positive real axis, taking the real part, and
    renormalizing.
    """
    scan = hinf.closed_loop_scan(A, B, K, penalties, grid_size)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n = A.shape[0]
    Acl = A - B @ K
    C = hinf._weighted_output(penalties, K)
    resolvent = np.linalg.solve(
        np.exp(1j * scan.peak_omega) * np.eye(n) - Acl, np.eye(n)
    )
    _, _, Vh = np.linalg.svd(C @ resolvent)
    v = Vh[0].conj()
    lead = v[int(np.argmax(np.abs(v)))]
    v = v * (lead.conj() / abs(lead))
    d = np.real(v)
    d = d / np.linalg.norm(d)
    return DisturbanceSpec(kind="sinusoid", amplitude=1.0,
                           omega=scan.peak_omega, phase=0.0, direction=d)


def emit(spec, k, x_k, u_k):
    """Evaluate the strategy at step k given the current state and input."""
    if spec.kind == "zero":
        return np.zeros(np.asarray(x_k).shape[0])
    if spec.kind == "hinf_worst_case":
        if spec.L is None:
            raise ValueError(
                "hinf_worst_case spec has no L gain attached; solve the "
                "H-infinity problem for the generating model first"
            )
        return hinf_worst_case(spec.L, x_k)
    if spec.kind == "sinusoid":
        return (spec.amplitude * np.sin(spec.omega * k + spec.phase)
                * spec.direction)
    if spec.kind == "confusing":
        if spec.model_set is None or spec.true_index is None:
            raise ValueError("confusing spec is not bound to an experiment "
                             "(missing model set / true index)")
        if spec.theta is None:
            return confusing_disturbance(spec.model_set, spec.true_index,
                                         spec.target, x_k, u_k)
        theta = spec.theta
        if theta.ndim == 2:
            if k >= theta.shape[0]:
                raise ValueError(f"theta schedule exhausted at step {k}")
            theta = theta[k]
        return general_confusing(spec.model_set, theta, x_k, u_k)
    if spec.kind == "external":
        if k >= spec.sequence.shape[0]:
            raise ValueError(f"external sequence exhausted at step {k}")
        return spec.sequence[k]
    raise ValueError(f"unknown disturbance kind {spec.kind!r}")


def validate_spec(spec, ms, true_index, horizon):
    """Check a spec against an experiment and bind runtime context.

    Normalizes array fields, applies kind-specific checks (unit direction,
    valid confusing target, sequence width), and attaches the model set and
    true index that `emit` needs for the confusing kind.  Raises ValueError
    with a config-style message on any inconsistency.
    """
    if spec.kind not in KINDS:
        raise ValueError(f"unknown disturbance kind {spec.kind!r}")
    loops = ("open",) if DEFAULT_LOOP[spec.kind] == "open" else ("hinf", "minimax")
    if spec.generating_loop not in loops:
        raise ValueError(
            f"disturbance kind {spec.kind!r} cannot declare generating_loop "
            f"{spec.generating_loop!r} (allowed: {', '.join(loops)})"
        )
    n = ms.n
    if spec.kind == "sinusoid":
        spec.amplitude = float(spec.amplitude)
        spec.omega = float(spec.omega)
        spec.phase = float(spec.phase)
        if spec.direction is None:
            if n != 1:
                raise ValueError("sinusoid needs an explicit direction when n > 1")
            spec.direction = np.ones(1)
        spec.direction = np.asarray(spec.direction, dtype=float).reshape(-1)
        if spec.direction.shape[0] != n:
            raise ValueError(
                f"sinusoid direction has length {spec.direction.shape[0]}, "
                f"state dimension is {n}"
            )
        norm = float(np.linalg.norm(spec.direction))
        if norm <= 0:
            raise ValueError("sinusoid direction must be nonzero")
        if abs(norm - 1.0) > 1e-12:
            spec.direction = spec.direction / norm
    elif spec.kind == "confusing":
        if spec.target is None:
            raise ValueError("confusing disturbance needs a target model index")
        spec.target = int(spec.target)
        if not 1 <= spec.target <= ms.size:
            raise ValueError(
                f"confusing target {spec.target} outside 1..{ms.size}"
            )
        if spec.target == true_index:
            raise ValueError(
                "confusing target must differ from the true model index"
            )
        if spec.theta is not None:
            spec.theta = np.asarray(spec.theta, dtype=float)
            if spec.theta.ndim == 1:
                if spec.theta.shape != (ms.size,):
                    raise ValueError(
                        f"theta must have {ms.size} entries, got "
                        f"{spec.theta.shape[0]}"
                    )
            elif spec.theta.ndim == 2:
                if spec.theta.shape[1] != ms.size:
                    raise ValueError(
                        f"theta schedule rows must have {ms.size} entries"
                    )
                if spec.theta.shape[0] < horizon:
                    raise ValueError(
                        f"theta schedule covers {spec.theta.shape[0]} steps, "
                        f"horizon is {horizon}"
                    )
            else:
                raise ValueError("theta must be a vector or a step-by-F array")
        spec.model_set = ms
        spec.true_index = true_index
    elif spec.kind == "external":
        if spec.sequence is None:
            raise ValueError("external disturbance needs a sequence")
        spec.sequence = np.asarray(spec.sequence, dtype=float)
        if spec.sequence.ndim == 1:
            spec.sequence = spec.sequence.reshape(-1, 1)
        if spec.sequence.ndim != 2 or spec.sequence.shape[1] != n:
            raise ValueError(
                f"external sequence must be (steps, {n}), got "
                f"{spec.sequence.shape}"
            )
    elif spec.kind == "hinf_worst_case":
        if spec.L is not None:
            spec.L = np.asarray(spec.L, dtype=float)
            if spec.L.shape != (n, n):
                raise ValueError(f"L gain must be {n}x{n}, got {spec.L.shape}")
    return spec


_FROM_DICT_KEYS = {
    "zero": set(),
    "hinf_worst_case": set(),
    "sinusoid": {"amplitude", "omega", "phase", "direction"},
    "confusing": {"target", "theta"},
    "external": {"sequence", "path"},
}


def spec_from_dict(doc, n, base_dir=""):
    """Build a spec from a config 'disturbance' section."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("disturbance section must be an object with 'kind'")
    kind = doc["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown disturbance kind {kind!r}")
    allowed = _FROM_DICT_KEYS[kind] | {"kind", "generating_loop"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(
            f"disturbance kind {kind!r} does not accept keys: "
            f"{', '.join(sorted(unknown))}"
        )
    kwargs = {"kind": kind}
    if "generating_loop" in doc:
        kwargs["generating_loop"] = doc["generating_loop"]
    if kind == "sinusoid":
        kwargs["amplitude"] = doc.get("amplitude", 1.0)
        kwargs["omega"] = doc.get("omega", 0.0)
        kwargs["phase"] = doc.get("phase", 0.0)
        if "direction" in doc:
            kwargs["direction"] = np.asarray(doc["direction"], dtype=float)
    elif kind == "confusing":
        if "target" in doc:
            kwargs["target"] = doc["target"]
        if "theta" in doc:
            kwargs["theta"] = np.asarray(doc["theta"], dtype=float)
    elif kind == "external":
        if "path" in doc:
            kwargs["sequence"] = load_sequence(
                os.path.join(base_dir, doc["path"])
            )
        elif "sequence" in doc:
            kwargs["sequence"] = np.asarray(doc["sequence"], dtype=float)
    return DisturbanceSpec(**kwargs)


def spec_to_dict(spec):
    """Serializable view of a spec (runtime context and L are dropped)."""
    doc = {"kind": spec.kind, "generating_loop": spec.generating_loop}
    if spec.kind == "sinusoid":
        doc["amplitude"] = spec.amplitude
        doc["omega"] = spec.omega
        doc["phase"] = spec.phase
        doc["direction"] = np.asarray(spec.direction, dtype=float).tolist()
    elif spec.kind == "confusing":
        doc["target"] = spec.target
        if spec.theta is not None:
            doc["theta"] = np.asarray(spec.theta, dtype=float).tolist()
    elif spec.kind == "external":
        doc["sequence"] = np.asarray(spec.sequence, dtype=float).tolist()
    return doc


def specs_equal(a, b):
    if a.kind != b.kind or a.generating_loop != b.generating_loop:
        return False
    if a.kind == "sinusoid":
        return (a.amplitude == b.amplitude and a.omega == b.omega
                and a.phase == b.phase
                and np.array_equal(a.direction, b.direction))
    if a.kind == "confusing":
        theta_eq = (a.theta is None) == (b.theta is None) and (
            a.theta is None or np.array_equal(a.theta, b.theta)
        )
        return a.target == b.target and theta_eq
    if a.kind == "external":
        return np.array_equal(a.sequence, b.sequence)
    return True


def save_sequence(path, W):
    """Export a disturbance sequence as CSV with columns k, w_1..w_n."""
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W.reshape(-1, 1)
    header = ["k"] + [f"w_{i + 1}" for i in range(W.shape[1])]
    rows = [[k] + list(W[k]) for k in range(W.shape[0])]
    fileio.write_csv(path, header, rows)


def load_sequence(path):
    """Read a disturbance sequence CSV written by save_sequence."""
    header, rows = fileio.read_csv_columns(path)
    if not header or header[0] != "k":
        raise ValueError(f"{path}: expected first column 'k'")
    W = np.array([[c for c in row[1:]] for row in rows], dtype=float)
    return W
