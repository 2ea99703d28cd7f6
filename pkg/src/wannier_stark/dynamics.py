"""Trajectory integration and outcome classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .model import DomainError, PhaseState, SymmetricState, SystemParams
from .saddle import mu_squared, saddle_analytic


class Outcome(str, enum.Enum):
    DOUBLE = "DoubleEscape"
    SINGLE = "SingleEscape"
    SEQUENTIAL = "SequentialEscape"
    BOUND = "Bound"
    FAILURE = "Failure"


@dataclass(frozen=True)
class IntegratorControls:
    """Tolerances and stopping rules; ``max_time=None`` means ``200 / mu``.

    Escape requires ``z > z_cut_factor * z_s`` with outward ``p_z``; a radial
    turning point closer than ``return_factor * z_s`` to the nucleus counts
    as a return.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_time: float | None = None
    min_separation: float = 1e-3
    energy_drift_limit: float = 1e-8
    z_cut_factor: float = 10.0
    return_factor: float = 1.0
    max_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "min_separation", "energy_drift_limit",
                     "z_cut_factor", "return_factor"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.max_time is not None and not (np.isfinite(self.max_time) and self.max_time > 0):
            raise ValueError(f"max_time must be positive and finite, got {self.max_time}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def time_limit(self, params: SystemParams) -> float:
        if self.max_time is not None:
            return float(self.max_time)
        return 200.0 / np.sqrt(mu_squared(params))

    def with_(self, **changes) -> "IntegratorControls":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TrajectoryOutcome:
    label: Outcome
    exit_time: float
    exit_positions: np.ndarray   # (2, 3); NaN rows for electrons that did not escape
    exit_momenta: np.ndarray     # (2, 3)
    energy_drift: float
    detail: str = ""


_STATUS_TEXT = {
    _kernels.RUNNING: "time limit reached",
    _kernels.DOUBLE: "both electrons escaped",
    _kernels.BOTH_OUT_RETURN: "both escaped, one after a return",
    _kernels.NOT_DOUBLE: "stopped: return to the nucleus",
    _kernels.COLLISION: "near collision",
    _kernels.DRIFT: "energy drift above limit",
    _kernels.STEP_FAILURE: "step size underflow or step budget exhausted",
}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Result of :func:`integrate`; arrays are read-only."""

    params: SystemParams
    controls: IntegratorControls
    initial: np.ndarray
    times: np.ndarray
    states: np.ndarray
    final_time: float
    final_state: np.ndarray
    status: int
    escaped: np.ndarray
    returned: np.ndarray
    exit_times: np.ndarray
    exit_states: np.ndarray
    energy_drift: float
    n_steps: int
    outcome: TrajectoryOutcome = field(default=None)

    @property
    def energies(self) -> np.ndarray:
        Z, F = self.params.Z, self.params.F
        return np.array([_kernels.energy(s, Z, F) if np.all(np.isfinite(s)) else np.nan
                         for s in self.states])


def _as_vector(state) -> np.ndarray:
    if isinstance(state, SymmetricState):
        state = state.embed()
    if isinstance(state, PhaseState):
        return state.as_vector()
    y = np.array(state, dtype=float)
    if y.shape != (12,):
        raise DomainError(f"phase state must have 12 components, got shape {y.shape}")
    return y


def _run(y0, params, controls, sample_times, stop_not_double):
    if not np.all(np.isfinite(y0)):
        raise DomainError("non-finite initial state")
    z_s = saddle_analytic(params).z_s
    t_max = controls.time_limit(params)
    h0 = 1e-3 / np.sqrt(mu_squared(params))
    return _kernels.integrate(
        y0, float(params.Z), float(params.F), float(t_max), controls.rel_tol, controls.abs_tol,
        h0, controls.z_cut_factor * z_s, controls.return_factor * z_s, controls.min_separation,
        controls.energy_drift_limit, sample_times, stop_not_double, int(controls.max_steps))


def integrate(state0, params: SystemParams, controls: IntegratorControls | None = None,
              sample_times=None) -> Trajectory:
    """Integrate until both electrons escape or the time limit.

    A :class:`SymmetricState` is embedded in full space first (the mirror
    subspace is invariant). States are recorded exactly at ``sample_times``
    that fall before the stop; later ones stay NaN.
    """
    controls = controls or IntegratorControls()
    y0 = _as_vector(state0)
    if sample_times is None:
        sample_times = np.empty(0)
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.ndim != 1 or np.any(np.diff(sample_times) < 0):
        raise ValueError("sample_times must be a sorted 1-d array")
    (status, t, y, samples, n_s, escaped, exit_t, exit_y, returned, _r_turn, drift,
     steps) = _run(y0, params, controls, sample_times, False)
    arrays = [y0.copy(), sample_times.copy(), samples, y, escaped, returned, exit_t, exit_y]
    for a in arrays:
        a.setflags(write=False)
    traj = Trajectory(params, controls, arrays[0], arrays[1], samples, float(t), y, int(status),
                      escaped, returned, exit_t, exit_y, float(drift), int(steps))
    object.__setattr__(traj, "outcome", classify(traj, params, controls))
    return traj


def single_particle_energy(y, k: int, params: SystemParams) -> float:
    """Kinetic + nuclear + field energy of electron ``k``, repulsion ignored."""
    q = y[3 * k:3 * k + 3]
    p = y[6 + 3 * k:9 + 3 * k]
    return float(0.5 * p @ p - params.Z / np.linalg.norm(q) - params.F * q[2])


def classify(trajectory: Trajectory, params: SystemParams,
             controls: IntegratorControls | None = None) -> TrajectoryOutcome:
    st = trajectory.status
    y = trajectory.final_state
    pos = np.full((2, 3), np.nan)
    mom = np.full((2, 3), np.nan)
    for k in range(2):
        src = trajectory.exit_states[k] if trajectory.escaped[k] else y
        pos[k] = src[3 * k:3 * k + 3]
        mom[k] = src[6 + 3 * k:9 + 3 * k]
    detail = _STATUS_TEXT.get(st, f"status {st}")
    if st in (_kernels.COLLISION, _kernels.DRIFT, _kernels.STEP_FAILURE):
        label = Outcome.FAILURE
    elif st == _kernels.DOUBLE:
        label = Outcome.DOUBLE
    elif st == _kernels.BOTH_OUT_RETURN:
        label = Outcome.SEQUENTIAL
    elif trajectory.escaped.sum() == 1:
        other = 1 if trajectory.escaped[0] else 0
        label = Outcome.SINGLE if single_particle_energy(y, other, params) < 0 else Outcome.BOUND
    else:
        label = Outcome.BOUND
    return TrajectoryOutcome(label, trajectory.final_time, pos, mom, trajectory.energy_drift, detail)


def escape_probe(state0, params: SystemParams, controls: IntegratorControls | None = None):
    """Fast double-escape test that stops at the first return to the nucleus.

    Returns ``(double, failed, lead)`` where ``lead`` is the sign of
    ``z1 - z2`` when the run stops: +1 if electron 1 is ahead.
    """
    controls = controls or IntegratorControls()
    res = _run(_as_vector(state0), params, controls, np.empty(0), True)
    status, y = res[0], res[2]
    failed = status in (_kernels.COLLISION, _kernels.DRIFT, _kernels.STEP_FAILURE)
    return status == _kernels.DOUBLE, failed, int(np.sign(y[2] - y[5]))


def is_double_escape(state0, params: SystemParams, controls: IntegratorControls | None = None) -> tuple[bool, bool]:
    """``(double, failed)`` from :func:`escape_probe`."""
    ok, failed, _ = escape_probe(state0, params, controls)
    return ok, failed
