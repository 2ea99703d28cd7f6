"""Two-electron atom in a static field: potentials, forces and flows.

The field points along -z so that the electrons are pulled toward +z; the
potential energy is ``-Z/|r1| - Z/|r2| + 1/|r1 - r2| - F (z1 + z2)``.
In the mirror-symmetric subspace (equal ``rho`` and ``z``, opposite azimuth)
this reduces to ``-2Z/sqrt(r^2 + z^2) + 1/(2r) - 2 F z`` with kinetic
energy ``(p_r^2 + p_z^2) / 4``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


class DomainError(ValueError):
    """Input outside the domain of a potential (collision, r <= 0, ...)."""


@dataclass(frozen=True)
class SystemParams:
    """Ion charge ``Z`` and field strength ``F`` in atomic units."""

    Z: float
    F: float

    def __post_init__(self):
        if not np.isfinite(self.Z) or self.Z < 1:
            raise DomainError(f"Z must be >= 1, got {self.Z}")
        if not np.isfinite(self.F) or self.F <= 0:
            raise DomainError(f"F must be > 0, got {self.F}")

    @property
    def length_scale(self) -> float:
        """``(2a - 1)^(1/4) / sqrt(F)``, twice the saddle's transverse radius."""
        a = (2.0 * self.Z**2) ** (1.0 / 3.0)
        return (2.0 * a - 1.0) ** 0.25 / np.sqrt(self.F)


@dataclass(frozen=True)
class SymmetricState:
    r: float
    z: float
    p_r: float = 0.0
    p_z: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"r must be > 0, got {self.r}")

    def embed(self, phi: float = 0.0) -> "PhaseState":
        """Full-space state with electrons at azimuth ``phi`` and ``phi + pi``.

        Each electron carries half of ``(p_r, p_z)``, which makes the full
        kinetic energy equal ``(p_r^2 + p_z^2) / 4``.
        """
        c, s = np.cos(phi), np.sin(phi)
        q = np.array([self.r * c, self.r * s, self.z, -self.r * c, -self.r * s, self.z])
        hp_r, hp_z = 0.5 * self.p_r, 0.5 * self.p_z
        p = np.array([hp_r * c, hp_r * s, hp_z, -hp_r * c, -hp_r * s, hp_z])
        return PhaseState(q, p)


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Positions ``q = (x1, y1, z1, x2, y2, z2)`` and conjugate momenta ``p``."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _check_q(np.array(self.q, dtype=float).reshape(6)).copy()
        p = np.array(self.p, dtype=float).reshape(6)
        if not np.all(np.isfinite(p)):
            raise DomainError("non-finite momenta")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_vector(cls, y) -> "PhaseState":
        y = np.asarray(y, dtype=float)
        return cls(y[:6], y[6:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    def is_mirror_symmetric(self, tol: float = 0.0) -> bool:
        return mirror_asymmetry(self.as_vector()) <= tol


def mirror_asymmetry(y) -> float:
    """Max deviation from the mirror map (x, y, z) -> (-x, -y, z) between electrons."""
    y = np.asarray(y, dtype=float)
    s = np.array([-1.0, -1.0, 1.0])
    dev = np.max(np.abs(y[0:3] - s * y[3:6]))
    if y.shape[-1] == 12:
        dev = max(dev, np.max(np.abs(y[6:9] - s * y[9:12])))
    return float(dev)


@dataclass(frozen=True, eq=False)
class ContourGrid:
    r_axis: np.ndarray
    z_axis: np.ndarray
    V: np.ndarray  # shape (len(z_axis), len(r_axis))

    def discrete_saddle(self) -> tuple[float, float]:
        """Grid point of the pass: max over z of the valley floor min_r V."""
        row_min = self.V.min(axis=1)
        i = int(np.argmax(row_min))
        j = int(np.argmin(self.V[i]))
        return float(self.r_axis[j]), float(self.z_axis[i])


def _check_q(q):
    q = np.asarray(q, dtype=float)
    if q.shape != (6,):
        raise DomainError(f"expected 6 coordinates, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise DomainError("non-finite coordinates")
    r1 = np.linalg.norm(q[:3])
    r2 = np.linalg.norm(q[3:])
    r12 = np.linalg.norm(q[:3] - q[3:])
    if r1 == 0 or r2 == 0 or r12 == 0:
        raise DomainError("coincident particles")
    return q


def potential_symmetric(r: float, z: float, params: SystemParams) -> float:
    if not r > 0:
        raise DomainError(f"r must be > 0, got {r}")
    rho = np.hypot(r, z)
    return float(-2.0 * params.Z / rho + 0.5 / r - 2.0 * params.F * z)


def hamiltonian_symmetric(state: SymmetricState, params: SystemParams) -> float:
    kin = 0.25 * (state.p_r**2 + state.p_z**2)
    return kin + potential_symmetric(state.r, state.z, params)


def grad_potential_symmetric(r: float, z: float, params: SystemParams) -> np.ndarray:
    if not r > 0:
        raise DomainError(f"r must be > 0, got {r}")
    rho3 = np.hypot(r, z) ** 3
    Z, F = params.Z, params.F
    return np.array([2 * Z * r / rho3 - 0.5 / r**2, 2 * Z * z / rho3 - 2 * F])


def potential_full(q, params: SystemParams) -> float:
    return float(_kernels.potential(_check_q(q), params.Z, params.F))


def hamiltonian_full(state: PhaseState, params: SystemParams) -> float:
    return 0.5 * float(state.p @ state.p) + potential_full(state.q, params)


def grad_potential_full(q, params: SystemParams) -> np.ndarray:
    out = np.empty(6)
    _kernels.gradient(_check_q(q), params.Z, params.F, out)
    return out


def hessian_potential_full(q, params: SystemParams) -> np.ndarray:
    """Analytic 6x6 Hessian; symmetric by construction."""
    h = _kernels.hessian(_check_q(q), params.Z, params.F)
    return 0.5 * (h + h.T)


def equations_of_motion(state, params: SystemParams):
    """Hamilton's equations for either state type.

    Returns ``(dq/dt, dp/dt)``; for a :class:`SymmetricState` this is
    ``((dr, dz), (dp_r, dp_z))`` with ``dr/dt = p_r / 2``.
    """
    if isinstance(state, SymmetricState):
        g = grad_potential_symmetric(state.r, state.z, params)
        return np.array([0.5 * state.p_r, 0.5 * state.p_z]), -g
    if isinstance(state, PhaseState):
        g = grad_potential_full(state.q, params)
        return state.p.copy(), -g
    raise TypeError(f"unsupported state type {type(state).__name__}")


def contour_grid(params: SystemParams, r_range=(0.05, 3.0), z_range=(0.0, 4.0),
                 n_r: int = 200, n_z: int = 200) -> ContourGrid:
    """Potential in the symmetric subspace on a regular (z, r) grid."""
    if n_r < 2 or n_z < 2:
        raise DomainError("need at least 2 points per axis")
    if min(r_range) <= 0:
        raise DomainError("r range must exclude r <= 0")
    r = np.linspace(r_range[0], r_range[1], n_r)
    z = np.linspace(z_range[0], z_range[1], n_z)
    R, Zg = np.meshgrid(r, z)
    V = -2.0 * params.Z / np.hypot(R, Zg) + 0.5 / R - 2.0 * params.F * Zg
    if not np.all(np.isfinite(V)):
        raise DomainError("grid touches a singularity")
    return ContourGrid(r, z, V)
