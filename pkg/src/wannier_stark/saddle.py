"""The field-induced saddle: location, stability spectrum and exponents."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import DomainError, SystemParams, grad_potential_full, hessian_potential_full, potential_full

ZERO_MODE_TOL = 1e-8


class NoConvergenceError(RuntimeError):
    pass


class SingularJacobianError(RuntimeError):
    pass


class ClassificationError(RuntimeError):
    """Saddle Hessian does not have the (2 negative, 1 zero, 3 positive) signature."""


class SpectrumMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC_HESSIAN = "numeric_hessian"


def shape_parameter(Z: float) -> float:
    """``a = (2 Z^2)^(1/3)``."""
    if not Z > 0:
        raise DomainError(f"Z must be > 0, got {Z}")
    return float(np.cbrt(2.0 * Z * Z))


@dataclass(frozen=True, eq=False)
class SaddleInfo:
    r_s: float
    z_s: float
    V_s: float
    a: float
    embedded_config: np.ndarray

    @property
    def locus_ratio(self) -> float:
        return self.r_s / self.z_s


def embed_saddle(r_s: float, z_s: float) -> np.ndarray:
    """Electrons in the x-z plane at (r_s, 0, z_s) and (-r_s, 0, z_s)."""
    return np.array([r_s, 0.0, z_s, -r_s, 0.0, z_s])


def saddle_analytic(params: SystemParams) -> SaddleInfo:
    a = shape_parameter(params.Z)
    b = 2.0 * a - 1.0
    sf = np.sqrt(params.F)
    r_s = b**0.25 / (2.0 * sf)
    z_s = b**0.75 / (2.0 * sf)
    V_s = -2.0 * b**0.75 * sf
    return SaddleInfo(r_s, z_s, V_s, a, embed_saddle(r_s, z_s))


def _rotation_generator(q):
    # d/dphi of a common rotation about z
    return np.array([-q[1], q[0], 0.0, -q[4], q[3], 0.0])


def saddle_numeric(params: SystemParams, guess=None, tol: float = 1e-12,
                   max_iter: int = 50) -> tuple[SaddleInfo, int]:
    """Newton iteration on the gradient with the rotation mode projected out.

    Returns the saddle and the iteration count, where the final
    convergence check counts as an iteration (an exact guess gives 1). Iterates that
    wander off (collision, escape beyond 5x the initial scale) or settle on
    a non mirror-symmetric stationary point raise :class:`NoConvergenceError`.
    """
    if guess is None:
        guess = saddle_analytic(params).embedded_config
    q = np.array(guess, dtype=float)
    bound = 5.0 * max(np.linalg.norm(q), params.length_scale)
    for it in range(max_iter + 1):
        try:
            g = grad_potential_full(q, params)
        except DomainError as exc:
            raise NoConvergenceError(f"iterate hit a collision: {exc}") from exc
        if np.linalg.norm(g) < tol:
            break
        if it == max_iter:
            raise NoConvergenceError(
                f"no convergence after {max_iter} iterations, |grad| = {np.linalg.norm(g):.3e}")
        t = _rotation_generator(q)
        tn = np.linalg.norm(t)
        if tn == 0:
            raise SingularJacobianError("rotation direction undefined (electrons on the axis)")
        t /= tn
        P = np.eye(6) - np.outer(t, t)
        J = P @ hessian_potential_full(q, params) @ P + np.outer(t, t)
        try:
            step = np.linalg.solve(J, -P @ g)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(str(exc)) from exc
        q = q + step
        if not np.all(np.isfinite(q)) or np.linalg.norm(q) > bound:
            raise NoConvergenceError("Newton iterate left the search region")
    else:  # pragma: no cover
        raise NoConvergenceError("no convergence")

    # rotate back into the x-z plane, electron 1 at +x
    phi = np.arctan2(q[1], q[0])
    c, s = np.cos(-phi), np.sin(-phi)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    q1, q2 = rot @ q[:3], rot @ q[3:]
    sym = max(abs(q1[0] + q2[0]), abs(q1[1]), abs(q2[1]), abs(q1[2] - q2[2]))
    if sym > 1e-6 * params.length_scale or q1[2] <= 0:
        raise NoConvergenceError("converged to a stationary point other than the symmetric saddle")
    r_s = 0.5 * (q1[0] - q2[0])
    z_s = 0.5 * (q1[2] + q2[2])
    cfg = embed_saddle(r_s, z_s)
    return SaddleInfo(r_s, z_s, potential_full(cfg, params), shape_parameter(params.Z), cfg), it + 1


def mu_squared(params: SystemParams) -> float:
    """Curvature along the reaction coordinate (in-subspace unstable mode)."""
    a = shape_parameter(params.Z)
    b = 2.0 * a - 1.0
    return float((np.sqrt(50 * a - 49 + 12 / a) - np.sqrt(b)) * params.F**1.5 / b**1.25)


def nu_squared(params: SystemParams) -> float:
    """Curvature of the desymmetrizing unstable mode."""
    a = shape_parameter(params.Z)
    b = 2.0 * a - 1.0
    return float((np.sqrt(32 * a - 28 + 6 / a) + 2 * np.sqrt(b)) * params.F**1.5 / b**1.25)


def exponent_from_a(a: float) -> float:
    b = 2.0 * a - 1.0
    num = np.sqrt(32 * a - 28 + 6 / a) + 2 * np.sqrt(b)
    den = np.sqrt(50 * a - 49 + 12 / a) - np.sqrt(b)
    return float(np.sqrt(num / den))


def threshold_exponent(params: SystemParams) -> float:
    """``alpha = nu / mu``; the field strength cancels."""
    return exponent_from_a(shape_parameter(params.Z))


def wannier_exponent(Z: float) -> float:
    """Zero-field Wannier exponent ``(sqrt((100 Z - 9) / (4 Z - 1)) - 1) / 4``."""
    if not Z > 0.25:
        raise DomainError(f"Wannier exponent needs Z > 1/4, got {Z}")
    return float(0.25 * (np.sqrt((100.0 * Z - 9.0) / (4.0 * Z - 1.0)) - 1.0))


@dataclass(frozen=True, eq=False)
class StabilitySpectrum:
    mu: float
    nu: float
    omega: np.ndarray
    neutral_count: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns: x, y, u1, u2, u3, neutral
    source: SpectrumMethod

    @property
    def e_x(self):
        return self.eigenvectors[:, 0]

    @property
    def e_y(self):
        return self.eigenvectors[:, 1]

    @property
    def e_u(self):
        return self.eigenvectors[:, 2:5]

    @property
    def e_neutral(self):
        return self.eigenvectors[:, 5]


def mirror(v):
    """Swap electrons and reflect through the field axis."""
    v = np.asarray(v)
    return np.array([-v[3], -v[4], v[5], -v[0], -v[1], v[2]])


def _orient(v, pick):
    return -v if v[pick] < 0 else v


def stability_spectrum(params: SystemParams, method="numeric_hessian",
                       saddle: SaddleInfo | None = None) -> StabilitySpectrum:
    """Eigen-decomposition of the potential Hessian at the saddle.

    The in-subspace unstable vector (mirror-even) is ``x``, oriented so
    both electrons move to larger z; the mirror-odd one is ``y``, oriented
    so electron 1 moves outward. With ``method="closed_form"`` mu and nu
    come from the closed-form curvatures, otherwise from the eigenvalues.
    """
    method = SpectrumMethod(method)
    if saddle is None:
        saddle = saddle_analytic(params)
    H = hessian_potential_full(saddle.embedded_config, params)
    w, v = np.linalg.eigh(H)
    wn = w / params.F**1.5
    neg = np.flatnonzero(wn < -ZERO_MODE_TOL)
    zero = np.flatnonzero(np.abs(wn) <= ZERO_MODE_TOL)
    pos = np.flatnonzero(wn > ZERO_MODE_TOL)
    if len(neg) != 2 or len(zero) != 1 or len(pos) != 3:
        raise ClassificationError(
            f"signature (neg, zero, pos) = ({len(neg)}, {len(zero)}, {len(pos)}), expected (2, 1, 3)")
    parity = np.array([v[:, k] @ mirror(v[:, k]) for k in neg])
    i_x = neg[int(np.argmax(parity))]
    i_y = neg[int(np.argmin(parity))]
    if not (parity.max() > 0.5 and parity.min() < -0.5):
        raise ClassificationError("unstable modes are not split into mirror-even and mirror-odd")
    e_x = _orient(v[:, i_x], 2)
    e_y = _orient(v[:, i_y], 2)
    us = [v[:, k] for k in pos]
    us = [_orient(u, int(np.argmax(np.abs(u)))) for u in us]
    e_n = _orient(v[:, zero[0]], int(np.argmax(np.abs(v[:, zero[0]]))))
    vecs = np.column_stack([e_x, e_y, *us, e_n])
    eig = np.array([w[i_x], w[i_y], *w[pos], w[zero[0]]])
    if method is SpectrumMethod.CLOSED_FORM:
        mu, nu = np.sqrt(mu_squared(params)), np.sqrt(nu_squared(params))
    else:
        mu, nu = np.sqrt(-w[i_x]), np.sqrt(-w[i_y])
    return StabilitySpectrum(float(mu), float(nu), np.sqrt(w[pos]), 1, eig, vecs, method)


@dataclass(frozen=True)
class ExponentRecord:
    Z: float
    alpha: float
    wannier_alpha: float


def exponent_table(Z_list) -> list[ExponentRecord]:
    out = []
    for Z in Z_list:
        if not Z >= 1:
            raise DomainError(f"Z must be >= 1, got {Z}")
        out.append(ExponentRecord(float(Z), exponent_from_a(shape_parameter(Z)), wannier_exponent(Z)))
    return out
