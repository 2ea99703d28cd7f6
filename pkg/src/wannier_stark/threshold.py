"""Threshold-law measurements near the saddle.

Launch states are parametrized in the saddle's normal-mode frame: the
reaction coordinate ``x``, the desymmetrizing unstable mode ``y`` (used
through ``y' = y + p_y / nu`` and ``p_y' = (p_y - nu y) / 2``) and three
stable modes ``u``. Double escape is decided by full nonlinear integration;
the linearized flow provides a closed-form oracle for the critical width.
"""
from __future__ import annotations

import enum
import functools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import _kernels
from .dynamics import IntegratorControls, escape_probe, integrate, is_double_escape
from .model import PhaseState, SystemParams
from .saddle import SaddleInfo, StabilitySpectrum, saddle_analytic, stability_spectrum

DEFAULT_X0_FACTOR = -0.2
DEFAULT_EXIT_FACTOR = 5.0


class InfeasibleSampleError(ValueError):
    """Requested transverse excitations leave no energy for crossing the saddle."""


class ThresholdRegimeError(RuntimeError):
    """The symmetric launch does not double-escape at this excess energy."""


class DegenerateWindowError(ValueError):
    pass


class Surface(str, enum.Enum):
    HARMONIC = "harmonic"
    MANIFOLD = "manifold"


class ScanMethod(str, enum.Enum):
    HARMONIC = "harmonic"
    BISECTION = "bisection"
    MONTE_CARLO = "monte_carlo"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("WSL_WORKERS", "1")))
    except ValueError:
        return 1


def default_x0(params: SystemParams) -> float:
    return DEFAULT_X0_FACTOR * params.length_scale


def default_x_exit(x0: float) -> float:
    return DEFAULT_EXIT_FACTOR * abs(x0)


@dataclass(frozen=True, eq=False)
class NormalModeFrame:
    """Orthonormal saddle frame; ``basis`` columns are (x, y, u1, u2, u3)."""

    params: SystemParams
    saddle: SaddleInfo
    spectrum: StabilitySpectrum
    basis: np.ndarray

    @property
    def mu(self) -> float:
        return self.spectrum.mu

    @property
    def nu(self) -> float:
        return self.spectrum.nu

    @property
    def omega(self) -> np.ndarray:
        return self.spectrum.omega

    @property
    def e_x(self):
        return self.basis[:, 0]

    @property
    def e_y(self):
        return self.basis[:, 1]

    def to_full(self, coords) -> np.ndarray:
        """Normal coordinates (x, y, u1, u2, u3) -> 6-d displacement."""
        return self.basis @ np.asarray(coords, dtype=float)

    def from_full(self, disp) -> np.ndarray:
        return self.basis.T @ np.asarray(disp, dtype=float)

    def harmonic_energy(self, coords, momenta) -> float:
        c = np.asarray(coords, dtype=float)
        m = np.asarray(momenta, dtype=float)
        k = np.concatenate([[-self.mu**2, -self.nu**2], self.omega**2])
        return float(self.saddle.V_s + 0.5 * (m @ m) + 0.5 * np.sum(k * c * c))


@functools.lru_cache(maxsize=64)
def normal_mode_frame(params: SystemParams) -> NormalModeFrame:
    spec = stability_spectrum(params, "numeric_hessian")
    basis = spec.eigenvectors[:, :5].copy()
    basis.setflags(write=False)
    return NormalModeFrame(params, saddle_analytic(params), spec, basis)


def unstable_to_cartesian(y_unstable: float, p_y_stable: float, nu: float) -> tuple[float, float]:
    """(y', p_y') -> (y, p_y)."""
    y = 0.5 * y_unstable - p_y_stable / nu
    p = p_y_stable + 0.5 * nu * y_unstable
    return y, p


@functools.lru_cache(maxsize=64)
def _stable_manifold_point(params: SystemParams, x0: float) -> np.ndarray:
    # Backward flow along the in-subspace stable branch from just below the
    # saddle until the reaction coordinate reaches x0. Reversed momenta turn
    # the backward flow into a forward one.
    fr = normal_mode_frame(params)
    qs = fr.saddle.embedded_config
    s = -1e-8 * params.length_scale
    y0 = np.concatenate([qs + s * fr.e_x, fr.mu * s * fr.e_x])
    Z, F = params.Z, params.F

    def f(t, y):
        out = np.empty(12)
        _kernels.rhs(y, Z, F, out)
        return out

    def hit(t, y):
        return (y[:6] - qs) @ fr.e_x - x0

    hit.terminal = True
    sol = solve_ivp(f, (0.0, 200.0 / fr.mu), y0, method="DOP853", rtol=1e-13, atol=1e-15,
                    events=hit)
    if not sol.t_events[0].size:
        raise RuntimeError("stable manifold did not reach the launch surface")
    y = sol.y_events[0][0].copy()
    y[6:] *= -1.0
    y.setflags(write=False)
    return y


def stable_manifold_point(params: SystemParams, x0: float | None = None) -> PhaseState:
    """Point of the saddle's in-subspace stable manifold with reaction coordinate x0."""
    x0 = default_x0(params) if x0 is None else float(x0)
    if not x0 < 0:
        raise ValueError("x0 must be negative")
    return PhaseState.from_vector(_stable_manifold_point(params, x0))


@dataclass(frozen=True, eq=False)
class FluxSample:
    epsilon: float
    x0: float
    px0: float
    px0_approx: float
    y_unstable: float
    p_y_stable: float
    y0: float
    py0: float
    u: np.ndarray
    pu: np.ndarray
    state: PhaseState
    surface: Surface
    weight: float = 1.0

    def harmonic_energy(self, frame: NormalModeFrame) -> float:
        d = self.state.q - frame.saddle.embedded_config
        return frame.harmonic_energy(frame.from_full(d), frame.from_full(self.state.p))


def make_flux_sample(params: SystemParams, epsilon: float, x0: float | None = None,
                     y_unstable: float = 0.0, p_y_stable: float = 0.0, u=None, pu=None,
                     surface="manifold", weight: float = 1.0) -> FluxSample:
    """Launch state at excess energy ``epsilon`` above the saddle.

    ``surface="harmonic"`` puts the reaction coordinate at ``x0`` and solves
    the harmonic energy for ``p_x0``. ``surface="manifold"`` starts from the
    exact stable-manifold point at ``x0`` (energy ``V_s``), adds the
    transverse excitations, then shifts along the unstable eigendirection
    ``(e_x, mu e_x)`` until the full energy is ``V_s + epsilon``; along that
    direction the harmonic energy is linear in the shift, so the crossing
    amplitude is proportional to epsilon over the whole scan window.
    """
    surface = Surface(surface)
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    fr = normal_mode_frame(params)
    x0 = default_x0(params) if x0 is None else float(x0)
    if not x0 < 0:
        raise ValueError("x0 must be negative")
    u = np.zeros(3) if u is None else np.asarray(u, dtype=float).reshape(3)
    pu = np.zeros(3) if pu is None else np.asarray(pu, dtype=float).reshape(3)
    mu, nu, om = fr.mu, fr.nu, fr.omega
    y0, py0 = unstable_to_cartesian(y_unstable, p_y_stable, nu)
    approx = mu * abs(x0) + epsilon / (mu * abs(x0))
    qs = fr.saddle.embedded_config
    E = fr.saddle.V_s + epsilon

    if surface is Surface.HARMONIC:
        rad = (2 * epsilon + mu**2 * x0**2 - py0**2 + nu**2 * y0**2
               - np.sum(pu**2 + om**2 * u**2))
        if rad < 0:
            raise InfeasibleSampleError(f"negative radicand {rad:.3e} for p_x0")
        px0 = np.sqrt(rad)
        q = qs + fr.to_full([x0, y0, *u])
        p = fr.to_full([px0, py0, *pu])
        return FluxSample(epsilon, x0, float(px0), approx, y_unstable, p_y_stable, y0, py0,
                          u, pu, PhaseState(q, p), surface, weight)

    base = _stable_manifold_point(params, x0)
    q_b = base[:6] + fr.to_full([0.0, y0, *u])
    p_b = base[6:] + fr.to_full([0.0, py0, *pu])
    ex = fr.e_x
    Z, F = params.Z, params.F

    def excess(d):
        y = np.concatenate([q_b + d * ex, p_b + mu * d * ex])
        return _kernels.energy(y, Z, F) - E

    g0 = excess(0.0)
    if g0 >= 0:
        raise InfeasibleSampleError("transverse excitation exceeds the excess energy")
    hi = 2.0 * epsilon / (2.0 * mu**2 * abs(x0))
    for _ in range(60):
        if excess(hi) > 0:
            break
        hi *= 2.0
    else:  # pragma: no cover
        raise InfeasibleSampleError("could not bracket the energy shell")
    d = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    q = q_b + d * ex
    p = p_b + mu * d * ex
    return FluxSample(epsilon, x0, float(p @ ex), approx, y_unstable, p_y_stable, y0, py0,
                      u, pu, PhaseState(q, p), surface, weight)


def linearized_x(t, x0: float, px0: float, params: SystemParams):
    mu = normal_mode_frame(params).mu
    return 0.5 * (x0 + px0 / mu) * np.exp(mu * t) + 0.5 * (x0 - px0 / mu) * np.exp(-mu * t)


def linearized_y(t, y_unstable: float, p_y_stable: float, params: SystemParams):
    """Harmonic solution ``y(t) = y'/2 e^{nu t} - (p_y'/nu) e^{-nu t}``."""
    nu = normal_mode_frame(params).nu
    return 0.5 * y_unstable * np.exp(nu * t) - (p_y_stable / nu) * np.exp(-nu * t)


def linearized_y_asymptotic(t, y_unstable: float, x0: float, px0: float, params: SystemParams):
    """Large-time form ``y ~ y'/2 (2 x(t) / (x0 + px0/mu))^(nu/mu)``."""
    fr = normal_mode_frame(params)
    x = linearized_x(t, x0, px0, params)
    return 0.5 * y_unstable * (2.0 * x / (x0 + px0 / fr.mu)) ** (fr.nu / fr.mu)


def unstable_mode_flow(t, y_unstable: float, p_y_stable: float, params: SystemParams):
    """Decoupled canonical pair: ``(y' e^{nu t}, p_y' e^{-nu t})``."""
    nu = normal_mode_frame(params).nu
    return y_unstable * np.exp(nu * t), p_y_stable * np.exp(-nu * t)


def critical_width_harmonic(params: SystemParams, epsilon, x0: float | None = None,
                            x_exit: float | None = None):
    """Largest ``|y'|`` keeping ``|y| < x_exit`` when ``x`` reaches ``x_exit``.

    Uses ``x0 + p_x0 / mu ~ epsilon / (mu^2 |x0|)``, which makes the result
    an exact power of epsilon with exponent ``nu / mu``.
    """
    fr = normal_mode_frame(params)
    x0 = default_x0(params) if x0 is None else float(x0)
    x_exit = default_x_exit(x0) if x_exit is None else float(x_exit)
    eps = np.asarray(epsilon, dtype=float)
    amp = eps / (fr.mu**2 * abs(x0))
    return 2.0 * x_exit * (amp / (2.0 * x_exit)) ** (fr.nu / fr.mu)


@dataclass(frozen=True)
class Measurement:
    value: float
    stderr: float
    n_trajectories: int = 0
    n_failed: int = 0


def critical_width_numeric(params: SystemParams, epsilon: float, x0: float | None = None,
                           controls: IntegratorControls | None = None, p_y_stable: float = 0.0,
                           u=None, pu=None, rel_tol: float = 1e-6,
                           surface="manifold") -> Measurement:
    """Half-length of the double-escape interval in ``y'`` under full dynamics.

    With no stable-mode or ``p_y'`` excitation the interval is symmetric
    about ``y' = 0`` and one edge is bisected. Otherwise the excitations
    shift the interval; its center is located first by bisecting on which
    electron leads, then both edges are bisected. Numerical failures count
    as non-double, which shrinks the bracket. The stderr is half the final
    bracket (combined over both edges when two are bisected).
    """
    controls = controls or IntegratorControls()
    x0 = default_x0(params) if x0 is None else float(x0)
    counts = [0, 0]

    def probe(yu):
        s = make_flux_sample(params, epsilon, x0, yu, p_y_stable, u, pu, surface)
        ok, bad, lead = escape_probe(s.state, params, controls)
        counts[0] += 1
        counts[1] += bad
        return ok, lead

    def double(yu):
        return probe(yu)[0]

    g = float(critical_width_harmonic(params, epsilon, x0))
    symmetric = (p_y_stable == 0 and (u is None or not np.any(u))
                 and (pu is None or not np.any(pu)))
    if symmetric:
        center = 0.0
    else:
        center = _find_center(probe, g, params.length_scale)
    if not double(center):
        raise ThresholdRegimeError(
            f"no double escape at the symmetric launch (epsilon={epsilon:.3e})")

    def edge(sign):
        # largest |d| with double(center + sign * d), by bracketing then bisection
        if double(center + sign * g):
            lo, hi = g, 2 * g
            while double(center + sign * hi):
                lo, hi = hi, 2 * hi
                if hi > 100 * params.length_scale:
                    raise ThresholdRegimeError("double-escape set is not bounded in y'")
        else:
            lo, hi = 0.5 * g, g
            k = 0
            while not double(center + sign * lo):
                lo, hi = 0.5 * lo, lo
                k += 1
                if k > 200:
                    lo = 0.0
                    break
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if double(center + sign * mid):
                lo = mid
            else:
                hi = mid
        return lo, hi

    lo_r, hi_r = edge(+1)
    if symmetric:
        return Measurement(0.5 * (lo_r + hi_r), 0.5 * (hi_r - lo_r), *counts)
    lo_l, hi_l = edge(-1)
    width = 0.25 * (lo_r + hi_r + lo_l + hi_l)
    err = 0.25 * np.hypot(hi_r - lo_r, hi_l - lo_l)
    return Measurement(width, err, *counts)


def _find_center(probe, g, length, max_halvings=60):
    # y' where the leading electron switches from 2 to 1
    span = 4.0 * g
    while True:
        lo, hi = -span, span
        l_lo = probe(lo)[1]
        l_hi = probe(hi)[1]
        if l_lo < 0 < l_hi:
            break
        span *= 2.0
        if span > 100 * length:
            raise ThresholdRegimeError("could not bracket the symmetric launch in y'")
    for _ in range(max_halvings):
        mid = 0.5 * (lo + hi)
        ok, lead = probe(mid)
        if ok or lead == 0:
            return mid
        if lead > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FluxBox:
    """Uniform launch box: ``|y'| <= y_half``, ``|p_y'| <= p_half``, and each
    stable mode limited to ``u_energy_fraction * epsilon``."""

    y_half: float
    p_half: float
    u_energy_fraction: float = 0.1

    @classmethod
    def default(cls, params: SystemParams, x0: float | None = None) -> "FluxBox":
        x0 = default_x0(params) if x0 is None else float(x0)
        fr = normal_mode_frame(params)
        eps_top = 1e-2 * abs(fr.saddle.V_s)
        return cls(y_half=4.0 * float(critical_width_harmonic(params, eps_top, x0)),
                   p_half=0.1 * fr.mu * abs(x0))


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def draw_sample(params: SystemParams, epsilon: float, index: int, seed: int, box: FluxBox,
                y_half: float, x0: float, freeze=()) -> tuple[float, float, np.ndarray, np.ndarray]:
    rng = _rng(seed, index)
    v = rng.uniform(-1.0, 1.0, size=8)
    om = normal_mode_frame(params).omega
    yu = 0.0 if "y" in freeze else v[0] * y_half
    py = 0.0 if "y" in freeze else v[1] * box.p_half
    amp = np.sqrt(box.u_energy_fraction * epsilon)
    if "u" in freeze:
        u = np.zeros(3)
        pu = np.zeros(3)
    else:
        u = v[2:5] * amp / om
        pu = v[5:8] * amp
    return yu, py, u, pu


def flux_monte_carlo(params: SystemParams, epsilon: float, n_samples: int = 1000, seed: int = 0,
                     box: FluxBox | None = None, importance: float | None = None,
                     x0: float | None = None, controls: IntegratorControls | None = None,
                     workers: int | None = None, freeze=()) -> Measurement:
    """Double-escape fraction of a uniform launch box at excess energy epsilon.

    Each sample's stream comes from ``(seed, index)`` only, so the result does
    not depend on ``workers``. Samples whose transverse energy exceeds the
    budget are counted as non-escaping (the box is fixed, so the fraction
    stays proportional to the flux). With ``importance=c`` the ``y'`` range
    shrinks to ``c`` times the harmonic critical width and the fraction is
    reweighted by the ratio of box sizes.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    controls = controls or IntegratorControls()
    x0 = default_x0(params) if x0 is None else float(x0)
    box = box or FluxBox.default(params, x0)
    y_half = box.y_half
    if importance:
        y_half = min(box.y_half, importance * float(critical_width_harmonic(params, epsilon, x0)))
    scale = y_half / box.y_half
    workers = workers or default_workers()

    def run(idx):
        hits = infeasible = bad = 0
        for i in idx:
            yu, py, u, pu = draw_sample(params, epsilon, i, seed, box, y_half, x0, freeze)
            try:
                s = make_flux_sample(params, epsilon, x0, yu, py, u, pu)
            except InfeasibleSampleError:
                infeasible += 1
                continue
            ok, failed = is_double_escape(s.state, params, controls)
            hits += ok
            bad += failed
        return hits, infeasible, bad

    chunks = np.array_split(np.arange(n_samples), max(1, min(workers, n_samples)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    hits = sum(p[0] for p in parts)
    bad = sum(p[2] for p in parts)
    frac = hits / n_samples
    err = np.sqrt(max(frac * (1 - frac), 1.0 / n_samples) / n_samples)
    return Measurement(frac * scale, err * scale, n_samples, bad)


@dataclass(frozen=True)
class FitResult:
    alpha: float
    stderr: float
    intercept: float
    n_points: int


def fit_exponent(epsilon, values, stderr=None, window=None) -> FitResult:
    """Weighted least squares of log(value) on log(epsilon).

    Weights are ``(value / stderr)^2``; zero or missing errors mean equal
    weights. The slope error is the weighted covariance scaled by
    ``max(1, chi2 / dof)`` so model misfit is not hidden by tiny
    measurement errors.
    """
    eps = np.asarray(epsilon, dtype=float)
    val = np.asarray(values, dtype=float)
    err = np.zeros_like(val) if stderr is None else np.asarray(stderr, dtype=float)
    keep = np.isfinite(val) & (val > 0) & (eps > 0) & np.isfinite(err)
    if window is not None:
        lo, hi = window
        keep &= (eps >= lo * (1 - 1e-12)) & (eps <= hi * (1 + 1e-12))
    if keep.sum() < 4:
        raise DegenerateWindowError(f"need at least 4 usable points, have {int(keep.sum())}")
    x = np.log(eps[keep])
    yv = np.log(val[keep])
    rel = err[keep] / val[keep]
    if np.all(rel > 0):
        w = 1.0 / rel**2
    else:
        w = np.ones_like(x)
    X = np.column_stack([np.ones_like(x), x])
    WX = X * w[:, None]
    cov = np.linalg.inv(X.T @ WX)
    beta = cov @ (WX.T @ yv)
    resid = yv - X @ beta
    dof = len(x) - 2
    chi2 = float(np.sum(w * resid**2))
    if np.all(rel > 0):
        factor = max(1.0, chi2 / dof)
    else:
        factor = chi2 / dof  # unit weights: ordinary least squares error
    return FitResult(float(beta[1]), float(np.sqrt(cov[1, 1] * factor)), float(beta[0]), int(len(x)))


def epsilon_grid(params: SystemParams, eps_min_rel: float = 1e-4, eps_max_rel: float = 1e-2,
                 points_per_decade: int = 8) -> np.ndarray:
    """Log-spaced excess energies, in hartree, between the given fractions of |V_s|."""
    if not 0 < eps_min_rel < eps_max_rel:
        raise ValueError("need 0 < eps_min_rel < eps_max_rel")
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be >= 1")
    decades = np.log10(eps_max_rel / eps_min_rel)
    n = int(round(decades * points_per_decade)) + 1
    return abs(saddle_analytic(params).V_s) * np.logspace(
        np.log10(eps_min_rel), np.log10(eps_max_rel), n)


@dataclass(frozen=True, eq=False)
class ThresholdScan:
    params: SystemParams
    method: ScanMethod
    epsilon: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    alpha_fit: float
    alpha_stderr: float
    fit_window: tuple[float, float]
    x0: float
    x_exit: float
    seed: int | None = None
    n_samples: int | None = None
    gaps: list = field(default_factory=list)


def threshold_scan(params: SystemParams, method="bisection", epsilon=None, x0: float | None = None,
                   x_exit: float | None = None, controls: IntegratorControls | None = None,
                   n_samples: int = 1000, seed: int = 0, workers: int | None = None,
                   window=None, rel_tol: float = 1e-6, importance: float | None = 3.0,
                   freeze=(), stable_amplitudes=None) -> ThresholdScan:
    """Measure widths or fractions over an epsilon grid and fit the exponent.

    ``stable_amplitudes=(cu, cp)`` excites the stable modes in bisection
    scans with ``u_i = cu_i sqrt(0.1 eps) / omega_i`` and
    ``p_ui = cp_i sqrt(0.1 eps)``, i.e. fractions of the default box.
    Points that fail (regime errors) are left as NaN and listed in ``gaps``.
    """
    method = ScanMethod(method)
    eps = epsilon_grid(params) if epsilon is None else np.asarray(epsilon, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise ValueError("epsilon grid must be positive and strictly increasing")
    x0 = default_x0(params) if x0 is None else float(x0)
    x_exit = default_x_exit(x0) if x_exit is None else float(x_exit)
    workers = workers or default_workers()
    vals = np.full(eps.shape, np.nan)
    errs = np.full(eps.shape, np.nan)
    gaps = []

    if method is ScanMethod.HARMONIC:
        vals = np.asarray(critical_width_harmonic(params, eps, x0, x_exit), dtype=float)
        errs = np.zeros_like(vals)
    elif method is ScanMethod.BISECTION:
        om = normal_mode_frame(params).omega
        cu, cp = (np.zeros(3), np.zeros(3)) if stable_amplitudes is None else stable_amplitudes

        def one(e):
            amp = np.sqrt(0.1 * e)
            try:
                return critical_width_numeric(params, e, x0, controls, u=np.asarray(cu) * amp / om,
                                              pu=np.asarray(cp) * amp, rel_tol=rel_tol)
            except ThresholdRegimeError as exc:
                return exc
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                res = list(ex.map(one, eps))
        else:
            res = [one(e) for e in eps]
        for i, r in enumerate(res):
            if isinstance(r, Exception):
                gaps.append((float(eps[i]), str(r)))
            else:
                vals[i], errs[i] = r.value, r.stderr
    else:
        for i, e in enumerate(eps):
            m = flux_monte_carlo(params, e, n_samples, seed, x0=x0, controls=controls,
                                 workers=workers, importance=importance, freeze=freeze)
            vals[i], errs[i] = m.value, m.stderr
            if m.value <= 0:
                gaps.append((float(e), "no double escapes"))

    win = (float(eps[0]), float(eps[-1])) if window is None else (float(window[0]), float(window[1]))
    fit = fit_exponent(eps, vals, errs, win)
    return ThresholdScan(params, method, eps, vals, errs, fit.alpha, fit.stderr, win, x0, x_exit,
                         seed if method is ScanMethod.MONTE_CARLO else None,
                         n_samples if method is ScanMethod.MONTE_CARLO else None, gaps)


def exit_projection(state, params: SystemParams, x_exit: float,
                    controls: IntegratorControls | None = None, n_samples: int = 4000):
    """Normal-mode ``(x, y)`` where the trajectory first reaches ``x = x_exit``.

    Returns None if it never gets there before the run stops.
    """
    fr = normal_mode_frame(params)
    controls = controls or IntegratorControls()
    T = controls.time_limit(params)
    ts = np.linspace(0.0, T, n_samples)
    tr = integrate(state, params, controls.with_(max_time=T), ts)
    good = np.all(np.isfinite(tr.states), axis=1)
    d = tr.states[good, :6] - fr.saddle.embedded_config
    xs = d @ fr.e_x
    ys = d @ fr.e_y
    idx = np.flatnonzero(xs >= x_exit)
    if not idx.size or idx[0] == 0:
        return None
    k = idx[0]
    w = (x_exit - xs[k - 1]) / (xs[k] - xs[k - 1])
    return x_exit, float(ys[k - 1] + w * (ys[k] - ys[k - 1]))
