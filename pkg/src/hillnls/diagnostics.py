"""Weighted norms, pulled-back profiles, the long-range phase correction and rate fits.

Notation: ``v(t) = U0(0, t) u(t)`` is the pulled-back solution and
``v_hat = F v`` its profile.  The long-range correction is

    w_hat(t, xi) = exp(i Phi(t, xi)) v_hat(t, xi),
    Phi(t, xi) = nu int_{r0}^t |zeta2(s)|**(-n rho_L / 2) |v_hat(s, xi)|**rho_L ds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classical import ClassicalSolution, exclusion_band
from .grid import (
    ALIAS_TOLERANCE,
    Grid,
    Representation,
    WaveField,
    _edge_fraction,
    add_chirp,
    fourier,
    free_flow,
    inverse_fourier,
    resample,
)
from .nls import NonlinearitySpec
from .propagator import FactorizationKind, pullback

__all__ = [
    "WeightedNorms",
    "DiagnosticsSpec",
    "ProfileSeries",
    "CauchyFit",
    "DecayFit",
    "FitError",
    "weighted_norms",
    "pseudo_energy_norm",
    "profile",
    "build_series",
    "accumulate_phase",
    "cauchy_rates",
    "decay_fit",
    "linfty_split_check",
    "fit_loglog",
    "estimate_delta1",
    "write_series_csv",
]

CAUCHY_FLOOR = 1e-13
PSEUDO_EDGE_TOLERANCE = 1e-14


class FitError(ValueError):
    """Too few or degenerate samples for a fit."""


@dataclass(frozen=True)
class WeightedNorms:
    l2: float
    linf: float
    h_gamma0: float
    h_0gamma: float


@dataclass(frozen=True)
class DiagnosticsSpec:
    """Weighted-norm exponent, Hoelder exponent, onset time and fit window."""

    gamma: float = 1.0
    alpha_holder: float = 0.2
    r0: float = 1.0
    window: tuple[float, float] = (10.0, 100.0)
    n: int = 1

    def __post_init__(self):
        if not self.gamma > self.n / 2:
            raise ValueError("gamma must exceed n/2")
        if not 0 < self.alpha_holder < min(self.gamma / 2 - self.n / 4, 1.0):
            raise ValueError("alpha must lie in (0, min(gamma/2 - n/4, 1))")


def _weighted_l2(values: np.ndarray, r2: np.ndarray, gamma: float, measure: float) -> float:
    w = (1.0 + r2) ** gamma if gamma else 1.0
    return math.sqrt(float(np.sum(w * np.abs(values) ** 2)) * measure)


def weighted_norms(field: WaveField, gamma: float) -> WeightedNorms:
    """``L2``, ``Linf``, ``H^{gamma,0}`` and ``H^{0,gamma}`` norms with scale-aware measures.

    ``h_gamma0`` is ``nan`` when the field's pending chirp is not resolved
    on its own nodes (a transform would alias).
    """
    if field.representation is not Representation.POSITION:
        raise ValueError("weighted_norms expects a position field")
    l2 = field.norm()
    h0g = _weighted_l2(field.samples, field.radius2(), gamma, field.measure)
    spec = fourier(field)
    if l2 > 0 and _edge_fraction(spec.samples) > ALIAS_TOLERANCE:
        hg0 = float("nan")
    else:
        hg0 = _weighted_l2(spec.samples, spec.radius2(), gamma, spec.measure)
    return WeightedNorms(l2, field.linf(), hg0, h0g)


def pseudo_energy_norm(sol: ClassicalSolution, t: float, field: WaveField, gamma: float) -> float:
    """``||(1 + alpha(t))**(gamma/2) u||`` with ``alpha(t) = (zeta2 p - zeta2' x)**2``.

    Two exact conjugations of ``A = zeta2 p - zeta2' x`` are used, picking
    the one with the milder chirp:

    * ``A = e^{i beta x^2} (zeta2 p) e^{-i beta x^2}`` with
      ``beta = zeta2' / (2 zeta2)``, evaluated as a Fourier multiplier;
    * ``A = -zeta2' e^{-i b p^2} x e^{i b p^2}`` with ``b = zeta2 / (2 zeta2')``,
      a free flow followed by a pointwise weight.  At ``zeta2 = 0`` this is
      the pointwise ``(1 + (zeta2' x)**2)``.

    The first form is used unless ``zeta2`` is in the exclusion band or its
    spectrum reaches the band edge (the residual chirp is unresolved).
    """
    if field.representation is not Representation.POSITION:
        raise ValueError("pseudo_energy_norm expects a position field")
    _, _, z2, z2p = sol(t)
    if abs(z2) > exclusion_band(t):
        spec = fourier(add_chirp(field, -z2p / (2 * z2)))
        if abs(z2p) <= exclusion_band(t) or _edge_fraction(spec.samples) <= PSEUDO_EDGE_TOLERANCE:
            return _weighted_l2(spec.samples, z2**2 * spec.radius2(), gamma, spec.measure)
    f = free_flow(field, -z2 / (2 * z2p))
    return _weighted_l2(f.values(), z2p**2 * f.radius2(), gamma, f.measure)


def profile(sol: ClassicalSolution, t: float, field: WaveField, grid: Grid | None = None,
            kind: FactorizationKind = FactorizationKind.AUTO) -> WaveField:
    """``v_hat(t) = F U0(0, t) u`` on the reference grid's frequency nodes.

    ``grid`` defaults to the field's grid; the pulled-back field is
    resampled there at unit scale before the transform.
    """
    if t < 0:
        raise ValueError("profile expects t >= 0")
    grid = field.grid if grid is None else grid
    v = pullback(sol, t, field, kind)
    if v.grid != grid:
        v = resample(v, grid, 1.0)
    return fourier(v)


def linfty_split_check(sol: ClassicalSolution, t: float, field: WaveField, alpha_holder: float,
                       gamma: float, grid: Grid | None = None):
    """Main term, remainder budget and actual ``Linf`` of the asymptotic splitting.

    Returns ``(main, remainder, actual)`` with
    ``main = |z2|**(-n/2) ||F U0(0,t) u||_inf``,
    ``remainder = |z2|**(-n/2) |z1/z2|**alpha ||U0(0,t) u||_{0,gamma}`` and
    ``actual = ||u||_inf``.
    """
    z1, _, z2, z2p = sol(t)
    band = exclusion_band(t)
    if min(abs(z1), abs(z2), abs(z2p)) <= band:
        raise ValueError(f"MDFM undefined at t={t}")
    n = field.grid.n
    actual = field.linf()
    if actual == 0:
        return 0.0, 0.0, 0.0
    grid = field.grid if grid is None else grid
    v = pullback(sol, t, field)
    if v.grid != grid:
        v = resample(v, grid, 1.0)
    vh = fourier(v)
    pre = abs(z2) ** (-n / 2)
    main = pre * vh.linf()
    rem = pre * abs(z1 / z2) ** alpha_holder * _weighted_l2(v.samples, v.radius2(), gamma, v.measure)
    return main, rem, actual


@dataclass
class ProfileSeries:
    """Time-indexed profiles and norm diagnostics for ``t >= r0``."""

    times: np.ndarray
    v_hat: list
    accumulated_phase: np.ndarray | None = None
    w_hat: list | None = None
    norms: dict = field(default_factory=dict)
    r0: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("series times must be strictly increasing")
        if len(self.v_hat) != self.times.size:
            raise ValueError("one profile per time is required")


def build_series(times, fields, sol: ClassicalSolution, grid: Grid, *, r0: float = 0.0,
                 gamma: float = 1.0, alpha_holder: float | None = None,
                 pseudo_energy: bool = True) -> ProfileSeries:
    """Profiles and norms for snapshots at ``times >= r0``.

    Parameters
    ----------
    times, fields
        Lab-frame snapshots, e.g. from :class:`hillnls.nls.Trajectory`.
    grid
        Reference grid for the profiles.
    alpha_holder
        If given, also records the ``Linf`` splitting terms.
    """
    keep = [(t, f) for t, f in zip(times, fields) if t >= r0]
    ts = np.array([t for t, _ in keep])
    vh, norms = [], {k: [] for k in ("l2", "linf", "h_gamma0", "h_0gamma", "pseudo_energy",
                                     "zeta2_abs", "main_term", "remainder_bound")}
    for t, f in keep:
        z1, _, z2, z2p = sol(t)
        v = profile(sol, t, f, grid)
        vh.append(v)
        wn = weighted_norms(f, gamma)
        norms["l2"].append(wn.l2)
        norms["linf"].append(wn.linf)
        norms["h_gamma0"].append(wn.h_gamma0)
        norms["h_0gamma"].append(wn.h_0gamma)
        norms["pseudo_energy"].append(pseudo_energy_norm(sol, t, f, gamma) if pseudo_energy else math.nan)
        norms["zeta2_abs"].append(abs(z2))
        main = rem = math.nan
        if alpha_holder is not None and min(abs(z1), abs(z2), abs(z2p)) > exclusion_band(t):
            pre = abs(z2) ** (-grid.n / 2)
            main = pre * v.linf()
            vpos_w = _profile_weight(v, gamma)
            rem = pre * abs(z1 / z2) ** alpha_holder * vpos_w
        norms["main_term"].append(main)
        norms["remainder_bound"].append(rem)
    return ProfileSeries(ts, vh, norms={k: np.array(v) for k, v in norms.items()}, r0=r0)


def _profile_weight(vh: WaveField, gamma: float) -> float:
    """``||v||_{0,gamma}`` computed from ``v_hat`` via the inverse transform."""
    v = inverse_fourier(vh)
    return _weighted_l2(v.samples, v.radius2(), gamma, v.measure)


def accumulate_phase(series: ProfileSeries, sol: ClassicalSolution,
                     spec: NonlinearitySpec) -> ProfileSeries:
    """Fill in ``Phi`` by the trapezoid rule on the series times and set ``w_hat``."""
    ts = series.times
    if np.any(np.diff(ts) <= 0):
        raise ValueError("series times must be strictly increasing")
    n = series.v_hat[0].grid.n if series.v_hat else 1
    shape = series.v_hat[0].samples.shape if series.v_hat else ()
    phase = np.zeros((ts.size,) + shape)
    if spec.nu != 0.0 and ts.size > 1:
        _, _, z2, _ = sol(ts)
        integrand = np.array([spec.nu * abs(z) ** (-n * spec.rho_L / 2) * np.abs(v.samples) ** spec.rho_L
                              for z, v in zip(z2, series.v_hat)])
        dt = np.diff(ts).reshape((-1,) + (1,) * len(shape))
        steps = 0.5 * dt * (integrand[1:] + integrand[:-1])
        phase[1:] = np.cumsum(steps, axis=0)
    series.accumulated_phase = phase
    series.w_hat = [v.with_samples(v.samples * np.exp(1j * p)) for v, p in zip(series.v_hat, phase)]
    return series


def fit_loglog(x, y):
    """Least-squares slope, intercept and rms residual of ``log y`` against ``log x``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 4:
        raise FitError("need at least four positive samples")
    lx, ly = np.log(x[ok]), np.log(y[ok])
    if np.ptp(lx) == 0:
        raise FitError("degenerate fit window")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return float(coef[0]), float(coef[1]), resid


@dataclass
class CauchyFit:
    """Fit of ``d(t) = ||w_hat(t) - w_hat(t_last)||`` and its uncorrected analogue."""

    norm_kind: str
    times: np.ndarray
    d: np.ndarray
    d_uncorrected: np.ndarray
    d_aligned: np.ndarray
    slope: float
    intercept: float
    residual: float
    slope_uncorrected: float
    converged: bool


def _dist(a: np.ndarray, b: np.ndarray, kind: str, measure: float) -> float:
    if kind == "l2":
        return math.sqrt(float(np.sum(np.abs(a - b) ** 2)) * measure)
    if kind == "linf":
        return float(np.max(np.abs(a - b)))
    raise ValueError(f"unknown norm kind {kind!r}")


def _aligned(a: np.ndarray, b: np.ndarray, kind: str, measure: float) -> float:
    ip = np.vdot(a, b)
    ph = ip / abs(ip) if ip != 0 else 1.0
    return _dist(a * ph, b, kind, measure)


def cauchy_rates(series: ProfileSeries, norm_kind: str = "linf",
                 window: tuple[float, float] | None = None) -> CauchyFit:
    """Cauchy differences against the last sample and their log-log slope.

    The slope is fitted over ``window`` (default: all samples before the
    last).  ``converged`` is set when every difference is below
    ``1e-13`` times the profile size, in which case the slopes are ``nan``.

    Raises
    ------
    FitError
        With fewer than four usable samples.
    """
    if series.w_hat is None:
        raise ValueError("run accumulate_phase first")
    ts = series.times
    if ts.size < 5:
        raise FitError("need at least four samples before the last")
    meas = series.v_hat[-1].measure
    wl, vl = series.w_hat[-1].samples, series.v_hat[-1].samples
    d = np.array([_dist(w.samples, wl, norm_kind, meas) for w in series.w_hat[:-1]])
    du = np.array([_dist(v.samples, vl, norm_kind, meas) for v in series.v_hat[:-1]])
    da = np.array([_aligned(w.samples, wl, norm_kind, meas) for w in series.w_hat[:-1]])
    tt = ts[:-1]
    scale = max(_dist(wl, 0 * wl, norm_kind, meas), 1e-300)
    if np.all(d <= CAUCHY_FLOOR * scale) and np.all(du <= CAUCHY_FLOOR * scale):
        nan = float("nan")
        return CauchyFit(norm_kind, tt, d, du, da, nan, nan, nan, nan, True)
    sel = np.ones_like(tt, bool) if window is None else (tt >= window[0]) & (tt <= window[1])
    slope, icpt, res = fit_loglog(tt[sel], d[sel])
    su, _, _ = fit_loglog(tt[sel], du[sel])
    return CauchyFit(norm_kind, tt, d, du, da, slope, icpt, res, su, False)


@dataclass
class DecayFit:
    slope_vs_zeta2: float
    residual_vs_zeta2: float
    slope_vs_t: float
    residual_vs_t: float


def decay_fit(series: ProfileSeries, sol: ClassicalSolution,
              window: tuple[float, float] | None = None) -> DecayFit:
    """Slopes of ``log ||u||_inf`` against ``log(1 + |zeta2|)`` and ``log t``."""
    ts = series.times
    linf = np.asarray(series.norms["linf"])
    sel = np.ones_like(ts, bool) if window is None else (ts >= window[0]) & (ts <= window[1])
    if sel.sum() < 4:
        raise FitError("need at least four samples in the window")
    _, _, z2, _ = sol(ts[sel])
    sz, _, rz = fit_loglog(1 + np.abs(z2), linf[sel])
    st, _, rt = fit_loglog(ts[sel], linf[sel])
    return DecayFit(sz, rz, st, rt)


def estimate_delta1(sol: ClassicalSolution, n: int, rho_S: float, t_lo: float, t_hi: float,
                    samples: int = 64) -> float:
    """Measured margin ``delta1`` in ``|zeta2|**(-n rho_S/2) <= C t**(-1-delta1)``."""
    ts = np.geomspace(t_lo, t_hi, samples)
    _, _, z2, _ = sol(ts)
    slope = np.polyfit(np.log(ts), np.log(np.abs(z2)), 1)[0]
    return float(n * rho_S / 2 * slope - 1.0)


def write_series_csv(series: ProfileSeries, path, cauchy_l2: CauchyFit | None = None,
                     cauchy_linf: CauchyFit | None = None) -> Path:
    """Write ``series.csv`` with the documented columns (Cauchy columns blank at the last time)."""
    path = Path(path)
    cols = ["t", "l2", "linf", "h_gamma0", "h_0gamma", "pseudo_energy", "zeta2_abs",
            "main_term", "remainder_bound", "cauchy_l2", "cauchy_linf"]

    def cd(fit, i):
        if fit is None or i >= fit.d.size:
            return ""
        return repr(float(fit.d[i]))

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, t in enumerate(series.times):
            row = [repr(float(t))] + [repr(float(series.norms[k][i])) for k in cols[1:9]]
            row += [cd(cauchy_l2, i), cd(cauchy_linf, i)]
            w.writerow(row)
    return path
