"""Hill's equation ``y'' + sigma(t) y = 0``: coefficient models and fundamental solutions.

The fundamental pair is ``zeta1`` with data ``(1, 0)`` and ``zeta2`` with data
``(0, 1)`` at ``t = 0``.  Everything the propagator factorizations consume
(chirp rates, dilation factors, rotation angle) is derived from this pair.
"""

from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

__all__ = [
    "SigmaKind",
    "SigmaModel",
    "ClassicalSolution",
    "FactorCoefficients",
    "IntegrationError",
    "evaluate_sigma",
    "solve_fundamental",
    "count_zeta1_zeros",
    "factor_coefficients",
    "exclusion_band",
    "estimate_delta0",
    "load_sigma_csv",
    "export_solution_csv",
]

BAND_SCALE = 1e-8


class IntegrationError(RuntimeError):
    """Raised when the ODE integrator fails or violates its Wronskian budget."""


class SigmaKind(enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    INVERSE_SQUARE = "inverse_square"
    SMOOTH_DECAY = "smooth_decay"
    TABULATED = "tabulated"


def _lambda_of(k: float) -> float:
    return 0.5 * (1.0 - math.sqrt(1.0 - 4.0 * k))


@dataclass(frozen=True, eq=False)
class SigmaModel:
    """Coefficient family ``sigma(t)``.

    Use the classmethod constructors rather than building instances directly.

    Kinds
    -----
    zero
        ``sigma = 0``.
    constant
        ``sigma = value``.
    inverse_square
        ``sigma = k / (1 + t**2)``, so ``t**2 sigma -> k``.
    smooth_decay
        ``sigma = lam ((1 - lam) t**2 - 1) / (1 + t**2)**2`` with
        ``lam = (1 - sqrt(1 - 4k)) / 2``.  Also satisfies ``t**2 sigma -> k``,
        and in addition ``zeta1 = (1 + t**2)**(lam/2)`` exactly, so that
        ``zeta1 / zeta2 -> 0`` (the recessive branch sits in ``zeta1``).
    tabulated
        Piecewise-linear interpolation of ``(time, value)`` samples.
    """

    kind: SigmaKind
    value: float = 0.0
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind in (SigmaKind.INVERSE_SQUARE, SigmaKind.SMOOTH_DECAY):
            if not 0.0 <= self.value < 0.25:
                raise ValueError(f"inverse-square strength must satisfy 0 <= k < 1/4, got {self.value}")
        if self.kind is SigmaKind.TABULATED:
            if self.times is None or self.values is None:
                raise ValueError("tabulated model needs times and values")
            ts = np.asarray(self.times, dtype=float)
            vs = np.asarray(self.values, dtype=float)
            if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
                raise ValueError("tabulated model needs two equal-length 1-D sample arrays")
            if np.any(np.diff(ts) <= 0):
                raise ValueError("tabulated times must be strictly increasing")
            object.__setattr__(self, "times", ts)
            object.__setattr__(self, "values", vs)

    @classmethod
    def zero(cls) -> "SigmaModel":
        return cls(SigmaKind.ZERO)

    @classmethod
    def constant(cls, value: float) -> "SigmaModel":
        return cls(SigmaKind.CONSTANT, float(value))

    @classmethod
    def inverse_square(cls, k: float) -> "SigmaModel":
        return cls(SigmaKind.INVERSE_SQUARE, float(k))

    @classmethod
    def smooth_decay(cls, k: float) -> "SigmaModel":
        return cls(SigmaKind.SMOOTH_DECAY, float(k))

    @classmethod
    def tabulated(cls, times, values) -> "SigmaModel":
        return cls(SigmaKind.TABULATED, 0.0, np.asarray(times, float), np.asarray(values, float))

    @property
    def lam(self) -> float:
        """Decay exponent ``lambda``; zero for kinds without inverse-square tail."""
        if self.kind in (SigmaKind.INVERSE_SQUARE, SigmaKind.SMOOTH_DECAY):
            return _lambda_of(self.value)
        return 0.0

    @property
    def span(self) -> tuple[float, float]:
        if self.kind is SigmaKind.TABULATED:
            return float(self.times[0]), float(self.times[-1])
        return -math.inf, math.inf

    def describe(self) -> str:
        if self.kind is SigmaKind.ZERO:
            return "zero"
        if self.kind is SigmaKind.CONSTANT:
            return f"constant({self.value:g})"
        if self.kind is SigmaKind.INVERSE_SQUARE:
            return f"inverse_square(k={self.value:g})"
        if self.kind is SigmaKind.SMOOTH_DECAY:
            return f"smooth_decay(k={self.value:g})"
        return f"tabulated({self.times.size} samples)"


def evaluate_sigma(model: SigmaModel, t):
    """Evaluate ``sigma(t)`` for scalar or array ``t``.

    Raises
    ------
    ValueError
        If a tabulated model is queried outside its time span.
    """
    ta = np.asarray(t, dtype=float)
    kind = model.kind
    if kind is SigmaKind.ZERO:
        out = np.zeros_like(ta)
    elif kind is SigmaKind.CONSTANT:
        out = np.full_like(ta, model.value)
    elif kind is SigmaKind.INVERSE_SQUARE:
        out = model.value / (1.0 + ta**2)
    elif kind is SigmaKind.SMOOTH_DECAY:
        lam = model.lam
        s = 1.0 + ta**2
        out = lam * ((1.0 - lam) * ta**2 - 1.0) / s**2
    else:
        lo, hi = model.span
        if np.any(ta < lo) or np.any(ta > hi):
            raise ValueError(f"time outside tabulated span [{lo}, {hi}]")
        out = np.interp(ta, model.times, model.values)
    return float(out) if np.ndim(out) == 0 else out


def load_sigma_csv(path) -> SigmaModel:
    """Read a two-column ``time,sigma`` CSV (header optional) into a tabulated model."""
    times, values = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                t, s = float(row[0]), float(row[1])
            except ValueError:
                if times:
                    raise
                continue  # header
            times.append(t)
            values.append(s)
    return SigmaModel.tabulated(times, values)


def exclusion_band(t: float, scale: float = BAND_SCALE) -> float:
    """Magnitude below which a denominator counts as zero at time ``t``."""
    return scale * (1.0 + abs(t))


@dataclass(frozen=True)
class FactorCoefficients:
    """Coefficient sets of the four factorizations at one time; ``None`` marks absence.

    The last Korotyaev entry is the signed number of zeros of ``zeta1``
    between 0 and ``t`` (negative for ``t < 0``).
    """

    t: float
    korotyaev: tuple[float, float, float, int] | None
    quadratic_phase: tuple[float, float, float] | None
    mdfm: tuple[float, float, float] | None
    mdmdfm: tuple[float, float, float]


@dataclass(eq=False)
class ClassicalSolution:
    """Fundamental pair of Hill's equation on ``[t_min, t_max]`` with dense output.

    ``t_min = -t_max`` except for tabulated models whose span is shorter
    on the negative side.

    Call the instance with a time (or array of times) to get
    ``(zeta1, zeta1', zeta2, zeta2')``; :meth:`theta` gives the accumulated
    angle ``int_0^t dtau / (zeta1**2 + zeta2**2)``.
    """

    model: SigmaModel
    t_max: float
    tol: float
    _forward: object = field(repr=False)
    _backward: object = field(repr=False)
    zeros: np.ndarray = field(default_factory=lambda: np.zeros(0))
    degenerate_zeros: np.ndarray = field(default_factory=lambda: np.zeros(0))
    time: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t_min: float | None = None

    def __post_init__(self):
        if self.t_min is None:
            self.t_min = -self.t_max

    def _state(self, t):
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        slack = 1e-12 * max(self.t_max, -self.t_min)
        if np.any(ta > self.t_max + slack) or np.any(ta < self.t_min - slack):
            raise ValueError(f"time outside solved window [{self.t_min}, {self.t_max}]")
        out = np.empty((5, ta.size))
        pos = ta >= 0
        if np.any(pos):
            out[:, pos] = self._forward(ta[pos])
        if np.any(~pos):
            out[:, ~pos] = self._backward(ta[~pos])
        return ta, out

    def __call__(self, t):
        ta, y = self._state(t)
        if np.ndim(t) == 0:
            return tuple(float(v) for v in y[:4, 0])
        return y[0], y[1], y[2], y[3]

    def theta(self, t):
        _, y = self._state(t)
        return float(y[4, 0]) if np.ndim(t) == 0 else y[4]

    @property
    def zeta1(self):
        return self(self.time)[0]

    @property
    def zeta1_prime(self):
        return self(self.time)[1]

    @property
    def zeta2(self):
        return self(self.time)[2]

    @property
    def zeta2_prime(self):
        return self(self.time)[3]

    @property
    def zero_count(self):
        return np.array([count_zeta1_zeros(self, t) for t in self.time])

    @property
    def wronskian_residual(self):
        return wronskian_residual(*self(self.time))


def wronskian_residual(z1, z1p, z2, z2p):
    """Scaled Wronskian defect ``|W - 1| / max(1, |z1 z2'| + |z1' z2|)``.

    The scaling makes the residual meaningful in floating point when the
    solutions grow exponentially; it is the absolute defect whenever the
    products are of order one.
    """
    a = np.asarray(z1) * np.asarray(z2p)
    b = np.asarray(z1p) * np.asarray(z2)
    return np.abs(a - b - 1.0) / np.maximum(1.0, np.abs(a) + np.abs(b))


def _rhs(model: SigmaModel):
    def f(t, y):
        s = evaluate_sigma(model, t)
        return [y[1], -s * y[0], y[3], -s * y[2], 1.0 / (y[0] ** 2 + y[2] ** 2)]

    return f


def _find_zeros(dense, nodes, band_scale):
    """Zeros of the first component on one integration branch."""
    zeros, degenerate = [], []
    f = lambda s: float(dense(s)[0])
    for a, b in zip(nodes[:-1], nodes[1:]):
        sub = np.linspace(a, b, 5)
        vals = dense(sub)
        z, zp = vals[0], vals[1]
        for i in range(4):
            lo, hi = sub[i], sub[i + 1]
            if z[i] == 0.0:
                if lo != 0.0:
                    zeros.append(lo)
                continue
            if z[i] * z[i + 1] < 0:
                zeros.append(brentq(f, lo, hi, xtol=1e-14, rtol=1e-15))
            elif zp[i] * zp[i + 1] < 0:
                # extremum of zeta1 inside: check for a touching zero
                g = lambda s: float(dense(s)[1])
                tm = brentq(g, lo, hi, xtol=1e-14)
                if abs(f(tm)) < band_scale * (1 + abs(tm)):
                    degenerate.append(tm)
                    zeros.append(tm)
    return zeros, degenerate


def solve_fundamental(model: SigmaModel, t_max: float, tol: float = 1e-10,
                      method: str = "RK45") -> ClassicalSolution:
    """Integrate Hill's equation for both fundamental solutions on ``[-t_max, t_max]``.

    Parameters
    ----------
    model : SigmaModel
    t_max : float
        Half-width of the time window.
    tol : float
        Accuracy target.  The integrator runs at relative tolerance
        ``tol / 10`` so that the Wronskian budget ``100 tol`` holds over
        long oscillatory windows.
    method : str
        Any explicit ``scipy.integrate.solve_ivp`` method with dense output;
        the default is the Dormand-Prince 5(4) pair with its quartic
        interpolant.

    Returns
    -------
    ClassicalSolution

    Raises
    ------
    IntegrationError
        On integrator failure or when the scaled Wronskian residual at the
        step nodes exceeds ``100 tol``.
    """
    if not t_max > 0 or not tol > 0:
        raise ValueError("t_max and tol must be positive")
    lo, hi = model.span
    if lo > -t_max or hi < t_max:
        # tabulated models only need to cover the requested window on each side present
        if not (lo <= 0.0 <= hi):
            raise ValueError("tabulated span must contain t = 0")
    rtol = tol / 10.0
    y0 = [1.0, 0.0, 0.0, 1.0, 0.0]
    branches = []
    for end in (min(t_max, hi), max(-t_max, lo)):
        if end == 0.0:
            branches.append((None, np.array([0.0])))
            continue
        res = solve_ivp(_rhs(model), (0.0, end), y0, method=method, rtol=rtol,
                        atol=rtol * 1e-2, dense_output=True)
        if res.status != 0:
            raise IntegrationError(f"integration toward t={end} failed: {res.message}")
        branches.append((res.sol, res.t))
    (fw, tf), (bw, tb) = branches
    if fw is None or bw is None:
        raise ValueError("tabulated span must extend on both sides of t = 0")
    t_hi, t_lo = float(tf[-1]), float(tb[-1])
    zf, df = _find_zeros(fw, tf, BAND_SCALE)
    zb, db = _find_zeros(bw, tb, BAND_SCALE)
    zeros = np.array(sorted(zb + zf))
    grid = np.unique(np.concatenate([tb[::-1], tf]))
    sol = ClassicalSolution(model=model, t_max=t_hi, tol=tol, _forward=fw, _backward=bw,
                            zeros=zeros, degenerate_zeros=np.array(sorted(db + df)), time=grid,
                            t_min=t_lo)
    res = wronskian_residual(*sol(grid))
    worst = float(np.max(res))
    if worst > 100 * tol:
        raise IntegrationError(f"Wronskian residual {worst:.3e} exceeds budget {100 * tol:.1e}")
    return sol


def count_zeta1_zeros(sol: ClassicalSolution, t: float) -> int:
    """Number of zeros of ``zeta1`` in ``[0, t]`` (or ``[t, 0]`` for negative ``t``)."""
    if not sol.t_min * (1 + 1e-12) <= t <= sol.t_max * (1 + 1e-12):
        raise ValueError("time outside solved window")
    z = sol.zeros
    if t >= 0:
        return bisect.bisect_right(z, t) - bisect.bisect_left(z, 0.0)
    return bisect.bisect_left(z, 0.0) - bisect.bisect_left(z, t)


def factor_coefficients(sol: ClassicalSolution, t: float,
                        band_scale: float = BAND_SCALE) -> FactorCoefficients:
    """Coefficients of all factorizations defined at ``t``.

    A set is ``None`` when one of its denominators lies in the exclusion
    band ``band_scale (1 + |t|)``.
    """
    z1, z1p, z2, z2p = sol(t)
    band = exclusion_band(t, band_scale)
    kor = qp = mdfm = None
    if abs(z1) > band:
        nu = count_zeta1_zeros(sol, t)
        kor = (z1p / (2 * z1), math.log(abs(z1)), z2 / (2 * z1), nu if t >= 0 else -nu)
    if abs(z2) > band:
        qp = ((1 - z2p) / (2 * z2), z2 / 2, (1 - z1) / (2 * z2))
    if min(abs(z1), abs(z2), abs(z2p)) > band:
        mdfm = (z2 / z2p, z2, z2 / z1)
    r2 = z1 * z1 + z2 * z2
    a1 = 1.0 / r2
    a2 = -(z1 * z1p + z2 * z2p) / r2
    return FactorCoefficients(t, kor, qp, mdfm, (a1, a2, sol.theta(t)))


def estimate_delta0(sol: ClassicalSolution, t_lo: float, t_hi: float, samples: int = 64) -> float:
    """Fitted decay rate ``delta0`` of ``|zeta1 / zeta2| ~ t**(-delta0)`` on a log-spaced window."""
    ts = np.geomspace(t_lo, t_hi, samples)
    z1, _, z2, _ = sol(ts)
    slope = np.polyfit(np.log(ts), np.log(np.abs(z1 / z2)), 1)[0]
    return float(-slope)


def export_solution_csv(sol: ClassicalSolution, path, times=None) -> Path:
    """Write ``t, zeta1, zeta1p, zeta2, zeta2p, nu, wronskian_residual`` rows."""
    path = Path(path)
    ts = sol.time if times is None else np.asarray(times, float)
    z1, z1p, z2, z2p = sol(ts)
    res = wronskian_residual(z1, z1p, z2, z2p)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "zeta1", "zeta1p", "zeta2", "zeta2p", "nu", "wronskian_residual"])
        for i, t in enumerate(ts):
            w.writerow([repr(float(t)), repr(float(z1[i])), repr(float(z1p[i])), repr(float(z2[i])),
                        repr(float(z2p[i])), count_zeta1_zeros(sol, t), repr(float(res[i]))])
    return path
