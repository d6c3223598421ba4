"""Split-step evolution of the nonlinear equation and a direct Picard check.

The equation is

    i u_t = (-Laplacian/2 + sigma(t) |x|**2 / 2) u + nu |u|**rho_L u + mu |u|**rho_S u.

Two steppers are provided.

``strang``
    Lab frame: half kinetic step, exact phase step with the potential and
    the nonlinearity at the midpoint time, half kinetic step.
``lens``
    Moving frame built from the globally regular factorization: writing
    ``u = T(t) psi`` with ``T = M(-1/a2) i**(n/2) D(1/sqrt(a1))`` turns the
    equation into

        i psi_t = a1 (p**2 + |x|**2)/2 psi + r**(-n rho/2) (nu |psi|**rho_L + ...) psi,

    ``r = (z1**2 + z2**2)**(1/2)``.  The harmonic part is applied exactly by
    a grid-preserving three-shear rotation, so a dispersing solution stays
    on a fixed grid for arbitrarily long times and the linear part carries
    no splitting error.
``exact``
    Linear equations only: snapshots are ``U0(t, 0) u0`` from the factorized
    propagator on native coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .classical import ClassicalSolution, SigmaModel, evaluate_sigma, solve_fundamental
from .grid import (
    ALIAS_TOLERANCE,
    AliasingError,
    Grid,
    WaveField,
    _edge_fraction,
    _fft_centered,
    _ifft_centered,
    _radius2,
    add_chirp,
    dilation,
    free_flow,
)
from .propagator import FactorizationKind, propagate, pullback

__all__ = [
    "NonlinearitySpec",
    "EvolutionConfig",
    "EvolutionState",
    "Trajectory",
    "PicardResult",
    "nonlinear_phase_step",
    "strang_step",
    "evolve",
    "picard_verify",
    "lens_to_lab",
]

GUARD_EVERY = 256


@dataclass(frozen=True)
class NonlinearitySpec:
    """Couplings and exponents of ``nu |u|**rho_L u + mu |u|**rho_S u``."""

    nu: float = 0.0
    mu: float = 0.0
    rho_L: float = 2.0
    rho_S: float = 3.0

    def __post_init__(self):
        if not (self.rho_L > 0 and self.rho_S > 0):
            raise ValueError("exponents must be positive")

    @classmethod
    def long_range(cls, lam: float, n: int = 1, nu: float = 1.0) -> "NonlinearitySpec":
        """Threshold exponent ``rho_L = 2 / (n (1 - lam))``."""
        return cls(nu=nu, rho_L=2.0 / (n * (1.0 - lam)))

    @property
    def is_linear(self) -> bool:
        return self.nu == 0.0 and self.mu == 0.0

    def potential(self, modulus: np.ndarray, weight_L: float = 1.0, weight_S: float = 1.0) -> np.ndarray:
        """``nu w_L |u|**rho_L + mu w_S |u|**rho_S`` given ``|u|``."""
        out = np.zeros(modulus.shape)
        if self.nu:
            out += self.nu * weight_L * modulus**self.rho_L
        if self.mu:
            out += self.mu * weight_S * modulus**self.rho_S
        return out


@dataclass
class EvolutionConfig:
    """Everything needed for one run.

    Attributes
    ----------
    model, nonlinearity, grid
    initial : WaveField
        ``u0`` on ``grid`` (position representation, unit scale).
    t_end, dt : float
    diagnostic_times : sequence of float
        Snapshot times in ``[0, t_end]``.
    r0 : float
        Onset time of the asymptotic diagnostics.
    method : {"strang", "lens", "exact"}
    """

    model: SigmaModel
    nonlinearity: NonlinearitySpec
    grid: Grid
    initial: WaveField
    t_end: float
    dt: float = 1e-3
    diagnostic_times: list = field(default_factory=list)
    r0: float = 1.0
    method: str = "strang"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.r0 < 0:
            raise ValueError("r0 must be nonnegative")
        ts = sorted(float(t) for t in self.diagnostic_times)
        if ts and (ts[0] < 0 or ts[-1] > self.t_end * (1 + 1e-12)):
            raise ValueError("diagnostic times must lie in [0, t_end]")
        self.diagnostic_times = ts
        if self.method not in ("strang", "lens", "exact"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "exact" and not self.nonlinearity.is_linear:
            raise ValueError("the exact method needs nu = mu = 0")


@dataclass
class EvolutionState:
    t: float
    field: WaveField


@dataclass
class Trajectory:
    """Snapshots of ``u(t)`` (lab frame) at the diagnostic times reached."""

    times: list
    fields: list
    mass: list
    linf: list
    failed_at: float | None = None
    message: str = ""
    solution: ClassicalSolution | None = None

    @property
    def completed(self) -> bool:
        return self.failed_at is None


def nonlinear_phase_step(field: WaveField, spec: NonlinearitySpec, sigma_mid: float,
                         dt: float) -> WaveField:
    """``u <- exp(-i dt (sigma_mid |x|**2/2 + nu |u|**rho_L + mu |u|**rho_S)) u``.

    The flow is exact since it leaves ``|u|`` unchanged pointwise.  The
    potential part is kept as a pending chirp.
    """
    out = field
    if not spec.is_linear:
        phase = spec.potential(np.abs(field.samples))
        out = replace(field, samples=field.samples * np.exp(-1j * dt * phase))
    return add_chirp(out, -0.5 * dt * sigma_mid)


def strang_step(state: EvolutionState, dt: float, model: SigmaModel, spec: NonlinearitySpec,
                guard: float | None = ALIAS_TOLERANCE) -> EvolutionState:
    """One lab-frame Strang step of length ``dt``.

    Raises
    ------
    AliasingError
        If the field reaches the window edge or the band edge.
    """
    f = free_flow(state.field, dt / 4, guard)
    f = nonlinear_phase_step(f, spec, evaluate_sigma(model, state.t + dt / 2), dt)
    f = free_flow(f, dt / 4, guard)
    return EvolutionState(state.t + dt, f)


def _segments(config: EvolutionConfig):
    stops = sorted(set([t for t in config.diagnostic_times if t > 0] + [config.t_end]))
    a = 0.0
    for b in stops:
        n = max(1, math.ceil((b - a) / config.dt - 1e-9))
        yield a, b, n
        a = b


def _record(traj: Trajectory, t: float, f: WaveField):
    traj.times.append(t)
    traj.fields.append(f)
    traj.mass.append(f.norm())
    traj.linf.append(f.linf())


def lens_to_lab(sol: ClassicalSolution, t: float, psi: WaveField) -> WaveField:
    """``T(t) psi = M(-1/a2) i**(n/2) D(r) psi`` on native coordinates."""
    z1, z1p, z2, z2p = sol(t)
    r2 = z1 * z1 + z2 * z2
    a2 = -(z1 * z1p + z2 * z2p) / r2
    f = dilation(psi, math.sqrt(r2)) * (1j ** (psi.grid.n / 2))
    return add_chirp(f, -a2 / 2)


def _evolve_strang(config: EvolutionConfig, traj: Trajectory):
    want = set(config.diagnostic_times)
    state = EvolutionState(0.0, config.initial)
    if 0.0 in want:
        _record(traj, 0.0, state.field)
    for a, b, n in _segments(config):
        h = (b - a) / n
        for k in range(n):
            try:
                state = strang_step(EvolutionState(a + k * h, state.field), h, config.model,
                                    config.nonlinearity)
            except AliasingError as exc:
                traj.failed_at = a + k * h
                traj.message = str(exc)
                return
        state = EvolutionState(b, state.field)
        if b in want:
            _record(traj, b, state.field.materialized())


def _evolve_lens(config: EvolutionConfig, traj: Trajectory, sol: ClassicalSolution):
    want = set(config.diagnostic_times)
    spec = config.nonlinearity
    g = config.grid
    n = g.n
    psi = config.initial.values().astype(complex)
    if config.initial.scale != 1.0:
        raise ValueError("lens evolution expects the initial field at unit scale")
    x2 = _radius2(g.nodes(), n)
    xi = (np.arange(g.N) - g.N // 2) * g.dual_spacing
    xi2 = _radius2(xi, n)
    eL = n * spec.rho_L / 2
    eS = n * spec.rho_S / 2

    def shear(th):
        # exp(-i th H) = chirp(a) . free(b) . chirp(a)
        return 0.5 * math.tan(0.5 * th), 0.5 * math.sin(th)

    def snapshot(t, arr):
        return lens_to_lab(sol, t, WaveField(arr, g))

    if 0.0 in want:
        _record(traj, 0.0, snapshot(0.0, psi))
    count = 0
    for a, b, m in _segments(config):
        h = (b - a) / m
        tm = a + (np.arange(m) + 0.5) * h
        theta = sol.theta(np.concatenate([[a], tm, [b]]))
        z1, _, z2, _ = sol(tm)
        r = np.sqrt(z1 * z1 + z2 * z2)
        wL, wS = r ** (-eL), r ** (-eS)
        dth = np.diff(theta)
        pending = 0.0  # chirp coefficient waiting to be applied
        for k in range(m):
            ca, cb = shear(dth[k])
            c = _ifft_centered(np.exp(-1j * cb * xi2) * _fft_centered(psi * np.exp(-1j * (pending + ca) * x2)))
            phase = spec.potential(np.abs(c), wL[k], wS[k]) * h if not spec.is_linear else 0.0
            psi = c * np.exp(-1j * phase) if not spec.is_linear else c
            pending = ca
            count += 1
            if count % GUARD_EVERY == 0:
                frac = max(_edge_fraction(psi), _edge_fraction(_fft_centered(psi)))
                if frac > ALIAS_TOLERANCE:
                    traj.failed_at = float(tm[k])
                    traj.message = f"lens frame field reached the grid edge ({frac:.2e})"
                    return
        ca, cb = shear(dth[-1])
        psi = _ifft_centered(np.exp(-1j * cb * xi2) * _fft_centered(psi * np.exp(-1j * (pending + ca) * x2)))
        psi = psi * np.exp(-1j * ca * x2)
        if b in want:
            _record(traj, b, snapshot(b, psi))


def _evolve_exact(config: EvolutionConfig, traj: Trajectory, sol: ClassicalSolution):
    for t in config.diagnostic_times:
        try:
            _record(traj, t, propagate(sol, t, config.initial, native=True))
        except AliasingError as exc:
            traj.failed_at = t
            traj.message = str(exc)
            return


def evolve(config: EvolutionConfig, sol: ClassicalSolution | None = None) -> Trajectory:
    """Run the configured evolution and collect snapshots.

    Lab-frame snapshots from the ``lens`` method live on native (dilated)
    coordinates with a pending chirp; ``strang`` snapshots sit on the
    configuration grid.  An aliasing failure stops the run and is reported
    through ``failed_at`` with the partial trajectory.
    """
    traj = Trajectory([], [], [], [])
    if config.method in ("lens", "exact"):
        if sol is None or sol.t_max < config.t_end:
            sol = solve_fundamental(config.model, max(config.t_end, 1.0))
        traj.solution = sol
        if config.method == "lens":
            _evolve_lens(config, traj, sol)
        else:
            _evolve_exact(config, traj, sol)
    else:
        traj.solution = sol
        _evolve_strang(config, traj)
    return traj


@dataclass
class PicardResult:
    """Residuals ``sup_s ||u_{k+1}(s) - u_k(s)||`` of the Duhamel iteration from ``u_0 = 0``."""

    residuals: list
    ratios: list
    mesh: np.ndarray
    final: WaveField

    @property
    def contracting(self) -> bool:
        return all(q < 0.5 for q in self.ratios)


def picard_verify(config: EvolutionConfig, T: float, iterations: int = 5, mesh: int = 128,
                  sol: ClassicalSolution | None = None,
                  kind: FactorizationKind = FactorizationKind.AUTO) -> PicardResult:
    """Iterate ``Xi(u)(t) = U0(t,0) u0 - i int_0^t U0(t,s) G(u(s)) ds`` on a uniform mesh.

    The iteration runs on the pulled-back profiles ``v(s) = U0(0,s) u(s)``
    with the cumulative trapezoid rule, starting from zero; ``final`` is
    the last iterate's ``u(T)``.
    """
    if sol is None or sol.t_max < T:
        sol = solve_fundamental(config.model, max(T, 1.0))
    spec = config.nonlinearity
    u0 = config.initial
    s = np.linspace(0.0, T, mesh + 1)
    ds = s[1] - s[0]
    zero = np.zeros_like(u0.samples)
    v = [zero.copy() for _ in s]
    residuals = []
    for _ in range(iterations):
        g = []
        for j, sj in enumerate(s):
            u = propagate(sol, sj, u0.with_samples(v[j]), kind)
            G = u.values() * spec.potential(np.abs(u.samples))
            g.append(pullback(sol, sj, u.with_samples(G).materialized(), kind).values())
        new = []
        acc = np.zeros_like(zero)
        for j in range(len(s)):
            if j > 0:
                acc = acc + 0.5 * ds * (g[j - 1] + g[j])
            new.append(u0.samples - 1j * acc)
        meas = u0.measure
        res = max(math.sqrt(float(np.sum(np.abs(a - b) ** 2)) * meas) for a, b in zip(new, v))
        residuals.append(res)
        v = new
    ratios = [residuals[k + 1] / residuals[k] for k in range(len(residuals) - 1) if residuals[k] > 0]
    final = propagate(sol, T, u0.with_samples(v[-1]), kind)
    return PicardResult(residuals, ratios, s, final)
