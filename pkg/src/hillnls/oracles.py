"""Independent references for the linear flow: Crank-Nicolson and exact Gaussians."""

from __future__ import annotations

import math

import numpy as np

from .classical import ClassicalSolution, SigmaModel, evaluate_sigma
from .grid import Grid, Representation, WaveField, _fft_centered, _ifft_centered, _radius2

__all__ = ["ConvergenceError", "crank_nicolson_linear", "gaussian_exact"]


class ConvergenceError(RuntimeError):
    """Inner linear solve did not converge."""


def crank_nicolson_linear(model: SigmaModel, t0: float, t1: float, dt: float,
                          field: WaveField, rtol: float = 1e-14) -> WaveField:
    """Crank-Nicolson steps for ``i v_t = (-Laplacian/2 + sigma(t) |x|**2/2) v``.

    The Laplacian is spectral and ``sigma`` is sampled at each step's
    midpoint.  Each implicit step is solved by GMRES preconditioned with the
    exact inverse of the kinetic part.  The step count is
    ``ceil(|t1 - t0| / dt)`` with the step shortened to land on ``t1``.

    Raises
    ------
    ConvergenceError
        If GMRES fails to reach ``rtol``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if field.representation is not Representation.POSITION:
        raise ValueError("crank_nicolson_linear expects a position field")
    if t1 == t0:
        return field
    g = field.grid
    v = field.values().astype(complex)
    xi = (np.arange(g.N) - g.N // 2) * (2 * math.pi / (g.N * field.spacing))
    kin = 0.5 * _radius2(xi, g.n)
    r2 = field.radius2()
    steps = max(1, math.ceil(abs(t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / steps

    def apply_h(u, pot):
        return _ifft_centered(kin * _fft_centered(u)) + pot * u

    for k in range(steps):
        tm = t0 + (k + 0.5) * h
        pot = 0.5 * evaluate_sigma(model, tm) * r2
        rhs = v - 0.5j * h * apply_h(v, pot)
        pre = 1.0 / (1.0 + 0.5j * h * kin)
        A = lambda w: w + 0.5j * h * apply_h(w, pot)
        M = lambda w: _ifft_centered(pre * _fft_centered(w))
        v, ok = _gmres(A, M, rhs, v, rtol)
        if not ok:
            raise ConvergenceError(f"GMRES failed at step {k}")
    return WaveField(v, g, Representation.POSITION, field.scale)


def _gmres(A, M, b, x0, rtol, restart=30, cycles=10):
    """Right-preconditioned restarted GMRES for a complex array system ``A x = b``."""
    x = x0.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), True
    for _ in range(cycles):
        r = b - A(x)
        beta = np.linalg.norm(r)
        if beta <= rtol * bnorm:
            return x, True
        V = [r / beta]
        Z = []
        H = np.zeros((restart + 1, restart), complex)
        for j in range(restart):
            z = M(V[j])
            Z.append(z)
            w = A(z)
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w = w - H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            e1 = np.zeros(j + 2, complex)
            e1[0] = beta
            y = np.linalg.lstsq(H[: j + 2, : j + 1], e1, rcond=None)[0]
            res = np.linalg.norm(H[: j + 2, : j + 1] @ y - e1)
            if res <= rtol * bnorm or H[j + 1, j] == 0:
                break
            V.append(w / H[j + 1, j])
        x = x + sum(yi * zi for yi, zi in zip(y, Z))
    r = b - A(x)
    return x, bool(np.linalg.norm(r) <= 10 * rtol * bnorm)


def _continuous_arg(sol: ClassicalSolution, t: float, beta: float) -> float:
    """Continuous argument of ``z1(s) + i beta z2(s)`` along ``s`` from 0 to ``t``."""
    if t == 0.0:
        return 0.0
    nodes = sol.time[(sol.time > 0) & (sol.time < t)] if t > 0 else sol.time[(sol.time < 0) & (sol.time > t)][::-1]
    s = np.concatenate([[0.0], nodes, [t]])
    # refine so that consecutive samples differ by well under pi in argument
    s = np.unique(np.concatenate([s, np.linspace(0.0, t, 2049)]))
    if t < 0:
        s = s[::-1]
    z1, _, z2, _ = sol(s)
    return float(np.unwrap(np.angle(z1 + 1j * beta * z2))[-1])


def gaussian_exact(sol: ClassicalSolution, t: float, width: float, grid: Grid) -> WaveField:
    """Closed-form ``U0(t, 0) exp(-|x|**2 / (2 w**2))`` sampled on ``grid``.

    Composing the quadratic-phase factors with the Gaussian and simplifying
    with the unit Wronskian gives, with ``beta = 1 / w**2`` and
    ``z = z1 + i beta z2``,

        u(t, x) = z**(-n/2) exp(-(beta z2' - i z1') |x|**2 / (2 z)),

    which stays regular where ``z2`` vanishes.  The power of ``z`` follows
    the continuous branch along the trajectory.
    """
    if not width > 0:
        raise ValueError("width must be positive")
    beta = 1.0 / width**2
    z1, z1p, z2, z2p = sol(t)
    z = complex(z1, beta * z2)
    arg = _continuous_arg(sol, t, beta)
    pref = abs(z) ** (-grid.n / 2) * np.exp(-0.5j * grid.n * arg)
    q = (beta * z2p - 1j * z1p) / (2 * z)
    r2 = _radius2(grid.nodes(), grid.n)
    return WaveField(pref * np.exp(-q * r2), grid)
