"""Exact linear propagator ``U0(t, 0)`` through four operator factorizations.

``U0(t, s)`` solves ``i d/dt v = (-Laplacian/2 + sigma(t) |x|**2 / 2) v``.
Each factorization is a short chain of chirps, dilations, Fourier
transforms and parity; every factor has a closed-form inverse, which gives
:func:`pullback`.

Chains
------
Korotyaev
    ``exp(i z1' x**2 / (2 z1)) . |z1|-dilation . exp(-i z2 p**2 / (2 z1)) . S**nu``
Quadratic phase
    ``exp(-i a x**2) . exp(-i b p**2) . exp(-i c x**2)`` with
    ``a = (1 - z2') / (2 z2)``, ``b = z2 / 2``, ``c = (1 - z1) / (2 z2)``
MDFM
    ``M(z2 / z2') D(z2) F M(z2 / z1)``
MDMDFM
    ``M(-1 / a2) i**(n/2) D(1 / sqrt(a1)) exp(-i theta (p**2 + x**2) / 2)`` with
    ``a1 = 1 / (z1**2 + z2**2)``, ``a2 = -(z1 z1' + z2 z2') a1``,
    ``theta = int_0^t a1``.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .classical import ClassicalSolution, exclusion_band, factor_coefficients
from .grid import (
    ALIAS_TOLERANCE,
    AliasingError,
    Grid,
    Representation,
    WaveField,
    add_chirp,
    dilation,
    fourier,
    free_flow,
    inverse_fourier,
    parity_shift,
    relabel,
    resample,
    unitary_rescale,
)

__all__ = [
    "FactorizationKind",
    "FactorizationUndefined",
    "apply_korotyaev",
    "apply_quadratic_phase",
    "apply_mdfm",
    "apply_mdmdfm",
    "harmonic_flow",
    "propagate",
    "pullback",
    "defined_kinds",
    "flow_grid",
]

# Auto selection demands a cleaner spectrum than the refusal threshold.
SELECT_TOLERANCE = 1e-14


class FactorizationKind(enum.Enum):
    KOROTYAEV = "korotyaev"
    QUADRATIC_PHASE = "quadratic_phase"
    MDFM = "mdfm"
    MDMDFM = "mdmdfm"
    AUTO = "auto"


class FactorizationUndefined(ValueError):
    """The requested factorization is singular at this time."""


def _finish(out: WaveField, field: WaveField, native: bool) -> WaveField:
    out = relabel(out, Representation.POSITION)
    if native:
        return out
    return resample(out, field.grid, 1.0)


def _branch_sign(sol: ClassicalSolution, t: float, n: int) -> float:
    """Sign taking the principal-branch prefactor ``(i z2)**(-n/2)`` to its continuation through zeros of ``z2``.

    Each zero of ``z2`` crossed since ``t = 0`` turns the prefactor by
    ``exp(-i pi n / 2)``; relative to the principal branch the net effect
    is ``(-1)**(n j)`` with ``j = round(|theta| / (2 pi))``.
    """
    j = round(abs(sol.theta(t)) / (2 * math.pi))
    return -1.0 if (n * j) % 2 else 1.0


def _check_position(field: WaveField):
    if field.representation is not Representation.POSITION:
        raise ValueError("propagators act on position-representation fields")


def apply_korotyaev(sol: ClassicalSolution, t: float, field: WaveField, *, inverse: bool = False,
                    native: bool = False, guard: float | None = ALIAS_TOLERANCE) -> WaveField:
    """``U0(t, 0) field`` (or ``U0(0, t) field``) by the Korotyaev chain.

    Raises
    ------
    FactorizationUndefined
        If ``zeta1(t)`` lies in the exclusion band.
    """
    _check_position(field)
    co = factor_coefficients(sol, t).korotyaev
    if co is None:
        raise FactorizationUndefined(f"Korotyaev factorization singular at t={t}")
    chirp, log_a, b, nu = co
    a = math.exp(log_a)
    if not inverse:
        f = parity_shift(field, nu)
        f = free_flow(f, b, guard)
        f = unitary_rescale(f, a)
        f = add_chirp(f, chirp)
    else:
        f = add_chirp(field, -chirp)
        f = unitary_rescale(f, 1.0 / a)
        f = free_flow(f, -b, guard)
        f = parity_shift(f, -nu)
    return _finish(f, field, native)


def apply_quadratic_phase(sol: ClassicalSolution, t: float, field: WaveField, *,
                          inverse: bool = False, native: bool = False,
                          guard: float | None = ALIAS_TOLERANCE) -> WaveField:
    """``U0(t, 0) field`` by the quadratic-phase chain (grid preserving)."""
    _check_position(field)
    co = factor_coefficients(sol, t).quadratic_phase
    if co is None:
        raise FactorizationUndefined(f"quadratic-phase factorization singular at t={t}")
    a, b, c = co
    field = field * _branch_sign(sol, t, field.grid.n)
    if not inverse:
        f = free_flow(add_chirp(field, -c), b, guard)
        f = add_chirp(f, -a)
    else:
        f = free_flow(add_chirp(field, a), -b, guard)
        f = add_chirp(f, c)
    return _finish(f, field, native)


def apply_mdfm(sol: ClassicalSolution, t: float, field: WaveField, *, inverse: bool = False,
               native: bool = False, guard: float | None = ALIAS_TOLERANCE) -> WaveField:
    """``U0(t, 0) field`` by ``M(z2/z2') D(z2) F M(z2/z1)``."""
    _check_position(field)
    if factor_coefficients(sol, t).mdfm is None:
        raise FactorizationUndefined(f"MDFM factorization singular at t={t}")
    z1, _, z2, z2p = sol(t)
    inner, outer = z1 / (2 * z2), z2p / (2 * z2)
    field = field * _branch_sign(sol, t, field.grid.n)
    if not inverse:
        f = fourier(add_chirp(field, inner), guard)
        f = relabel(dilation(f, z2), Representation.POSITION)
        f = add_chirp(f, outer)
    else:
        f = relabel(add_chirp(field, -outer), Representation.FREQUENCY)
        f = inverse_fourier(dilation(f, z2, inverse=True), guard)
        f = add_chirp(f, -inner)
    return _finish(f, field, native)


def _frft_step(field: WaveField, phi: float, guard) -> WaveField:
    """One Mehler step ``exp(-i phi H)``, ``H = (p**2 + x**2)/2``, for ``pi/4 <= |phi| < pi``."""
    half_cot = 0.5 / math.tan(phi)
    f = fourier(add_chirp(field, half_cot), guard)
    f = relabel(dilation(f, math.sin(phi)), Representation.POSITION)
    return add_chirp(f, half_cot)


def harmonic_flow(field: WaveField, theta: float, *, method: str = "frft",
                  guard: float | None = ALIAS_TOLERANCE) -> WaveField:
    """Harmonic-oscillator flow ``exp(-i theta (p**2 + |x|**2) / 2)``.

    Whole multiples of ``pi`` are peeled off exactly as powers of the parity
    operator.  The remainder ``phi`` in ``[-pi/2, pi/2]`` is applied either
    by the fractional-Fourier form (``method="frft"``; small ``phi`` is split
    into ``phi + pi/2`` and ``-pi/2``) or by the grid-preserving three-shear
    form ``exp(-i a x**2) exp(-i b p**2) exp(-i a x**2)`` with
    ``a = tan(phi/2)/2`` and ``b = sin(phi)/2`` (``method="shear"``).
    """
    m = int(round(theta / math.pi))
    phi = theta - m * math.pi
    f = parity_shift(field, m)
    if phi == 0.0:
        return f
    if method == "shear":
        a = 0.5 * math.tan(0.5 * phi)
        f = free_flow(add_chirp(f, -a), 0.5 * math.sin(phi), guard)
        return add_chirp(f, -a)
    if method != "frft":
        raise ValueError(f"unknown harmonic flow method {method!r}")
    if abs(phi) >= math.pi / 4:
        return _frft_step(f, phi, guard)
    f = _frft_step(f, phi + math.pi / 2, guard)
    return _frft_step(f, -math.pi / 2, guard)


def apply_mdmdfm(sol: ClassicalSolution, t: float, field: WaveField, *, inverse: bool = False,
                 native: bool = False, guard: float | None = ALIAS_TOLERANCE,
                 flow: str = "frft") -> WaveField:
    """``U0(t, 0) field`` by the globally nonsingular MDMDFM chain."""
    _check_position(field)
    a1, a2, theta = factor_coefficients(sol, t).mdmdfm
    n = field.grid.n
    r = 1.0 / math.sqrt(a1)
    skip = abs(a2) < exclusion_band(t)
    rot = 1j ** (n / 2)
    if not inverse:
        f = harmonic_flow(field, theta, method=flow, guard=guard)
        f = dilation(f, r) * rot
        if not skip:
            f = add_chirp(f, -a2 / 2)
    else:
        f = field if skip else add_chirp(field, a2 / 2)
        f = dilation(f, r, inverse=True) * (1 / rot)
        f = harmonic_flow(f, -theta, method=flow, guard=guard)
    return _finish(f, field, native)


_CHAINS = {
    FactorizationKind.MDFM: apply_mdfm,
    FactorizationKind.QUADRATIC_PHASE: apply_quadratic_phase,
    FactorizationKind.KOROTYAEV: apply_korotyaev,
    FactorizationKind.MDMDFM: apply_mdmdfm,
}
_ORDER = (FactorizationKind.MDFM, FactorizationKind.QUADRATIC_PHASE,
          FactorizationKind.KOROTYAEV, FactorizationKind.MDMDFM)


def defined_kinds(sol: ClassicalSolution, t: float) -> list[FactorizationKind]:
    """Factorizations whose coefficients are nonsingular at ``t``, in Auto order."""
    co = factor_coefficients(sol, t)
    out = []
    if co.mdfm is not None:
        out.append(FactorizationKind.MDFM)
    if co.quadratic_phase is not None:
        out.append(FactorizationKind.QUADRATIC_PHASE)
    if co.korotyaev is not None:
        out.append(FactorizationKind.KOROTYAEV)
    out.append(FactorizationKind.MDMDFM)
    return out


def _dispatch(sol, t, field, kind, inverse, native, guard):
    kind = FactorizationKind(kind)
    if t == 0.0:
        return field if native else resample(field, field.grid, 1.0)
    if kind is not FactorizationKind.AUTO:
        return _CHAINS[kind](sol, t, field, inverse=inverse, native=native, guard=guard)
    last_error = None
    for k in defined_kinds(sol, t):
        strict = SELECT_TOLERANCE if k is not FactorizationKind.MDMDFM else guard
        try:
            return _CHAINS[k](sol, t, field, inverse=inverse, native=native, guard=strict)
        except AliasingError as exc:
            last_error = exc
    raise last_error


def propagate(sol: ClassicalSolution, t: float, field: WaveField,
              kind: FactorizationKind | str = FactorizationKind.AUTO, *,
              native: bool = False, guard: float | None = ALIAS_TOLERANCE) -> WaveField:
    """Apply ``U0(t, 0)``.

    Parameters
    ----------
    kind : FactorizationKind
        ``AUTO`` tries MDFM, quadratic phase, Korotyaev and MDMDFM in that
        order, skipping chains that are singular at ``t`` or whose transforms
        fail a strict resolution check; MDMDFM is the fallback.
    native : bool
        Return the chain's output on its own (dilated) coordinates instead
        of resampling onto the input grid at unit scale.
    guard : float or None
        Edge-mass tolerance checked at every transform; see
        :func:`hillnls.grid.fourier`.

    Raises
    ------
    FactorizationUndefined
        If an explicit ``kind`` is singular at ``t``.
    AliasingError
        If the field is not resolved by the grid along the chain.
    """
    return _dispatch(sol, t, field, kind, False, native, guard)


def pullback(sol: ClassicalSolution, t: float, field: WaveField,
             kind: FactorizationKind | str = FactorizationKind.AUTO, *,
             native: bool = False, guard: float | None = ALIAS_TOLERANCE) -> WaveField:
    """Apply ``U0(0, t) = U0(t, 0)**-1`` by inverting a factor chain; see :func:`propagate`."""
    return _dispatch(sol, t, field, kind, True, native, guard)


def flow_grid(sol: ClassicalSolution, t: float, radius: float, n: int = 1,
              min_L: float = 8.0) -> Grid:
    """Smallest power-of-two grid holding a phase-space disc of ``radius`` up to time ``t``.

    The disc is mapped by the classical matrix ``[[z1, z2], [z1', z2']]``
    at every time in ``[0, t]``; the grid half-width covers the largest
    position reached and its Nyquist frequency the largest momentum.
    """
    ts = np.linspace(0.0, t, 257)
    z1, z1p, z2, z2p = sol(ts)
    xmax = radius * float(np.max(np.hypot(z1, z2)))
    pmax = radius * float(np.max(np.hypot(z1p, z2p)))
    L = 1.1 * max(xmax, radius, min_L)
    pband = 1.3 * max(pmax, radius)
    N = 16
    while math.pi * N / (2 * L) < pband:
        N *= 2
    return Grid(n, N, L)
