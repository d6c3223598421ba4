"""Uniform grids, wave fields and the elementary unitary operators.

A :class:`WaveField` stores samples ``f_j`` on nodes ``(j - N/2) * spacing``
per axis, where ``spacing = scale * base`` and ``base`` is ``h = 2L/N`` for
position fields and ``pi/L`` for frequency fields.  A pending quadratic
phase ``exp(i * chirp * |x|**2)`` is kept symbolically in ``chirp``: chirp
multipliers and dilations only touch metadata, and the phase is applied to
the samples when an FFT needs the actual values.  This keeps long chains of
factors exact and lets chirps cancel without rounding.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import fft as sfft

__all__ = [
    "Grid",
    "Representation",
    "WaveField",
    "AliasingError",
    "ALIAS_TOLERANCE",
    "gaussian",
    "fourier",
    "inverse_fourier",
    "modulation",
    "add_chirp",
    "dilation",
    "unitary_rescale",
    "parity_shift",
    "free_flow",
    "relabel",
    "resample",
    "spectral_edge_fraction",
    "check_aliasing",
    "relative_difference",
    "overlap",
    "save_field_csv",
    "load_field_csv",
]

ALIAS_TOLERANCE = 1e-6
EDGE_FRACTION = 0.1
SAME_SPACING = 1e-12


class AliasingError(RuntimeError):
    """Raised when a field is not resolved by its grid."""


class Representation(enum.Enum):
    POSITION = "position"
    FREQUENCY = "frequency"


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``N`` points per axis on ``[-L, L)`` in ``n`` dimensions."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two, at least 16")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dual_spacing(self) -> float:
        return math.pi / self.L

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    def nodes(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.h

    def base_spacing(self, rep: Representation) -> float:
        return self.h if rep is Representation.POSITION else self.dual_spacing


def _radius2(axis_coords: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return axis_coords**2
    parts = np.meshgrid(*([axis_coords] * n), indexing="ij", sparse=True)
    return sum(p**2 for p in parts)


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex samples with representation tag, scale and pending chirp.

    Attributes
    ----------
    samples : ndarray
        Complex array of shape ``(N,) * n``.
    grid : Grid
    representation : Representation
    scale : float
        Physical coordinate = ``scale`` times the grid's base node.
    chirp : float
        Pending phase ``exp(i chirp |coord|**2)``; ``values()`` applies it.
    """

    samples: np.ndarray
    grid: Grid
    representation: Representation = Representation.POSITION
    scale: float = 1.0
    chirp: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != self.grid.shape:
            raise ValueError(f"samples shape {s.shape} does not match grid {self.grid.shape}")
        if self.scale == 0 or not math.isfinite(self.scale):
            raise ValueError("scale must be finite and nonzero")
        object.__setattr__(self, "samples", s)

    @property
    def spacing(self) -> float:
        return self.scale * self.grid.base_spacing(self.representation)

    @property
    def measure(self) -> float:
        return abs(self.spacing) ** self.grid.n

    def coords(self) -> np.ndarray:
        """Physical node coordinates along one axis."""
        return (np.arange(self.grid.N) - self.grid.N // 2) * self.spacing

    def radius2(self) -> np.ndarray:
        return _radius2(self.coords(), self.grid.n)

    def values(self) -> np.ndarray:
        """Samples with the pending chirp applied."""
        if self.chirp == 0.0:
            return self.samples
        return self.samples * np.exp(1j * self.chirp * self.radius2())

    def materialized(self) -> "WaveField":
        if self.chirp == 0.0:
            return self
        return replace(self, samples=self.values(), chirp=0.0)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.measure))

    def linf(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def with_samples(self, samples) -> "WaveField":
        return replace(self, samples=samples)

    def __mul__(self, c):
        return replace(self, samples=self.samples * c)

    __rmul__ = __mul__


def gaussian(grid: Grid, width: float = 1.0, amplitude: complex = 1.0,
             center: float = 0.0, momentum: float = 0.0) -> WaveField:
    """``amplitude * exp(-|x - center|**2 / (2 width**2) + i momentum x_0)`` on ``grid``.

    ``center`` and ``momentum`` act along every axis.
    """
    x = grid.nodes()
    one = np.exp(-((x - center) ** 2) / (2 * width**2) + 1j * momentum * x)
    s = one
    for _ in range(grid.n - 1):
        s = np.multiply.outer(s, one)
    return WaveField(amplitude * s, grid)


# -- edge diagnostics -------------------------------------------------------

def _edge_mask_1d(N: int) -> np.ndarray:
    k = np.abs(np.arange(N) - N // 2)
    return k >= (1.0 - EDGE_FRACTION) * (N // 2)


def _edge_fraction(arr: np.ndarray) -> float:
    """Fraction of ``sum |arr|**2`` on nodes in the outer 10% of any axis (centered order)."""
    p = np.abs(arr) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    inner = p
    m = ~_edge_mask_1d(arr.shape[0])
    for ax in range(arr.ndim):
        inner = np.compress(m, inner, axis=ax)
    return float(max(total - inner.sum(), 0.0) / total)


def _guard(arr: np.ndarray, tol: float | None, what: str):
    if tol is None:
        return
    frac = _edge_fraction(arr)
    if frac > tol:
        raise AliasingError(f"{what}: {frac:.2e} of the mass sits in the outer 10% of nodes")


def spectral_edge_fraction(field: WaveField) -> float:
    """Fraction of L2 mass in the outer 10% of the field's conjugate nodes."""
    return _edge_fraction(_fft_centered(field.values()))


def check_aliasing(field: WaveField, tol: float = ALIAS_TOLERANCE) -> None:
    """Raise :class:`AliasingError` if the field is under-resolved or touches the box edge."""
    v = field.values()
    _guard(_fft_centered(v), tol, "spectrum")
    _guard(v, tol, "window")


# -- Fourier transforms -----------------------------------------------------

def _axes(a):
    return tuple(range(a.ndim))


@lru_cache(maxsize=32)
def _checker(shape: tuple[int, ...]) -> np.ndarray:
    one = 1.0 - 2.0 * (np.arange(shape[0]) % 2)
    out = one
    for _ in range(len(shape) - 1):
        out = np.multiply.outer(out, one)
    return out


# For N divisible by 4 the centered DFT sum_j f_j exp(-2 pi i (j-N/2)(k-N/2)/N)
# equals (-1)**k * fft((-1)**j f)_k; this avoids the index rolls.
def _fft_centered(a):
    c = _checker(a.shape)
    return c * np.fft.fftn(c * a)


def _ifft_centered(a):
    c = _checker(a.shape)
    return c * np.fft.ifftn(c * a)


def _transform(field: WaveField, sign: int, rep: Representation, guard: float | None) -> WaveField:
    g = field.grid
    v = field.values()
    _guard(v, guard, "transform input window")
    d = field.spacing
    w = (abs(d) / math.sqrt(2 * math.pi)) ** g.n
    if sign < 0:
        out = _fft_centered(v) * w
    else:
        out = _ifft_centered(v) * (w * g.N**g.n)
    _guard(out, guard, "transform output band")
    new_spacing = 2 * math.pi / (g.N * d)
    return WaveField(out, g, rep, new_spacing / g.base_spacing(rep), 0.0)


def fourier(field: WaveField, guard: float | None = None) -> WaveField:
    """Unitary Fourier transform with kernel ``(2 pi)**(-n/2) exp(-i x.xi)``.

    Parameters
    ----------
    field : WaveField
        Position-representation field.  A pending chirp is applied first.
    guard : float, optional
        If given, raise :class:`AliasingError` when more than this fraction
        of the mass sits at the window edge of the input or the band edge of
        the output.
    """
    if field.representation is not Representation.POSITION:
        raise ValueError("fourier expects a position-representation field")
    return _transform(field, -1, Representation.FREQUENCY, guard)


def inverse_fourier(field: WaveField, guard: float | None = None) -> WaveField:
    """Inverse of :func:`fourier`."""
    if field.representation is not Representation.FREQUENCY:
        raise ValueError("inverse_fourier expects a frequency-representation field")
    return _transform(field, +1, Representation.POSITION, guard)


def relabel(field: WaveField, rep: Representation) -> WaveField:
    """Change the representation tag while keeping physical coordinates."""
    if rep is field.representation:
        return field
    g = field.grid
    return replace(field, representation=rep, scale=field.spacing / g.base_spacing(rep))


# -- elementary operators -----------------------------------------------------

def add_chirp(field: WaveField, coefficient: float) -> WaveField:
    """Multiply by ``exp(i coefficient |x|**2)`` (symbolically)."""
    if coefficient == 0.0:
        return field
    return replace(field, chirp=field.chirp + coefficient)


def modulation(field: WaveField, tau: float) -> WaveField:
    """``M(tau)``: multiply by ``exp(i |x|**2 / (2 tau))``."""
    if tau == 0:
        raise ValueError("modulation parameter tau must be nonzero")
    return add_chirp(field, 1.0 / (2.0 * tau))


def dilation(field: WaveField, tau: float, inverse: bool = False) -> WaveField:
    """``D(tau) phi(x) = (i tau)**(-n/2) phi(x / tau)`` or its inverse.

    The branch is the principal power of the complex number ``i tau``
    (argument ``+pi/2`` or ``-pi/2``).  No resampling happens: the scale
    metadata absorbs the stretch.
    """
    if tau == 0:
        raise ValueError("dilation parameter tau must be nonzero")
    n = field.grid.n
    if not inverse:
        return replace(field, samples=field.samples * (1j * tau) ** (-n / 2),
                       scale=field.scale * tau, chirp=field.chirp / tau**2)
    return replace(field, samples=field.samples * (1j * tau) ** (n / 2),
                   scale=field.scale / tau, chirp=field.chirp * tau**2)


def unitary_rescale(field: WaveField, factor: float) -> WaveField:
    """``|factor|**(-n/2) phi(x / factor)`` for ``factor > 0``."""
    if not factor > 0:
        raise ValueError("rescale factor must be positive")
    n = field.grid.n
    return replace(field, samples=field.samples * factor ** (-n / 2),
                   scale=field.scale * factor, chirp=field.chirp / factor**2)


def parity_shift(field: WaveField, count: int) -> WaveField:
    """Apply ``S f(x) = exp(-i n pi / 2) f(-x)`` ``count`` times (negative for inverse)."""
    count = int(count)
    if count == 0:
        return field
    n = field.grid.n
    phase = np.exp(-1j * n * math.pi / 2 * (count % 4))
    s = field.samples
    if count % 2:
        # x_j -> -x_j maps index j to (N - j) mod N on every axis
        for ax in range(s.ndim):
            s = np.roll(np.flip(s, axis=ax), 1, axis=ax)
    return replace(field, samples=s * phase)


def free_flow(field: WaveField, b: float, guard: float | None = None) -> WaveField:
    """``exp(-i b |p|**2)`` with ``p = -i grad``, applied as a Fourier multiplier."""
    if b == 0.0:
        return field
    if field.representation is not Representation.POSITION:
        raise ValueError("free_flow expects a position-representation field")
    g = field.grid
    v = field.values()
    _guard(v, guard, "free flow input window")
    spec = _fft_centered(v)
    _guard(spec, guard, "free flow band")
    xi = (np.arange(g.N) - g.N // 2) * (2 * math.pi / (g.N * field.spacing))
    spec *= np.exp(-1j * b * _radius2(xi, g.n))
    out = _ifft_centered(spec)
    _guard(out, guard, "free flow output window")
    return replace(field, samples=out, chirp=0.0)


# -- resampling and comparison ----------------------------------------------------

def _bluestein(c: np.ndarray, M: int, alpha: float) -> np.ndarray:
    """``out[m] = sum_k c[k] exp(i alpha k m)`` along the last axis.

    The chirps are evaluated as ``exp(i alpha j**2 / 2)`` so their modulus is
    exactly one; ``w**(j**2/2)`` drifts off the unit circle for large ``N``.
    """
    N = c.shape[-1]
    size = sfft.next_fast_len(N + M - 1)
    jk = np.arange(N, dtype=float)
    jm = np.arange(M, dtype=float)
    jn = np.arange(-(N - 1), M, dtype=float)
    kern = np.zeros(size, complex)
    kern[np.arange(-(N - 1), M) % size] = np.exp(-0.5j * alpha * jn**2)
    conv = sfft.ifft(sfft.fft(c * np.exp(0.5j * alpha * jk**2), size, axis=-1) * sfft.fft(kern), axis=-1)
    return conv[..., :M] * np.exp(0.5j * alpha * jm**2)


def _interp_axis(a: np.ndarray, axis: int, d: float, targets: np.ndarray) -> np.ndarray:
    """Band-limited interpolation of samples at nodes ``(j - N/2) d`` onto ``targets``.

    ``targets`` must be uniformly spaced and centered like grid nodes.
    """
    N = a.shape[axis]
    M = targets.size
    K, Kp = N // 2, M // 2
    hp = targets[1] - targets[0]
    rho = hp / d
    alpha = 2 * math.pi * rho / N
    a = np.moveaxis(a, axis, -1)
    c = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(a, axes=-1), axis=-1), axes=-1) / N
    k = np.arange(N)
    m = np.arange(M)
    c = c * np.exp(-1j * alpha * Kp * k)
    out = _bluestein(c, M, alpha)
    out = out * np.exp(-1j * alpha * K * m + 1j * alpha * K * Kp)
    outside = np.abs(targets) > abs(d) * K + 1e-12 * abs(d)
    out[..., outside] = 0.0
    return np.moveaxis(out, -1, axis)


def resample(field: WaveField, grid: Grid | None = None, scale: float = 1.0,
             window_tol: float | None = ALIAS_TOLERANCE) -> WaveField:
    """Trigonometric interpolation of the samples onto ``grid`` at ``scale``.

    The pending chirp is carried over symbolically, so only the smooth
    envelope is interpolated.

    Raises
    ------
    AliasingError
        If more than ``window_tol`` of the mass falls outside the target
        window or above the target Nyquist frequency.
    """
    grid = field.grid if grid is None else grid
    if grid.n != field.grid.n:
        raise ValueError("dimension mismatch")
    rep = field.representation
    target = WaveField(np.zeros(grid.shape, complex), grid, rep, scale)
    d, hp = field.spacing, target.spacing
    if grid.N == field.grid.N and abs(hp - d) <= SAME_SPACING * abs(d):
        return WaveField(field.samples, grid, rep, scale, field.chirp)
    if window_tol is not None:
        total = float(np.sum(np.abs(field.samples) ** 2))
        if total > 0:
            x = field.coords()
            inside = np.abs(x) <= abs(hp) * (grid.N // 2)
            kept = np.abs(field.samples) ** 2
            for ax in range(grid.n):
                kept = np.compress(inside, kept, axis=ax)
            lost = (total - kept.sum()) / total
            if lost > window_tol:
                raise AliasingError(f"resample: {lost:.2e} of the mass lies outside the target window")
            if abs(hp) > abs(d):
                spec = np.abs(_fft_centered(field.samples)) ** 2
                kap = (np.arange(field.grid.N) - field.grid.N // 2) * (2 * math.pi / (field.grid.N * abs(d)))
                keep = np.abs(kap) < math.pi / abs(hp)
                inner = spec
                for ax in range(grid.n):
                    inner = np.compress(keep, inner, axis=ax)
                lost = (spec.sum() - inner.sum()) / spec.sum()
                if lost > window_tol:
                    raise AliasingError(f"resample: {lost:.2e} of the mass lies above the target band")
    s = field.samples
    tx = target.coords()
    for ax in range(grid.n):
        s = _interp_axis(s, ax, d, tx)
    return WaveField(s, grid, rep, scale, field.chirp)


def _common(a: WaveField, b: WaveField):
    if a.representation is not b.representation:
        raise ValueError("representation mismatch")
    if a.grid != b.grid or abs(a.spacing - b.spacing) > SAME_SPACING * abs(a.spacing):
        b = resample(b, a.grid, a.scale)
    return a.values(), b.values(), a.measure


def relative_difference(a: WaveField, b: WaveField) -> float:
    """``||a - b|| / ||b||`` after resampling ``b`` onto ``a``'s nodes."""
    va, vb, _ = _common(a, b)
    den = np.sqrt(np.sum(np.abs(vb) ** 2))
    num = np.sqrt(np.sum(np.abs(va - vb) ** 2))
    return float(num / den) if den > 0 else float(num)


def overlap(a: WaveField, b: WaveField) -> float:
    """Phase-insensitive similarity ``|<a, b>| / (||a|| ||b||)``."""
    va, vb, _ = _common(a, b)
    den = np.sqrt(np.sum(np.abs(va) ** 2) * np.sum(np.abs(vb) ** 2))
    return float(abs(np.vdot(va, vb)) / den) if den > 0 else 1.0


# -- snapshot I/O ---------------------------------------------------------------

_HEADER = "#wavefield"


def save_field_csv(field: WaveField, path) -> Path:
    """Write the field as a header line plus ``re,im`` rows in row-major node order."""
    path = Path(path)
    g = field.grid
    head = (f"{_HEADER} n={g.n} N={g.N} L={g.L!r} scale={field.scale!r} "
            f"representation={field.representation.value} chirp={field.chirp!r}")
    flat = field.samples.ravel()
    body = np.column_stack([flat.real, flat.imag])
    with open(path, "w") as fh:
        fh.write(head + "\n")
        np.savetxt(fh, body, fmt="%.17g", delimiter=",")
    return path


def load_field_csv(path) -> WaveField:
    with open(path) as fh:
        head = fh.readline().split()
        if not head or head[0] != _HEADER:
            raise ValueError(f"{path}: not a wavefield snapshot")
        meta = dict(item.split("=", 1) for item in head[1:])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    g = Grid(int(meta["n"]), int(meta["N"]), float(meta["L"]))
    samples = (data[:, 0] + 1j * data[:, 1]).reshape(g.shape)
    return WaveField(samples, g, Representation(meta["representation"]),
                     float(meta["scale"]), float(meta.get("chirp", 0.0)))
