"""Grid realisation of the evolution operators on a periodic box.

Fields live on a periodic n^3 lattice over a centred box [-L/2, L/2)^3 and
the solution operator factors into three steps: a per-mode multiplier in
Fourier space, a constant matrix on the values, and composition with the
linear frame map x -> e^{-tW} x.  The frame map does not preserve the
lattice, so the composition step interpolates: trilinear with periodic wrap
(fast, low order) or exact evaluation of the band-limited interpolant at the
warped points (spectral accuracy, cost proportional to the number of active
modes).  Axes left invariant by the frame map are detected and handled by
FFTs, which makes the exact path cheap for flows with an untouched vertical.

The per-mode RK4 integrator mirrors the multiplier step without quadrature
and serves as the brute-force oracle for it.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .geometry import FlowMatrix, matrix_exp
from .symbols import QuadratureConfig, SymbolEvaluator, _quad_monomials

__all__ = [
    "RepMismatch",
    "TimeClamp",
    "Rep",
    "Interp",
    "GridSpec",
    "GridField",
    "EvolverConfig",
    "gaussian_scalar_modes",
    "gradient_field",
    "gaussian_gradient_field",
    "plane_wave_field",
    "mode_frequency",
    "random_localized_field",
    "apply_generator",
    "evolve_field",
    "evolve_field_adjoint",
    "rk4_mode_factors",
    "rk4_evolve_field",
    "curl_norm",
    "write_field",
    "read_field",
    "write_slice_csv",
]


class RepMismatch(ValueError):
    """Field is in the wrong representation for this operation."""


class TimeClamp(RuntimeError):
    """Requested time would push active frequencies past the grid resolution."""

    def __init__(self, message: str, max_warped: float = 0.0, nyquist: float = 0.0):
        super().__init__(message)
        self.max_warped = max_warped
        self.nyquist = nyquist


class Rep(enum.Enum):
    PHYSICAL = "physical"
    FOURIER = "fourier"


class Interp(enum.Enum):
    TRILINEAR = "trilinear"
    SPECTRAL = "spectral"


@dataclass(frozen=True)
class GridSpec:
    """Periodic n^3 sampling of a centred cube with side length ``length``."""

    n: int = 64
    length: float = 16.0 * np.pi

    def __post_init__(self) -> None:
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError("grid size n must be even and at least 8")
        if not self.length > 0.0:
            raise ValueError("box length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def nyquist(self) -> float:
        """Largest representable frequency magnitude per axis (cycles/length)."""
        return self.n / (2.0 * self.length)

    @cached_property
    def freqs1d(self) -> np.ndarray:
        f = np.fft.fftfreq(self.n, d=self.spacing)
        f.flags.writeable = False
        return f

    @cached_property
    def coords1d(self) -> np.ndarray:
        """Centred sample coordinates j*h - L/2."""
        x = np.arange(self.n) * self.spacing - 0.5 * self.length
        x.flags.writeable = False
        return x

    @cached_property
    def freq_lattice(self) -> np.ndarray:
        f = self.freqs1d
        lat = np.stack(np.meshgrid(f, f, f, indexing="ij"), axis=-1)
        lat.flags.writeable = False
        return lat

    @cached_property
    def coord_lattice(self) -> np.ndarray:
        c = self.coords1d
        lat = np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)
        lat.flags.writeable = False
        return lat

    @cached_property
    def parity(self) -> np.ndarray:
        """(-1)^(i+j+k), the phase between corner-indexed FFTs and centred coords."""
        i = np.arange(self.n)
        s = (-1.0) ** (i[:, None, None] + i[None, :, None] + i[None, None, :])
        s.flags.writeable = False
        return s


@dataclass(frozen=True)
class GridField:
    """Complex 3-component field sampled on a grid, in one representation.

    Fourier data follows the plain FFT convention: ``data = fftn(physical)``
    over the three grid axes, component by component.
    """

    grid: GridSpec
    rep: Rep
    data: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.data, dtype=np.complex128)
        n = self.grid.n
        if d.shape != (n, n, n, 3):
            raise ValueError(f"field data must have shape {(n, n, n, 3)}, got {d.shape}")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    def to_fourier(self) -> "GridField":
        if self.rep is Rep.FOURIER:
            return self
        return GridField(self.grid, Rep.FOURIER, np.fft.fftn(self.data, axes=(0, 1, 2)))

    def to_physical(self) -> "GridField":
        if self.rep is Rep.PHYSICAL:
            return self
        return GridField(self.grid, Rep.PHYSICAL, np.fft.ifftn(self.data, axes=(0, 1, 2)))

    def l2_norm(self) -> float:
        phys = self.to_physical()
        h = self.grid.spacing
        return float(np.sqrt(h**3 * np.sum(np.abs(phys.data) ** 2)))

    def max_norm(self) -> float:
        phys = self.to_physical()
        return float(np.sqrt(np.sum(np.abs(phys.data) ** 2, axis=-1)).max())

    def inner(self, other: "GridField") -> complex:
        """Discrete L^2 pairing h^3 sum u . conj(v)."""
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")
        u = self.to_physical().data
        v = other.to_physical().data
        return complex(self.grid.spacing**3 * np.sum(u * np.conj(v)))


@dataclass(frozen=True)
class EvolverConfig:
    """Knobs for the grid evolution operators."""

    interpolation: Interp = Interp.TRILINEAR
    quadrature: QuadratureConfig | None = None
    clamp_time: float = 10.0
    spectral_mode_tol: float = 1e-13
    max_spectral_modes: int = 150_000
    clamp_mode_tol: float = 1e-9

    def __post_init__(self) -> None:
        if not self.clamp_time > 0.0:
            raise ValueError("clamp_time must be positive")


_DEFAULT_CONFIG = EvolverConfig()


def _require_physical(field: GridField) -> None:
    if field.rep is not Rep.PHYSICAL:
        raise RepMismatch(f"operation requires a physical-space field, got {field.rep.value}")


# -- generators -----------------------------------------------------------


def gaussian_scalar_modes(
    spec: GridSpec, sigma: float, amplitude: float = 1.0, cutoff: float = 1e-13
) -> np.ndarray:
    """FFT-convention modes of a Gaussian bump exp(-|x|^2/(2 sigma^2)) shape.

    Centred at the box centre; modes below ``cutoff`` relative to the peak
    are zeroed, so the result is exactly band-limited.  Returned amplitudes
    are normalised to a unit peak mode rather than a unit physical peak.
    """
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    xi = spec.freq_lattice
    r2 = np.sum(xi * xi, axis=-1)
    prof = amplitude * np.exp(-2.0 * np.pi**2 * sigma**2 * r2)
    prof[np.abs(prof) < cutoff * abs(amplitude)] = 0.0
    return prof * spec.parity * spec.n**3


def gradient_field(spec: GridSpec, scalar_modes: np.ndarray) -> GridField:
    """Physical gradient field of a scalar given by its FFT-convention modes."""
    scalar_modes = np.asarray(scalar_modes, dtype=np.complex128)
    if scalar_modes.shape != (spec.n,) * 3:
        raise ValueError("scalar modes must be a full n^3 array")
    comps = 2j * np.pi * spec.freq_lattice * scalar_modes[..., None]
    return GridField(spec, Rep.PHYSICAL, np.fft.ifftn(comps, axes=(0, 1, 2)))


def gaussian_gradient_field(
    spec: GridSpec, sigma: float, amplitude: float = 1.0, cutoff: float = 1e-13
) -> GridField:
    return gradient_field(spec, gaussian_scalar_modes(spec, sigma, amplitude, cutoff))


def mode_frequency(spec: GridSpec, index: tuple[int, int, int]) -> np.ndarray:
    """Frequency vector of an integer lattice mode index."""
    half = spec.n // 2
    for m in index:
        if not (-half <= m < half):
            raise ValueError(f"mode index {index} outside [-n/2, n/2)")
    return np.array(index, dtype=float) / spec.length


def plane_wave_field(spec: GridSpec, a0: float, index: tuple[int, int, int]) -> GridField:
    """Lattice plane wave a0 * k0 * exp(2 pi i k0 . x) with k0 = index/L."""
    k0 = mode_frequency(spec, index)
    phase = np.exp(2j * np.pi * np.einsum("xyzc,c->xyz", spec.coord_lattice, k0))
    data = a0 * k0[None, None, None, :] * phase[..., None]
    return GridField(spec, Rep.PHYSICAL, data)


def random_localized_field(
    spec: GridSpec,
    rng: np.random.Generator,
    sigma: float,
    mode_radius: int = 3,
    cutoff: float = 1e-12,
) -> GridField:
    """Random smooth band-limited field under a centred Gaussian envelope.

    Random low-order Fourier content multiplied by the envelope, then hard
    band-limited again; localisation keeps box-periodicity effects at the
    cutoff level.
    """
    n = spec.n
    modes = np.zeros((n, n, n, 3), dtype=np.complex128)
    rad = np.arange(-mode_radius, mode_radius + 1)
    blk = (
        rng.standard_normal((len(rad),) * 3 + (3,))
        + 1j * rng.standard_normal((len(rad),) * 3 + (3,))
    )
    for ai, a in enumerate(rad):
        for bi, b in enumerate(rad):
            for ci, c in enumerate(rad):
                modes[a % n, b % n, c % n] = blk[ai, bi, ci]
    u = np.fft.ifftn(modes, axes=(0, 1, 2))
    env = np.exp(-np.sum(spec.coord_lattice**2, axis=-1) / (2.0 * sigma**2))
    v = u * env[..., None]
    vhat = np.fft.fftn(v, axes=(0, 1, 2))
    mags = np.abs(vhat).max(axis=-1)
    vhat[mags < cutoff * mags.max()] = 0.0
    return GridField(spec, Rep.PHYSICAL, np.fft.ifftn(vhat, axes=(0, 1, 2)))


# -- warped sampling ------------------------------------------------------


def _invariant_axes(b: np.ndarray) -> list[int]:
    """Axes whose row and column of the warp matrix match the identity."""
    out = []
    eye = np.eye(3)
    tol = 1e-14 * max(1.0, float(np.abs(b).max()))
    for a in range(3):
        if np.abs(b[a] - eye[a]).max() <= tol and np.abs(b[:, a] - eye[a]).max() <= tol:
            out.append(a)
    return out


def _mode_sum_2d(coords: np.ndarray, eta: np.ndarray, coef: np.ndarray, chunk: int = 512) -> np.ndarray:
    """sum_k coef_k exp(2 pi i (eta_k0 x + eta_k1 y)) on the coords x coords grid."""
    n = len(coords)
    out = np.zeros((n, n, coef.shape[-1]), dtype=np.complex128)
    for s in range(0, len(eta), chunk):
        e = slice(s, min(s + chunk, len(eta)))
        px = np.exp(2j * np.pi * np.outer(eta[e, 0], coords))
        py = np.exp(2j * np.pi * np.outer(eta[e, 1], coords))
        out += np.einsum("kx,ky,kc->xyc", px, py, coef[e], optimize=True)
    return out


def _mode_sum_3d(coords: np.ndarray, eta: np.ndarray, coef: np.ndarray, chunk: int = 48) -> np.ndarray:
    n = len(coords)
    out = np.zeros((n, n, n, coef.shape[-1]), dtype=np.complex128)
    for s in range(0, len(eta), chunk):
        e = slice(s, min(s + chunk, len(eta)))
        px = np.exp(2j * np.pi * np.outer(eta[e, 0], coords))
        py = np.exp(2j * np.pi * np.outer(eta[e, 1], coords))
        pz = np.exp(2j * np.pi * np.outer(eta[e, 2], coords))
        pxy = np.einsum("kx,ky->kxy", px, py)
        out += np.einsum("kxy,kz,kc->xyzc", pxy, pz, coef[e], optimize=True)
    return out


def _spectral_sample(
    modes: np.ndarray, b: np.ndarray, spec: GridSpec, tol: float, max_modes: int
) -> np.ndarray:
    """Exact values of the band-limited interpolant at the warped lattice b x.

    ``modes`` follows the plain FFT convention.  Active modes (above ``tol``
    relative to the peak) are summed directly at the warped points; axes left
    invariant by ``b`` keep lattice frequencies and are restored with an FFT,
    which reduces the sum from n^3 to n^2 evaluation points per mode.
    """
    n = spec.n
    inv_axes = _invariant_axes(b)
    if len(inv_axes) == 3:
        return np.fft.ifftn(modes, axes=(0, 1, 2))

    mags = np.abs(modes).max(axis=-1)
    peak = float(mags.max())
    if peak == 0.0:
        return np.zeros_like(modes)
    active = np.argwhere(mags > tol * peak)
    if len(active) > max_modes:
        raise ValueError(
            f"{len(active)} active modes exceed the spectral sampling budget "
            f"({max_modes}); use trilinear interpolation or raise max_spectral_modes"
        )
    idx = tuple(active.T)
    # Coefficients of the centred-frame interpolant sum C_m exp(2 pi i xi_m . x).
    coef = modes[idx] * (spec.parity[idx] / n**3)[:, None]
    xi = np.stack([spec.freqs1d[active[:, a]] for a in range(3)], axis=-1)
    eta = xi @ b  # rows are b^T xi, the warped frequencies
    coords = spec.coords1d

    if not inv_axes:
        return _mode_sum_3d(coords, eta, coef)

    ax = inv_axes[0]
    dense = [a for a in range(3) if a != ax]
    # Dense-axes mode sum per invariant-axis index, then an inverse FFT along
    # that axis: exp(2 pi i xi_m . z_j) = (-1)^m exp(2 pi i m j / n) on the
    # centred lattice.
    stack = np.zeros((n, n, n, 3), dtype=np.complex128)
    m_inv = active[:, ax]
    coef_inv = coef * ((-1.0) ** m_inv)[:, None]
    order = np.argsort(m_inv, kind="stable")
    m_sorted = m_inv[order]
    bounds = np.searchsorted(m_sorted, np.arange(n + 1))
    mover = [slice(None)] * 3
    for m in range(n):
        lo, hi = bounds[m], bounds[m + 1]
        if lo == hi:
            continue
        sel = order[lo:hi]
        plane = _mode_sum_2d(coords, eta[sel][:, dense], coef_inv[sel])
        mover[ax] = m
        stack[tuple(mover)] = plane
    out = np.fft.ifft(stack, axis=ax) * n
    return out


def _trilinear_sample(values: np.ndarray, b: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Periodic trilinear interpolation of lattice values at the points b x."""
    n = spec.n
    pts = spec.coord_lattice @ b.T
    u = (pts + 0.5 * spec.length) / spec.spacing
    u %= n
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0
    i0 %= n
    i1 = (i0 + 1) % n
    out = np.zeros_like(values)
    for bx in (0, 1):
        wx = frac[..., 0] if bx else 1.0 - frac[..., 0]
        ix = i1[..., 0] if bx else i0[..., 0]
        for by in (0, 1):
            wy = frac[..., 1] if by else 1.0 - frac[..., 1]
            iy = i1[..., 1] if by else i0[..., 1]
            for bz in (0, 1):
                wz = frac[..., 2] if bz else 1.0 - frac[..., 2]
                iz = i1[..., 2] if bz else i0[..., 2]
                out += (wx * wy * wz)[..., None] * values[ix, iy, iz]
    return out


# -- operators ------------------------------------------------------------


def _with_quadrature(ev: SymbolEvaluator, config: EvolverConfig) -> SymbolEvaluator:
    if config.quadrature is None or config.quadrature == ev.quadrature:
        return ev
    return ev.with_quadrature(config.quadrature)


def _clamp_guard(spec: GridSpec, modes: np.ndarray, b: np.ndarray, config: EvolverConfig) -> None:
    """Reject warps that push active content past the per-axis Nyquist limit."""
    mags = np.abs(modes).max(axis=-1)
    peak = float(mags.max())
    if peak == 0.0:
        return
    active = np.argwhere(mags > config.clamp_mode_tol * peak)
    xi = np.stack([spec.freqs1d[active[:, a]] for a in range(3)], axis=-1)
    eta = xi @ b
    worst = float(np.abs(eta).max()) if len(eta) else 0.0
    if worst > spec.nyquist:
        raise TimeClamp(
            f"warped frequencies reach {worst:.6g} cycles/length but the grid "
            f"resolves only {spec.nyquist:.6g} (Nyquist); evolving this far "
            f"would alias — shorten t, refine the grid, or enlarge the box",
            max_warped=worst,
            nyquist=spec.nyquist,
        )


def _frame_factors(flow: FlowMatrix, t: float, adjoint: bool) -> tuple[np.ndarray, np.ndarray]:
    """(value matrix, warp matrix) of the frame part of the evolution."""
    if adjoint:
        return matrix_exp(flow, -t), matrix_exp(flow, t)
    return matrix_exp(flow, -t).T, matrix_exp(flow, -t)


def _evolve_with_factors(
    ev: SymbolEvaluator,
    t: float,
    field: GridField,
    factors: np.ndarray,
    config: EvolverConfig,
    adjoint: bool,
) -> GridField:
    """Shared tail of the evolution operators: multiplier is precomputed."""
    spec = field.grid
    fhat = np.fft.fftn(field.data, axes=(0, 1, 2))
    value_mat, warp = _frame_factors(ev.flow, t, adjoint)
    _clamp_guard(spec, fhat, warp, config)
    mhat = fhat * factors[..., None]
    if config.interpolation is Interp.SPECTRAL:
        chat = mhat @ value_mat.T
        out = _spectral_sample(chat, warp, spec, config.spectral_mode_tol, config.max_spectral_modes)
    else:
        vals = np.fft.ifftn(mhat, axes=(0, 1, 2)) @ value_mat.T
        if _invariant_axes(warp) == [0, 1, 2]:
            out = vals
        else:
            out = _trilinear_sample(vals, warp, spec)
    return GridField(spec, Rep.PHYSICAL, out)


def _grid_factors(ev: SymbolEvaluator, t: float, spec: GridSpec, adjoint: bool) -> np.ndarray:
    xi = spec.freq_lattice.reshape(-1, 3)
    if adjoint:
        vals = ev.growth_factor_adjoint(t, xi)
    else:
        vals = ev.growth_factor(t, xi)
    return vals.reshape((spec.n,) * 3)


def evolve_field(
    ev: SymbolEvaluator, t: float, field: GridField, config: EvolverConfig | None = None
) -> GridField:
    """Apply the solution operator at time t to a physical-space field.

    Steps: FFT, multiply each mode by its growth factor, inverse FFT,
    multiply values by e^{-tW^T}, compose with x -> e^{-tW} x by the
    configured interpolation.
    """
    _require_physical(field)
    config = config or _DEFAULT_CONFIG
    if abs(t) > config.clamp_time:
        raise TimeClamp(
            f"|t| = {abs(t):.6g} exceeds the configured clamp_time {config.clamp_time:.6g}"
        )
    ev = _with_quadrature(ev, config)
    factors = _grid_factors(ev, t, field.grid, adjoint=False)
    return _evolve_with_factors(ev, t, field, factors, config, adjoint=False)


def evolve_field_adjoint(
    ev: SymbolEvaluator, t: float, field: GridField, config: EvolverConfig | None = None
) -> GridField:
    """Apply the adjoint solution operator: reversed multiplier, reversed frame."""
    _require_physical(field)
    config = config or _DEFAULT_CONFIG
    if abs(t) > config.clamp_time:
        raise TimeClamp(
            f"|t| = {abs(t):.6g} exceeds the configured clamp_time {config.clamp_time:.6g}"
        )
    ev = _with_quadrature(ev, config)
    factors = _grid_factors(ev, t, field.grid, adjoint=True)
    return _evolve_with_factors(ev, t, field, factors, config, adjoint=True)


def rk4_mode_factors(
    ev: SymbolEvaluator, t: float, xi: np.ndarray, step: float = 1e-3
) -> np.ndarray:
    """Per-mode growth factors from fixed-step RK4 on da/dr = m(r; xi) a.

    Brute-force counterpart of the quadrature-based growth factor; shares
    nothing with it beyond the pointwise symbol.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    xi = np.asarray(xi, dtype=float)
    shape = xi.shape[:-1]
    mono = _quad_monomials(xi.reshape(-1, 3))
    a = np.ones(len(mono))
    if t != 0.0:
        n_steps = max(1, int(round(abs(t) / step)))
        dt = t / n_steps
        for i in range(n_steps):
            t0 = i * dt
            f0, fh, f1 = ev._symbol_along(np.array([t0, t0 + 0.5 * dt, t0 + dt]), mono, -1)
            k1 = f0 * a
            k2 = fh * (a + 0.5 * dt * k1)
            k3 = fh * (a + 0.5 * dt * k2)
            k4 = f1 * (a + dt * k3)
            a = a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return a.reshape(shape)


def rk4_evolve_field(
    ev: SymbolEvaluator,
    t: float,
    field: GridField,
    step: float = 1e-3,
    config: EvolverConfig | None = None,
) -> GridField:
    """Brute-force evolution: per-mode RK4 factors plus the same frame pullback."""
    _require_physical(field)
    config = config or _DEFAULT_CONFIG
    if abs(t) > config.clamp_time:
        raise TimeClamp(
            f"|t| = {abs(t):.6g} exceeds the configured clamp_time {config.clamp_time:.6g}"
        )
    spec = field.grid
    xi = spec.freq_lattice.reshape(-1, 3)
    factors = rk4_mode_factors(ev, t, xi, step).reshape((spec.n,) * 3)
    return _evolve_with_factors(ev, t, field, factors, config, adjoint=False)


def apply_generator(ev: SymbolEvaluator, field: GridField) -> GridField:
    """Generator of the evolution: -(u . grad)phi - W^T phi + multiplier term.

    The gradient is spectral, the advecting velocity u(x) = Wx uses the
    centred-box branch of the position, and the multiplier acts mode-wise.
    """
    _require_physical(field)
    spec = field.grid
    w = ev.flow.matrix
    fhat = np.fft.fftn(field.data, axes=(0, 1, 2))
    xi = spec.freq_lattice

    m_vals = ev.symbol(xi.reshape(-1, 3)).reshape((spec.n,) * 3)
    mult_term = np.fft.ifftn(fhat * m_vals[..., None], axes=(0, 1, 2))

    u = spec.coord_lattice @ w.T
    adv = np.zeros_like(field.data)
    for a in range(3):
        deriv = np.fft.ifftn(2j * np.pi * xi[..., a : a + 1] * fhat, axes=(0, 1, 2))
        adv += u[..., a : a + 1] * deriv

    linear_term = -(field.data @ w)
    return GridField(spec, Rep.PHYSICAL, -adv + linear_term + mult_term)


def curl_norm(field: GridField) -> float:
    """Max pointwise magnitude of the spectral curl of the field."""
    fhat = field.to_fourier().data
    curl_hat = 2j * np.pi * np.cross(field.grid.freq_lattice, fhat)
    curl = np.fft.ifftn(curl_hat, axes=(0, 1, 2))
    return float(np.sqrt(np.sum(np.abs(curl) ** 2, axis=-1)).max())


# -- field files ----------------------------------------------------------

_MAGIC = b"GFLD"
_VERSION = 1
_HEADER = struct.Struct("<4sIddI")  # magic, version, n, box length, rep flag


def write_field(path, field: GridField) -> None:
    """Binary field file: header then n^3 x 3 complex values, x-fastest."""
    rep_flag = 0 if field.rep is Rep.PHYSICAL else 1
    header = _HEADER.pack(_MAGIC, _VERSION, float(field.grid.n), field.grid.length, rep_flag)
    payload = np.ascontiguousarray(field.data.transpose(2, 1, 0, 3)).astype("<c16").tobytes()
    with open(path, "wb") as fp:
        fp.write(header)
        fp.write(payload)


def read_field(path) -> GridField:
    with open(path, "rb") as fp:
        header = fp.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError("field file is truncated")
        magic, version, n_f, length, rep_flag = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError(f"not a field file (bad magic {magic!r})")
        if version != _VERSION:
            raise ValueError(f"unsupported field file version {version}")
        if n_f != int(n_f):
            raise ValueError(f"non-integral grid size {n_f}")
        n = int(n_f)
        raw = np.frombuffer(fp.read(), dtype="<c16")
    if raw.size != n**3 * 3:
        raise ValueError(f"field file payload has {raw.size} values, expected {n**3 * 3}")
    data = raw.reshape(n, n, n, 3).transpose(2, 1, 0, 3)
    rep = Rep.PHYSICAL if rep_flag == 0 else Rep.FOURIER
    return GridField(GridSpec(n, length), rep, data.astype(np.complex128))


def write_slice_csv(fp, field: GridField, axis: int = 2, index: int = 0) -> None:
    """CSV of one grid plane for plotting: coordinates plus re/im of each component."""
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    phys = field.to_physical()
    plane = np.take(phys.data, index, axis=axis)
    coords = field.grid.coords1d
    axes = [a for a in range(3) if a != axis]
    fp.write(
        "x%d,x%d,re1,im1,re2,im2,re3,im3\n" % (axes[0] + 1, axes[1] + 1)
    )
    for i in range(field.grid.n):
        for j in range(field.grid.n):
            v = plane[i, j]
            vals = [coords[i], coords[j]]
            for comp in v:
                vals.extend([comp.real, comp.imag])
            fp.write(",".join(f"{x:.17g}" for x in vals) + "\n")
