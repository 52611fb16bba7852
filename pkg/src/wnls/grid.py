"""Periodic spectral grid, Fourier transforms and norms.

The domain is the symmetric box [-L, L)^d sampled with n points per axis
(n a power of two), so dx = 2L/n and the resolved angular wavenumbers are
k_m = pi*m/L for m = -n/2 .. n/2-1, stored in FFT layout.  All derived
operators (free propagator, gradient, fractional Laplacian multipliers,
Littlewood-Paley projections) act diagonally in that basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .errors import DivergedFieldError, InvalidFrequencyError

__all__ = [
    "SpectralGrid",
    "Field",
    "FieldPair",
    "SpectrumField",
    "transform_forward",
    "transform_inverse",
    "apply_free_propagator",
    "gradient",
    "lp_project",
    "lp_multiplier",
    "norm",
    "l2_norm",
    "lp_norm",
    "h1_norm",
    "hs_dot_norm",
    "sigma_norm",
    "boundary_mass_fraction",
    "quadrature",
]


class SpectralGrid:
    """Uniform periodic grid on [-L, L)^d with FFT-layout wavenumber tables.

    Attributes:
        d: spatial dimension, 1..3.
        n: samples per axis; must be even and >= 8.  Powers of two give the
           fastest transforms but any even mixed-radix size is exact.
        L: half-width of the box.
        dx: grid spacing 2L/n.
        k: list of d 1D wavenumber arrays (pi*m/L, FFT layout).
        x: list of d 1D coordinate arrays (-L + j*dx).
        shape: (n,)*d.
    """

    def __init__(self, d: int, n: int, L: float):
        if d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {d}")
        if n < 8 or n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {n}")
        if not (L > 0 and np.isfinite(L)):
            raise ValueError(f"L must be positive and finite, got {L}")
        self.d = d
        self.n = n
        self.L = float(L)
        self.dx = 2.0 * self.L / n
        self.shape = (n,) * d
        self.size = n**d
        # fftfreq(n, d=dx) yields m/(n*dx) = m/(2L); scale by 2*pi -> pi*m/L
        self.k = [2.0 * np.pi * _fft.fftfreq(n, d=self.dx) for _ in range(d)]
        self.x = [-self.L + self.dx * np.arange(n) for _ in range(d)]
        self._cache: dict = {}

    # -- cached lattice tables -------------------------------------------

    def k_sq(self) -> np.ndarray:
        """|k|^2 on the full lattice, FFT layout."""
        if "k_sq" not in self._cache:
            mesh = np.meshgrid(*self.k, indexing="ij")
            self._cache["k_sq"] = sum(km**2 for km in mesh)
        return self._cache["k_sq"]

    def k_abs(self) -> np.ndarray:
        if "k_abs" not in self._cache:
            self._cache["k_abs"] = np.sqrt(self.k_sq())
        return self._cache["k_abs"]

    def k_axis(self, axis: int) -> np.ndarray:
        """Wavenumber of one axis broadcast over the full lattice."""
        key = ("k_axis", axis)
        if key not in self._cache:
            shape = [1] * self.d
            shape[axis] = self.n
            self._cache[key] = self.k[axis].reshape(shape)
        return self._cache[key]

    def x_axis(self, axis: int) -> np.ndarray:
        key = ("x_axis", axis)
        if key not in self._cache:
            shape = [1] * self.d
            shape[axis] = self.n
            self._cache[key] = self.x[axis].reshape(shape)
        return self._cache[key]

    def x_sq(self) -> np.ndarray:
        """|x|^2 on the full lattice."""
        if "x_sq" not in self._cache:
            mesh = np.meshgrid(*self.x, indexing="ij")
            self._cache["x_sq"] = sum(xm**2 for xm in mesh)
        return self._cache["x_sq"]

    def boundary_mask(self, shell: float = 0.125) -> np.ndarray:
        """Boolean mask of the outer shell: any |x_axis| >= (1-shell)*L."""
        key = ("boundary", shell)
        if key not in self._cache:
            cut = (1.0 - shell) * self.L
            mask = np.zeros(self.shape, dtype=bool)
            for ax in range(self.d):
                mask |= np.abs(self.x_axis(ax)) >= cut
            self._cache[key] = mask
        return self._cache[key]

    def __repr__(self) -> str:
        return f"SpectralGrid(d={self.d}, n={self.n}, L={self.L})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpectralGrid)
            and (self.d, self.n, self.L) == (other.d, other.n, other.L)
        )

    def __hash__(self):
        return hash((self.d, self.n, self.L))


@dataclass
class Field:
    """Complex samples of one component on a SpectralGrid."""

    grid: SpectralGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.shape != self.grid.shape:
            if self.data.size == self.grid.size:
                self.data = self.data.reshape(self.grid.shape)
            else:
                raise ValueError(
                    f"data has {self.data.size} samples, grid expects {self.grid.size}"
                )

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data.view(np.float64))))

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())


@dataclass
class FieldPair:
    """The state (u, v) at one time."""

    u: Field
    v: Field
    t: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("u and v must share a grid")

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.v.is_finite()

    def copy(self) -> "FieldPair":
        return FieldPair(self.u.copy(), self.v.copy(), self.t)


@dataclass
class SpectrumField:
    """Fourier coefficients in the continuum normalization.

    data[m] approximates fhat(k_m) = integral of f(x) exp(-i k_m . x) dx,
    stored in FFT layout on the grid's wavenumber lattice.
    """

    grid: SpectralGrid
    data: np.ndarray


def _require_finite(f: Field, what: str = "field") -> None:
    if not f.is_finite():
        raise DivergedFieldError(f"{what} contains non-finite samples")


def _mode_phase(grid: SpectralGrid) -> np.ndarray:
    """exp(i k . x0) with x0 = (-L,...,-L): per-mode phase (-1)^(m1+...+md)."""
    key = "mode_phase"
    if key not in grid._cache:
        one = np.where(np.arange(grid.n) % 2 == 0, 1.0, -1.0)
        phase = one
        for _ in range(grid.d - 1):
            phase = np.multiply.outer(phase, one)
        grid._cache[key] = phase
    return grid._cache[key]


def transform_forward(f: Field) -> SpectrumField:
    """Forward DFT in continuum normalization (approximates the integral
    transform with kernel exp(-i k.x) over the box)."""
    _require_finite(f)
    g = f.grid
    raw = _fft.fftn(f.data)
    return SpectrumField(g, raw * (g.dx**g.d) * _mode_phase(g))


def transform_inverse(F: SpectrumField) -> Field:
    """Inverse of transform_forward."""
    g = F.grid
    raw = F.data / ((g.dx**g.d) * _mode_phase(g))
    return Field(g, _fft.ifftn(raw))


def apply_free_propagator(f: Field, dt: float) -> Field:
    """Exact linear Schrodinger flow exp(i*dt*Laplacian) on the grid.

    Spectral multiplier exp(-i |k|^2 dt); unitary, so every Sobolev norm
    is preserved.  dt may have either sign.
    """
    _require_finite(f)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    if dt == 0.0:
        return f.copy()
    g = f.grid
    mult = np.exp(-1j * dt * g.k_sq())
    return Field(g, _fft.ifftn(_fft.fftn(f.data) * mult))


def gradient(f: Field) -> list[Field]:
    """Spectral gradient: component j is ifft(i*k_j*fhat)."""
    _require_finite(f)
    g = f.grid
    fh = _fft.fftn(f.data)
    return [Field(g, _fft.ifftn(1j * g.k_axis(ax) * fh)) for ax in range(g.d)]


def _taper(r: np.ndarray) -> np.ndarray:
    """Cutoff profile: 1 for r<=1, 0 for r>=2, bump taper in between."""
    out = np.ones_like(r)
    out[r >= 2.0] = 0.0
    band = (r > 1.0) & (r < 2.0)
    s = r[band] - 1.0
    out[band] = np.exp(1.0 - 1.0 / (1.0 - s**2))
    return out


def lp_multiplier(grid: SpectralGrid, N: float, sharp: bool = False) -> np.ndarray:
    """Low-pass symbol phi(|k|/N) on the lattice.

    sharp=True replaces the taper by the indicator of |k| <= N (exactly
    idempotent variant used by projection tests).
    """
    if not (N > 0):
        raise InvalidFrequencyError(f"cutoff frequency must be positive, got {N}")
    r = grid.k_abs() / N
    if sharp:
        return (r <= 1.0).astype(np.float64)
    return _taper(r)


def lp_project(f: Field, N: float, side: str = "low", sharp: bool = False) -> Field:
    """Littlewood-Paley projection with cutoff N.

    side="low":  symbol phi(k/N);
    side="high": symbol 1 - phi(k/N);
    side="band": symbol phi(k/N) - phi(2k/N), the dyadic block at scale N.
    """
    _require_finite(f)
    g = f.grid
    low = lp_multiplier(g, N, sharp=sharp)
    if side == "low":
        mult = low
    elif side == "high":
        mult = 1.0 - low
    elif side == "band":
        mult = low - lp_multiplier(g, N / 2.0, sharp=sharp)
    else:
        raise ValueError(f"side must be low/high/band, got {side!r}")
    return Field(g, _fft.ifftn(_fft.fftn(f.data) * mult))


# -- quadrature and norms -------------------------------------------------


def quadrature(grid: SpectralGrid, values: np.ndarray) -> float:
    """dx^d-weighted sum (trapezoid on a uniform periodic grid)."""
    return float(np.sum(values).real * grid.dx**grid.d)


def l2_norm(f: Field) -> float:
    g = f.grid
    return float(np.sqrt(np.sum(f.data.real**2 + f.data.imag**2) * g.dx**g.d))


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    g = f.grid
    return float((np.sum(np.abs(f.data) ** p) * g.dx**g.d) ** (1.0 / p))


def hs_dot_norm(f: Field, s: float) -> float:
    """Homogeneous Sobolev norm via the |k|^s multiplier."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    g = f.grid
    fh = _fft.fftn(f.data)
    # |k|^(2s); numpy's 0**0 == 1 makes s=0 coincide with L2 exactly
    weight = g.k_sq() if s == 1.0 else g.k_sq() ** s
    total = np.sum(weight * (fh.real**2 + fh.imag**2))
    return float(np.sqrt(total * g.dx**g.d / g.size))


def h1_norm(f: Field) -> float:
    l2 = l2_norm(f)
    h1d = hs_dot_norm(f, 1.0)
    return float(np.hypot(l2, h1d))


def x_weighted_l2(f: Field) -> float:
    """L2 norm of |x| f."""
    g = f.grid
    return float(np.sqrt(quadrature(g, g.x_sq() * (f.data.real**2 + f.data.imag**2))))


def sigma_norm(f: Field) -> float:
    """H1 norm plus the L2 norm of x*f."""
    return h1_norm(f) + x_weighted_l2(f)


def norm(f: Field, kind: str, p: float | None = None, s: float | None = None) -> float:
    """Dispatch over the supported norm kinds.

    kind in {"L2", "L4", "Lp", "H1", "H1dot", "Hs_dot", "Sigma"}; "Lp"
    requires p, "Hs_dot" requires s.
    """
    if kind == "L2":
        return l2_norm(f)
    if kind == "L4":
        return lp_norm(f, 4.0)
    if kind == "Lp":
        if p is None:
            raise ValueError("Lp norm requires p")
        return lp_norm(f, p)
    if kind == "H1":
        return h1_norm(f)
    if kind == "H1dot":
        return hs_dot_norm(f, 1.0)
    if kind == "Hs_dot":
        if s is None:
            raise ValueError("Hs_dot norm requires s")
        return hs_dot_norm(f, s)
    if kind == "Sigma":
        return sigma_norm(f)
    raise ValueError(f"unknown norm kind {kind!r}")


def boundary_mass_fraction(s: FieldPair, shell: float = 0.125) -> float:
    """Fraction of total mass in the outer shell of the box.

    Monitors whether the periodic truncation is still faithful: decaying
    data should keep this below the configured tolerance.
    """
    g = s.grid
    dens = (
        s.u.data.real**2
        + s.u.data.imag**2
        + s.v.data.real**2
        + s.v.data.imag**2
    )
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    return float(np.sum(dens[g.boundary_mask(shell)]) / total)
