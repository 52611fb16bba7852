"""Exact functionals of the coupled system: weighted conservation laws,
virial identity, pseudoconformal law and the interaction Morawetz potential.

Conventions, for weights (c1, c2) attached to params (alpha, beta, lam, mu):

  e1 = c1*lam, e2 = c2*mu            (both (alpha+2)/2, (beta+2)/2 for the
                                      canonical weights, 0 for linear runs)
  g_coeff = 2*e1/(alpha+2)           (coefficient of |u|^(a+2)|v|^(b+2) in
                                      the potential matched to the weights)

  E_w  = int c1|grad u|^2 + c2|grad v|^2 + g_coeff*|u|^(a+2)|v|^(b+2)
  P_w  = Im int c1 u grad(conj u) + c2 v grad(conj v)
  Y    = int |x|^2 (c1|u|^2 + c2|v|^2)
  Y'   = 4 Im int c1 conj(u) x.grad u + c2 conj(v) x.grad v
  Y''  = 4 int [d(e1+e2) - (d+2) g_coeff] |u|^(a+2)|v|^(b+2) + 8 E_w

The d-specialized second-derivative form 2[3(alpha+beta)+2] sgn(lam) int G
+ 8 E_w printed for d=3 does not extend to d=4; the general-d expression
above is treated as authoritative and the specialized value is carried
alongside so the discrepancy can be reported instead of hidden.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .errors import TruncationUnreliableWarning, UnsupportedDimensionError
from .grid import Field, FieldPair, SpectralGrid, boundary_mass_fraction, quadrature
from .model import SystemParams, WeightPair, mod_power, weights_for

__all__ = [
    "ConservedSet",
    "VirialSample",
    "PseudoconformalSample",
    "MorawetzSample",
    "conserved_set",
    "weighted_energy",
    "virial_sample",
    "virial_second_derivative_special",
    "pseudoconformal_sample",
    "pseudoconformal_constant",
    "interaction_constants",
    "morawetz_sample",
    "morawetz_direct_oracle",
    "spacetime_l4_accumulate",
    "spacetime_l4_density",
    "energy_h1_bound",
]


# -- small helpers ----------------------------------------------------------


def _mod_sq(a: np.ndarray) -> np.ndarray:
    return a.real**2 + a.imag**2


def _grad(g: SpectralGrid, data: np.ndarray) -> list[np.ndarray]:
    fh = _fft.fftn(data)
    return [_fft.ifftn(1j * g.k_axis(ax) * fh) for ax in range(g.d)]


def _weight_coeffs(p: SystemParams, w: WeightPair) -> tuple[float, float, float]:
    """(e1, e2, g_coeff) for an arbitrary weight pair."""
    e1 = w.c1 * p.lam
    e2 = w.c2 * p.mu
    g_coeff = 2.0 * e1 / (p.alpha + 2.0)
    return e1, e2, g_coeff


def _potential_integral(p: SystemParams, s: FieldPair) -> float:
    usq = _mod_sq(s.u.data)
    vsq = _mod_sq(s.v.data)
    dens = mod_power(usq, p.alpha + 2.0) * mod_power(vsq, p.beta + 2.0)
    return quadrature(s.grid, dens)


def _check_decay(s: FieldPair, tol: float, what: str) -> None:
    frac = boundary_mass_fraction(s)
    if frac > tol:
        warnings.warn(
            f"{what}: boundary mass fraction {frac:.3e} exceeds {tol:.1e}; "
            "periodic truncation is no longer faithful",
            TruncationUnreliableWarning,
            stacklevel=3,
        )


# -- conserved set ----------------------------------------------------------


@dataclass
class ConservedSet:
    mass_u: float
    mass_v: float
    m_w: float
    p_w: np.ndarray  # d-vector
    e_w: float
    t: float


def conserved_set(p: SystemParams, s: FieldPair, weights: WeightPair | None = None) -> ConservedSet:
    w = weights or weights_for(p)
    g = s.grid
    _, _, g_coeff = _weight_coeffs(p, w)
    mass_u = quadrature(g, _mod_sq(s.u.data))
    mass_v = quadrature(g, _mod_sq(s.v.data))
    grad_u = _grad(g, s.u.data)
    grad_v = _grad(g, s.v.data)
    kin = 0.0
    p_w = np.zeros(g.d)
    for ax in range(g.d):
        kin += w.c1 * quadrature(g, _mod_sq(grad_u[ax])) + w.c2 * quadrature(
            g, _mod_sq(grad_v[ax])
        )
        # Im[u d(conj u)] = -Im[conj(u) du]
        p_w[ax] = -(
            w.c1 * quadrature(g, np.imag(np.conj(s.u.data) * grad_u[ax]))
            + w.c2 * quadrature(g, np.imag(np.conj(s.v.data) * grad_v[ax]))
        )
    e_w = kin + g_coeff * _potential_integral(p, s)
    return ConservedSet(mass_u, mass_v, w.c1 * mass_u + w.c2 * mass_v, p_w, e_w, s.t)


def weighted_energy(p: SystemParams, s: FieldPair, weights: WeightPair | None = None) -> float:
    w = weights or weights_for(p)
    g = s.grid
    _, _, g_coeff = _weight_coeffs(p, w)
    # Parseval: int |grad f|^2 = sum |k|^2 |fhat|^2 dx^d / n^d
    scale = g.dx**g.d / g.size
    ksq = g.k_sq()
    uh = _fft.fftn(s.u.data)
    vh = _fft.fftn(s.v.data)
    kin = float(
        np.sum(ksq * (w.c1 * _mod_sq(uh) + w.c2 * _mod_sq(vh))) * scale
    )
    return kin + g_coeff * _potential_integral(p, s)


# -- virial / variance -------------------------------------------------------


@dataclass
class VirialSample:
    y: float
    yp: float
    ypp_formula: float
    t: float
    ypp_special: float | None = None  # d-specialized printed form, for comparison


def _virial_parts(
    p: SystemParams, s: FieldPair, w: WeightPair
) -> tuple[float, float, float, float]:
    """(Y, Y', int G_abs, E_w) for the given weights."""
    g = s.grid
    xsq = g.x_sq()
    usq = _mod_sq(s.u.data)
    vsq = _mod_sq(s.v.data)
    y = quadrature(g, xsq * (w.c1 * usq + w.c2 * vsq))
    grad_u = _grad(g, s.u.data)
    grad_v = _grad(g, s.v.data)
    acc = 0.0
    kin = 0.0
    for ax in range(g.d):
        xax = g.x_axis(ax)
        acc += w.c1 * quadrature(g, xax * np.imag(np.conj(s.u.data) * grad_u[ax]))
        acc += w.c2 * quadrature(g, xax * np.imag(np.conj(s.v.data) * grad_v[ax]))
        kin += w.c1 * quadrature(g, _mod_sq(grad_u[ax]))
        kin += w.c2 * quadrature(g, _mod_sq(grad_v[ax]))
    yp = 4.0 * acc
    _, _, g_coeff = _weight_coeffs(p, w)
    pot = _potential_integral(p, s)
    e_w = kin + g_coeff * pot
    return y, yp, pot, e_w


def _ypp_general(p: SystemParams, pot: float, e_w: float, w: WeightPair) -> float:
    e1, e2, g_coeff = _weight_coeffs(p, w)
    d = p.d
    return 4.0 * (d * (e1 + e2) - (d + 2.0) * g_coeff) * pot + 8.0 * e_w


def virial_second_derivative_special(p: SystemParams, pot: float, e_w: float) -> float:
    """The d-specialized printed form 2[3(a+b)+2] sgn(lam) int G + 8 E_w.

    Coincides with the general-d expression exactly when d=3 with
    canonical weights; kept separate so its failure at d=4 is observable.
    """
    sgn = 0.0 if p.lam == 0 else (1.0 if p.lam > 0 else -1.0)
    return 2.0 * (3.0 * (p.alpha + p.beta) + 2.0) * sgn * pot + 8.0 * e_w


def virial_sample(
    p: SystemParams,
    s: FieldPair,
    weights: WeightPair | None = None,
    boundary_tol: float = 1e-10,
) -> VirialSample:
    """Variance Y, its exact first derivative and formula second derivative."""
    w = weights or weights_for(p)
    _check_decay(s, boundary_tol, "virial_sample")
    y, yp, pot, e_w = _virial_parts(p, s, w)
    ypp = _ypp_general(p, pot, e_w, w)
    special = None
    if not p.is_linear:
        special = virial_second_derivative_special(p, pot, e_w)
    return VirialSample(y, yp, ypp, s.t, special)


# -- pseudoconformal law ------------------------------------------------------


@dataclass
class PseudoconformalSample:
    p: float
    rhs_integrand: float  # int |u|^(a+2) |v|^(b+2) at this time
    t: float


def pseudoconformal_constant(p: SystemParams) -> float:
    """c in P'(t) = -c * t * int G: c = 2d(alpha+beta) + 4d - 8 (=16 on the
    d=3 critical line alpha+beta=2)."""
    return 2.0 * p.d * (p.alpha + p.beta) + 4.0 * p.d - 8.0


def pseudoconformal_sample(
    p: SystemParams,
    s: FieldPair,
    weights: WeightPair | None = None,
    boundary_tol: float = 1e-10,
) -> PseudoconformalSample:
    """P(t) = int c1|(x+2it grad)u|^2 + c2|(x+2it grad)v|^2 + 4t^2 g int G."""
    w = weights or weights_for(p)
    _check_decay(s, boundary_tol, "pseudoconformal_sample")
    g = s.grid
    t = s.t
    total = 0.0
    for c, f in ((w.c1, s.u), (w.c2, s.v)):
        grads = _grad(g, f.data)
        for ax in range(g.d):
            op = g.x_axis(ax) * f.data + 2j * t * grads[ax]
            total += c * quadrature(g, _mod_sq(op))
    _, _, g_coeff = _weight_coeffs(p, w)
    pot = _potential_integral(p, s)
    return PseudoconformalSample(total + 4.0 * t * t * g_coeff * pot, pot, t)


# -- interaction Morawetz ------------------------------------------------------


@dataclass
class MorawetzSample:
    m2: float
    lower_bound_rate: float  # quartic + Coulomb parts together
    t: float
    rate_quartic: float = 0.0
    rate_coulomb: float = 0.0


def interaction_constants(p: SystemParams) -> dict[str, float]:
    """Weights of the four bilinear terms and of the Coulomb lower bound."""
    a2 = p.alpha + 2.0
    b2 = p.beta + 2.0
    total = p.alpha + p.beta
    return {
        "A": p.mu**2 * a2**2,
        "B": p.lam**2 * b2**2,
        "C": p.lam * p.mu * a2 * b2,
        "D": p.lam * p.mu * a2 * b2,
        "L1": 2.0 * total * p.lam * p.mu**2 * a2,
        "L2": 2.0 * total * p.lam * p.mu**2 * a2,
        "L3": 2.0 * total * p.mu * p.lam**2 * b2,
        "L4": 2.0 * total * p.mu * p.lam**2 * b2,
    }


def _morawetz_kernels(g: SpectralGrid) -> dict[str, np.ndarray]:
    """rfftn of the zero-padded kernels z/|z| (vector) and 1/|z| (scalar).

    Padding to 2n per axis makes the circular convolution equal the free
    space (non-periodic) lattice convolution; both kernels are set to 0 at
    z=0 (the symmetric limit for z/|z|, and a dropped diagonal cell for
    1/|z|, matching the direct double-sum oracle).
    """
    key = "morawetz_kernels"
    if key in g._cache:
        return g._cache[key]
    n = g.n
    lag = ((np.arange(2 * n) + n) % (2 * n)) - n
    z1 = lag * g.dx
    Z = np.meshgrid(z1, z1, z1, indexing="ij")
    r = np.sqrt(Z[0] ** 2 + Z[1] ** 2 + Z[2] ** 2)
    safe = np.where(r > 0, r, 1.0)
    out = {}
    for ax in range(3):
        out[f"K{ax}"] = _fft.rfftn(np.where(r > 0, Z[ax] / safe, 0.0))
    out["R"] = _fft.rfftn(np.where(r > 0, 1.0 / safe, 0.0))
    g._cache[key] = out
    return out


def _padded_conv(g: SpectralGrid, rho: np.ndarray, kernel_hat: np.ndarray) -> np.ndarray:
    """(kernel * rho)(x) dx^3 on the original lattice, via zero padding."""
    n = g.n
    pad = np.zeros((2 * n,) * 3)
    pad[:n, :n, :n] = rho
    conv = _fft.irfftn(_fft.rfftn(pad) * kernel_hat, s=(2 * n,) * 3)
    return conv[:n, :n, :n] * g.dx**3


def _currents(g: SpectralGrid, data: np.ndarray) -> list[np.ndarray]:
    return [np.imag(np.conj(data) * grad) for grad in _grad(g, data)]


def morawetz_sample(p: SystemParams, s: FieldPair) -> MorawetzSample:
    """Interaction Morawetz potential M2 and its monotonicity lower bound.

    M2 assembles, for each of the four weighted pairs (m, n, W),

        2W [ <j_m, K*rho_n> + <j_n, K*rho_m> ],   K(z) = z/|z|,

    with currents j = Im[conj(w) grad w] and densities rho = |w|^2; the
    convolutions run over zero-padded lattices to emulate the whole-space
    integral.  The lower bound is the sum of the pointwise quartic term
    16 pi int [A|u|^4 + (C+D)|u|^2|v|^2 + B|v|^4] and the Coulomb term
    2 int int G(x) [(L1+L3)|u(y)|^2 + (L2+L4)|v(y)|^2] / |x-y|.
    """
    g = s.grid
    if g.d != 3:
        raise UnsupportedDimensionError("interaction Morawetz requires d=3")
    ker = _morawetz_kernels(g)
    cst = interaction_constants(p)
    ju = _currents(g, s.u.data)
    jv = _currents(g, s.v.data)
    rho_u = _mod_sq(s.u.data)
    rho_v = _mod_sq(s.v.data)

    conv_u = [_padded_conv(g, rho_u, ker[f"K{ax}"]) for ax in range(3)]
    conv_v = [_padded_conv(g, rho_v, ker[f"K{ax}"]) for ax in range(3)]

    def inner(j: list[np.ndarray], conv: list[np.ndarray]) -> float:
        return float(sum(np.sum(j[ax] * conv[ax]) for ax in range(3)) * g.dx**3)

    ju_ku = inner(ju, conv_u)
    jv_kv = inner(jv, conv_v)
    ju_kv = inner(ju, conv_v)
    jv_ku = inner(jv, conv_u)
    m2 = (
        2.0 * cst["A"] * 2.0 * ju_ku
        + 2.0 * cst["B"] * 2.0 * jv_kv
        + 2.0 * cst["C"] * (ju_kv + jv_ku)
        + 2.0 * cst["D"] * (jv_ku + ju_kv)
    )

    quart = 16.0 * np.pi * quadrature(
        g,
        cst["A"] * rho_u**2
        + (cst["C"] + cst["D"]) * rho_u * rho_v
        + cst["B"] * rho_v**2,
    )
    gdens = mod_power(rho_u, p.alpha + 2.0) * mod_power(rho_v, p.beta + 2.0)
    coul_u = _padded_conv(g, rho_u, ker["R"])
    coul_v = _padded_conv(g, rho_v, ker["R"])
    coulomb = 2.0 * float(
        np.sum(
            gdens
            * ((cst["L1"] + cst["L3"]) * coul_u + (cst["L2"] + cst["L4"]) * coul_v)
        )
        * g.dx**3
    )
    return MorawetzSample(m2, quart + coulomb, s.t, quart, coulomb)


def morawetz_direct_oracle(
    p: SystemParams, s: FieldPair, chunk: int = 256
) -> MorawetzSample:
    """O(N^2) pairwise evaluation of the same functionals.

    Literal double sum over lattice point pairs; independent of the FFT
    convolution path.  Cost grows with n^6: intended for grids <= 32^3.
    """
    g = s.grid
    if g.d != 3:
        raise UnsupportedDimensionError("interaction Morawetz requires d=3")
    cst = interaction_constants(p)
    mesh = np.meshgrid(*g.x, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    ju = np.stack([c.ravel() for c in _currents(g, s.u.data)], axis=1)
    jv = np.stack([c.ravel() for c in _currents(g, s.v.data)], axis=1)
    rho_u = _mod_sq(s.u.data).ravel()
    rho_v = _mod_sq(s.v.data).ravel()
    gdens = (
        mod_power(_mod_sq(s.u.data), p.alpha + 2.0)
        * mod_power(_mod_sq(s.v.data), p.beta + 2.0)
    ).ravel()

    npts = pts.shape[0]
    m2 = 0.0
    coulomb = 0.0
    for i0 in range(0, npts, chunk):
        i1 = min(i0 + chunk, npts)
        diff = pts[i0:i1, None, :] - pts[None, :, :]
        r = np.sqrt(np.sum(diff**2, axis=2))
        safe = np.where(r > 0, r, 1.0)
        kvec = diff / safe[..., None]
        kvec[r == 0] = 0.0
        # sum_j K(x_i - x_j) rho(x_j) and sum_j K(x_i - x_j) . j(x_j)
        k_rho_u = np.einsum("ijc,j->ic", kvec, rho_u)
        k_rho_v = np.einsum("ijc,j->ic", kvec, rho_v)
        k_ju = np.einsum("ijc,jc->i", kvec, ju)
        k_jv = np.einsum("ijc,jc->i", kvec, jv)
        for (jm, rm, jn_dot, rn_sum, W) in (
            (ju[i0:i1], rho_u[i0:i1], k_ju, k_rho_u, cst["A"]),
            (jv[i0:i1], rho_v[i0:i1], k_jv, k_rho_v, cst["B"]),
            (ju[i0:i1], rho_u[i0:i1], k_jv, k_rho_v, cst["C"]),
            (jv[i0:i1], rho_v[i0:i1], k_ju, k_rho_u, cst["D"]),
        ):
            # 2W sum_ij K(xi-xj).[ j_m(xi) rho_n(xj) - j_n(xj) rho_m(xi) ]
            m2 += 2.0 * W * (np.sum(jm * rn_sum) - np.sum(rm * jn_dot))
        inv_r = np.where(r > 0, 1.0 / safe, 0.0)
        coulomb += 2.0 * np.sum(
            gdens[i0:i1]
            * (
                (cst["L1"] + cst["L3"]) * (inv_r @ rho_u)
                + (cst["L2"] + cst["L4"]) * (inv_r @ rho_v)
            )
        )
    w6 = g.dx**6
    quart = 16.0 * np.pi * quadrature(
        g,
        cst["A"] * (rho_u.reshape(g.shape)) ** 2
        + (cst["C"] + cst["D"]) * (rho_u * rho_v).reshape(g.shape)
        + cst["B"] * (rho_v.reshape(g.shape)) ** 2,
    )
    return MorawetzSample(m2 * w6, quart + coulomb * w6, s.t, quart, coulomb * w6)


# -- spacetime L4 accumulator ---------------------------------------------------


def spacetime_l4_density(s: FieldPair) -> float:
    """int |u|^4 + |v|^4 at one time."""
    g = s.grid
    return quadrature(g, _mod_sq(s.u.data) ** 2 + _mod_sq(s.v.data) ** 2)


def spacetime_l4_accumulate(accumulator: float, s: FieldPair, dt: float) -> float:
    """accumulator + dt * int(|u|^4 + |v|^4) dx."""
    return accumulator + dt * spacetime_l4_density(s)


# -- a-priori H1 bound from energy conservation --------------------------------


def energy_h1_bound(p: SystemParams, s0: FieldPair) -> float:
    """Upper bound on ||u||_H1 + ||v||_H1 valid for defocusing runs.

    Mass conservation plus E_w >= c1 ||grad u||^2 + c2 ||grad v||^2 give
    ||u(t)||_H1 <= sqrt(mass_u(0) + E_w(0)/c1), likewise for v.
    """
    if not (p.is_defocusing or p.is_linear):
        raise ValueError("energy bound requires defocusing (or linear) couplings")
    w = weights_for(p)
    cs = conserved_set(p, s0, w)
    return float(
        np.sqrt(cs.mass_u + cs.e_w / w.c1) + np.sqrt(cs.mass_v + cs.e_w / w.c2)
    )
