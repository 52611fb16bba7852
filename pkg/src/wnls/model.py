"""System parameters, weight derivation and criticality classification.

The coupled system under study is

    i u_t + Lap u = lambda |u|^alpha |v|^(beta+2) u,
    i v_t + Lap v = mu     |u|^(alpha+2) |v|^beta  v,

whose nonlinearities become the gradient of the single potential
G(w, z) = w^((alpha+2)/2) z^((beta+2)/2)  (w = |u|^2, z = |v|^2) after
scaling each equation by the weights (alpha+2)/(2 lambda) and
(beta+2)/(2 mu).  The checker below decides that structure for arbitrary
monomial pairs in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DivergedFieldError, InvalidCouplingError, InvalidParamsError
from .grid import Field, FieldPair

__all__ = [
    "SystemParams",
    "WeightPair",
    "Regime",
    "RegimeLabel",
    "MonomialPair",
    "GradientCheck",
    "derive_weights",
    "check_weighted_gradient",
    "classify_regime",
    "critical_regularity",
    "nonlinearity",
    "potential_density",
]

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class SystemParams:
    """Exponents and couplings of the monomial system.

    lambda/mu both zero selects the linear (free) system, used by control
    runs; a single zero coupling or a sign mismatch breaks the weighted
    energy structure and is rejected unless allow_sign_mismatch is set.
    """

    d: int
    alpha: float
    beta: float
    lam: float
    mu: float
    allow_sign_mismatch: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParamsError(f"d must be >= 1, got {self.d}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParamsError("exponents alpha, beta must be >= 0")
        if not self.allow_sign_mismatch:
            if (self.lam == 0) != (self.mu == 0) or self.lam * self.mu < 0:
                raise InvalidParamsError(
                    "couplings must share a sign (or both vanish); "
                    "set allow_sign_mismatch to explore anyway"
                )

    @property
    def is_linear(self) -> bool:
        return self.lam == 0 and self.mu == 0

    @property
    def is_defocusing(self) -> bool:
        return self.lam > 0 and self.mu > 0

    @property
    def is_focusing(self) -> bool:
        return self.lam < 0 and self.mu < 0


@dataclass(frozen=True)
class WeightPair:
    """Weights (c1, c2) and the matched monomial potential G = w^p z^q."""

    c1: float
    c2: float
    g_exponents: tuple[float, float]

    @property
    def p(self) -> float:
        return self.g_exponents[0]

    @property
    def q(self) -> float:
        return self.g_exponents[1]


def derive_weights(p: SystemParams) -> WeightPair:
    """Canonical weights ((alpha+2)/(2 lambda), (beta+2)/(2 mu))."""
    if p.lam == 0 or p.mu == 0:
        raise InvalidCouplingError("weights require nonzero couplings")
    return WeightPair(
        c1=(p.alpha + 2.0) / (2.0 * p.lam),
        c2=(p.beta + 2.0) / (2.0 * p.mu),
        g_exponents=((p.alpha + 2.0) / 2.0, (p.beta + 2.0) / 2.0),
    )


def unit_weights(p: SystemParams) -> WeightPair:
    """Weight pair used for linear control runs: (1, 1), no potential."""
    return WeightPair(1.0, 1.0, ((p.alpha + 2.0) / 2.0, (p.beta + 2.0) / 2.0))


def weights_for(p: SystemParams) -> WeightPair:
    """Canonical weights, falling back to (1,1) for the linear system."""
    if p.is_linear:
        return unit_weights(p)
    return derive_weights(p)


# -- weighted-gradient structure checker ----------------------------------


@dataclass(frozen=True)
class MonomialPair:
    """Exponents of the generalized monomial system

    i u_t + Lap u = lambda |u|^a1 |v|^b1 u,
    i v_t + Lap v = mu     |u|^a2 |v|^b2 v.
    """

    a1: Rational
    b1: Rational
    a2: Rational
    b2: Rational

    def __post_init__(self):
        for name in ("a1", "b1", "a2", "b2"):
            if getattr(self, name) < 0:
                raise InvalidParamsError(f"monomial exponent {name} must be >= 0")


@dataclass(frozen=True)
class GradientCheck:
    """Outcome of the structure test.

    When is_gradient, (a, b) are exact rational weights and potential is a
    tuple of monomial terms (coeff, p, q) meaning sum of coeff * w^p * z^q.
    """

    is_gradient: bool
    a: Fraction | None = None
    b: Fraction | None = None
    potential: tuple[tuple[Fraction, Fraction, Fraction], ...] = ()
    reason: str = ""


@dataclass(frozen=True)
class GradientCheckM:
    """Outcome of the m-component structure test.

    potential terms are (coeff, exponent-vector) with the exponent vector
    over the modulus-square variables w_1..w_m.
    """

    is_gradient: bool
    weights: tuple[Fraction, ...] = ()
    potential: tuple[tuple[Fraction, tuple[Fraction, ...]], ...] = ()
    reason: str = ""


def check_weighted_gradient_m(
    exponents: list[tuple[Rational, ...]],
    couplings: list[Rational] | None = None,
) -> GradientCheckM:
    """m-component structure test for i du_j/dt + Lap u_j = c_j (prod_i
    |u_i|^{E[j][i]}) u_j, in exact rational arithmetic.

    Decides whether nonzero real weights a_j and a single potential
    G(w_1..w_m) exist with dG/dw_j = a_j f_j, where f_j is the j-th
    monomial in w_i = |u_i|^2.  Existence requires equality of every pair
    of mixed partials; for monomials that is an exponent-matching plus a
    linear consistency system for the weights, solved by propagation over
    the compatibility graph.  Zero weights are rejected: they void the
    conservation laws the structure exists to provide.
    """
    m = len(exponents)
    if m < 1:
        raise ValueError("need at least one component")
    if couplings is None:
        couplings = [1] * m
    coeff = [Fraction(c) for c in couplings]
    if any(c == 0 for c in coeff):
        raise InvalidCouplingError("couplings must be nonzero")
    # exponents of f_j over w_i: E[j][i]/2 (inputs are powers of |u_i|)
    expo = [[Fraction(e) / 2 for e in row] for row in exponents]
    if any(len(row) != m for row in expo):
        raise ValueError("each exponent row needs one entry per component")
    if any(e < 0 for row in expo for e in row):
        raise InvalidParamsError("monomial exponents must be >= 0")

    # pairwise compatibility d/dw_i (a_j f_j) = d/dw_j (a_i f_i):
    # both sides vanish, or exponent vectors must satisfy
    # expo[j] - delta_i == expo[i] - delta_j with a coefficient relation
    ratio_edges: list[tuple[int, int, Fraction]] = []  # a_j / a_i = value
    for j in range(m):
        for i in range(j):
            left = expo[j][i]  # d/dw_i of f_j factor
            right = expo[i][j]
            if left == 0 and right == 0:
                continue
            if left == 0 or right == 0:
                dead = j if right == 0 else i
                return GradientCheckM(
                    False,
                    reason=f"compatibility forces weight a_{dead + 1} = 0 "
                    "(degenerate pair)",
                )
            lhs = expo[j].copy()
            lhs[i] -= 1
            rhs = expo[i].copy()
            rhs[j] -= 1
            if lhs != rhs:
                return GradientCheckM(
                    False,
                    reason="mixed partials of components "
                    f"{i + 1} and {j + 1} carry different monomials",
                )
            # a_j coeff_j left == a_i coeff_i right
            ratio_edges.append((j, i, (coeff[i] * right) / (coeff[j] * left)))

    # propagate weights over the constraint graph; free components get the
    # canonical normalization a_j = (E[j][j] + 2) / (2 c_j)
    weights: list[Fraction | None] = [None] * m
    adjacency: dict[int, list[tuple[int, Fraction]]] = {j: [] for j in range(m)}
    for j, i, ratio in ratio_edges:
        adjacency[j].append((i, 1 / ratio))  # a_i = a_j / ratio
        adjacency[i].append((j, ratio))
    for root in range(m):
        if weights[root] is not None:
            continue
        weights[root] = (expo[root][root] + 1) / coeff[root]
        stack = [root]
        while stack:
            j = stack.pop()
            for i, ratio in adjacency[j]:
                value = weights[j] * ratio
                if weights[i] is None:
                    weights[i] = value
                    stack.append(i)
                elif weights[i] != value:
                    return GradientCheckM(
                        False, reason="inconsistent weight cycle in the "
                        "compatibility graph",
                    )
    assert all(w is not None and w != 0 for w in weights)

    # integrate: each component contributes the term with its self-exponent
    # raised by one; shared terms across components must coincide
    terms: dict[tuple[Fraction, ...], Fraction] = {}
    for j in range(m):
        vec = expo[j].copy()
        vec[j] += 1
        key = tuple(vec)
        value = weights[j] * coeff[j] / vec[j]
        if key in terms and terms[key] != value:
            return GradientCheckM(
                False, reason="potential terms collide with unequal coefficients"
            )
        terms[key] = value
    potential = tuple(sorted((v, k) for k, v in terms.items()))
    # verify dG/dw_j == a_j f_j exactly
    for j in range(m):
        derived: dict[tuple[Fraction, ...], Fraction] = {}
        for value, key in potential:
            if key[j] == 0:
                continue
            dkey = list(key)
            dkey[j] -= 1
            dkey = tuple(dkey)
            derived[dkey] = derived.get(dkey, Fraction(0)) + value * key[j]
        expect = {tuple(expo[j]): weights[j] * coeff[j]}
        derived = {k: v for k, v in derived.items() if v != 0}
        if derived != expect:
            return GradientCheckM(False, reason="integrated potential fails verification")
    return GradientCheckM(True, tuple(weights), potential)


def check_weighted_gradient(
    m: MonomialPair,
    lam: Rational = 1,
    mu: Rational = 1,
) -> GradientCheck:
    """Two-component structure test: nonzero weights (a, b) and a potential
    G with dG/dw = a*f, dG/dz = b*g, decided in exact rational arithmetic.

    f = lam w^(a1/2) z^(b1/2) and g = mu w^(a2/2) z^(b2/2) in the modulus
    variables w = |u|^2, z = |v|^2.  Thin wrapper over the m-component
    checker.
    """
    res = check_weighted_gradient_m(
        [(m.a1, m.b1), (m.a2, m.b2)], [lam, mu]
    )
    if not res.is_gradient:
        return GradientCheck(False, reason=res.reason)
    potential = tuple((value, key[0], key[1]) for value, key in res.potential)
    return GradientCheck(True, res.weights[0], res.weights[1], potential)


def params_gradient_check(p: SystemParams) -> GradientCheck:
    """Structure check for the system's own monomial family."""
    if p.is_linear:
        return GradientCheck(True, Fraction(1), Fraction(1), ())
    return check_weighted_gradient(
        MonomialPair(
            Fraction(p.alpha).limit_denominator(10**9),
            Fraction(p.beta).limit_denominator(10**9) + 2,
            Fraction(p.alpha).limit_denominator(10**9) + 2,
            Fraction(p.beta).limit_denominator(10**9),
        ),
        Fraction(p.lam).limit_denominator(10**12),
        Fraction(p.mu).limit_denominator(10**12),
    )


# -- criticality ----------------------------------------------------------


class RegimeLabel(str, Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL_LINE = "CriticalLine"
    CRITICAL_LINE_ENDPOINT = "CriticalLineEndpoint"
    CRITICAL_POINT = "CriticalPoint"
    SUPERCRITICAL = "Supercritical"
    OUTSIDE_PAPER_SCOPE = "OutsidePaperScope"


@dataclass(frozen=True)
class Regime:
    label: RegimeLabel
    s_c: float


def critical_regularity(d: int, alpha: float, beta: float) -> float:
    """s_c = d/2 - 2/(alpha+beta+2)."""
    return d / 2.0 - 2.0 / (alpha + beta + 2.0)


def classify_regime(p: SystemParams) -> Regime:
    """Label (alpha, beta) against the d=3 critical line alpha+beta=2 and
    the d=4 critical point (0,0); other dimensions only report s_c.

    Only d, alpha, beta and the coupling signs matter; the magnitude of
    (lambda, mu) never changes the label.
    """
    s_c = critical_regularity(p.d, p.alpha, p.beta)
    total = p.alpha + p.beta
    if p.d == 3:
        if total < 2.0:
            label = RegimeLabel.SUBCRITICAL
        elif total == 2.0:
            if p.alpha > 0 and p.beta > 0:
                label = RegimeLabel.CRITICAL_LINE
            else:
                label = RegimeLabel.CRITICAL_LINE_ENDPOINT
        else:
            label = RegimeLabel.SUPERCRITICAL
    elif p.d == 4:
        if total == 0.0:
            label = RegimeLabel.CRITICAL_POINT
        else:
            label = RegimeLabel.SUPERCRITICAL
    else:
        label = RegimeLabel.OUTSIDE_PAPER_SCOPE
    return Regime(label, s_c)


# -- pointwise nonlinearity ------------------------------------------------


def _mod_sq(a: np.ndarray) -> np.ndarray:
    return a.real**2 + a.imag**2


def mod_power(sq: np.ndarray, exponent: float) -> np.ndarray:
    """|w|^exponent from |w|^2, with fast paths for the common exponents.

    numpy's 0.0**0.0 == 1.0 realizes the 0^0 := 1 convention; the factor
    only ever multiplies an amplitude that vanishes with it.
    """
    if exponent == 0.0:
        return np.ones_like(sq)
    if exponent == 1.0:
        return np.sqrt(sq)
    if exponent == 2.0:
        return sq
    if exponent == 4.0:
        return sq * sq
    return sq ** (exponent / 2.0)


def nonlinearity(p: SystemParams, state: FieldPair) -> FieldPair:
    """Pointwise right-hand sides (lambda |u|^a |v|^(b+2) u, mu |u|^(a+2) |v|^b v)."""
    if not state.is_finite():
        raise DivergedFieldError("nonlinearity of a non-finite state")
    u, v = state.u.data, state.v.data
    usq, vsq = _mod_sq(u), _mod_sq(v)
    fu = p.lam * mod_power(usq, p.alpha) * mod_power(vsq, p.beta + 2.0) * u
    fv = p.mu * mod_power(usq, p.alpha + 2.0) * mod_power(vsq, p.beta) * v
    g = state.grid
    return FieldPair(Field(g, fu), Field(g, fv), state.t)


def potential_density(p: SystemParams, state: FieldPair) -> Field:
    """|u|^(alpha+2) |v|^(beta+2) as a real-valued field (stored complex)."""
    u, v = state.u.data, state.v.data
    dens = mod_power(_mod_sq(u), p.alpha + 2.0) * mod_power(_mod_sq(v), p.beta + 2.0)
    return Field(state.grid, dens.astype(np.complex128))
