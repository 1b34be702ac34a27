"""Distorted cylinders and distorted Weierstrass polynomials.

A distorted cylinder is an overlap region carrying two base coordinates
``z1`` (inner) and ``z2 = z2(z1, w)`` (outer) that agree on the core annulus
``w = 0``.  A curve of degree ``n`` in it is written as

    w**n + sum_i (f_i^-(z1) + f_i^+(z2)) w**(n-i)

with ``f_i^-`` holding the negative Laurent powers and ``f_i^+`` the rest.
All functions are represented as bi-series in ``(z1, w)``; the plus parts are
pulled back through the transition before being compared with anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConvergenceError, DomainError, FormatError, NumericalError
from .series import (
    Annulus,
    BiSeries,
    LaurentSeries,
    _parse_laurent_lines,
    bi_divide,
    circle,
    format_laurent,
    laurent_split,
    restrict,
    substitute,
)
from .weierstrass import WeierstrassPolynomial

DEFAULT_EPSILON = 1.0


@dataclass(frozen=True, eq=False)
class DistortedCylinder:
    """``W = {|z1| > r, |z2| < R, |w| < rho}`` with ``z2 = transition(z1, w)``."""

    r: float
    R: float
    rho: float
    r_prime: float
    R_prime: float
    transition: BiSeries
    inverse_transition: BiSeries

    @property
    def core(self) -> Annulus:
        return Annulus(self.r, self.R)

    @property
    def z_window(self) -> tuple[int, int]:
        return (self.transition.z_min, self.transition.z_max)

    @property
    def w_degree(self) -> int:
        return self.transition.w_degree

    @property
    def is_identity(self) -> bool:
        t = self.transition
        if t.z_max < 1:
            return False
        c = t.coefficients.copy()
        c[1 - t.z_min, 0] -= 1.0
        return not np.any(c)

    # construction -------------------------------------------------------
    @classmethod
    def from_transition(cls, r, R, rho, transition: BiSeries, r_prime=None, R_prime=None,
                        inverse_transition: BiSeries | None = None, check: bool = True):
        """Build from ``z2(z1, w)``; the inverse is found by fixed-point iteration if not given."""
        r_prime = r + (R - r) / 3 if r_prime is None else r_prime
        R_prime = R - (R - r) / 3 if R_prime is None else R_prime
        if not (r < r_prime < R_prime < R):
            raise ConfigError("need r < r' < R' < R")
        if inverse_transition is None:
            inverse_transition = _invert_transition(transition)
        cyl = cls(r, R, rho, r_prime, R_prime, transition, inverse_transition)
        if check:
            cyl.validate()
        return cyl

    @classmethod
    def identity(cls, r, R, rho, window=(-32, 32), w_degree=12, **kw):
        dom = Annulus(r, R)
        t = BiSeries.from_dict(dom, rho, {(1, 0): 1.0}, z_window=window, w_degree=w_degree)
        return cls.from_transition(r, R, rho, t, inverse_transition=t, **kw)

    @classmethod
    def shear(cls, r, R, rho, eps, window=(-32, 32), w_degree=12, **kw):
        """``z2 = z1 + eps * w``."""
        dom = Annulus(r, R)
        t = BiSeries.from_dict(dom, rho, {(1, 0): 1.0, (0, 1): eps}, z_window=window,
                               w_degree=w_degree)
        inv = BiSeries.from_dict(dom, rho, {(1, 0): 1.0, (0, 1): -eps}, z_window=window,
                                 w_degree=w_degree)
        return cls.from_transition(r, R, rho, t, inverse_transition=inv, **kw)

    def validate(self, tol: float = 1e-12, composition_tol: float = 1e-9) -> None:
        core = self.transition.w_coefficient(0)
        expected = LaurentSeries.monomial(self.core, 1)
        if core.distance(expected) > tol:
            raise ConfigError("transition does not coincide with z along the core annulus")
        try:
            back = substitute(self.inverse_transition, self.transition)
        except DomainError as exc:
            raise ConfigError(f"separation condition fails: {exc}") from exc
        ident = BiSeries.from_dict(self.core, self.rho, {(1, 0): 1.0})
        if back.distance(ident) > composition_tol:
            raise ConfigError("inverse_transition is not inverse to transition")
        # separation of the lower and upper sides
        ws = np.concatenate([circle(a * self.rho, 32) for a in (0.25, 0.5, 0.75, 1.0)] + [[0]])
        zs = circle(self.r_prime, 64)
        z1 = np.abs(self.inverse_transition(zs[:, None], ws[None, :]))
        if not (np.min(z1) > self.r and np.max(z1) < self.R_prime):
            raise ConfigError("separation condition fails on |z2| = r'")
        zs = circle(self.R_prime, 64)
        z2 = np.abs(self.transition(zs[:, None], ws[None, :]))
        if not (np.min(z2) > self.r_prime and np.max(z2) < self.R):
            raise ConfigError("separation condition fails on |z1| = R'")

    def z2(self, z1, w):
        return self.transition(z1, w)

    def contains(self, z1, w, slack: float = 1e-12) -> bool:
        z1 = np.asarray(z1)
        w = np.asarray(w)
        z2 = self.transition(z1, w)
        return bool(np.all(np.abs(z1) > self.r * (1 - slack)) and np.all(np.abs(z2) < self.R * (1 + slack))
                    and np.all(np.abs(w) < self.rho * (1 + slack)))


def _invert_transition(t: BiSeries, iterations: int = 60, tol: float = 1e-15) -> BiSeries:
    zs, ws = t.torus()
    z2 = np.broadcast_to(zs[:, None], (zs.size, ws.size))
    w = np.broadcast_to(ws[None, :], z2.shape)
    z1 = z2.copy()
    for _ in range(iterations):
        nxt = z2 - (t(z1, w) - z1)
        done = np.max(np.abs(nxt - z1)) < tol
        z1 = nxt
        if done:
            break
    else:
        raise ConvergenceError("could not invert the transition map")
    return BiSeries.from_samples(z1, (t.z_min, t.z_max), t.w_degree, t.z_domain, t.w_radius)


@dataclass(frozen=True, eq=False)
class DistortedWP:
    """Split coefficients of ``w**n + sum_i (minus_i(z1) + plus_i(z2)) w**(n-i)``."""

    minus_parts: tuple
    plus_parts: tuple
    iterations: int = 0
    history: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "minus_parts", tuple(self.minus_parts))
        object.__setattr__(self, "plus_parts", tuple(self.plus_parts))
        if len(self.minus_parts) != len(self.plus_parts):
            raise ConfigError("minus and plus parts differ in number")
        for m in self.minus_parts:
            if np.any(m.coefficients[m.indices >= 0] != 0):
                raise ConfigError("minus parts must have only negative powers")
        for p in self.plus_parts:
            if np.any(p.coefficients[p.indices < 0] != 0):
                raise ConfigError("plus parts must have only non-negative powers")

    @property
    def degree(self) -> int:
        return len(self.minus_parts)

    def combined(self, i: int) -> LaurentSeries:
        """``f_i = f_i^- + f_i^+`` as one Laurent series on the core annulus (``i`` from 1)."""
        return self.minus_parts[i - 1] + self.plus_parts[i - 1]

    def vector(self, window) -> np.ndarray:
        lo, hi = window
        return np.concatenate([self.combined(i).with_window(lo, hi).coefficients
                               for i in range(1, self.degree + 1)])

    def to_biseries(self, cyl: DistortedCylinder, z_window=None, w_degree=None) -> BiSeries:
        """The polynomial as a function of ``(z1, w)``."""
        lo, hi = z_window or cyl.z_window
        deg = max(cyl.w_degree, self.degree) if w_degree is None else w_degree
        n = self.degree
        out = BiSeries.from_dict(cyl.core, cyl.rho, {(0, n): 1.0}, z_window=(lo, hi), w_degree=deg)
        for i in range(1, n + 1):
            term = _split_term(self.minus_parts[i - 1], self.plus_parts[i - 1], cyl, (lo, hi), deg)
            out = (out + term.shift_w(n - i)).with_window((lo, hi), deg)
        return out


def _split_term(minus: LaurentSeries, plus: LaurentSeries, cyl, z_window, w_degree) -> BiSeries:
    """``minus(z1) + plus(z2(z1, w))`` as a bi-series in ``(z1, w)``."""
    m = BiSeries.from_laurent(minus.on_domain(cyl.core), cyl.rho, w_degree=w_degree)
    if np.any(plus.coefficients[1:] != 0) and not cyl.is_identity:
        p = substitute(plus, cyl.transition, z_window=z_window, w_degree=w_degree)
    else:
        p = BiSeries.from_laurent(plus.on_domain(cyl.core), cyl.rho, w_degree=w_degree)
    return (m + p).with_window(z_window, w_degree)


def pullback(P: WeierstrassPolynomial, cyl: DistortedCylinder, side: str = "z1",
             z_window=None, w_degree=None) -> BiSeries:
    """A chart polynomial written in ``(z1, w)``.

    ``side="z1"`` means the chart coordinate is ``z1`` (restriction only);
    ``side="z2"`` means it is ``z2`` and coefficients are composed with the
    transition.
    """
    lo, hi = z_window or cyl.z_window
    deg = max(cyl.w_degree, P.degree) if w_degree is None else w_degree
    n = P.degree
    out = BiSeries.from_dict(cyl.core, cyl.rho, {(0, n): 1.0}, z_window=(lo, hi), w_degree=deg)
    for i, f in enumerate(P.coefficients, start=1):
        if side == "z1":
            g = BiSeries.from_laurent(restrict(f, cyl.core), cyl.rho, w_degree=deg)
        elif side == "z2":
            g = substitute(f, cyl.transition, z_window=(lo, hi), w_degree=deg)
        else:
            raise ValueError(f"side must be 'z1' or 'z2', not {side!r}")
        out = (out + g.shift_w(n - i)).with_window((lo, hi), deg)
    return out


NOISE_FLOOR = 1e-15


def _chopped(F: BiSeries, atol: float = NOISE_FLOOR) -> BiSeries:
    c = np.where(np.abs(F.coefficients) < atol, 0, F.coefficients)
    return BiSeries(F.z_domain, F.w_radius, F.z_min, c, F.truncation_loss)


def _torus_sup(F: BiSeries, cyl: DistortedCylinder) -> float:
    # the extreme radii r, R amplify rounding in the outer window entries
    return _chopped(F).sup_on_torus(z_radii=[cyl.r_prime, cyl.R_prime])


def extract_dwp_coefficients(F: BiSeries, cyl: DistortedCylinder, n: int):
    """Split ``F = sum_i (f_i^-(z1) + f_i^+(z2)) w**(n-i) + w**n (1 + Q)``.

    Returns ``(pairs, Q)`` where ``pairs[i-1] = (f_i^-, f_i^+)``.
    """
    if F.z_domain != cyl.core:
        raise DomainError("F must be a bi-series over the cylinder's core annulus")
    lead = F.w_coefficient(n)
    zs = circle(cyl.core.sample_radius, 64)
    if np.max(np.abs(lead(zs) - 1.0)) > 0.5:
        raise NumericalError("not normalized: coefficient of w**n is far from 1")
    window = (F.z_min, F.z_max)
    deg = F.w_degree
    G = F
    pairs = [None] * n
    for k in range(n):
        plus, minus = laurent_split(G.w_coefficient(k))
        pairs[n - k - 1] = (minus, plus)
        G = (G - _split_term(minus, plus, cyl, window, deg).shift_w(k)).with_window(window, deg)
    Q = G.shift_w(-n) - 1.0
    return pairs, Q.with_window(window, deg)


def _remainder_from_pairs(pairs, cyl, window, deg):
    n = len(pairs)
    R = BiSeries.zeros(cyl.core, cyl.rho, window, deg)
    for i, (minus, plus) in enumerate(pairs, start=1):
        R = (R + _split_term(minus, plus, cyl, window, deg).shift_w(n - i)).with_window(window, deg)
    return R


def dwp_iteration_step(P_k: BiSeries, cyl: DistortedCylinder, n: int, variant: str = "divide"):
    """One step ``P_{k+1} = P_k / (1 + Q_k)``.

    ``variant="one_minus"`` multiplies by ``(1 - Q_k)**-1`` instead; that
    sign does not have ``w**n`` as a fixed point and is kept for comparison.
    Returns ``(P_{k+1}, (|R_k|, |Q_k|), pairs_k)``.
    """
    pairs, Q = extract_dwp_coefficients(P_k, cyl, n)
    window, deg = (P_k.z_min, P_k.z_max), P_k.w_degree
    q_norm = _torus_sup(Q, cyl)
    r_norm = _torus_sup(_remainder_from_pairs(pairs, cyl, window, deg), cyl)
    if q_norm >= 1.0:
        raise ConvergenceError("iteration out of contraction region", [(r_norm, q_norm)])
    if variant == "divide":
        den = 1.0 + Q
    elif variant == "one_minus":
        den = 1.0 - Q
    else:
        raise ValueError(f"unknown variant {variant!r}")
    nxt = bi_divide(P_k, den, z_window=window, w_degree=deg)
    return nxt, (r_norm, q_norm), pairs


def _as_cylinder_biseries(P0, cyl: DistortedCylinder, n=None):
    if isinstance(P0, WeierstrassPolynomial):
        return pullback(P0, cyl, "z1"), P0.degree
    if n is None:
        raise ValueError("degree n is required when P0 is a bi-series")
    return P0.with_window(cyl.z_window, max(P0.w_degree, cyl.w_degree)), n


def smallness(F: BiSeries, n: int, cyl: DistortedCylinder) -> float:
    """Largest boundary sup-norm among the coefficients of ``w**0 .. w**(n-1)``."""
    radii = [cyl.r, cyl.R]
    out = 0.0
    for k in range(n):
        c = F.w_coefficient(k)
        out = max(out, max(float(np.max(np.abs(c(circle(rad, 128))))) for rad in radii))
    return out


def solve_dwp(P0, cyl: DistortedCylinder, tol: float = 1e-10, max_iter: int = 50,
              epsilon: float = DEFAULT_EPSILON, variant: str = "divide", n: int | None = None,
              stagnation: bool = False) -> DistortedWP:
    """Iterate ``dwp_iteration_step`` until ``|Q_k| < tol``.

    ``P0`` is a Weierstrass polynomial in ``z1`` or a bi-series in ``(z1, w)``
    of degree ``n``.  With ``stagnation=True`` the loop also stops once
    ``|Q_k|`` is below ``sqrt(tol)`` and no longer decreasing, which is how
    callers that need the fixed point to rounding level avoid chasing noise.
    """
    F, n = _as_cylinder_biseries(P0, cyl, n)
    size = smallness(F, n, cyl)
    if size > epsilon:
        raise NumericalError(f"coefficients of size {size:.3g} exceed the smallness bound {epsilon}")
    pairs, Q = extract_dwp_coefficients(F, cyl, n)
    if all(m.max_abs_coefficient() == 0 and p.max_abs_coefficient() == 0 for m, p in pairs) \
            and Q.max_abs_coefficient() == 0:
        return DistortedWP([m for m, _ in pairs], [p for _, p in pairs], 0, ())
    history = []
    P = F
    for it in range(1, max_iter + 1):
        nxt, stats, pairs = dwp_iteration_step(P, cyl, n, variant)
        history.append(stats)
        q = stats[1]
        if q < tol or (stagnation and it > 1 and q < math.sqrt(tol) and q >= 0.5 * history[-2][1]):
            return DistortedWP([m.chop(atol=NOISE_FLOOR) for m, _ in pairs],
                               [p.chop(atol=NOISE_FLOOR) for _, p in pairs], it, tuple(history))
        P = nxt
    raise ConvergenceError(f"no convergence in {max_iter} iterations", history)


def evaluate_dwp(P: DistortedWP, cyl: DistortedCylinder, z1, w):
    z1 = np.asarray(z1, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if not cyl.contains(z1, w):
        raise DomainError("point outside the distorted cylinder")
    z2 = cyl.z2(z1, w)
    out = np.ones(np.broadcast(z1, w).shape, dtype=complex)
    for minus, plus in zip(P.minus_parts, P.plus_parts):
        out = out * w + minus(z1) + plus(z2)
    return out


# ---------------------------------------------------------------------------
# file format

def format_dwp(P: DistortedWP) -> str:
    blocks = [format_laurent(m) for m in P.minus_parts] + [format_laurent(p) for p in P.plus_parts]
    return f"DWP {P.degree}\n" + "".join(blocks)


def parse_dwp(text: str) -> DistortedWP:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != "DWP":
        raise FormatError("expected DWP header")
    n = int(head[1])
    pos, blocks = 1, []
    for _ in range(2 * n):
        f, pos = _parse_laurent_lines(lines, pos)
        blocks.append(f)
    if pos != len(lines):
        raise FormatError("trailing data after DWP blocks")
    return DistortedWP(blocks[:n], blocks[n:])


def write_dwp(path, P: DistortedWP) -> None:
    Path(path).write_text(format_dwp(P))


def read_dwp(path) -> DistortedWP:
    return parse_dwp(Path(path).read_text())
