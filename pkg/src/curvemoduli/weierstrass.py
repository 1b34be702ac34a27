"""Weierstrass preparation of curves in a product chart ``annulus x disk``.

A defining function ``F(z, w)`` is reduced to the monic polynomial
``w**n + f_1(z) w**(n-1) + ... + f_n(z)`` with the same zeros inside the
contour ``|w| = rho``.  The degree is a winding number, the coefficients come
from contour integrals of the logarithmic derivative (power sums of the roots)
followed by Newton's identities.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError, NumericalError
from .series import (
    INVERTIBILITY_FLOOR,
    Annulus,
    BiSeries,
    LaurentSeries,
    _parse_laurent_lines,
    circle,
    format_laurent,
    next_pow2,
    series_from_samples,
)

DEFAULT_NODES = 256
GUARD_BAND = 0.05


@dataclass(frozen=True, eq=False)
class WeierstrassPolynomial:
    """``w**n + sum_i f_i(z) w**(n-i)``; ``coefficients[i-1]`` is ``f_i``."""

    coefficients: tuple
    containment_radius: float | None = None

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        if not coeffs:
            raise ValueError("a Weierstrass polynomial needs degree >= 1")
        dom = coeffs[0].domain
        if any(c.domain != dom for c in coeffs):
            raise DomainError("coefficients must share one z-domain")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    @property
    def z_domain(self) -> Annulus:
        return self.coefficients[0].domain

    @classmethod
    def power(cls, n: int, domain: Annulus, window=None) -> "WeierstrassPolynomial":
        """``w**n``: all coefficients zero."""
        return cls(tuple(LaurentSeries.zeros(domain, window or (0, 0)) for _ in range(n)), 0.0)

    def __call__(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        out = np.ones(np.broadcast(z, w).shape, dtype=complex)
        for f in self.coefficients:
            out = out * w + f(z)
        return out

    def to_biseries(self, w_radius: float, w_degree: int | None = None,
                    z_window=None) -> BiSeries:
        n = self.degree
        by_power = [c for c in reversed(self.coefficients)]
        by_power.append(LaurentSeries.constant(self.z_domain, 1.0))
        F = BiSeries.from_w_polynomial(by_power, w_radius, w_degree if w_degree is not None else n)
        if z_window is not None:
            F = F.with_window(z_window, F.w_degree)
        return F

    def coefficient_vector(self, window) -> np.ndarray:
        lo, hi = window
        return np.concatenate([c.with_window(lo, hi).coefficients for c in self.coefficients])

    @classmethod
    def from_vector(cls, vec, n: int, window, domain: Annulus) -> "WeierstrassPolynomial":
        lo, hi = window
        width = hi - lo + 1
        vec = np.asarray(vec, dtype=complex)
        return cls(tuple(LaurentSeries(domain, lo, vec[i * width:(i + 1) * width]) for i in range(n)))

    def distance(self, other: "WeierstrassPolynomial") -> float:
        if other.degree != self.degree:
            return np.inf
        return max(a.distance(b) for a, b in zip(self.coefficients, other.coefficients))

    def max_root_modulus(self, points: int = 64) -> float:
        """Largest ``|w|`` of a root over the sampling and boundary circles of the base."""
        radii = self.coefficients[0].boundary_circles()
        zs = np.concatenate([circle(r, points) for r in radii])
        return float(np.max(np.abs(self.roots_on(zs))))

    def roots_on(self, zs) -> np.ndarray:
        """Roots for every ``z`` in ``zs``; shape ``(len(zs), n)``."""
        return np.array([roots_at(self, z) for z in np.ravel(zs)])


@dataclass(frozen=True)
class PrepReport:
    degree: int
    contour_radius: float
    containment_radius: float
    h_min: float
    h_max: float
    truncation_loss: float


def _torus_values(F: BiSeries, w_radius_eval: float, nodes: int, z_grid=None):
    mz = z_grid or F.default_grid()[0]
    zs = circle(F.z_domain.sample_radius, mz)
    ws = circle(w_radius_eval, nodes)
    return zs, ws, F.on_grid(zs, ws)


def _log_derivative_moments(F: BiSeries, contour_radius: float, nodes: int, z_grid,
                            floor: float, kmax: int):
    zs, ws, values = _torus_values(F, contour_radius, nodes, z_grid)
    if np.min(np.abs(values)) <= floor:
        raise NumericalError(f"F vanishes on the contour |w| = {contour_radius}")
    ratio = F.dw().on_grid(zs, ws) / values
    # trapezoid rule: (1/2 pi i) \oint w^k F_w/F dw = mean_m w_m^{k+1} F_w/F
    moments = [np.mean(ratio * ws[None, :] ** (k + 1), axis=1) for k in range(kmax + 1)]
    return zs, moments


def winding_degree(F: BiSeries, circle_radius: float, z0: complex | None = None,
                   nodes: int = DEFAULT_NODES, floor: float = INVERTIBILITY_FLOOR) -> int:
    """Number of zeros of ``F(z0, .)`` inside ``|w| = circle_radius``."""
    zs, ws, values = _torus_values(F, circle_radius, nodes, z_grid=64)
    if np.min(np.abs(values)) <= floor:
        raise NumericalError(f"F vanishes on the torus |w| = {circle_radius}")
    z0 = F.z_domain.sample_radius if z0 is None else z0
    w = circle(circle_radius, nodes)
    val = F(z0, w)
    if np.min(np.abs(val)) <= floor:
        raise NumericalError("F vanishes on the contour")
    total = np.mean(w * F.dw()(z0, w) / val)
    deg = int(round(total.real))
    if abs(total - deg) > 1e-6:
        raise NumericalError(f"quadrature failure: winding number {total}")
    return deg


def power_sum_coefficients(F: BiSeries, n: int, contour_radius: float, z_window=None,
                           z_grid: int | None = None, nodes: int = DEFAULT_NODES,
                           floor: float = INVERTIBILITY_FLOOR) -> list[LaurentSeries]:
    """Power sums ``p_1..p_n`` of the roots of ``F(z, .)`` inside the contour."""
    lo, hi = z_window or (F.z_min, F.z_max)
    mz = z_grid or next_pow2(2 * (hi - lo + 1))
    zs, moments = _log_derivative_moments(F, contour_radius, nodes, mz, floor, n)
    if np.max(np.abs(moments[0] - n)) > 1e-6:
        raise NumericalError("contour crosses curve: root count varies along the z-grid")
    c = F.z_domain.sample_radius
    return [series_from_samples(moments[k], lo, hi, F.z_domain, radius=c) for k in range(1, n + 1)]


def newton_to_elementary(p, window=None) -> list:
    """Elementary symmetric functions ``e_1..e_n`` from power sums ``p_1..p_n``.

    ``k e_k = sum_{i=1..k} (-1)**(i-1) e_{k-i} p_i`` with ``e_0 = 1``.  Works
    for LaurentSeries (truncating products to ``window``) and for plain numbers
    or numpy arrays.
    """
    p = list(p)
    series = isinstance(p[0], LaurentSeries)
    if series:
        lo = min(q.min_index for q in p)
        hi = max(q.max_index for q in p)
        lo, hi = window or (lo, hi)
        e = [LaurentSeries.constant(p[0].domain, 1.0, (lo, hi))]
    else:
        e = [np.ones_like(np.asarray(p[0]))]
    for k in range(1, len(p) + 1):
        acc = 0
        for i in range(1, k + 1):
            term = e[k - i] * p[i - 1]
            if series:
                term = term.with_window(lo, hi)
            acc = term * (-1) ** (i - 1) + acc
        e.append(acc / k)
    return e[1:]


def weierstrass_prep(F: BiSeries, contour_radius: float | None = None,
                     containment_hint: float | None = None, nodes: int = DEFAULT_NODES,
                     z_window=None, guard: float = GUARD_BAND,
                     floor: float = INVERTIBILITY_FLOOR):
    """Prepare ``F = h * P`` and return ``(P, report)``.

    Without an explicit contour, ``(containment_hint + w_radius) / 2`` is used
    when a hint is given, else ``0.9 * w_radius``.  Roots of ``F`` within
    ``guard`` (relative) of the contour are rejected.
    """
    if contour_radius is None:
        if containment_hint is not None:
            contour_radius = 0.5 * (containment_hint + F.w_radius)
        else:
            contour_radius = 0.9 * F.w_radius
    lo_r, hi_r = (1 - guard) * contour_radius, min((1 + guard) * contour_radius, F.w_radius)
    try:
        n, n_lo, n_hi = (winding_degree(F, rad, nodes=nodes, floor=floor)
                         for rad in (contour_radius, lo_r, hi_r))
    except NumericalError as exc:
        # quadrature only breaks down when a root is close to one of the circles
        raise NumericalError(f"roots within the guard band of the contour ({exc})") from exc
    if n_lo != n or n_hi != n:
        raise NumericalError("roots within the guard band of the contour")
    lo, hi = z_window or (F.z_min, F.z_max)
    if n == 0:
        raise NumericalError("curve has degree 0 inside the contour")
    p = power_sum_coefficients(F, n, contour_radius, (lo, hi), nodes=nodes, floor=floor)
    e = newton_to_elementary(p, (lo, hi))
    coeffs = tuple((ek * (-1) ** k).chop(atol=1e-15) for k, ek in enumerate(e, start=1))
    P = WeierstrassPolynomial(coeffs)
    containment = P.max_root_modulus()
    P = WeierstrassPolynomial(coeffs, containment)
    zs = circle(F.z_domain.sample_radius, 64)
    ws = circle(contour_radius, nodes)
    zz, ww = np.meshgrid(zs, ws, indexing="ij")
    h = np.abs(F.on_grid(zs, ws) / P(zz, ww))
    if not np.all(np.isfinite(h)) or np.min(h) <= floor:
        raise NumericalError("prepared factor h is not invertible on the test torus")
    loss = sum(c.truncation_loss for c in coeffs)
    return P, PrepReport(n, contour_radius, containment, float(np.min(h)), float(np.max(h)), loss)


def weierstrass_remainder(H: BiSeries, P: WeierstrassPolynomial, window=None) -> list[LaurentSeries]:
    """Coefficients ``h_1..h_n`` of the remainder ``sum h_i w**(n-i)`` of ``H mod P``."""
    if H.z_domain != P.z_domain:
        raise DomainError("H and P live over different annuli")
    n = P.degree
    if window is None:
        steps = max(H.w_degree - n + 1, 1)
        plo = min(c.min_index for c in P.coefficients)
        phi = max(c.max_index for c in P.coefficients)
        window = (max(H.z_min + steps * plo, -4 * 64), min(H.z_max + steps * phi, 4 * 64))
    lo, hi = window
    coefs = [H.w_coefficient(k).with_window(lo, hi) for k in range(max(H.w_degree, n - 1) + 1)]
    for k in range(len(coefs) - 1, n - 1, -1):
        lead = coefs[k]
        # w^k = w^(k-n) * w^n == -w^(k-n) * sum_i f_i w^(n-i)
        for i, f in enumerate(P.coefficients, start=1):
            coefs[k - i] = (coefs[k - i] - (lead * f).with_window(lo, hi))
    return [coefs[n - i] for i in range(1, n + 1)]


def roots_at(P: WeierstrassPolynomial, z: complex) -> np.ndarray:
    """Eigenvalues of the companion matrix of ``P(z, .)``."""
    n = P.degree
    a = np.array([complex(f(z)) for f in P.coefficients])
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -a
    if n > 1:
        comp[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp)


def polish_roots(F, z: complex, guesses, steps: int = 2) -> np.ndarray:
    """A few Newton steps on ``w -> F(z, w)`` from each guess."""
    dF = F.dw()
    w = np.array(guesses, dtype=complex)
    for _ in range(steps):
        w = w - F(z, w) / dF(z, w)
    return w


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite point sets in the plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ---------------------------------------------------------------------------
# file format

def format_wpoly(P: WeierstrassPolynomial) -> str:
    return f"WPOLY {P.degree}\n" + "".join(format_laurent(c) for c in P.coefficients)


def parse_wpoly(text: str) -> WeierstrassPolynomial:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != "WPOLY":
        raise FormatError("expected WPOLY header")
    n = int(head[1])
    pos, coeffs = 1, []
    for _ in range(n):
        f, pos = _parse_laurent_lines(lines, pos)
        coeffs.append(f)
    if pos != len(lines):
        raise FormatError("trailing data after WPOLY blocks")
    return WeierstrassPolynomial(tuple(coeffs))


def write_wpoly(path, P: WeierstrassPolynomial) -> None:
    Path(path).write_text(format_wpoly(P))


def read_wpoly(path) -> WeierstrassPolynomial:
    return parse_wpoly(Path(path).read_text())
