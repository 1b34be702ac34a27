"""Truncated Laurent and bivariate series on annuli, disks and cylinders.

Every holomorphic function in this package is carried as a finite window of
coefficients.  Coefficients are obtained from samples on uniform circle
grids (FFT), products are exact convolutions, and anything nonlinear
(inversion, composition, division) goes through pointwise arithmetic on a
sampling grid followed by a transform back.

Index windows are explicit.  Coefficients that fall outside a window are
dropped and the l2 size of what was dropped is accumulated in
``truncation_loss``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import ConfigError, DomainError, FormatError, NumericalError

DEFAULT_WINDOW = 64
DEFAULT_W_DEGREE = 16
INVERTIBILITY_FLOOR = 1e-8


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def circle(radius: float, n: int) -> np.ndarray:
    """``n`` uniformly spaced points on ``|z| = radius`` starting at ``radius``."""
    return (np.longdouble(radius) * _unit_roots(n)).astype(complex)


def _unit_roots(n: int, k=None) -> np.ndarray:
    """``exp(2 pi i k / n)`` in extended precision (``k`` reduced mod ``n`` first)."""
    k = np.arange(n) if k is None else np.asarray(k) % n
    theta = (8 * np.arctan(np.longdouble(1))) * k.astype(np.longdouble) / n
    return np.cos(theta) + 1j * np.sin(theta)


@dataclass(frozen=True)
class Annulus:
    """``{inner < |z| < outer}``; ``inner == 0`` is the disk of radius ``outer``."""

    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not (0 <= self.inner_radius < self.outer_radius) or not math.isfinite(self.outer_radius):
            raise ConfigError(
                f"invalid annulus radii ({self.inner_radius}, {self.outer_radius})"
            )

    @property
    def is_disk(self) -> bool:
        return self.inner_radius == 0

    @property
    def sample_radius(self) -> float:
        # geometric mean balances c**k against c**-k; disks use half the radius
        if self.is_disk:
            return 0.5 * self.outer_radius
        return math.sqrt(self.inner_radius * self.outer_radius)

    def contains(self, other: "Annulus") -> bool:
        return self.inner_radius <= other.inner_radius and other.outer_radius <= self.outer_radius

    def default_window(self, size: int = DEFAULT_WINDOW) -> tuple[int, int]:
        return (0, size) if self.is_disk else (-size, size)

    def __str__(self):
        return f"A({self.inner_radius:g}, {self.outer_radius:g})"


@dataclass(frozen=True)
class SmoothnessClass:
    """Norm used to measure boundary regularity.

    ``"sup"`` is the maximum modulus on the outer boundary circle.
    ``"sobolev"`` weights the coefficient of ``z**k`` by ``(1 + |k|)**exponent``.
    """

    kind: str = "sobolev"
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sup", "sobolev"):
            raise ConfigError(f"unknown smoothness kind {self.kind!r}")
        if self.kind == "sobolev" and self.exponent < 1:
            raise ConfigError("sobolev exponent must be >= 1")

    def weights(self, indices) -> np.ndarray:
        """Per-coefficient weights for inner products on coefficient vectors.

        The sup class has no inner product; unit weights are used there.
        """
        k = np.abs(np.asarray(indices, dtype=float))
        if self.kind == "sup":
            return np.ones_like(k)
        return (1.0 + k) ** self.exponent


SUP = SmoothnessClass("sup", 0.0)
SOBOLEV1 = SmoothnessClass("sobolev", 1.0)


@dataclass(frozen=True, eq=False)
class LaurentSeries:
    """Coefficients ``c_k`` of ``sum_k c_k z**k`` for ``k = min_index..max_index``."""

    domain: Annulus
    min_index: int
    coefficients: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "min_index", int(self.min_index))
        if c.size == 0:
            raise ConfigError("empty coefficient window")
        if not (self.min_index <= 0 <= self.max_index):
            raise ConfigError(
                f"index window [{self.min_index}, {self.max_index}] must contain 0"
            )
        if self.domain.is_disk and self.min_index != 0:
            if np.any(c[: -self.min_index] != 0):
                raise ConfigError("series on a disk cannot have negative powers")
            object.__setattr__(self, "coefficients", c[-self.min_index:])
            object.__setattr__(self, "min_index", 0)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, domain, window=None):
        lo, hi = window if window is not None else domain.default_window()
        return cls(domain, lo, np.zeros(hi - lo + 1))

    @classmethod
    def monomial(cls, domain, k, coefficient=1.0, window=None):
        lo, hi = window if window is not None else (min(0, k), max(0, k))
        c = np.zeros(hi - lo + 1, dtype=complex)
        c[k - lo] = coefficient
        return cls(domain, lo, c)

    @classmethod
    def constant(cls, domain, value, window=None):
        return cls.monomial(domain, 0, value, window)

    @classmethod
    def from_dict(cls, domain, coeffs: dict, window=None):
        keys = list(coeffs) or [0]
        lo, hi = window if window is not None else (min(min(keys), 0), max(max(keys), 0))
        c = np.zeros(hi - lo + 1, dtype=complex)
        for k, v in coeffs.items():
            if lo <= k <= hi:
                c[k - lo] = v
        return cls(domain, lo, c)

    @classmethod
    def from_function(cls, func, domain, window=None, grid=None, radius=None):
        lo, hi = window if window is not None else domain.default_window()
        n = grid or next_pow2(2 * (hi - lo + 1))
        c = radius or domain.sample_radius
        return series_from_samples(func(circle(c, n)), lo, hi, domain, radius=c)

    # basic properties ---------------------------------------------------
    @property
    def max_index(self) -> int:
        return self.min_index + self.coefficients.size - 1

    @property
    def window(self) -> tuple[int, int]:
        return (self.min_index, self.max_index)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.min_index, self.max_index + 1)

    def coefficient(self, k: int) -> complex:
        if self.min_index <= k <= self.max_index:
            return complex(self.coefficients[k - self.min_index])
        return 0j

    def as_dict(self, tol=0.0) -> dict:
        return {int(k): complex(c) for k, c in zip(self.indices, self.coefficients) if abs(c) > tol}

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        c = self.coefficients
        split = -self.min_index
        out = np.zeros(z.shape, dtype=complex)
        for a in c[:split - 1:-1] if split > 0 else c[::-1]:
            out = out * z + a
        if split > 0:
            u = 1.0 / z
            neg = np.zeros(z.shape, dtype=complex)
            for a in c[:split]:
                neg = (neg + a) * u
            out = out + neg
        return out

    def with_window(self, lo: int, hi: int) -> "LaurentSeries":
        """Re-window: pad with zeros and drop (and account for) anything outside."""
        lo, hi = min(lo, 0), max(hi, 0)
        if self.domain.is_disk:
            lo = 0
        c = np.zeros(hi - lo + 1, dtype=complex)
        idx = self.indices
        keep = (idx >= lo) & (idx <= hi)
        c[idx[keep] - lo] = self.coefficients[keep]
        loss = float(np.linalg.norm(self.coefficients[~keep]))
        return LaurentSeries(self.domain, lo, c, self.truncation_loss + loss)

    def chop(self, rel: float = 1e-14, radius: float | None = None,
             atol: float = 0.0) -> "LaurentSeries":
        """Zero coefficients whose term on ``|z| = radius`` is below ``rel`` times
        the largest term (or below ``atol``).

        Removes sampling noise that would otherwise blow up when the series is
        evaluated far from the sampling circle.
        """
        c = radius or self.domain.sample_radius
        terms = np.abs(self.coefficients) * c ** self.indices.astype(float)
        keep = terms > max(rel * terms.max(), atol)
        return LaurentSeries(self.domain, self.min_index, np.where(keep, self.coefficients, 0),
                             self.truncation_loss)

    def boundary_circles(self) -> list[float]:
        d = self.domain
        return [d.sample_radius, d.outer_radius] + ([d.inner_radius] if not d.is_disk else [])

    def on_domain(self, domain: Annulus) -> "LaurentSeries":
        return replace(self, domain=domain)

    def max_abs_coefficient(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    # arithmetic ---------------------------------------------------------
    def _aligned(self, other):
        if self.domain != other.domain:
            raise DomainError(f"domain mismatch: {self.domain} vs {other.domain}")
        lo = min(self.min_index, other.min_index)
        hi = max(self.max_index, other.max_index)
        return self.with_window(lo, hi), other.with_window(lo, hi)

    def __add__(self, other):
        if np.isscalar(other):
            other = LaurentSeries.constant(self.domain, other)
        a, b = self._aligned(other)
        return LaurentSeries(a.domain, a.min_index, a.coefficients + b.coefficients,
                             a.truncation_loss + b.truncation_loss)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(self.domain, self.min_index, -self.coefficients, self.truncation_loss)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return series_multiply(self, other)
        return LaurentSeries(self.domain, self.min_index, self.coefficients * other,
                             self.truncation_loss)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def rotated(self, theta: float) -> "LaurentSeries":
        """``z -> f(exp(i theta) z)``."""
        return LaurentSeries(self.domain, self.min_index,
                             self.coefficients * np.exp(1j * theta * self.indices),
                             self.truncation_loss)

    def derivative(self) -> "LaurentSeries":
        lo, hi = self.window
        d = {int(k) - 1: k * c for k, c in zip(self.indices, self.coefficients) if k != 0}
        window = (0 if self.domain.is_disk else min(lo - 1, 0), max(hi - 1, 0))
        return LaurentSeries.from_dict(self.domain, d, window)

    def allclose(self, other, atol=1e-12) -> bool:
        a, b = self._aligned(other)
        return bool(np.max(np.abs(a.coefficients - b.coefficients)) <= atol)

    def distance(self, other) -> float:
        a, b = self._aligned(other)
        return float(np.max(np.abs(a.coefficients - b.coefficients)))

    def __repr__(self):
        return (f"LaurentSeries({self.domain}, [{self.min_index}, {self.max_index}], "
                f"nonzero={len(self.as_dict(1e-14))})")


def series_from_samples(samples, min_index: int, max_index: int, domain: Annulus,
                        radius: float | None = None) -> LaurentSeries:
    """Laurent coefficients from values on a uniform grid of ``|z| = radius``.

    The grid starts at ``z = radius`` and runs counterclockwise.  Exact for
    Laurent polynomials inside the window; otherwise aliasing from outside
    the window is the only error.
    """
    samples = np.asarray(samples, dtype=complex).ravel()
    n = samples.size
    width = max_index - min_index + 1
    if not is_pow2(n):
        raise ConfigError(f"grid size {n} is not a power of two")
    if n < 2 * width:
        raise ConfigError(f"insufficient samples: {n} < 2*{width}")
    c = domain.sample_radius if radius is None else radius
    if not (domain.inner_radius < c < domain.outer_radius):
        raise DomainError(f"sampling circle |z|={c} not inside {domain}")
    idx = np.arange(min_index, max_index + 1)
    # direct DFT of the window in extended precision: the c**-k rescaling
    # amplifies transform rounding at the window ends
    kernel = _unit_roots(n, -np.outer(idx, np.arange(n)))
    spectrum = kernel @ samples.astype(np.clongdouble) / n
    coeffs = (spectrum / np.longdouble(c) ** idx.astype(np.longdouble)).astype(complex)
    total = np.sum(np.abs(samples) ** 2) / n
    loss = float(np.sqrt(max(total - float(np.sum(np.abs(spectrum) ** 2)), 0.0)))
    return LaurentSeries(domain, min_index, coeffs, loss)


def series_multiply(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    """Exact product; the result window is the sum of the input windows."""
    if a.domain != b.domain:
        raise DomainError(f"domain mismatch: {a.domain} vs {b.domain}")
    c = np.convolve(a.coefficients, b.coefficients)
    return LaurentSeries(a.domain, a.min_index + b.min_index, c,
                         a.truncation_loss + b.truncation_loss)


def series_invert(a: LaurentSeries, sample_circle: float | None = None, window=None,
                  grid: int | None = None, floor: float = INVERTIBILITY_FLOOR) -> LaurentSeries:
    """``1/a`` by pointwise reciprocal on a circle grid."""
    lo, hi = window if window is not None else a.domain.default_window()
    n = grid or next_pow2(2 * (hi - lo + 1))
    c = sample_circle or a.domain.sample_radius
    values = a(circle(c, n))
    if np.min(np.abs(values)) <= floor:
        raise NumericalError("not invertible on annulus")
    return series_from_samples(1.0 / values, lo, hi, a.domain, radius=c)


def laurent_split(f: LaurentSeries) -> tuple[LaurentSeries, LaurentSeries]:
    """``f = plus + minus`` with plus holding ``k >= 0`` and minus ``k < 0``."""
    idx = f.indices
    plus_c = np.where(idx >= 0, f.coefficients, 0)
    minus_c = np.where(idx < 0, f.coefficients, 0)
    plus = LaurentSeries(f.domain, f.min_index, plus_c).with_window(0, f.max_index)
    minus = LaurentSeries(f.domain, f.min_index, minus_c).with_window(f.min_index, 0)
    plus = replace(plus, truncation_loss=f.truncation_loss)
    return plus, minus


def sup_on_circle(f: LaurentSeries, radius: float, grid: int | None = None) -> float:
    n = grid or max(64, next_pow2(4 * f.coefficients.size))
    return float(np.max(np.abs(f(circle(radius, n)))))


def s_norm(f: LaurentSeries, s: SmoothnessClass = SOBOLEV1, grid: int | None = None) -> float:
    if s.kind == "sup":
        return sup_on_circle(f, f.domain.outer_radius, grid)
    w = s.weights(f.indices)
    return float(np.sqrt(np.sum((w * np.abs(f.coefficients)) ** 2)))


def restrict(f: LaurentSeries, sub: Annulus) -> LaurentSeries:
    """Concentric restriction: coefficients are unchanged."""
    if not f.domain.contains(sub):
        raise DomainError(f"{sub} is not contained in {f.domain}")
    if sub.is_disk and not f.domain.is_disk and f.min_index < 0:
        if np.any(f.coefficients[: -f.min_index] != 0):
            raise DomainError("negative powers cannot be restricted to a disk")
    return replace(f, domain=sub)


# ---------------------------------------------------------------------------
# bivariate series


@dataclass(frozen=True, eq=False)
class BiSeries:
    """``sum_{j,k} c[j, k] z**j w**k`` on ``z_domain x {|w| < w_radius}``.

    Rows index ``j = z_min..z_max``, columns ``k = 0..w_degree``.  Samples
    are taken on the torus ``|z| = z_domain.sample_radius``, ``|w| = w_radius``.
    """

    z_domain: Annulus
    w_radius: float
    z_min: int
    coefficients: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.ndim != 2 or c.size == 0:
            raise ConfigError("bi-series coefficients must be a non-empty 2D array")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "z_min", int(self.z_min))
        if not self.z_min <= 0 <= self.z_max:
            raise ConfigError(f"z window [{self.z_min}, {self.z_max}] must contain 0")
        if self.w_radius <= 0:
            raise ConfigError("w_radius must be positive")

    @property
    def z_max(self) -> int:
        return self.z_min + self.coefficients.shape[0] - 1

    @property
    def w_degree(self) -> int:
        return self.coefficients.shape[1] - 1

    @property
    def z_indices(self) -> np.ndarray:
        return np.arange(self.z_min, self.z_max + 1)

    @property
    def window(self) -> tuple[int, int, int]:
        return (self.z_min, self.z_max, self.w_degree)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, z_domain, w_radius, z_window, w_degree):
        lo, hi = z_window
        return cls(z_domain, w_radius, lo, np.zeros((hi - lo + 1, w_degree + 1)))

    @classmethod
    def from_dict(cls, z_domain, w_radius, coeffs: dict, z_window=None, w_degree=None):
        """``coeffs`` maps ``(j, k)`` to the coefficient of ``z**j w**k``."""
        js = [j for j, _ in coeffs] or [0]
        ks = [k for _, k in coeffs] or [0]
        lo, hi = z_window if z_window is not None else (min(min(js), 0), max(max(js), 0))
        deg = max(ks) if w_degree is None else w_degree
        c = np.zeros((hi - lo + 1, deg + 1), dtype=complex)
        for (j, k), v in coeffs.items():
            if k < 0:
                raise ConfigError("negative powers of w are not allowed")
            if lo <= j <= hi and k <= deg:
                c[j - lo, k] = v
        return cls(z_domain, w_radius, lo, c)

    @classmethod
    def from_laurent(cls, f: LaurentSeries, w_radius, w_power=0, w_degree=None):
        deg = w_power if w_degree is None else w_degree
        c = np.zeros((f.coefficients.size, deg + 1), dtype=complex)
        if w_power <= deg:
            c[:, w_power] = f.coefficients
        return cls(f.domain, w_radius, f.min_index, c, f.truncation_loss)

    @classmethod
    def from_w_polynomial(cls, coeffs, w_radius, w_degree=None):
        """``sum_k coeffs[k](z) w**k`` from a list of LaurentSeries (index = power of w)."""
        deg = len(coeffs) - 1 if w_degree is None else w_degree
        lo = min(c.min_index for c in coeffs)
        hi = max(c.max_index for c in coeffs)
        out = np.zeros((hi - lo + 1, deg + 1), dtype=complex)
        for k, f in enumerate(coeffs[: deg + 1]):
            out[f.min_index - lo: f.max_index - lo + 1, k] = f.coefficients
        return cls(coeffs[0].domain, w_radius, lo, out)

    @classmethod
    def from_samples(cls, samples, z_window, w_degree, z_domain, w_radius,
                     z_radius=None, w_sample_radius=None):
        samples = np.asarray(samples, dtype=complex)
        mz, mw = samples.shape
        lo, hi = z_window
        if not (is_pow2(mz) and is_pow2(mw)):
            raise ConfigError(f"grid {mz}x{mw} is not a power of two")
        if mz < 2 * (hi - lo + 1) or mw < 2 * (w_degree + 1):
            raise ConfigError("insufficient samples for bi-series window")
        cz = z_domain.sample_radius if z_radius is None else z_radius
        cw = w_radius if w_sample_radius is None else w_sample_radius
        spectrum = np.fft.fft2(samples) / (mz * mw)
        j = np.arange(lo, hi + 1)
        k = np.arange(w_degree + 1)
        block = spectrum[np.ix_(j % mz, k)]
        coeffs = block / (cz ** j.astype(float))[:, None] / (cw ** k.astype(float))[None, :]
        total = np.linalg.norm(spectrum)
        loss = float(np.sqrt(max(total**2 - np.linalg.norm(block) ** 2, 0.0)))
        return cls(z_domain, w_radius, lo, coeffs, loss)

    # grids ----------------------------------------------------------------
    def default_grid(self) -> tuple[int, int]:
        return (next_pow2(2 * self.coefficients.shape[0]), next_pow2(2 * (self.w_degree + 1)))

    def torus(self, grid=None):
        mz, mw = grid or self.default_grid()
        return circle(self.z_domain.sample_radius, mz), circle(self.w_radius, mw)

    def on_grid(self, zs, ws) -> np.ndarray:
        """Values on the outer product grid ``zs x ws``."""
        zp = np.asarray(zs, dtype=complex)[:, None] ** self.z_indices
        wp = np.asarray(ws, dtype=complex)[:, None] ** np.arange(self.w_degree + 1)
        return zp @ self.coefficients @ wp.T

    def __call__(self, z, w):
        z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
        zp = z[..., None] ** self.z_indices
        wp = w[..., None] ** np.arange(self.w_degree + 1)
        return np.einsum("...j,jk,...k->...", zp, self.coefficients, wp)

    def resample(self, func_values_on_torus, z_window=None, w_degree=None, grid=None):
        lo, hi = z_window or (self.z_min, self.z_max)
        deg = self.w_degree if w_degree is None else w_degree
        return BiSeries.from_samples(func_values_on_torus, (lo, hi), deg, self.z_domain, self.w_radius)

    # coefficient access -------------------------------------------------
    def w_coefficient(self, k: int) -> LaurentSeries:
        """The coefficient of ``w**k`` as a Laurent series in ``z``."""
        if 0 <= k <= self.w_degree:
            col = self.coefficients[:, k]
        else:
            col = np.zeros(self.coefficients.shape[0])
        return LaurentSeries(self.z_domain, self.z_min, col)

    def with_window(self, z_window, w_degree) -> "BiSeries":
        lo, hi = z_window
        out = np.zeros((hi - lo + 1, w_degree + 1), dtype=complex)
        j = self.z_indices
        keep_j = (j >= lo) & (j <= hi)
        kk = min(self.w_degree, w_degree) + 1
        out[j[keep_j] - lo, :kk] = self.coefficients[keep_j, :kk]
        dropped = np.linalg.norm(self.coefficients) ** 2 - np.linalg.norm(out) ** 2
        loss = float(np.sqrt(max(dropped, 0.0)))
        return BiSeries(self.z_domain, self.w_radius, lo, out, self.truncation_loss + loss)

    def shift_w(self, m: int) -> "BiSeries":
        """Multiply by ``w**m``; negative ``m`` divides, dropping the low powers."""
        c = self.coefficients
        if m >= 0:
            out = np.concatenate([np.zeros((c.shape[0], m)), c], axis=1)
            return BiSeries(self.z_domain, self.w_radius, self.z_min, out, self.truncation_loss)
        m = -m
        if m > self.w_degree:
            out = np.zeros((c.shape[0], 1))
        else:
            out = c[:, m:]
        return BiSeries(self.z_domain, self.w_radius, self.z_min, out, self.truncation_loss)

    def dw(self) -> "BiSeries":
        c = self.coefficients
        if self.w_degree == 0:
            return BiSeries(self.z_domain, self.w_radius, self.z_min, np.zeros_like(c))
        out = c[:, 1:] * np.arange(1, self.w_degree + 1)[None, :]
        return BiSeries(self.z_domain, self.w_radius, self.z_min, out, self.truncation_loss)

    # arithmetic ---------------------------------------------------------
    def _check(self, other):
        if self.z_domain != other.z_domain or not math.isclose(self.w_radius, other.w_radius):
            raise DomainError("bi-series live on different cylinders")

    def _aligned(self, other):
        self._check(other)
        lo = min(self.z_min, other.z_min, 0)
        hi = max(self.z_max, other.z_max, 0)
        deg = max(self.w_degree, other.w_degree)
        return self.with_window((lo, hi), deg), other.with_window((lo, hi), deg)

    def __add__(self, other):
        if np.isscalar(other):
            other = BiSeries.from_dict(self.z_domain, self.w_radius, {(0, 0): other})
        if isinstance(other, LaurentSeries):
            other = BiSeries.from_laurent(other, self.w_radius)
        a, b = self._aligned(other)
        return BiSeries(a.z_domain, a.w_radius, a.z_min, a.coefficients + b.coefficients,
                        a.truncation_loss + b.truncation_loss)

    __radd__ = __add__

    def __neg__(self):
        return BiSeries(self.z_domain, self.w_radius, self.z_min, -self.coefficients,
                        self.truncation_loss)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            other = BiSeries.from_laurent(other, self.w_radius)
        if isinstance(other, BiSeries):
            self._check(other)
            c = signal.convolve2d(self.coefficients, other.coefficients)
            return BiSeries(self.z_domain, self.w_radius, self.z_min + other.z_min, c,
                            self.truncation_loss + other.truncation_loss)
        return BiSeries(self.z_domain, self.w_radius, self.z_min, self.coefficients * other,
                        self.truncation_loss)

    __rmul__ = __mul__

    def sup_on_torus(self, grid=None, z_radii=None) -> float:
        """Max modulus on ``|w| = w_radius`` over the sampling circle and the given z circles."""
        mz, mw = grid or self.default_grid()
        radii = [self.z_domain.sample_radius] + list(z_radii or [])
        ws = circle(self.w_radius, mw)
        return max(float(np.max(np.abs(self.on_grid(circle(r, mz), ws)))) for r in radii)

    def max_abs_coefficient(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    def distance(self, other) -> float:
        a, b = self._aligned(other)
        return float(np.max(np.abs(a.coefficients - b.coefficients)))

    def __repr__(self):
        return (f"BiSeries({self.z_domain}, rho={self.w_radius:g}, z[{self.z_min}, {self.z_max}], "
                f"w_deg={self.w_degree})")


def bi_divide(num: BiSeries, den: BiSeries, z_window=None, w_degree=None, grid=None,
              floor: float = INVERTIBILITY_FLOOR) -> BiSeries:
    """``num / den`` by pointwise division on the sampling torus."""
    num._check(den)
    lo, hi = z_window or (min(num.z_min, 0), max(num.z_max, 0))
    deg = num.w_degree if w_degree is None else w_degree
    mz, mw = grid or (next_pow2(2 * (hi - lo + 1)), next_pow2(2 * (deg + 1)))
    zs, ws = circle(num.z_domain.sample_radius, mz), circle(num.w_radius, mw)
    d = den.on_grid(zs, ws)
    if np.min(np.abs(d)) <= floor:
        raise NumericalError("divisor vanishes on the sampling torus")
    return BiSeries.from_samples(num.on_grid(zs, ws) / d, (lo, hi), deg, num.z_domain, num.w_radius)


def _effective_bounds(f: LaurentSeries, tol=0.0):
    """Radii between which a truncated Laurent series is trusted."""
    has_neg = f.min_index < 0 and np.any(np.abs(f.coefficients[: -f.min_index]) > tol)
    has_pos = f.max_index > 0 and np.any(np.abs(f.coefficients[1 - f.min_index:]) > tol)
    inner = f.domain.inner_radius if has_neg else 0.0
    outer = f.domain.outer_radius if has_pos else math.inf
    return inner, outer


def substitute(f, g: BiSeries, z_window=None, w_degree=None, grid=None) -> BiSeries:
    """Bi-series of ``f(g(z1, w))`` (or ``f(g(z1, w), w)`` when ``f`` is a BiSeries).

    Computed by sampling on ``g``'s torus.  The values of ``g`` must stay
    where ``f`` is defined: inside its annulus if it has negative powers,
    inside its outer circle if it has positive ones, and for bi-series
    inputs also inside ``|w| < f.w_radius``.
    """
    lo, hi = z_window or (g.z_min, g.z_max)
    deg = g.w_degree if w_degree is None else w_degree
    mz, mw = grid or (next_pow2(2 * (hi - lo + 1)), next_pow2(2 * (deg + 1)))
    zs, ws = circle(g.z_domain.sample_radius, mz), circle(g.w_radius, mw)
    gv = g.on_grid(zs, ws)
    mod = np.abs(gv)
    if isinstance(f, LaurentSeries):
        inner, outer = _effective_bounds(f)
        if np.min(mod) <= inner or np.max(mod) >= outer:
            raise DomainError("composition leaves annulus")
        values = f(gv)
    else:
        inner = f.z_domain.inner_radius if f.z_min < 0 else 0.0
        outer = f.z_domain.outer_radius if f.z_max > 0 else math.inf
        if np.min(mod) <= inner or np.max(mod) >= outer:
            raise DomainError("composition leaves annulus")
        if g.w_radius > f.w_radius * (1 + 1e-12):
            raise DomainError("composition leaves the w-disk")
        values = f(gv, np.broadcast_to(ws[None, :], gv.shape))
    return BiSeries.from_samples(values, (lo, hi), deg, g.z_domain, g.w_radius)


# ---------------------------------------------------------------------------
# text file format

def _fmt(x: float) -> str:
    return repr(float(x)) if x != 0 else "0.0"


def format_laurent(f: LaurentSeries) -> str:
    lines = [f"LAURENT {f.min_index} {f.max_index} {_fmt(f.domain.inner_radius)} "
             f"{_fmt(f.domain.outer_radius)}"]
    for k, c in zip(f.indices, f.coefficients):
        lines.append(f"{k} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


def format_biseries(F: BiSeries) -> str:
    d = F.z_domain
    lines = [f"BISERIES {F.z_min} {F.z_max} {F.w_degree} {_fmt(d.inner_radius)} "
             f"{_fmt(d.outer_radius)} {_fmt(F.w_radius)}"]
    for j, row in zip(F.z_indices, F.coefficients):
        for k, c in enumerate(row):
            lines.append(f"{j} {k} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


def _parse_laurent_lines(lines, pos):
    if pos >= len(lines):
        raise FormatError(f"line {pos + 1}: missing LAURENT block")
    head = lines[pos].split()
    if len(head) != 5 or head[0] != "LAURENT":
        raise FormatError(f"line {pos + 1}: expected LAURENT header, got {lines[pos]!r}")
    try:
        lo, hi = int(head[1]), int(head[2])
        domain = Annulus(float(head[3]), float(head[4]))
    except ValueError as exc:
        raise FormatError(f"line {pos + 1}: {exc}") from None
    n = hi - lo + 1
    c = np.zeros(n, dtype=complex)
    for off in range(n):
        ln = pos + 1 + off
        try:
            k, re, im = lines[ln].split()
            k = int(k)
            c[k - lo] = complex(float(re), float(im))
        except (ValueError, IndexError):
            raise FormatError(f"line {ln + 1}: malformed coefficient line") from None
        if not lo <= k <= hi:
            raise FormatError(f"line {ln + 1}: index {k} outside [{lo}, {hi}]")
    return LaurentSeries(domain, lo, c), pos + 1 + n


def parse_laurent(text: str) -> LaurentSeries:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    f, end = _parse_laurent_lines(lines, 0)
    if end != len(lines):
        raise FormatError("trailing data after LAURENT block")
    return f


def parse_biseries(text: str) -> BiSeries:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split() if lines else []
    if len(head) != 7 or head[0] != "BISERIES":
        raise FormatError("expected BISERIES header")
    try:
        lo, hi, deg = int(head[1]), int(head[2]), int(head[3])
        domain = Annulus(float(head[4]), float(head[5]))
        rho = float(head[6])
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    c = np.zeros((hi - lo + 1, deg + 1), dtype=complex)
    body = lines[1:]
    if len(body) != c.size:
        raise FormatError(f"expected {c.size} coefficient lines, got {len(body)}")
    for n, ln in enumerate(body, start=2):
        try:
            j, k, re, im = ln.split()
            c[int(j) - lo, int(k)] = complex(float(re), float(im))
        except (ValueError, IndexError):
            raise FormatError(f"line {n}: malformed coefficient line") from None
    return BiSeries(domain, rho, lo, c)


def write_series(path, obj) -> None:
    text = format_laurent(obj) if isinstance(obj, LaurentSeries) else format_biseries(obj)
    Path(path).write_text(text)


def read_series(path):
    text = Path(path).read_text()
    first = text.lstrip().split(None, 1)[0] if text.strip() else ""
    if first == "LAURENT":
        return parse_laurent(text)
    if first == "BISERIES":
        return parse_biseries(text)
    raise FormatError(f"{path}: unknown series header {first!r}")
