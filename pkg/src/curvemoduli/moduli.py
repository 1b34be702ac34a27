"""Glue map, its linearization, Newton charts of the zero set and continuation.

A configuration is a covering whose charts carry base Weierstrass
polynomials and whose overlaps are distorted cylinders.  Chart ``i`` of an
overlap uses the cylinder's ``z1`` coordinate and chart ``j`` its ``z2``.
A point of the parameter space is the concatenation of all chart
coefficient vectors; the glue map sends it to the differences of the
distorted Weierstrass polynomials the two sides induce on each overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cech import Chart, CoboundaryOperator, Covering, Overlap, cokernel_analysis, numerical_rank
from .distorted import DistortedCylinder, DistortedWP, pullback, solve_dwp
from .errors import ConfigError, ConvergenceError, CurveModuliError, NumericalError
from .series import SOBOLEV1, Annulus, BiSeries, LaurentSeries, SmoothnessClass, circle, next_pow2
from .weierstrass import WeierstrassPolynomial, hausdorff, weierstrass_prep

DEFAULT_BALL_RADIUS = 0.1
DEFAULT_DWP_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class ChartConfig:
    covering: Covering
    base_polys: tuple
    ball_radii: tuple = ()
    dwp_tol: float = DEFAULT_DWP_TOL
    dwp_max_iter: int = 60
    epsilon: float = 1.0
    root_samples: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "base_polys", tuple(self.base_polys))
        radii = tuple(self.ball_radii) or (DEFAULT_BALL_RADIUS,) * len(self.base_polys)
        object.__setattr__(self, "ball_radii", radii)
        if len(self.base_polys) != len(self.covering.charts) or len(radii) != len(self.base_polys):
            raise ConfigError("need one base polynomial and one ball radius per chart")
        for k, (ch, g) in enumerate(zip(self.covering.charts, self.base_polys)):
            if g.degree != ch.multiplicity:
                raise ConfigError(f"chart {k}: base degree {g.degree} != multiplicity {ch.multiplicity}")
        for ov in self.covering.overlaps:
            if not isinstance(ov.cylinder, DistortedCylinder):
                raise ConfigError("every overlap needs a distorted cylinder")
            if ov.window is None:
                raise ConfigError("every overlap needs an explicit coefficient window")

    # layout -------------------------------------------------------------
    @property
    def charts(self):
        return self.covering.charts

    @property
    def overlaps(self):
        return self.covering.overlaps

    def chart_window(self, i: int) -> tuple[int, int]:
        return self.charts[i].resolved_window(0)

    def chart_slices(self) -> list[slice]:
        out, pos = [], 0
        for ch in self.charts:
            lo, hi = ch.resolved_window(0)
            size = ch.multiplicity * (hi - lo + 1)
            out.append(slice(pos, pos + size))
            pos += size
        return out

    def overlap_slices(self) -> list[slice]:
        out, pos = [], 0
        for ov in self.overlaps:
            lo, hi = ov.window
            size = self.charts[ov.i].multiplicity * (hi - lo + 1)
            out.append(slice(pos, pos + size))
            pos += size
        return out

    @property
    def dimension(self) -> int:
        return self.chart_slices()[-1].stop if self.charts else 0

    def source_weights(self) -> np.ndarray:
        return np.concatenate([np.tile(ch.smoothness.weights(np.arange(*_closed(ch.resolved_window(0)))),
                                       ch.multiplicity) for ch in self.charts])

    def target_weights(self) -> np.ndarray:
        parts = []
        for ov in self.overlaps:
            s = ov.smoothness or self.charts[ov.i].smoothness
            parts.append(np.tile(s.weights(np.arange(*_closed(ov.window))), self.charts[ov.i].multiplicity))
        return np.concatenate(parts) if parts else np.zeros(0)

    # conversions --------------------------------------------------------
    def base_vector(self) -> np.ndarray:
        return np.concatenate([g.coefficient_vector(self.chart_window(i))
                               for i, g in enumerate(self.base_polys)])

    def polynomials(self, f) -> list[WeierstrassPolynomial]:
        f = np.asarray(f, dtype=complex)
        return [WeierstrassPolynomial.from_vector(f[sl], ch.multiplicity, ch.resolved_window(0), ch.domain)
                for sl, ch in zip(self.chart_slices(), self.charts)]

    def vector(self, polys) -> np.ndarray:
        return np.concatenate([P.coefficient_vector(self.chart_window(i)) for i, P in enumerate(polys)])

    def chart_norm(self, i: int, f) -> float:
        sl = self.chart_slices()[i]
        return float(np.linalg.norm(self.source_weights()[sl] * np.asarray(f)[sl]))


def _closed(window):
    lo, hi = window
    return lo, hi + 1


# ---------------------------------------------------------------------------
# nonlinear maps

def overlap_chart_map(cfg: ChartConfig, P: WeierstrassPolynomial, overlap: int, side: str,
                      check_ball: bool = True) -> DistortedWP:
    """Distorted Weierstrass polynomial of one chart's curve on an overlap.

    ``side`` is ``"i"`` (chart uses ``z1``) or ``"j"`` (chart uses ``z2``).
    """
    ov = cfg.overlaps[overlap]
    chart = ov.i if side == "i" else ov.j
    if check_ball:
        g = cfg.base_polys[chart]
        w = cfg.chart_window(chart)
        diff = P.coefficient_vector(w) - g.coefficient_vector(w)
        wts = np.tile(cfg.charts[chart].smoothness.weights(np.arange(*_closed(w))), P.degree)
        if np.linalg.norm(wts * diff) > cfg.ball_radii[chart]:
            raise ConfigError(f"chart {chart} data outside its ball of radius {cfg.ball_radii[chart]}")
    cyl = ov.cylinder
    F = pullback(P, cyl, "z1" if side == "i" else "z2")
    try:
        return solve_dwp(F, cyl, tol=cfg.dwp_tol, max_iter=cfg.dwp_max_iter, epsilon=cfg.epsilon,
                         n=P.degree, stagnation=True)
    except CurveModuliError as exc:
        raise type(exc)(f"overlap ({ov.i}, {ov.j}), chart {chart}: {exc}") from exc


def _glue_parts(f, cfg: ChartConfig, check_ball: bool = True):
    polys = cfg.polynomials(f)
    parts = []
    for k, ov in enumerate(cfg.overlaps):
        di = overlap_chart_map(cfg, polys[ov.i], k, "i", check_ball)
        dj = overlap_chart_map(cfg, polys[ov.j], k, "j", check_ball)
        parts.append((di, dj))
    return polys, parts


def glue_map(f, cfg: ChartConfig, check_ball: bool = True) -> np.ndarray:
    """Concatenated overlap differences ``phi_ij(f_i) - phi_ji(f_j)``."""
    _, parts = _glue_parts(f, cfg, check_ball)
    return np.concatenate([di.vector(ov.window) - dj.vector(ov.window)
                           for (di, dj), ov in zip(parts, cfg.overlaps)]) if parts else np.zeros(0)


def base_consistency(cfg: ChartConfig) -> float:
    """Largest coefficient mismatch of the two sides' distorted polynomials at the base."""
    r = glue_map(cfg.base_vector(), cfg)
    return float(np.max(np.abs(r))) if r.size else 0.0


# ---------------------------------------------------------------------------
# linearization by matching at the roots

def _batch_roots(P: WeierstrassPolynomial, zs) -> np.ndarray:
    n = P.degree
    a = np.stack([f(zs) for f in P.coefficients], axis=-1)
    comp = np.zeros((len(zs), n, n), dtype=complex)
    comp[:, 0, :] = -a
    if n > 1:
        comp[:, 1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp)


def _poly_dw(P: WeierstrassPolynomial, z, w):
    n = P.degree
    out = n * w ** (n - 1)
    for i, f in enumerate(P.coefficients, start=1):
        if n - i > 0:
            out = out + (n - i) * f(z) * w ** (n - i - 1)
    return out


def _poly_dz(P: WeierstrassPolynomial, z, w):
    n = P.degree
    out = 0
    for i, f in enumerate(P.coefficients, start=1):
        out = out + f.derivative()(z) * w ** (n - i)
    return out


def side_roots(P: WeierstrassPolynomial, cyl: DistortedCylinder, side: str, zs,
               steps: int = 30, tol: float = 1e-15) -> np.ndarray:
    """Roots ``w_j(z1)`` of a chart polynomial pulled back to ``(z1, w)``; shape ``(len(zs), n)``."""
    zs = np.asarray(zs, dtype=complex)
    w = _batch_roots(P, zs)
    if side == "i":
        return w
    T, Tw = cyl.transition, cyl.transition.dw()
    z = np.broadcast_to(zs[:, None], w.shape)
    for _ in range(steps):
        z2 = T(z, w)
        val = P(z2, w)
        der = _poly_dw(P, z2, w) + _poly_dz(P, z2, w) * Tw(z, w)
        step = val / der
        w = w - step
        if np.max(np.abs(step)) < tol:
            break
    return w


def _dwp_dw(D: DistortedWP, cyl: DistortedCylinder, z, w):
    n = D.degree
    T, Tw = cyl.transition, cyl.transition.dw()
    z2 = T(z, w)
    tw = Tw(z, w)
    out = n * w ** (n - 1)
    for i, (m, p) in enumerate(zip(D.minus_parts, D.plus_parts), start=1):
        out = out + p.derivative()(z2) * tw * w ** (n - i)
        if n - i > 0:
            out = out + (m(z) + p(z2)) * (n - i) * w ** (n - i - 1)
    return out


def linearized_block(P: WeierstrassPolynomial, D: DistortedWP, cyl: DistortedCylinder, side: str,
                     chart_window, overlap_window, samples: int | None = None) -> np.ndarray:
    """Derivative of ``P -> distorted polynomial`` as a matrix.

    A change ``E`` of the chart polynomial changes the distorted polynomial
    ``D = u P`` by ``D'`` with ``D'(w_j) = u(w_j) E(w_j)`` at every root, and
    ``u(w_j) = D_w(w_j) / P_w(w_j)``.  These conditions are imposed at the
    roots over a circle of ``z1`` values and solved in least squares.
    """
    n = P.degree
    lo, hi = overlap_window
    clo, chi = chart_window
    width, cwidth = hi - lo + 1, chi - clo + 1
    m = samples or next_pow2(2 * width)
    zs = circle(cyl.core.sample_radius, m)
    W = side_roots(P, cyl, side, zs)
    z = np.broadcast_to(zs[:, None], W.shape)
    z2 = cyl.transition(z, W)
    if side == "i":
        pw = _poly_dw(P, z, W)
        zeta = z
    else:
        pw = _poly_dw(P, z2, W) + _poly_dz(P, z2, W) * cyl.transition.dw()(z, W)
        zeta = z2
    u = _dwp_dw(D, cyl, z, W) / pw
    ks = np.arange(lo, hi + 1)
    scale = cyl.core.sample_radius ** ks.astype(float)
    basis = np.where(ks < 0, z[..., None] ** ks, z2[..., None] ** ks) / scale
    cks = np.arange(clo, chi + 1)
    rows = W.size
    A = np.zeros((rows, n * width), dtype=complex)
    B = np.zeros((rows, n * cwidth), dtype=complex)
    zeta_pow = zeta[..., None] ** cks
    for i in range(1, n + 1):
        wp = (W ** (n - i))[..., None]
        A[:, (i - 1) * width:i * width] = (wp * basis).reshape(rows, width)
        B[:, (i - 1) * cwidth:i * cwidth] = (u[..., None] * wp * zeta_pow).reshape(rows, cwidth)
    X, *_ = np.linalg.lstsq(A, B, rcond=None)
    return X / np.tile(scale, n)[:, None]


def linearized_coboundary(cfg: ChartConfig, f=None, parts=None) -> CoboundaryOperator:
    """The coboundary at ``f`` (default: the base) as the derivative of the glue map."""
    f = cfg.base_vector() if f is None else np.asarray(f, dtype=complex)
    if parts is None:
        polys, parts = _glue_parts(f, cfg, check_ball=False)
    else:
        polys = cfg.polynomials(f)
    cs, os_ = cfg.chart_slices(), cfg.overlap_slices()
    M = np.zeros((os_[-1].stop if os_ else 0, cfg.dimension), dtype=complex)
    for k, (ov, (di, dj)) in enumerate(zip(cfg.overlaps, parts)):
        cyl = ov.cylinder
        M[os_[k], cs[ov.i]] += linearized_block(polys[ov.i], di, cyl, "i", cfg.chart_window(ov.i),
                                                ov.window, cfg.root_samples)
        M[os_[k], cs[ov.j]] -= linearized_block(polys[ov.j], dj, cyl, "j", cfg.chart_window(ov.j),
                                                ov.window, cfg.root_samples)
    src, tgt = [], []
    for sl, ch in zip(cs, cfg.charts):
        lo, hi = ch.resolved_window(0)
        src.append((sl, lo, hi, ch.multiplicity))
    for sl, ov in zip(os_, cfg.overlaps):
        tgt.append((sl, ov.window[0], ov.window[1], cfg.charts[ov.i].multiplicity))
    return CoboundaryOperator(M, cfg.source_weights(), cfg.target_weights(), tuple(src), tuple(tgt))


def finite_difference_jacobian(cfg: ChartConfig, step: float, directions, base=None) -> np.ndarray:
    """Central differences of the glue map along the columns of ``directions``."""
    f0 = cfg.base_vector() if base is None else base
    cols = []
    for v in np.asarray(directions).T:
        plus = glue_map(f0 + step * v, cfg, check_ball=False)
        minus = glue_map(f0 - step * v, cfg, check_ball=False)
        cols.append((plus - minus) / (2 * step))
    return np.array(cols).T


@dataclass(frozen=True)
class DifferentialReport:
    max_error: float
    errors: tuple
    step: float


def differential_check(cfg: ChartConfig, op: CoboundaryOperator, step: float = 1e-4,
                       directions=None, n_random: int = 4, seed: int = 0) -> DifferentialReport:
    """Compare finite differences of the glue map with ``op``.

    The error along ``v`` is ``|FD v - op v| / (|op| |v|)`` in the weighted
    norms, ``|op|`` being the largest singular value.  Directions default to
    the tangent basis plus ``n_random`` random unit vectors.
    """
    if directions is None:
        tangent = tangent_basis(op)
        rng = np.random.default_rng(seed)
        rand = rng.normal(size=(op.shape[1], n_random)) + 1j * rng.normal(size=(op.shape[1], n_random))
        rand /= op.source_weights[:, None]
        rand /= np.linalg.norm(op.source_weights[:, None] * rand, axis=0)
        directions = np.hstack([tangent, rand]) if tangent.size else rand
    fd = finite_difference_jacobian(cfg, step, directions)
    exact = op.matrix @ directions
    _, s, _ = op.svd()
    scale = float(s[0]) if s.size else 1.0
    errs = []
    for k in range(directions.shape[1]):
        num = op.target_norm(fd[:, k] - exact[:, k])
        errs.append(num / (scale * op.source_norm(directions[:, k])))
    return DifferentialReport(float(max(errs)), tuple(errs), step)


# ---------------------------------------------------------------------------
# charts of the zero set

def tangent_basis(op: CoboundaryOperator, rank_tol: float = 1e-8) -> np.ndarray:
    """Raw kernel vectors as columns, orthonormal in the weighted inner product."""
    _, _, Vh = op.svd()
    r = numerical_rank(op, rank_tol)
    return Vh[r:].conj().T / op.source_weights[:, None]


def complement_basis(op: CoboundaryOperator, rank_tol: float = 1e-8) -> np.ndarray:
    _, _, Vh = op.svd()
    r = numerical_rank(op, rank_tol)
    return Vh[:r].conj().T / op.source_weights[:, None]


@dataclass
class NewtonResult:
    point: np.ndarray
    residual: float
    history: list
    iterations: int
    obstruction: np.ndarray


@dataclass(eq=False)
class ModuliChart:
    config: ChartConfig
    operator: CoboundaryOperator
    tangent: np.ndarray
    complement: np.ndarray
    h1_dim: int
    obstruction_basis: np.ndarray
    artifacts: int
    tol: float = 1e-11
    max_iter: int = 12
    rank_tol: float = 1e-8
    base_residual: float = 0.0

    @property
    def tangent_dim(self) -> int:
        return self.tangent.shape[1]

    @property
    def base(self) -> np.ndarray:
        return self.config.base_vector()

    def coordinates(self, f) -> np.ndarray:
        """Tangent coordinates of a chart vector (weighted projection onto the kernel)."""
        w2 = self.operator.source_weights ** 2
        return self.tangent.conj().T @ (w2 * (np.asarray(f) - self.base))

    def obstruction(self, residual) -> np.ndarray:
        """Cokernel components of an overlap residual."""
        if self.obstruction_basis.shape[1] == 0:
            return np.zeros(0, complex)
        w2 = self.operator.target_weights ** 2
        return self.obstruction_basis.conj().T @ (w2 * np.asarray(residual))

    def solve(self, t=None, start=None) -> NewtonResult:
        """Newton-correct ``base + tangent @ t`` within the complement of the kernel."""
        t = np.zeros(self.tangent_dim, complex) if t is None else np.asarray(t, dtype=complex)
        f = self.base + self.tangent @ t if start is None else np.asarray(start, dtype=complex)
        cfg = self.config
        ws, wt = self.operator.source_weights, self.operator.target_weights
        history = []
        for it in range(1, self.max_iter + 1):
            polys, parts = _glue_parts(f, cfg)
            r = np.concatenate([di.vector(ov.window) - dj.vector(ov.window)
                                for (di, dj), ov in zip(parts, cfg.overlaps)]) if parts else np.zeros(0)
            rn = float(np.linalg.norm(wt * r))
            history.append(rn)
            if rn < self.tol:
                return NewtonResult(f, rn, history, it, self.obstruction(r))
            if len(history) > 2 and rn > 0.5 * history[-2] and rn < 1e3 * self.tol:
                # stalled at the rounding floor of the glue map
                return NewtonResult(f, rn, history, it, self.obstruction(r))
            J = linearized_coboundary(cfg, f, parts).matrix
            A = (wt[:, None] * (J @ self.complement))
            y, *_ = np.linalg.lstsq(A, -(wt * r), rcond=None)
            f = f + self.complement @ y
            if not np.all(np.isfinite(f)):
                break
        raise ConvergenceError(f"Newton did not converge in {self.max_iter} iterations", history)

    def point(self, t) -> NewtonResult:
        return self.solve(t)


def build_chart(cfg: ChartConfig, rank_tol: float = 1e-8, tol: float = 1e-11, max_iter: int = 12,
                consistency_tol: float = 1e-8) -> ModuliChart:
    base_res = base_consistency(cfg)
    if base_res > consistency_tol:
        raise NumericalError(f"base polynomials disagree on overlaps by {base_res:.3g}")
    op = linearized_coboundary(cfg)
    ca = cokernel_analysis(op, rank_tol)
    return ModuliChart(cfg, op, tangent_basis(op, rank_tol), complement_basis(op, rank_tol), ca.dim,
                       ca.representatives, ca.artifacts, tol, max_iter, rank_tol, base_res)


# ---------------------------------------------------------------------------
# continuation

@dataclass
class Family:
    lambdas: np.ndarray
    points: list
    residuals: list
    histories: list
    tol: float

    @property
    def steps(self) -> int:
        return len(self.lambdas) - 1


def continue_family(chart: ModuliChart, target, steps: int = 10, tol: float = 1e-8) -> Family:
    """Follow the straight tangent segment from the base to ``target``.

    Each of the ``steps + 1`` samples is Newton-corrected, warm-started from
    the previous sample's complement component.
    """
    cfg = chart.config
    target = np.asarray(target, dtype=complex)
    for i in range(len(cfg.charts)):
        dist = cfg.chart_norm(i, target - chart.base)
        if dist > cfg.ball_radii[i]:
            raise ConfigError(f"target is outside the ball of chart {i} ({dist:.3g} > {cfg.ball_radii[i]})")
    t_end = chart.coordinates(target)
    lambdas = np.linspace(0.0, 1.0, steps + 1)
    points, residuals, histories = [], [], []
    prev_corr = np.zeros(cfg.dimension, complex)
    for lam in lambdas:
        start = chart.base + chart.tangent @ (lam * t_end) + prev_corr
        try:
            res = chart.solve(start=start)
        except CurveModuliError as exc:
            raise ConvergenceError(f"correction failed at lambda = {lam:.6g}: {exc}",
                                   getattr(exc, "history", [])) from exc
        if res.residual >= tol:
            raise ConvergenceError(f"glue residual {res.residual:.3g} at lambda = {lam:.6g}", res.history)
        prev_corr = res.point - chart.base - chart.tangent @ (lam * t_end)
        points.append(res.point)
        residuals.append(res.residual)
        histories.append(res.history)
    return Family(lambdas, points, residuals, histories, tol)


def overlap_root_mismatch(cfg: ChartConfig, f, samples: int = 16) -> float:
    """Largest Hausdorff distance between the two sides' root sets over sampled ``z1``."""
    polys = cfg.polynomials(f)
    worst = 0.0
    for ov in cfg.overlaps:
        zs = circle(ov.cylinder.core.sample_radius, samples) * np.exp(0.37j)
        a = side_roots(polys[ov.i], ov.cylinder, "i", zs)
        b = side_roots(polys[ov.j], ov.cylinder, "j", zs)
        worst = max(worst, max(hausdorff(x, y) for x, y in zip(a, b)))
    return worst


def chart_root_distance(P: WeierstrassPolynomial, Q: WeierstrassPolynomial, samples: int = 32) -> float:
    """Hausdorff distance of root sets of two polynomials on the same chart."""
    zs = circle(P.z_domain.sample_radius, samples) * np.exp(0.21j)
    a, b = _batch_roots(P, zs), _batch_roots(Q, zs)
    return max(hausdorff(x, y) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# standard configurations

def _prepare_chart(func, domain: Annulus, to_global, window, w_degree: int, grid: int, w_grid: int):
    """Prepare ``func(to_global(z, w), w)`` on ``domain x {|w| < 1}``."""
    lo, hi = window
    zs, ws = circle(domain.sample_radius, grid), circle(1.0, w_grid)
    zz, ww = np.meshgrid(zs, ws, indexing="ij")
    F = BiSeries.from_samples(func(to_global(zz, ww), ww), (min(lo, 0), max(hi, 0)), w_degree, domain, 1.0)
    P, _ = weierstrass_prep(F, z_window=(lo, hi))
    return P


def two_chart_configuration(func=None, eps: float = 0.05, K: int = 8, tail: int = 8,
                            smoothness: SmoothnessClass = SOBOLEV1, ball_radius: float = DEFAULT_BALL_RADIUS,
                            w_degree: int = 16, grid: int = 256, w_grid: int = 64,
                            dwp_tol: float = DEFAULT_DWP_TOL) -> ChartConfig:
    """Two annular charts joined by the shear ``z2 = z + eps * w``.

    Chart 0 is ``A(0.5, 1.2)`` in ``z`` and chart 1 is ``A(0.9, 2)`` in
    ``z2``; the overlap cylinder has core ``A(0.9, 1.2)`` and ``rho = 0.9``.
    ``func(z, w)`` is a global defining function (default ``w**2 - z/4``);
    the chart polynomials are obtained by preparing it in each coordinate.
    Chart 0 keeps ``tail`` extra negative powers and chart 1 ``tail`` extra
    positive powers so that the overlap window ``[-K-tail, K+tail]`` is
    reached exactly by the charts.
    """
    func = func or (lambda z, w: w ** 2 - z / 4)
    a0, a1 = Annulus(0.5, 1.2), Annulus(0.9, 2.0)
    win0, win1, wov = (-K - tail, K), (-K, K + tail), (-K - tail, K + tail)
    margin = 2 * (K + tail)
    if eps == 0:
        cyl = DistortedCylinder.identity(0.9, 1.2, 0.9, window=(-margin, margin), w_degree=w_degree)
    else:
        cyl = DistortedCylinder.shear(0.9, 1.2, 0.9, eps, window=(-margin, margin), w_degree=w_degree)
    g0 = _prepare_chart(func, a0, lambda z, w: z, win0, 8, grid, w_grid)
    g1 = _prepare_chart(func, a1, lambda z, w: z - eps * w, win1, 8, grid, w_grid)
    charts = [Chart(a0, g0.degree, smoothness, win0), Chart(a1, g1.degree, smoothness, win1)]
    cov = Covering(charts, [Overlap(0, 1, cyl.core, "identity", None, cyl, wov)])
    return ChartConfig(cov, (g0, g1), (ball_radius, ball_radius), dwp_tol=dwp_tol)


def global_section_target(cfg: ChartConfig, func_target, eps: float, grid: int = 256,
                          w_grid: int = 64) -> np.ndarray:
    """Chart vector of another global curve, prepared in each chart's coordinate."""
    polys = []
    for i, ch in enumerate(cfg.charts):
        to_global = (lambda z, w: z) if i == 0 else (lambda z, w: z - eps * w)
        polys.append(_prepare_chart(func_target, ch.domain, to_global, ch.resolved_window(0), 8, grid, w_grid))
    return cfg.vector(polys)
