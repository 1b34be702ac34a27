"""Coverings, the coboundary matrix and its numerical (co)homology.

Chart sections are stored as coefficient vectors: for a chart of
multiplicity ``n`` the vector is the concatenation of ``n`` Laurent windows.
Overlap cochains use the same layout on the overlap window.  All spectral
work happens in weighted coordinates, where the Euclidean norm of a vector
equals the smoothness-class norm of the section it represents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .series import INVERTIBILITY_FLOOR, SOBOLEV1, Annulus, LaurentSeries, SmoothnessClass, circle

DEFAULT_RANK_TOL = 1e-8
EDGE_FRACTION = 0.10
ARTIFACT_SHARE = 0.5


@dataclass(frozen=True)
class Chart:
    domain: Annulus
    multiplicity: int = 1
    smoothness: SmoothnessClass = SOBOLEV1
    window: tuple[int, int] | None = None

    def resolved_window(self, default: int) -> tuple[int, int]:
        if self.window is not None:
            lo, hi = self.window
        else:
            lo, hi = (0 if self.domain.is_disk else -default), default
        if self.domain.is_disk and lo < 0:
            raise ConfigError("a disk chart cannot carry negative powers")
        return int(lo), int(hi)


@dataclass(frozen=True, eq=False)
class Overlap:
    """Overlap of charts ``i`` and ``j`` expressed in chart ``i``'s coordinate.

    ``kind="identity"``: chart ``j`` uses the same coordinate.
    ``kind="inversion"``: chart ``j`` uses ``1/z``.
    A section ``f_j`` is seen on the overlap as ``factor * f_j(transformed z)``.
    """

    i: int
    j: int
    domain: Annulus
    kind: str = "identity"
    factor: LaurentSeries | None = None
    cylinder: object = None
    window: tuple[int, int] | None = None
    smoothness: SmoothnessClass | None = None

    def image_in_j(self) -> Annulus:
        if self.kind == "identity":
            return self.domain
        if self.kind == "inversion":
            return Annulus(1.0 / self.domain.outer_radius, 1.0 / self.domain.inner_radius)
        raise ConfigError(f"unsupported overlap kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class Covering:
    charts: tuple
    overlaps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "charts", tuple(self.charts))
        object.__setattr__(self, "overlaps", tuple(self.overlaps))
        self.validate()

    def validate(self) -> None:
        m = len(self.charts)
        for ov in self.overlaps:
            if not (0 <= ov.i < m and 0 <= ov.j < m) or ov.i == ov.j:
                raise ConfigError(f"overlap ({ov.i}, {ov.j}) refers to unknown charts")
            if ov.domain.is_disk:
                raise ConfigError("overlap domains must be annuli")
            ci, cj = self.charts[ov.i], self.charts[ov.j]
            if not ci.domain.contains(ov.domain):
                raise ConfigError(f"overlap ({ov.i}, {ov.j}) is not inside chart {ov.i}")
            if not cj.domain.contains(ov.image_in_j()):
                raise ConfigError(f"overlap ({ov.i}, {ov.j}) is not inside chart {ov.j}")
            if ci.multiplicity != cj.multiplicity:
                raise ConfigError(f"charts {ov.i} and {ov.j} have different multiplicities")
            if ov.factor is not None:
                zs = circle(ov.domain.sample_radius, 256)
                edge = [circle(r, 256) for r in (ov.domain.inner_radius, ov.domain.outer_radius)]
                vals = np.abs(ov.factor(np.concatenate([zs] + edge)))
                if np.min(vals) <= INVERTIBILITY_FLOOR:
                    raise ConfigError(f"transition factor of overlap ({ov.i}, {ov.j}) vanishes")


@dataclass(frozen=True, eq=False)
class CoboundaryOperator:
    """Raw matrix of ``delta`` plus the per-slot weights of the two norms.

    ``source_slots[c]`` and ``target_slots[o]`` are ``(slice, lo, hi, n)``:
    position in the vector, Laurent window, multiplicity.
    """

    matrix: np.ndarray
    source_weights: np.ndarray
    target_weights: np.ndarray
    source_slots: tuple = ()
    target_slots: tuple = ()
    _svd: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def weighted(self) -> np.ndarray:
        return self.target_weights[:, None] * self.matrix / self.source_weights[None, :]

    def svd(self):
        if "full" not in self._svd:
            W = self.weighted
            if W.size == 0:
                self._svd["full"] = (np.eye(W.shape[0]), np.zeros(0), np.eye(W.shape[1]).conj())
            else:
                self._svd["full"] = np.linalg.svd(W)
        return self._svd["full"]

    def apply(self, f) -> np.ndarray:
        return self.matrix @ np.asarray(f, dtype=complex)

    def source_norm(self, f) -> float:
        return float(np.linalg.norm(self.source_weights * np.asarray(f)))

    def target_norm(self, h) -> float:
        return float(np.linalg.norm(self.target_weights * np.asarray(h)))


def _restriction_block(src: tuple[int, int], dst: tuple[int, int]) -> np.ndarray:
    lo, hi = dst
    slo, shi = src
    B = np.zeros((hi - lo + 1, shi - slo + 1))
    for k in range(max(lo, slo), min(hi, shi) + 1):
        B[k - lo, k - slo] = 1.0
    return B


def _twisted_block(src: tuple[int, int], dst: tuple[int, int], kind: str,
                   factor: LaurentSeries | None) -> np.ndarray:
    """Matrix of ``f -> factor * f(T z)`` from window ``src`` to window ``dst``."""
    lo, hi = dst
    slo, shi = src
    fk = {0: 1.0} if factor is None else factor.as_dict()
    B = np.zeros((hi - lo + 1, shi - slo + 1), dtype=complex)
    for col, k in enumerate(range(slo, shi + 1)):
        base = k if kind == "identity" else -k
        for m, c in fk.items():
            t = base + m
            if lo <= t <= hi:
                B[t - lo, col] += c
    return B


def _image_window(src: tuple[int, int], kind: str, factor: LaurentSeries | None):
    slo, shi = src
    lo, hi = (slo, shi) if kind == "identity" else (-shi, -slo)
    if factor is not None:
        ks = [k for k in factor.as_dict()]
        lo, hi = lo + min(ks), hi + max(ks)
    return lo, hi


def overlap_window(cov: Covering, ov: Overlap, window: int) -> tuple[int, int]:
    """Union of the images of the two chart windows (unless set explicitly)."""
    if ov.window is not None:
        return tuple(ov.window)
    wi = cov.charts[ov.i].resolved_window(window)
    wj = cov.charts[ov.j].resolved_window(window)
    lo_j, hi_j = _image_window(wj, ov.kind, ov.factor)
    return min(wi[0], lo_j), max(wi[1], hi_j)


def assemble_coboundary(cov: Covering, window: int = 16) -> CoboundaryOperator:
    """``(delta f)_ij = f_i - factor * T(f_j)`` on every overlap."""
    src_slots, src_w = [], []
    pos = 0
    for ch in cov.charts:
        lo, hi = ch.resolved_window(window)
        size = ch.multiplicity * (hi - lo + 1)
        src_slots.append((slice(pos, pos + size), lo, hi, ch.multiplicity))
        src_w.append(np.tile(ch.smoothness.weights(np.arange(lo, hi + 1)), ch.multiplicity))
        pos += size
    tgt_slots, tgt_w = [], []
    tpos = 0
    blocks = []
    for ov in cov.overlaps:
        if ov.cylinder is not None and not getattr(ov.cylinder, "is_identity", False):
            raise ConfigError("distorted overlaps are handled by the moduli glue map, not here")
        lo, hi = overlap_window(cov, ov, window)
        n = cov.charts[ov.i].multiplicity
        size = n * (hi - lo + 1)
        tgt_slots.append((slice(tpos, tpos + size), lo, hi, n))
        smooth = ov.smoothness or cov.charts[ov.i].smoothness
        tgt_w.append(np.tile(smooth.weights(np.arange(lo, hi + 1)), n))
        si, sj = src_slots[ov.i], src_slots[ov.j]
        eye = np.eye(n)
        bi = np.kron(eye, _restriction_block((si[1], si[2]), (lo, hi)))
        bj = -np.kron(eye, _twisted_block((sj[1], sj[2]), (lo, hi), ov.kind, ov.factor))
        blocks.append((tgt_slots[-1][0], si[0], bi))
        blocks.append((tgt_slots[-1][0], sj[0], bj))
        tpos += size
    M = np.zeros((tpos, pos), dtype=complex)
    for rows, cols, B in blocks:
        M[rows, cols] += B
    sw = np.concatenate(src_w) if src_w else np.zeros(0)
    tw = np.concatenate(tgt_w) if tgt_w else np.zeros(0)
    return CoboundaryOperator(M, sw, tw, tuple(src_slots), tuple(tgt_slots))


# ---------------------------------------------------------------------------
# spectral analysis

def _threshold(s: np.ndarray, rank_tol: float) -> float:
    return rank_tol * (float(s[0]) if s.size else 0.0)


def numerical_rank(op: CoboundaryOperator, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    _, s, _ = op.svd()
    return int(np.sum(s > _threshold(s, rank_tol))) if s.size else 0


def _edge_mask(op: CoboundaryOperator) -> np.ndarray:
    mask = np.zeros(op.shape[0])
    for sl, lo, hi, n in op.target_slots:
        length = hi - lo + 1
        band = max(1, math.ceil(EDGE_FRACTION * length))
        one = np.zeros(length)
        one[:band] = 1.0
        one[-band:] = 1.0
        mask[sl] = np.tile(one, n)
    return mask


@dataclass(frozen=True, eq=False)
class CokernelAnalysis:
    dim: int
    raw_dim: int
    artifacts: int
    representatives: np.ndarray
    singular_values: np.ndarray
    threshold: float
    gap: float


def cokernel_analysis(op: CoboundaryOperator, rank_tol: float = DEFAULT_RANK_TOL) -> CokernelAnalysis:
    """Numerical cokernel, with window-edge artifacts separated out.

    Representatives are raw target vectors (columns).  A cokernel direction
    counts as an artifact when more than half of its weighted norm sits on
    the outermost tenth of indices at either end of some overlap window.
    """
    U, s, _ = op.svd()
    m = op.shape[0]
    thr = _threshold(s, rank_tol)
    rank = int(np.sum(s > thr)) if s.size else 0
    U0 = U[:, rank:m]
    above = s[s > thr]
    below = s[s <= thr]
    gap = float(above[-1] / below[0]) if above.size and below.size and below[0] > 0 else math.inf
    if U0.shape[1] == 0:
        return CokernelAnalysis(0, 0, 0, np.zeros((m, 0), complex), s, thr, gap)
    E = _edge_mask(op)
    G = U0.conj().T @ (E[:, None] * U0)
    vals, vecs = np.linalg.eigh((G + G.conj().T) / 2)
    keep = vals <= ARTIFACT_SHARE
    reps = (U0 @ vecs[:, keep]) / op.target_weights[:, None]
    return CokernelAnalysis(int(keep.sum()), U0.shape[1], int((~keep).sum()), reps, s, thr, gap)


def h1_dimension(op: CoboundaryOperator, rank_tol: float = DEFAULT_RANK_TOL):
    """``(dim H^1, singular values)``."""
    ca = cokernel_analysis(op, rank_tol)
    return ca.dim, ca.singular_values


def h0_kernel(op: CoboundaryOperator, rank_tol: float = DEFAULT_RANK_TOL) -> list[np.ndarray]:
    """Raw chart vectors spanning the numerical kernel, orthonormal in the weighted norm."""
    n = op.shape[1]
    if n == 0:
        return []
    _, s, Vh = op.svd()
    rank = numerical_rank(op, rank_tol)
    basis = Vh[rank:].conj().T / op.source_weights[:, None]
    return [basis[:, k].copy() for k in range(basis.shape[1])]


def split_cocycle(op: CoboundaryOperator, h) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares preimage ``f`` of ``h`` and the weighted residual."""
    h = np.asarray(h, dtype=complex)
    if op.shape[1] == 0:
        return np.zeros(0, complex), op.target_norm(h)
    rhs = op.target_weights * h
    y, *_ = np.linalg.lstsq(op.weighted, rhs, rcond=None)
    f = y / op.source_weights
    return f, float(np.linalg.norm(op.weighted @ y - rhs))


# ---------------------------------------------------------------------------
# standard coverings

def projective_line_covering(d: int, window: int, smoothness: SmoothnessClass = SOBOLEV1) -> Covering:
    """Two disks ``|z| < 2`` and ``|1/z| < 2`` with transition factor ``z**d``."""
    disk = Annulus(0.0, 2.0)
    ov_dom = Annulus(0.5, 2.0)
    factor = LaurentSeries.monomial(ov_dom, d)
    charts = [Chart(disk, 1, smoothness, (0, window)), Chart(disk, 1, smoothness, (0, window))]
    return Covering(charts, [Overlap(0, 1, ov_dom, "inversion", factor)])


def annulus_covering(window: int, multiplicity: int = 1,
                     smoothness: SmoothnessClass = SOBOLEV1) -> Covering:
    """``A(0.5, 1.2)`` and ``A(0.9, 2)`` covering ``A(0.5, 2)``; trivial factor."""
    a, b = Annulus(0.5, 1.2), Annulus(0.9, 2.0)
    charts = [Chart(a, multiplicity, smoothness, (-window, window)),
              Chart(b, multiplicity, smoothness, (-window, window))]
    return Covering(charts, [Overlap(0, 1, Annulus(0.9, 1.2))])


def chart_vector(op: CoboundaryOperator, sections) -> np.ndarray:
    """Pack per-chart lists of Laurent series into a source vector."""
    out = np.zeros(op.shape[1], dtype=complex)
    for (sl, lo, hi, n), comps in zip(op.source_slots, sections):
        out[sl] = np.concatenate([c.with_window(lo, hi).coefficients for c in comps])
    return out


def overlap_vector(op: CoboundaryOperator, cochains) -> np.ndarray:
    out = np.zeros(op.shape[0], dtype=complex)
    for (sl, lo, hi, n), comps in zip(op.target_slots, cochains):
        out[sl] = np.concatenate([c.with_window(lo, hi).coefficients for c in comps])
    return out
