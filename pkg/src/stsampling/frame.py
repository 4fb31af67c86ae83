"""Space-time sampling operator, frame bounds and reconstruction.

For a point set ``S``, an index rectangle ``I`` of kernel parameters and a
spectral grid, the operator maps coefficients ``c`` of a field ``f`` to the
weighted samples

    sqrt(w_j) (f * G_{alpha_j})(lam) = sqrt(w_j) sum_k m_{alpha_j}(xi_k) exp(i xi_k . lam) c_k

where ``(alpha_j, w_j)`` is a Gauss-Legendre rule on ``I`` and ``m_alpha`` the
kernel transform.  ``||A c||^2`` is then the quadrature value of
``sum_lam int_I |(f * G_alpha)(lam)|^2 d alpha``.

The operator is never stored densely at full size.  Its Gram matrix has the
structure ``A^H A = P o Q`` (entrywise product) with ``P = M^T diag(w) M``
from the multipliers and ``Q[k, l] = sum_lam exp(i (xi_l - xi_k) . lam)`` a
structure factor that only depends on ``l - k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .pointset import GeneratorConfig, PointSet2, gen
from .signal import (
    BandlimitedField,
    SpectralGrid,
    axis_multiplier,
    eval_field,
    heat_state,
    multiplied,
    sup_norm_estimate,
)

MAX_COLUMNS = 65**2  # 33 modes per half-axis
DENSE_LIMIT = 20_000_000


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class IndexRect:
    """``I = (a, b) x (c, d)``; with ``c, d`` omitted, the radial interval ``(a, b)`` with ``alpha = (beta, beta)``."""

    a: float
    b: float
    c: float | None = None
    d: float | None = None
    quad_order: int = 16

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise FrameError(f"need 0 < a < b, got ({self.a}, {self.b})")
        if (self.c is None) != (self.d is None):
            raise FrameError("give both c and d, or neither")
        if self.c is not None and not (0 < self.c < self.d):
            raise FrameError(f"need 0 < c < d, got ({self.c}, {self.d})")
        if int(self.quad_order) < 1:
            raise FrameError("quad_order must be at least 1 (empty quadrature)")

    @property
    def radial(self) -> bool:
        return self.c is None

    @staticmethod
    def _gl(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(n)
        h = (hi - lo) / 2
        return lo + h * (x + 1), h * w

    def axes(self) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None:
        """Per-axis rules for the tensor case, ``None`` for the radial case."""
        if self.radial:
            return None
        n = int(self.quad_order)
        return self._gl(self.a, self.b, n), self._gl(self.c, self.d, n)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``alpha_j`` (shape ``(J, 2)``) and weights ``w_j``; tensor order has axis 1 outer."""
        n = int(self.quad_order)
        if self.radial:
            x, w = self._gl(self.a, self.b, n)
            return np.stack([x, x], axis=-1), w
        (x1, w1), (x2, w2) = self.axes()
        g1, g2 = np.meshgrid(x1, x2, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel()], axis=-1), np.outer(w1, w2).ravel()

    def contains(self, other: "IndexRect") -> bool:
        if self.radial != other.radial:
            return False
        ok = self.a <= other.a and other.b <= self.b
        if not self.radial:
            ok = ok and self.c <= other.c and other.d <= self.d
        return ok

    @classmethod
    def parse(cls, text: str, quad_order: int = 16) -> "IndexRect":
        v = [float(t) for t in text.split(",")]
        if len(v) == 2:
            return cls(v[0], v[1], quad_order=quad_order)
        if len(v) == 4:
            return cls(*v, quad_order=quad_order)
        raise FrameError(f"index rectangle needs 2 or 4 numbers, got {text!r}")

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d, "quad_order": self.quad_order}


def fold_points(points: np.ndarray, R: float, tol: float = 1e-9) -> np.ndarray:
    """Reduce points modulo the period ``2R`` into ``[-R, R)^2`` and merge coincident ones."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    Pf = (P + R) % (2 * R) - R
    Pf[np.abs(Pf - R) <= tol] -= 2 * R
    if not len(Pf):
        return Pf
    key = np.round(Pf / tol).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    return Pf[np.sort(first)]


@dataclass
class SamplingOperator:
    """Rows indexed by ``(lam, alpha_j)`` (point outer), columns by modes in grid order.

    ``normalization="coeff"`` measures fields by their coefficient norm;
    ``"model"`` divides every entry by ``2R`` so that the quadratic form is
    relative to the cell L2 norm ``||f|| = 2R ||c||``.
    """

    points: np.ndarray
    I: IndexRect
    grid: SpectralGrid
    normalization: str = "coeff"
    alphas: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.alphas, self.weights = self.I.nodes()

    @property
    def scale(self) -> float:
        return 1.0 / (2 * self.grid.R) if self.normalization == "model" else 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.points) * len(self.weights), self.grid.size)

    def multipliers(self) -> np.ndarray:
        """``sqrt(w_j) m_{alpha_j}(xi_k)``, shape ``(J, size)``."""
        ax = self.grid.axis
        rows = [np.outer(axis_multiplier(a1, ax), axis_multiplier(a2, ax)).ravel() for a1, a2 in self.alphas]
        return np.sqrt(self.weights)[:, None] * np.array(rows) * self.scale

    def _phases(self) -> tuple[np.ndarray, np.ndarray]:
        ax = self.grid.axis
        return np.exp(1j * np.outer(self.points[:, 0], ax)), np.exp(1j * np.outer(self.points[:, 1], ax))

    def matvec(self, c) -> np.ndarray:
        """``A c`` as an array of shape ``(n_points, J)``."""
        C = np.asarray(c, dtype=complex).reshape(self.grid.shape)
        E1, E2 = self._phases()
        M = self.multipliers().reshape((-1,) + self.grid.shape)
        return np.einsum("pk,jkl,pl->pj", E1, M * C, E2, optimize=True)

    def rmatvec(self, y) -> np.ndarray:
        """``A^H y`` for ``y`` of shape ``(n_points, J)`` (or flat in row order)."""
        Y = np.asarray(y, dtype=complex).reshape(len(self.points), len(self.weights))
        E1, E2 = self._phases()
        M = self.multipliers().reshape((-1,) + self.grid.shape)
        out = np.einsum("pk,pj,jkl,pl->kl", E1.conj(), Y, M, E2.conj(), optimize=True)
        return out.ravel()

    def dense(self) -> np.ndarray:
        rows, cols = self.shape
        if rows * cols > DENSE_LIMIT:
            raise FrameError(f"dense operator of shape {self.shape} exceeds {DENSE_LIMIT} entries")
        E1, E2 = self._phases()
        ph = (E1[:, :, None] * E2[:, None, :]).reshape(len(self.points), -1)
        M = self.multipliers()
        return (ph[:, None, :] * M[None, :, :]).reshape(rows, cols)

    def gram(self) -> np.ndarray:
        """``A^H A`` through the multiplier/structure-factor factorization."""
        K, n = self.grid.K, self.grid.n_axis
        ax_rule = self.I.axes()
        ax = self.grid.axis
        s2 = self.scale**2
        if ax_rule is not None:
            (x1, w1), (x2, w2) = ax_rule
            m1 = np.array([axis_multiplier(a, ax) for a in x1])
            m2 = np.array([axis_multiplier(a, ax) for a in x2])
            P = np.kron((m1 * w1[:, None]).T @ m1, (m2 * w2[:, None]).T @ m2) * s2
        else:
            M = self.multipliers()
            P = M.T @ M
        d = self.grid.dxi * np.arange(-2 * K, 2 * K + 1)
        F1 = np.exp(1j * np.outer(self.points[:, 0], d))
        F2 = np.exp(1j * np.outer(self.points[:, 1], d))
        Sf = F1.T @ F2
        k = np.arange(n)
        i1, i2 = np.repeat(k, n), np.tile(k, n)
        Q = Sf[i1[None, :] - i1[:, None] + 2 * K, i2[None, :] - i2[:, None] + 2 * K]
        return P * Q

    def to_json(self) -> dict:
        return {
            "points": len(self.points),
            "rows": self.shape[0],
            "columns": self.shape[1],
            "grid": self.grid.to_json(),
            "I": self.I.to_json(),
            "normalization": self.normalization,
        }


def assemble(
    S: PointSet2 | np.ndarray,
    I: IndexRect,
    grid: SpectralGrid,
    normalization: str = "coeff",
    fold: bool = True,
    max_columns: int = MAX_COLUMNS,
) -> SamplingOperator:
    """Sampling operator of ``S`` on ``grid`` with Gauss-Legendre quadrature over ``I``.

    With ``fold`` (default) points are reduced modulo the period ``2R`` and
    coincident points merged: in the periodic model a point and its period
    translate give identical rows.
    """
    pts = S.points if isinstance(S, PointSet2) else np.asarray(S, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise FrameError("point set is empty")
    if normalization not in ("coeff", "model"):
        raise FrameError(f"unknown normalization {normalization!r}")
    if grid.size > max_columns:
        raise FrameError(
            f"{grid.size} modes exceed the cap of {max_columns} columns; use a smaller sigma or a coarser grid (smaller R)"
        )
    if fold:
        pts = fold_points(pts, grid.R)
    return SamplingOperator(pts, I, grid, normalization)


@dataclass
class FrameReport:
    D1: float
    D2: float
    s_min: float
    s_max: float
    metadata: dict
    v_min: np.ndarray = field(repr=False, default=None)
    v_max: np.ndarray = field(repr=False, default=None)

    @property
    def ratio(self) -> float:
        return self.D1 / self.D2 if self.D2 > 0 else 0.0

    def to_json(self) -> dict:
        return {"D1": self.D1, "D2": self.D2, "ratio": self.ratio, "s_min": self.s_min, "s_max": self.s_max, **self.metadata}


def real_form(G: np.ndarray) -> np.ndarray:
    """Real symmetric matrix unitarily similar to the Gram matrix.

    For real sample points and even multipliers ``J G J = conj(G)`` with ``J``
    the mode flip ``xi -> -xi`` (index reversal).  With ``U = (I + iJ)/sqrt(2)``,
    ``U^H G U = Re G - (Im G) J``.
    """
    return G.real - G.imag[:, ::-1]


def frame_bounds(A: SamplingOperator, vectors: bool = True) -> FrameReport:
    """Extreme eigenvalues of ``A^H A`` from a full real symmetric eigensolve (deterministic)."""
    B = real_form(A.gram())
    if vectors:
        w, V = scipy.linalg.eigh(B)
        # back to the complex mode basis: v = U x
        V = (V[:, [0, -1]] + 1j * V[::-1][:, [0, -1]]) / np.sqrt(2)
    else:
        w, V = scipy.linalg.eigh(B, eigvals_only=True), None
    D1, D2 = max(float(w[0]), 0.0), max(float(w[-1]), 0.0)
    meta = {
        "sigma": A.grid.sigma,
        "R": A.grid.R,
        "dxi": A.grid.dxi,
        "modes": A.grid.size,
        "points": len(A.points),
        "quad_order": A.I.quad_order,
        "normalization": A.normalization,
        "model": "periodized window, cell of side 2R",
    }
    vmin, vmax = (V[:, 0], V[:, 1]) if V is not None else (None, None)
    return FrameReport(D1, D2, float(np.sqrt(D1)), float(np.sqrt(D2)), meta, vmin, vmax)


def null_vector_certificate(A: SamplingOperator, g: BandlimitedField, D2: float | None = None) -> dict:
    """``||A g|| / (s_max ||g||)`` for a candidate kernel vector ``g``."""
    if g.grid != A.grid:
        raise FrameError("field and operator live on different grids")
    c = g.vector
    if D2 is None:
        D2 = frame_bounds(A, vectors=False).D2
    s_max = float(np.sqrt(D2))
    Ag = float(np.linalg.norm(A.matvec(c)))
    nc = float(np.linalg.norm(c))
    return {"norm_Ag": Ag, "s_max": s_max, "norm_g": nc, "ratio": Ag / (s_max * nc) if s_max * nc > 0 else 0.0}


@dataclass
class BesselReport:
    radii: list[float]
    D2: list[float]
    increases: list[float]
    tol: float = 0.05

    @property
    def ok(self) -> bool:
        return not self.increases or abs(self.increases[-1]) <= self.tol

    def to_json(self) -> dict:
        return {"R": self.radii, "D2": self.D2, "relative_change": self.increases, "ok": self.ok}


def bessel_check(
    S: PointSet2,
    I: IndexRect,
    grid: SpectralGrid,
    refinements: int = 3,
    factor: float = 2.0,
    normalization: str = "model",
    tol: float = 0.05,
) -> BesselReport:
    """Upper bound ``D2`` over successive window enlargements of a generator-backed set.

    Level ``i`` regenerates ``S`` on the window ``R_i = S.R * factor^i`` and
    uses the grid with the same ``sigma`` and half-period ``R_i``.  The model
    normalization is the default: in coefficient units ``D2`` scales with the
    cell area.
    """
    src = S.source
    if not isinstance(src, GeneratorConfig) or not src.enlargeable:
        raise FrameError("bessel_check needs a generator-backed point set (cannot enlarge)")
    radii, vals = [], []
    for i in range(refinements):
        R = S.window_radius * factor**i
        Si = gen(src, R)
        g = SpectralGrid(grid.sigma, R)
        vals.append(frame_bounds(assemble(Si, I, g, normalization), vectors=False).D2)
        radii.append(R)
    inc = [(vals[i + 1] - vals[i]) / vals[i] for i in range(len(vals) - 1)]
    return BesselReport(radii, vals, inc, tol)


@dataclass
class Reconstruction:
    field: BandlimitedField
    relative_residual: float
    D1: float
    D2: float
    rank: int

    @property
    def degenerate(self) -> bool:
        return self.D2 == 0 or self.D1 <= 1e-12 * self.D2

    def to_json(self) -> dict:
        return {
            "relative_residual": self.relative_residual,
            "D1": self.D1,
            "D2": self.D2,
            "rank": self.rank,
            "degenerate": self.degenerate,
        }


def reconstruct(samples, A: SamplingOperator, ridge: float = 0.0, rcond: float = 1e-10, real: bool | None = None) -> Reconstruction:
    """Minimise ``||A c - y||^2 + ridge ||c||^2``.

    ``samples`` has shape ``(n_points, J)`` or is flat in row order.  The
    unregularised problem is solved as a minimum-norm least squares problem
    with singular values below ``rcond * s_max`` discarded, so directions in
    the (numerical) kernel of ``A`` are returned as zero.
    """
    y = np.asarray(samples, dtype=complex).ravel()
    if y.size != A.shape[0]:
        raise FrameError(f"expected {A.shape[0]} samples, got {y.size}")
    if ridge < 0:
        raise FrameError("ridge must be nonnegative")
    if A.shape[0] * A.shape[1] <= DENSE_LIMIT:
        M = A.dense()
        U, s, Vh = scipy.linalg.svd(M, full_matrices=False)
        if ridge > 0:
            filt = s / (s**2 + ridge)
        else:
            filt = np.where(s > rcond * s[0], 1 / np.where(s > 0, s, 1), 0.0)
        c = Vh.conj().T @ (filt * (U.conj().T @ y))
        D1 = float(s[-1] ** 2) if A.shape[0] >= A.shape[1] else 0.0
        D2 = float(s[0] ** 2)
        rank = int(np.sum(s > rcond * s[0]))
        fitted = M @ c
    else:
        w, X = scipy.linalg.eigh(real_form(A.gram()))
        V = (X + 1j * X[::-1]) / np.sqrt(2)
        b = A.rmatvec(y)
        top = max(w[-1], 0.0)
        if ridge > 0:
            c = V @ ((V.conj().T @ b) / (w + ridge))
        else:
            keep = w > rcond**2 * top
            c = V[:, keep] @ ((V[:, keep].conj().T @ b) / w[keep])
        D1, D2 = max(float(w[0]), 0.0), float(top)
        rank = int(np.sum(w > rcond**2 * top))
        fitted = A.matvec(c).ravel()
    ny = np.linalg.norm(y)
    rel = float(np.linalg.norm(fitted - y) / ny) if ny > 0 else 0.0
    C = c.reshape(A.grid.shape)
    if real is None:
        real = bool(np.allclose(C, np.conj(C[::-1, ::-1]), rtol=0, atol=1e-9 * max(np.abs(C).max(initial=0), 1e-300)))
    if real:
        C = (C + np.conj(C[::-1, ::-1])) / 2
    return Reconstruction(BandlimitedField(A.grid, C, real), rel, D1, D2, rank)


def sample_max(f: BandlimitedField, points, I: IndexRect) -> float:
    """``max |(f * G_alpha)(lam)|`` over ``lam`` in ``points`` and the quadrature nodes of ``I``."""
    pts = points.points if isinstance(points, PointSet2) else np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(pts):
        return 0.0
    alphas, _ = I.nodes()
    best = 0.0
    for a in alphas:
        v = np.abs(eval_field(multiplied(f, tuple(a)), pts))
        best = max(best, float(np.max(v)))
    return best


def bernstein_deficiency(f: BandlimitedField, S, I: IndexRect, oversample: int = 16) -> float:
    """``sup |f| / max_(lam, alpha) |(f * G_alpha)(lam)|``; ``inf`` when every sample is below 1e-300."""
    if not np.any(np.asarray(f.coeffs)):
        raise FrameError("bernstein_deficiency needs a nonzero field")
    m = sample_max(f, S, I)
    if m < 1e-300:
        return float("inf")
    return sup_norm_estimate(f, oversample) / m


def heat_samples(f: BandlimitedField, points, I: IndexRect, sigma_diff: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Samples of the heat flow ``u(lam, t_j)`` at times matched to a radial ``I``.

    For a node ``beta_j`` of ``I`` the time is ``t_j = 1 / (4 beta_j sigma_diff)``,
    and ``sqrt(w_j) 4 pi t_j sigma_diff u(lam, t_j)`` equals the row ``(lam, j)``
    of the sampling operator applied to ``f`` (coefficient normalization).
    Returns ``(times, rows)`` with rows of shape ``(n_points, J)``.
    """
    if not I.radial:
        raise FrameError("heat sampling uses a radial index interval")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    alphas, w = I.nodes()
    times = 1.0 / (4.0 * alphas[:, 0] * sigma_diff)
    out = np.empty((len(pts), len(times)), dtype=complex)
    for j, t in enumerate(times):
        u = eval_field(heat_state(f, t, sigma_diff), pts)
        out[:, j] = np.sqrt(w[j]) * 4 * np.pi * t * sigma_diff * u
    return times, out

