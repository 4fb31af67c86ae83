"""Bandlimited fields on a periodized window and Gaussian convolution.

A field is a trigonometric sum ``f(x) = sum_k c_k exp(i xi_k . x)`` over the
modes ``xi_k = dxi * (k1, k2)`` of a :class:`SpectralGrid` (``dxi = pi / R``,
``max |xi_k| <= sigma``), so it is ``2R``-periodic in each variable.  Each mode
is an eigenfunction of convolution with a Gaussian, which makes sampling,
symmetrization and the heat flow exact finite linear algebra.

Fourier transforms use the unnormalized convention
``F(xi) = int f(x) exp(-i xi . x) dx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralGrid:
    """Modes ``dxi * (k1, k2)`` with ``|k_i| <= K`` and ``dxi = pi / R``.

    Coefficient arrays have shape ``(2K+1, 2K+1)`` with index ``[k1 + K, k2 + K]``;
    flattened mode order is row-major (``k1`` outer).
    """

    sigma: float
    R: float

    def __post_init__(self):
        if not self.sigma > 0 or not self.R > 0:
            raise SignalError("sigma and R must be positive")

    @property
    def dxi(self) -> float:
        return np.pi / self.R

    @property
    def K(self) -> int:
        return int(np.floor(self.sigma / self.dxi + 1e-9))

    @property
    def n_axis(self) -> int:
        return 2 * self.K + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_axis, self.n_axis)

    @property
    def size(self) -> int:
        return self.n_axis**2

    @property
    def axis(self) -> np.ndarray:
        """Frequencies along one axis."""
        return self.dxi * np.arange(-self.K, self.K + 1)

    @property
    def modes(self) -> np.ndarray:
        """All modes, shape ``(size, 2)``, row-major."""
        a = self.axis
        g1, g2 = np.meshgrid(a, a, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel()], axis=-1)

    def index(self, xi, tol: float = 1e-9) -> tuple[int, int]:
        """Array index of a grid-resident frequency; raises naming the nearest grid frequency."""
        xi = np.asarray(xi, dtype=float)
        k = np.rint(xi / self.dxi)
        if np.any(np.abs(k) > self.K) or np.any(np.abs(xi - k * self.dxi) > tol):
            near = np.clip(k, -self.K, self.K) * self.dxi
            raise SignalError(f"frequency {tuple(xi)} is not on the grid; nearest grid frequency {tuple(near)}")
        return int(k[0]) + self.K, int(k[1]) + self.K

    def to_json(self) -> dict:
        return {"sigma": self.sigma, "R": self.R, "dxi": self.dxi, "K": self.K}


@dataclass(frozen=True)
class BandlimitedField:
    grid: SpectralGrid
    coeffs: np.ndarray = field(repr=False)
    real_flag: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise SignalError(f"coeffs shape {c.shape} does not match grid {self.grid.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.real_flag:
            scale = max(float(np.abs(c).max(initial=0.0)), 1e-300)
            if np.abs(c - np.conj(c[::-1, ::-1])).max(initial=0.0) > 1e-12 * scale:
                raise SignalError("real_flag requires coeff(-xi) = conj(coeff(xi))")

    @classmethod
    def zeros(cls, grid: SpectralGrid, real: bool = True) -> "BandlimitedField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), real)

    @classmethod
    def from_modes(cls, grid: SpectralGrid, terms, real: bool | None = None) -> "BandlimitedField":
        """Build from ``[(xi, coeff), ...]``; repeated frequencies add up."""
        c = np.zeros(grid.shape, dtype=complex)
        for xi, v in terms:
            c[grid.index(xi)] += v
        if real is None:
            real = bool(np.allclose(c, np.conj(c[::-1, ::-1]), rtol=0, atol=1e-14))
        return cls(grid, c, real)

    @classmethod
    def random(cls, grid: SpectralGrid, rng: np.random.Generator, real: bool = True) -> "BandlimitedField":
        c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        if real:
            c = (c + np.conj(c[::-1, ::-1])) / 2
        return cls(grid, c, real)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.coeffs).ravel()

    def with_coeffs(self, c, real_flag: bool | None = None) -> "BandlimitedField":
        return BandlimitedField(self.grid, np.reshape(c, self.grid.shape), self.real_flag if real_flag is None else real_flag)

    def __call__(self, x):
        return eval_field(self, x)

    def to_json(self) -> dict:
        v = self.vector
        return {
            "sigma": self.grid.sigma,
            "R": self.grid.R,
            "real": self.real_flag,
            "coeffs": [[float(z.real), float(z.imag)] for z in v],
        }

    @classmethod
    def from_json(cls, d: dict) -> "BandlimitedField":
        grid = SpectralGrid(float(d["sigma"]), float(d["R"]))
        c = np.array([complex(a, b) for a, b in d["coeffs"]])
        return cls(grid, c.reshape(grid.shape), bool(d.get("real", False)))


@dataclass(frozen=True)
class GaussianKernel:
    """``G(x) = exp(-a1 x1^2 - a2 x2^2)``; a scalar ``alpha`` is the radial kernel."""

    alpha: tuple[float, float] | float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if a.size not in (1, 2) or np.any(~(a > 0)):
            raise SignalError(f"alpha must be one or two positive reals, got {self.alpha!r}")

    @property
    def pair(self) -> tuple[float, float]:
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        return (float(a[0]), float(a[-1]))

    def __call__(self, x):
        a1, a2 = self.pair
        x = np.asarray(x, dtype=float)
        return np.exp(-a1 * x[..., 0] ** 2 - a2 * x[..., 1] ** 2)


def _as_pair(alpha) -> tuple[float, float]:
    return alpha.pair if isinstance(alpha, GaussianKernel) else GaussianKernel(alpha).pair


def kernel_transform(K, xi) -> np.ndarray | float:
    """Fourier transform of the Gaussian, ``pi/sqrt(a1 a2) exp(-xi1^2/4a1 - xi2^2/4a2)``."""
    a1, a2 = _as_pair(K)
    xi = np.asarray(xi, dtype=float)
    out = np.pi / np.sqrt(a1 * a2) * np.exp(-xi[..., 0] ** 2 / (4 * a1) - xi[..., 1] ** 2 / (4 * a2))
    return float(out) if np.ndim(out) == 0 else out


def axis_multiplier(a: float, freqs: np.ndarray) -> np.ndarray:
    """One-axis factor ``sqrt(pi/a) exp(-freqs^2/4a)`` of the kernel transform."""
    return np.sqrt(np.pi / a) * np.exp(-np.asarray(freqs) ** 2 / (4 * a))


def _eval_coeffs(grid: SpectralGrid, C: np.ndarray, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 2)
    ax = grid.axis
    E1 = np.exp(1j * np.outer(pts[:, 0], ax))
    E2 = np.exp(1j * np.outer(pts[:, 1], ax))
    out = np.einsum("pk,kl,pl->p", E1, C, E2)
    return out.reshape(x.shape[:-1])


def _finish(f: BandlimitedField, v: np.ndarray):
    if f.real_flag:
        v = v.real
    return v.item() if v.ndim == 0 else v


def eval_field(f: BandlimitedField, x):
    """``sum_k c_k exp(i xi_k . x)``; real output when ``f.real_flag``."""
    return _finish(f, _eval_coeffs(f.grid, np.asarray(f.coeffs), x))


def multiplied(f: BandlimitedField, K) -> BandlimitedField:
    """The field ``f * G`` (convolution), i.e. coefficients times the kernel transform."""
    a1, a2 = _as_pair(K)
    ax = f.grid.axis
    m = np.outer(axis_multiplier(a1, ax), axis_multiplier(a2, ax))
    return f.with_coeffs(np.asarray(f.coeffs) * m)


def convolve_eval(f: BandlimitedField, K, lam):
    """``(f * G)(lam)`` computed through the Fourier multiplier."""
    return eval_field(multiplied(f, K), lam)


def l2_norm(f: BandlimitedField) -> float:
    """L2 norm over one period cell, ``2R * sqrt(sum |c_k|^2)``."""
    return float(2 * f.grid.R * np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def sup_norm_estimate(f: BandlimitedField, oversample: int = 16) -> float:
    """Max of ``|f|`` on a uniform grid of ``oversample * (2K+1)`` points per axis over the cell.

    A lower bound for the cell supremum.  Grids for ``oversample`` and any
    multiple of it are nested, so the estimate does not decrease along such
    sequences.
    """
    if oversample < 4:
        raise SignalError("oversample must be at least 4")
    n = int(oversample) * f.grid.n_axis
    R = f.grid.R
    x = -R + 2 * R * np.arange(n) / n
    E = np.exp(1j * np.outer(x, f.grid.axis))
    vals = E @ np.asarray(f.coeffs) @ E.T
    if f.real_flag:
        vals = vals.real
    return float(np.abs(vals).max())


def _check_symmetric(grid: SpectralGrid) -> None:
    # the mode set of a SpectralGrid is a centred square, closed under both reflections
    if grid.n_axis % 2 != 1:
        raise SignalError("grid is not symmetric under xi -> -xi and xi -> (-xi1, xi2)")


def symmetrize(f: BandlimitedField) -> BandlimitedField:
    """``Sf(x) = f(x) + f(x~) + f(-x~) + f(-x)`` with ``x~ = (-x1, x2)``, by orbit sums of coefficients."""
    _check_symmetric(f.grid)
    C = np.asarray(f.coeffs)
    return f.with_coeffs(C + C[::-1, :] + C[:, ::-1] + C[::-1, ::-1])


def reflect(x) -> np.ndarray:
    """``x~ = (-x1, x2)``."""
    x = np.array(x, dtype=float)
    x[..., 0] = -x[..., 0]
    return x


def shifted(f: BandlimitedField, lam) -> BandlimitedField:
    """The translate ``f_lam(x) = f(x + lam)``."""
    lam = np.asarray(lam, dtype=float)
    ax = f.grid.axis
    ph = np.outer(np.exp(1j * ax * lam[0]), np.exp(1j * ax * lam[1]))
    return f.with_coeffs(np.asarray(f.coeffs) * ph)


def lemma2_identity_check(f: BandlimitedField, lam, x) -> float:
    """Residual of ``S f_lam(x) = 2 Re sum_k cos(xi_k . x)(c(xi_k) e^{i xi_k.lam} + c(xi~_k) e^{i xi_k.lam~})``.

    The left side is evaluated directly as ``f(x+lam) + f(x~+lam) + f(-x~+lam) + f(-x+lam)``;
    the right side is the spectral formula with ``lam~ = (-lam1, lam2)``.
    """
    if not f.real_flag:
        raise SignalError("lemma2_identity_check needs a real field")
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    xt = reflect(x)
    lhs = sum(eval_field(f, p + lam) for p in (x, xt, -xt, -x))
    C = np.asarray(f.coeffs).ravel()
    Ct = np.asarray(f.coeffs)[::-1, :].ravel()  # c(xi~_k) in mode order
    xi = f.grid.modes
    rhs = 2 * np.sum(np.cos(xi @ x) * (C * np.exp(1j * xi @ lam) + Ct * np.exp(1j * xi @ reflect(lam))).real)
    return float(abs(lhs - rhs))


def hermite_orthogonality_check(g: BandlimitedField, I, degrees: int = 8, nodes: int = 64, tol: float = 1e-8) -> dict:
    """Moments of ``h = Sg exp(-|x|^2/4)`` against even monomials in ``L2(exp(-|x|^2/2))``.

    The precondition ``(g * G_alpha)(0) = 0`` is checked at every quadrature
    node of ``I`` (any object with a ``nodes()`` method returning
    ``(alphas, weights)``), relative to the coefficient scale of ``g``.
    Returns the products keyed by ``(2a, 2b)``, the weighted norm of ``h`` and
    the largest ratio.
    """
    if not g.real_flag:
        raise SignalError("hermite_orthogonality_check needs a real field")
    scale = max(float(np.abs(g.coeffs).sum()), 1e-300)
    alphas, _ = I.nodes()
    for a in alphas:
        v = abs(convolve_eval(g, tuple(a), (0.0, 0.0)))
        if v > tol * scale * kernel_transform(tuple(a), (0.0, 0.0)):
            raise SignalError(f"precondition fails: (g * G_alpha)(0) = {v:.3e} at alpha = {tuple(float(t) for t in a)}")
    y, w = np.polynomial.hermite.hermgauss(nodes)
    Sg = symmetrize(g)
    # <h, p> = int Sg p exp(-3|x|^2/4) dx; substitute x = 2y/sqrt(3)
    s = 2 / np.sqrt(3)
    X1, X2 = np.meshgrid(s * y, s * y, indexing="ij")
    W = np.outer(w, w) * s**2
    vals = eval_field(Sg, np.stack([X1, X2], axis=-1))
    # ||h||^2 = int Sg^2 exp(-|x|^2) dx
    Y1, Y2 = np.meshgrid(y, y, indexing="ij")
    norm = float(np.sqrt(np.sum(np.outer(w, w) * eval_field(Sg, np.stack([Y1, Y2], axis=-1)) ** 2)))
    products = {}
    for a in range(0, degrees // 2 + 1):
        for b in range(0, degrees // 2 + 1 - a):
            products[(2 * a, 2 * b)] = float(np.sum(W * vals * X1 ** (2 * a) * X2 ** (2 * b)))
    worst = max(abs(v) for v in products.values())
    return {"products": products, "norm": norm, "max_abs": worst, "max_ratio": worst / norm if norm > 0 else 0.0}


def heat_state(f: BandlimitedField, alpha: float, sigma_diff: float = 1.0) -> BandlimitedField:
    """Heat flow ``u(., alpha)``: multiplier ``exp(-alpha sigma_diff |xi|^2)``.

    Sampling ``u`` at ``(lam, alpha)`` equals ``(f * G_beta)(lam) / (4 pi alpha sigma_diff)``
    with ``beta = 1 / (4 alpha sigma_diff)``.
    """
    if not alpha > 0:
        raise SignalError("alpha must be positive")
    if sigma_diff == 0:
        raise SignalError("sigma_diff must be nonzero")
    ax = f.grid.axis
    m = np.exp(-alpha * sigma_diff * ax**2)
    return f.with_coeffs(np.asarray(f.coeffs) * np.outer(m, m))
