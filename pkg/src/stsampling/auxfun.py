"""Auxiliary functions with small spectrum and large L2 norm.

``Psi_eps`` is a nonnegative radial step function on the dyadic annuli
``2^{-n-1} <= |t| < 2^{-n}``, ``n = m..2m`` with ``m = floor(log2(1/eps))``,
taking the value ``a_n = 2^{2n}/n`` on annulus ``n``.  Its Fourier transform,
normalized by ``c = int Psi``, is ``Phi_eps``: ``Phi(0) = 1``, spectrum in the
ball of radius ``eps``, ``||Phi||_2`` growing and ``||grad Phi||_2`` decaying as
``eps -> 0``.  Every norm is a finite closed-form sum over annuli.

The separable sinc ``sin(eps x)/(eps x)`` is the comparison case: in two
dimensions its gradient norm is independent of ``eps``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j1

ANNULUS_AREA = 3 * np.pi / 4  # area of annulus n is (3 pi / 4) 2^{-2n}


class AuxError(ValueError):
    pass


@dataclass(frozen=True)
class LayeredRadialProfile:
    epsilon: float

    def __post_init__(self):
        if not (0 < self.epsilon < 0.25):
            raise AuxError(f"epsilon must lie in (0, 1/4), got {self.epsilon!r}")

    @property
    def m(self) -> int:
        return int(np.floor(np.log2(1 / self.epsilon) + 1e-12))

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.m, 2 * self.m + 1)

    @property
    def levels(self) -> np.ndarray:
        n = self.n
        return 2.0 ** (2 * n) / n

    @property
    def outer(self) -> np.ndarray:
        return 2.0 ** (-self.n.astype(float))

    @property
    def inner(self) -> np.ndarray:
        return self.outer / 2

    @property
    def support(self) -> tuple[float, float]:
        return float(2.0 ** (-2 * self.m - 1)), float(2.0 ** (-self.m))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1]) if x.ndim and x.shape[-1] == 2 else np.abs(x)
        out = np.zeros(np.shape(r))
        for a, lo, hi in zip(self.levels, self.inner, self.outer):
            out = np.where((r >= lo) & (r < hi), a, out)
        return out

    def integral(self) -> float:
        return float(ANNULUS_AREA * np.sum(1.0 / self.n))

    def l2(self) -> float:
        return float(np.sqrt(ANNULUS_AREA * np.sum(2.0 ** (2 * self.n) / self.n**2)))

    def weighted_l2(self) -> float:
        """``|| |t| Psi ||_2``; annulus n contributes ``(15 pi / 32) / n^2``."""
        return float(np.sqrt(15 * np.pi / 32 * np.sum(1.0 / self.n**2)))


def build_psi(epsilon: float) -> LayeredRadialProfile:
    return LayeredRadialProfile(epsilon)


def verify_psi(epsilon: float) -> dict:
    """Properties P1 (support, sign), P2 (integral bracket), P3 (L2 growth), P4 (weighted decay)."""
    P = build_psi(epsilon)
    lo, hi = P.support
    integ, l2, wl2 = P.integral(), P.l2(), P.weighted_l2()
    p1 = hi <= epsilon and bool(np.all(P.levels > 0))
    p2 = 1.0 <= integ <= 2.5
    p3 = epsilon > 2.0**-6 or l2 * epsilon**0.75 >= 1.0
    p4 = wl2 <= 3 / np.sqrt(np.log2(1 / epsilon))
    return {
        "epsilon": epsilon,
        "m": P.m,
        "support": [lo, hi],
        "integral": integ,
        "l2": l2,
        "weighted_l2": wl2,
        "P1": bool(p1),
        "P2": bool(p2),
        "P3": bool(p3),
        "P4": bool(p4),
        "ok": bool(p1 and p2 and p3 and p4),
    }


@dataclass(frozen=True)
class LayeredPhi:
    """``Phi(x) = (1/c) int exp(-i x.t) Psi(t) dt``, real and radial."""

    profile: LayeredRadialProfile

    @property
    def c(self) -> float:
        return self.profile.integral()

    def radial(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.zeros(rho.shape)
        small = rho < 1e-12
        rs = np.where(small, 1.0, rho)
        for a, lo, hi in zip(self.profile.levels, self.profile.inner, self.profile.outer):
            # 2 pi int_lo^hi J0(rho r) r dr = 2 pi [r J1(rho r) / rho]_lo^hi
            ring = 2 * np.pi * (hi * j1(rs * hi) - lo * j1(rs * lo)) / rs
            out += a * np.where(small, np.pi * (hi**2 - lo**2), ring)
        return out / self.c

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.radial(np.hypot(x[..., 0], x[..., 1]))

    def l2(self) -> float:
        return 2 * np.pi * self.profile.l2() / self.c

    def grad_l2(self) -> float:
        return 2 * np.pi * self.profile.weighted_l2() / self.c

    def _boundary_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Radii ``r_k`` and amplitudes ``b_k`` of ``Phi(rho) ~ rho^{-3/2} sum_k b_k cos(r_k rho - 3 pi/4)``."""
        radii = np.concatenate([self.profile.outer, self.profile.inner])
        amps = np.concatenate([self.profile.levels * self.profile.outer, -self.profile.levels * self.profile.inner])
        r, inv = np.unique(np.round(radii, 300), return_inverse=True)
        d = np.zeros(len(r))
        np.add.at(d, inv, amps)
        return r, 2 * np.pi / self.c * d * np.sqrt(2 / (np.pi * r))

    def tail_estimate(self, P: float, grad: bool = False) -> float:
        """``int_{|x| > P} |Phi|^2`` (or ``|grad Phi|^2``) from the large-argument Bessel asymptotics.

        Cross terms between different boundary radii oscillate and are
        dropped; the estimate is accurate once ``P * min(r_k) >> 1``.
        """
        r, b = self._boundary_terms()
        if grad:
            b = b * r
        return float(np.pi * np.sum(b**2) / P)

    def spatial_norms(self, radius: float, panels_per_period: int = 1, order: int = 32) -> dict:
        """``||Phi||_2^2`` and ``||grad Phi||_2^2`` by polar quadrature over ``|x| <= radius`` plus the tail."""
        period = 2 * np.pi / self.profile.epsilon
        n = max(1, int(np.ceil(radius / period * panels_per_period)))
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, radius, n + 1)
        h = np.diff(edges) / 2
        rho = ((edges[:-1] + edges[1:]) / 2)[:, None] + h[:, None] * x[None, :]
        W = h[:, None] * w[None, :] * 2 * np.pi * rho
        val = float(np.sum(W * self.radial(rho) ** 2))
        grad = float(np.sum(W * self.radial_derivative(rho) ** 2))
        return {
            "l2_sq": val + self.tail_estimate(radius),
            "grad_l2_sq": grad + self.tail_estimate(radius, grad=True),
            "l2_sq_inside": val,
            "grad_l2_sq_inside": grad,
        }

    def radial_derivative(self, rho, h: float = 1e-4) -> np.ndarray:
        """Central finite difference of the radial profile."""
        rho = np.asarray(rho, dtype=float)
        return (self.radial(rho + h) - self.radial(np.abs(rho - h))) / (2 * h)

    spectrum_radius = property(lambda self: self.profile.epsilon)


def build_phi(epsilon: float) -> LayeredPhi:
    return LayeredPhi(build_psi(epsilon))


def _slope(eps: np.ndarray, vals: np.ndarray) -> float:
    return float(np.polyfit(np.log(eps), np.log(vals), 1)[0])


def verify_condition_B(eps_list) -> dict:
    """Closed-form ``||Phi||_2`` and ``||grad Phi||_2`` along a decreasing ``eps_list``."""
    eps = np.asarray(list(eps_list), dtype=float)
    if len(eps) < 4:
        raise AuxError("need at least 4 epsilon values")
    if eps.max() / eps.min() < 100:
        raise AuxError("epsilon values must span at least two decades")
    if np.any(np.diff(eps) >= 0):
        raise AuxError("epsilon values must be strictly decreasing")
    rows = []
    for e in eps:
        P = build_psi(e)
        phi = LayeredPhi(P)
        rows.append(
            {
                "epsilon": float(e),
                "integral": P.integral(),
                "psi_l2": P.l2(),
                "psi_weighted_l2": P.weighted_l2(),
                "phi_l2": phi.l2(),
                "phi_grad_l2": phi.grad_l2(),
            }
        )
    n = np.array([r["phi_l2"] for r in rows])
    g = np.array([r["phi_grad_l2"] for r in rows])
    return {
        "rows": rows,
        "phi_l2_increasing": bool(np.all(np.diff(n) > 0)),
        "grad_l2_decreasing": bool(np.all(np.diff(g) < 0)),
        "phi_l2_slope": _slope(eps, n),
        "grad_l2_times_sqrtlog": [float(v * np.sqrt(np.log(1 / e))) for v, e in zip(g, eps)],
    }


@dataclass(frozen=True)
class SincFunction:
    """``prod_i sin(eps x_i)/(eps x_i)`` in ``dim`` variables; box spectrum of height ``(pi/eps)^dim``."""

    epsilon: float
    dim: int = 2

    def __post_init__(self):
        if not self.epsilon > 0:
            raise AuxError("epsilon must be positive")
        if self.dim not in (1, 2):
            raise AuxError("dim must be 1 or 2")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return np.sinc(self.epsilon * x / np.pi)
        return np.sinc(self.epsilon * x[..., 0] / np.pi) * np.sinc(self.epsilon * x[..., 1] / np.pi)

    def l2(self) -> float:
        # one factor: ||.||^2 = pi / eps
        return float(np.sqrt(np.pi / self.epsilon) ** self.dim)

    def grad_l2(self) -> float:
        # one factor: ||.'||^2 = pi eps / 3
        d1 = np.pi * self.epsilon / 3
        if self.dim == 1:
            return float(np.sqrt(d1))
        return float(np.sqrt(2 * d1 * np.pi / self.epsilon))


def sinc_family(epsilon: float, dim: int = 2) -> tuple[SincFunction, dict]:
    f = SincFunction(epsilon, dim)
    return f, {"epsilon": epsilon, "dim": dim, "l2": f.l2(), "grad_l2": f.grad_l2()}
