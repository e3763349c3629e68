"""Odd theta function, Kronecker function and the Weierstrass family.

Convention::

    theta(z) = -sum_{k in Z+1/2} exp(pi i tau k^2 + 2 pi i k (z + 1/2))

which is odd, has theta'(0) > 0 for purely imaginary ``tau`` and satisfies
``theta(z+1) = -theta(z)``, ``theta(z+tau) = -exp(-pi i tau - 2 pi i z) theta(z)``.

Every function accepts scalars or numpy arrays and broadcasts. All derived
functions are analytic compositions of the term-wise differentiated series;
no finite differences are used here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, PoleError
from .kernels import theta_series
from .report import CheckReport, Sampler, rel_residual

ELLIPTIC = "elliptic"
TRIGONOMETRIC = "trigonometric"
PI = np.pi


@dataclass(frozen=True)
class EllipticContext:
    tau: complex = 1j
    backend: str = ELLIPTIC
    series_tol: float = 1e-16
    max_terms: int = 200
    eps_pole: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if self.backend not in (ELLIPTIC, TRIGONOMETRIC):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == ELLIPTIC and self.tau.imag <= 0:
            raise ConfigError(f"Im(tau) must be positive, got tau={self.tau}")
        if not 0.0 < self.series_tol <= 1e-4:
            raise ConfigError("series_tol must lie in (0, 1e-4]")
        if self.max_terms < 8:
            raise ConfigError("max_terms must be at least 8")

    @property
    def is_trig(self) -> bool:
        return self.backend == TRIGONOMETRIC

    @cached_property
    def _theta_at_zero(self) -> np.ndarray:
        return _theta_all(self, np.zeros(1, dtype=complex))[:, 0]

    @cached_property
    def theta_ratio(self) -> complex:
        """theta'''(0) / theta'(0)."""
        if self.is_trig:
            return -(PI ** 2)
        t = self._theta_at_zero
        return complex(t[3] / t[1])

    @cached_property
    def theta1_zero(self) -> complex:
        """theta'(0)."""
        if self.is_trig:
            return 1.0 + 0j
        return complex(self._theta_at_zero[1])

    @property
    def wp_shift(self) -> complex:
        """The constant ``theta'''(0) / (3 theta'(0))`` with f0 + wp = shift."""
        return self.theta_ratio / 3.0

    def describe(self) -> dict:
        return {
            "tau": [self.tau.real, self.tau.imag],
            "backend": self.backend,
            "series_tol": self.series_tol,
        }


def trigonometric() -> EllipticContext:
    return EllipticContext(tau=1j, backend=TRIGONOMETRIC)


def _ret(x, scalar):
    return complex(x) if scalar else x


def lattice_distance(ctx: EllipticContext, z) -> np.ndarray:
    """Distance from ``z`` to the nearest pole of the backend's functions."""
    z = np.asarray(z, dtype=complex)
    if ctx.is_trig:
        return np.abs(z - np.round(z.real))
    tau = ctx.tau
    n0 = np.floor(z.imag / tau.imag)
    best = np.full(z.shape, np.inf)
    for dn in (-1.0, 0.0, 1.0, 2.0):
        w = z - (n0 + dn) * tau
        m0 = np.round(w.real)
        for dm in (-1.0, 0.0, 1.0):
            best = np.minimum(best, np.abs(w - (m0 + dm)))
    return best


def check_poles(ctx: EllipticContext, what: str, *args) -> None:
    for z in args:
        d = lattice_distance(ctx, z)
        if np.any(d < ctx.eps_pole):
            bad = np.asarray(z).reshape(-1)[np.argmin(np.asarray(d).reshape(-1))]
            raise PoleError(f"{what}: argument {complex(bad):.6g} within {ctx.eps_pole:g} of a lattice point")


def _theta_all(ctx: EllipticContext, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if ctx.is_trig:
        s = np.sin(PI * z)
        c = np.cos(PI * z)
        return np.stack([s / PI, c, -PI * s, -(PI ** 2) * c])
    vals, _ = theta_series(z, ctx.tau, ctx.series_tol, 8, ctx.max_terms)
    return vals


def theta(ctx: EllipticContext, z, order: int = 0):
    """``d^order theta / dz^order`` at ``z``; order in 0..3."""
    if order not in (0, 1, 2, 3):
        raise ValueError(f"theta derivative order must be 0..3, got {order!r}")
    scalar = np.ndim(z) == 0
    return _ret(_theta_all(ctx, z)[order], scalar)


def e1(ctx: EllipticContext, z):
    """E1(z) = theta'(z)/theta(z)."""
    scalar = np.ndim(z) == 0
    check_poles(ctx, "e1", z)
    z = np.asarray(z, dtype=complex)
    if ctx.is_trig:
        return _ret(PI / np.tan(PI * z), scalar)
    t = _theta_all(ctx, z)
    return _ret(t[1] / t[0], scalar)


def f0(ctx: EllipticContext, q):
    """f(0, q) = d^2/dq^2 log theta(q)."""
    scalar = np.ndim(q) == 0
    check_poles(ctx, "f0", q)
    q = np.asarray(q, dtype=complex)
    if ctx.is_trig:
        return _ret(-(PI ** 2) / np.sin(PI * q) ** 2, scalar)
    t = _theta_all(ctx, q)
    l1 = t[1] / t[0]
    return _ret(t[2] / t[0] - l1 * l1, scalar)


def f0_prime(ctx: EllipticContext, q):
    """d/dq f(0, q) = d^3/dq^3 log theta(q) = -wp'(q)."""
    scalar = np.ndim(q) == 0
    check_poles(ctx, "f0_prime", q)
    q = np.asarray(q, dtype=complex)
    if ctx.is_trig:
        s = np.sin(PI * q)
        return _ret(2.0 * PI ** 3 * np.cos(PI * q) / s ** 3, scalar)
    t = _theta_all(ctx, q)
    l1 = t[1] / t[0]
    return _ret(t[3] / t[0] - 3.0 * l1 * t[2] / t[0] + 2.0 * l1 ** 3, scalar)


def weierstrass(ctx: EllipticContext, z):
    """(wp(z), wp'(z)) with wp = -f0 + theta'''(0)/(3 theta'(0))."""
    return wp(ctx, z), wp_prime(ctx, z)


def wp(ctx: EllipticContext, z):
    scalar = np.ndim(z) == 0
    return _ret(ctx.wp_shift - np.asarray(f0(ctx, z)), scalar)


def wp_prime(ctx: EllipticContext, z):
    scalar = np.ndim(z) == 0
    return _ret(-np.asarray(f0_prime(ctx, z)), scalar)


def kronecker_phi(ctx: EllipticContext, z, q):
    """phi(z, q) = theta'(0) theta(z+q) / (theta(z) theta(q))."""
    scalar = np.ndim(z) == 0 and np.ndim(q) == 0
    check_poles(ctx, "kronecker_phi", z, q)
    z, q = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(q, dtype=complex))
    if ctx.is_trig:
        return _ret(PI * (1.0 / np.tan(PI * z) + 1.0 / np.tan(PI * q)), scalar)
    t = _theta_all(ctx, np.stack([z, q, z + q]))
    return _ret(ctx.theta1_zero * t[0, 2] / (t[0, 0] * t[0, 1]), scalar)


def phi_dq(ctx: EllipticContext, z, q):
    """f(z, q) = d/dq phi(z, q) = phi(z, q) (E1(z+q) - E1(q))."""
    scalar = np.ndim(z) == 0 and np.ndim(q) == 0
    check_poles(ctx, "phi_dq", z, q)
    z, q = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(q, dtype=complex))
    if ctx.is_trig:
        return _ret(-(PI ** 2) / np.sin(PI * q) ** 2 + 0.0 * z, scalar)
    t = _theta_all(ctx, np.stack([z, q, z + q]))
    phi = ctx.theta1_zero * t[0, 2] / (t[0, 0] * t[0, 1])
    return _ret(phi * (t[1, 2] / t[0, 2] - t[1, 1] / t[0, 1]), scalar)


def phi_and_dq(ctx: EllipticContext, z, q):
    """Both phi(z, q) and f(z, q) from a single theta evaluation."""
    scalar = np.ndim(z) == 0 and np.ndim(q) == 0
    check_poles(ctx, "phi_and_dq", z, q)
    z, q = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(q, dtype=complex))
    if ctx.is_trig:
        phi = PI * (1.0 / np.tan(PI * z) + 1.0 / np.tan(PI * q))
        f = -(PI ** 2) / np.sin(PI * q) ** 2 + 0.0 * z
        return _ret(phi, scalar), _ret(f, scalar)
    t = _theta_all(ctx, np.stack([z, q, z + q]))
    phi = ctx.theta1_zero * t[0, 2] / (t[0, 0] * t[0, 1])
    f = phi * (t[1, 2] / t[0, 2] - t[1, 1] / t[0, 1])
    return _ret(phi, scalar), _ret(f, scalar)


def wp_lattice(ctx: EllipticContext, z, rows: int = 12):
    """wp(z) by summing pi^2/sin^2 over lattice rows.

    This route never touches theta, so the suites use it to check the
    f0/wp relation non-trivially::

        wp(z) = sum_n pi^2/sin^2(pi(z + n tau)) - pi^2/3 - sum_{n != 0} pi^2/sin^2(pi n tau)
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    if ctx.is_trig:
        return _ret(PI ** 2 / np.sin(PI * z) ** 2 - PI ** 2 / 3.0, scalar)
    total = PI ** 2 / np.sin(PI * z) ** 2 - PI ** 2 / 3.0
    for n in range(1, rows + 1):
        for s in (n, -n):
            total = total + PI ** 2 / np.sin(PI * (z + s * ctx.tau)) ** 2 - PI ** 2 / np.sin(PI * s * ctx.tau) ** 2
    return _ret(total, scalar)


# ---------------------------------------------------------------------------
# identity suite
# ---------------------------------------------------------------------------


def _im_scale(ctx: EllipticContext) -> float:
    return ctx.tau.imag if not ctx.is_trig else 1.0


def scalar_identity_suite(ctx: EllipticContext, sampler: Sampler, tolerance: float = 1e-10,
                          perturb: float = 0.0) -> CheckReport:
    """Max relative residuals of the Kronecker-function identities.

    ``perturb`` replaces phi by phi + perturb in every identity (negative
    control); the Fay residual then leaves the pass regime.
    """
    if sampler.count < 1:
        raise ValueError("empty sampler")
    t0 = time.perf_counter()
    sep = sampler.min_sep

    def ok(pts):
        z, w, qa, qb, qc = pts
        args = np.array([z, w, z - w, qa - qb, qb - qc, qa - qc])
        return bool(np.all(lattice_distance(ctx, args) > sep))

    def phi(z, q):
        return kronecker_phi(ctx, z, q) + perturb

    names = ["fay", "phi_phi_wp", "phi_phi_f0", "exchange_wp_prime", "exchange_three_site", "f0_wp_relation"]
    worst = dict.fromkeys(names, 0.0)
    shift = ctx.wp_shift
    for z, w, qa, qb, qc in sampler.points(5, _im_scale(ctx), ok):
        qab, qbc, qac = qa - qb, qb - qc, qa - qc
        res = {}
        lhs = phi(z, qab) * phi(w, qbc)
        rhs = phi(w, qac) * phi(z - w, qab) + phi(w - z, qbc) * phi(z, qac)
        res["fay"] = rel_residual(lhs, rhs)

        pp = phi(z, qab) * phi(z, -qab)
        res["phi_phi_wp"] = rel_residual(pp, wp(ctx, z) - wp(ctx, qab))
        res["phi_phi_f0"] = rel_residual(pp, f0(ctx, qab) - f0(ctx, z))

        fab = phi_dq(ctx, z, qab)
        fba = phi_dq(ctx, z, -qab)
        lhs = phi(z, qab) * fba - fab * phi(z, -qab)
        res["exchange_wp_prime"] = rel_residual(lhs, wp_prime(ctx, qab))

        lhs = phi(z, qab) * phi_dq(ctx, z, qbc) - fab * phi(z, qbc)
        rhs = phi(z, qac) * (f0(ctx, qbc) - f0(ctx, qab))
        res["exchange_three_site"] = rel_residual(lhs, rhs)

        res["f0_wp_relation"] = rel_residual(f0(ctx, qab) + wp_lattice(ctx, qab), shift)
        for k, v in res.items():
            worst[k] = max(worst[k], v)

    report = CheckReport("scalar", metadata={"context": ctx.describe(), "perturb": perturb})
    for k in names:
        report.add(k, worst[k], tolerance, sampler.count, sampler.seed)
    report.wall_time = time.perf_counter() - t0
    return report
