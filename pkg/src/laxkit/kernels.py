"""Hot inner loops: the odd theta series and dense two-site embedding.

Each kernel has a numba version and a numpy version with identical
signatures; the public ``theta_series`` / ``embed_pair_dense`` dispatch on
``laxkit._accel.HAVE_NUMBA``.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

TWO_PI = 2.0 * math.pi


class SeriesCapError(ArithmeticError):
    """The theta series did not reach its tolerance within ``max_terms``."""


# ---------------------------------------------------------------------------
# theta series
# ---------------------------------------------------------------------------


@njit(cache=True)
def _theta_series_nb(z, tau, tol, min_terms, max_terms):
    n_pts = z.shape[0]
    out = np.zeros((4, n_pts), dtype=np.complex128)
    used = 0
    ipi_tau = 1j * math.pi * tau
    for p in range(n_pts):
        zp = z[p]
        shift = math.floor(zp.real + 0.5)
        z0 = zp - shift
        sign = 1.0 if (int(shift) % 2 == 0) else -1.0
        arg = z0 + 0.5
        s0 = 0.0j
        s1 = 0.0j
        s2 = 0.0j
        s3 = 0.0j
        converged = False
        n = 0
        while n < max_terms:
            k = n + 0.5
            g = np.exp(ipi_tau * k * k)
            ep = np.exp(1j * TWO_PI * k * arg)
            em = np.exp(-1j * TWO_PI * k * arg)
            c = 1j * TWO_PI * k
            a = g * ep
            b = g * em
            s0 -= a + b
            s1 -= c * (a - b)
            c2 = c * c
            s2 -= c2 * (a + b)
            s3 -= c2 * c * (a - b)
            n += 1
            mag = (abs(a) + abs(b)) * max(1.0, (TWO_PI * k) ** 3)
            if n >= min_terms and mag < tol:
                converged = True
                break
        if not converged:
            return out, -1
        if n > used:
            used = n
        out[0, p] = sign * s0
        out[1, p] = sign * s1
        out[2, p] = sign * s2
        out[3, p] = sign * s3
    return out, used


def _theta_series_np(z, tau, tol, min_terms, max_terms):
    z = np.asarray(z, dtype=np.complex128)
    shift = np.floor(z.real + 0.5)
    z0 = z - shift
    sign = np.where(np.mod(shift, 2.0) == 0.0, 1.0, -1.0)
    arg = z0 + 0.5
    sums = np.zeros((4, z.shape[0]), dtype=np.complex128)
    done = np.zeros(z.shape[0], dtype=bool)
    n = 0
    while n < max_terms:
        k = n + 0.5
        g = np.exp(1j * np.pi * tau * k * k)
        a = g * np.exp(1j * TWO_PI * k * arg)
        b = g * np.exp(-1j * TWO_PI * k * arg)
        c = 1j * TWO_PI * k
        live = ~done
        sums[0, live] -= (a + b)[live]
        sums[1, live] -= (c * (a - b))[live]
        sums[2, live] -= (c * c * (a + b))[live]
        sums[3, live] -= (c ** 3 * (a - b))[live]
        n += 1
        mag = (np.abs(a) + np.abs(b)) * max(1.0, (TWO_PI * k) ** 3)
        if n >= min_terms:
            done |= mag < tol
            if done.all():
                return sums * sign, n
    return sums * sign, -1


def theta_series(z, tau, tol, min_terms=8, max_terms=200):
    """Values of theta and its first three z-derivatives at every point of ``z``.

    Returns an array of shape ``(4,) + z.shape`` and the largest number of
    series terms (k-pairs) any point needed.
    """
    z = np.asarray(z, dtype=np.complex128)
    flat = np.ascontiguousarray(z.reshape(-1))
    if HAVE_NUMBA:
        out, used = _theta_series_nb(flat, complex(tau), float(tol), int(min_terms), int(max_terms))
    else:
        out, used = _theta_series_np(flat, complex(tau), float(tol), int(min_terms), int(max_terms))
    if used < 0:
        raise SeriesCapError(
            f"theta series not below tol={tol:g} after {max_terms} terms "
            f"(max |Im z| = {np.abs(flat.imag).max():.3g}, Im tau = {complex(tau).imag:.3g})"
        )
    return out.reshape((4,) + z.shape), used


# ---------------------------------------------------------------------------
# two-site embedding
# ---------------------------------------------------------------------------


@njit(cache=True)
def _embed_pair_nb(op, i, j, n_sites, d):
    dim = d ** n_sites
    out = np.zeros((dim, dim), dtype=np.complex128)
    wi = d ** (n_sites - 1 - i)
    wj = d ** (n_sites - 1 - j)
    for r in range(dim):
        si = (r // wi) % d
        sj = (r // wj) % d
        base = r - si * wi - sj * wj
        row = si * d + sj
        for a in range(d):
            for b in range(d):
                v = op[row, a * d + b]
                if v != 0.0:
                    out[r, base + a * wi + b * wj] = v
    return out


def _embed_pair_np(op, i, j, n_sites, d):
    rest = d ** (n_sites - 2)
    full = np.kron(op, np.eye(rest, dtype=np.complex128)).reshape((d,) * (2 * n_sites))
    order = [i, j] + [k for k in range(n_sites) if k not in (i, j)]
    inv = np.argsort(order)
    axes = list(inv) + [n_sites + a for a in inv]
    dim = d ** n_sites
    return np.ascontiguousarray(full.transpose(axes)).reshape(dim, dim)


def embed_pair_dense(op, i, j, n_sites, d):
    """Dense matrix acting as the ``d^2 x d^2`` operator ``op`` on sites ``i, j``
    (0-based, first factor of ``op`` on site ``i``) and as identity elsewhere."""
    op = np.ascontiguousarray(op, dtype=np.complex128)
    if HAVE_NUMBA:
        return _embed_pair_nb(op, int(i), int(j), int(n_sites), int(d))
    return _embed_pair_np(op, int(i), int(j), int(n_sites), int(d))


# direct handles for the benchmark and the parity tests
theta_series_numba = _theta_series_nb if HAVE_NUMBA else None
theta_series_numpy = _theta_series_np
embed_pair_numba = _embed_pair_nb if HAVE_NUMBA else None
embed_pair_numpy = _embed_pair_np
