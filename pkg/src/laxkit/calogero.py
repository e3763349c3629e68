"""Classical elliptic Calogero-Moser flows 2 and 3 and their Lax pairs.

Two Lax pairs are provided: the scalar N x N pair built from phi and f, and
the R-matrix-valued pair whose entries are operators on (C^d)^{(x)N}. The
R-matrix-valued Lax equation reproduces the equations of motion with the
coupling nu replaced by sqrt(kappa) nu (kappa = d^2 for Baxter-Belavin, so the
effective coupling is d*nu).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import elliptic as ell
from .elliptic import EllipticContext
from .errors import PoleError
from .operators import Operator, SpaceDescriptor, embed_pair_array
from .report import CheckReport
from .rmatrix import RModel

FLOWS = (2, 3)
PRIMED_DISTINCT = "distinct"
PRIMED_ALT = "c-only"


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray
    nu: complex = 1.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex).reshape(-1)
        p = np.asarray(self.p, dtype=complex).reshape(-1)
        if q.shape != p.shape:
            raise ValueError("q and p must have the same length")
        if q.size < 2:
            raise ValueError("need at least two particles")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "nu", complex(self.nu))

    @property
    def n(self) -> int:
        return self.q.size

    def diffs(self) -> np.ndarray:
        return self.q[:, None] - self.q[None, :]

    def check(self, ctx: EllipticContext) -> None:
        qq = self.diffs()[~np.eye(self.n, dtype=bool)]
        if np.any(ell.lattice_distance(ctx, qq) < ctx.eps_pole):
            raise PoleError("two particle positions coincide modulo the lattice")

    def shifted(self, dq, dp) -> "PhasePoint":
        return PhasePoint(self.q + dq, self.p + dp, self.nu)


def random_phase(n: int, rng: np.random.Generator, nu: float = 1.0, min_sep: float = 0.05) -> PhasePoint:
    """Real q in (0, 1) with pairwise separation >= min_sep (also across the circle), p in [-1, 1]."""
    for _ in range(10_000):
        q = np.sort(rng.uniform(0.0, 1.0, size=n))
        gaps = np.diff(np.concatenate([q, [q[0] + 1.0]]))
        if gaps.min() >= min_sep:
            break
    else:
        raise RuntimeError("could not place particles")
    q = rng.permutation(q)
    p = rng.uniform(-1.0, 1.0, size=n)
    return PhasePoint(q, p, nu)


def _check_flow(flow: int) -> None:
    if flow not in FLOWS:
        raise ValueError(f"only flows 2 and 3 are supported, got {flow!r}")


# ---------------------------------------------------------------------------
# Hamiltonians and equations of motion
# ---------------------------------------------------------------------------


def _pair_table(ctx, ph: PhasePoint, fn, parity: int | None = None):
    """Table of fn(q_i - q_j); with ``parity`` = +1/-1 only i < j is evaluated
    and the lower triangle is filled by symmetry, so pair sums cancel exactly."""
    n = ph.n
    out = np.zeros((n, n), dtype=complex)
    if parity is None:
        mask = ~np.eye(n, dtype=bool)
        out[mask] = fn(ctx, ph.diffs()[mask])
        return out
    iu = np.triu_indices(n, 1)
    out[iu] = fn(ctx, ph.diffs()[iu])
    out[iu[1], iu[0]] = parity * out[iu]
    return out


def hamiltonian(flow: int, ph: PhasePoint, ctx: EllipticContext) -> complex:
    """H2 = sum p^2/2 - nu^2 sum_{i<j} wp(q_ij);  H3 = sum p^3/3 - nu^2 sum_{i!=j} p_i wp(q_ij)."""
    _check_flow(flow)
    ph.check(ctx)
    W = _pair_table(ctx, ph, ell.wp)
    nu2 = ph.nu ** 2
    if flow == 2:
        return complex(np.sum(ph.p ** 2) / 2 - nu2 * np.sum(np.triu(W, 1)))
    return complex(np.sum(ph.p ** 3) / 3 - nu2 * np.sum(ph.p[:, None] * W))


def eom(flow: int, ph: PhasePoint, ctx: EllipticContext, nu=None):
    """(dq/dt, dp/dt) of flow 2 or 3; ``nu`` overrides the coupling of ``ph``."""
    _check_flow(flow)
    ph.check(ctx)
    nu2 = (ph.nu if nu is None else complex(nu)) ** 2
    Wp = _pair_table(ctx, ph, ell.wp_prime)
    if flow == 2:
        return ph.p.copy(), nu2 * Wp.sum(axis=1)
    W = _pair_table(ctx, ph, ell.wp)
    qdot = ph.p ** 2 - nu2 * W.sum(axis=1)
    pdot = nu2 * ((ph.p[:, None] + ph.p[None, :]) * Wp).sum(axis=1)
    return qdot, pdot


def gradients(flow: int, ph: PhasePoint, ctx: EllipticContext):
    """(dH/dq, dH/dp) from the analytic forms."""
    _check_flow(flow)
    nu2 = ph.nu ** 2
    Wp = _pair_table(ctx, ph, ell.wp_prime, parity=-1)
    if flow == 2:
        return -nu2 * Wp.sum(axis=1), ph.p.copy()
    W = _pair_table(ctx, ph, ell.wp, parity=1)
    dq = -nu2 * ((ph.p[:, None] + ph.p[None, :]) * Wp).sum(axis=1)
    dp = ph.p ** 2 - nu2 * W.sum(axis=1)
    return dq, dp


def poisson_h2_h3(ph: PhasePoint, ctx: EllipticContext) -> float:
    """|{H2, H3}| with {f, g} = sum_i (df/dq_i dg/dp_i - df/dp_i dg/dq_i)."""
    ph.check(ctx)
    n, p, nu2 = ph.n, ph.p, ph.nu ** 2
    W = _pair_table(ctx, ph, ell.wp, parity=1)
    Wp = _pair_table(ctx, ph, ell.wp_prime, parity=-1)
    # Expand each gradient into its pair terms and sum the monomials with
    # fsum: two-body pieces (wp'_ik wp_ik and friends) are individually large
    # near collisions and only cancel against their (k, i) mirror, which a
    # plain dot product of the summed gradients would smear into rounding.
    terms = []
    for i in range(n):
        others = [k for k in range(n) if k != i]
        dp3 = [p[i] ** 2] + [-nu2 * W[i, m] for m in others]
        for k in others:
            dq2 = -nu2 * Wp[i, k]
            terms.extend(dq2 * b for b in dp3)
            terms.append(p[i] * nu2 * (p[i] + p[k]) * Wp[i, k])
    total = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    return float(abs(total))


# ---------------------------------------------------------------------------
# scalar Lax pair
# ---------------------------------------------------------------------------


def _phi_f_tables(ctx, ph: PhasePoint, z):
    n = ph.n
    mask = ~np.eye(n, dtype=bool)
    qq = ph.diffs()[mask]
    phi_v, f_v = ell.phi_and_dq(ctx, np.full(qq.shape, z, dtype=complex), qq)
    phi = np.zeros((n, n), dtype=complex)
    f = np.zeros((n, n), dtype=complex)
    phi[mask] = phi_v
    f[mask] = f_v
    f00 = _pair_table(ctx, ph, ell.f0)
    return phi, f, f00


def scalar_lax(ph: PhasePoint, z, ctx: EllipticContext) -> np.ndarray:
    ph.check(ctx)
    phi, _, _ = _phi_f_tables(ctx, ph, z)
    return np.diag(ph.p) + ph.nu * phi


def scalar_m(flow: int, ph: PhasePoint, z, ctx: EllipticContext) -> np.ndarray:
    _check_flow(flow)
    ph.check(ctx)
    nu, p, n = ph.nu, ph.p, ph.n
    phi, f, f00 = _phi_f_tables(ctx, ph, z)
    if flow == 2:
        d = -f00.sum(axis=1)
        return nu * np.diag(d) + nu * f
    pp = p[:, None] + p[None, :]
    m = np.diag(-nu * (pp * f00).sum(axis=1))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            acc = nu * (p[i] + p[j]) * f[i, j]
            for k in range(n):
                if k != i and k != j:
                    acc += nu ** 2 * (phi[i, k] * f[k, j] - phi[i, j] * f00[k, j])
            m[i, j] = acc
    return m


# ---------------------------------------------------------------------------
# R-matrix-valued Lax pair
# ---------------------------------------------------------------------------


def effective_coupling(model: RModel | None, nu: complex) -> complex:
    """Coupling of the equations of motion reproduced by the Lax equation."""
    if model is None:
        return nu
    return complex(np.sqrt(model.kappa)) * nu


class _PairCache:
    """Embedded R, F, r, F0 for every ordered pair of particles."""

    def __init__(self, model: RModel, ctx: EllipticContext, ph: PhasePoint, z, need_classical=True):
        model.check_backend(ctx)
        ph.check(ctx)
        self.n = n = ph.n
        self.d = d = model.local_dim
        self.space = SpaceDescriptor(n, d)
        self.R, self.F, self.r, self.F0 = {}, {}, {}, {}
        qq = ph.diffs()
        for i, j in permutations(range(n), 2):
            if z is not None:
                R, F = model.quantum_and_dq(ctx, z, qq[i, j])
                self.R[i, j] = embed_pair_array(R, i, j, n, d)
                self.F[i, j] = embed_pair_array(F, i, j, n, d)
            self.F0[i, j] = embed_pair_array(model.classical_dq(ctx, qq[i, j]), i, j, n, d)
            if need_classical:
                self.r[i, j] = embed_pair_array(model.classical(ctx, qq[i, j]), i, j, n, d)
        self.dq = d ** n
        self.eye = np.eye(self.dq, dtype=complex)

    def f0_total(self):
        """sum_{k<m} F0_km(q_km)."""
        return sum(self.F0[k, m] for k, m in permutations(range(self.n), 2) if k < m)

    def triple_commutator_sum(self):
        """sum' over distinct (a, b, c) of [F0_ab, r_cb]."""
        acc = np.zeros((self.dq, self.dq), dtype=complex)
        for a, b, c in permutations(range(self.n), 3):
            acc += self.F0[a, b] @ self.r[c, b] - self.r[c, b] @ self.F0[a, b]
        return acc


def _assemble(blocks, space: SpaceDescriptor) -> Operator:
    n = len(blocks)
    dq = space.quantum_dim
    full = np.zeros((n * dq, n * dq), dtype=complex)
    for i in range(n):
        for j in range(n):
            full[i * dq:(i + 1) * dq, j * dq:(j + 1) * dq] = blocks[i][j]
    return Operator(space.with_aux(), full)


def rmv_lax(model: RModel, ph: PhasePoint, z, ctx: EllipticContext, cache=None) -> Operator:
    c = cache or _PairCache(model, ctx, ph, z, need_classical=False)
    blocks = [[ph.p[i] * c.eye if i == j else ph.nu * c.R[i, j] for j in range(c.n)] for i in range(c.n)]
    return _assemble(blocks, c.space)


def rmv_m(flow: int, model: RModel, ph: PhasePoint, z, ctx: EllipticContext, cache=None,
          ablate_f0: bool = False, ablate_last_line: bool = False,
          primed: str = PRIMED_DISTINCT) -> Operator:
    """M^(2) or M^(3) for the R-matrix-valued Lax pair.

    ``ablate_f0`` drops the 1 (x) F0 term of M^(2); ``ablate_last_line`` drops
    the third line of M^(3). ``primed`` picks the reading of the primed sum
    sum'_{b,c} [F0_bc, r_ic]: "distinct" excludes b = i as well as c = i,
    "c-only" excludes only c = i.
    """
    _check_flow(flow)
    if primed not in (PRIMED_DISTINCT, PRIMED_ALT):
        raise ValueError(f"unknown primed-sum convention {primed!r}")
    c = cache or _PairCache(model, ctx, ph, z)
    n, nu, p = c.n, ph.nu, ph.p
    blocks = [[None] * n for _ in range(n)]
    if flow == 2:
        f0_term = np.zeros_like(c.eye) if ablate_f0 else nu * c.f0_total()
        for i in range(n):
            d_i = -sum(c.F0[i, k] for k in range(n) if k != i)
            for j in range(n):
                blocks[i][j] = nu * d_i + f0_term if i == j else nu * c.F[i, j]
        return _assemble(blocks, c.space)

    common = np.zeros_like(c.eye)
    if not ablate_last_line:
        pf = sum(p[b] * c.F0[b, cc] for b, cc in permutations(range(n), 2))
        common = nu * pf - nu ** 2 / 3.0 * c.triple_commutator_sum()
    for i in range(n):
        for j in range(n):
            if i == j:
                blk = -nu * sum((p[i] + p[k]) * c.F0[i, k] for k in range(n) if k != i)
                if not ablate_last_line:
                    acc = np.zeros_like(c.eye)
                    for b, cc in permutations(range(n), 2):
                        if cc == i or (primed == PRIMED_DISTINCT and b == i):
                            continue
                        acc += c.F0[b, cc] @ c.r[i, cc] - c.r[i, cc] @ c.F0[b, cc]
                    blk = blk + nu ** 2 * acc + common
            else:
                blk = nu * (p[i] + p[j]) * c.F[i, j]
                for k in range(n):
                    if k != i and k != j:
                        # F0_kj must stand left of R_ij; the other order leaves
                        # (P_km - P_mi)(f0_mi - f0_km) on the diagonal of [L, M]
                        blk = blk + nu ** 2 * (c.R[i, k] @ c.F[k, j] - c.F0[k, j] @ c.R[i, j])
            blocks[i][j] = blk
    return _assemble(blocks, c.space)


# ---------------------------------------------------------------------------
# Lax equation
# ---------------------------------------------------------------------------


def lax_time_derivative(kind: str, flow: int, model: RModel | None, ph: PhasePoint, z, ctx: EllipticContext,
                        coupling=None, cache=None):
    """Analytic d L / dt along ``flow``; EOM use ``coupling`` (default: the effective coupling)."""
    _check_flow(flow)
    if coupling is None:
        coupling = effective_coupling(model if kind == "rmv" else None, ph.nu)
    qdot, pdot = eom(flow, ph, ctx, nu=coupling)
    n = ph.n
    if kind == "scalar":
        _, f, _ = _phi_f_tables(ctx, ph, z)
        out = ph.nu * f * (qdot[:, None] - qdot[None, :])
        out[np.diag_indices(n)] = pdot
        return out
    if kind != "rmv":
        raise ValueError(f"unknown Lax kind {kind!r}")
    c = cache or _PairCache(model, ctx, ph, z, need_classical=False)
    blocks = [[pdot[i] * c.eye if i == j else ph.nu * (qdot[i] - qdot[j]) * c.F[i, j] for j in range(n)]
              for i in range(n)]
    return _assemble(blocks, c.space)


def lax_residual(kind: str, flow: int, model: RModel | None, ph: PhasePoint, z, ctx: EllipticContext,
                 coupling=None, ablate_f0: bool = False, ablate_last_line: bool = False,
                 primed: str = PRIMED_DISTINCT) -> float:
    """||dL/dt - [L, M]||_F / max(1, ||[L, M]||_F)."""
    if kind == "scalar":
        L = scalar_lax(ph, z, ctx)
        M = scalar_m(flow, ph, z, ctx)
        dL = lax_time_derivative("scalar", flow, None, ph, z, ctx, coupling)
    elif kind == "rmv":
        cache = _PairCache(model, ctx, ph, z, need_classical=(flow == 3))
        L = rmv_lax(model, ph, z, ctx, cache).entries
        M = rmv_m(flow, model, ph, z, ctx, cache, ablate_f0, ablate_last_line, primed).entries
        dL = lax_time_derivative("rmv", flow, model, ph, z, ctx, coupling, cache).entries
    else:
        raise ValueError(f"unknown Lax kind {kind!r}")
    comm = L @ M - M @ L
    return float(np.linalg.norm(dL - comm) / max(1.0, float(np.linalg.norm(comm))))


def rk4_flow(flow: int, ph: PhasePoint, ctx: EllipticContext, t_end: float, steps: int) -> PhasePoint:
    """Classical RK4 integration of a flow (test oracle, not a product feature)."""
    h = t_end / steps
    state = ph
    for _ in range(steps):
        k1 = eom(flow, state, ctx)
        s2 = state.shifted(0.5 * h * k1[0], 0.5 * h * k1[1])
        k2 = eom(flow, s2, ctx)
        s3 = state.shifted(0.5 * h * k2[0], 0.5 * h * k2[1])
        k3 = eom(flow, s3, ctx)
        s4 = state.shifted(h * k3[0], h * k3[1])
        k4 = eom(flow, s4, ctx)
        state = state.shifted(h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                              h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))
    return state


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


def sample_spectral(rng: np.random.Generator, ctx: EllipticContext, model: RModel | None, count: int,
                    min_sep: float = 0.05) -> list[complex]:
    """Spectral parameters kept ``min_sep`` away from every z-pole of the Lax pair."""
    im = ctx.tau.imag if not ctx.is_trig else 1.0
    out = []
    while len(out) < count:
        z = complex(rng.uniform(0.0, 1.0), rng.uniform(-0.25, 0.25) * im)
        dist = model.z_pole_distance(ctx, z) if model is not None else float(ell.lattice_distance(ctx, z))
        if dist > min_sep:
            out.append(z)
    return out


def lax_suite(kind: str, ctx: EllipticContext, n: int = 3, flows=FLOWS, model: RModel | None = None,
              phases: int = 5, z_per_phase: int = 3, seed: int = 0, nu: float = 0.8,
              tolerance: float = 1e-9, control_tolerance: float = 1e-3, ablate_f0: bool = False,
              ablate_last_line: bool = False, unrescaled: bool = False, primed: str = PRIMED_DISTINCT,
              poisson_tolerance: float = 1e-10, controls: bool = True):
    """Lax residuals over seeded phase points and spectral parameters.

    The R-matrix-valued run also records the negative controls (expected to
    exceed ``control_tolerance``) unless an ablation was requested for the
    main check itself.
    """
    if kind not in ("scalar", "rmv"):
        raise ValueError(f"unknown Lax kind {kind!r}")
    if kind == "rmv" and model is None:
        raise ValueError("R-matrix-valued Lax pair needs a model")
    flows = tuple(flows)
    for fl in flows:
        _check_flow(fl)
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(phases):
        ph = random_phase(n, rng, nu=nu)
        samples.append((ph, sample_spectral(rng, ctx, model if kind == "rmv" else None, z_per_phase)))

    meta = {"kind": kind, "N": n, "nu": nu, "context": ctx.describe()}
    if model is not None:
        meta["model"] = model.name
        meta["effective_coupling_factor"] = float(np.sqrt(model.kappa))
    rep = CheckReport("lax", metadata=meta)
    count = phases * z_per_phase
    abl = ablate_f0 or ablate_last_line
    for fl in flows:
        worst = 0.0
        for ph, zs in samples:
            for z in zs:
                coupling = ph.nu if (unrescaled and kind == "rmv") else None
                worst = max(worst, lax_residual(kind, fl, model, ph, z, ctx, coupling=coupling,
                                                ablate_f0=ablate_f0, ablate_last_line=ablate_last_line,
                                                primed=primed))
        rep.add(f"flow{fl}", worst, tolerance, count, seed)
        if kind != "rmv" or not controls or abl or unrescaled:
            continue
        ph, zs = samples[0]
        z = zs[0]
        rep.add(f"flow{fl}_unrescaled_coupling",
                lax_residual(kind, fl, model, ph, z, ctx, coupling=ph.nu), control_tolerance,
                1, seed, expect="above", note="negative control")
        label, kw = ("flow2_ablate_f0", {"ablate_f0": True}) if fl == 2 else \
            ("flow3_ablate_last_line", {"ablate_last_line": True})
        rep.add(label, lax_residual(kind, fl, model, ph, z, ctx, **kw), control_tolerance,
                1, seed, expect="above", note="negative control")
    if kind == "scalar":
        worst = max(poisson_h2_h3(ph, ctx) for ph, _ in samples)
        rep.add("poisson_h2_h3", worst, poisson_tolerance, phases, seed)
    rep.wall_time = time.perf_counter() - t0
    return rep
