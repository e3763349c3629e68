"""R-matrix families: R^z(q), F^z(q) = d/dq R^z(q), classical r(q), F0(q) = d/dq r(q).

All evaluators return ``d^2 x d^2`` numpy arrays; the public ``r_quantum`` &
co. wrap them as Operators on the two-site space. Expansion conventions::

    R^z(q) = residue / z + r(q) + O(z)
    R^z_12(q) R^z_21(-q) = kappa * (wp(s z) - wp(q)) * 1

with ``residue``, ``kappa`` and ``s`` fixed per family (see each class).
"""

from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import elliptic as ell
from .elliptic import EllipticContext
from .errors import BackendError, ConfigError
from .operators import (
    Operator,
    embed_pair_array,
    heisenberg_q,
    heisenberg_t_matrix,
    local_space,
    pauli_matrix,
    permutation_matrix,
    swap_factors,
)
from .report import CheckReport, Sampler, rel_residual

PI = np.pi


def _sigma_sigma(alpha: int) -> np.ndarray:
    s = pauli_matrix(alpha)
    return np.kron(s, s)


SS = tuple(_sigma_sigma(a) for a in range(4))


class RModel:
    """Base class of an R-matrix family; subclasses fill in the evaluators."""

    kind = "abstract"
    local_dim = 2
    kappa = 1.0
    z_scale = 1
    backends: tuple[str, ...] = (ell.ELLIPTIC,)

    @property
    def name(self) -> str:
        return self.kind

    def check_backend(self, ctx: EllipticContext) -> None:
        if ctx.backend not in self.backends:
            raise BackendError(f"model {self.name} needs backend in {self.backends}, got {ctx.backend}")

    def residue(self) -> np.ndarray:
        return np.eye(self.local_dim ** 2, dtype=complex)

    def quantum(self, ctx, z, q) -> np.ndarray:
        raise NotImplementedError

    def dq(self, ctx, z, q) -> np.ndarray:
        raise NotImplementedError

    def classical(self, ctx, q) -> np.ndarray:
        raise NotImplementedError

    def classical_dq(self, ctx, q) -> np.ndarray:
        raise NotImplementedError

    def quantum_and_dq(self, ctx, z, q):
        return self.quantum(ctx, z, q), self.dq(ctx, z, q)

    def shift_twist(self) -> np.ndarray:
        """One-site U with r_12(q + 1) = (U (x) 1) r_12(q) (U (x) 1)^-1."""
        return np.eye(self.local_dim, dtype=complex)

    def unitarity_scalar(self, ctx, z, q) -> complex:
        return self.kappa * (ell.wp(ctx, self.z_scale * z) - ell.wp(ctx, q))

    def z_pole_distance(self, ctx, z) -> float:
        s = self.z_scale
        return float(np.min(ell.lattice_distance(ctx, s * np.asarray(z)) / s))

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class BaxterBelavin(RModel):
    """sum_a T_a (x) T_{-a} exp(2 pi i a2 q / d) phi(q, z + (a1 + a2 tau)/d)."""

    kind = "bb"
    backends = (ell.ELLIPTIC,)

    def __init__(self, d: int = 2):
        if d < 1:
            raise ValueError("local dimension must be >= 1")
        self.local_dim = int(d)

    @property
    def kappa(self):
        return float(self.local_dim ** 2)

    @property
    def z_scale(self):
        return self.local_dim

    @property
    def name(self):
        return f"bb:N={self.local_dim}"

    def shift_twist(self):
        return np.linalg.inv(heisenberg_q(self.local_dim))

    def _basis(self):
        d = self.local_dim
        idx = [(a1, a2) for a1 in range(d) for a2 in range(d)]
        mats = [np.kron(heisenberg_t_matrix(a1, a2, d), heisenberg_t_matrix(-a1, -a2, d)) for a1, a2 in idx]
        return idx, mats

    def _omegas(self, ctx):
        d = self.local_dim
        idx, mats = self._basis()
        om = np.array([(a1 + a2 * ctx.tau) / d for a1, a2 in idx])
        a2 = np.array([a2 for _, a2 in idx], dtype=float)
        return idx, mats, om, a2

    def quantum_and_dq(self, ctx, z, q):
        d = self.local_dim
        _, mats, om, a2 = self._omegas(ctx)
        phase = np.exp(2j * PI * a2 * q / d)
        phi, f = ell.phi_and_dq(ctx, z + om, np.full(om.shape, q, dtype=complex))
        r = np.tensordot(phase * phi, mats, axes=1)
        fq = np.tensordot(phase * (2j * PI * a2 / d * phi + f), mats, axes=1)
        return r, fq

    def quantum(self, ctx, z, q):
        return self.quantum_and_dq(ctx, z, q)[0]

    def dq(self, ctx, z, q):
        return self.quantum_and_dq(ctx, z, q)[1]

    def classical(self, ctx, q):
        d = self.local_dim
        _, mats, om, a2 = self._omegas(ctx)
        out = mats[0] * ell.e1(ctx, q)
        if d > 1:
            phase = np.exp(2j * PI * a2[1:] * q / d)
            phi = ell.kronecker_phi(ctx, om[1:], np.full(om[1:].shape, q, dtype=complex))
            out = out + np.tensordot(phase * phi, mats[1:], axes=1)
        return out

    def classical_dq(self, ctx, q):
        d = self.local_dim
        _, mats, om, a2 = self._omegas(ctx)
        out = mats[0] * ell.f0(ctx, q)
        if d > 1:
            phase = np.exp(2j * PI * a2[1:] * q / d)
            phi, f = ell.phi_and_dq(ctx, om[1:], np.full(om[1:].shape, q, dtype=complex))
            out = out + np.tensordot(phase * (2j * PI * a2[1:] / d * phi + f), mats[1:], axes=1)
        return out


class PermutationKronecker(RModel):
    """R^z(q) = P phi(z, q); works on either backend."""

    kind = "perm"
    backends = (ell.ELLIPTIC, ell.TRIGONOMETRIC)

    def __init__(self, d: int = 2, mode: str = ell.ELLIPTIC):
        if d < 2:
            raise ValueError("permutation R-matrix needs local dimension >= 2")
        if mode not in (ell.ELLIPTIC, ell.TRIGONOMETRIC):
            raise ValueError(f"unknown mode {mode!r}")
        self.local_dim = int(d)
        self.mode = mode
        self.backends = (mode,)

    @property
    def name(self):
        return f"perm:N={self.local_dim}:{'trig' if self.mode == ell.TRIGONOMETRIC else 'elliptic'}"

    def residue(self):
        return permutation_matrix(self.local_dim)

    def quantum(self, ctx, z, q):
        return permutation_matrix(self.local_dim) * ell.kronecker_phi(ctx, z, q)

    def dq(self, ctx, z, q):
        return permutation_matrix(self.local_dim) * ell.phi_dq(ctx, z, q)

    def quantum_and_dq(self, ctx, z, q):
        phi, f = ell.phi_and_dq(ctx, z, q)
        p = permutation_matrix(self.local_dim)
        return p * phi, p * f

    def classical(self, ctx, q):
        return permutation_matrix(self.local_dim) * ell.e1(ctx, q)

    def classical_dq(self, ctx, q):
        return permutation_matrix(self.local_dim) * ell.f0(ctx, q)


# half-periods of the XYZ display, indexed by alpha = 1, 2, 3
def xyz_half_periods(ctx: EllipticContext):
    return {1: ctx.tau / 2, 2: (ctx.tau + 1) / 2, 3: 0.5 + 0j}


def xyz_phase(alpha: int, q):
    return np.exp(1j * PI * q) if alpha in (1, 2) else 1.0 + 0j


def varphi(ctx: EllipticContext, alpha: int, q):
    """varphi_alpha(q): e^{pi i q} phi(q, tau/2), e^{pi i q} phi(q, (tau+1)/2), phi(q, 1/2)."""
    w = xyz_half_periods(ctx)[alpha]
    return xyz_phase(alpha, q) * ell.kronecker_phi(ctx, w, q)


class XYZ(RModel):
    """Baxter's elliptic XYZ R-matrix in the sigma (x) sigma display form."""

    kind = "xyz"
    local_dim = 2
    kappa = 4.0
    z_scale = 2
    backends = (ell.ELLIPTIC,)

    def shift_twist(self):
        return pauli_matrix(3)

    def _args(self, ctx, z):
        hp = xyz_half_periods(ctx)
        return np.array([z, z + hp[1], z + hp[2], z + hp[3]])

    def quantum_and_dq(self, ctx, z, q):
        w = self._args(ctx, z)
        phi, f = ell.phi_and_dq(ctx, w, np.full(4, q, dtype=complex))
        e = np.exp(1j * PI * q)
        coef = [phi[0], e * phi[1], e * phi[2], phi[3]]
        dcoef = [f[0], e * (1j * PI * phi[1] + f[1]), e * (1j * PI * phi[2] + f[2]), f[3]]
        r = sum(c * s for c, s in zip(coef, SS))
        fq = sum(c * s for c, s in zip(dcoef, SS))
        return r, fq

    def quantum(self, ctx, z, q):
        return self.quantum_and_dq(ctx, z, q)[0]

    def dq(self, ctx, z, q):
        return self.quantum_and_dq(ctx, z, q)[1]

    def classical(self, ctx, q):
        out = SS[0] * ell.e1(ctx, q)
        for a in (1, 2, 3):
            out = out + SS[a] * varphi(ctx, a, q)
        return out

    def classical_dq(self, ctx, q):
        hp = xyz_half_periods(ctx)
        out = SS[0] * ell.f0(ctx, q)
        for a in (1, 2, 3):
            phi, f = ell.phi_and_dq(ctx, hp[a], q)
            e = xyz_phase(a, q)
            extra = 1j * PI * phi if a in (1, 2) else 0.0
            out = out + SS[a] * (e * (extra + f))
        return out


class XXZ6Vertex(RModel):
    """Trigonometric 6-vertex R-matrix; residue of the z-pole is 2 (1 (x) 1)."""

    kind = "xxz"
    local_dim = 2
    kappa = 4.0
    z_scale = 1
    backends = (ell.TRIGONOMETRIC,)

    def residue(self):
        return 2.0 * np.eye(4, dtype=complex)

    def shift_twist(self):
        return pauli_matrix(3)

    def _check(self, ctx, *args):
        ell.check_poles(ctx, self.kind, *args)

    def quantum(self, ctx, z, q):
        self._check(ctx, z, q)
        a = PI * (1 / np.tan(PI * z) + 1 / np.tan(PI * q))
        b = PI / np.sin(PI * z)
        c = PI / np.sin(PI * q)
        return a * (SS[0] + SS[3]) + b * (SS[0] - SS[3]) + c * (SS[1] + SS[2])

    def dq(self, ctx, z, q):
        return self.classical_dq(ctx, q)

    def classical(self, ctx, q):
        self._check(ctx, q)
        return PI / np.tan(PI * q) * (SS[0] + SS[3]) + PI / np.sin(PI * q) * (SS[1] + SS[2])

    def classical_dq(self, ctx, q):
        self._check(ctx, q)
        s2 = np.sin(PI * q) ** 2
        return -(PI ** 2) / s2 * (SS[0] + SS[3] + np.cos(PI * q) * (SS[1] + SS[2]))


class ScaledModel(RModel):
    """Negative control: R^z(q) -> (1 + eps z) R^z(q); breaks unitarity."""

    def __init__(self, base: RModel, eps: float = 0.01):
        self.base = base
        self.eps = float(eps)
        self.local_dim = base.local_dim
        self.kind = f"scaled-{base.kind}"
        self.kappa = base.kappa
        self.z_scale = base.z_scale
        self.backends = base.backends

    @property
    def name(self):
        return f"{self.base.name}*(1+{self.eps:g}z)"

    def residue(self):
        return self.base.residue()

    def shift_twist(self):
        return self.base.shift_twist()

    def quantum(self, ctx, z, q):
        return (1 + self.eps * z) * self.base.quantum(ctx, z, q)

    def dq(self, ctx, z, q):
        return (1 + self.eps * z) * self.base.dq(ctx, z, q)

    def classical(self, ctx, q):
        return self.base.classical(ctx, q) + self.eps * self.base.residue()

    def classical_dq(self, ctx, q):
        return self.base.classical_dq(ctx, q)


# ---------------------------------------------------------------------------
# registry / model strings
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, Callable[[dict[str, str], list[str]], RModel]] = {}


def register_model(prefix: str, factory: Callable[[dict[str, str], list[str]], RModel]) -> None:
    """Plug in an external family (e.g. a 7-vertex R-matrix) under ``prefix``.

    ``factory(params, flags)`` receives ``key=value`` pairs and bare flags
    from the model string ``prefix:key=value:flag``.
    """
    _REGISTRY[prefix] = factory


def _local_dim(params, default=2):
    try:
        return int(params.get("N", default))
    except ValueError as exc:
        raise ConfigError(f"bad local dimension {params.get('N')!r}") from exc


def _perm_factory(params, flags):
    mode = ell.ELLIPTIC
    for f in flags:
        if f in ("trig", "trigonometric"):
            mode = ell.TRIGONOMETRIC
        elif f in ("elliptic", "ell"):
            mode = ell.ELLIPTIC
        else:
            raise ConfigError(f"unknown perm flag {f!r}")
    return PermutationKronecker(_local_dim(params), mode)


def _fixed(cls):
    def factory(params, flags):
        if flags or _local_dim(params) != 2:
            raise ConfigError(f"{cls.kind} takes no options besides N=2")
        return cls()
    return factory


register_model("bb", lambda params, flags: BaxterBelavin(_local_dim(params)))
register_model("perm", _perm_factory)
register_model("xyz", _fixed(XYZ))
register_model("xxz", _fixed(XXZ6Vertex))


def parse_model(spec: str) -> RModel:
    """"bb:N=2", "perm:N=2:elliptic", "perm:N=2:trig", "xyz", "xxz"."""
    parts = [p.strip() for p in spec.strip().split(":") if p.strip()]
    if not parts:
        raise ConfigError("empty model string")
    prefix = parts[0].lower()
    if prefix not in _REGISTRY:
        raise ConfigError(f"unknown model {prefix!r}; known: {sorted(_REGISTRY)}")
    params, flags = {}, []
    for p in parts[1:]:
        if "=" in p:
            k, v = p.split("=", 1)
            params[k.strip()] = v.strip()
        else:
            flags.append(p.lower())
    return _REGISTRY[prefix](params, flags)


def default_context(model: RModel, tau: complex = 1j) -> EllipticContext:
    backend = model.backends[0]
    return EllipticContext(tau=tau, backend=backend)


# ---------------------------------------------------------------------------
# public evaluators
# ---------------------------------------------------------------------------


def _op(model: RModel, mat: np.ndarray) -> Operator:
    return Operator(local_space(model.local_dim, 2), mat)


def r_quantum(model: RModel, ctx: EllipticContext, z, q) -> Operator:
    model.check_backend(ctx)
    return _op(model, model.quantum(ctx, z, q))


def r_derivative_f(model: RModel, ctx: EllipticContext, z, q) -> Operator:
    model.check_backend(ctx)
    return _op(model, model.dq(ctx, z, q))


def r_classical(model: RModel, ctx: EllipticContext, q) -> Operator:
    model.check_backend(ctx)
    return _op(model, model.classical(ctx, q))


def f0_classical(model: RModel, ctx: EllipticContext, q) -> Operator:
    model.check_backend(ctx)
    return _op(model, model.classical_dq(ctx, q))


def classical_limit_estimate(model: RModel, ctx: EllipticContext, q, h: float = 1e-3) -> np.ndarray:
    """z^0 coefficient of R^z(q) by symmetric differences plus one Richardson step."""
    def sym(step):
        return 0.5 * (model.quantum(ctx, step, q) + model.quantum(ctx, -step, q))
    return (4.0 * sym(h / 2) - sym(h)) / 3.0


# ---------------------------------------------------------------------------
# identity suite
# ---------------------------------------------------------------------------


def _zero_residual(terms) -> float:
    total = sum(terms)
    scale = max(1.0, max(float(np.linalg.norm(t)) for t in terms))
    return float(np.linalg.norm(total) / scale)


def model_check_suite(model: RModel, ctx: EllipticContext, sampler: Sampler, tolerance: float = 1e-9,
                      checks: tuple[str, ...] | None = None) -> CheckReport:
    """Max relative residuals of every R-matrix identity over seeded samples.

    Three-site identities use sites (1, 2, 3) of the three-site space.
    """
    model.check_backend(ctx)
    if sampler.count < 1:
        raise ValueError("empty sampler")
    t0 = time.perf_counter()
    d = model.local_dim
    sep = sampler.min_sep
    im_scale = ctx.tau.imag if not ctx.is_trig else 1.0
    d2 = d * d
    eye2 = np.eye(d2, dtype=complex)

    def ok(pts):
        z, w, q1, q2, q3 = pts
        zs = np.array([z, w, z - w])
        qs = np.array([q1 - q2, q2 - q3, q1 - q3])
        if model.z_pole_distance(ctx, zs) <= sep:
            return False
        return bool(np.all(ell.lattice_distance(ctx, qs) > sep))

    def emb(mat, i, j):
        return embed_pair_array(mat, i, j, 3, d)

    def swap(m):
        return swap_factors(m, d)

    names = [
        "aybe", "unitarity", "skew_symmetry", "qybe", "cybe", "cybe_derivative",
        "exchange_wp_prime", "exchange_three_site", "classical_skew", "f0_symmetry", "classical_limit",
    ]
    if checks is not None:
        names = [n for n in names if n in checks]
    worst = dict.fromkeys(names, 0.0)

    for z, w, q1, q2, q3 in sampler.points(5, im_scale, ok):
        qab, qbc, qac = q1 - q2, q2 - q3, q1 - q3
        res = {}
        Rz_ab, Fz_ab = model.quantum_and_dq(ctx, z, qab)
        Rz_bc, Fz_bc = model.quantum_and_dq(ctx, z, qbc)
        Rz_ac = model.quantum(ctx, z, qac)
        A_ab, A_bc, A_ac = emb(Rz_ab, 0, 1), emb(Rz_bc, 1, 2), emb(Rz_ac, 0, 2)

        if "aybe" in worst:
            lhs = A_ab @ emb(model.quantum(ctx, w, qbc), 1, 2)
            rhs = emb(model.quantum(ctx, w, qac), 0, 2) @ emb(model.quantum(ctx, z - w, qab), 0, 1) \
                + emb(model.quantum(ctx, w - z, qbc), 1, 2) @ A_ac
            res["aybe"] = rel_residual(lhs, rhs)

        Rz_ba, Fz_ba = model.quantum_and_dq(ctx, z, -qab)
        if "unitarity" in worst:
            lhs = Rz_ab @ swap(Rz_ba)
            res["unitarity"] = rel_residual(lhs, model.unitarity_scalar(ctx, z, qab) * eye2)
        if "skew_symmetry" in worst:
            res["skew_symmetry"] = rel_residual(Rz_ab, -swap(model.quantum(ctx, -z, -qab)))
        if "qybe" in worst:
            res["qybe"] = rel_residual(A_ab @ A_ac @ A_bc, A_bc @ A_ac @ A_ab)

        r = {p: model.classical(ctx, x) for p, x in (("ab", qab), ("bc", qbc), ("ac", qac))}
        if "cybe" in worst:
            r12, r13, r23 = emb(r["ab"], 0, 1), emb(r["ac"], 0, 2), emb(r["bc"], 1, 2)
            res["cybe"] = _zero_residual([
                r12 @ r13 - r13 @ r12, r12 @ r23 - r23 @ r12, r13 @ r23 - r23 @ r13,
            ])
        F0 = {"ab": model.classical_dq(ctx, qab), "bc": model.classical_dq(ctx, qbc)}
        if "cybe_derivative" in worst:
            # i, j, k = sites 1, 2, 3;  r_ki = r(q_k - q_i) placed first on k
            F0_ij, F0_ik, F0_jk = emb(F0["ab"], 0, 1), emb(model.classical_dq(ctx, qac), 0, 2), emb(F0["bc"], 1, 2)
            r_ki = emb(model.classical(ctx, -qac), 2, 0)
            r_kj = emb(model.classical(ctx, -qbc), 2, 1)
            r_jk = emb(r["bc"], 1, 2)
            r_ji = emb(model.classical(ctx, -qab), 1, 0)
            r_ij = emb(r["ab"], 0, 1)
            r_ik = emb(r["ac"], 0, 2)
            x1 = F0_ij @ (r_ki + r_kj) - (r_ki + r_kj) @ F0_ij
            x2 = F0_ik @ (r_jk + r_ji) - (r_jk + r_ji) @ F0_ik
            x3 = F0_jk @ (r_ij + r_ik) - (r_ij + r_ik) @ F0_jk
            res["cybe_derivative"] = max(rel_residual(x1, x2), rel_residual(x1, x3))
        if "exchange_wp_prime" in worst:
            lhs = Rz_ab @ swap(Fz_ba) - Fz_ab @ swap(Rz_ba)
            res["exchange_wp_prime"] = rel_residual(lhs, model.kappa * ell.wp_prime(ctx, qab) * eye2)
        if "exchange_three_site" in worst:
            lhs = A_ab @ emb(Fz_bc, 1, 2) - emb(Fz_ab, 0, 1) @ A_bc
            rhs = emb(F0["bc"], 1, 2) @ A_ac - A_ac @ emb(F0["ab"], 0, 1)
            res["exchange_three_site"] = rel_residual(lhs, rhs)
        if "classical_skew" in worst:
            res["classical_skew"] = rel_residual(r["ab"], -swap(model.classical(ctx, -qab)))
        if "f0_symmetry" in worst:
            res["f0_symmetry"] = rel_residual(F0["ab"], swap(model.classical_dq(ctx, -qab)))
        if "classical_limit" in worst:
            res["classical_limit"] = rel_residual(classical_limit_estimate(model, ctx, qab), r["ab"])

        for k, v in res.items():
            worst[k] = max(worst[k], v)

    report = CheckReport("rmatrix", metadata={"model": model.name, "context": ctx.describe(),
                                              "unitarity_normalization": {"kappa": model.kappa,
                                                                          "z_scale": model.z_scale}})
    for k in names:
        report.add(k, worst[k], tolerance, sampler.count, sampler.seed)
    report.wall_time = time.perf_counter() - t0
    return report
