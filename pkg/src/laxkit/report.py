"""Check records, reports and seeded samplers shared by every suite."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

REPORT_KEY = "laxkit_report_v1"
CONJECTURE_STATES = ("verified", "falsified", "not-applicable")


def rel_residual(lhs, rhs) -> float:
    """``||lhs - rhs||_F / max(1, ||lhs||_F)``; works for scalars and arrays."""
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    return float(np.linalg.norm(lhs - rhs) / max(1.0, float(np.linalg.norm(lhs))))


@dataclass
class CheckRecord:
    name: str
    max_residual: float
    tolerance: float
    samples: int = 1
    seed: int | None = None
    # "below": pass iff residual <= tolerance (identity checks);
    # "above": pass iff residual > tolerance (negative controls)
    expect: str = "below"
    note: str = ""

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.max_residual):
            return False
        if self.expect == "above":
            return self.max_residual > self.tolerance
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "samples": int(self.samples),
            "seed": self.seed,
        }
        if self.expect != "below":
            d["expect"] = self.expect
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class CheckReport:
    suite: str
    checks: list[CheckRecord] = field(default_factory=list)
    conjecture_status: str = "not-applicable"
    wall_time: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def add(self, name, residual, tolerance, samples=1, seed=None, expect="below", note="") -> CheckRecord:
        rec = CheckRecord(name, float(residual), float(tolerance), samples, seed, expect, note)
        self.checks.append(rec)
        return rec

    def extend(self, other: "CheckReport", prefix: str = "") -> None:
        for rec in other.checks:
            self.checks.append(
                CheckRecord(prefix + rec.name, rec.max_residual, rec.tolerance, rec.samples,
                            rec.seed, rec.expect, rec.note)
            )

    def __getitem__(self, name: str) -> CheckRecord:
        for rec in self.checks:
            if rec.name == name:
                return rec
        raise KeyError(name)

    def names(self) -> list[str]:
        return [rec.name for rec in self.checks]

    @property
    def passed(self) -> bool:
        return all(rec.passed for rec in self.checks)

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        body: dict[str, Any] = {
            "suite": self.suite,
            "pass": self.passed,
            "conjecture_status": self.conjecture_status,
            "checks": [rec.to_dict() for rec in self.checks],
        }
        if self.metadata:
            body["metadata"] = self.metadata
        if include_timing and self.wall_time is not None:
            body["wall_time"] = self.wall_time
        return {REPORT_KEY: body}

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        out = []
        for rec in self.checks:
            flag = "PASS" if rec.passed else "FAIL"
            op = ">" if rec.expect == "above" else "<="
            out.append(f"[{flag}] {self.suite}/{rec.name}: {rec.max_residual:.3e} (want {op} {rec.tolerance:.0e})")
        return out


@dataclass(frozen=True)
class Sampler:
    """Seeded sampling spec.

    Real parts are drawn from ``[re_lo, re_hi]``; imaginary parts from
    ``[-im_half, im_half] * im_scale`` where the caller supplies ``im_scale``
    (``Im tau`` for elliptic contexts). Every combination a suite needs is
    kept at least ``min_sep`` away from the lattice by rejection.
    """

    count: int = 100
    seed: int = 0
    re_lo: float = 0.0
    re_hi: float = 1.0
    im_half: float = 0.25
    min_sep: float = 0.05

    def __post_init__(self):
        if self.count <= 0:
            raise ValueError("sampler needs count >= 1")
        if not self.re_lo < self.re_hi:
            raise ValueError("sampler box is empty")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def draw(self, rng: np.random.Generator, k: int, im_scale: float) -> np.ndarray:
        re = rng.uniform(self.re_lo, self.re_hi, size=k)
        im = rng.uniform(-self.im_half, self.im_half, size=k) * im_scale
        return re + 1j * im

    def points(self, k: int, im_scale: float, ok: Callable[[np.ndarray], bool], max_tries: int = 10_000):
        """Yield ``count`` arrays of ``k`` complex points accepted by ``ok``."""
        rng = self.rng()
        for _ in range(self.count):
            for _ in range(max_tries):
                pts = self.draw(rng, k, im_scale)
                if ok(pts):
                    break
            else:
                raise RuntimeError("sampler could not find admissible points; widen the box")
            yield pts
