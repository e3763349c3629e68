"""Command-line front end.

    laxkit verify {scalar|rmatrix|lax|chain-lax} [options]
    laxkit chain  {commute|spectrum|crosscheck}  [options]

Exit status: 0 when every check passes, 1 on a failed check, 2 on a usage or
configuration error. A flat JSON config (``--config``) supplies defaults that
individual flags override.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from typing import Any

import numpy as np

from . import calogero, chain
from .elliptic import ELLIPTIC, TRIGONOMETRIC, EllipticContext, scalar_identity_suite
from .errors import HermiticityError, LaxkitError, SeriesCapError
from .operators import dump_operator, frobenius_norm, trace
from .report import CheckReport, Sampler
from .rmatrix import model_check_suite, parse_model, r_quantum

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# every config key, with its default; None means "target-specific default"
DEFAULTS: dict[str, Any] = {
    "tau": "0+1i",
    "backend": None,
    "series_tol": 1e-16,
    "model": None,
    "N": None,
    "positions": None,
    "samples": None,
    "seed": 0,
    "min_sep": 0.05,
    "flow": None,
    "kind": "scalar",
    "nu": 0.8,
    "phases": 5,
    "z_samples": 3,
    "primed": "distinct",
    "tolerance": None,
    "control_tolerance": None,
    "ablate_last_line": False,
    "ablate_f0": False,
    "unrescaled_coupling": False,
    "which": "h2",
    "force": False,
    "json": None,
    "dump": None,
    "out": None,
    "timing": False,
}

TARGET_DEFAULTS = {
    "scalar": {"samples": 100, "tolerance": 1e-10},
    "rmatrix": {"model": "bb:N=2", "samples": 50, "tolerance": 1e-9},
    "lax": {"model": "bb:N=2", "N": 3, "tolerance": 1e-9, "control_tolerance": 1e-3},
    "chain-lax": {"model": "xyz", "N": 4, "tolerance": 1e-10, "control_tolerance": 1e-3},
    "commute": {"model": "xyz", "N": 4, "tolerance": 1e-10, "control_tolerance": 1e-4},
    "spectrum": {"model": "xyz", "N": 4, "tolerance": 1e-10},
    "crosscheck": {"model": "perm:N=2:elliptic", "N": 4, "tolerance": None},
}

_COMPLEX = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([+-])\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*i\s*$")


class UsageError(Exception):
    pass


def parse_complex(text) -> complex:
    """"re+imi" (e.g. "0+1i", "0.5-0.8i"); plain numbers are accepted too."""
    if isinstance(text, (int, float, complex)) and not isinstance(text, bool):
        return complex(text)
    m = _COMPLEX.match(str(text))
    if m is None:
        try:
            return complex(float(text))
        except (TypeError, ValueError):
            raise UsageError(f"cannot parse complex number {text!r}; use the form 0+1i") from None
    re_part = float(m.group(1))
    im_part = float(m.group(3)) if m.group(3) is not None else 1.0
    return complex(re_part, -im_part if m.group(2) == "-" else im_part)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config must be a flat JSON object")
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in doc.items():
        if isinstance(v, dict):
            raise UsageError(f"config key {k!r} must not be nested")
    return doc


def resolve(args: argparse.Namespace, target: str) -> dict:
    """Defaults < target defaults < config file < command-line flags."""
    cfg = dict(DEFAULTS)
    cfg.update({k: v for k, v in TARGET_DEFAULTS[target].items()})
    if args.config:
        cfg.update(load_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


def make_context(cfg: dict, model=None) -> EllipticContext:
    backend = cfg["backend"]
    if backend in ("trig", "trigonometric"):
        backend = TRIGONOMETRIC
    if backend is None:
        backend = model.backends[0] if model is not None else ELLIPTIC
    if backend not in (ELLIPTIC, TRIGONOMETRIC):
        raise UsageError(f"unknown backend {cfg['backend']!r}")
    tau = parse_complex(cfg["tau"])
    if backend == TRIGONOMETRIC:
        return EllipticContext(tau=1j, backend=TRIGONOMETRIC, series_tol=float(cfg["series_tol"]))
    return EllipticContext(tau=tau, backend=backend, series_tol=float(cfg["series_tol"]))


def _positions(cfg):
    pos = cfg["positions"]
    if pos is None:
        return None
    if isinstance(pos, str):
        try:
            return tuple(float(x) for x in pos.split(","))
        except ValueError as exc:
            raise UsageError(f"bad positions {pos!r}") from exc
    return tuple(float(x) for x in pos)


def _chain_spec(cfg) -> chain.ChainSpec:
    model = parse_model(cfg["model"])
    ctx = make_context(cfg, model)
    return chain.ChainSpec(int(cfg["N"]), model, ctx, _positions(cfg))


def _flows(cfg):
    fl = cfg["flow"]
    if fl is None:
        return calogero.FLOWS
    fl = int(fl)
    if fl not in calogero.FLOWS:
        raise UsageError(f"flow must be 2 or 3, got {fl}")
    return (fl,)


def _sampler(cfg) -> Sampler:
    return Sampler(count=int(cfg["samples"]), seed=int(cfg["seed"]), min_sep=float(cfg["min_sep"]))


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------


def run_scalar(cfg) -> tuple[CheckReport, Any]:
    ctx = make_context(cfg)
    return scalar_identity_suite(ctx, _sampler(cfg), float(cfg["tolerance"])), None


def run_rmatrix(cfg):
    model = parse_model(cfg["model"])
    ctx = make_context(cfg, model)
    sampler = _sampler(cfg)
    rep = model_check_suite(model, ctx, sampler, float(cfg["tolerance"]))
    rng = np.random.default_rng(sampler.seed)
    z = calogero.sample_spectral(rng, ctx, model, 1)[0]
    q = float(rng.uniform(0.1, 0.9))
    return rep, (lambda: r_quantum(model, ctx, z, q))


def run_lax(cfg):
    kind = cfg["kind"]
    if kind not in ("scalar", "rmv"):
        raise UsageError(f"kind must be scalar or rmv, got {kind!r}")
    model = parse_model(cfg["model"]) if kind == "rmv" else None
    ctx = make_context(cfg, model)
    n = int(cfg["N"])
    rep = calogero.lax_suite(
        kind, ctx, n=n, flows=_flows(cfg), model=model, phases=int(cfg["phases"]),
        z_per_phase=int(cfg["z_samples"]), seed=int(cfg["seed"]), nu=float(cfg["nu"]),
        tolerance=float(cfg["tolerance"]), control_tolerance=float(cfg["control_tolerance"]),
        ablate_f0=bool(cfg["ablate_f0"]), ablate_last_line=bool(cfg["ablate_last_line"]),
        unrescaled=bool(cfg["unrescaled_coupling"]), primed=cfg["primed"],
    )
    dumper = None
    if model is not None:
        rng = np.random.default_rng(int(cfg["seed"]))
        ph = calogero.random_phase(n, rng, nu=float(cfg["nu"]))
        z = calogero.sample_spectral(rng, ctx, model, 1)[0]
        dumper = lambda: calogero.rmv_lax(model, ph, z, ctx)
    return rep, dumper


def _chain_zs(cfg, spec):
    rng = np.random.default_rng(int(cfg["seed"]))
    return calogero.sample_spectral(rng, spec.ctx, spec.model, int(cfg["z_samples"]))


def run_chain_lax(cfg):
    spec = _chain_spec(cfg)
    rep = chain.chain_lax_suite(spec, _chain_zs(cfg, spec), float(cfg["tolerance"]), seed=int(cfg["seed"]))
    return rep, (lambda: chain.hamiltonian(spec, cfg["which"]))


def run_commute(cfg):
    spec = _chain_spec(cfg)
    rep = chain.chain_commute_suite(spec, float(cfg["tolerance"]))
    return rep, (lambda: chain.hamiltonian(spec, cfg["which"]))


def run_crosscheck(cfg):
    spec = _chain_spec(cfg)
    kw = {}
    if cfg["tolerance"] is not None:
        kw = {"tol_h2": float(cfg["tolerance"]), "tol_h3": float(cfg["tolerance"])}
    return chain.chain_crosscheck_suite(spec, **kw), (lambda: chain.hamiltonian(spec, cfg["which"]))


def run_spectrum(cfg):
    spec = _chain_spec(cfg)
    which = cfg["which"]
    t0 = time.perf_counter()
    h = chain.hamiltonian(spec, which)
    rep = CheckReport("chain-spectrum", metadata={"model": spec.model.name, "N": spec.n_sites, "which": which})
    tol = float(cfg["tolerance"])
    try:
        res = chain.spectrum(spec, which, herm_tol=tol, force=bool(cfg["force"]), h=h)
    except HermiticityError as exc:
        rep.add("hermiticity", exc.deviation, tol, note="use --force for the non-Hermitian spectrum")
        return rep, (lambda: h), None
    if res.hermitian:
        rep.add("hermiticity", res.deviation, tol)
    else:
        rep.metadata["hermiticity_deviation"] = res.deviation
    tr = trace(h)
    rep.add("eigenvalue_sum", abs(complex(np.sum(res.values)) - tr) / max(1.0, abs(tr), frobenius_norm(h)), 1e-9)
    rep.metadata["levels"] = len(res.values)
    rep.wall_time = time.perf_counter() - t0
    return rep, (lambda: h), res


TARGETS = {
    "scalar": run_scalar,
    "rmatrix": run_rmatrix,
    "lax": run_lax,
    "chain-lax": run_chain_lax,
    "commute": run_commute,
    "crosscheck": run_crosscheck,
    "spectrum": run_spectrum,
}


# ---------------------------------------------------------------------------
# argparse
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat JSON config; flags override its keys")
    p.add_argument("--seed", type=int, help="sampler seed (default 0)")
    p.add_argument("--json", metavar="OUT", help="write the JSON report here ('-' for stdout)")
    p.add_argument("--dump", metavar="OUT", help="write an operator in the JSON operator schema")
    p.add_argument("--out", metavar="OUT", help="CSV output (chain spectrum)")
    p.add_argument("--tau", help='modular parameter as "re+imi", e.g. 0+1i')
    p.add_argument("--backend", choices=["elliptic", "trig", "trigonometric"])
    p.add_argument("--series-tol", dest="series_tol", type=float)
    p.add_argument("--model", help="bb:N=2, perm:N=2:elliptic, perm:N=2:trig, xyz, xxz")
    p.add_argument("--N", dest="N", type=int, help="particles / chain sites")
    p.add_argument("--positions", help="comma-separated chain positions")
    p.add_argument("--samples", type=int, help="number of seeded samples")
    p.add_argument("--min-sep", dest="min_sep", type=float)
    p.add_argument("--tolerance", type=float, help="override the main tolerance")
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON report")
    p.add_argument("--quiet", action="store_true", help="suppress the per-check lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laxkit", description="Numerical verification of R-matrix-valued "
                                     "Lax pairs and long-range spin chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run an identity or Lax suite")
    v.add_argument("target", choices=["scalar", "rmatrix", "lax", "chain-lax"])
    _common(v)
    v.add_argument("--flow", type=int, choices=[2, 3])
    v.add_argument("--kind", choices=["scalar", "rmv"])
    v.add_argument("--nu", type=float)
    v.add_argument("--phases", type=int)
    v.add_argument("--z-samples", dest="z_samples", type=int)
    v.add_argument("--primed", choices=["distinct", "c-only"])
    v.add_argument("--ablate-last-line", dest="ablate_last_line", action="store_true")
    v.add_argument("--ablate-f0", dest="ablate_f0", action="store_true")
    v.add_argument("--unrescaled-coupling", dest="unrescaled_coupling", action="store_true")
    v.add_argument("--which", choices=["h2", "h3"])

    c = sub.add_parser("chain", help="frozen spin-chain actions")
    c.add_argument("action", choices=["commute", "spectrum", "crosscheck"])
    _common(c)
    c.add_argument("--which", choices=["h2", "h3"])
    c.add_argument("--force", action="store_true", help="non-Hermitian spectrum instead of an error")
    c.add_argument("--z-samples", dest="z_samples", type=int)
    return parser


def _emit(rep: CheckReport, cfg: dict, quiet: bool) -> None:
    if not quiet:
        for line in rep.summary_lines():
            print(line)
        if rep.conjecture_status != "not-applicable":
            print(f"conjecture: {rep.conjecture_status}")
    out = cfg["json"]
    if out:
        text = rep.to_json(include_timing=bool(cfg["timing"])) + "\n"
        if out == "-":
            sys.stdout.write(text)
        else:
            with open(out, "w") as fh:
                fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    target = args.target if args.command == "verify" else args.action
    spectrum_result = None
    try:
        cfg = resolve(args, target)
        if cfg["out"] and target != "spectrum":
            raise UsageError("--out is only meaningful for 'chain spectrum'")
        if target == "spectrum":
            rep, dumper, spectrum_result = run_spectrum(cfg)
        else:
            rep, dumper = TARGETS[target](cfg)
        if cfg["dump"]:
            if dumper is None:
                raise UsageError(f"{target} has no operator to dump")
            dump_operator(dumper(), cfg["dump"])
        if cfg["out"] and spectrum_result is not None:
            chain.write_spectrum_csv(cfg["out"], spectrum_result)
    except (UsageError, LaxkitError, SeriesCapError, OSError, ValueError, TypeError) as exc:
        print(f"laxkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(rep, cfg, getattr(args, "quiet", False))
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
