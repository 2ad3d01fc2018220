"""Batch front-end: scenario configs in, deterministic CSV/JSON artifacts out.

A scenario is a JSON file with the keys

    name       run identifier (used for the default output directory)
    params     PhysParams fields
    mesh       {"dim": 1|2, "n": int}
    time       {"dt": float, "T": float, "theta": float}
    initial    any of p0/u0/d0/p1, each a catalog field entry
    sources    {"F": entry|null, "S": entry|null}, entries are
               {"space": {...}, "time": {...}} (bare field = constant in time)
    outputs    {"directory": str, "which": [trajectory|ledger|identities|
               spectrum], "identities": [names], "store_every": int,
               "full_fields": bool}
    seed       int, feeds any random broadband fields
    tolerances {"identity": float, "balance": float}  (used with --strict)

Unknown keys are rejected.  Floating-point output uses 17 significant
digits, so identical config + seed reproduces byte-identical files.  The
manifest echoes the config with a content hash; feeding a manifest back to
``run`` reproduces the outputs.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 verification
failure under --strict.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import energy_ledger, identity_residual
from .errors import ConfigError, PvelabError
from .fem import Space, assemble_forms, build_mesh, norm, project_function
from .initial import InitialSpec
from .operators import Operators, SolverConfig
from .params import PhysParams, classify_regime
from .reductions import build_first_order_generator, spectrum_report
from .sources import SourceSpec, make_field, make_source_pair
from .timestepper import run as run_trajectory

_TOP_KEYS = {"name", "params", "mesh", "time", "initial", "sources",
             "outputs", "seed", "tolerances"}
_PARAM_KEYS = {"lambda_e", "mu", "alpha", "c0", "kappa", "delta1", "delta2",
               "lambda_star"}


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _content_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _load_config(path_or_dict) -> dict:
    if isinstance(path_or_dict, dict):
        cfg = path_or_dict
    else:
        try:
            cfg = json.loads(Path(path_or_dict).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if "config" in cfg and "content_hash" in cfg:  # a manifest round-trip
        cfg = cfg["config"]
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for req in ("params", "mesh", "time"):
        if req not in cfg:
            raise ConfigError(f"missing config section {req!r}")
    bad = set(cfg["params"]) - _PARAM_KEYS
    if bad:
        raise ConfigError(f"unknown parameter keys: {sorted(bad)}")
    return cfg


def _build_inputs(cfg: dict, dense_threshold: int | None):
    from .errors import InvalidParams

    try:
        params = PhysParams(**cfg["params"])
        regime = classify_regime(params)
    except (TypeError, InvalidParams) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc
    mesh_cfg = cfg["mesh"]
    mesh = build_mesh(int(mesh_cfg.get("dim", 1)), int(mesh_cfg["n"]))
    bundle = assemble_forms(mesh, params)
    sc = SolverConfig()
    if dense_threshold is not None:
        sc.dense_threshold = dense_threshold
    ops = Operators(bundle, config=sc)

    seed = int(cfg.get("seed", 0))
    dim = mesh.dim

    def field_entry(spec, kind):
        if spec is None:
            return None
        spec = dict(spec)
        spec.setdefault("seed", seed)
        f = make_field(spec, dim, kind)
        space = (Space.PRESSURE_ZERO_MEAN if kind == "pressure"
                 else Space.DISPLACEMENT)
        return project_function(bundle, f, space).coeffs

    init_cfg = cfg.get("initial", {})
    bad = set(init_cfg) - {"p0", "u0", "d0", "p1"}
    if bad:
        raise ConfigError(f"unknown initial keys: {sorted(bad)}")
    init = InitialSpec(
        p0=field_entry(init_cfg.get("p0"), "pressure"),
        u0=field_entry(init_cfg.get("u0"), "displacement"),
        d0=field_entry(init_cfg.get("d0"), "pressure"),
        p1=field_entry(init_cfg.get("p1"), "pressure"),
    )
    src_cfg = cfg.get("sources", {})
    bad = set(src_cfg) - {"F", "S"}
    if bad:
        raise ConfigError(f"unknown source keys: {sorted(bad)}")
    F, F_t = make_source_pair(src_cfg.get("F"), dim, "displacement")
    S, S_t = make_source_pair(src_cfg.get("S"), dim, "pressure")
    sources = SourceSpec(F=F, S=S, F_t=F_t, S_t=S_t)
    return params, regime, bundle, ops, init, sources


def run_scenario(config, out_dir: str | None = None, strict: bool = False,
                 dense_threshold: int | None = None) -> int:
    """Execute one scenario; returns the process exit status."""
    try:
        cfg = _load_config(config)
        params, regime, bundle, ops, init, sources = _build_inputs(
            cfg, dense_threshold)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_cfg = cfg.get("outputs", {})
    name = cfg.get("name", "scenario")
    directory = Path(out_dir) if out_dir else Path(out_cfg.get("directory", name))
    directory.mkdir(parents=True, exist_ok=True)
    which = out_cfg.get("which", ["trajectory", "ledger"])
    tcfg = cfg["time"]
    tol = cfg.get("tolerances", {})

    try:
        traj = run_trajectory(
            ops, init, sources=sources, dt=float(tcfg["dt"]),
            T=float(tcfg["T"]), theta=float(tcfg.get("theta", 0.5)),
            store_every=int(out_cfg.get("store_every", 1)),
        )
    except PvelabError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3

    written: list[str] = []
    failures: list[str] = []

    if "trajectory" in which:
        from .fem import FieldVec

        header = ["t", "p_L2", "p_V", "u_L2", "u_E", "zeta_L2"]
        rows = []
        for i, t in enumerate(traj.times):
            pv = FieldVec(traj.p[i], Space.PRESSURE_ZERO_MEAN, bundle.mesh)
            uv = FieldVec(traj.u[i], Space.DISPLACEMENT, bundle.mesh)
            zv = FieldVec(traj.zeta[i], Space.PRESSURE_ZERO_MEAN, bundle.mesh)
            row = [t, norm(bundle, pv, "L2"), norm(bundle, pv, "Vnorm"),
                   norm(bundle, uv, "L2"), norm(bundle, uv, "Enorm"),
                   norm(bundle, zv, "L2")]
            rows.append(row)
        if out_cfg.get("full_fields"):
            header += [f"p{i}" for i in range(bundle.n_pressure)]
            rows = [r + list(traj.p[i]) for i, r in enumerate(rows)]
        _write_csv(directory / "trajectory.csv", header, rows)
        written.append("trajectory.csv")

    ledger = None
    if "ledger" in which:
        ledger = energy_ledger(traj)
        _write_csv(
            directory / "ledger.csv",
            ["t", "elastic", "storage", "viscous_cum", "darcy_cum",
             "consolidation_cum", "work_cum", "balance_residual"],
            zip(ledger.times, ledger.elastic, ledger.storage,
                ledger.viscous_cum, ledger.darcy_cum,
                ledger.consolidation_cum, ledger.work_cum,
                ledger.balance_residual),
        )
        written.append("ledger.csv")
        if strict:
            btol = float(tol.get("balance", 1e-8))
            e0 = max(ledger.total_energy[0], 1e-300)
            worst = float(np.abs(ledger.balance_residual[1:]).max()) / e0 \
                if len(ledger.times) > 1 else 0.0
            if traj.theta == 0.5 and params.delta2 == 0 and worst > btol:
                failures.append(f"balance residual {worst:.3e} > {btol:g}")

    if "identities" in which:
        names = out_cfg.get("identities", [])
        rows = []
        itol = float(tol.get("identity", 1e-5))
        for nm in names:
            try:
                res = identity_residual(ops, traj, nm)
            except PvelabError as exc:
                print(f"config error: identity {nm}: {exc}", file=sys.stderr)
                return 2
            for t, v in zip(res.times, res.series):
                rows.append([nm, t, v, res.integrated, res.scale])
            if strict:
                rel = abs(res.integrated) / res.scale
                if res.kind == "equality" and rel > itol:
                    failures.append(f"identity {nm} residual {rel:.3e} > {itol:g}")
                if res.kind == "inequality" and res.integrated > itol * res.scale:
                    failures.append(f"inequality {nm} violated")
        lines = ["identity,t,residual,integrated,scale"]
        for nm, t, v, integ, scale in rows:
            lines.append(f"{nm},{_fmt(t)},{_fmt(v)},{_fmt(integ)},{_fmt(scale)}")
        (directory / "identities.csv").write_text("\n".join(lines) + "\n")
        written.append("identities.csv")

    if "spectrum" in which:
        try:
            gen = build_first_order_generator(ops)
            rep = spectrum_report(gen)
        except PvelabError as exc:
            print(f"config error: spectrum: {exc}", file=sys.stderr)
            return 2
        payload = {
            "n_modes": gen.m,
            "spectral_abscissa": rep.spectral_abscissa,
            "sector_ratio": rep.sector_ratio,
            "min_real_gap": rep.min_real_gap,
            "eigenvalues": [[float(z.real), float(z.imag)]
                            for z in np.sort_complex(rep.eigenvalues)],
        }
        (directory / "spectrum.json").write_text(
            json.dumps(payload, indent=1, sort_keys=True) + "\n")
        written.append("spectrum.json")

    manifest = {
        "config": cfg,
        "content_hash": _content_hash(cfg),
        "regime": {"kind": regime.kind.value,
                   "compressibility": regime.compressibility.value},
        "version": __version__,
        "outputs": sorted(written),
        "strict_failures": failures,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    if strict and failures:
        for f in failures:
            print(f"verification failure: {f}", file=sys.stderr)
        return 4
    return 0


def _run_one(args):
    return run_scenario(*args)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pvelab",
        description="coupled consolidation runs and verification suites")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute scenario configs")
    p_run.add_argument("configs", nargs="+")
    p_run.add_argument("--out", default=None,
                       help="output directory (single scenario only)")
    p_run.add_argument("--strict", action="store_true")
    p_run.add_argument("--dense-mode", type=int, default=None,
                       help="dense-mode threshold override")
    p_run.add_argument("--threads", type=int, default=1)

    p_ver = sub.add_parser("verify", help="run the verification suite")
    p_ver.add_argument("--level", choices=["quick", "full"], default="quick")
    p_ver.add_argument("--json", default=None, help="write report JSON here")

    args = parser.parse_args(argv)

    if args.cmd == "run":
        if args.out and len(args.configs) > 1:
            print("--out applies to a single scenario", file=sys.stderr)
            return 2
        jobs = [(c, args.out, args.strict, args.dense_mode)
                for c in args.configs]
        if args.threads > 1 and len(jobs) > 1:
            with concurrent.futures.ProcessPoolExecutor(args.threads) as ex:
                codes = list(ex.map(_run_one, jobs))
        else:
            codes = [run_scenario(*j) for j in jobs]
        return max(codes)

    from .acceptance import verify_suite

    report = verify_suite(level=args.level)
    for r in report.results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] criterion {r.cid:>2}  {r.name}  ({r.runtime:.1f}s)")
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    print(f"{'all criteria passed' if report.passed else 'FAILURES PRESENT'}")
    return 0 if report.passed else 4


if __name__ == "__main__":
    sys.exit(main())
