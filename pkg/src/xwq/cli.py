"""Command-line entry point ``xwq``.

    xwq <basis|kernel|propagate|squeeze|sweep> --config CONFIG --out DIR [--threads N] [--strict]

Exit codes: 0 success, 1 partial sweep failure, 2 parse error, 3 validation
error, 4 numerical-accuracy failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .basis import XWaveMode, field_energy, orthonormality_gram, profile_closed_form, synthesize_envelope, xwave_profile
from .config import PIPELINES, ConfigParseError, ConfigValidationError, RunConfig, load_config, override, validate
from .errors import AccuracyError, AccuracyWarning, DomainError, XWQError
from .grids import CoefficientFunction, Field1D, RadialGrid, uniform_z
from .io import dump_json, sha256, write_array, write_csv
from .kernel import KernelIndex, SigmaProfile, chi_vertex, kappa_overlap, reduced_coupling, regime_classify, regime_lengths, sigma_profile
from .propagation import PropagationConfig, nlse_split_step
from .quantum import homodyne_variance, mz_squeezing_experiment, propagate_fluctuations, vacuum_state

EXIT_OK, EXIT_PARTIAL, EXIT_PARSE, EXIT_VALIDATION, EXIT_ACCURACY = 0, 1, 2, 3, 4


class StrictAccuracyError(AccuracyError):
    """Raised under ``--strict`` when a pipeline emitted accuracy warnings."""


# ---------------------------------------------------------------------------
# shared builders


def _radial_grid(cfg: RunConfig) -> RadialGrid:
    g = cfg.section("grid")
    z = uniform_z(g["nz"], g["z_extent"])
    if g["radial"] == "bessel":
        return RadialGrid.bessel(z, g["r_extent"], g["nr"])
    return RadialGrid.legendre(z, g["r_extent"], g["nr"])


def _pulse(cfg: RunConfig) -> Field1D:
    p = cfg.section("pulse")
    s = uniform_z(p["nz"], p["extent"])
    amp = math.sqrt(p["photon_number"] / (math.sqrt(math.pi) * p["width"]))
    return Field1D.gaussian(s, p["width"], amplitude=amp)


def _sigma(cfg: RunConfig, z) -> SigmaProfile:
    mode = cfg.section("mode")
    prof = sigma_profile(mode["q"], z, mode["delta"], cfg.medium)
    if cfg.section("device")["sigma"] == "constant":
        return SigmaProfile.constant(z, reduced_coupling(prof)) if cfg.medium.chi != 0 else SigmaProfile.constant(z, 0.0)
    return prof


def _solver(cfg: RunConfig) -> PropagationConfig:
    s = cfg.section("solver")
    return PropagationConfig(dt=s["dt"], T=s["T"], save_every=s["save_every"])


# ---------------------------------------------------------------------------
# pipelines: each returns (files, monitors)


def run_basis(cfg: RunConfig, out: Path):
    mode_s = cfg.section("mode")
    medium = cfg.medium
    grid = _radial_grid(cfg)
    mode = XWaveMode(mode_s["q"], mode_s["p"], mode_s["delta"])
    psi = xwave_profile(mode, grid, medium)
    closed = profile_closed_form(mode, grid.z, grid.r, medium)
    files = write_array(out / "psi.bin", psi.values, {**grid.metadata(), "q": mode.q, "p": mode.p, "delta": mode.delta, "units": "natural"})
    gram = orthonormality_gram(mode_s["q_max"], mode.delta, medium)
    g = gram.gram
    files.append(write_csv(out / "gram.csv", ["q", "q_prime", "G"],
                           [(i, j, g[i, j]) for i in range(g.shape[0]) for j in range(g.shape[1])]))
    lo, hi = mode_s["p_band"]
    coeff = CoefficientFunction.gaussian(mode.q, 0.5 * (lo + hi), (hi - lo) / 16.0, n=64)
    env = synthesize_envelope([coeff], 0.0, grid, medium, delta=mode.delta)
    energy = field_energy(env, [coeff])
    off = g - np.diag(np.diag(g))
    monitors = {
        "closed_form_rel_linf": float(np.max(np.abs(psi.values - closed)) / np.max(np.abs(closed))),
        "gram_offdiag_rel": float(np.max(np.abs(off)) / g[0, 0]),
        "c_norm": gram.c_norm,
        "parseval_ratio": energy.ratio,
    }
    files.append(dump_json(out / "basis_summary.json", monitors))
    return files, monitors


def run_kernel(cfg: RunConfig, out: Path):
    medium = cfg.medium
    mode = cfg.section("mode")
    g = cfg.section("grid")
    z = uniform_z(g["nz"], g["z_extent"])
    sig = sigma_profile(mode["q"], z, mode["delta"], medium)
    files = [sig.to_csv(out / "sigma.csv")] + sig.write_binary(out / "sigma.bin", {"units": "natural"})
    monitors = {"sigma_0": reduced_coupling(sig), "sigma_weighted": reduced_coupling(sig, weighted=True) if medium.chi else 0.0}
    for t in cfg.section("kernel")["indices"]:
        idx = KernelIndex(*t)
        prof = kappa_overlap(idx, z, mode["delta"], medium)
        tag = "".join(str(i) for i in t)
        files.append(prof.to_csv(out / f"kappa_{tag}.csv"))
        if cfg.section("kernel")["vertex"]:
            try:
                vx = chi_vertex(prof)
            except AccuracyError as exc:
                warnings.warn(f"vertex {tag} skipped: {exc} ({exc.diagnostics})", AccuracyWarning, stacklevel=1)
                monitors[f"vertex_{tag}"] = "insufficient_decay"
            else:
                files += write_array(out / f"chi_{tag}.bin", vx.chi_values, {"nu0": vx.nu_samples[0], "dnu": float(vx.nu_samples[1] - vx.nu_samples[0])})
                monitors[f"vertex_{tag}"] = "ok"
    width = cfg.section("pulse")["width"]
    l_disp, l_diff = regime_lengths(medium, mode["delta"], width, mode["q"])
    monitors.update({"L_disp": l_disp, "L_diff": l_diff,
                     "regime": regime_classify(medium, mode["delta"], width, mode["q"]).value})
    files.append(dump_json(out / "kernel_summary.json", monitors))
    return files, monitors


def run_propagate(cfg: RunConfig, out: Path):
    phi0 = _pulse(cfg)
    sig = _sigma(cfg, phi0.z)
    traj = nlse_split_step(phi0, sig, _solver(cfg), cfg.medium)
    files = traj.export(out)
    monitors = {"norm_drift": traj.norm_drift(), "energy_drift": traj.energy_drift(),
                "final_width": traj.final.width(), "steps": traj.meta["steps"]}
    files.append(dump_json(out / "propagate_summary.json", monitors))
    return files, monitors


def run_squeeze(cfg: RunConfig, out: Path):
    phi0 = _pulse(cfg)
    sig = _sigma(cfg, phi0.z)
    dev = cfg.section("device")
    solver = _solver(cfg)
    files = []
    if dev["mz"]:
        mismatch = dev["arm_mismatch"]
        sig_b = sig.scaled(1.0 + mismatch) if mismatch else None
        bright, dark, state = mz_squeezing_experiment(phi0, sig, solver, cfg.medium, sigma_b=sig_b, n_theta=dev["n_theta"])
        files += [bright.to_csv(out / "bright.csv"), dark.to_csv(out / "dark.csv")]
        monitors = {"bright_min_ratio": bright.min_ratio, "bright_theta_opt": bright.theta_opt,
                    "dark_min_ratio": dark.min_ratio, "dark_theta_opt": dark.theta_opt,
                    **{k: v for k, v in state.meta.items()}}
        if cfg.section("output")["green"]:
            files += write_array(out / "green_u.bin", state.green_u) + write_array(out / "green_v.bin", state.green_v)
    else:
        st = propagate_fluctuations(vacuum_state(phi0), sig, solver, cfg.medium)
        lo = st.mean.normalized() if st.mean.norm() > 0 else phi0.normalized()
        res = homodyne_variance(st, lo, n_theta=dev["n_theta"])
        files.append(res.to_csv(out / "squeezing.csv"))
        monitors = {"min_ratio": res.min_ratio, "theta_opt": res.theta_opt, "max_ratio": res.max_ratio,
                    "symplectic_error": st.meta["symplectic_error"], "peak_nonlinear_phase": st.meta["peak_nonlinear_phase"]}
        if cfg.section("output")["green"]:
            files += st.write_green(out)
    files.append(dump_json(out / "squeeze_summary.json", monitors))
    return files, monitors


RUNNERS = {"basis": run_basis, "kernel": run_kernel, "propagate": run_propagate, "squeeze": run_squeeze}


# ---------------------------------------------------------------------------
# orchestration


def _file_entries(files, out: Path):
    seen, entries = set(), []
    for f in files:
        f = Path(f)
        rel = f.relative_to(out).as_posix()
        if rel in seen:
            continue
        seen.add(rel)
        entries.append({"path": rel, "sha256": sha256(f), "bytes": f.stat().st_size})
    return sorted(entries, key=lambda e: e["path"])


def _run_one(cfg: RunConfig, pipeline: str, out: Path, strict: bool):
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AccuracyWarning)
        files, monitors = RUNNERS[pipeline](cfg, out)
    notes = sorted({str(w.message) for w in caught if issubclass(w.category, AccuracyWarning)})
    monitors = {**monitors, "accuracy_warnings": notes}
    if strict and notes:
        raise StrictAccuracyError("accuracy warnings under --strict: " + "; ".join(notes), warnings=notes)
    return files, monitors, time.perf_counter() - t0


def write_manifest(out: Path, cfg: RunConfig, subcommand: str, files, monitors, timings) -> Path:
    """Single-writer manifest listing every produced file with its checksum."""
    manifest = {
        "artifact_version": __version__,
        "subcommand": subcommand,
        "config_hash": cfg.hash(),
        "config": cfg.echo(),
        "files": _file_entries(files, out),
        "timings_s": timings,
        "monitors": monitors,
    }
    return dump_json(out / "manifest.json", manifest)


def run(cfg: RunConfig, subcommand: str, out, strict: bool = False) -> dict:
    """Execute one pipeline and write its manifest; returns the manifest dict."""
    if subcommand not in RUNNERS:
        raise DomainError(f"unknown pipeline {subcommand!r}")
    out = Path(out)
    files, monitors, elapsed = _run_one(cfg, subcommand, out, strict)
    path = write_manifest(out, cfg, subcommand, files, monitors, {"total": elapsed})
    import json

    return json.loads(path.read_text())


def _scalar_items(d: dict):
    for k, v in sorted(d.items()):
        if isinstance(v, (bool, int, float, str)) and k != "accuracy_warnings":
            yield k, v


def sweep(cfg: RunConfig, out, threads: int = 1, strict: bool = False):
    """Run the sweep pipeline once per value; returns (manifest dict, any_failed)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.section("sweep")
    values = spec["values"]
    pipeline = spec["pipeline"]

    def row(i_value):
        i, value = i_value
        row_dir = out / f"row_{i:03d}"
        try:
            row_cfg = validate(override(cfg.raw, spec["parameter"], value))
            files, monitors, elapsed = _run_one(row_cfg, pipeline, row_dir, strict)
            write_manifest(row_dir, row_cfg, pipeline, files, monitors, {"total": elapsed})
            return {"index": i, "value": value, "status": "ok", "error": "", "monitors": monitors,
                    "files": files + [row_dir / "manifest.json"], "elapsed": elapsed}
        except Exception as exc:  # noqa: BLE001 - every row failure is recorded, never fatal
            return {"index": i, "value": value, "status": "failed", "error": f"{type(exc).__name__}: {exc}".replace("\n", " "),
                    "monitors": {}, "files": [], "elapsed": 0.0}

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(row, enumerate(values)))
    keys = sorted({k for r in rows for k, _ in _scalar_items(r["monitors"])})
    table = [[r["index"], r["value"], r["status"], r["error"]] + [dict(_scalar_items(r["monitors"])).get(k, "") for k in keys] for r in rows]
    summary = write_csv(out / "sweep_summary.csv", ["index", "value", "status", "error"] + keys, table)
    files = [summary] + [f for r in rows for f in r["files"]]
    monitors = {"rows": len(rows), "failed": sum(r["status"] != "ok" for r in rows), "parameter": spec["parameter"], "pipeline": pipeline}
    timings = {"total": time.perf_counter() - t0, "rows": [r["elapsed"] for r in rows]}
    path = write_manifest(out, cfg, "sweep", files, monitors, timings)
    import json

    return json.loads(path.read_text()), monitors["failed"] > 0


# ---------------------------------------------------------------------------
# entry point


def _threads(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("XWQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigValidationError([f"XWQ_THREADS: expected an integer, got {env!r}"]) from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xwq", description="Quantum X-wave simulations: basis, kernels, propagation and squeezing.")
    p.add_argument("subcommand", choices=PIPELINES + ("sweep",))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads for sweeps (default: $XWQ_THREADS or 1)")
    p.add_argument("--strict", action="store_true", help="treat accuracy warnings as failures (exit code 4)")
    p.add_argument("--version", action="version", version=f"xwq {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        threads = _threads(args.threads)
        if args.threads is not None and args.threads < 1:
            raise ConfigValidationError(["--threads: must be >= 1"])
        if args.subcommand == "sweep":
            if cfg.raw.get("sweep") is None:
                raise ConfigValidationError(["sweep: section is required for the sweep subcommand"])
            manifest, failed = sweep(cfg, args.out, threads, args.strict)
            print(f"sweep: {manifest['monitors']['rows']} rows, {manifest['monitors']['failed']} failed -> {args.out}")
            return EXIT_PARTIAL if failed else EXIT_OK
        manifest = run(cfg, args.subcommand, args.out, args.strict)
        print(f"{args.subcommand}: wrote {len(manifest['files'])} files -> {args.out}")
        return EXIT_OK
    except ConfigParseError as exc:
        print(f"xwq: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"xwq: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AccuracyError as exc:
        print(f"xwq: accuracy failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_ACCURACY
    except DomainError as exc:
        print(f"xwq: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
