"""Batch experiment runner.

Reads a key = value config or a named preset, runs the requested analyses,
and writes CSV/JSON datasets plus a manifest into the output directory.
Exit codes: 0 success, 2 bad config, 3 numeric failure, 4 I/O trouble.

Compute modules are imported inside the worker functions, not at module
top, so that --threads can pin the BLAS thread pools through environment
variables before numpy is first loaded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

ANALYSES = ("dynamics", "gge", "covariance", "fock-oracle", "delocalization",
            "sweep")
PRESETS = ("fig1", "table1", "sweep")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS")


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _tagged(name, spec, ext):
    return f"{name}_N{spec.n_left}_M{spec.n_right}.{ext}"


def _dump_bogoliubov(spec, outdir, files):
    from .bogoliubov import build_bogoliubov, f_matrix

    bog = build_bogoliubov(spec)
    K = spec.total_size
    joint_cols = [f"joint_{k}" for k in range(1, K + 1)]
    for name, mat in (("alpha", bog.alpha), ("beta", bog.beta)):
        fname = _tagged(name, spec, "csv")
        _write_csv(os.path.join(outdir, fname), ["pre_mode"] + joint_cols,
                   ([float(i + 1)] + list(mat[i]) for i in range(K)))
        files.append(fname)
    f = f_matrix(bog)
    fname = _tagged("f_matrix", spec, "csv")
    _write_csv(os.path.join(outdir, fname), ["joint_mode"] + joint_cols,
               ([float(i + 1)] + list(f.f[i]) for i in range(K)))
    files.append(fname)


def _run_dynamics(spec, outdir, files, threshold=0.5, skip=50.0):
    from .bogoliubov import build_bogoliubov, initial_correlations
    from .dynamics import evolve_occupations, fluctuation_series, per_mode_energy
    from .gge import conserved_charges, build_gge, gge_expectations

    bog = build_bogoliubov(spec)
    corr = initial_correlations(bog, spec.initial_state)
    series = evolve_occupations(spec, bog, corr)

    K = spec.total_size
    header = (["t"] + [f"n_{m}" for m in range(1, K + 1)]
              + ["E_N", "E_M", "E_N_plus_E_M", "E_total_joint"])
    rows = ([series.times[i]] + list(series.n_expect[i])
            + [series.e_left[i], series.e_right[i],
               series.e_left[i] + series.e_right[i], series.e_total_joint]
            for i in range(len(series.times)))
    fname = _tagged("dynamics", spec, "csv")
    _write_csv(os.path.join(outdir, fname), header, rows)
    files.append(fname)

    fluct = fluctuation_series(series, threshold=threshold,
                               relaxation_skip=skip)
    fname = _tagged("fluctuations", spec, "csv")
    _write_csv(os.path.join(outdir, fname), ["t", "ratio"],
               zip(fluct.times, fluct.ratio))
    files.append(fname)

    pme = per_mode_energy(series, spec)
    fname = _tagged("permode", spec, "csv")
    _write_csv(os.path.join(outdir, fname),
               ["t", "e_left_per_site", "e_right_per_site"],
               zip(pme.times, pme.left, pme.right))
    files.append(fname)

    ens = build_gge(conserved_charges(bog, spec.initial_state))
    summary = {
        "n_left": spec.n_left,
        "n_right": spec.n_right,
        "occupations": list(spec.initial_state.occupations),
        "long_time_avg": series.long_time_avg.tolist(),
        "gge_n": gge_expectations(bog, ens).tolist(),
        "e_left_avg": series.e_left_avg,
        "e_right_avg": series.e_right_avg,
        "e_total_joint": series.e_total_joint,
        "first_recurrence_time": fluct.first_recurrence_time,
        "recurrence_threshold": fluct.recurrence_threshold,
        "relaxation_skip": fluct.relaxation_skip,
    }
    fname = _tagged("dynamics_summary", spec, "json")
    _write_json(os.path.join(outdir, fname), summary)
    files.append(fname)
    return fluct.first_recurrence_time


def _run_gge(spec, outdir, files):
    from .bogoliubov import build_bogoliubov
    from .gge import gge_summary_json

    bog = build_bogoliubov(spec)
    fname = _tagged("gge", spec, "json")
    with open(os.path.join(outdir, fname), "w", newline="\n") as fh:
        fh.write(gge_summary_json(bog, spec.initial_state, indent=2))
        fh.write("\n")
    files.append(fname)


def _run_covariance(spec, outdir, files):
    from .covariance import joint_covariance, thermal_form_check

    cov = joint_covariance(spec)
    rep = thermal_form_check(cov, spec)
    payload = {
        "passed": rep.passed,
        "flagged_pairs": [list(p) for p in rep.flagged_pairs],
        "windows": rep.windows.tolist(),
        "max_offdiag_avg": rep.max_offdiag_avg.tolist(),
        "decay_slope": rep.decay_slope,
        "gge_occupancies": rep.gge_occupancies.tolist(),
        "b_tol": rep.b_tol,
    }
    fname = _tagged("covariance", spec, "json")
    _write_json(os.path.join(outdir, fname), payload)
    files.append(fname)


def _run_oracle(spec, outdir, files, cutoff, order):
    import numpy as np

    from .bogoliubov import build_bogoliubov, f_matrix, initial_correlations
    from .fock_oracle import (CutoffExceeded, expand_initial_state,
                              oracle_correlators, annihilation_residual,
                              constraint_residual)

    if spec.total_size > 8:
        raise CutoffExceeded(
            f"truncated-Fock oracle requested for {spec.total_size} joint "
            "modes; the brute-force basis is only practical for <= 8")
    from .model import FockExcitation, QuenchSpec

    bog = build_bogoliubov(spec)
    f = f_matrix(bog)
    state = expand_initial_state(spec, bog, f, order=order, cutoff=cutoff)
    exact = initial_correlations(bog, spec.initial_state)
    oracle = oracle_correlators(state)
    gap = max(float(np.max(np.abs(a - b))) for a, b in (
        (oracle.cdag_c, exact.cdag_c), (oracle.cdag_cdag, exact.cdag_cdag),
        (oracle.c_c, exact.c_c), (oracle.c_cdag, exact.c_cdag)))
    # the annihilation identities certify the squeezed vacuum, not states
    # with creation operators stacked on top, so measure them on the vacuum
    if spec.initial_state.total == 0:
        vac_state = state
    else:
        vac_spec = QuenchSpec(spec.left, spec.right,
                              FockExcitation.vacuum(spec.total_size),
                              spec.time_grid)
        vac_state = expand_initial_state(vac_spec, bog, f, order=order,
                                         cutoff=cutoff)
    payload = {
        "cutoff": cutoff,
        "order": order,
        "support_size": state.support_size(),
        "leakage": state.leakage,
        "vacuum_annihilation_residual": annihilation_residual(vac_state, bog),
        "vacuum_constraint_residual": constraint_residual(vac_state, f),
        "correlator_gap_vs_quadratic": gap,
    }
    fname = _tagged("oracle", spec, "json")
    _write_json(os.path.join(outdir, fname), payload)
    files.append(fname)


def _run_delocalization(spec, outdir, files, floor):
    from .bogoliubov import build_bogoliubov, f_matrix
    from .fock_oracle import expand_initial_state, delocalization_count

    bog = build_bogoliubov(spec)
    f = f_matrix(bog)
    order = 1
    big = 4 * order + 2 * spec.initial_state.total + 2
    state = expand_initial_state(spec, bog, f, order=order, cutoff=big)
    payload = {
        "count": delocalization_count(state, floor),
        "floor": floor,
        "order": order,
        "support_size": state.support_size(),
        "occupations": list(spec.initial_state.occupations),
    }
    fname = _tagged("delocalization", spec, "json")
    _write_json(os.path.join(outdir, fname), payload)
    files.append(fname)


def _run_sweep(outdir, files):
    from .gge import single_excitation_sweep

    res = single_excitation_sweep()
    payload = {
        "total_sizes": list(res.sizes),
        "delta_g_at_observation_mode": list(res.delta_values),
        "log_log_slope": res.slope,
        "vacuum_densities": list(res.vacuum_densities),
        "density_rel_change_top_octave": res.density_rel_change,
        "per_mode_energy_gap": list(res.energy_gaps),
    }
    _write_json(os.path.join(outdir, "sweep.json"), payload)
    files.append("sweep.json")


def _preset_specs(name):
    from .model import ChainSpec, FockExcitation, QuenchSpec, default_time_grid

    specs = []
    if name in ("fig1", "table1"):
        for M in (10, 16, 20):
            total = 5 + M
            state = FockExcitation.from_modes(total, [3, 4])
            specs.append(QuenchSpec(ChainSpec(5), ChainSpec(M), state,
                                    default_time_grid()))
    return specs


def _run_preset(name, outdir, files, args):
    if name == "fig1":
        recurrences = {}
        for spec in _preset_specs(name):
            t_rec = _run_dynamics(spec, outdir, files)
            recurrences[f"M={spec.n_right}"] = t_rec
            if args.dump_bogoliubov:
                _dump_bogoliubov(spec, outdir, files)
        _write_json(os.path.join(outdir, "recurrence_times.json"), recurrences)
        files.append("recurrence_times.json")
    elif name == "table1":
        from .fock_oracle import delocalization_table

        rows = delocalization_table(floor=args.floor)
        _write_json(os.path.join(outdir, "delocalization_table.json"), rows)
        files.append("delocalization_table.json")
        _write_csv(os.path.join(outdir, "delocalization_table.csv"),
                   ["n_left", "n_right", "single_count", "pair_count"],
                   ([r["n_left"], r["n_right"], r["single_count"],
                     r["pair_count"]] for r in rows))
        files.append("delocalization_table.csv")
    elif name == "sweep":
        _run_sweep(outdir, files)


def _versions():
    out = {"python": sys.version.split()[0]}
    try:
        import numpy
        out["numpy"] = numpy.__version__
    except Exception:
        out["numpy"] = None
    try:
        from . import __version__
        out["quenchlab"] = __version__
    except Exception:
        out["quenchlab"] = None
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quenchlab",
        description="Coupled-chain quench simulator: batch datasets from "
                    "configs or presets.")
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--preset", choices=PRESETS,
                        help="named batch run (overrides --config)")
    parser.add_argument("--out", help="output directory (falls back to "
                        "QUENCHLAB_OUT, then the working directory)")
    parser.add_argument("--threads", type=int,
                        help="pin BLAS/OpenMP thread pools to this count")
    parser.add_argument("--dump-bogoliubov", action="store_true",
                        help="also write alpha, beta and F matrices as CSV")
    parser.add_argument("--floor", type=float, default=1e-12,
                        help="amplitude floor for delocalization counts")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; no randomized paths exist yet")
    args = parser.parse_args(argv)

    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be a positive integer")
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    outdir = args.out or os.environ.get("QUENCHLAB_OUT") or "."
    t0 = time.perf_counter()
    files: list = []
    manifest = {
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "preset": args.preset,
        "config_path": args.config,
        "config": None,
        "outputs": files,
        "versions": _versions(),
        "tolerances": {
            "floor": args.floor,
            "imag_tol": 1e-8,
            "symplectic_tol": 1e-10,
            "alpha_condition_limit": 1e12,
        },
        "seed": args.seed,
        "threads": args.threads,
        "status": "error",
        "error": None,
        "wall_time_s": None,
    }

    code = 0
    try:
        os.makedirs(outdir, exist_ok=True)
        if args.preset:
            _run_preset(args.preset, outdir, files, args)
        elif args.config:
            from .model import parse_config, quench_from_config, ConfigError

            with open(args.config) as fh:
                cfg = parse_config(fh.read())
            manifest["config"] = dict(cfg)
            if "analyses" in cfg:
                requested = [tok.strip() for tok in cfg["analyses"].split(",")
                             if tok.strip()]
            else:
                requested = ["dynamics"]
            for name in requested:
                if name not in ANALYSES:
                    raise ConfigError(f"unknown analysis {name!r}")
            spec = None
            if set(requested) - {"sweep"} or args.dump_bogoliubov:
                spec = quench_from_config(cfg)
            threshold = float(cfg.get("recurrence_threshold", 0.5))
            skip = float(cfg.get("relaxation_skip", 50.0))
            cutoff = int(cfg.get("cutoff", 8))
            order = int(cfg.get("order", 12))
            floor = float(cfg.get("floor", args.floor))
            if args.dump_bogoliubov:
                _dump_bogoliubov(spec, outdir, files)
            for name in requested:
                if name == "dynamics":
                    _run_dynamics(spec, outdir, files, threshold, skip)
                elif name == "gge":
                    _run_gge(spec, outdir, files)
                elif name == "covariance":
                    _run_covariance(spec, outdir, files)
                elif name == "fock-oracle":
                    _run_oracle(spec, outdir, files, cutoff, order)
                elif name == "delocalization":
                    _run_delocalization(spec, outdir, files, floor)
                elif name == "sweep":
                    _run_sweep(outdir, files)
        manifest["status"] = "ok"
    except Exception as exc:
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = _exit_code_for(exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    finally:
        manifest["wall_time_s"] = time.perf_counter() - t0
        try:
            _write_json(os.path.join(outdir, "manifest.json"), manifest)
        except OSError as exc:
            print(f"error: cannot write manifest: {exc}", file=sys.stderr)
            code = code or 4
    return code


def _exit_code_for(exc) -> int:
    from .model import ConfigError

    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, OSError):
        return 4
    if isinstance(exc, (ArithmeticError, ValueError, KeyError)):
        return 3
    try:
        import numpy as np
        from .fock_oracle import CutoffExceeded

        if isinstance(exc, (np.linalg.LinAlgError, CutoffExceeded)):
            return 3
    except Exception:
        pass
    return 1


if __name__ == "__main__":
    sys.exit(main())
