"""``nvespin`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 data error.
Every run writes ``resolved_config.yaml`` next to its outputs; feeding it
back with ``--config`` reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_DATA = 0, 2, 3, 4

log = logging.getLogger("nvespin")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _limit_threads(n: int | None) -> None:
    # BLAS pools read these at load time, so this must run before numpy is imported
    if n is not None:
        for var in _THREAD_VARS:
            os.environ[var] = str(n)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _selection(cfg):
    from .eseem import TransitionSelection

    sel = cfg.section("selection")
    return TransitionSelection(sel["manifold_pair"], sel["site"])


def _label_for(selection):
    from .spectra import Branch, TransitionLabel

    branch = Branch.MINUS if selection.manifold_pair.value == "minus_zero" else Branch.PLUS
    return TransitionLabel(selection.site, branch)


def _resolve_magnitude(cfg, direction) -> float:
    """Field magnitude from the config, else the resonance of the selected line."""
    from .errors import ConfigError
    from .spectra import resonance_fields

    if "magnitude_mT" in cfg.field:
        return float(cfg.field["magnitude_mT"])
    label = _label_for(_selection(cfg))
    lines = resonance_fields(cfg.system.electron_only(), cfg.doc["mw_frequency_GHz"], direction,
                             (20.0, 1500.0), label.site)
    match = [ln.field for ln in lines if ln.label == label]
    if not match:
        raise ConfigError(f"field.magnitude_mT: line {label} does not resonate at "
                          f"{cfg.doc['mw_frequency_GHz']} GHz; give the magnitude explicitly")
    b = float(match[0])
    cfg.field["magnitude_mT"] = b
    return b


def _annotation(cfg) -> dict:
    from .errors import ConfigError
    from .registry import find_sample, load_sample_registry

    label = cfg.doc.get("sample")
    if label is None:
        return {}
    try:
        return {"sample": find_sample(load_sample_registry(), label).as_dict()}
    except KeyError as exc:
        raise ConfigError(f"sample: {exc.args[0]}") from None


def _finish(cfg, out: Path, written: list) -> None:
    from .io import atomic_write_text

    written.append(atomic_write_text(out / "resolved_config.yaml", cfg.dump()))
    for p in written:
        log.info("wrote %s", p)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate_spectrum(cfg, out: Path) -> str:
    import numpy as np

    from .io import write_csv
    from .spectra import PopulationSet, broaden, stick_spectrum

    sp = cfg.section("spectrum")
    pops = {int(k): PopulationSet(*v) for k, v in sp["populations"].items()}
    missing = [s for s in (1, 2, 3, 4) if s not in pops]
    if missing:
        from .errors import ConfigError

        raise ConfigError(f"spectrum.populations: missing sites {missing}")
    lo, hi = sp["window_mT"]
    lines = []
    grid = np.zeros(0)
    curve = np.zeros(0)
    if hi > lo:
        spec = stick_spectrum(cfg.system.electron_only(), cfg.doc["mw_frequency_GHz"], cfg.nominal_axis,
                              cfg.euler, pops, (lo, hi))
        lines = spec.lines
        step = sp["step_mT"]
        grid = lo + step * np.arange(int(np.floor((hi - lo) / step + 1e-9)) + 1)
        grid, curve = broaden(spec, sp["linewidth_mT"], grid=grid)
    written = [
        write_csv(out / "sticks.csv", ["label", "site", "branch", "field_mT", "intensity", "amplitude"],
                  [(str(ln.label), ln.label.site, ln.label.branch.value, ln.field, ln.intensity,
                    ln.signed_amplitude) for ln in lines]),
        write_csv(out / "spectrum.csv", ["field_mT", "amplitude"], zip(grid, curve)),
    ]
    _finish(cfg, out, written)
    return f"{len(lines)} lines in [{lo:g}, {hi:g}] mT"


def cmd_simulate_eseem(cfg, out: Path) -> str:
    import numpy as np

    from .eseem import default_tau_grid, modulation_depth, multi_nucleus_trace, nuclear_frequencies
    from .io import write_csv, write_json
    from .sigproc import (PeakList, check_additive_relation, cosine_ft, detection_bandwidth_filter,
                          phase_correct_first_order, pick_peaks)
    from .spincore import FieldVector, rotate_field

    direction = rotate_field(cfg.nominal_axis, cfg.euler)
    sel = _selection(cfg)
    b = _resolve_magnitude(cfg, direction)
    fv = FieldVector(b, direction)
    es, pr = cfg.section("eseem"), cfg.section("processing")
    tau = default_tau_grid(es["tau_step_us"], es["points"])
    trace = multi_nucleus_trace(cfg.system, fv, sel, tau, es["mode"])
    written = [write_csv(out / "trace.csv", ["tau_us", "v"], zip(trace.tau, trace.v))]
    processed = trace
    if pr["bandwidth_ns"] is not None:
        processed = detection_bandwidth_filter(trace, pr["bandwidth_ns"])
        if pr["dump_intermediates"]:
            written.append(write_csv(out / "trace_filtered.csv", ["tau_us", "v"],
                                     zip(processed.tau, processed.v)))
    raw = cosine_ft(processed, pr["dead_time_us"], pr["zero_fill"], pr["window"])
    ft = phase_correct_first_order(raw)
    if pr["dump_intermediates"]:
        written.append(write_csv(out / "ft_uncorrected.csv", ["freq_MHz", "amplitude"],
                                 zip(raw.freq, raw.amplitude)))
    keep = ft.freq <= (pr["max_freq_MHz"] or np.inf)
    written.append(write_csv(out / "ft.csv", ["freq_MHz", "amplitude"], zip(ft.freq[keep], ft.amplitude[keep])))
    flat = float(np.ptp(processed.v)) < 1e-9
    peaks = [] if flat else pick_peaks(ft, pr["peak_floor"], 0.0, pr["max_freq_MHz"]).peaks
    positive = PeakList([p for p in peaks if p.amplitude > 0])
    triples = check_additive_relation(positive, pr["triple_tolerance_MHz"])
    nf = nuclear_frequencies(cfg.system, fv, sel) if cfg.system.nuclei else None
    report = {
        "field_mT": b,
        "direction": direction.tolist(),
        "selection": {"manifold_pair": sel.manifold_pair.value, "site": sel.site},
        "modulation_depth": modulation_depth(trace).depth,
        "bin_width_MHz": ft.bin_width,
        "peaks": [{"freq_MHz": p.freq, "amplitude": p.amplitude, "width_MHz": p.width} for p in peaks],
        "additive_triples": [{"freqs_MHz": list(t.freqs), "mismatch_MHz": t.mismatch} for t in triples],
        "nuclear_frequencies": {str(ms): nf[ms].tolist() for ms in nf.manifolds} if nf else {},
        **_annotation(cfg),
    }
    written.append(write_json(out / "peaks.json", report))
    _finish(cfg, out, written)
    return f"B = {b:.3f} mT, depth {report['modulation_depth']:.3f}, {len(peaks)} peaks, {len(triples)} triples"


def cmd_scan_cancellation(cfg, out: Path) -> str:
    import numpy as np

    from .eseem import cancellation_scan, default_tau_grid
    from .io import write_csv, write_json
    from .spincore import rotate_field

    sc, es = cfg.section("scan"), cfg.section("eseem")
    fields = np.arange(sc["field_min_mT"], sc["field_max_mT"] + sc["step_mT"] / 2, sc["step_mT"])
    direction = rotate_field(cfg.nominal_axis, cfg.euler)
    rows, best = cancellation_scan(cfg.system, direction, _selection(cfg), fields,
                                   default_tau_grid(es["tau_step_us"], es["points"]))
    summary = {"argmax_field_mT": best[0] if best else None, "max_depth": best[1] if best else None,
               "direction": direction.tolist(), "n_fields": len(rows), **_annotation(cfg)}
    written = [write_csv(out / "scan.csv", ["field_mT", "depth"], rows),
               write_json(out / "scan_summary.json", summary)]
    _finish(cfg, out, written)
    if best is None:
        return "no field with identifiable manifolds"
    return f"max depth {best[1]:.3f} at {best[0]:g} mT"


def _fit_orientation(cfg, data: Path, out: Path) -> str:
    from .errors import DataFormatError
    from .inference.orientation import fit_orientation
    from .io import read_rows, write_json
    from .spectra import TransitionLabel

    peaks = []
    for ln, row in read_rows(data, ["label", "field_mT"]):
        try:
            peaks.append((TransitionLabel.parse(row["label"]), float(row["field_mT"])))
        except ValueError as exc:
            raise DataFormatError(str(exc), line=ln, path=str(data)) from None
    fit = fit_orientation(peaks, cfg.system.electron_only(), cfg.doc["mw_frequency_GHz"], cfg.nominal_axis,
                          seed=cfg.seed)
    report = {"kind": "orientation", "nominal_axis": cfg.nominal_axis.tolist(),
              **fit.result.to_dict(), **_annotation(cfg)}
    written = [write_json(out / "fit_orientation.json", report)]
    _finish(cfg, out, written)
    e = fit.euler
    return f"euler = ({e.alpha:.3f}, {e.beta:.3f}, {e.gamma:.3f}) deg, rms {fit.residual_rms:.3g} mT"


def _fit_decay(cfg, data: Path, out: Path) -> str:
    from .io import write_json
    from .sigproc import fit_stretched_exponential, read_decay_csv

    fit = fit_stretched_exponential(read_decay_csv(data, cfg.section("fit")["decay_channel"]))
    report = {"kind": "stretched_exponential", **fit.as_dict(), **_annotation(cfg)}
    written = [write_json(out / "fit_decay.json", report)]
    _finish(cfg, out, written)
    return f"T2 = {fit.T2:.4f} ms, n = {fit.n:.3f}"


def _fit_couplings(cfg, data: Path, out: Path) -> str:
    import numpy as np

    from .eseem import TransitionSelection
    from .errors import DataFormatError
    from .inference.couplings import PeakObservation, fit_nitrogen_couplings
    from .io import read_rows, write_json
    from .spincore import EulerAngles, FieldVector, rotate_field

    cols = ["axis_x", "axis_y", "axis_z", "alpha_deg", "beta_deg", "gamma_deg", "field_mT",
            "site", "manifold_pair", "ms", "freq_MHz"]
    groups: dict = {}
    for ln, row in read_rows(data, cols):
        try:
            axis = np.array([float(row[c]) for c in cols[:3]])
            euler = EulerAngles(*(float(row[c]) for c in cols[3:6]))
            fv = FieldVector(float(row["field_mT"]), rotate_field(axis / np.linalg.norm(axis), euler))
            sel = TransitionSelection(row["manifold_pair"], int(row["site"]))
            ms = int(row["ms"])
            freq = float(row["freq_MHz"])
        except (ValueError, ZeroDivisionError) as exc:
            raise DataFormatError(str(exc), line=ln, path=str(data)) from None
        if ms not in sel.manifold_pair.ms:
            raise DataFormatError(f"ms={ms} not in manifold pair {sel.manifold_pair.value}",
                                  line=ln, path=str(data))
        key = (fv, sel)
        groups.setdefault(key, {}).setdefault(ms, []).append(freq)
    obs = [PeakObservation(fv, sel, {ms: np.sort(v) for ms, v in d.items()}) for (fv, sel), d in groups.items()]
    fit = fit_nitrogen_couplings(obs, cfg.system, orientation_sigma=cfg.section("fit")["orientation_sigma_deg"])
    report = {"kind": "nitrogen_couplings", **fit.result.to_dict(), "covariance": fit.covariance,
              **_annotation(cfg)}
    written = [write_json(out / "fit_couplings.json", report)]
    _finish(cfg, out, written)
    u = fit.uncertainties
    return (f"A_par = {fit.A_par:.3f}({u['A_par']:.3f}), A_perp = {fit.A_perp:.3f}({u['A_perp']:.3f}), "
            f"P_par = {fit.P_par:.3f}({u['P_par']:.3f}) MHz")


def _fit_t2(cfg, data: Path, out: Path) -> str:
    import numpy as np

    from .errors import ConfigError
    from .inference.decoherence import DEFAULT_START, FluctuatorModel, fit_t2_temperature
    from .io import read_table, write_json

    tab = read_table(data, ["temperature_K", "T2_ms"])
    init = cfg.section("fit")["initial"]
    names = {"E_a_meV": "E_a", "tau_0_s": "tau_0", "delta_Mrad_s": "delta", "T2_bath_ms": "T2_bath"}
    unknown = sorted(set(init) - set(names))
    if unknown:
        raise ConfigError(f"fit.initial: unknown parameter(s) {unknown}; expected {sorted(names)}")
    kw = {names[k]: v for k, v in init.items()}
    try:
        start = FluctuatorModel(**{**{v: getattr(DEFAULT_START, v) for v in names.values()}, **kw})
    except ValueError as exc:
        raise ConfigError(f"fit.initial: {exc}") from None
    fit = fit_t2_temperature(np.column_stack([tab["temperature_K"], tab["T2_ms"]]), start)
    report = {"kind": "t2_temperature", "ea_identifiable": fit.ea_identifiable,
              "t_min_K": fit.t_min, "t2_min_ms": fit.t2_min, **fit.result.to_dict(), **_annotation(cfg)}
    written = [write_json(out / "fit_t2_temperature.json", report)]
    _finish(cfg, out, written)
    if not fit.ea_identifiable:
        return f"no significant temperature dependence; T2_bath = {fit.model.T2_bath:.3f} ms"
    return f"E_a = {fit.model.E_a:.3f} meV, T2 minimum {fit.t2_min:.3f} ms at {fit.t_min:.1f} K"


FITTERS = {"orientation": _fit_orientation, "decay": _fit_decay, "couplings": _fit_couplings,
           "t2-temperature": _fit_t2}


def cmd_samples_validate(path, out: Path | None) -> str:
    from .io import write_json
    from .registry import load_sample_registry

    records = load_sample_registry(path)
    if out is not None:
        write_json(out / "samples.json", [r.as_dict() for r in records])
    for r in records:
        print(f"{r.label}\t{r.edge}\t{r.fluence_cm2:.0e} cm^-2\t{r.anneal_temperature_C:g} C/"
              f"{r.anneal_time_min:g} min\t[NV-] {r.nv_concentration_cm3:.0e} cm^-3")
    return f"{len(records)} samples valid"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, help="cap on BLAS/OpenMP threads")
    common.add_argument("--verbose", "-v", action="count", default=0)

    p = argparse.ArgumentParser(prog="nvespin", description="NV- ESR/ESEEM simulation and fitting")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate-spectrum", parents=[common], help="stick and broadened ESR spectrum")
    sub.add_parser("simulate-eseem", parents=[common], help="ESEEM trace, FT spectrum and peak list")
    sub.add_parser("scan-cancellation", parents=[common], help="modulation depth against field")
    fit = sub.add_parser("fit", help="fit measured data")
    fsub = fit.add_subparsers(dest="fit_kind", required=True)
    for kind in FITTERS:
        f = fsub.add_parser(kind, parents=[common])
        f.add_argument("data", type=Path, help="input CSV")
    samples = sub.add_parser("samples", help="sample registry tools")
    ssub = samples.add_subparsers(dest="samples_cmd", required=True)
    v = ssub.add_parser("validate", parents=[common])
    v.add_argument("file", type=Path, nargs="?", help="registry CSV (default: bundled)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    _limit_threads(args.threads)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")

    from .config import load_config
    from .errors import ConfigError, DataFormatError, SolverError

    try:
        if args.command == "samples":
            msg = cmd_samples_validate(args.file, args.out)
        else:
            cfg = load_config(args.config, seed=args.seed)
            _annotation(cfg)  # unknown sample labels fail before any computation
            args.out = args.out or Path("out")
            args.out.mkdir(parents=True, exist_ok=True)
            if args.command == "fit":
                if not args.data.is_file():
                    raise DataFormatError("no such data file", path=str(args.data))
                msg = FITTERS[args.fit_kind](cfg, args.data, args.out)
            else:
                msg = {"simulate-spectrum": cmd_simulate_spectrum, "simulate-eseem": cmd_simulate_eseem,
                       "scan-cancellation": cmd_scan_cancellation}[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(msg)
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
