"""
core/commands.py — ringtherm command registry

Each command is a thin validated wrapper over the library modules. All
computation finishes before any output file is written, and every file is
written atomically, so a failing command leaves nothing behind.
"""

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from core import config as cfg
from core import ingest, layout, rng, stats, sweep
from core.errors import ConfigError, DataIOError, RingthermError
from core.lattice import DisorderSpec, realization
from core.scheduler import WorkerPool
from core.ui import VERSION, ui
from observability.logger import configure_logger, log_event
from records.store import RunRecordStore, render_csv, write_csv, write_json, write_text

logger = structlog.get_logger()


@dataclass(frozen=True)
class Command:
    name: str
    func: Callable[[argparse.Namespace, Dict[str, Any]], Dict[str, Any]]
    description: str
    configure: Callable[[argparse.ArgumentParser], None]


# ─── Argument parsing helpers ─────────────────────────────────────────

def parse_int_list(text: Any) -> Tuple[int, ...]:
    """'3-12', '3,4,5' or a TOML list."""
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    values: List[int] = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                values.extend(range(int(lo), int(hi) + 1))
            elif part:
                values.append(int(part))
    except ValueError:
        raise ConfigError(f"cannot parse integer list {text!r}")
    if not values:
        raise ConfigError(f"empty integer list {text!r}")
    return tuple(values)


def parse_float_list(text: Any) -> Tuple[float, ...]:
    """'0.05:1.0:0.05' (inclusive range), '0.2,0.8' or a TOML list."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ConfigError(f"range step must be positive in {text!r}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(count))
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}")
    if not values:
        raise ConfigError(f"empty number list {text!r}")
    return values


def option(args: argparse.Namespace, section: Dict[str, Any], name: str, default: Any = None) -> Any:
    """flags > config file section > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return section.get(name, default)


def _sidecar(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix


def _require_out(args: argparse.Namespace, section: Dict[str, Any]) -> str:
    out = option(args, section, "out")
    if not out:
        raise ConfigError("an output path is required (--out)")
    return out


def _pool() -> WorkerPool:
    return WorkerPool(show_progress=not ui.json_mode and ui.err_console.is_terminal)


# ─── Commands ─────────────────────────────────────────────────────────

def _configure_simulate(p: argparse.ArgumentParser):
    p.add_argument("--sites", type=int, help="ring site count N (>= 3)")
    p.add_argument("--eta", type=float, help=f"disorder level (default {cfg.DEFAULT_ETA})")
    p.add_argument("--c-mean", dest="c_mean", type=float, help=f"mean coupling, mm^-1 (default {cfg.DEFAULT_C_MEAN})")
    p.add_argument("--z-normalized", dest="z_normalized", type=float, help=f"z * c_mean (default {cfg.DEFAULT_Z_NORMALIZED})")
    p.add_argument("--samples", type=int, help="realizations (default 120, 200 for N >= 11)")
    p.add_argument("--excited-site", dest="excited_site", type=int, help="excited site index (default 0)")


def cmd_simulate(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    flags = {
        "sites": args.sites,
        "eta": args.eta,
        "c_mean": args.c_mean,
        "z_normalized": args.z_normalized,
        "samples": args.samples,
        "excited_site": args.excited_site,
        "output": args.out,
        "seed": args.seed,
    }
    run = cfg.RunConfig.resolve(flags, file_config)
    spec = DisorderSpec(run.c_mean, run.eta)
    out = sweep.simulate_ensemble(
        spec, run.sites, run.z_normalized, range(run.samples), run.master_seed,
        sweep.cell_stream_key(run.sites, run.eta), run.excited_site,
    )
    records = [
        stats.EnsembleRecord.from_output(
            i, out.couplings[i], np.abs(out.amplitudes[i]) ** 2, run.excited_site, amplitudes=out.amplitudes[i],
        )
        for i in range(run.samples)
    ]
    RunRecordStore(run.output).write(records, metadata={"ringtherm": VERSION, "config": run.to_dict()})
    excited = stats.excited_samples(records)
    return {
        "command": "simulate",
        "output": run.output,
        "records": len(records),
        "master_seed": run.master_seed,
        "sites": run.sites,
        "eta": run.eta,
        "g2_point": stats.g2(excited),
    }


def _configure_stats(p: argparse.ArgumentParser):
    p.add_argument("run_file", help="run-record file from `simulate` or `ingest`")
    p.add_argument("--repeats", type=int, help=f"bootstrap repeats M (default {cfg.DEFAULT_REPEATS})")
    p.add_argument("--resample-size", dest="resample_size", type=int, help="bootstrap resample size (default: ensemble size)")
    p.add_argument("--bins", type=int, help=f"histogram bins (default {cfg.DEFAULT_HISTOGRAM_BINS})")
    p.add_argument("--histogram-csv", dest="histogram_csv", help="also write per-site amplitude histograms as CSV")


def _amplitude_matrix(records: Sequence[stats.EnsembleRecord]) -> np.ndarray:
    """|psi| per record, excited site first; sqrt(I) when amplitudes were not stored."""
    rows = []
    for r in records:
        values = np.abs(np.asarray(r.amplitudes)) if r.amplitudes is not None else np.sqrt(r.normalized_intensities)
        rows.append(np.roll(values, -r.excited_site))
    return np.array(rows)


def cmd_stats(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    section = file_config.get("stats", {})
    out = _require_out(args, section)
    seed = cfg.resolve_seed(option(args, section, "seed"))
    repeats = int(option(args, section, "repeats", cfg.DEFAULT_REPEATS))
    bins = int(option(args, section, "bins", cfg.DEFAULT_HISTOGRAM_BINS))
    resample_size = option(args, section, "resample_size")

    header, records = RunRecordStore(args.run_file).read()
    boot = stats.bootstrap_g2(records, resample_size, repeats, rng.stream(seed, rng.BOOTSTRAP_TAG))
    means = stats.mean_intensities(records)
    profile = stats.mean_intensity_profile(records)
    amplitudes = _amplitude_matrix(records)

    classification: List[Dict[str, Any]] = []
    warnings: List[str] = []
    if len(records) >= stats.MIN_CLASSIFY_SAMPLES:
        for offset, result in enumerate(stats.classify_sites(amplitudes)):
            classification.append({
                "site_offset": offset,
                "label": result.label,
                "log_likelihood_ratio": result.log_likelihood_ratio,
            })
        flat = [c["site_offset"] for c in classification if c["label"] == stats.DEGENERATE]
        if flat:
            warnings.append(f"amplitudes are constant at site offsets {flat}; no law fitted there")
    else:
        logger.warning("classification_skipped", records=len(records), needed=stats.MIN_CLASSIFY_SAMPLES)
        warnings.append(f"amplitude laws need {stats.MIN_CLASSIFY_SAMPLES} records, run has {len(records)}")

    histograms = []
    for offset in range(amplitudes.shape[1]):
        hist = stats.histogram(amplitudes[:, offset], bins, (0.0, 1.0))
        histograms.append({
            "site_offset": offset,
            "edges": hist.edges.tolist(),
            "counts": hist.counts.tolist(),
        })

    report = {
        "command": "stats",
        "run_file": args.run_file,
        "records": len(records),
        "n_sites": records[0].n_sites,
        "master_seed": seed,
        "g2_mean": boot.g2_mean,
        "g2_std": boot.g2_std,
        "g2_point": stats.g2(stats.excited_samples(records)),
        "resample_size": boot.resample_size,
        "repeats": boot.repeats,
        "lambda": stats.localization_level(means / means.sum()),
        "mean_intensities": means.tolist(),
        "intensity_by_distance": profile.by_distance.tolist(),
        "excited_share": profile.excited_share,
        "g2_per_site": stats.g2_per_site(records).tolist() if len(records) >= 2 else [],
        "amplitude_classification": classification,
        "histograms": histograms,
        "warnings": warnings,
        "run_config": header.get("config", {}),
    }

    hist_csv = option(args, section, "histogram_csv")
    if hist_csv:
        rows = [
            (h["site_offset"], h["edges"][k], h["edges"][k + 1], h["counts"][k])
            for h in histograms for k in range(len(h["counts"]))
        ]
        hist_text = render_csv(("site_offset", "bin_low", "bin_high", "count"), rows)
    write_json(out, report)
    if hist_csv:
        write_text(hist_csv, hist_text)
    report["output"] = out
    return report


def _configure_grid(p: argparse.ArgumentParser):
    p.add_argument("--sites", help="site counts, e.g. '3-30' or '3,4,5,6'")
    p.add_argument("--etas", help="disorder levels, e.g. '0.05:1.0:0.05' or '0.4,0.8'")
    p.add_argument("--z-normalized", dest="z_normalized", type=float, help=f"z * c_mean (default {cfg.FIGURE_Z_NORMALIZED})")
    p.add_argument("--c-mean", dest="c_mean", type=float, help=f"mean coupling (default {cfg.DEFAULT_C_MEAN})")
    p.add_argument("--ensemble", type=int, help=f"realizations per cell (default {cfg.DEFAULT_CELL_ENSEMBLE})")
    p.add_argument("--repeats", type=int, help=f"bootstrap repeats per cell (default {cfg.DEFAULT_REPEATS})")


def _grid(args: argparse.Namespace, section: Dict[str, Any], seed: int) -> sweep.SweepGrid:
    return sweep.SweepGrid(
        site_counts=parse_int_list(option(args, section, "sites", list(cfg.DEFAULT_SITE_COUNTS))),
        disorder_levels=parse_float_list(option(args, section, "etas", list(cfg.DEFAULT_DISORDER_LEVELS))),
        z_normalized=float(option(args, section, "z_normalized", cfg.FIGURE_Z_NORMALIZED)),
        ensemble_size=int(option(args, section, "ensemble", cfg.DEFAULT_CELL_ENSEMBLE)),
        repeats=int(option(args, section, "repeats", cfg.DEFAULT_REPEATS)),
        master_seed=seed,
        c_mean=float(option(args, section, "c_mean", cfg.DEFAULT_C_MEAN)),
    )


def _configure_sweep(p: argparse.ArgumentParser):
    _configure_grid(p)
    p.add_argument("--localization-out", dest="localization_out", help="also write averaged intensity per site and cell")
    p.add_argument("--gaps-out", dest="gaps_out", help="also write odd/even g2 differences")


def cmd_sweep(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    section = file_config.get("sweep", {})
    out = _require_out(args, section)
    grid = _grid(args, section, cfg.resolve_seed(option(args, section, "seed")))
    cells = sweep.gap_map(grid, _pool())

    rows = sweep.cell_rows(cells)
    outputs = {out: render_csv(sweep.CELL_COLUMNS, rows)}
    loc_out = option(args, section, "localization_out")
    if loc_out:
        outputs[loc_out] = render_csv(("n_sites", "eta", "site", "mean_intensity"), sweep.localization_map(cells))
    gaps_out = option(args, section, "gaps_out")
    if gaps_out:
        gap_rows = [(g.n_even, g.n_odd, g.eta, g.g2_even, g.g2_odd, g.gap, g.lambda_mean) for g in sweep.parity_gaps(cells)]
        outputs[gaps_out] = render_csv(("n_even", "n_odd", "eta", "g2_even", "g2_odd", "gap", "lambda_mean"), gap_rows)
    for path, text in outputs.items():
        write_text(path, text)

    return {
        "command": "sweep",
        "output": out,
        "master_seed": grid.master_seed,
        "cells": [dict(zip(sweep.CELL_COLUMNS, r)) for r in rows],
    }


def _configure_bound(p: argparse.ArgumentParser):
    _configure_grid(p)
    p.add_argument("--threshold", type=float, help=f"g2 gap threshold (default {cfg.DEFAULT_GAP_THRESHOLD})")
    p.add_argument("--cells", help="reuse a cell table written by `sweep` instead of simulating")


def read_cells_csv(path: str) -> List[List[sweep.PhaseCell]]:
    try:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise DataIOError(f"cannot read cell table {path}: {e}")
    if not rows or set(sweep.CELL_COLUMNS) - set(rows[0].keys()):
        raise DataIOError(f"{path} is not a sweep cell table")
    try:
        cells = [
            sweep.PhaseCell(
                n_sites=int(r["n_sites"]),
                eta=float(r["eta"]),
                g2_mean=float(r["g2_mean"]),
                g2_std=float(r["g2_std"]),
                lambda_mean=float(r["lambda_mean"]),
                chiral=r["chiral"] == "true",
            )
            for r in rows
        ]
    except ValueError as e:
        raise DataIOError(f"bad value in cell table {path}: {e}")
    return [cells]


def cmd_bound(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    section = file_config.get("bound", file_config.get("sweep", {}))
    out = _require_out(args, section)
    threshold = float(option(args, section, "threshold", cfg.DEFAULT_GAP_THRESHOLD))
    cells_path = option(args, section, "cells")
    if cells_path:
        cells = read_cells_csv(cells_path)
        seed = None
    else:
        grid = _grid(args, section, cfg.resolve_seed(option(args, section, "seed")))
        cells = sweep.gap_map(grid, _pool())
        seed = grid.master_seed

    estimate = sweep.derive_bound(cells, cells, threshold)
    report = {
        "command": "bound",
        "bound": estimate.bound,
        "threshold": estimate.threshold,
        "marked_cells": estimate.marked,
        "total_cells": estimate.total,
        "boundary": [{"n_even": n, "eta": eta} for n, eta in estimate.boundary],
        "master_seed": seed,
    }
    write_json(out, report)
    report["output"] = out
    return report


def _configure_size_study(p: argparse.ArgumentParser):
    p.add_argument("--n-odd", dest="n_odd", type=int, help="odd site count (default 3)")
    p.add_argument("--n-even", dest="n_even", type=int, help="even site count (default 4)")
    p.add_argument("--sizes", help="ascending ensemble sizes, e.g. '10,20,40,100,120'")
    p.add_argument("--repeats", type=int, help=f"independent ensembles per size (default {cfg.DEFAULT_STUDY_REPEATS})")
    p.add_argument("--eta", type=float, help=f"disorder level (default {cfg.DEFAULT_ETA})")
    p.add_argument("--c-mean", dest="c_mean", type=float, help=f"mean coupling (default {cfg.DEFAULT_C_MEAN})")
    p.add_argument("--z-normalized", dest="z_normalized", type=float, help=f"z * c_mean (default {cfg.DEFAULT_Z_NORMALIZED})")
    p.add_argument("--values-out", dest="values_out", help="also write the g2 of every simulated ensemble")


SIZE_COLUMNS = ("n_sites", "size", "g2_mean", "g2_std", "low", "high", "operating_point")


def cmd_size_study(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    section = file_config.get("size_study", {})
    out = _require_out(args, section)
    seed = cfg.resolve_seed(option(args, section, "seed"))
    n_odd = int(option(args, section, "n_odd", 3))
    n_even = int(option(args, section, "n_even", 4))
    spec = DisorderSpec(float(option(args, section, "c_mean", cfg.DEFAULT_C_MEAN)), float(option(args, section, "eta", cfg.DEFAULT_ETA)))
    bands = sweep.ensemble_size_study(
        n_odd,
        n_even,
        parse_int_list(option(args, section, "sizes", list(cfg.DEFAULT_STUDY_SIZES))),
        int(option(args, section, "repeats", cfg.DEFAULT_STUDY_REPEATS)),
        spec,
        float(option(args, section, "z_normalized", cfg.DEFAULT_Z_NORMALIZED)),
        seed,
        pool=_pool(),
    )
    rows = [
        (b.n_sites, b.size, b.g2_mean, b.g2_std, b.low, b.high, b.operating_point)
        for n in (n_odd, n_even) for b in bands[n]
    ]
    separation = [
        {"size": a.size, "overlap": sweep.bands_overlap(a, b)}
        for a, b in zip(bands[n_odd], bands[n_even])
    ]
    values_out = option(args, section, "values_out")
    value_rows = [
        (b.n_sites, b.size, r, v) for n in (n_odd, n_even) for b in bands[n] for r, v in enumerate(b.values)
    ]
    outputs = {out: render_csv(SIZE_COLUMNS, rows)}
    if values_out:
        outputs[values_out] = render_csv(("n_sites", "size", "repeat", "g2"), value_rows)
    for path, text in outputs.items():
        write_text(path, text)
    return {
        "command": "size-study",
        "output": out,
        "master_seed": seed,
        "bands": [dict(zip(SIZE_COLUMNS, r)) for r in rows],
        "separation": separation,
    }


def _configure_layout(p: argparse.ArgumentParser):
    p.add_argument("--couplings", help="comma-separated couplings (mm^-1); otherwise a realization is sampled")
    p.add_argument("--sites", type=int, help="site count when sampling (default 6)")
    p.add_argument("--eta", type=float, help=f"disorder level when sampling (default {cfg.DEFAULT_ETA})")
    p.add_argument("--c-mean", dest="c_mean", type=float, help=f"mean coupling when sampling (default {cfg.DEFAULT_C_MEAN})")
    p.add_argument("--realization", type=int, help="realization index when sampling (default 0)")
    p.add_argument("--d-ref", dest="d_ref", type=float, help=f"reference separation, um (default {layout.REFERENCE_SEPARATION_UM})")
    p.add_argument("--c-ref", dest="c_ref", type=float, help=f"coupling at d_ref, mm^-1 (default {layout.REFERENCE_COUPLING})")
    p.add_argument("--decay-length", dest="decay_length", type=float, help=f"decay length, um (illustrative default {layout.EXAMPLE_DECAY_LENGTH_UM})")
    p.add_argument("--wavelength", type=float, help=f"wavelength, nm (default {layout.REFERENCE_WAVELENGTH_NM})")
    p.add_argument("--waveguide-length", dest="waveguide_length", type=float, help=f"waveguide length, mm (default {cfg.DEFAULT_WAVEGUIDE_LENGTH_MM})")


def cmd_layout(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    section = file_config.get("layout", {})
    out = _require_out(args, section)
    cal = layout.CouplingCalibration(
        d_ref=float(option(args, section, "d_ref", layout.REFERENCE_SEPARATION_UM)),
        c_ref=float(option(args, section, "c_ref", layout.REFERENCE_COUPLING)),
        decay_length=float(option(args, section, "decay_length", layout.EXAMPLE_DECAY_LENGTH_UM)),
        wavelength=float(option(args, section, "wavelength", layout.REFERENCE_WAVELENGTH_NM)),
    )
    seed = None
    couplings_opt = option(args, section, "couplings")
    if couplings_opt is not None:
        couplings = np.array(parse_float_list(couplings_opt))
    else:
        seed = cfg.resolve_seed(option(args, section, "seed"))
        sites = int(option(args, section, "sites", 6))
        eta = float(option(args, section, "eta", cfg.DEFAULT_ETA))
        spec = DisorderSpec(float(option(args, section, "c_mean", cfg.DEFAULT_C_MEAN)), eta)
        index = int(option(args, section, "realization", 0))
        couplings = realization(spec, sites, seed, index, sweep.cell_stream_key(sites, eta)).couplings

    chip = layout.layout_from_couplings(
        couplings, cal, float(option(args, section, "waveguide_length", cfg.DEFAULT_WAVEGUIDE_LENGTH_MM))
    )
    rows = [(k, x, y) for k, (x, y) in enumerate(chip.site_coordinates)]
    metadata = {
        "circumradius_um": chip.circumradius,
        "waveguide_length_mm": chip.waveguide_length,
        "couplings": [float(c) for c in couplings],
        "chord_lengths_um": list(chip.chord_lengths),
        "calibration": {
            "d_ref_um": cal.d_ref,
            "c_ref_per_mm": cal.c_ref,
            "decay_length_um": cal.decay_length,
            "wavelength_nm": cal.wavelength,
        },
        "master_seed": seed,
    }
    meta_path = _sidecar(out, ".json")
    csv_text = render_csv(("site", "x_um", "y_um"), rows)
    write_text(out, csv_text)
    write_json(meta_path, metadata)
    return {"command": "layout", "output": out, "metadata": meta_path, "sites": rows, **metadata}


def _configure_ingest(p: argparse.ArgumentParser):
    p.add_argument("images", nargs="+", help="facet images (binary PGM, or grayscale PNG/TIFF)")
    p.add_argument("--spots", help="CSV of spot centers: site,x,y,radius_1e")
    p.add_argument("--background", choices=sorted(ingest.BACKGROUND_STRATEGIES), help="background strategy (default annulus-median)")
    p.add_argument("--excited-site", dest="excited_site", type=int, help="excited site for the run records (default 0)")
    p.add_argument("--records", help="also write a run-record file usable by `stats`")


def _ingest_task(item: Tuple[str, Tuple[ingest.SiteSpot, ...], str]) -> np.ndarray:
    path, spots, background = item
    return ingest.extract_site_intensities(ingest.load_image(path), spots, background)


def cmd_ingest(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    section = file_config.get("ingest", {})
    out = _require_out(args, section)
    spots_path = option(args, section, "spots")
    if not spots_path:
        raise ConfigError("a spot table is required (--spots)")
    spots = tuple(ingest.read_spot_table(spots_path))
    background = option(args, section, "background", "annulus-median")
    excited = int(option(args, section, "excited_site", 0))
    if not 0 <= excited < len(spots):
        raise ConfigError(f"excited_site {excited} outside [0, {len(spots)})")

    vectors = _pool().map(_ingest_task, [(path, spots, background) for path in args.images], label="images")
    header = ("image",) + tuple(f"I_{k}" for k in range(len(spots)))
    rows = [(ingest.image_label(path),) + tuple(v.tolist()) for path, v in zip(args.images, vectors)]
    records_path = option(args, section, "records")
    records = [
        stats.EnsembleRecord.from_output(i, (), v, excited) for i, v in enumerate(vectors)
    ]

    write_csv(out, header, rows)
    if records_path:
        RunRecordStore(records_path).write(records, metadata={"ringtherm": VERSION, "source": "ingest", "images": list(args.images)})
    return {
        "command": "ingest",
        "output": out,
        "records": records_path,
        "intensities": [dict(zip(header, r)) for r in rows],
    }


# ─── Presentation ─────────────────────────────────────────────────────

def _present(name: str, payload: Dict[str, Any]):
    if ui.json_mode:
        ui.emit_json(payload)
        return
    if name == "simulate":
        ui.print_report("simulate", {k: payload[k] for k in ("records", "sites", "eta", "master_seed", "g2_point")})
    elif name == "stats":
        ui.print_report("stats", {k: payload[k] for k in ("records", "n_sites", "g2_mean", "g2_std", "g2_point", "lambda", "excited_share")})
        if payload["amplitude_classification"]:
            ui.print_table(
                "amplitude laws (offset from excited site)",
                ("site_offset", "label", "log_likelihood_ratio"),
                [(c["site_offset"], c["label"], c["log_likelihood_ratio"]) for c in payload["amplitude_classification"]],
            )
    elif name == "sweep":
        ui.print_table("phase cells", sweep.CELL_COLUMNS, [tuple(c.values()) for c in payload["cells"]])
    elif name == "bound":
        ui.print_report("localization bound", {k: payload[k] for k in ("bound", "threshold", "marked_cells", "total_cells")})
    elif name == "size-study":
        ui.print_table("g2 bands by ensemble size", SIZE_COLUMNS, [tuple(b.values()) for b in payload["bands"]])
    elif name == "layout":
        ui.print_table(f"layout  R = {payload['circumradius_um']:.6f} um", ("site", "x_um", "y_um"), payload["sites"])
    elif name == "ingest":
        ui.print_table("site intensities", tuple(payload["intensities"][0].keys()), [tuple(r.values()) for r in payload["intensities"]])
    for warning in payload.get("warnings", ()):
        ui.print_warning(warning)
    ui.print_written(payload["output"])


class CommandRegistry:
    """
    Manages ringtherm subcommands.
    Examples: simulate, stats, sweep, bound, size-study, layout, ingest
    """

    def __init__(self):
        self.commands: Dict[str, Command] = {}
        self._register_defaults()

    def _register_defaults(self):
        self.register_command("simulate", cmd_simulate, "Simulate a disorder ensemble and write run records", _configure_simulate)
        self.register_command("stats", cmd_stats, "g2, bootstrap uncertainty, lambda, amplitude laws of a run", _configure_stats)
        self.register_command("sweep", cmd_sweep, "g2 / lambda phase map over (N, eta)", _configure_sweep)
        self.register_command("bound", cmd_bound, "Derive the lambda bound of the observable gap region", _configure_bound)
        self.register_command("size-study", cmd_size_study, "g2 bands versus ensemble size for one odd/even pair", _configure_size_study)
        self.register_command("layout", cmd_layout, "Waveguide positions for a coupling vector", _configure_layout)
        self.register_command("ingest", cmd_ingest, "Site intensities from facet images", _configure_ingest)

    def register_command(self, name: str, func: Callable, description: str, configure: Callable):
        self.commands[name] = Command(name=name, func=func, description=description, configure=configure)

    def list_commands(self) -> List[Command]:
        return [self.commands[name] for name in sorted(self.commands)]

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="ringtherm",
            description="Parity-induced thermalization gap in disordered ring lattices",
        )
        parser.add_argument("--version", action="version", version=f"ringtherm {VERSION}")
        sub = parser.add_subparsers(dest="command", metavar="<command>")
        for command in self.list_commands():
            p = sub.add_parser(command.name, help=command.description, description=command.description)
            command.configure(p)
            p.add_argument("--seed", help="master seed (integer) or 'auto'")
            p.add_argument("--out", help="output path")
            p.add_argument("--config", help=f"TOML config file (or ${cfg.CONFIG_ENV})")
            p.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
            p.add_argument("--verbose", action="store_true", help="debug logging")
            p.add_argument("--log-file", dest="log_file", help="append logs to this file instead of stderr")
        return parser

    def execute(self, argv: Optional[Sequence[str]] = None) -> int:
        """Parse argv, run one command, return the process exit code."""
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return ConfigError.exit_code if e.code else 0
        if not args.command:
            parser.print_help()
            return ConfigError.exit_code

        # console rendering only for an interactive stderr; files and pipes get JSON lines
        configure_logger(
            level="DEBUG" if args.verbose else None,
            json_logs=bool(args.log_file) or not sys.stderr.isatty(),
            log_file=args.log_file,
        )
        ui.configure(json_mode=args.json)
        command = self.commands[args.command]
        started = time.perf_counter()
        log_event("command_started", command=command.name)
        try:
            file_config = cfg.load_config_file(args.config)
            payload = command.func(args, file_config)
        except RingthermError as e:
            logger.error("command_failed", command=command.name, error=str(e), exit_code=e.exit_code)
            ui.print_error(str(e))
            return e.exit_code
        except Exception as e:
            logger.exception("command_crashed", command=command.name)
            ui.print_error(f"unexpected error: {e}")
            return 1
        log_event("command_finished", command=command.name, seconds=round(time.perf_counter() - started, 3))
        _present(command.name, payload)
        return 0


# Singleton
command_registry = CommandRegistry()
