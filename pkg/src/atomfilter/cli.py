"""Command-line front end.

    atomfilter --config run.yaml [--out DIR]
    atomfilter --figure fig4 --out data/fig4

Every run writes flat CSV/JSON files and prints a one-line summary.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
from scipy import fft

from . import __version__
from .config import RunConfig, load_config
from .errors import AtomFilterError, ConfigError, InsufficientData, NoPeak, NumericalError
from .outputs import write_json
from .poles import (
    model_peak,
    one_pole_transmittance,
    poles_at_depth,
    small_k_poles,
    threshold_depth,
    track_poles,
    two_pole_transmittance,
)
from .potential import PotentialSpec, wavenumber_to_velocity
from .resonance import find_peak, fit_alpha, fit_beta, scan_depth
from .scattering import transmittance_curve, write_csv
from .wavepacket import FilterConfig, filter_experiment, transmitted_region

FIGURES = ("fig2", "fig3", "fig4", "fig5")


def _tag(x: float) -> str:
    return f"{x:g}".replace(".", "p")


# -- config-driven commands ---------------------------------------------------------

def _cmd_curve(cfg: RunConfig, out: Path) -> str:
    b = cfg.block("curve")
    try:
        v_min = float(b.get("v_min_cm_per_s", 0.0))
        v_max = float(b["v_max_cm_per_s"])
        n = int(b.get("n_points", 2000))
    except KeyError as exc:
        raise ConfigError(f"curve.{exc.args[0]}", "missing") from exc
    curve = transmittance_curve(cfg.potential, v_min, v_max, n)
    curve.to_csv(out / "curve.csv")
    j = int(np.argmax(curve.transmittance))
    return f"curve: {n} points, max |T|^2 = {curve.transmittance[j]:.6f} at v = {curve.v[j]:.6g} cm/s"


def _scan(cfg: RunConfig, out: Path):
    window = cfg.block("scan").get("window_cm_per_s")
    if window is not None:
        if len(window) != 2:
            raise ConfigError("scan.window_cm_per_s", "expected [v_min, v_max]")
        window = tuple(float(w) for w in window)
    scan = scan_depth(cfg.potential, cfg.depths(), window)
    scan.to_csv(out / "scan.csv")
    return scan


def _cmd_scan(cfg: RunConfig, out: Path) -> str:
    scan = _scan(cfg, out)
    end = scan.endpoint()
    return (f"scan: {len(scan.depths)} depths tracked, {len(scan.sharp_points())} sharp, "
            f"endpoint {'none' if end is None else f'{end:g}'} 1/s")


def _fit_dict(fit) -> dict:
    return {"value": fit.value, "residual": fit.residual, "n_points": fit.n_points,
            "depth_range_per_s": list(fit.depth_range)}


def _cmd_fit(cfg: RunConfig, out: Path) -> str:
    scan = _scan(cfg, out)
    alpha = fit_alpha(scan)
    beta = fit_beta(scan)
    report = {"alpha": _fit_dict(alpha) | {"E_R0_over_hbar_per_s": alpha.energy0, "v_R0_cm_per_s": alpha.v0},
              "beta": _fit_dict(beta) | {"delta_v0_fit_cm_per_s": beta.delta_v0_fit},
              "potential": cfg.potential.to_dict()}
    write_json(out / "fit.json", report)
    return f"fit: alpha = {alpha.value:.4f}, beta = {beta.value:.6f} s (log rms {beta.residual:.2g})"


def _cmd_poles(cfg: RunConfig, out: Path) -> str:
    b = cfg.block("poles")
    try:
        start, end = float(b["vw_start_per_s"]), float(b["vw_end_per_s"])
    except KeyError as exc:
        raise ConfigError(f"poles.{exc.args[0]}", "missing") from exc
    traj = track_poles(cfg.potential, start, end, n_pre=int(b.get("n_pre", 40)),
                       n_post=int(b.get("n_post", 20)))
    traj.to_csv(out / "trajectory.csv")
    write_json(out / "poles.json", traj.summary() | {"potential": cfg.potential.to_dict()})
    s = traj.summary()
    fmt = lambda x: "none" if x is None else f"{x:.6f}"
    return f"poles: vw_coll = {fmt(s['vw_coll'])} 1/s, vw_thres = {fmt(s['vw_thres'])} 1/s"


def _cmd_threshold(cfg: RunConfig, out: Path) -> str:
    est = threshold_depth(cfg.potential)
    write_json(out / "threshold.json", {
        "vw_thres_per_s": est.vw_thres, "Kw_thres_per_um": est.Kw_thres,
        "kappa_thres_per_um": est.kappa_thres, "delta_v_thres_cm_per_s": est.delta_v_thres,
        "potential": cfg.potential.to_dict()})
    return (f"threshold: vw_thres = {est.vw_thres:.4f} 1/s, kappa_thres = {est.kappa_thres:.6g} 1/um, "
            f"delta_v_thres = {est.delta_v_thres:.6g} cm/s")


def _wavepacket(fc: FilterConfig, out: Path, prefix: str = ""):
    rep = filter_experiment(fc)
    for t, dist in rep.distributions.items():
        dist.to_csv(out / f"{prefix}snapshot_t{_tag(t)}s.csv")
    rep.transmitted.to_csv(out / f"{prefix}transmitted.csv")
    write_json(out / f"{prefix}report.json", rep.to_json_dict())
    return rep


def _cmd_wavepacket(cfg: RunConfig, out: Path) -> str:
    b = cfg.block("wavepacket")
    kw = {}
    if "dt_s" in b:
        kw["dt"] = float(b["dt_s"])
    if "ground_dt_s" in b:
        kw["ground_dt"] = float(b["ground_dt_s"])
    if "snapshot_times_s" in b:
        kw["snapshot_times"] = tuple(float(t) for t in b["snapshot_times_s"])
    fc = FilterConfig(cfg.potential, cfg.condensate(), cfg.grid(), **kw)
    rep = _wavepacket(fc, out)
    return (f"wavepacket: transmitted fraction = {rep.transmitted_fraction:.6f}, "
            f"transmitted peak at {rep.transmitted.peak_velocity():.6g} cm/s")


COMMANDS = {"curve": _cmd_curve, "scan": _cmd_scan, "fit": _cmd_fit, "poles": _cmd_poles,
            "threshold": _cmd_threshold, "wavepacket": _cmd_wavepacket}


def run(config_path, out=None) -> str:
    """Execute a config file; returns the summary line."""
    cfg = load_config(config_path)
    out_dir = Path(out if out is not None else cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    return COMMANDS[cfg.command](cfg, out_dir)


# -- figure presets ---------------------------------------------------------------

def _fig2(out: Path) -> dict:
    template = PotentialSpec("gaussian", 300.0, 0.0, 6.0, 2.0)
    depths = [0.0, 150.0, 180.2, 180.25, 180.5]
    files = []
    for vw in depths:
        spec = template.with_depth(vw)
        for part, (lo, hi, n) in {"main": (0.0, 0.12, 2400), "inset": (0.0, 0.012, 1200)}.items():
            name = f"fig2_{part}_vw{_tag(vw)}.csv"
            transmittance_curve(spec, lo, hi, n).to_csv(out / name)
            files.append(name)
    return {"caption": {"vb_over_hbar_per_s": 300.0, "vw_over_hbar_per_s": depths,
                        "shape": "gaussian", "d_um": 6.0, "sigma_um": 2.0},
            "files": files}


FIG3_SERIES = {
    "gaussian_vb300": ("gaussian", 300.0, 6.0, 0.65),
    "gaussian_vb500": ("gaussian", 500.0, 6.0, 0.70),
    "square_vb300": ("square", 300.0, 5.0, 0.79),
    "square_vb500": ("square", 500.0, 5.0, 0.85),
}


def _fig3(out: Path) -> dict:
    files, fits, circles = [], {}, []
    for name, (shape, vb, d, _) in FIG3_SERIES.items():
        template = PotentialSpec(shape, vb, 0.0, d, 2.0)
        scan = scan_depth(template, np.arange(0.0, vb, 5.0))
        scan.to_csv(out / f"fig3_scan_{name}.csv")
        files.append(f"fig3_scan_{name}.csv")
        alpha, beta = fit_alpha(scan), fit_beta(scan)
        fits[name] = {"alpha": alpha.value, "beta_s": beta.value, "beta_log_rms": beta.residual,
                      "v_R0_cm_per_s": alpha.v0, "delta_v0_fit_cm_per_s": beta.delta_v0_fit}
        vw = np.array(scan.depths)
        write_csv(out / f"fig3_laws_{name}.csv",
                  ["vw_over_hbar_per_s", "v_R_alpha_law_cm_per_s", "delta_v_R_beta_law_cm_per_s"],
                  zip(vw, alpha.predict(template, vw), beta.predict(template, vw)))
        files.append(f"fig3_laws_{name}.csv")
        if shape == "square":
            est = threshold_depth(template)
            circles.append((name, est.vw_thres, est.delta_v_thres))
    write_csv(out / "fig3_circles.csv", ["series", "vw_thres_per_s", "delta_v_thres_cm_per_s"], circles)
    files.append("fig3_circles.csv")
    return {"caption": {"series": {k: {"shape": s, "vb_over_hbar_per_s": vb, "alpha": a}
                                   for k, (s, vb, _, a) in FIG3_SERIES.items()},
                        "sharp_threshold": 0.995},
            "computed": {"fits": fits}, "files": files}


FIG4_DEPTHS = {"crosses": 199.884, "coll": 199.898, "thres": 199.901, "big_circles": 199.92}


def _peak_triplet(spec: PotentialSpec, k1: complex, k2: complex):
    """(v_R, dv_R) for the exact curve, the two-pole and the one-pole model."""
    c = spec.constants
    kmax = 6.0 * max(abs(k1), abs(k2))
    to_v = lambda k: float(wavenumber_to_velocity(k, c))
    out = []
    try:
        p = find_peak(spec, (0.0, to_v(kmax)))
        out += [p.v_R, p.delta_v_R]
    except NoPeak:
        out += [math.nan, math.nan]
    for f in (lambda k: two_pole_transmittance(k1, k2, k), lambda k: one_pole_transmittance(k1, k)):
        try:
            p = model_peak(f, (0.0, kmax))
            out += [to_v(p.v_R), to_v(p.delta_v_R)]
        except NoPeak:
            out += [math.nan, math.nan]
    return out


def _fig4(out: Path) -> dict:
    template = PotentialSpec("square", 400.0, 0.0, 5.0)
    traj = track_poles(template, 199.80, 199.93)
    traj.to_csv(out / "fig4_trajectory.csv")
    rows = []
    for label, vw in FIG4_DEPTHS.items():
        k1, k2 = poles_at_depth(template, vw, traj)
        rows.append((label, vw, k1.real, k1.imag, k2.real, k2.imag))
    write_csv(out / "fig4b_poles.csv", ["label", "vw_over_hbar_per_s", "re_k1", "im_k1", "re_k2", "im_k2"], rows)

    kc = complex(0.0, -traj.kappa_coll)
    lam_rows = []
    for vw, k1, k2 in zip(traj.vw, traj.k1, traj.k2):
        sign = -1.0 if vw < traj.vw_coll else 1.0
        lam = sign * abs(k1 - kc)
        lam_rows.append([lam, vw] + _peak_triplet(template.with_depth(vw), k1, k2))
    write_csv(out / "fig4a_peaks_vs_lambda.csv",
              ["lambda_per_um", "vw_over_hbar_per_s", "v_R_exact", "delta_v_R_exact",
               "v_R_two_pole", "delta_v_R_two_pole", "v_R_one_pole", "delta_v_R_one_pole"], lam_rows)
    return {"caption": {"shape": "square", "vb_over_hbar_per_s": 400.0, "d_um": 5.0,
                        "depths_per_s": FIG4_DEPTHS},
            "computed": traj.summary(),
            "files": ["fig4_trajectory.csv", "fig4b_poles.csv", "fig4a_peaks_vs_lambda.csv"]}


FIG5_DEPTHS = (140.0, 150.0, 160.0)


def _fig5(out: Path) -> dict:
    template = PotentialSpec("gaussian", 300.0, 0.0, 6.0, 2.0)
    files, computed, circles = [], {}, []
    for vw in FIG5_DEPTHS:
        spec = template.with_depth(vw)
        prefix = f"fig5_vw{_tag(vw)}_"
        rep = _wavepacket(FilterConfig(spec), out, prefix)
        files += [f"{prefix}snapshot_t{_tag(t)}s.csv" for t in rep.distributions]
        files += [f"{prefix}transmitted.csv", f"{prefix}report.json"]
        peak = find_peak(spec, (0.02, 0.05))
        circles.append((vw, peak.v_R, peak.delta_v_R))
        computed[_tag(vw)] = {"transmitted_fraction": rep.transmitted_fraction,
                              "transmitted_peak_cm_per_s": rep.transmitted.peak_velocity(),
                              "transmitted_region_um": list(transmitted_region(spec, rep.final_state.grid))}
    write_csv(out / "fig5_circles.csv", ["vw_over_hbar_per_s", "v_R_cm_per_s", "delta_v_R_cm_per_s"], circles)
    files.append("fig5_circles.csv")
    return {"caption": {"shape": "gaussian", "vb_over_hbar_per_s": 300.0, "vw_over_hbar_per_s": list(FIG5_DEPTHS),
                        "v0_cm_per_s": 0.0336, "x_trap_um": -600.0, "omega_x_per_s": 5.0,
                        "omega_yz_per_s": 100.0, "N": 5e4, "snapshot_times_s": [0.0, 0.8, 8.0]},
            "computed": computed, "files": files}


_PRESETS = {"fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5}


def reproduce_figure(figure_id: str, out) -> dict:
    """Write the datasets behind one figure plus ``manifest.json``."""
    if figure_id not in _PRESETS:
        raise ConfigError("figure", f"expected one of {', '.join(FIGURES)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"figure": figure_id, "version": __version__} | _PRESETS[figure_id](out)
    write_json(out / "manifest.json", manifest)
    return manifest


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="atomfilter", description=__doc__.split("\n")[0])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="YAML run configuration")
    src.add_argument("--figure", metavar="ID", help=f"reproduce the datasets behind a figure ({', '.join(FIGURES)})")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="FFT worker threads")
    p.add_argument("--seed", type=int, default=None, metavar="N",
                   help="reserved; every algorithm is deterministic")
    p.add_argument("--version", action="version", version=__version__)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with fft.set_workers(max(1, args.threads)):
            if args.config:
                summary = run(args.config, args.out)
            else:
                out = args.out or args.figure
                m = reproduce_figure(args.figure, out)
                summary = f"{args.figure}: {len(m['files'])} datasets written to {out}"
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, InsufficientData) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except AtomFilterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
