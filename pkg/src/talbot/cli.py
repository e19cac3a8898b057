"""Batch front end: ``sim run <config>`` and ``sim compare <a> <b> --metric M``.

A config file holds one ``key = value`` per line; ``#`` starts a comment and
``auto`` selects the scenario default for optional keys.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple, get_type_hints

import numpy as np

from . import __version__
from . import analysis as an
from . import bohm
from . import tdse
from . import wavefield as wf
from .core import HE_MASS, BeamSpec, GratingSpec, build_beam, talbot_scales
from .output import (fmt, read_kv, read_pgm, raster_axes, sha256, write_frame, write_kv,
                     write_pgm, write_trajectories)

SCENARIOS = ("single-slit", "nslit", "infinite-grating", "cavity", "surface", "fraunhofer",
             "classical-limit")

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = ""
    # beam
    mass_amu: float = HE_MASS
    mass_scale: float = 1.0
    energy_mev: float = 21.0
    # grating
    period: float = 3.6
    sigma: Optional[float] = None
    n_slits: Optional[int] = None
    # raster, x in d and z in 2 z_T of the unscaled beam
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    z_end: Optional[float] = None
    nx: int = 256
    nz: int = 256
    # trajectories
    n_trajectories: Optional[int] = None
    n_records: int = 101
    rtol: float = bohm.DEFAULT_RTOL
    atol: float = bohm.DEFAULT_ATOL
    z_obs: float = 5000.0
    # surface potential and grid
    well_depth: float = 6.35
    alpha: float = 1.05
    c1: float = 0.03
    c2: float = 0.0004
    attraction: float = 1.0
    n_cells: int = 10
    points_per_cell: int = 16
    z_min: float = -2.0
    z_max: float = 60.0
    dz: float = 0.05
    launch_height: float = 8.0
    sigma_z: float = 3.0
    absorber_fraction: float = 0.15
    absorber_strength: float = 20.0
    dt: Optional[float] = None
    frame_stride: int = 0
    out_dir: str = "out"

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}")
        if self.nx < 2 or self.nz < 2:
            raise ConfigError("nx and nz must be at least 2")
        if self.n_records < 2:
            raise ConfigError("n_records must be at least 2")
        if self.mass_amu <= 0 or self.mass_scale <= 0 or self.energy_mev <= 0:
            raise ConfigError("mass, mass_scale and energy must be positive")
        if self.n_slits is not None and self.n_slits < 1:
            raise ConfigError("n_slits must be positive")
        return self


_DEFAULTS = {
    # n_slits, x range (d), z_end (2 z_T), trajectories
    "single-slit": (1, (-4.0, 4.0), 1.0, 41),
    "nslit": (50, (-6.0, 6.0), 1.0, 500),
    "infinite-grating": (None, (-1.0, 1.0), 1.0, 40),
    "cavity": (None, (-0.5, 0.5), 1.0, 40),
    "fraunhofer": (10, (-20.0, 20.0), 4.0, 2000),
    "classical-limit": (10, (-6.0, 6.0), None, 200),
    "surface": (None, (-5.0, 5.0), 1.5, 20),
}


def _field_types():
    hints = get_type_hints(ScenarioConfig)
    out = {}
    for f in fields(ScenarioConfig):
        h = hints[f.name]
        args = getattr(h, "__args__", ())
        base = next((a for a in args if a is not type(None)), h)
        out[f.name] = (base, type(None) in args)
    return out


_TYPES = _field_types()


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    values = {}
    seen_any = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        seen_any = True
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        base, optional = _TYPES[key]
        try:
            if optional and value.lower() == "auto":
                values[key] = None
            elif base is int:
                values[key] = int(value)
            elif base is float:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} expects {base.__name__}, got {value!r}")
    if not seen_any:
        raise ConfigError(f"{source}: empty config")
    if "scenario" not in values:
        raise ConfigError(f"{source}: missing required key 'scenario'")
    cfg = ScenarioConfig(**values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}")


def serialize_config(cfg: ScenarioConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        lines.append(f"{key} = {'auto' if value is None else repr(value) if isinstance(value, float) else value}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})")
    return parse_config(text, str(path))


# ---------------------------------------------------------------------------
# scenario execution


@dataclass
class _Setup:
    cfg: ScenarioConfig
    beam: BeamSpec
    ref_beam: BeamSpec
    grating: GratingSpec
    z_unit: float
    x_range: Tuple[float, float]
    z_end: float
    n_traj: int


def _setup(cfg: ScenarioConfig) -> _Setup:
    n_def, x_def, z_def, traj_def = _DEFAULTS[cfg.scenario]
    scale = cfg.mass_scale if cfg.scenario == "classical-limit" else 1.0
    beam = build_beam(cfg.mass_amu * scale, cfg.energy_mev)
    ref_beam = build_beam(cfg.mass_amu, cfg.energy_mev)
    n_slits = cfg.n_slits if cfg.n_slits is not None else n_def
    if cfg.scenario in ("infinite-grating", "cavity", "surface"):
        n_slits = None
    if cfg.scenario == "single-slit":
        n_slits = 1
    grating = GratingSpec(period=cfg.period, sigma=cfg.sigma, n_slits=n_slits)
    z_unit = 2.0 * talbot_scales(ref_beam, grating).talbot_distance
    z_end = cfg.z_end if cfg.z_end is not None else (z_def if z_def is not None else math.sqrt(scale))
    x_range = (cfg.x_min if cfg.x_min is not None else x_def[0],
               cfg.x_max if cfg.x_max is not None else x_def[1])
    if not x_range[1] > x_range[0] or z_end <= 0:
        raise ConfigError("empty carpet range")
    n_traj = cfg.n_trajectories if cfg.n_trajectories is not None else traj_def
    return _Setup(cfg, beam, ref_beam, grating, z_unit, x_range, z_end, n_traj)


def _derived(s: _Setup) -> Dict[str, object]:
    sc = talbot_scales(s.beam, s.grating)
    out = {
        "lambda_angstrom": s.beam.wavelength,
        "zT_angstrom": sc.talbot_distance,
        "tau_r_ps": sc.revival_time_ps,
        "z_max_over_2zT": (an.z_max_estimate(s.grating.n_slits, s.grating.sigma, s.grating, s.beam)
                           / (2.0 * sc.talbot_distance)) if s.grating.n_slits else "inf",
    }
    if s.cfg.scenario == "surface":
        out["beeby_ratio_predicted"] = tdse.beeby_distance(
            sc.talbot_distance, s.cfg.well_depth * s.cfg.attraction**2, s.beam.energy).predicted_ratio
    return out


def _density_source(s: _Setup):
    kind = s.cfg.scenario
    if kind == "infinite-grating":
        modes = wf.grating_modes(s.grating, s.beam.mass)
        return lambda x, t: np.abs(wf.bloch_grating(x, t, modes)) ** 2
    if kind == "cavity":
        modes = wf.cavity_modes(s.grating, s.beam.mass)
        return lambda x, t: np.abs(wf.cavity_packet(x, t, modes)) ** 2
    return lambda x, t: np.abs(wf.finite_grating(x, t, s.beam, s.grating)) ** 2


def _render(s: _Setup, density) -> an.CarpetRaster:
    raster = an.render_carpet(density, s.beam, s.grating, s.x_range, (0.0, s.z_end),
                              (s.cfg.nx, s.cfg.nz), provenance="analytic", z_unit=s.z_unit)
    raster.meta.update({"scenario": s.cfg.scenario, "mass_amu": fmt(s.beam.mass),
                        "energy_mev": fmt(s.beam.energy)})
    return raster


def _ensemble(s: _Setup, threads: int):
    """Trajectory ensemble for the analytic scenarios."""
    d = s.grating.period
    kind = s.cfg.scenario
    t_end = s.z_end * s.z_unit / s.beam.speed
    if kind == "fraunhofer":
        t_end = max(t_end, s.cfg.z_obs / s.beam.speed)
    if kind == "infinite-grating":
        modes = wf.grating_modes(s.grating, s.beam.mass)
        field = bohm.infinite_grating_field(s.beam, s.grating, modes)
        sampler = bohm.QuantileSampler(lambda x: np.abs(wf.bloch_grating(x, 0.0, modes)) ** 2,
                                       -0.5 * d, 0.5 * d, symmetry_period=d)
    elif kind == "cavity":
        modes = wf.cavity_modes(s.grating, s.beam.mass)
        field = bohm.cavity_field(s.beam, s.grating, modes)
        sampler = bohm.QuantileSampler(lambda x: np.abs(wf.cavity_packet(x, 0.0, modes)) ** 2,
                                       -0.5 * d, 0.5 * d, symmetry_period=d)
    else:
        field = bohm.finite_grating_field(s.beam, s.grating)
        centers = s.grating.slit_centers()
        pad = 8.0 * s.grating.sigma
        sampler = bohm.QuantileSampler(
            lambda x: np.abs(wf.finite_grating(x, 0.0, s.beam, s.grating)) ** 2,
            centers[0] - pad, centers[-1] + pad, symmetry_period=d)
    record_dt = t_end / (s.cfg.n_records - 1)
    traj = bohm.run_ensemble(s.n_traj, sampler, field, t_end, record_dt, grating=s.grating,
                             threads=threads, rtol=s.cfg.rtol, atol=s.cfg.atol)
    return traj, field


def _trajectory_rows(traj, field, beam: BeamSpec, grating: GratingSpec, z_unit: float):
    from .core import UnitSystem

    t_ps = UnitSystem.time_to_ps(traj.t)
    v = np.stack([field(traj.x[:, j], traj.t[j]) for j in range(traj.t.size)], axis=1)
    ratio = v / beam.speed
    d = grating.period
    for i in range(len(traj)):
        for j in range(traj.t.size):
            yield (i, int(traj.slit_index[i]), float(t_ps[j]), float(traj.x[i, j] / d),
                   float(traj.z[i, j] / z_unit), float(ratio[i, j]))


def _run_analytic(s: _Setup, out: Path, threads: int, report: Dict, files: List[str], counters: Dict):
    raster = _render(s, _density_source(s))
    write_pgm(out / "carpet.pgm", raster)
    files.append("carpet.pgm")
    traj, field = _ensemble(s, threads)
    counters["trajectory_records"] = int(traj.t.size * len(traj))
    write_trajectories(out / "trajectories.csv",
                       _trajectory_rows(traj, field, s.beam, s.grating, s.z_unit))
    files.append("trajectories.csv")
    report["n_trajectories"] = len(traj)
    report["failed_trajectories"] = len(traj.failed)
    report["rank_preserved"] = traj.rank_preserved()
    kind = s.cfg.scenario
    sc = talbot_scales(s.beam, s.grating)
    if kind == "infinite-grating":
        x = np.linspace(-0.5, 0.5, 1001)[:-1] * s.grating.period
        rho = _density_source(s)
        report["revival_fidelity"] = an.revival_fidelity(x, rho(x, 0.0), rho(x, sc.revival_time)).value
        cell = np.floor(traj.x0 / s.grating.period + 0.5)
        inside = np.floor(traj.x / s.grating.period + 0.5) == cell[:, None]
        report["confined"] = bool(np.all(inside))
    elif kind == "cavity":
        modes = wf.cavity_modes(s.grating, s.beam.mass)
        x = np.linspace(-0.5, 0.5, 1001) * s.grating.period
        rho = _density_source(s)
        report["recurrence_time_ps"] = modes.recurrence_time * sc.revival_time_ps / sc.revival_time
        report["recurrence_fidelity"] = an.revival_fidelity(
            x, rho(x, 0.0), rho(x, modes.recurrence_time)).value
    elif kind == "fraunhofer":
        hist = an.channel_histogram(traj, s.cfg.z_obs, s.beam, s.grating)
        i0 = hist.orders.index(0)
        pred = wf.fraunhofer_intensity(np.arcsin(hist.centers), s.grating.n_slits, s.beam, s.grating)
        report["z_obs_angstrom"] = hist.z_obs
        report["outside_fraction"] = hist.outside_fraction
        for l, c, p in zip(hist.orders, hist.counts, pred):
            report[f"channel_{l}_count"] = int(c)
            report[f"channel_{l}_relative"] = c / hist.counts[i0] if hist.counts[i0] else float("nan")
            report[f"channel_{l}_predicted_relative"] = p / pred[i0]
    elif kind == "single-slit":
        p = wf.GaussianPacketParams(s.grating.sigma, s.beam.mass)
        ok = [i for i in range(len(traj)) if i not in set(traj.failed)]
        scale = p.width(traj.t) / s.grating.sigma
        err = np.abs(traj.x[ok] / traj.x0[ok, None] - scale[None, :]) / scale[None, :]
        report["scaling_law_max_rel_error"] = float(np.max(err))
    if not np.all(np.isfinite(traj.x)) and not traj.failed:
        raise FloatingPointError("non-finite trajectory samples")


def _surface_config(s: _Setup, threads: int) -> tdse.SurfaceRunConfig:
    c = s.cfg
    pot = tdse.SurfacePotential(depth=c.well_depth, alpha=c.alpha, period=c.period, c1=c.c1,
                                c2=c.c2, attraction=c.attraction)
    return tdse.SurfaceRunConfig(
        beam=s.beam, potential=pot, n_cells=c.n_cells, points_per_cell=c.points_per_cell,
        z_min=c.z_min, z_max=c.z_max, dz=c.dz, launch_height=c.launch_height, sigma_z=c.sigma_z,
        absorber_fraction=c.absorber_fraction, absorber_strength=c.absorber_strength, dt=c.dt,
        n_trajectories=s.n_traj, frame_stride=c.frame_stride, workers=threads)


def _run_surface(s: _Setup, out: Path, threads: int, report: Dict, files: List[str], counters: Dict):
    cfg = _surface_config(s, threads)
    frame_dir = out / "frames"
    frames: List[Tuple[str, float]] = []

    def on_frame(g):
        path = write_frame(frame_dir, len(frames), g.density, g.phase)
        frames.append((path.name, g.t))

    if cfg.frame_stride:
        frame_dir.mkdir(exist_ok=True)
    try:
        res = tdse.run_surface(cfg, on_frame=on_frame if cfg.frame_stride else None)
    finally:
        if frames:
            grid = tdse.make_grid(cfg.n_cells, cfg.potential.period, cfg.points_per_cell,
                                  cfg.z_min, cfg.z_max, cfg.dz, cfg.beam.mass)
            dt = cfg.dt or tdse.stable_time_step(grid)
            meta = {"nx": grid.x.size, "nz": grid.z.size, "x0_angstrom": float(grid.x[0]),
                    "dx_angstrom": grid.dx, "z0_angstrom": float(grid.z[0]),
                    "dz_angstrom": grid.dz, "dt_t0": dt, "frame_stride": cfg.frame_stride,
                    "dtype": "float64-le", "layout": "density then phase, C order (nx, nz)",
                    "frames": len(frames)}
            for name, t in frames:
                meta[f"frame.{name}.t_t0"] = t
            write_kv(frame_dir / "manifest.txt", meta)
            files.extend(f"frames/{n}" for n, _ in frames)
            files.append("frames/manifest.txt")
    counters["tdse_steps"] = res.steps
    z_t = talbot_scales(s.beam, s.grating).talbot_distance
    raster = res.carpet(s.z_unit, (0.0, s.z_end), dz=s.z_end * s.z_unit / (s.cfg.nz - 1),
                        x_cells=s.x_range, nx=s.cfg.nx)
    raster.meta.update({"scenario": "surface", "mass_amu": fmt(s.beam.mass),
                        "energy_mev": fmt(s.beam.energy)})
    write_pgm(out / "carpet.pgm", raster)
    files.append("carpet.pgm")
    dense = res.carpet(2.0 * z_t, (0.0, 1.5), dz=0.02, x_cells=(-1.0, 1.0), nx=96)
    depth = cfg.potential.well_depth
    meas = tdse.measure_talbot_shift(dense, z_t, depth, s.beam.energy)
    report["beeby_ratio_measured"] = meas.ratio if meas.ratio is not None else "failed"
    report["zT_tilde_measured_angstrom"] = meas.measured_distance if not meas.failed else "failed"
    report["revival_peak_fidelity"] = meas.peak_fidelity
    report["channel_fit_residual"] = res.fit_residual
    report["absorbed_probability"] = res.absorbed
    report["tdse_steps"] = res.steps
    for n, p in zip(res.orders, res.channel_probabilities()):
        report[f"channel_{int(n)}_probability"] = float(p)
    rows = []
    if res.trajectory_times is not None:
        from .core import UnitSystem

        tt = res.trajectory_times
        t_ps = UnitSystem.time_to_ps(tt)
        xs, zs = res.trajectory_x, res.trajectory_z
        vx = np.gradient(xs, tt, axis=1) if tt.size > 1 else np.zeros_like(xs)
        vz = np.gradient(zs, tt, axis=1) if tt.size > 1 else np.ones_like(zs)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(vz != 0, vx / vz, np.nan)
        cell = np.floor(xs[:, 0] / s.grating.period + 0.5).astype(int)
        for i in range(xs.shape[0]):
            for j in range(tt.size):
                rows.append((i, int(cell[i]), float(t_ps[j]), float(xs[i, j] / s.grating.period),
                             float(zs[i, j] / s.z_unit), float(ratio[i, j])))
    write_trajectories(out / "trajectories.csv", rows)
    files.append("trajectories.csv")
    report["n_trajectories"] = s.n_traj


def run(cfg: ScenarioConfig, out_dir=None, threads: int = 1) -> Tuple[int, Path]:
    """Execute one scenario; returns (exit status, manifest path)."""
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        s = _setup(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    start = time.perf_counter()
    files: List[str] = []
    counters: Dict[str, int] = {}
    report: Dict[str, object] = {"scenario": cfg.scenario, "mass_amu": s.beam.mass,
                                 "energy_mev": s.beam.energy}
    report.update(_derived(s))
    status, error = "complete", None
    try:
        if cfg.scenario == "surface":
            _run_surface(s, out, threads, report, files, counters)
        else:
            _run_analytic(s, out, threads, report, files, counters)
    except (bohm.IntegrationError, tdse.InstabilityError, FloatingPointError, ArithmeticError) as exc:
        status, error = "partial", f"{type(exc).__name__}: {exc}"
    write_kv(out / "report.txt", report)
    files.append("report.txt")
    manifest: Dict[str, object] = {"status": status, "package_version": __version__}
    if error:
        manifest["error"] = error.replace("\n", " ")
    for key, value in asdict(cfg).items():
        manifest[f"config.{key}"] = "auto" if value is None else value
    for key, value in _derived(s).items():
        manifest[f"derived.{key}"] = value
    manifest["derived.z_unit_angstrom"] = s.z_unit
    manifest["derived.beeby_ratio_predicted"] = tdse.beeby_distance(
        1.0, cfg.well_depth * cfg.attraction**2, s.beam.energy).predicted_ratio
    manifest["files"] = " ".join(files)
    for name in files:
        manifest[f"file.{name}.sha256"] = sha256(out / name)
        manifest[f"file.{name}.bytes"] = (out / name).stat().st_size
    for key, value in counters.items():
        manifest[f"steps.{key}"] = value
    manifest["wall_clock_s"] = round(time.perf_counter() - start, 3)
    path = out / "manifest.txt"
    write_kv(path, manifest)
    return (0 if status == "complete" else EXIT_NUMERICAL), path


# ---------------------------------------------------------------------------
# comparisons


def _load_manifest(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such manifest")
    m = read_kv(path)
    if "status" not in m:
        raise ConfigError(f"{path}: not a run manifest")
    return path.parent, m


def _row_fidelities(x, rows_a, rows_b):
    return np.array([an.revival_fidelity(x, a, b).value for a, b in zip(rows_a, rows_b)])


def compare(manifest_a, manifest_b, metric: str) -> Dict[str, object]:
    dir_a, ma = _load_manifest(manifest_a)
    dir_b, mb = _load_manifest(manifest_b)
    result: Dict[str, object] = {"metric": metric, "a": str(manifest_a), "b": str(manifest_b)}
    if metric == "beeby":
        ra, rb = read_kv(dir_a / "report.txt"), read_kv(dir_b / "report.txt")
        key = "zT_tilde_measured_angstrom"
        if key not in ra or key not in rb:
            raise ConfigError("beeby comparison needs two surface runs")
        try:
            za, zb = float(ra[key]), float(rb[key])
        except ValueError:
            raise ConfigError("a revival measurement failed in one of the runs")
        result.update({"zT_tilde_a_angstrom": za, "zT_tilde_b_angstrom": zb, "ratio": za / zb,
                       "ratio_predicted": float(ra.get("beeby_ratio_predicted", "nan"))
                       / float(rb.get("beeby_ratio_predicted", "nan"))})
        return result
    ha, va = read_pgm(dir_a / "carpet.pgm")
    hb, vb = read_pgm(dir_b / "carpet.pgm")
    xa, za = raster_axes(ha)
    xb, zb = raster_axes(hb)
    if xa.size != xb.size or not np.allclose(xa, xb, rtol=0, atol=1e-9):
        raise ConfigError("rasters have different x grids")
    if metric == "fidelity":
        if za.size != zb.size or not np.allclose(za, zb, rtol=0, atol=1e-9):
            raise ConfigError("rasters have different z grids")
        fid = _row_fidelities(xa, va, vb)
        z_rows = za
    elif metric == "rescale":
        ma_mass = float(read_kv(dir_a / "report.txt")["mass_amu"])
        mb_mass = float(read_kv(dir_b / "report.txt")["mass_amu"])
        scale = math.sqrt(mb_mass / ma_mass)
        ua, ub = float(ha["z_unit_angstrom"]), float(hb["z_unit_angstrom"])
        z_a = za * ua
        z_b = zb * ub
        target = z_a * scale
        if target[-1] > z_b[-1] * (1 + 1e-9) or target[0] < z_b[0] - 1e-9:
            raise ConfigError("rescaled z range of the second raster does not cover the first")
        rows_b = np.array([tdse._row_at(vb, z_b, zq) for zq in target])
        fid = _row_fidelities(xa, va, rows_b)
        z_rows = za
        result["z_scale"] = scale
    else:
        raise ConfigError(f"unknown metric {metric!r}")
    result.update({"rows": int(fid.size), "fidelity_min": float(fid.min()),
                   "fidelity_mean": float(fid.mean())})
    result["_table"] = list(zip(z_rows.tolist(), fid.tolist()))
    return result


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one scenario from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    p_run.add_argument("--threads", type=int, default=1)
    p_cmp = sub.add_parser("compare", help="compare two completed runs")
    p_cmp.add_argument("manifest_a")
    p_cmp.add_argument("manifest_b")
    p_cmp.add_argument("--metric", choices=("fidelity", "beeby", "rescale"), required=True)
    p_cmp.add_argument("--out", default=None, help="write the per-slice table here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            if args.threads < 1:
                raise ConfigError("--threads must be at least 1")
            cfg = load_config(args.config)
            status, manifest = run(cfg, args.out, args.threads)
            print(f"manifest = {manifest}")
            if status:
                print(f"error: numerical failure, partial outputs in {manifest.parent}",
                      file=sys.stderr)
            return status
        result = compare(args.manifest_a, args.manifest_b, args.metric)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    table = result.pop("_table", None)
    for key, value in result.items():
        print(f"{key} = {fmt(value)}")
    if args.out and table is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("z_over_2zT,fidelity\n")
            for z, f in table:
                fh.write(f"{fmt(z)},{fmt(f)}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
