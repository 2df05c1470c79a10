"""End-to-end interpolation vs. emulation benchmark.

``generate`` writes the reference and training LUTs, ``run`` builds both
methods on every training LUT and scores them against the reference, and
``validate`` scores a saved emulator against any LUT. Every stage writes
into one output directory described by ``manifest.json``.
"""

import dataclasses
import json
import logging
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, emulator, metrics, plots, rtm, sampling, simplex
from .store import FormatError, load_lut, save_lut

log = logging.getLogger(__name__)

METHODS = ("linear", "gpr")


class InvalidConfig(ValueError):
    pass


class MissingData(FileNotFoundError):
    pass


def _default_variables():
    return [dataclasses.asdict(s) for s in sampling.DEFAULT_SPECS]


@dataclass
class ExperimentConfig:
    """All knobs of the benchmark; defaults reproduce the reference setup.

    Design seeds are derived as ``seed + nominal LHS size``; the emulator
    split and restarts use ``seed`` directly.
    """

    grid: dict = field(default_factory=lambda: {"start": 400.0, "stop": 2400.0,
                                                "step": 5.0})
    geometry: dict = field(default_factory=lambda: {"sza": 55.0, "vza": 0.0,
                                                    "raa": 0.0})
    variables: list = field(default_factory=_default_variables)
    lut_sizes: list = field(default_factory=lambda: [500, 2000])
    reference_size: int = 5000
    vertices: bool = True
    components: list = field(default_factory=lambda: [10, 20])
    methods: list = field(default_factory=lambda: list(METHODS))
    seed: int = 2017
    train_fraction: float = 0.70
    restarts: int = 5
    max_iter: int = 200
    max_opt_points: Optional[int] = 600
    nrmse_norm: str = "per-wavelength"
    warmup: int = 10

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.lut_sizes or min(self.lut_sizes) < 1:
            raise InvalidConfig("lut_sizes must be positive")
        if self.reference_size <= max(self.lut_sizes):
            raise InvalidConfig("reference_size must exceed every LUT size")
        if not self.components or min(self.components) < 1:
            raise InvalidConfig("components must be positive")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise InvalidConfig(f"unknown methods {sorted(unknown)}")
        if self.nrmse_norm not in ("per-wavelength", "global"):
            raise InvalidConfig(f"bad nrmse_norm {self.nrmse_norm!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig("train_fraction must be in (0, 1)")
        try:
            self.specs()
            self.spectral_grid()
            self.geom()
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidConfig(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from None
        if not isinstance(d, dict):
            raise InvalidConfig(f"{path}: top level must be an object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def specs(self):
        return tuple(sampling.VariableSpec(v["name"], v.get("units", ""),
                                           float(v["min"]), float(v["max"]))
                     for v in self.variables)

    def spectral_grid(self) -> rtm.SpectralGrid:
        g = self.grid
        return rtm.SpectralGrid(np.arange(g["start"], g["stop"] + 0.5 * g["step"],
                                          g["step"]))

    def geom(self) -> rtm.Geometry:
        return rtm.Geometry(**self.geometry)

    def design_seed(self, size: int) -> int:
        return int(self.seed) + int(size)

    def train_config(self, n_components: int) -> emulator.TrainConfig:
        return emulator.TrainConfig(n_components=n_components,
                                    train_fraction=self.train_fraction,
                                    seed=self.seed, restarts=self.restarts,
                                    max_iter=self.max_iter,
                                    max_opt_points=self.max_opt_points)


def reference_path(out: Path, cfg: ExperimentConfig) -> Path:
    return out / "luts" / f"reference_{cfg.reference_size}.lut"


def training_path(out: Path, size: int) -> Path:
    return out / "luts" / f"train_{size}.lut"


class Manifest:
    """Collects stage timings; written last, listing every output file."""

    def __init__(self, out: Path, command: str, cfg: ExperimentConfig):
        self.out = out
        self.data = {"command": command, "tool_version": __version__,
                     "python": platform.python_version(),
                     "numpy": np.__version__, "config": cfg.to_dict(),
                     "stages": {}, "status": "running"}

    def stage(self, name, seconds):
        self.data["stages"][name] = round(float(seconds), 6)

    def write(self, status="ok", error=None):
        self.data["status"] = status
        if error is not None:
            self.data["error"] = error
        path = self.out / "manifest.json"
        files = sorted(str(p.relative_to(self.out)) for p in self.out.rglob("*")
                       if p.is_file() and p != path)
        self.data["artifacts"] = files + ["manifest.json"]
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=1, sort_keys=True)
            fh.write("\n")


def _build_lut(cfg, size, with_vertices):
    specs = cfg.specs()
    design = sampling.latin_hypercube(size, specs, cfg.design_seed(size))
    if with_vertices:
        design = sampling.merge(design, sampling.vertices(specs))
    return rtm.generate_lut(design, cfg.spectral_grid(), cfg.geom(),
                            provenance=f"surrogate-rtm lhs n={size}"
                            + (" + vertices" if with_vertices else ""))


def generate(cfg: ExperimentConfig, out, manifest: Optional[Manifest] = None) -> dict:
    """Write the reference LUT and every (vertex-augmented) training LUT."""
    out = Path(out)
    (out / "luts").mkdir(parents=True, exist_ok=True)
    own = manifest is None
    manifest = manifest or Manifest(out, "generate", cfg)
    paths = {}
    try:
        t0 = time.perf_counter()
        ref = _build_lut(cfg, cfg.reference_size, False)
        save_lut(ref, reference_path(out, cfg))
        paths["reference"] = reference_path(out, cfg)
        manifest.stage("generate_reference", time.perf_counter() - t0)
        for size in cfg.lut_sizes:
            t0 = time.perf_counter()
            lut = _build_lut(cfg, size, cfg.vertices)
            save_lut(lut, training_path(out, size))
            paths[size] = training_path(out, size)
            manifest.stage(f"generate_train_{size}", time.perf_counter() - t0)
    except Exception as exc:
        if own:
            manifest.write("failed", repr(exc))
        raise
    if own:
        manifest.write()
    return paths


def _require(path: Path):
    if not path.is_file():
        raise MissingData(f"missing LUT file {path} (use --generate to create it)")
    return load_lut(path)


def run_linear(lut, queries, warmup=10):
    """Triangulate ``lut`` and interpolate ``queries``; returns (result, build_s)."""
    t0 = time.perf_counter()
    complex_ = simplex.build(lut.points)
    build_s = time.perf_counter() - t0
    if warmup:
        simplex.interpolate_batch(complex_, lut.spectra, queries[:warmup])
    res = simplex.interpolate_batch(complex_, lut.spectra, queries)
    return res, build_s


def run(cfg: ExperimentConfig, out, generate_missing: bool = False) -> list:
    """Full benchmark; returns the list of :class:`EvalReport`."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, "run", cfg)
    reports = []
    try:
        if generate_missing and not all(
                p.is_file() for p in [reference_path(out, cfg)]
                + [training_path(out, s) for s in cfg.lut_sizes]):
            generate(cfg, out, manifest)
        ref = _require(reference_path(out, cfg))
        queries = ref.points
        for d in ("reports", "models", "figures"):
            (out / d).mkdir(exist_ok=True)
        for size in cfg.lut_sizes:
            lut = _require(training_path(out, size))
            if lut.grid != ref.grid:
                raise FormatError(f"training LUT {size} and reference use different grids")
            size_reports = []
            if "linear" in cfg.methods:
                res, build_s = run_linear(lut, queries, cfg.warmup)
                rep = metrics.compare(ref.spectra, res.values, ref.grid.wavelengths,
                                      method="linear", lut_size=lut.n,
                                      build_seconds=build_s,
                                      query_seconds=res.elapsed,
                                      nrmse_norm=cfg.nrmse_norm)
                rep.notes = {"walk_fallback_scans": res.scans}
                size_reports.append(rep)
                manifest.stage(f"linear_{size}_build", build_s)
                manifest.stage(f"linear_{size}_query", res.elapsed)
            if "gpr" in cfg.methods:
                size_reports += _run_gpr(cfg, lut, size, ref, out, manifest)
            for rep in size_reports:
                stem = out / "reports" / f"{rep.lut_size}_{rep.method}"
                rep.write_csv(stem.with_suffix(".csv"))
                rep.write_json(stem.with_suffix(".json"))
            if size_reports:
                plots.residual_bands_svg(
                    out / "figures" / f"residuals_{lut.n}.svg",
                    [(f"{r.method} ({r.lut_size} nodes)", r) for r in size_reports],
                    title=f"Relative residuals vs {ref.n}-spectrum reference")
            reports += size_reports
        metrics.write_summary(reports, out / "summary.csv", out / "summary.txt")
        plots.runtime_bars_svg(out / "figures" / "runtime.svg",
                               [f"{r.method} / {r.lut_size}" for r in reports],
                               [r.query_seconds for r in reports],
                               title=f"Time to reconstruct {ref.n} spectra")
    except Exception as exc:
        manifest.write("failed", repr(exc))
        raise
    manifest.write()
    return reports


def _run_gpr(cfg, lut, size, ref, out, manifest):
    reports = []
    p_max = max(cfg.components)
    model = emulator.train_emulator(lut, cfg.train_config(p_max), validate=False)
    timings = model.timings
    manifest.stage(f"gpr_{size}_train", timings["pca"] + sum(timings["components"]))
    x_val = lut.points[model.val_idx]
    s_val = lut.spectra[model.val_idx]
    for p in sorted(cfg.components):
        m = model if p == p_max else model.truncate(p)
        m.validation = emulator.validation_summary(m, x_val, s_val)
        emulator.save_model(m, out / "models" / f"gpr_{lut.n}_p{p}.model")
        if cfg.warmup:
            emulator.predict(m, ref.points[:cfg.warmup])
        res = emulator.predict(m, ref.points)
        build_s = timings["pca"] + sum(timings["components"][:p])
        rep = metrics.compare(ref.spectra, res.values, ref.grid.wavelengths,
                              method=f"gpr-{p}", lut_size=lut.n, n_components=p,
                              build_seconds=build_s, query_seconds=res.elapsed,
                              nrmse_norm=cfg.nrmse_norm)
        rep.notes = {"validation": m.validation,
                     "queries_outside_bounds": len(res.outside),
                     "explained_variance": float(m.pca.explained.sum())}
        manifest.stage(f"gpr_{size}_p{p}_query", res.elapsed)
        reports.append(rep)
    return reports


def validate(model_path, lut_path, nrmse_norm="per-wavelength"):
    """Score a saved emulator against the spectra of any LUT."""
    model = emulator.load_model(model_path)
    lut = load_lut(lut_path)
    if not np.array_equal(model.wavelengths, lut.grid.wavelengths):
        raise FormatError(f"{lut_path}: wavelength grid differs from the model's")
    if model.x_train.shape[1] != lut.design.dim:
        raise FormatError(f"{lut_path}: {lut.design.dim} variables, model expects "
                          f"{model.x_train.shape[1]}")
    res = emulator.predict(model, lut.points)
    n_nodes = len(model.train_idx) + len(model.val_idx)
    rep = metrics.compare(lut.spectra, res.values, lut.grid.wavelengths,
                          method=f"gpr-{model.p}", lut_size=n_nodes,
                          n_components=model.p, query_seconds=res.elapsed,
                          nrmse_norm=nrmse_norm)
    rep.notes = {"queries_outside_bounds": len(res.outside)}
    return rep
