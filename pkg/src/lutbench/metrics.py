"""Goodness-of-fit statistics for reconstructed spectra.

All statistics are computed per wavelength over the ``m`` reference
spectra and then averaged over wavelength.
"""

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

PERCENTILES = (2.5, 16.0, 84.0, 95.5)
REF_FLOOR = 1e-12


class ShapeMismatch(ValueError):
    pass


class DegenerateRange(ValueError):
    """Reference values are constant at some wavelength."""


class TooFewSamples(ValueError):
    pass


def _pair(ref, pred):
    ref = np.asarray(ref, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if ref.shape != pred.shape or ref.ndim != 2:
        raise ShapeMismatch(f"reference {ref.shape} vs prediction {pred.shape}")
    if ref.shape[0] == 0:
        raise TooFewSamples("no spectra to compare")
    return ref, pred


def rmse_per_wavelength(ref, pred) -> np.ndarray:
    ref, pred = _pair(ref, pred)
    return np.sqrt(np.mean((ref - pred) ** 2, axis=0))


def nrmse_per_wavelength(ref, pred, norm: str = "per-wavelength",
                         strict: bool = False) -> np.ndarray:
    """RMSE as a percentage of the reference range.

    Parameters
    ----------
    norm : {"per-wavelength", "global"}
        Range taken per band over the ``m`` reference spectra, or over all
        reference values at once.
    strict : bool
        Raise :class:`DegenerateRange` for a zero range instead of
        returning NaN for that band.
    """
    ref, pred = _pair(ref, pred)
    rmse = rmse_per_wavelength(ref, pred)
    if norm == "per-wavelength":
        span = ref.max(axis=0) - ref.min(axis=0)
    elif norm == "global":
        span = np.full(ref.shape[1], ref.max() - ref.min())
    else:
        raise ValueError(f"unknown normalisation {norm!r}")
    bad = span <= 0
    if strict and bad.any():
        raise DegenerateRange(f"{int(bad.sum())} band(s) with constant reference")
    out = np.full(rmse.shape, np.nan)
    out[~bad] = 100.0 * rmse[~bad] / span[~bad]
    return out


def relative_residuals(ref, pred):
    """``100 |pred - ref| / |ref|``; entries with ``|ref| < 1e-12`` are NaN.

    Returns the residual matrix and the number of excluded entries.
    """
    ref, pred = _pair(ref, pred)
    tiny = np.abs(ref) < REF_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        res = 100.0 * np.abs(pred - ref) / np.abs(ref)
    res[tiny] = np.nan
    return res, int(tiny.sum())


def residual_percentiles(res, qs=PERCENTILES) -> dict:
    """Per-wavelength percentiles (linear interpolation between order stats).

    NaN entries (excluded residuals) are ignored.
    """
    res = np.asarray(res, dtype=np.float64)
    if res.ndim != 2 or res.shape[0] < 2:
        raise TooFewSamples("need at least two residual spectra")
    curves = np.nanpercentile(res, list(qs), axis=0, method="linear")
    return {float(q): curves[i] for i, q in enumerate(qs)}


@dataclass
class EvalReport:
    """Error statistics of one method against a reference set."""

    method: str
    lut_size: int
    n_components: Optional[int]
    wavelengths: np.ndarray
    rmse: np.ndarray
    nrmse: np.ndarray
    mean_relative: np.ndarray
    percentiles: dict
    rmse_mean: float
    nrmse_mean: float
    n_degenerate: int = 0
    n_excluded: int = 0
    n_queries: int = 0
    n_failures: int = 0
    build_seconds: float = 0.0
    query_seconds: float = 0.0
    nrmse_norm: str = "per-wavelength"
    notes: dict = field(default_factory=dict)

    def summary_row(self) -> dict:
        return {
            "method": self.method,
            "lut_size": self.lut_size,
            "n_components": "" if self.n_components is None else self.n_components,
            "rmse": f"{self.rmse_mean:.17g}",
            "nrmse_pct": f"{self.nrmse_mean:.17g}",
            "failures": self.n_failures,
            "build_s": f"{self.build_seconds:.6f}",
            "query_s": f"{self.query_seconds:.6f}",
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("wavelengths", "rmse", "nrmse", "mean_relative"):
            d[k] = [None if not np.isfinite(v) else float(v) for v in d[k]]
        d["percentiles"] = {str(q): [float(v) for v in c]
                            for q, c in self.percentiles.items()}
        return d

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        """One row per wavelength; deterministic given the inputs."""
        qs = sorted(self.percentiles)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["wavelength_nm", "rmse", "nrmse_pct", "mean_rel_pct"]
                       + [f"p{q:g}_pct" for q in qs])
            for i, wl in enumerate(self.wavelengths):
                w.writerow([f"{wl:.17g}", f"{self.rmse[i]:.17g}",
                            f"{self.nrmse[i]:.17g}",
                            f"{self.mean_relative[i]:.17g}"]
                           + [f"{self.percentiles[q][i]:.17g}" for q in qs])


def compare(ref, pred, wavelengths=None, method: str = "", lut_size: int = 0,
            n_components: Optional[int] = None, build_seconds: float = 0.0,
            query_seconds: float = 0.0,
            nrmse_norm: str = "per-wavelength", qs=PERCENTILES) -> EvalReport:
    """Assemble every statistic for one method into an :class:`EvalReport`.

    Rows of ``pred`` that are NaN (failed queries) are dropped together with
    the matching reference rows.
    """
    ref, pred = _pair(ref, pred)
    ok = np.all(np.isfinite(pred), axis=1)
    if not ok.any():
        raise TooFewSamples("no successful predictions")
    ref, pred = ref[ok], pred[ok]
    if wavelengths is None:
        wavelengths = np.arange(ref.shape[1], dtype=np.float64)
    wavelengths = np.asarray(wavelengths, dtype=np.float64)
    if wavelengths.shape != (ref.shape[1],):
        raise ShapeMismatch("wavelength axis does not match spectra")
    rmse = rmse_per_wavelength(ref, pred)
    nrmse = nrmse_per_wavelength(ref, pred, norm=nrmse_norm)
    good = np.isfinite(nrmse)
    res, excluded = relative_residuals(ref, pred)
    return EvalReport(
        method=method,
        lut_size=int(lut_size),
        n_components=n_components,
        wavelengths=wavelengths,
        rmse=rmse,
        nrmse=nrmse,
        mean_relative=np.nanmean(res, axis=0),
        percentiles=residual_percentiles(res, qs),
        rmse_mean=float(rmse.mean()),
        nrmse_mean=float(nrmse[good].mean()) if good.any() else float("nan"),
        n_degenerate=int((~good).sum()),
        n_excluded=excluded,
        n_queries=int(ok.size),
        n_failures=int((~ok).sum()),
        build_seconds=float(build_seconds),
        query_seconds=float(query_seconds),
        nrmse_norm=nrmse_norm,
    )


def write_summary(reports, path_csv, path_txt=None) -> None:
    """Table of aggregate statistics, one row per method."""
    rows = [r.summary_row() for r in reports]
    cols = list(rows[0]) if rows else []
    with open(path_csv, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    if path_txt is not None:
        display = [{**r, "rmse": f"{float(r['rmse']):.4g}",
                    "nrmse_pct": f"{float(r['nrmse_pct']):.4g}"} for r in rows]
        widths = {c: max(len(c), *(len(str(r[c])) for r in display)) for c in cols}
        with open(path_txt, "w") as fh:
            fh.write("  ".join(c.ljust(widths[c]) for c in cols).rstrip() + "\n")
            for r in display:
                fh.write("  ".join(str(r[c]).ljust(widths[c])
                                   for c in cols).rstrip() + "\n")
