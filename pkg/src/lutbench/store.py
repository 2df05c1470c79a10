"""Single-file binary container for LUTs, emulator models and designs.

Layout::

    <UTF-8 JSON header, one line>\\n
    LUTBENCH
    <float64 little-endian blocks, in header order>

The header lists every array as ``{"name", "shape", "offset"}`` where
``offset`` counts bytes from the start of the payload (just after the
magic). ``schema_version`` is 1.
"""

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sampling import Design, VariableSpec

MAGIC = b"LUTBENCH"
SCHEMA_VERSION = 1
_LE_F64 = np.dtype("<f8")


class FormatError(ValueError):
    """The file is not a valid container (bad magic, truncated, bad shape)."""


class VersionError(FormatError):
    pass


def write_container(path, meta: dict, arrays: dict) -> None:
    """Write named float64 arrays plus a JSON-serialisable ``meta`` dict."""
    descriptors = []
    blocks = []
    offset = 0
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype=_LE_F64)
        descriptors.append({"name": name, "shape": list(a.shape),
                            "offset": offset})
        blob = a.tobytes(order="C")
        blocks.append(blob)
        offset += len(blob)
    header = {"schema_version": SCHEMA_VERSION, "meta": meta,
              "arrays": descriptors}
    text = json.dumps(header, sort_keys=True, ensure_ascii=False,
                      allow_nan=False, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))
        fh.write(b"\n")
        fh.write(MAGIC)
        for blob in blocks:
            fh.write(blob)


def read_container(path):
    """Inverse of :func:`write_container`; returns ``(meta, arrays)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: no header terminator")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header ({exc})") from None
    if not isinstance(header, dict) or "arrays" not in header:
        raise FormatError(f"{path}: header is not a container descriptor")
    if raw[nl + 1:nl + 1 + len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic")
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise VersionError(f"{path}: schema version {version!r} unsupported")
    payload = memoryview(raw)[nl + 1 + len(MAGIC):]
    arrays = {}
    expected = 0
    for desc in header["arrays"]:
        shape = tuple(int(s) for s in desc["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        start = int(desc["offset"])
        if start != expected or start + nbytes > len(payload):
            raise FormatError(f"{path}: array {desc['name']!r} truncated or "
                              "misplaced")
        arrays[desc["name"]] = np.frombuffer(
            payload[start:start + nbytes], dtype=_LE_F64).astype(
                np.float64).reshape(shape)
        expected = start + nbytes
    if expected != len(payload):
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes")
    return header.get("meta", {}), arrays


@dataclass
class Lut:
    """Design points paired with the spectra simulated at them."""

    design: Design
    grid: "SpectralGrid"
    geometry: "Geometry"
    spectra: np.ndarray
    provenance: str = ""
    created: Optional[str] = None

    def __post_init__(self):
        self.spectra = np.asarray(self.spectra, dtype=np.float64)
        if self.spectra.ndim != 2:
            raise FormatError("spectra must be a 2-D array")
        if self.spectra.shape[0] != self.design.n:
            raise FormatError(
                f"{self.spectra.shape[0]} spectra for {self.design.n} nodes")
        if self.spectra.shape[1] != len(self.grid):
            raise FormatError(
                f"{self.spectra.shape[1]} bands for a {len(self.grid)}-point grid")

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def points(self) -> np.ndarray:
        return self.design.points


def design_meta(design: Design) -> dict:
    return {
        "specs": [{"name": s.name, "units": s.units, "min": s.min,
                   "max": s.max} for s in design.specs],
        "seed": design.seed,
        "kind": design.kind,
    }


def design_from_meta(meta: dict, points) -> Design:
    specs = tuple(VariableSpec(d["name"], d["units"], float(d["min"]),
                               float(d["max"])) for d in meta["specs"])
    return Design(specs, points, seed=meta.get("seed"),
                  kind=meta.get("kind", "lhs"))


def save_lut(lut: Lut, path) -> None:
    meta = {
        "type": "lut",
        "design": design_meta(lut.design),
        "geometry": {"sza": lut.geometry.sza, "vza": lut.geometry.vza,
                     "raa": lut.geometry.raa},
        "provenance": lut.provenance,
        "seed": lut.design.seed,
        "created": lut.created,
    }
    write_container(path, meta, {
        "design_points": lut.design.points,
        "wavelengths": lut.grid.wavelengths,
        "spectra": lut.spectra,
    })


def load_lut(path) -> Lut:
    from .rtm import Geometry, SpectralGrid

    meta, arrays = read_container(path)
    if meta.get("type") != "lut":
        raise FormatError(f"{path}: not a LUT container")
    try:
        design = design_from_meta(meta["design"], arrays["design_points"])
        grid = SpectralGrid(arrays["wavelengths"])
        geom = Geometry(**meta["geometry"])
        return Lut(design=design, grid=grid, geometry=geom,
                   spectra=arrays["spectra"],
                   provenance=meta.get("provenance", ""),
                   created=meta.get("created"))
    except (KeyError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: inconsistent LUT ({exc})") from None


def export_csv(lut: Lut, path) -> None:
    """Variable names then wavelengths as header; one row per node."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(lut.design.names)
                        + [f"{w:.17g}" for w in lut.grid.wavelengths])
        for x, spec in zip(lut.design.points, lut.spectra):
            writer.writerow([f"{v:.17g}" for v in x]
                            + [f"{v:.17g}" for v in spec])


def read_csv(path):
    """Parse a file written by :func:`export_csv`.

    Returns
    -------
    names : list of str
    wavelengths, points, spectra : ndarray
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]

    def numeric(s):
        try:
            float(s)
            return True
        except ValueError:
            return False

    n_vars = next((i for i, h in enumerate(header) if numeric(h)), len(header))
    body = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(
        -1, len(header))
    return (header[:n_vars], np.array([float(h) for h in header[n_vars:]]),
            body[:, :n_vars], body[:, n_vars:])
