"""
Writing and reading LUT files
=============================

LUTs go to a single binary file: a JSON header line, a magic tag and raw
little-endian doubles. Reading it back is bit-exact. A CSV export is
available for other tools.
"""

import tempfile
from pathlib import Path

from lutbench.rtm import generate_lut
from lutbench.sampling import DEFAULT_SPECS, latin_hypercube
from lutbench.store import export_csv, load_lut, read_csv, save_lut

lut = generate_lut(latin_hypercube(50, DEFAULT_SPECS, seed=1))
print(f"{lut.n} spectra x {len(lut.grid)} bands")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "small.lut"
    save_lut(lut, path)
    print("header:", path.read_bytes().split(b"\n", 1)[0][:100].decode(), "...")
    back = load_lut(path)
    print("bit-identical spectra:", back.spectra.tobytes() == lut.spectra.tobytes())

    export_csv(lut, Path(tmp) / "small.csv")
    names, wl, x, y = read_csv(Path(tmp) / "small.csv")
    print("csv columns:", names, f"+ {len(wl)} wavelengths")
