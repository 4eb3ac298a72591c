"""Reflectance spectra: ECOSTRESS-compatible files -> per-material lookup.

Answers one question for the physics stage: the normal-incidence reflectance
of material index m at the sensor wavelength.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpectralError

log = logging.getLogger(__name__)

EXTRAPOLATION_MARGIN_NM = 25.0


@dataclass(frozen=True)
class Spectrum:
    """Sampled reflectance curve, wavelengths in nm, values as fractions."""

    material_name: str
    wavelengths_nm: np.ndarray
    reflectance: np.ndarray

    def __post_init__(self):
        wl = np.ascontiguousarray(self.wavelengths_nm, dtype=np.float64)
        rf = np.ascontiguousarray(self.reflectance, dtype=np.float64)
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "reflectance", rf)
        if wl.ndim != 1 or wl.shape != rf.shape or wl.size < 2:
            raise SpectralError(f"{self.material_name!r}: need >=2 (wavelength, value) samples")
        if not np.all(np.diff(wl) > 0):
            raise SpectralError(f"{self.material_name!r}: wavelengths not strictly increasing")
        if rf.min() < 0.0 or rf.max() > 1.0:
            raise SpectralError(f"{self.material_name!r}: reflectance outside [0, 1]")

    def value_at(self, wavelength_nm: float, margin_nm: float = EXTRAPOLATION_MARGIN_NM) -> float:
        wl = self.wavelengths_nm
        if wavelength_nm < wl[0] - margin_nm or wavelength_nm > wl[-1] + margin_nm:
            raise SpectralError(
                f"{self.material_name!r}: {wavelength_nm} nm outside "
                f"[{wl[0]}, {wl[-1]}] nm (+/- {margin_nm} nm margin)"
            )
        # inside the margin we clamp to the edge sample (np.interp's behaviour)
        return float(np.clip(np.interp(wavelength_nm, wl, self.reflectance), 0.0, 1.0))


def flat_spectrum(name: str, reflectance: float,
                  lo_nm: float = 200.0, hi_nm: float = 20000.0) -> Spectrum:
    return Spectrum(name, np.array([lo_nm, hi_nm]), np.array([reflectance, reflectance]))


@dataclass
class SpectralLibrary:
    """Material index (1..255) -> Spectrum; index 0 -> default material."""

    entries: dict[int, Spectrum]
    default_material: Spectrum

    def spectrum_for(self, material_index: int) -> Spectrum:
        return self.entries.get(int(material_index), self.default_material)

    def reflectance_at(self, material_index: int, wavelength_nm: float,
                       margin_nm: float = EXTRAPOLATION_MARGIN_NM) -> float:
        return self.spectrum_for(material_index).value_at(wavelength_nm, margin_nm)

    def reflectance_table(self, wavelength_nm: float) -> np.ndarray:
        """(256,) lookup of R at one wavelength for every material byte."""
        table = np.empty(256, dtype=np.float64)
        for idx in range(256):
            table[idx] = self.reflectance_at(idx, wavelength_nm)
        return table


def reflectance_at(lib: SpectralLibrary, material_index: int, wavelength_nm: float,
                   margin_nm: float = EXTRAPOLATION_MARGIN_NM) -> float:
    return lib.reflectance_at(material_index, wavelength_nm, margin_nm)


# ---------------------------------------------------------------------------
# file format

def parse_spectrum_file(path: str | Path, name: str | None = None) -> Spectrum:
    """Parse one ASCII spectrum file.

    Layout: "Key: value" header lines, then two-column rows of wavelength and
    reflectance. Wavelength unit (micrometers or nanometers) and value unit
    (percent or fraction) come from the X/Y Units headers; micrometer and
    percent defaults match the ECOSTRESS library convention. Rows are sorted
    by wavelength and exact duplicates removed; equal wavelengths with
    conflicting values are an error.
    """
    path = Path(path)
    if not path.exists():
        raise SpectralError(f"spectrum file not found: {path}")
    headers: dict[str, str] = {}
    rows: list[tuple[float, float]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) == 2:
                try:
                    rows.append((float(parts[0]), float(parts[1])))
                    continue
                except ValueError:
                    pass
            if ":" in line:
                key, _, value = line.partition(":")
                headers[key.strip().lower()] = value.strip()
            else:
                raise SpectralError(f"{path.name}: unparseable line {line!r}")
    if len(rows) < 2:
        raise SpectralError(f"{path.name}: fewer than 2 data rows")

    x_units = headers.get("x units", "micrometers").lower()
    y_units = headers.get("y units", "percent").lower()
    wl = np.array([r[0] for r in rows], dtype=np.float64)
    val = np.array([r[1] for r in rows], dtype=np.float64)
    if "micro" in x_units:
        wl = wl * 1000.0
    elif "nano" not in x_units:
        raise SpectralError(f"{path.name}: unsupported X units {x_units!r}")
    if "percent" in y_units:
        if val.min() < 0.0 or val.max() > 100.0:
            raise SpectralError(f"{path.name}: reflectance outside [0, 100] percent")
        val = val / 100.0
    elif "fraction" not in y_units:
        raise SpectralError(f"{path.name}: unsupported Y units {y_units!r}")

    order = np.argsort(wl, kind="stable")
    wl, val = wl[order], val[order]
    keep = np.ones(wl.size, dtype=bool)
    for i in range(1, wl.size):
        if wl[i] == wl[i - 1]:
            if val[i] != val[i - 1]:
                raise SpectralError(
                    f"{path.name}: conflicting values at {wl[i]} nm"
                )
            keep[i] = False
    wl, val = wl[keep], val[keep]
    display = name or headers.get("name") or path.stem
    return Spectrum(display, wl, val)


def read_mapping(path: str | Path) -> dict[int, tuple[str, str]]:
    """Mapping CSV: material_index, spectrum file, display name."""
    path = Path(path)
    if not path.exists():
        raise SpectralError(f"mapping file not found: {path}")
    mapping: dict[int, tuple[str, str]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            first = row[0].strip()
            if not first.lstrip("-").isdigit():
                continue  # header row
            if len(row) < 2:
                raise SpectralError(f"{path.name}: row needs index and file: {row}")
            idx = int(first)
            if not (1 <= idx <= 255):
                raise SpectralError(f"{path.name}: material index {idx} outside [1, 255]")
            if idx in mapping:
                raise SpectralError(f"{path.name}: duplicate material index {idx}")
            display = row[2].strip() if len(row) > 2 else ""
            mapping[idx] = (row[1].strip(), display)
    if not mapping:
        raise SpectralError(f"{path.name}: no mapping rows")
    return mapping


def load_library(path: str | Path,
                 mapping: str | Path | dict[int, tuple[str, str]] | None = None,
                 default_reflectance: float = 0.5) -> SpectralLibrary:
    """Load spectra for every mapped material index.

    path: directory of spectrum files (or a single-file library of one entry).
    mapping: CSV path, a ready dict {index: (file, name)}, or None to use
    'mapping.csv' inside the directory.
    """
    path = Path(path)
    if path.is_file():
        base = path.parent
        table = {1: (path.name, "")} if mapping is None else mapping
    else:
        base = path
        table = mapping if mapping is not None else path / "mapping.csv"
    if not isinstance(table, dict):
        table = read_mapping(table)

    entries: dict[int, Spectrum] = {}
    for idx, (fname, display) in sorted(table.items()):
        fpath = base / fname
        if not fpath.exists():
            raise SpectralError(f"material {idx}: spectrum file not found: {fpath}")
        entries[idx] = parse_spectrum_file(fpath, name=display or None)
    return SpectralLibrary(entries, flat_spectrum("default", default_reflectance))


def write_library(lib: SpectralLibrary, directory: str | Path) -> Path:
    """Write every entry plus mapping.csv; load_library() round-trips exactly.

    Wavelengths are written in nanometers. Values are written as percent when
    value*100/100 is lossless for every sample, as fractions otherwise.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    mapping_rows = []
    for idx, spec in sorted(lib.entries.items()):
        slug = "".join(c if c.isalnum() else "_" for c in spec.material_name.lower()) or f"m{idx}"
        fname = f"{slug}.spectrum.txt"
        percent_ok = bool(np.all((spec.reflectance * 100.0) / 100.0 == spec.reflectance))
        vals = spec.reflectance * 100.0 if percent_ok else spec.reflectance
        y_units = "Reflectance (percent)" if percent_ok else "Reflectance (fraction)"
        with open(directory / fname, "w", encoding="utf-8") as fh:
            fh.write(f"Name: {spec.material_name}\n")
            fh.write("X Units: Wavelength (nanometers)\n")
            fh.write(f"Y Units: {y_units}\n")
            fh.write(f"Number of X Values: {spec.wavelengths_nm.size}\n")
            fh.write("\n")
            for wl, v in zip(spec.wavelengths_nm, vals):
                # repr of a Python float is shortest-lossless -> exact reload
                fh.write(f"{float(wl)!r} {float(v)!r}\n")
        mapping_rows.append((idx, fname, spec.material_name))
    mapping_path = directory / "mapping.csv"
    with open(mapping_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["material_index", "file", "name"])
        writer.writerows(mapping_rows)
    return mapping_path
