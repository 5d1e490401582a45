"""
File formats: returns CSV, distributions, spectra and portfolio problems.

Problem files are JSON::

    {
      "assets": ["A", "B", "C"],
      "mu": [...],
      "sigma": [[...], ...],
      "constraints": {"A": [...], "b": [...], "E": [...], "f": [...],
                      "bounds": [[lo, hi], ...]},
      "spectra": [{"kind": "cvar", "epsilon": 0.05}, ...],
      "uncertainty": {"vertices": [{"mu": [...], "sigma": [[...]]}, ...]},
      "tol": 1e-6
    }

``mu``/``sigma`` may be replaced by ``"returns": "file.csv"`` (relative to
the problem file); the moments are then estimated from the CSV. An empty
``constraints`` block means the long-only simplex. Floats are written with
``repr`` so a dump/load cycle reproduces every number exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .errors import InputError, InvalidSpectrumError
from .measures import EmpiricalDistribution
from .moments import MomentMatrixPair
from .portfolio import Polytope
from .spectra import Spectrum, SpectrumSet, from_dict, parse_shorthand


@dataclass(frozen=True)
class ReturnsTable:
    assets: tuple
    rows: np.ndarray

    def __init__(self, assets: Sequence[str], rows):
        assets = tuple(str(a) for a in assets)
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if len(assets) < 1:
            raise InputError("returns table needs at least one asset")
        if rows.shape[1] != len(assets):
            raise InputError(f"expected {len(assets)} columns, got {rows.shape[1]}")
        if rows.shape[0] < 2:
            raise InputError(f"need at least 2 observations, got {rows.shape[0]}")
        if not np.all(np.isfinite(rows)):
            raise InputError("returns table has missing or non-finite cells")
        rows.setflags(write=False)
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


def read_returns_csv(path) -> ReturnsTable:
    """Header row of asset names, then one observation per row."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if not header or any(not h for h in header):
            raise InputError(f"{path}:1: header must name every column")
        rows = []
        for line in reader:
            if not line or all(not c.strip() for c in line):
                continue
            lineno = reader.line_num
            if len(line) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} cells, got {len(line)}")
            try:
                vals = [float(c) for c in line]
            except ValueError:
                bad = next(c for c in line if not _is_float(c))
                raise InputError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise InputError(f"{path}:{lineno}: non-finite cell")
            rows.append(vals)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 observations, got {len(rows)}")
    return ReturnsTable(header, rows)


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def estimate_moments(table: ReturnsTable) -> MomentMatrixPair:
    """Column means and the unbiased (``T - 1``) sample covariance."""
    R = table.rows
    T = R.shape[0]
    if T < 2:
        raise InputError("need at least 2 observations")
    mean = R.mean(axis=0)
    D = R - mean
    cov = D.T @ D / (T - 1)
    return MomentMatrixPair(mean, 0.5 * (cov + cov.T))


def load_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def dump_json(obj: Any, path=None) -> str:
    text = json.dumps(obj, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_distribution(path) -> EmpiricalDistribution:
    """JSON ``{"atoms": [...], "probs": [...]}`` or a CSV of ``atom[,prob]`` rows."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = load_json(path)
        if not isinstance(data, dict) or "atoms" not in data:
            raise InputError(f"{path}: expected an object with an 'atoms' field")
        try:
            return EmpiricalDistribution(data["atoms"], data.get("probs"))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from None
    atoms, probs = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for line in reader:
            if not line or line[0].strip().startswith("#"):
                continue
            try:
                vals = [float(c) for c in line]
            except ValueError:
                if reader.line_num == 1:
                    continue  # header
                raise InputError(f"{path}:{reader.line_num}: non-numeric cell") from None
            if len(vals) not in (1, 2):
                raise InputError(f"{path}:{reader.line_num}: expected atom[,prob]")
            atoms.append(vals[0])
            probs.append(vals[1] if len(vals) == 2 else None)
    if not atoms:
        raise InputError(f"{path}: no atoms")
    if any(p is None for p in probs) and not all(p is None for p in probs):
        raise InputError(f"{path}: either every row or no row may carry a probability")
    try:
        return EmpiricalDistribution(atoms, None if probs[0] is None else probs)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _spectrum(obj: Any, where: str) -> Spectrum:
    try:
        return parse_shorthand(obj) if isinstance(obj, str) else from_dict(obj)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def _spectrum_list(data: Any, where: str) -> list[Spectrum]:
    if isinstance(data, dict) and "spectra" in data:
        data = data["spectra"]
    if isinstance(data, list):
        return [_spectrum(d, f"{where}[{i}]") for i, d in enumerate(data)]
    return [_spectrum(data, where)]


def load_spectra(arg: str) -> list[Spectrum]:
    """A shorthand such as ``cvar:0.05`` or a JSON file with one or more spectra."""
    path = Path(arg)
    if path.is_file():
        return _spectrum_list(load_json(path), str(path))
    try:
        return [parse_shorthand(arg)]
    except ValueError as exc:
        raise InputError(f"{arg!r} is neither a spectrum file nor a valid shorthand ({exc})") from None


@dataclass
class PortfolioProblem:
    assets: list
    moments: MomentMatrixPair
    polytope: Polytope
    spectra: SpectrumSet
    vertices: Optional[list] = None
    tol: float = 1e-6
    source: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.moments.n


def _matrix(data: Any, where: str, shape: Optional[tuple] = None) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}: expected numbers") from None
    if shape is not None and arr.shape != shape:
        raise InputError(f"{where}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{where}: non-finite entry")
    return arr


def _moments(obj: dict, n: Optional[int], where: str) -> MomentMatrixPair:
    for key in ("mu", "sigma"):
        if key not in obj:
            raise InputError(f"{where}: missing field {key!r}")
    mu = _matrix(obj["mu"], f"{where}.mu")
    if mu.ndim != 1 or (n is not None and mu.size != n):
        raise InputError(f"{where}.mu: expected a vector of length {n}")
    sigma = _matrix(obj["sigma"], f"{where}.sigma", (mu.size, mu.size))
    try:
        return MomentMatrixPair(mu, sigma)
    except ValueError as exc:
        raise InputError(f"{where}.sigma: {exc}") from None


def problem_from_dict(data: Any, base_dir: Path | None = None) -> PortfolioProblem:
    if not isinstance(data, dict):
        raise InputError("problem: expected a JSON object")
    if "returns" in data and "mu" not in data:
        csv_path = Path(data["returns"])
        if base_dir is not None and not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        mm = estimate_moments(read_returns_csv(csv_path))
    else:
        mm = _moments(data, None, "problem")
    n = mm.n
    assets = data.get("assets") or [f"x{i + 1}" for i in range(n)]
    if len(assets) != n:
        raise InputError(f"problem.assets: expected {n} names, got {len(assets)}")

    cons = data.get("constraints") or {}
    if not isinstance(cons, dict):
        raise InputError("problem.constraints: expected an object")
    if not cons:
        polytope = Polytope.simplex(n)
    else:
        blocks = {}
        for M, v in (("A", "b"), ("E", "f")):
            if M in cons or v in cons:
                rows = _matrix(cons.get(M, []), f"constraints.{M}")
                rhs = _matrix(cons.get(v, []), f"constraints.{v}")
                if rows.size and (rows.ndim != 2 or rows.shape[1] != n or rows.shape[0] != rhs.size):
                    raise InputError(f"constraints.{M}: expected {rhs.size} rows of length {n}")
                blocks[M], blocks[v] = (rows, rhs) if rows.size else (None, None)
        lower = upper = None
        if "bounds" in cons:
            b = cons["bounds"]
            if not isinstance(b, list) or len(b) != n or any(not isinstance(p, list) or len(p) != 2 for p in b):
                raise InputError(f"constraints.bounds: expected {n} [lo, hi] pairs")
            lower = [(-math.inf if p[0] is None else float(p[0])) for p in b]
            upper = [(math.inf if p[1] is None else float(p[1])) for p in b]
        try:
            polytope = Polytope(n, blocks.get("A"), blocks.get("b"), blocks.get("E"), blocks.get("f"), lower, upper)
        except ValueError as exc:
            raise InputError(f"constraints: {exc}") from None

    if "spectra" not in data:
        raise InputError("problem: missing field 'spectra'")
    try:
        spectra = SpectrumSet(_spectrum_list(data["spectra"], "problem.spectra"))
    except InvalidSpectrumError as exc:
        raise InputError(f"problem.spectra: {exc}") from None

    vertices = None
    unc = data.get("uncertainty")
    if unc:
        verts = unc.get("vertices") if isinstance(unc, dict) else None
        if not isinstance(verts, list) or not verts:
            raise InputError("problem.uncertainty.vertices: expected a non-empty list")
        vertices = [_moments(v, n, f"uncertainty.vertices[{i}]") for i, v in enumerate(verts)]

    tol = float(data.get("tol", 1e-6))
    if not tol > 0.0:
        raise InputError("problem.tol: must be positive")
    return PortfolioProblem(list(assets), mm, polytope, spectra, vertices, tol, data)


def problem_to_dict(problem: PortfolioProblem) -> dict:
    out = {
        "assets": list(problem.assets),
        "mu": problem.moments.mean.tolist(),
        "sigma": problem.moments.cov.tolist(),
        "constraints": problem.polytope.to_dict(),
        "spectra": [s.to_dict() for s in problem.spectra],
        "tol": problem.tol,
    }
    if problem.vertices:
        out["uncertainty"] = {
            "vertices": [{"mu": v.mean.tolist(), "sigma": v.cov.tolist()} for v in problem.vertices]
        }
    return out


def load_problem(path) -> PortfolioProblem:
    path = Path(path)
    data = load_json(path)
    try:
        return problem_from_dict(data, path.parent)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def frontier_tsv(assets: Sequence[str], rows) -> str:
    """One line per frontier point: ``epsilon  kappa  objective  x_1 ... x_n``."""
    lines = ["\t".join(["epsilon", "kappa", "objective", *assets])]
    for eps, x, obj in rows:
        kappa = math.sqrt((1.0 - eps) / eps)
        lines.append("\t".join([repr(eps), repr(kappa), repr(obj), *(repr(float(v)) for v in x)]))
    return "\n".join(lines) + "\n"


def data_path(name: str) -> Path:
    """Location of a bundled fixture file."""
    return Path(str(resources.files("wcrisk") / "data" / name))
