"""On-disk formats: problem directories and CSV tables.

A problem directory holds ``A.mtx`` (MatrixMarket array, real general),
``b.vec`` and ``x_true.vec`` (one value per line, 17 significant digits) and
``meta.json`` (the generating spec plus seed). CSV tables may start with
``#`` metadata lines; the body below them is deterministic.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np
import scipy.io

from .problem_gen import ProblemSpec, TestProblem, assemble_problem

__all__ = [
    "FLOAT_FMT",
    "write_vec",
    "read_vec",
    "save_problem",
    "load_problem",
    "write_csv",
    "read_csv",
]

FLOAT_FMT = "%.17g"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    if value is None:
        return ""
    return str(value)


def write_vec(path, x) -> None:
    np.savetxt(path, np.asarray(x, dtype=float).reshape(-1), fmt=FLOAT_FMT)


def read_vec(path) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, dtype=float))


def save_problem(problem: TestProblem, directory) -> Path:
    """Serialise ``problem`` into ``directory`` (created if missing)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(directory / "A.mtx"), problem.A, precision=17)
    write_vec(directory / "b.vec", problem.b)
    write_vec(directory / "x_true.vec", problem.x_true)
    meta = {
        "spec": problem.spec.to_dict() if problem.spec is not None else None,
        "seed": problem.spec.seed if problem.spec is not None else None,
        "m": int(problem.A.shape[0]),
        "n": int(problem.A.shape[1]),
        "noise_norm": float(np.linalg.norm(problem.e)),
        "b_true_norm": float(np.linalg.norm(problem.b_true)),
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return directory


def load_problem(directory, regenerate: bool = True):
    """Read a problem directory.

    Returns ``(A, b, x_true, meta, problem)``. When ``regenerate`` is set and
    ``meta.json`` carries the generating spec, ``problem`` is the rebuilt
    :class:`TestProblem` (exact factors included) after checking that it
    reproduces the stored matrix and right-hand side; otherwise it is None.
    """
    directory = Path(directory)
    if not (directory / "A.mtx").exists():
        raise FileNotFoundError(f"{directory} has no A.mtx")
    A = np.asarray(scipy.io.mmread(str(directory / "A.mtx")), dtype=float)
    b = read_vec(directory / "b.vec")
    x_true = read_vec(directory / "x_true.vec") if (directory / "x_true.vec").exists() else None
    meta = {}
    if (directory / "meta.json").exists():
        with open(directory / "meta.json") as fh:
            meta = json.load(fh)
    problem = None
    if regenerate and meta.get("spec"):
        problem = assemble_problem(ProblemSpec.from_dict(meta["spec"]))
        if not (np.array_equal(problem.A, A) and np.array_equal(problem.b, b)):
            raise ValueError(f"{directory}: stored data does not match its meta.json spec")
    return A, b, x_true, meta, problem


def write_csv(path, header, rows, meta=None) -> None:
    """Write ``rows`` under ``header``; ``meta`` lines go first, prefixed by ``#``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in meta or ():
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path) -> list:
    """Read a CSV written by :func:`write_csv` into a list of dicts (strings)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def csv_body(path) -> str:
    """The CSV content below the metadata header."""
    with open(path) as fh:
        return "".join(ln for ln in fh if not ln.startswith("#"))


def ensure_writable(directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise PermissionError(f"output directory {directory} is not writable")
    return directory
