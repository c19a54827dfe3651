"""JSON documents for potentials, states and partitions; CSV tables for results.

Matrices are stored as ``{"real": [[...]], "imag": [[...]]}``.  Python's
``repr`` of a float round-trips exactly, so JSON documents reload bit for bit.
CSV values use 12 significant digits.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hamiltonian import Potential, Term
from .operators import LocalOperator, SiteSpec, Window
from .partitions import Partition
from .states import ChainState

FLOAT_FORMAT = "%.11e"
FORMAT_VERSION = 1


def matrix_to_dict(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


def matrix_from_dict(d: dict) -> np.ndarray:
    try:
        re, im = np.asarray(d["real"], dtype=float), np.asarray(d["imag"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"matrix entry needs 'real' and 'imag' arrays: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise ValidationError(f"matrix parts have shapes {re.shape} and {im.shape}")
    return re + 1j * im


def _window(d) -> Window:
    return Window(int(d[0]), int(d[1]))


def potential_to_dict(phi: Potential) -> dict:
    return {
        "type": "potential",
        "version": FORMAT_VERSION,
        "local_dim": phi.local_dim,
        "terms": [{"support": list(t.support), "matrix": matrix_to_dict(t.operator.matrix)} for t in phi.terms],
    }


def potential_from_dict(d: dict) -> Potential:
    spec = SiteSpec(int(d["local_dim"]))
    terms = []
    for t in d["terms"]:
        support = tuple(int(s) for s in t["support"])
        op = LocalOperator(Window(0, max(support)), matrix_from_dict(t["matrix"]), spec)
        terms.append(Term(support, op))
    return Potential(spec, tuple(terms))


def state_to_dict(state: ChainState) -> dict:
    return {
        "type": "state",
        "version": FORMAT_VERSION,
        "kind": state.kind,
        "local_dim": state.site_spec.local_dim,
        "window": [state.window.lo, state.window.hi],
        "rho": matrix_to_dict(state.rho),
    }


def state_from_dict(d: dict) -> ChainState:
    return ChainState(_window(d["window"]), matrix_from_dict(d["rho"]), d.get("kind", "custom"), SiteSpec(int(d["local_dim"])))


def partition_to_dict(p: Partition) -> dict:
    return {
        "type": "partition",
        "version": FORMAT_VERSION,
        "family": p.family,
        "local_dim": p.site_spec.local_dim,
        "window": [p.window.lo, p.window.hi],
        "elements": [matrix_to_dict(x.matrix) for x in p.elements],
    }


def partition_from_dict(d: dict) -> Partition:
    w, spec = _window(d["window"]), SiteSpec(int(d["local_dim"]))
    els = tuple(LocalOperator(w, matrix_from_dict(m), spec) for m in d["elements"])
    return Partition(els, d.get("family", "file"))


def write_json(obj: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def save_potential(phi: Potential, path) -> Path:
    return write_json(potential_to_dict(phi), path)


def load_potential(path) -> Potential:
    return potential_from_dict(read_json(path))


def save_state(state: ChainState, path) -> Path:
    return write_json(state_to_dict(state), path)


def load_state(path) -> ChainState:
    return state_from_dict(read_json(path))


def save_partition(p: Partition, path) -> Path:
    return write_json(partition_to_dict(p), path)


def load_partition(path) -> Partition:
    return partition_from_dict(read_json(path))


# -------------------------------------------------------------------- CSV

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return FLOAT_FORMAT % float(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def write_cone_csv(cone, path, which: str = "cells") -> Path:
    """One row per time; columns are the sites of the grid."""
    table = cone.cells if which == "cells" else cone.bound
    header = ["t"] + [f"x={x}" for x in cone.sites]
    return write_csv(path, header, ([t] + list(row) for t, row in zip(cone.times, table)))


def write_convergence_csv(tables, path) -> Path:
    """One row per time; columns are the radii."""
    tables = list(tables)
    radii = tables[0].radii
    header = ["t"] + [f"R={r}" for r in radii]
    return write_csv(path, header, ([tab.t] + list(tab.errors) for tab in tables))


def write_entropy_csv(report, path) -> Path:
    rows = zip(report.sizes, report.entropies, report.per_site)
    return write_csv(path, ["size", "entropy", "entropy_per_site"], rows)


def write_rate_csv(est, path) -> Path:
    rows = [(m + 1, s, s / (m + 1), inc) for m, (s, inc) in enumerate(zip(est.entropies, est.increments))]
    return write_csv(path, ["M", "S", "S_over_M", "increment"], rows)


def write_lemma2_csv(report, path) -> Path:
    rows = [(r.R, r.actual_error, r.certified_eps, int(r.vacuous), int(r.satisfied)) for r in report.rows]
    return write_csv(path, ["R", "actual_error", "certified_eps", "vacuous", "satisfied"], rows)
