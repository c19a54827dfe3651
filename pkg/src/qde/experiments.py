"""Configured experiments: the entropy bound, the locality checks and their tables."""

from __future__ import annotations

import copy
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import serialization as ser
from .dynamics import Evolver, cone_map, convergence_in_volume, lemma2_check, tail_log_slope
from .errors import DomainError, ValidationError
from .hamiltonian import LAMBDA_BRACKET, LAMBDA_GRID_POINTS, MODELS, Potential, group_velocity
from .multitime import entropy_rate, sup_search
from .operators import LIMITS, PAULI, Window, check_dim, pauli
from .partitions import FamilySpec, initial_params, realize
from .states import invariance_check, make_state, mean_entropy_family

SUITE_ITEMS = ("velocity", "entropy", "rate", "bound", "cone", "lemma2", "converge")

PASSED, FAILED, VACUOUS, FLAGGED = "passed", "failed", "vacuous", "hypotheses not met"


def _default_tolerances() -> dict:
    return {"invariance": 1e-10, "bound": 0.0, "localized": 1e-9, "rhs_identity": 1e-12}


@dataclass
class ExperimentConfig:
    """Everything a run needs; loaded from a JSON document.

    ``model`` is ``{"name": ..., "params": {...}}`` for a built-in model or
    ``{"file": path}`` for a serialised potential.  ``state`` is
    ``{"kind": "tracial" | "product" | "gibbs", ...}`` with ``rho_site`` or
    ``beta`` as needed.  ``partition`` holds :class:`FamilySpec` fields with
    ``window`` as ``[lo, hi]``.  The ``cone``, ``lemma2``, ``converge`` and
    ``entropy`` blocks configure the corresponding suite items.
    """

    model: dict = field(default_factory=lambda: {"name": "ising", "params": {"h": 1.0, "J": 1.0}})
    radius: int = 5
    boundary: str = "open"
    state: dict = field(default_factory=lambda: {"kind": "tracial"})
    partition: dict = field(default_factory=lambda: {"family": "projective", "Z": 2, "window": [0, 0], "observable": "z"})
    M_max: int = 4
    t: float = 1.0
    budget: int = 2
    seed: int | None = 0
    lambda_bracket: list = field(default_factory=lambda: list(LAMBDA_BRACKET))
    lambda_points: int = LAMBDA_GRID_POINTS
    tolerances: dict = field(default_factory=_default_tolerances)
    suite: list = field(default_factory=lambda: list(SUITE_ITEMS))
    cone: dict = field(default_factory=lambda: {"operator": "z", "t_grid": [0.0, 0.5, 1.0], "x_grid": None})
    lemma2: dict = field(default_factory=lambda: {"operator": "z", "t": [0.25, 0.5], "lam": [0.5, 1.0], "eps2": 0.5})
    converge: dict = field(default_factory=lambda: {"operator": "z", "t": [0.5, 1.0]})
    entropy: dict = field(default_factory=lambda: {"sizes": [1, 2, 3, 4]})
    out: str = "qde-out"
    parallel: bool = False

    def __post_init__(self):
        if self.boundary not in ("open", "periodic"):
            raise ValidationError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.radius < 0 or self.M_max < 1 or self.budget < 1:
            raise ValidationError("radius must be >= 0, M_max and budget >= 1")
        tol = _default_tolerances()
        tol.update(self.tolerances or {})
        self.tolerances = tol
        unknown = set(self.suite) - set(SUITE_ITEMS)
        if unknown:
            raise ValidationError(f"unknown suite items {sorted(unknown)}; choose from {SUITE_ITEMS}")
        check_dim(2, 2 * self.radius + 1)
        fam = self.partition.get("family", "projective")
        fixed = fam in ("trivial", "file") or (fam == "projective" and self.partition.get("observable") is not None)
        if self.seed is None and (self.budget > 1 or not fixed):
            raise ValidationError(f"family {fam!r} with budget {self.budget} is randomised and needs a seed")
        Z = int(self.partition.get("Z", len(self.partition.get("probabilities") or [None, None])))
        if Z**self.M_max > LIMITS.max_record_dim:
            raise ValidationError(f"Z^M = {Z**self.M_max} exceeds the record cap {LIMITS.max_record_dim}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown config keys {sorted(extra)}")
        return cls(**copy.deepcopy(d))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig.from_dict(d)

    @property
    def window(self) -> Window:
        return Window.centered(self.radius)


def build_model(spec: dict) -> Potential:
    if "file" in spec:
        return ser.load_potential(spec["file"])
    name = spec.get("name")
    if name not in MODELS:
        raise DomainError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    return MODELS[name](**spec.get("params", {}))


def build_state(cfg: ExperimentConfig, phi: Potential, window: Window):
    kw = {k: v for k, v in cfg.state.items() if k != "kind"}
    if "rho_site" in kw:
        kw["rho_site"] = _matrix(kw["rho_site"])
    return make_state(cfg.state.get("kind", "tracial"), phi, window, **kw)


def _matrix(v) -> np.ndarray:
    if isinstance(v, dict):
        return ser.matrix_from_dict(v)
    return np.asarray(v, dtype=np.complex128)


def family_spec(cfg: ExperimentConfig, phi: Potential) -> FamilySpec:
    p = dict(cfg.partition)
    w = p.pop("window", [0, 0])
    obs = p.pop("observable", None)
    if obs is not None and not isinstance(obs, str):
        obs = _matrix(obs)
    return FamilySpec(window=Window(int(w[0]), int(w[1])), site_spec=phi.site_spec, observable=obs, **p)


def _local_operator(name: str):
    if name.lower() not in PAULI:
        raise DomainError(f"operator must be a Pauli name, got {name!r}")
    return pauli(name.lower(), 0)


def state_entropy_family(cfg: ExperimentConfig, phi: Potential, sizes):
    """Entropies of the configured state family on windows ``[0, n-1]``.

    Periodic Gibbs states need ``n > range``; smaller sizes are dropped.
    """
    kw = dict(cfg.state)
    kind = kw.pop("kind", "tracial")
    if "rho_site" in kw:
        kw["rho_site"] = _matrix(kw["rho_site"])
    sizes = sorted(n for n in set(sizes) if n >= 1)
    if kind == "gibbs":
        kw.setdefault("boundary", cfg.boundary)
        if kw["boundary"] == "periodic":
            sizes = [n for n in sizes if n > phi.range]
    if len(sizes) < 2:
        raise ValidationError(f"mean entropy needs two usable window sizes, got {sizes}")
    return mean_entropy_family(kind, phi, sizes, **kw)


# ------------------------------------------------------------ bound report

@dataclass
class BoundReport:
    """Both sides of ``h <= 2 V (sigma + log d)`` for one configuration.

    ``lhs`` is the best ``S(rho_M)/M`` found by the partition search and
    ``lhs_increment`` the matching last-increment estimate.
    """

    lhs: float
    rhs: float
    slack: float
    components: dict
    status: str
    lhs_increment: float = 0.0
    localized_ok: bool = True
    invariance: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def bound_rhs(V: float, sigma: float, local_dim: int) -> float:
    return 2.0 * V * (sigma + math.log(local_dim))


def verify_bound(cfg: ExperimentConfig, phi: Potential | None = None) -> tuple:
    """Search for the largest entropy rate and compare it with the bound.

    Returns the report and the search result.  A state that fails the
    invariance check yields status ``"hypotheses not met"`` and no assertion.
    """
    phi = build_model(cfg.model) if phi is None else phi
    window = cfg.window
    ev = Evolver.from_potential(phi, window, cfg.boundary)
    state = build_state(cfg, phi, window)
    inv = invariance_check(state, ev, 1, cfg.t, cfg.tolerances["invariance"])

    vel = group_velocity(phi, tuple(cfg.lambda_bracket), cfg.lambda_points)
    ent = state_entropy_family(cfg, phi, set(cfg.entropy.get("sizes", [1, 2])) | {window.size})
    sigma = ent.mean_entropy_estimate
    d = phi.local_dim
    rhs = bound_rhs(vel.value, sigma, d)

    fam = family_spec(cfg, phi)
    res = sup_search(ev, state, fam, cfg.M_max, cfg.budget, cfg.seed or 0, cfg.t)
    lhs = res.best.rate
    localized = all(e["localized_ok"] for e in res.log)
    components = {
        "V": vel.value,
        "lambda_star": vel.lambda_star,
        "sigma": sigma,
        "log_d": math.log(d),
        "local_dim": d,
        "mean_entropy_sizes": ent.sizes,
    }
    if not inv.passed:
        status = FLAGGED
    elif lhs <= rhs + cfg.tolerances["bound"] and localized:
        status = PASSED
    else:
        status = FAILED
    report = BoundReport(
        lhs=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        components=components,
        status=status,
        lhs_increment=res.best.diff_rate,
        localized_ok=localized,
        invariance={"time": inv.time_deviation, "translation": inv.translation_deviation, "tol": inv.tol},
        search={"family": res.family, "budget": res.budget, "seed": res.seed, "log": res.log},
    )
    return report, res


# ------------------------------------------------------------------- suite

@dataclass
class ItemResult:
    name: str
    status: str
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


@dataclass
class Bundle:
    out: Path
    items: list
    manifest: dict

    @property
    def ok(self) -> bool:
        return all(i.status != FAILED for i in self.items)

    def summary_text(self) -> str:
        lines = [f"{i.name}: {i.status}" for i in self.items]
        lines.append("overall: " + ("ok" if self.ok else "FAILED"))
        return "\n".join(lines) + "\n"


def _item_velocity(cfg, phi, out: Path) -> ItemResult:
    vel = group_velocity(phi, tuple(cfg.lambda_bracket), cfg.lambda_points)
    summary = {"V": vel.value, "lambda_star": vel.lambda_star}
    files = []
    rep = vel.method_report
    if "grid" in rep:
        files.append(ser.write_csv(out / "velocity_grid.csv", ["lambda", "f"], zip(rep["grid"], rep["grid_values"])))
        summary["grid_certificate"] = rep["grid_certificate"]
        summary["at_bracket_edge"] = rep["at_bracket_edge"]
        ok = rep["grid_certificate"]
    else:
        summary["reason"] = rep.get("reason")
        ok = True
    return ItemResult("velocity", PASSED if ok else FAILED, files, summary)


def _item_entropy(cfg, phi, out: Path) -> ItemResult:
    rep = state_entropy_family(cfg, phi, cfg.entropy.get("sizes", [1, 2, 3, 4]))
    f = ser.write_entropy_csv(rep, out / "entropy.csv")
    return ItemResult("entropy", PASSED, [f], {"mean_entropy_estimate": rep.mean_entropy_estimate})


def _item_rate(cfg, phi, out: Path) -> ItemResult:
    window = cfg.window
    ev = Evolver.from_potential(phi, window, cfg.boundary)
    state = build_state(cfg, phi, window)
    fam = family_spec(cfg, phi)
    part = realize(fam, initial_params(fam, np.random.default_rng(cfg.seed or 0)))
    est = entropy_rate(part, ev, state, cfg.M_max, cfg.t)
    f = ser.write_rate_csv(est, out / "rate.csv")
    tol = cfg.tolerances["localized"]
    ok = est.localized_ok(tol) and est.dimension_ok(tol)
    summary = {"rate": est.rate, "diff_rate": est.diff_rate, "localized_bound": est.localized_bound}
    return ItemResult("rate", PASSED if ok else FAILED, [f], summary)


def _item_bound(cfg, phi, out: Path) -> ItemResult:
    report, res = verify_bound(cfg, phi)
    files = [ser.write_rate_csv(res.best, out / "bound_rate.csv")]
    files.append(ser.write_json(report.to_dict(), out / "bound.json"))
    files.append(ser.save_partition(res.partition, out / "best_partition.json"))
    summary = {"lhs": report.lhs, "rhs": report.rhs, "slack": report.slack}
    return ItemResult("bound", report.status, files, summary)


def _item_cone(cfg, phi, out: Path) -> ItemResult:
    c = cfg.cone
    op = _local_operator(c.get("operator", "z"))
    window = cfg.window
    x_grid = c.get("x_grid") or list(range(0, cfg.radius + 1))
    cm = cone_map(phi, op, op, c.get("t_grid", [0.0, 0.5, 1.0]), x_grid, window, cfg.boundary)
    files = [ser.write_cone_csv(cm, out / "cone.csv"), ser.write_cone_csv(cm, out / "cone_bound.csv", "bound")]
    ok = cm.ok
    zero = [j for j, x in enumerate(cm.sites) if x != 0]
    t0 = [i for i, t in enumerate(cm.times) if t == 0]
    if t0 and zero:
        ok &= bool(np.all(cm.cells[np.ix_(t0, zero)] <= 1e-12))
    slopes = {}
    tail = [j for j, x in enumerate(cm.sites) if 2 <= abs(x) <= 5]
    for i, t in enumerate(cm.times):
        if 0 < t <= 1 and len(tail) >= 2 and np.all(cm.cells[i, tail] > 0):
            slopes[str(t)] = tail_log_slope([abs(cm.sites[j]) for j in tail], cm.cells[i, tail])
    ok &= all(s < 0 for s in slopes.values())
    return ItemResult("cone", PASSED if ok else FAILED, files, {"tail_log_slopes": slopes, "bound_ok": cm.ok})


def _item_lemma2(cfg, phi, out: Path) -> ItemResult:
    c = cfg.lemma2
    op = _local_operator(c.get("operator", "z"))
    files, statuses, rows = [], [], {}
    for t in c.get("t", [0.25, 0.5]):
        for lam in c.get("lam", [0.5, 1.0]):
            rep = lemma2_check(phi, op, t, c.get("eps2", 0.5), lam, c.get("r_max", cfg.radius), boundary=cfg.boundary)
            files.append(ser.write_lemma2_csv(rep, out / f"lemma2_t{t}_lam{lam}.csv"))
            statuses.append(FAILED if not rep.ok else VACUOUS if rep.all_vacuous else PASSED)
            rows[f"t={t},lam={lam}"] = {"ok": rep.ok, "all_vacuous": rep.all_vacuous, "required_radius": rep.required_radius}
    if FAILED in statuses:
        st = FAILED
    elif statuses and all(s == VACUOUS for s in statuses):
        st = VACUOUS
    else:
        st = PASSED
    return ItemResult("lemma2", st, files, rows)


def _item_converge(cfg, phi, out: Path) -> ItemResult:
    c = cfg.converge
    op = _local_operator(c.get("operator", "z"))
    radii = c.get("radii") or list(range(0, cfg.radius + 1))
    tables = [convergence_in_volume(phi, op, t, radii, cfg.boundary) for t in c.get("t", [0.5, 1.0])]
    f = ser.write_convergence_csv(tables, out / "converge.csv")
    ok = all(tab.monotone for tab in tables)
    return ItemResult("converge", PASSED if ok else FAILED, [f], {"monotone": ok})


ITEMS = {
    "velocity": _item_velocity,
    "entropy": _item_entropy,
    "rate": _item_rate,
    "bound": _item_bound,
    "cone": _item_cone,
    "lemma2": _item_lemma2,
    "converge": _item_converge,
}


def run_item(name: str, cfg: ExperimentConfig, phi: Potential | None = None) -> ItemResult:
    phi = build_model(cfg.model) if phi is None else phi
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return ITEMS[name](cfg, phi, out)


def manifest(cfg: ExperimentConfig, items: list) -> dict:
    return {
        "config": cfg.to_dict(),
        "model": cfg.model,
        "state": cfg.state,
        "partition": cfg.partition,
        "seed": cfg.seed,
        "radius": cfg.radius,
        "tolerances": cfg.tolerances,
        "limits": asdict(LIMITS),
        "items": [{"name": i.name, "status": i.status, "files": [Path(f).name for f in i.files]} for i in items],
    }


def run_suite(cfg: ExperimentConfig) -> Bundle:
    """Run the configured items and write their tables, ``manifest.json`` and ``summary.txt``.

    Items write disjoint files, so ``parallel=True`` changes only scheduling.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    phi = build_model(cfg.model)
    names = list(cfg.suite)
    start = time.perf_counter()
    if cfg.parallel and len(names) > 1:
        with ThreadPoolExecutor() as pool:
            items = list(pool.map(lambda n: run_item(n, cfg, phi), names))
    else:
        items = [run_item(n, cfg, phi) for n in names]
    man = manifest(cfg, items)
    ser.write_json(man, out / "manifest.json")
    bundle = Bundle(out, items, man)
    elapsed = time.perf_counter() - start
    (out / "summary.txt").write_text(bundle.summary_text() + f"elapsed_seconds: {elapsed:.1f}\n")
    return bundle
