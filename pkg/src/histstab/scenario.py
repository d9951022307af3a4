"""Scenario files: loading, validation, execution and output tables.

A scenario is one JSON document. Loading fills in defaults and checks every
dimension before any numerical work; the resolved document is echoed into
the run report so each output can be regenerated from it.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .decoherence import (
    CatState,
    build_pointer_projectors,
    MAX_BATH,
    build_spin_bath,
    cat_decomposition,
    cat_scenario,
    off_diagonal_decay,
    plateau_average,
    predicted_repetition,
)
from .errors import OutputError, ResourceError, ValidationError
from .histories import HistorySet, ProjectionDecomposition, check_consistency, decoherence_functional
from .operators import DensityMatrix, FactoredSpace, Projector
from .search import HistoryTemplate, rotation_family, search_consistent_sets
from .stability import RepetitionCurve, TimeGrid, check_stability

log = logging.getLogger(__name__)

OUTPUTS = ("consistency", "stability", "cat", "search")
INF = "+inf"
DEFAULTS = {
    "lambda": 0.1,
    "grid": {"t_d": 1.0, "n_points": 256},
    "tolerances": {"structural": 1e-10, "numerical": 1e-9, "consistency": 1e-8},
    "outputs": ["consistency", "stability"],
    "context": {"prefixes": {}},
    "seed": 0,
    "history_cap": 4096,
}
SEARCH_DEFAULTS = {"tol": 1e-6, "budget": 20000, "grid_points": 64, "radius": 1e-2, "pointer_params": []}
BATH_DEFAULTS = {"couplings": None, "coupling_range": [0.5, 1.5], "env_state": "plus"}


@dataclass
class ScenarioConfig:
    data: dict
    source: str | None = None

    @property
    def name(self) -> str:
        return self.data.get("name", "scenario")

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


# ---------------------------------------------------------------- loading


def shipped_scenarios() -> dict:
    """Name -> path of the fixtures bundled with the package."""
    root = resources.files("histstab") / "scenarios"
    return {p.name[: -len(".scenario")]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".scenario")}


def resolve_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = shipped_scenarios()
    key = p.name[: -len(".scenario")] if p.name.endswith(".scenario") else p.name
    if key in shipped:
        return shipped[key]
    raise ValidationError(f"{name_or_path}: no such scenario file or shipped fixture")


def load_scenario(path) -> ScenarioConfig:
    path = resolve_path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read scenario ({exc})") from exc
    return parse_scenario(text, str(path))


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{source}: top level must be a JSON object")
    cfg = ScenarioConfig(resolve_defaults(raw), source)
    validate(cfg)
    return cfg


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_defaults(raw: dict) -> dict:
    data = _merge(DEFAULTS, raw)
    model = data.get("model")
    if isinstance(model, dict) and model.get("type") == "spin_bath":
        data["model"] = _merge(BATH_DEFAULTS, model)
    if isinstance(data.get("search"), dict):
        data["search"] = _merge(SEARCH_DEFAULTS, data["search"])
    data["context"]["prefixes"] = {str(k): v for k, v in data["context"].get("prefixes", {}).items()}
    return data


# ---------------------------------------------------------------- validation


def _complex(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ValidationError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ValidationError(f"{where}: expected a number or [re, im], got {x!r}")


def _vector(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ValidationError(f"{where}: expected a non-empty list of entries")
    return np.array([_complex(x, f"{where}[{i}]") for i, x in enumerate(v)])


def _matrix(m, where: str) -> np.ndarray:
    if not isinstance(m, list) or not m:
        raise ValidationError(f"{where}: expected a list of rows")
    rows = [_vector(r, f"{where}[{i}]") for i, r in enumerate(m)]
    if any(len(r) != len(rows) for r in rows):
        raise ValidationError(f"{where}: matrix must be square")
    return np.array(rows)


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{where}: missing field '{key}'")
    return d[key]


def _space(data: dict) -> FactoredSpace:
    model = _require(data, "model", "scenario")
    kind = _require(model, "type", "model")
    if kind == "spin_bath":
        n = _require(model, "n_bath", "model")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"model.n_bath: expected a positive integer, got {n!r}")
        if n > MAX_BATH:
            raise ResourceError(f"model.n_bath = {n} exceeds the limit of {MAX_BATH}")
        return FactoredSpace(2 ** n, 2)
    if kind == "explicit":
        dim = _require(model, "dim", "model")
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ValidationError(f"model.dim: expected a positive integer, got {dim!r}")
        return FactoredSpace(1, dim)
    raise ValidationError(f"model.type: unknown model {kind!r}")


def validate(cfg: ScenarioConfig) -> None:
    """Shape and range checks only; raises ``ValidationError`` naming the fields."""
    d = cfg.data
    space = _space(d)
    model = d["model"]
    if model["type"] == "explicit":
        h = model.get("hamiltonian", "zero")
        if h != "zero":
            hm = _matrix(h, "model.hamiltonian")
            if hm.shape[0] != space.dim:
                raise ValidationError(f"model.hamiltonian has dimension {hm.shape[0]} but model.dim is {space.dim}")
    else:
        g = model["couplings"]
        if g is not None:
            if not isinstance(g, list) or len(g) != model["n_bath"]:
                raise ValidationError(f"model.couplings must list {model['n_bath']} values to match model.n_bath")
            if any(not isinstance(x, (int, float)) or x == 0 for x in g):
                raise ValidationError("model.couplings must be nonzero numbers")
        lo_hi = model["coupling_range"]
        if not (isinstance(lo_hi, list) and len(lo_hi) == 2 and lo_hi[0] <= lo_hi[1]):
            raise ValidationError("model.coupling_range must be [low, high]")

    state = _require(d, "state", "scenario")
    kind = _require(state, "type", "state")
    if kind == "cat":
        a = _complex(_require(state, "a", "state"), "state.a")
        b = _complex(_require(state, "b", "state"), "state.b")
        norm = abs(a) ** 2 + abs(b) ** 2
        if abs(norm - 1) > d["tolerances"]["structural"]:
            raise ValidationError(f"cat amplitudes state.a, state.b: |a|^2 + |b|^2 = {norm:.12g}, expected 1")
        if space.dim_sys != 2:
            raise ValidationError(f"state.type 'cat' needs a two-level system, model has dimension {space.dim_sys}")
    elif kind == "vector":
        v = _vector(_require(state, "vector", "state"), "state.vector")
        if v.size != space.dim:
            raise ValidationError(f"state.vector has length {v.size} but the model dimension is {space.dim}")
    elif kind == "matrix":
        m = _matrix(_require(state, "matrix", "state"), "state.matrix")
        if m.shape[0] != space.dim:
            raise ValidationError(f"state.matrix has dimension {m.shape[0]} but the model dimension is {space.dim}")
    else:
        raise ValidationError(f"state.type: unknown state {kind!r}")

    slices = _require(d, "slices", "scenario")
    if not isinstance(slices, list):
        raise ValidationError("slices: expected a list")
    prev = None
    for i, s in enumerate(slices):
        where = f"slices[{i}]"
        t = _require(s, "time", where)
        if not isinstance(t, (int, float)) or t < 0:
            raise ValidationError(f"{where}.time must be a non-negative number")
        if prev is not None and not t > prev:
            raise ValidationError(f"{where}.time must exceed slices[{i - 1}].time")
        prev = t
        _validate_projectors(_require(s, "projectors", where), f"{where}.projectors", space, kind)

    grid = d["grid"]
    if not isinstance(grid.get("t_d"), (int, float)) or not grid["t_d"] > 0:
        raise ValidationError("grid.t_d must be a positive number")
    if not isinstance(grid.get("n_points"), int) or grid["n_points"] < 2:
        raise ValidationError("grid.n_points must be an integer >= 2")
    if not isinstance(d["lambda"], (int, float)) or not 0 < d["lambda"] < 1:
        raise ValidationError("lambda must lie in (0, 1)")
    if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
        raise ValidationError("seed must be an integer")
    for k, v in d["tolerances"].items():
        if not isinstance(v, (int, float)) or not v > 0:
            raise ValidationError(f"tolerances.{k} must be positive")
    bad = [o for o in d["outputs"] if o not in OUTPUTS]
    if bad:
        raise ValidationError(f"outputs: unknown entries {bad}; choose from {list(OUTPUTS)}")
    if "cat" in d["outputs"] and (model["type"] != "spin_bath" or kind != "cat"):
        raise ValidationError("outputs 'cat' needs model.type 'spin_bath' and state.type 'cat'")
    if "search" in d["outputs"]:
        _validate_search(_require(d, "search", "scenario"), space)
    for key, prefix in d["context"]["prefixes"].items():
        if not key.isdigit() or int(key) >= len(slices):
            raise ValidationError(f"context.prefixes: no slice {key!r}")
        if not isinstance(prefix, list) or len(prefix) > int(key):
            raise ValidationError(f"context.prefixes.{key} must list at most {key} indices")
        for i, j in enumerate(prefix):
            k = _slice_size(slices[i]["projectors"], space)
            if not isinstance(j, int) or not 0 <= j < k:
                raise ValidationError(f"context.prefixes.{key}[{i}] out of range for slices[{i}]")


def _slice_size(spec: dict, space: FactoredSpace) -> int:
    kind = spec["type"]
    if kind == "vectors":
        n = len(spec["groups"])
        covered = sum(len(g) for g in spec["groups"])
        return n + (1 if spec.get("complete") and covered < space.dim else 0)
    if kind == "pointer":
        return len(spec["subspaces"])
    if kind == "cat":
        return 2
    return 1


def _validate_projectors(spec, where: str, space: FactoredSpace, state_kind: str) -> None:
    kind = _require(spec, "type", where)
    if kind == "vectors":
        groups = _require(spec, "groups", where)
        if not isinstance(groups, list) or not groups:
            raise ValidationError(f"{where}.groups must be a non-empty list")
        for g, group in enumerate(groups):
            if not isinstance(group, list) or not group:
                raise ValidationError(f"{where}.groups[{g}] must be a non-empty list of vectors")
            for n, v in enumerate(group):
                vec = _vector(v, f"{where}.groups[{g}][{n}]")
                if vec.size != space.dim:
                    raise ValidationError(
                        f"{where}.groups[{g}][{n}] has length {vec.size} but the model dimension is {space.dim}"
                    )
    elif kind == "pointer":
        subs = _require(spec, "subspaces", where)
        if not isinstance(subs, list) or not subs:
            raise ValidationError(f"{where}.subspaces must be a non-empty list")
        for g, group in enumerate(subs):
            if not isinstance(group, list) or not group:
                raise ValidationError(f"{where}.subspaces[{g}] must be a non-empty list of vectors")
            for n, v in enumerate(group):
                vec = _vector(v, f"{where}.subspaces[{g}][{n}]")
                if vec.size != space.dim_sys:
                    raise ValidationError(
                        f"{where}.subspaces[{g}][{n}] has length {vec.size} but the system dimension is {space.dim_sys}"
                    )
    elif kind == "cat":
        if state_kind != "cat":
            raise ValidationError(f"{where}: projector type 'cat' needs state.type 'cat'")
    elif kind != "identity":
        raise ValidationError(f"{where}.type: unknown projector type {kind!r}")


def _validate_search(s: dict, space: FactoredSpace) -> None:
    if s.get("family") != "rotation":
        raise ValidationError("search.family: only 'rotation' is supported")
    if space.dim_sys != 2:
        raise ValidationError("search.family 'rotation' needs a two-level system")
    sl = _require(s, "slices", "search")
    if not isinstance(sl, list) or not sl:
        raise ValidationError("search.slices must be a non-empty list")
    prev = None
    for i, x in enumerate(sl):
        for key in ("time", "offset", "scale"):
            if not isinstance(_require(x, key, f"search.slices[{i}]"), (int, float)):
                raise ValidationError(f"search.slices[{i}].{key} must be a number")
        if prev is not None and not x["time"] > prev:
            raise ValidationError(f"search.slices[{i}].time must exceed the previous slice time")
        prev = x["time"]
    bounds = _require(s, "bounds", "search")
    if not (isinstance(bounds, list) and len(bounds) == 1 and len(bounds[0]) == 2 and bounds[0][0] <= bounds[0][1]):
        raise ValidationError("search.bounds must be [[low, high]] for the one-parameter rotation family")
    for p in s["pointer_params"]:
        if not isinstance(p, list) or len(p) != 1:
            raise ValidationError("search.pointer_params entries must be one-element lists")
    if not isinstance(s["grid_points"], int) or s["grid_points"] < 2:
        raise ValidationError("search.grid_points must be an integer >= 2")
    if not isinstance(s["budget"], int) or s["budget"] < s["grid_points"]:
        raise ValidationError("search.budget must be an integer no smaller than search.grid_points")


# ---------------------------------------------------------------- building


@dataclass
class Built:
    space: FactoredSpace
    hamiltonian: np.ndarray
    rho: DensityMatrix
    history_set: HistorySet
    grid: TimeGrid
    model: object = None
    cat: CatState | None = None
    random_couplings: bool = False


def build(cfg: ScenarioConfig) -> Built:
    d = cfg.data
    space = _space(d)
    m = d["model"]
    model = None
    cat = None
    if m["type"] == "spin_bath":
        model = build_spin_bath(m["n_bath"], m["couplings"], m["env_state"], d["seed"], tuple(m["coupling_range"]))
        h = model.hamiltonian
    else:
        hm = m.get("hamiltonian", "zero")
        h = np.zeros((space.dim, space.dim), complex) if hm == "zero" else _matrix(hm, "model.hamiltonian")

    st = d["state"]
    if st["type"] == "cat":
        cat = CatState(_complex(st["a"], "state.a"), _complex(st["b"], "state.b"))
        env = model.env_state if model is not None else np.ones(1)
        rho = DensityMatrix.from_vector(np.kron(env, cat.vector))
    elif st["type"] == "vector":
        rho = DensityMatrix.from_vector(_vector(st["vector"], "state.vector"))
    else:
        rho = DensityMatrix.checked(_matrix(st["matrix"], "state.matrix"), d["tolerances"]["structural"])

    slices = []
    for i, s in enumerate(d["slices"]):
        label = s.get("label", f"slice{i}")
        slices.append((float(s["time"]), _decomposition(s["projectors"], label, space, cat, d)))
    hs = HistorySet(rho, h, tuple(slices))
    if model is not None:
        hs.__dict__["propagator"] = model.propagator
    grid = TimeGrid.linear(float(d["grid"]["t_d"]), d["grid"]["n_points"])
    return Built(space, h, rho, hs, grid, model, cat, model is not None and m["couplings"] is None)


def _decomposition(spec: dict, label: str, space: FactoredSpace, cat, d: dict) -> ProjectionDecomposition:
    kind = spec["type"]
    tol = d["tolerances"]["structural"]
    if kind == "identity":
        return ProjectionDecomposition((Projector.identity(space.dim, f"{label}[I]"),), label)
    if kind == "pointer":
        subs = [[_vector(v, "subspace") for v in g] for g in spec["subspaces"]]
        dec = build_pointer_projectors(space, subs, label)
    elif kind == "cat":
        dec = cat_decomposition(space, cat, label)
    else:
        groups = [[_vector(v, "vector") for v in g] for g in spec["groups"]]
        labels = spec.get("labels")
        dec = ProjectionDecomposition.from_vectors(groups, label, labels, spec.get("complete", False))
    return ProjectionDecomposition.checked(dec.projectors, label, tol)


# ---------------------------------------------------------------- running


@dataclass
class RunReport:
    data: dict
    out_dir: Path
    files: list = field(default_factory=list)


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return INF if x > 0 else "-inf"
    if math.isnan(x):
        return None
    return x


def _stability_json(r) -> dict:
    return {
        "label": r.label,
        "slice": r.slice_index,
        "prefix": list(r.prefix),
        "t_star": _num(r.t_star),
        "F_star": _num(r.f_star),
        "t_s": _num(r.t_s),
        "lambda": r.lam,
        "t_d": r.t_d,
        "threshold": r.lam * r.t_d,
        "passed": r.passed,
        "skipped": r.skipped,
    }


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in text).strip("_") or "curve"


def run_scenario(cfg: ScenarioConfig, out_dir, seed: int | None = None) -> RunReport:
    """Execute the requested analyses and write the report and tables."""
    start = time.perf_counter()
    if seed is not None:
        cfg = ScenarioConfig(copy.deepcopy(cfg.data), cfg.source)
        cfg.data["seed"] = int(seed)
    validate(cfg)
    d = cfg.data
    tol = d["tolerances"]
    b = build(cfg)
    hs = b.history_set
    seed_meta = d["seed"] if b.random_couplings else None
    report: dict = {"artifact_version": __version__, "scenario": d}
    report["model"] = {"type": d["model"]["type"], "dim": b.space.dim, "dim_env": b.space.dim_env, "dim_sys": b.space.dim_sys}
    if b.model is not None:
        report["model"].update(couplings=[float(g) for g in b.model.couplings], seed=d["seed"] if b.random_couplings else None)
    tables: dict = {}
    curves: dict = {}

    if "consistency" in d["outputs"]:
        dfun = decoherence_functional(hs, d["history_cap"])
        cr = check_consistency(hs, tol["consistency"], functional=dfun)
        report["consistency"] = {
            "max_off_diag": cr.max_off_diag,
            "is_consistent": cr.is_consistent,
            "worst_pair": [list(h) for h in cr.worst_pair] if cr.worst_pair else None,
            "tol": cr.tol,
            "probabilities": {",".join(map(str, h)): min(1.0, max(0.0, float(p))) for h, p in zip(dfun.histories, dfun.probabilities())},
        }
        tables["functional.csv"] = _functional_table(dfun)

    if "stability" in d["outputs"]:
        prefixes = {int(k): tuple(v) for k, v in d["context"]["prefixes"].items()}
        reports = check_stability(hs, d["lambda"], b.grid, prefixes, tol["numerical"])
        out = []
        for sr in reports:
            entry = _stability_json(sr)
            entry["projectors"] = []
            for j, pr in enumerate(sr.per_projector):
                pj = _stability_json(pr)
                if pr.curve is not None:
                    name = f"curves/stability_s{sr.slice_index}_p{j}_{_slug(pr.label)}.csv"
                    curves[name] = pr.curve
                    pj["curve_file"] = name
                entry["projectors"].append(pj)
            out.append(entry)
        report["stability"] = out

    if "cat" in d["outputs"]:
        report["cat"], extra = _cat_block(b)
        curves.update({k: v for k, v in extra.items() if isinstance(v, RepetitionCurve)})
        tables.update({k: v for k, v in extra.items() if isinstance(v, str)})

    if "search" in d["outputs"]:
        report["search"] = _search_block(b, d)

    report["curves"] = sorted(curves)
    report["tables"] = sorted(tables)
    report["timing"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_clock_seconds": time.perf_counter() - start,
    }
    files = {name: emit_curve_text(c, scenario=cfg.name, seed=seed_meta) for name, c in curves.items()}
    files.update(tables)
    files["report.json"] = json.dumps(report, indent=2, sort_keys=True) + "\n"
    written = _write_all(Path(out_dir), files)
    return RunReport(report, Path(out_dir), written)


def _cat_block(b: Built) -> tuple:
    curve, plateau = cat_scenario(b.model, b.cat, b.grid)
    block = {
        "p0": curve.p0,
        "weights": list(b.cat.weights),
        "plateau_prediction": plateau,
        "plateau_ratio_prediction": b.cat.plateau_factor(),
        "t_dc": None,
        "fit_residual": None,
        "t_dc_over_t_d": None,
        "plateau_average": None,
        "reconstruction_max_abs_error": None,
    }
    extra = {"curves/cat_repetition.csv": curve}
    if b.cat.a * b.cat.b != 0:
        fit = off_diagonal_decay(b.model, b.cat, b.grid)
        pred = predicted_repetition(b.cat, fit.coherence, curve.p0)
        block["reconstruction_max_abs_error"] = float(np.max(np.abs(pred - curve.values)))
        block["t_dc"] = fit.t_dc
        block["fit_residual"] = fit.fit_residual
        if fit.t_dc is not None:
            block["t_dc_over_t_d"] = fit.t_dc / b.grid.t_d
            block["plateau_average"] = plateau_average(curve, fit.t_dc)
        rows = ["t,epsilon,re,im"] + [
            f"{t:.17g},{abs(c):.17g},{c.real:.17g},{c.imag:.17g}" for t, c in zip(fit.times, fit.coherence)
        ]
        extra["curves/cat_coherence.csv"] = "\n".join(rows) + "\n"
    return block, extra


def _search_block(b: Built, d: dict) -> dict:
    s = d["search"]
    times = tuple(float(x["time"]) for x in s["slices"])
    family = rotation_family(
        b.space, [(x["offset"], x["scale"]) for x in s["slices"]], s["bounds"], s["pointer_params"], "rotation"
    )
    template = HistoryTemplate(b.rho, b.hamiltonian, times)
    res = search_consistent_sets(template, family, s["tol"], s["budget"], d["seed"], s["grid_points"], s["radius"])
    return {
        "seed": res.seed,
        "tol": res.tol,
        "evaluations": res.evaluations,
        "grid_points": res.grid_points,
        "candidates": res.candidates,
        "minima": [
            {"theta": list(m.theta), "violation": m.violation, "pointer_distance": _num(m.pointer_distance), "start": list(m.start), "start_violation": m.start_violation}
            for m in res.minima
        ],
    }


def _functional_table(dfun) -> str:
    rows = ["h,h_prime,re,im"]
    for i, h in enumerate(dfun.histories):
        for j, g in enumerate(dfun.histories):
            z = dfun.matrix[i, j]
            rows.append(f"{'-'.join(map(str, h))},{'-'.join(map(str, g))},{z.real:.17g},{z.imag:.17g}")
    return "\n".join(rows) + "\n"


def _write_all(out_dir: Path, files: dict) -> list:
    # stage everything, then move into place; nothing is left behind on failure
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out_dir}: {exc}") from exc
    moved = []
    try:
        for name, text in files.items():
            p = stage / name
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")
        for name in sorted(files):
            dest = out_dir / name
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(stage / name, dest)
            moved.append(dest)
    except OSError as exc:
        for p in moved:
            p.unlink(missing_ok=True)
        raise OutputError(f"writing outputs to {out_dir} failed: {exc}") from exc
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return moved


# ---------------------------------------------------------------- curve tables


def emit_curve_text(curve: RepetitionCurve, scenario: str | None = None, seed: int | None = None) -> str:
    lines = [f"# label: {curve.label}", f"# prefix: {','.join(map(str, curve.prefix))}"]
    if scenario is not None:
        lines.append(f"# scenario: {scenario}")
    if seed is not None:
        lines.append(f"# seed: {seed}")
    lines.append("t,p")
    lines += [f"{t:.17g},{p:.17g}" for t, p in zip(curve.times, curve.values)]
    return "\n".join(lines) + "\n"


def emit_curve_table(curve: RepetitionCurve, path, scenario: str | None = None, seed: int | None = None) -> None:
    """Comma-separated t, p(t) with '#' metadata lines, 17 significant digits."""
    try:
        Path(path).write_text(emit_curve_text(curve, scenario, seed), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_curve_table(path) -> tuple:
    """Inverse of ``emit_curve_table``: (curve, metadata dict)."""
    meta, ts, ps = {}, [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line and line != "t,p":
            t, p = line.split(",")
            ts.append(float(t))
            ps.append(float(p))
    prefix = tuple(int(x) for x in meta.get("prefix", "").split(",") if x)
    return RepetitionCurve(TimeGrid(np.array(ts)), np.array(ps), meta.get("label", ""), prefix), meta

