"""Experiment registry, validation, seeding, dispatch and atomic report writing.

Every command is a function ``(params, seed) -> (derived, metrics)``.  A
report echoes the validated config, the derived parameters (with their
clamp and override flags), the metrics, the wall-clock time and the package
version.  Re-running an echoed config reproduces every field except
``wall_clock_seconds``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .adversarial import (build_shells, default_shell_count, distinguishing_experiment, make_rho,
                          sample_dno, sample_dyes, shattering_experiment, typicality_check)
from .convex import (check_appendix_lemmas, estimate_thickened_boundary_volume, ball_theorem_ratio,
                     target_from_json, thickened_boundary_bound)
from .gauss import LowerBoundParams, make_rng
from .grid import GridInfeasible, GridParams, build_grid, generate_cover
from .tester_one_sided import OneSidedConfig, run_a_prime, verify_certificate
from .tester_two_sided import LearnConfig, ggr_test

JOBS_ENV = "CONVEXITY_TESTBED_JOBS"
EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE = 0, 2, 3


class ConfigError(ValueError):
    """A config failed validation; ``problems`` lists every offending key."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


# --------------------------------------------------------------------------
# parameter coercion


def _as_bool(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("1", "true", "yes", "on", "0", "false", "no", "off"):
        return v.lower() in ("1", "true", "yes", "on")
    if isinstance(v, (int, np.integer)) and v in (0, 1):
        return bool(v)
    raise ValueError(f"not a boolean: {v!r}")


def _as_int(v):
    if isinstance(v, bool):
        raise ValueError("booleans are not integers")
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"not an integer: {v!r}")
    return int(f)


def _as_target(v):
    """A target given as a dict, a JSON string or a path to a JSON file."""
    if isinstance(v, dict):
        obj = v
    elif isinstance(v, str) and v.lstrip().startswith("{"):
        obj = json.loads(v)
    else:
        obj = json.loads(Path(v).read_text())
    target_from_json(obj)
    return obj


def _as_floats(v):
    if isinstance(v, str):
        v = [s for s in v.replace(",", " ").split() if s]
    return [float(x) for x in v]


COERCE = {int: _as_int, float: float, str: str, bool: _as_bool, "target": _as_target, "floats": _as_floats}


@dataclass(frozen=True)
class Param:
    kind: object
    default: object = None
    required: bool = False


def _grid_params(p) -> GridParams:
    return GridParams(p["n"], p["eps"], ell=p["ell"], n_prime=p["nprime"], cube_cap=p["cube_cap"])


def _lower_bound(p) -> tuple[LowerBoundParams | None, dict]:
    """Resolve (N, r): r from the cap equation unless given; N = 1 needs an explicit r."""
    if p.get("r") is not None:
        N = p["N"] if p.get("N") is not None else LowerBoundParams.build(p["n"]).N
        return None, {"N": N, "r": p["r"], "r_overridden": True}
    lb = LowerBoundParams.build(p["n"], N=p.get("N"), q=p.get("q"))
    return lb, {**lb.to_dict(), "r_overridden": False}


# --------------------------------------------------------------------------
# commands


def _cmd_test_one_sided(p, seed):
    gp = _grid_params(p)
    target = target_from_json(p["target"])
    cfg = OneSidedConfig(gp, s=p["samples"], runs=p["runs"], reject_threshold=p["threshold"])
    grid = build_grid(gp)
    v = run_a_prime(target, cfg, seed, grid)
    derived = {**gp.to_dict(), "s": cfg.budget(grid), "cubes": len(grid), "threshold": cfg.threshold}
    metrics = {"verdict": v.to_dict()}
    if v.rejected:
        metrics["certificate_verified"] = verify_certificate(v.certificate, target, gp)
    return derived, metrics


def _cmd_test_two_sided(p, seed):
    gp = _grid_params(p)
    target = target_from_json(p["target"])
    cfg = LearnConfig(p["eps"], p["delta"], learn_samples=p["learn_samples"],
                      cover_subset_cap=p["cover_cap"], two_stage=p["two_stage"], cover_mode=p["cover_mode"])
    cover = generate_cover(gp, cfg.cover_subset_cap, cfg.cover_mode)
    v = ggr_test(target, cfg, gp, seed, test_constant=p["test_constant"], cover=cover)
    derived = {**gp.to_dict(), "cover_size": len(cover)}
    return derived, {"verdict": v.to_dict()}


def _cmd_gen_dyes(p, seed):
    lb, derived = _lower_bound(p)
    P = sample_dyes(p["n"], derived["N"], derived["r"], seed)
    return derived, {"polytope": P.to_json()}


def _cmd_gen_dno(p, seed):
    lb, derived = _lower_bound(p)
    M = p["M"] if p["M"] is not None else default_shell_count(p["n"])
    b = build_shells(p["n"], M)
    part = sample_dno(p["n"], b, make_rho(derived["r"], derived["N"], p["n"]), seed)
    derived.update(M=M, M_overridden=p["M"] is not None)
    return derived, {"partition": part.to_dict(), "target": part.target().to_json()}


def _cmd_distinguish(p, seed):
    lb, derived = _lower_bound(p)
    q = p["q"] if p["q"] is not None else (lb.q if lb else 2)
    derived.update(q=q)
    rep = distinguishing_experiment(p["n"], q, derived["N"], derived["r"], p["trials"], seed,
                                    radius=p["radius"], bootstrap=p["bootstrap"])
    return derived, rep


def _cmd_shatter(p, seed):
    return {}, shattering_experiment(p["n"], p["m"], p["trials"], seed)


def _cmd_typicality(p, seed):
    lb, derived = _lower_bound(p)
    q = p["q"] if p["q"] is not None else (lb.q if lb else 2)
    pts_seed, mc_seed = np.random.SeedSequence(seed).spawn(2)
    radius = p["radius"] if p["radius"] is not None else 2.0 * derived["r"]
    g = make_rng(pts_seed).standard_normal((q, p["n"]))
    Z = radius * g / np.linalg.norm(g, axis=1, keepdims=True)
    rep = typicality_check(Z, derived["r"], p["mc_budget"], mc_seed, tuple(p["exponents"]))
    derived.update(q=q, radius=radius)
    return derived, {"points": Z.tolist(), **rep.to_dict()}


def _cmd_boundary_volume(p, seed):
    C = target_from_json(p["target"])
    K = p["K"] if p["K"] is not None else 2.0 * math.sqrt(C.n)
    alpha = p["alpha"] if p["alpha"] is not None else 0.1 * C.n ** -0.75
    est = estimate_thickened_boundary_volume(C, alpha, p["samples"], seed, K)
    bound = thickened_boundary_bound(C.n, K, alpha)
    return {"K": K, "alpha": alpha}, {"estimate": est.estimate, "std_error": est.std_error,
                                      "samples": est.samples_used, "bound": bound,
                                      "passed": est.estimate - 4 * est.std_error <= bound}


def _cmd_ball_theorem(p, seed):
    C = target_from_json(p["target"])
    ratio, se = ball_theorem_ratio(C, p["h"], p["samples"], seed)
    bound = 4.0 * C.n ** 0.25
    return {"h": p["h"]}, {"ratio": ratio, "std_error": se, "bound": bound,
                           "passed": ratio - 4 * se <= bound}


def _cmd_appendix_lemmas(p, seed):
    cfg = {k: v for k, v in p.items() if v is not None}
    cfg["seed"] = seed
    return {}, check_appendix_lemmas(cfg)


def _cmd_cover(p, seed):
    gp = _grid_params(p)
    cover = generate_cover(gp, p["subset_cap"], p["mode"])
    return gp.to_dict(), {"cover_size": len(cover),
                          "elements": [h.vertices.tolist() for h in cover] if p["list"] else None}


_GRID = {"n": Param(int, required=True), "eps": Param(float, required=True), "ell": Param(float),
         "nprime": Param(float), "cube_cap": Param(int, 10 ** 7)}
_LB = {"n": Param(int, required=True), "N": Param(int), "r": Param(float), "q": Param(int)}

COMMANDS = {
    "test-one-sided": (_cmd_test_one_sided, {**_GRID, "target": Param("target", required=True),
                                             "samples": Param(int), "runs": Param(int, 1),
                                             "threshold": Param(float)}),
    "test-two-sided": (_cmd_test_two_sided, {**_GRID, "target": Param("target", required=True),
                                             "delta": Param(float, 0.1), "cover_cap": Param(int, 2 ** 20),
                                             "cover_mode": Param(str, "full"), "learn_samples": Param(int),
                                             "two_stage": Param(bool, False), "test_constant": Param(float, 8.0)}),
    "gen-dyes": (_cmd_gen_dyes, dict(_LB)),
    "gen-dno": (_cmd_gen_dno, {**_LB, "M": Param(int)}),
    "distinguish": (_cmd_distinguish, {**_LB, "trials": Param(int, 10_000), "radius": Param(float),
                                       "bootstrap": Param(int, 200)}),
    "shatter": (_cmd_shatter, {"n": Param(int, required=True), "m": Param(int, required=True),
                               "trials": Param(int, 1000)}),
    "typicality": (_cmd_typicality, {**_LB, "radius": Param(float), "mc_budget": Param(int, 100_000),
                                     "exponents": Param("floats", [0.49, 0.51, 0.96])}),
    "boundary-volume": (_cmd_boundary_volume, {"target": Param("target", required=True),
                                               "alpha": Param(float), "K": Param(float),
                                               "samples": Param(int, 100_000)}),
    "ball-theorem": (_cmd_ball_theorem, {"target": Param("target", required=True),
                                         "h": Param(float, 0.01), "samples": Param(int, 200_000)}),
    "appendix-lemmas": (_cmd_appendix_lemmas, {"lemma": Param(str, required=True), "family": Param(str),
                                               "n": Param(int, 2), "rho": Param(float), "alpha": Param(float, required=True),
                                               "beta": Param(float), "K": Param(float), "N": Param(int),
                                               "r": Param(float), "width": Param(float), "length": Param(float),
                                               "extent": Param(float), "samples": Param(int, 100_000)}),
    "cover": (_cmd_cover, {**_GRID, "subset_cap": Param(int, 2 ** 20), "mode": Param(str, "full"),
                           "list": Param(bool, False)}),
}


# --------------------------------------------------------------------------
# configs and reports


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str | None = None
    format: str = "json"

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed,
                "output_path": self.output_path, "format": self.format}


def validate(config: ExperimentConfig) -> dict:
    """Coerce params to their declared types; collect every problem before failing."""
    if config.command not in COMMANDS:
        raise ConfigError([f"unknown command {config.command!r}; choose from {sorted(COMMANDS)}"])
    schema = COMMANDS[config.command][1]
    problems = []
    for key in config.params:
        if key not in schema:
            problems.append(f"unknown key {key!r}")
    out = {}
    for key, param in schema.items():
        raw = config.params.get(key)
        if raw is None:
            if param.required:
                problems.append(f"missing required key {key!r}")
            out[key] = param.default
            continue
        try:
            out[key] = COERCE[param.kind](raw)
        except (ValueError, TypeError, OSError, KeyError, json.JSONDecodeError) as exc:
            problems.append(f"bad value for {key!r}: {exc}")
    if config.format not in ("json", "csv"):
        problems.append(f"unknown format {config.format!r}")
    try:
        seed = _as_int(config.seed)
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
    except (ValueError, TypeError) as exc:
        problems.append(f"bad value for 'seed': {exc}")
    if problems:
        raise ConfigError(problems)
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def run(config: ExperimentConfig, write: bool = True) -> dict:
    """Validate, dispatch and (optionally) persist one experiment."""
    params = validate(config)
    fn = COMMANDS[config.command][0]
    start = time.perf_counter()
    derived, metrics = fn(params, int(config.seed))
    report = _clean({"config": config.to_dict(), "resolved_params": params, "derived": derived, "metrics": metrics,
                     "wall_clock_seconds": time.perf_counter() - start, "version": __version__})
    if write and config.output_path:
        text = report_csv([report]) if config.format == "csv" else dumps(report)
        atomic_write(config.output_path, text)
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _flatten(prefix: str, obj, out: dict) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif not isinstance(obj, list):
        out[prefix] = obj


def report_csv(reports: list[dict]) -> str:
    """One row per report with every scalar field flattened into dotted columns."""
    rows = []
    for rep in reports:
        row = {}
        _flatten("", {k: v for k, v in rep.items() if k != "config"}, row)
        _flatten("params", rep.get("config", {}).get("params", {}), row)
        row["seed"] = rep.get("config", {}).get("seed")
        rows.append(row)
    cols = sorted({c for r in rows for c in r})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# --------------------------------------------------------------------------
# sweeps


def child_seed(parent: int, index: int) -> int:
    """Stable 64-bit seed for cell ``index`` of a sweep."""
    h = hashlib.blake2b(f"{int(parent)}:{int(index)}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def _run_cell(cfg: ExperimentConfig) -> dict:
    try:
        return run(cfg, write=False)
    except (ConfigError, GridInfeasible, ValueError, RuntimeError) as exc:
        return _clean({"config": cfg.to_dict(), "error": f"{type(exc).__name__}: {exc}"})


def sweep(base: ExperimentConfig, axis: str, values, jobs: int | None = None) -> list[dict]:
    """One report per value of ``axis``; failing cells carry an ``error`` field."""
    values = list(values)
    if not values:
        return []
    if base.command not in COMMANDS:
        raise ConfigError([f"unknown command {base.command!r}"])
    schema = COMMANDS[base.command][1]
    if axis not in schema or schema[axis].kind not in (int, float):
        raise ConfigError([f"sweep axis {axis!r} is not a numeric parameter of {base.command}"])
    cells = [ExperimentConfig(base.command, {**base.params, axis: v}, child_seed(base.seed, i))
             for i, v in enumerate(values)]
    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or len(cells) == 1:
        reports = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
            reports = list(pool.map(_run_cell, cells))
    if base.output_path:
        atomic_write(base.output_path, report_csv(reports) if base.format == "csv" else dumps(reports))
    return reports
