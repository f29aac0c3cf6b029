"""
TOML study files: one file describes one study on one scenario.

See ``docs/config_grammar.md`` for the full grammar.  Unknown sections and keys
are rejected with the offending ``[section] key`` named.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .scenario import ScenarioConfig, ScenarioError, get_scenario
from .spectral import DEFAULT_MAX_ITER
from .semigroup import CONVERGENCE_TOL
from .state_space import GridSpace

STUDIES = ("scgf", "converge", "lyapunov-check", "uniform-dt", "particles", "fixed-point")

_GRID_KEYS = {"topology": str, "lower": float, "upper": float, "n_nodes": int}
_SCENARIO_KEYS = {f.name: f.type for f in fields(ScenarioConfig)} | {"preset": str}
_SOLVER_KEYS = {"tol": float, "max_iter": int}
_STUDY_KEYS = {
    "kind": str, "output_dir": str, "k_max": int, "starts": list, "phi": str,
    "scgf_tol": float, "rate_tol": float, "radii": list, "dt_values": list, "T": float,
    "t_max": float, "n_particles": int, "k": int, "n_seeds": int, "observables": list,
    "seed": int, "burn_in": int,
}
# study-specific required keys (after defaults are applied)
_REQUIRED = {"uniform-dt": ("dt_values", "T")}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tol: float = CONVERGENCE_TOL
    max_iter: int = DEFAULT_MAX_ITER


@dataclass(frozen=True)
class StudySpec:
    study: str
    scenario: ScenarioConfig
    grid: GridSpace
    solver: SolverOptions = SolverOptions()
    output_dir: Optional[str] = None
    params: dict = field(default_factory=dict)  # remaining [study] keys
    start: float = 0.0  # preset start point, used when no starts are given
    source: Optional[str] = None

    def get(self, key, default=None):
        return self.params.get(key, default)


def _check_keys(section: str, table: dict, allowed: dict):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"[{section}] unknown key {key!r}; allowed: {sorted(allowed)}")
        want = allowed[key]
        ok = _type_ok(value, want)
        if not ok:
            raise ConfigError(f"[{section}] {key}: expected {_type_name(want)}, got {value!r}")


def _type_ok(value, want) -> bool:
    if isinstance(value, bool):
        return want in (bool, "bool")
    if want in (float, "float", "Optional[float]"):
        return isinstance(value, (int, float)) and math.isfinite(value)
    if want in (int, "int"):
        return isinstance(value, int)
    if want in (str, "str", "Optional[str]"):
        return isinstance(value, str)
    if want is list:
        return isinstance(value, list)
    return True


def _type_name(want) -> str:
    return getattr(want, "__name__", str(want)).replace("Optional[", "").rstrip("]")


def _real_list(section, key, value) -> list:
    if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"[{section}] {key}: expected a list of reals, got {value!r}")
    return [float(v) for v in value]


def parse_study(data: dict, source: Optional[str] = None) -> StudySpec:
    """Build a :class:`StudySpec` from an already-parsed TOML document."""
    allowed = {"grid", "scenario", "solver", "study"}
    for name in data:
        if name not in allowed:
            raise ConfigError(f"unknown section [{name}]; allowed: {sorted(allowed)}")
    study = dict(data.get("study", {}))
    _check_keys("study", study, _STUDY_KEYS)
    kind = study.pop("kind", None)
    if kind not in STUDIES:
        raise ConfigError(f"[study] kind: must be one of {list(STUDIES)}, got {kind!r}")
    for key in ("starts", "radii", "dt_values"):
        if key in study:
            study[key] = _real_list("study", key, study[key])
    if "observables" in study:
        obs = study["observables"]
        if not all(isinstance(o, str) for o in obs):
            raise ConfigError(f"[study] observables: expected a list of strings, got {obs!r}")
    for key in _REQUIRED.get(kind, ()):
        if key not in study:
            raise ConfigError(f"[study] {key}: required for kind = {kind!r}")

    sc = dict(data.get("scenario", {}))
    _check_keys("scenario", sc, _SCENARIO_KEYS)
    preset_name = sc.pop("preset", None)
    start = 0.0
    grid = None
    try:
        if preset_name is not None:
            preset = get_scenario(preset_name)
            scenario = preset.config.with_(**sc)
            grid, start = preset.grid, preset.start
        else:
            if "family" not in sc:
                raise ConfigError("[scenario] family: required when no preset is given")
            scenario = ScenarioConfig(**sc)
    except KeyError as exc:
        raise ConfigError(f"[scenario] preset: {exc.args[0]}") from None
    except (ScenarioError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[scenario] {exc}") from None

    if "grid" in data:
        g = dict(data["grid"])
        _check_keys("grid", g, _GRID_KEYS)
        missing = [k for k in _GRID_KEYS if k not in g]
        if missing:
            raise ConfigError(f"[grid] missing keys: {missing}")
        try:
            grid = GridSpace(g["topology"], float(g["lower"]), float(g["upper"]), int(g["n_nodes"]))
        except ValueError as exc:
            raise ConfigError(f"[grid] {exc}") from None
    if grid is None:
        raise ConfigError("[grid] section required when no scenario preset is given")

    solver = dict(data.get("solver", {}))
    _check_keys("solver", solver, _SOLVER_KEYS)
    opts = SolverOptions(**{k: (float(v) if k == "tol" else v) for k, v in solver.items()})
    if not opts.tol > 0 or not opts.max_iter > 0:
        raise ConfigError("[solver] tol and max_iter must be positive")

    return StudySpec(
        study=kind, scenario=scenario, grid=grid, solver=opts,
        output_dir=study.pop("output_dir", None), params=study, start=start, source=source,
    )


def load_study(path) -> StudySpec:
    """Read and validate a study file.  Syntax errors carry line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return parse_study(data, source=str(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
