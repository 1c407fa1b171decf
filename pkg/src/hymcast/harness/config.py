"""Scenario configuration: loading JSON files and validating every field."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..algorithm import default_beta
from ..channel import AngleProfile
from ..precoding import GroupAssignment, PhaseAlphabet, QosTargets

MODES = ("hybrid", "digital", "both")
DELTA_MODES = ("per_eq3d", "per_observation", "explicit")
SWEEP_AXES = ("n_rf", "n_rx", "n_rand_iter", "gamma")
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """A scenario description that cannot be run; the message names the field."""


@dataclass(frozen=True)
class SweepAxis:
    """One sweep dimension; ``values`` are scalars, or ``[n_rand, n_iter]`` pairs for ``n_rand_iter``."""

    name: str
    values: tuple

    def to_dict(self) -> dict:
        return {"axis": self.name, "values": [list(v) if isinstance(v, tuple) else v for v in self.values]}


# JSON key -> (attribute, default); a default of ``REQUIRED`` makes the key mandatory
REQUIRED = object()
_FIELDS = {
    "N_tx": ("n_tx", REQUIRED),
    "N_rx": ("n_rx", REQUIRED),
    "N_RF": ("n_rf", None),
    "K": ("num_users", REQUIRED),
    "G": ("num_groups", REQUIRED),
    "gamma_db": ("gamma_db", REQUIRED),
    "sigma2_dbm": ("sigma2_dbm", 10.0),
    "prx_dbm": ("prx_dbm", 10.0),
    "L": ("num_levels", 8),
    "delta_mode": ("delta_mode", "per_eq3d"),
    "delta": ("delta", None),
    "M_p": ("num_paths", 8),
    "aod_means": ("aod_means", None),
    "aod_range": ("aod_range", (-80.0, 80.0)),
    "sigma_aod": ("spread_aod", 30.0),
    "aoa_range": ("aoa_range", (-360.0, 360.0)),
    "sigma_aoa": ("spread_aoa", 60.0),
    "N_iter": ("n_iter", 2),
    "N_rand": ("n_rand", 100),
    "n_rand_rule": ("n_rand_rule", False),
    "beta": ("beta", None),
    "n_realizations": ("n_realizations", 20),
    "master_seed": ("master_seed", 0),
    "mode": ("mode", "hybrid"),
    "sweep": ("sweep", ()),
    "solver_tol": ("solver_tol", 1e-7),
}


@dataclass(frozen=True)
class ScenarioConfig:
    n_tx: int
    n_rx: int
    num_users: int
    num_groups: int
    gamma_db: float | tuple
    n_rf: int | None = None
    sigma2_dbm: float = 10.0
    prx_dbm: float = 10.0
    num_levels: int = 8
    delta_mode: str = "per_eq3d"
    delta: float | None = None
    num_paths: int = 8
    aod_means: tuple | None = None
    aod_range: tuple = (-80.0, 80.0)
    spread_aod: float = 30.0
    aoa_range: tuple = (-360.0, 360.0)
    spread_aoa: float = 60.0
    n_iter: int = 2
    n_rand: int = 100
    n_rand_rule: bool = False
    beta: float | None = None
    n_realizations: int = 20
    master_seed: int = 0
    mode: str = "hybrid"
    sweep: tuple = field(default=())
    solver_tol: float = 1e-7

    def __post_init__(self):
        validate(self)

    # -- derived quantities --------------------------------------------------

    @property
    def modes(self) -> tuple[str, ...]:
        return ("hybrid", "digital") if self.mode == "both" else (self.mode,)

    @property
    def effective_delta(self) -> float:
        if self.delta_mode == "per_eq3d":
            return 1.0 / self.n_tx
        if self.delta_mode == "per_observation":
            return 1.0 / self.n_rf
        return float(self.delta)

    @property
    def effective_n_rand(self) -> int:
        """``N_rand``, or the receive-dimension scaling rule when enabled."""
        if self.n_rand_rule:
            return 400 + 300 * (self.n_tx + self.n_rx - 11)
        return self.n_rand

    def effective_beta(self, mode: str) -> float:
        if self.beta is not None:
            return float(self.beta)
        n_rf = self.n_tx if mode == "digital" else self.n_rf
        return default_beta(self.num_groups, n_rf, self.n_tx, self.n_rx)

    def alphabet(self) -> PhaseAlphabet:
        return PhaseAlphabet(self.num_levels, float(np.sqrt(self.effective_delta)))

    def groups(self) -> GroupAssignment:
        return GroupAssignment.contiguous(self.num_users, self.num_groups)

    def targets(self) -> QosTargets:
        return QosTargets.from_db(self.gamma_db, self.sigma2_dbm, self.prx_dbm, self.num_groups)

    def angle_profile(self, rng: np.random.Generator) -> AngleProfile:
        """Cluster means for one realization; unset AoD means are drawn from ``aod_range``."""
        if self.aod_means is not None:
            aod = np.asarray(self.aod_means, dtype=float)
        else:
            aod = rng.uniform(self.aod_range[0], self.aod_range[1], self.num_groups)
        aoa = rng.uniform(self.aoa_range[0], self.aoa_range[1], self.num_users)
        return AngleProfile(tuple(aod), tuple(aoa), self.spread_aod, self.spread_aoa, self.num_paths)

    # -- sweeps ----------------------------------------------------------------

    def with_point(self, assignment: dict) -> "ScenarioConfig":
        """Copy with sweep-axis values applied; the copy carries no sweep."""
        changes = {"sweep": ()}
        for axis, value in assignment.items():
            if axis == "n_rf":
                changes["n_rf"] = int(value)
            elif axis == "n_rx":
                changes["n_rx"] = int(value)
            elif axis == "gamma":
                changes["gamma_db"] = value
            elif axis == "n_rand_iter":
                changes["n_rand"], changes["n_iter"] = int(value[0]), int(value[1])
                changes["n_rand_rule"] = False
        return dataclasses.replace(self, **changes)

    def sweep_points(self) -> list[dict]:
        """Cartesian product of the sweep axes, first axis slowest; one empty point without axes."""
        points = [{}]
        for axis in self.sweep:
            points = [{**p, axis.name: v} for p in points for v in axis.values]
        return points

    def to_dict(self) -> dict:
        out = {}
        for key, (attr, _) in _FIELDS.items():
            value = getattr(self, attr)
            if key == "sweep":
                value = [a.to_dict() for a in value]
            elif isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out


def _fail(field_name: str, why: str):
    raise ConfigError(f"{field_name}: {why}")


def _positive_int(cfg, attr, key, allow_none=False):
    value = getattr(cfg, attr)
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        _fail(key, f"must be a positive integer, got {value!r}")


def validate(cfg: ScenarioConfig) -> None:
    for key, attr in (("N_tx", "n_tx"), ("N_rx", "n_rx"), ("K", "num_users"), ("G", "num_groups"),
                      ("L", "num_levels"), ("M_p", "num_paths"), ("N_iter", "n_iter"),
                      ("n_realizations", "n_realizations")):
        _positive_int(cfg, attr, key)
    _positive_int(cfg, "n_rf", "N_RF", allow_none=True)
    if isinstance(cfg.n_rand, bool) or not isinstance(cfg.n_rand, (int, np.integer)) or cfg.n_rand < 0:
        _fail("N_rand", f"must be a nonnegative integer, got {cfg.n_rand!r}")
    if cfg.mode not in MODES:
        _fail("mode", f"must be one of {', '.join(MODES)}, got {cfg.mode!r}")
    if cfg.num_groups > cfg.num_users:
        _fail("G", f"{cfg.num_groups} groups cannot partition {cfg.num_users} users")
    if cfg.mode != "digital":
        if cfg.n_rf is None:
            _fail("N_RF", "required in hybrid mode")
        if not cfg.num_groups <= cfg.n_rf <= cfg.n_tx:
            _fail("N_RF", f"need G <= N_RF <= N_tx, got G={cfg.num_groups}, N_RF={cfg.n_rf}, N_tx={cfg.n_tx}")
        if cfg.effective_n_rand < 1 and not cfg.sweep:
            _fail("N_rand", "hybrid mode needs at least one randomization to build an analog precoder")
    gamma = np.atleast_1d(np.asarray(cfg.gamma_db, dtype=float)) if _numeric(cfg.gamma_db) else None
    if gamma is None or gamma.ndim != 1 or not np.all(np.isfinite(gamma)):
        _fail("gamma_db", f"must be a number or a list of numbers, got {cfg.gamma_db!r}")
    if gamma.size not in (1, cfg.num_groups):
        _fail("gamma_db", f"has {gamma.size} entries for {cfg.num_groups} groups")
    for key, attr in (("sigma2_dbm", "sigma2_dbm"), ("prx_dbm", "prx_dbm")):
        if not _finite(getattr(cfg, attr)):
            _fail(key, f"must be a finite number, got {getattr(cfg, attr)!r}")
    if cfg.delta_mode not in DELTA_MODES:
        _fail("delta_mode", f"must be one of {', '.join(DELTA_MODES)}, got {cfg.delta_mode!r}")
    if cfg.delta_mode == "explicit" and not (_finite(cfg.delta) and cfg.delta > 0):
        _fail("delta", "explicit delta_mode needs a positive delta")
    if cfg.delta_mode == "per_observation" and cfg.n_rf is None:
        _fail("delta_mode", "per_observation needs N_RF")
    for key, attr in (("sigma_aod", "spread_aod"), ("sigma_aoa", "spread_aoa")):
        value = getattr(cfg, attr)
        if not (_finite(value) and value >= 0):
            _fail(key, f"must be a nonnegative number, got {value!r}")
    for key, attr in (("aod_range", "aod_range"), ("aoa_range", "aoa_range")):
        value = getattr(cfg, attr)
        if len(value) != 2 or not all(_finite(v) for v in value) or value[0] > value[1]:
            _fail(key, f"must be [low, high] with low <= high, got {list(value)!r}")
    if cfg.aod_means is not None:
        if len(cfg.aod_means) != cfg.num_groups or not all(_finite(v) for v in cfg.aod_means):
            _fail("aod_means", f"needs {cfg.num_groups} finite angles")
    if cfg.beta is not None and not (_finite(cfg.beta) and cfg.beta > 0):
        _fail("beta", f"must be positive, got {cfg.beta!r}")
    if not (_finite(cfg.solver_tol) and cfg.solver_tol > 0):
        _fail("solver_tol", f"must be positive, got {cfg.solver_tol!r}")
    if isinstance(cfg.master_seed, bool) or not isinstance(cfg.master_seed, (int, np.integer)) \
            or not 0 <= cfg.master_seed <= MAX_SEED:
        _fail("master_seed", f"must be an unsigned 64-bit integer, got {cfg.master_seed!r}")
    names = [a.name for a in cfg.sweep]
    if len(set(names)) != len(names):
        _fail("sweep", "an axis appears twice")
    for axis in cfg.sweep:
        _validate_axis(cfg, axis)


def _validate_axis(cfg: ScenarioConfig, axis: SweepAxis) -> None:
    where = f"sweep.{axis.name}"
    if axis.name not in SWEEP_AXES:
        _fail("sweep", f"unknown axis {axis.name!r}; expected one of {', '.join(SWEEP_AXES)}")
    if not axis.values:
        _fail(where, "needs at least one value")
    for value in axis.values:
        if axis.name == "n_rand_iter":
            ok = isinstance(value, tuple) and len(value) == 2 and all(
                isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in value
            ) and value[0] >= 0 and value[1] >= 1
            if not ok:
                _fail(where, f"values must be [N_rand, N_iter] pairs, got {value!r}")
            if cfg.mode != "digital" and value[0] < 1:
                _fail(where, "hybrid mode needs N_rand >= 1")
        elif axis.name == "gamma":
            if not _numeric(value):
                _fail(where, f"values must be numbers, got {value!r}")
        else:
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                _fail(where, f"values must be positive integers, got {value!r}")
    if axis.name == "n_rf" and cfg.mode != "digital":
        for value in axis.values:
            if not cfg.num_groups <= value <= cfg.n_tx:
                _fail(where, f"N_RF={value} violates G <= N_RF <= N_tx")


def _finite(value) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool) \
        and bool(np.isfinite(value))


def _numeric(value) -> bool:
    if isinstance(value, (list, tuple)):
        return len(value) > 0 and all(_finite(v) for v in value)
    return _finite(value)


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    kwargs = {}
    for key, (attr, default) in _FIELDS.items():
        if key not in data:
            if default is REQUIRED:
                raise ConfigError(f"{key}: missing required field")
            continue
        value = data[key]
        if key == "sweep":
            value = _parse_sweep(value)
        else:
            value = _tuplify(value)
        kwargs[attr] = value
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc


def _parse_sweep(value) -> tuple:
    if isinstance(value, dict):
        value = [value]
    if not isinstance(value, list):
        raise ConfigError("sweep: must be an object or a list of objects with 'axis' and 'values'")
    axes = []
    for entry in value:
        if not isinstance(entry, dict) or set(entry) != {"axis", "values"}:
            raise ConfigError("sweep: each entry needs exactly the keys 'axis' and 'values'")
        if not isinstance(entry["values"], list):
            raise ConfigError(f"sweep.{entry['axis']}: values must be a list")
        axes.append(SweepAxis(str(entry["axis"]), _tuplify(entry["values"])))
    return tuple(axes)


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    return config_from_dict(data)
