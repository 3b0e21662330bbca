"""Run configuration: scaling regime, grids, kernel, seeds and per-verb parameters.

Configs are JSON documents.  Every section is a dataclass; unknown keys are
rejected with their dotted path, and ``key=value`` overrides (value parsed as
a JSON literal, else kept as a string) are applied before validation.
"""
from __future__ import annotations

import json
import math
import types
import typing
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingRegime:
    """``hbar = N^-1/2``, ``alpha = beta_stat / N``, ``R = N^-eta``."""

    N: int
    beta_stat: float
    eta: float
    enforce: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError(f"regime.N must be >= 1, got {self.N}")
        if self.enforce and not (0 < self.eta < 0.25):
            raise ConfigError(f"regime.eta must lie in (0, 1/4) when enforced, got {self.eta}")

    @property
    def hbar(self) -> float:
        return 1.0 / math.sqrt(self.N)

    @property
    def alpha(self) -> float:
        return self.beta_stat / self.N

    @property
    def R(self) -> float:
        return float(self.N) ** (-self.eta)

    def derived(self) -> dict:
        return {"hbar": self.hbar, "alpha": self.alpha, "R": self.R}


@dataclass
class RegimeSpec:
    N: int = 64
    beta_stat: float = 1.0
    eta: float = 0.2
    enforce: bool = True

    def build(self) -> ScalingRegime:
        return ScalingRegime(self.N, self.beta_stat, self.eta, self.enforce)


@dataclass
class TrapSpec:
    kind: str = "power_law"
    coefficient: float = 1.0
    exponent: float = 2.0

    def build(self):
        from .tf_solver import Trap

        if self.kind != "power_law":
            raise ConfigError(f"trap.kind: unknown trap '{self.kind}'")
        return Trap.power_law(self.coefficient, self.exponent)


@dataclass
class GridSpec:
    n: int = 64
    half_width: float = 2.0

    def build(self):
        from .grids import Grid2D

        return Grid2D(self.n, self.half_width)


@dataclass
class KernelSpec:
    """``R = None`` takes the regime radius; ``R = 0`` is the pointlike kernel."""

    R: float | None = None

    def build(self, regime: ScalingRegime):
        from .kernels import make_kernel

        return make_kernel(regime.R if self.R is None else self.R)


@dataclass
class TFParams:
    mass: float = 1.0
    tol: float = 1e-12


@dataclass
class VlasovParams:
    betas: list = field(default_factory=lambda: [0.0, 0.5, 1.0])


@dataclass
class HusimiParams:
    n_orbitals: int = 2
    hbar: float | None = None
    squeeze: float = 1.0
    orbital_grid: GridSpec = field(default_factory=lambda: GridSpec(96, 4.0))
    slice_nx: int = 41
    slice_np: int = 41
    slice_x_half: float = 2.0
    slice_p_half: float = 2.0


@dataclass
class HFParams:
    # the regime hbar needs far finer orbital grids than the dense oracle can afford
    n_orbitals: int = 2
    hbar: float | None = 0.5
    alpha: float | None = None
    orbital_grid: GridSpec = field(default_factory=lambda: GridSpec(36, 3.5))
    oracle: bool = True
    mc_samples: int = 1_000_000


@dataclass
class DFParams:
    max_N: int = 4
    max_n: int = 3
    atoms: int = 3
    measures: int = 50


@dataclass
class PauliParams:
    N: int = 4096
    tiling_exponent: float = 0.75
    eps: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    trials: int = 10_000
    x_grid: GridSpec = field(default_factory=lambda: GridSpec(128, 2.0))


@dataclass
class RunConfig:
    trap: TrapSpec
    regime: RegimeSpec = field(default_factory=RegimeSpec)
    x_grid: GridSpec = field(default_factory=GridSpec)
    p_grid: GridSpec = field(default_factory=lambda: GridSpec(64, 2.6))
    kernel: KernelSpec = field(default_factory=KernelSpec)
    seed: int = 0
    output_dir: str = "out"
    tf: TFParams = field(default_factory=TFParams)
    vlasov: VlasovParams = field(default_factory=VlasovParams)
    husimi: HusimiParams = field(default_factory=HusimiParams)
    hf: HFParams = field(default_factory=HFParams)
    df: DFParams = field(default_factory=DFParams)
    pauli: PauliParams = field(default_factory=PauliParams)

    def __post_init__(self):
        self._regime = self.regime.build()

    @property
    def scaling(self) -> ScalingRegime:
        return self._regime

    def to_dict(self) -> dict:
        return asdict(self)


def _check_type(value, tp, path: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        opts = typing.get_args(tp)
        if value is None and type(None) in opts:
            return None
        for o in opts:
            if o is type(None):
                continue
            try:
                return _check_type(value, o, path)
            except ConfigError:
                pass
        raise ConfigError(f"{path}: value {value!r} has the wrong type")
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is list or origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    if is_dataclass(tp):
        return _build(tp, value, path)
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {data!r}")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in fields(cls)}
    for k in data:
        if k not in known:
            raise ConfigError(f"unknown key '{path + '.' if path else ''}{k}'")
    kwargs = {}
    for name, f in known.items():
        sub = f"{path}.{name}" if path else name
        if name in data:
            kwargs[name] = _check_type(data[name], hints[name], sub)
        elif f.default is MISSING and f.default_factory is MISSING:
            raise ConfigError(f"missing required field '{sub}'")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, raw = item.split("=", 1)
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override '{key}': '{p}' is not a section")
        node[parts[-1]] = parse_value(raw)
    return data


def load_document(path) -> dict:
    """A config file, or the ``config`` echoed inside a run manifest."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file '{p}' does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from e
    if isinstance(data, dict) and "manifest_version" in data:
        data = data["config"]
    return data


def parse_config(source=None, overrides: list[str] | None = None) -> RunConfig:
    """Build a validated ``RunConfig`` from a path, a dict, or nothing (overrides only)."""
    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = json.loads(json.dumps(source))
    else:
        data = load_document(source)
    data = apply_overrides(data, overrides or [])
    return _build(RunConfig, data, "")
