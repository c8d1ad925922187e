"""
Run configuration files

    [market]
    E = 10
    T = 1
    r = 0.1
    q = 0.05

    [grid]
    L = 3
    n = 200
    m = 2000

    [model]
    kind = barles_soner
    sigma_hat = 0.2
    a = 0.15

    [iteration]
    tol = 1e-7
    p_max = 6
    on_nonconvergence = warn

    [outputs]
    directory = out
    snapshots = 0.5, 1
    stride = 1
    netcdf = false

Omitted keys take the values above (model defaults to constant sigma_hat = 0.2,
outputs.directory to the directory holding the file). Unknown sections or keys are errors.
"""

from __future__ import annotations
import typing as T
from pathlib import Path
from dataclasses import dataclass, field, asdict
import configparser
import io

from .common import ConfigError
from .model import MarketParams, GridSpec
from .scheme import IterationConfig
from .volatility import VolatilityModel, make_model, XMAX, NODE_COUNT

KEYS: dict[str, dict[str, type]] = {
    "market": {"E": float, "T": float, "r": float, "q": float},
    "grid": {"L": float, "n": int, "m": int},
    "model": {"kind": str, "sigma_hat": float, "a": float, "psi_xmax": float, "psi_nodes": int},
    "iteration": {"tol": float, "p_max": int, "on_nonconvergence": str},
    "outputs": {
        "directory": str,
        "snapshots": str,
        "stride": int,
        "netcdf": bool,
        "validation_samples": int,
        "validation_tol": float,
    },
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "constant"
    sigma_hat: float = 0.2
    a: float = 0.0
    psi_xmax: float = XMAX
    psi_nodes: int = NODE_COUNT

    def __post_init__(self):
        kind = self.kind.lower().replace("-", "_")
        if kind not in ("constant", "barles_soner"):
            raise ConfigError(f"model kind must be constant or barles_soner, not {self.kind}")
        object.__setattr__(self, "kind", kind)
        if kind == "constant" and self.a != 0:
            raise ConfigError("the constant model takes no a parameter")
        if self.a < 0:
            raise ConfigError(f"a must be >= 0, got {self.a}")

    @property
    def linear(self) -> bool:
        """True when the model reduces to constant volatility"""
        return self.kind == "constant" or self.a == 0

    def build(self, market: MarketParams) -> VolatilityModel:
        return make_model(
            self.kind,
            self.sigma_hat,
            self.a,
            market.r,
            psi_xmax=self.psi_xmax,
            psi_nodes=self.psi_nodes,
        )


@dataclass(frozen=True)
class OutputSpec:
    directory: Path = Path(".")
    snapshots: tuple[float, ...] = ()
    stride: int = 1
    netcdf: bool = False
    validation_samples: int = 20
    validation_tol: float = 0.02

    def __post_init__(self):
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.validation_samples < 1:
            raise ConfigError("validation_samples must be >= 1")
        if not self.validation_tol > 0:
            raise ConfigError("validation_tol must be > 0")


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams = field(default_factory=MarketParams)
    grid: GridSpec = field(default_factory=GridSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    iteration: IterationConfig = field(default_factory=IterationConfig)
    outputs: OutputSpec = field(default_factory=OutputSpec)

    def echo(self) -> dict[str, T.Any]:
        d = asdict(self)
        d["outputs"]["directory"] = str(self.outputs.directory)
        d["outputs"]["snapshots"] = list(self.outputs.snapshots)
        return d


def _snapshots(s: str) -> tuple[float, ...]:
    s = s.strip()
    if not s:
        return ()
    try:
        return tuple(float(v) for v in s.replace(";", ",").split(","))
    except ValueError as e:
        raise ConfigError(f"snapshots must be a comma-separated list of tau values: {e}")


def _convert(sect: configparser.SectionProxy, key: str, typ: type) -> T.Any:
    try:
        if typ is bool:
            return sect.getboolean(key)
        elif typ is int:
            v = float(sect[key])
            if not v.is_integer():
                raise ValueError(f"{sect[key]} is not an integer")
            return int(v)
        elif typ is float:
            return float(sect[key])
        return sect[key].strip()
    except ValueError as e:
        raise ConfigError(f"[{sect.name}] {key}: {e}")


def parse_config(text: str, base: Path = None) -> RunConfig:
    """
    parse configuration text

    Parameters
    ----------

    text: str
        INI-style configuration
    base: pathlib.Path
        relative output directories are taken relative to this directory
    """
    # keys are case sensitive: E, T, L
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # type: ignore
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed configuration: {e}")

    values: dict[str, dict[str, T.Any]] = {}
    for name in cp.sections():
        if name not in KEYS:
            raise ConfigError(f"unknown section [{name}], expected one of {list(KEYS)}")
        known = KEYS[name]
        values[name] = {}
        for key in cp[name]:
            if key not in known:
                raise ConfigError(f"unknown key {key} in [{name}], expected one of {list(known)}")
            values[name][key] = _convert(cp[name], key, known[key])

    out = values.get("outputs", {})
    if "snapshots" in out:
        out["snapshots"] = _snapshots(out["snapshots"])
    if "directory" in out:
        d = Path(out["directory"]).expanduser()
        if base is not None and not d.is_absolute():
            d = base / d
        out["directory"] = d
    elif base is not None:
        out["directory"] = base

    try:
        cfg = RunConfig(
            market=MarketParams(**values.get("market", {})),
            grid=GridSpec(**values.get("grid", {})),
            model=ModelSpec(**values.get("model", {})),
            iteration=IterationConfig(**values.get("iteration", {})),
            outputs=OutputSpec(**out),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e))

    for tau in cfg.outputs.snapshots:
        if not 0 <= tau <= cfg.market.T:
            raise ConfigError(f"snapshot tau={tau} outside [0, T={cfg.market.T}]")

    return cfg


def load_config(fn: T.TextIO | str | Path) -> RunConfig:
    """read a configuration file or text stream"""
    if isinstance(fn, io.StringIO):
        fn.seek(0)
        return parse_config(fn.read())

    fn = Path(fn).expanduser()
    if not fn.is_file():
        raise FileNotFoundError(fn)

    return parse_config(fn.read_text(), base=fn.parent)
