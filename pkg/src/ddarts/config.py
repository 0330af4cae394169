"""Run configuration: flat ``key = value`` files with command-line overrides.

Precedence is command line > file > defaults.  Lines starting with ``#`` are
comments.  The resolved configuration is written next to every run's
artifacts, so a run can be repeated from its own output directory.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .search.data import ImageDataset, oriented_textures, read_raster
from .search.engine import SearchConfig


class ConfigError(ValueError):
    pass


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    mode: str = "ddarts"
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    w01: float = 7.0
    w_abl: float = 0.5
    parse_method: str = "edge"
    threshold: float = 0.85
    channels: int = 4
    cells: int = 8
    steps: int = 4
    search_space: str = ""          # empty: S, or the start genotype's space
    alpha_lr: float = 3e-4
    weight_lr: float = 0.025
    pretrain_epochs: int = 5
    start: str = ""                 # handcrafted name or genotype file (dartopti)
    early_stop: bool = True
    timing: bool = False
    data: str = ""                  # raster file; empty means synthetic
    data_n: int = 128
    data_classes: int = 2
    data_channels: int = 3
    data_size: int = 8
    data_noise: float = 0.3
    runs: int = 1
    workers: int = 1
    out: str = "runs"
    run_name: str = ""

    def __post_init__(self):
        try:
            self.search_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("data_n", "data_classes", "data_channels", "data_size", "runs", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.data_noise < 0:
            raise ConfigError("data_noise must be >= 0")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def coerce(cls, key: str, raw: str):
        names = {"bool": bool, "int": int, "float": float, "str": str}
        types = {f.name: names.get(f.type, f.type) for f in fields(cls)}
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kind = types[key]
        raw = raw.strip()
        try:
            if kind is bool:
                low = raw.lower()
                if low in _TRUE:
                    return True
                if low in _FALSE:
                    return False
                raise ValueError(raw)
            if kind is int:
                return int(raw)
            if kind is float:
                return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None
        return raw

    @classmethod
    def parse_text(cls, text: str, source: str = "<config>") -> dict:
        values = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{n}: expected key = value")
            k, v = line.split("=", 1)
            values[k.strip()] = cls.coerce(k.strip(), v)
        return values

    @classmethod
    def resolve(cls, path: str | None = None, overrides: dict | None = None) -> "RunConfig":
        values = {}
        if path:
            try:
                with open(path) as fh:
                    values.update(cls.parse_text(fh.read(), path))
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
        for k, v in (overrides or {}).items():
            values[k] = cls.coerce(k, v) if isinstance(v, str) else v
        return cls(**values)

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            mode=self.mode, epochs=self.epochs, batch_size=self.batch_size, cells=self.cells,
            steps=self.steps, channels=self.channels, search_space=self.search_space or None,
            w01=self.w01, w_abl=self.w_abl, alpha_lr=self.alpha_lr, weight_lr=self.weight_lr,
            parse_method=self.parse_method, threshold=self.threshold,
            pretrain_epochs=self.pretrain_epochs, early_stop=self.early_stop, seed=self.seed,
            timing=self.timing)

    def dataset(self) -> ImageDataset:
        if self.data:
            return read_raster(self.data)
        return oriented_textures(self.data_n, self.data_classes, self.data_channels,
                                 self.data_size, self.data_noise, self.seed)

    def default_run_name(self, command: str) -> str:
        if self.run_name:
            return self.run_name
        tag = self.mode if command == "search" else command
        return f"{tag}-seed{self.seed}"
