"""Experiment configuration: flat key-value file with sections.

Every hyperparameter of the pipelines (delay depth, window length, kernel
grid, rank policy, noise level, ramp rates) is a named key; command-line
flags override file keys. Unknown keys are rejected so typos fail fast.
"""

import configparser
from dataclasses import dataclass, field

import numpy as np

from .dmd import KernelSpec
from .errors import ConfigurationError
from .indicators import kernel_indicator_name, parse_indicator_name

__all__ = ["ExperimentConfig", "load_config", "default_config_text"]

_DEFAULTS = {
    "system": {
        "name": "saddle_node",
        "beta0": "1.0",
        "x0": "1.8",
    },
    "simulate": {
        "dt": "0.01",
        "sample_every": "10",
        "sigma": "0.01",
        "seed": "7",
        "t_end": "210.0",
        "rate_min": "-0.02",
        "rate_max": "-0.005",
        "n_tipping": "20",
        "n_null": "20",
        "clamp": "none",
    },
    "analysis": {
        "t_window": "auto",
        "d_hankel": "auto",
        "stride": "auto",
        "max_windows": "48",
        "rank": "auto",
        "indicators": "reskmd_exact, variance, lag1_ac, dmd_max_eig",
        "kernels": "rbf:0.01",
    },
    "output": {
        "directory": "out",
        "workers": "1",
    },
}


@dataclass
class ExperimentConfig:
    """Validated view of one experiment's settings."""

    system: str
    beta0: float
    x0: tuple
    dt: float
    sample_every: int
    sigma: float
    seed: int
    t_end: float
    rate_min: float
    rate_max: float
    n_tipping: int
    n_null: int
    clamp: float
    t_window: int  # None -> half the series
    d_hankel: int  # None -> min(300, t_window // 2)
    stride: int  # None -> capped by max_windows
    max_windows: int
    rank: int  # None -> energy-based truncation
    indicators: list
    kernels: list = field(default_factory=list)
    outdir: str = "out"
    workers: int = 1

    def tipping_rates(self):
        if self.n_tipping < 1:
            return []
        return list(np.linspace(self.rate_min, self.rate_max, self.n_tipping))

    def indicator_names(self):
        return list(self.indicators) + [kernel_indicator_name(k) for k in self.kernels]


def _parse_optional(raw, kind, auto_words=("auto", "none", "")):
    raw = raw.strip().lower()
    if raw in auto_words:
        return None
    return kind(raw)


def _parse_kernels(raw):
    kernels = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            kind, gamma = item.split(":")
            kernels.append(KernelSpec(kind.strip(), float(gamma)))
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"bad kernel entry {item!r}: {exc}") from exc
    return kernels


def load_config(path=None, overrides=()):
    """Load, override and validate an experiment configuration.

    ``overrides`` are ``section.key=value`` strings applied after the
    file; with ``path=None`` the built-in defaults are used.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_dict(_DEFAULTS)
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigurationError(f"config file not found: {path}")
    for item in overrides:
        try:
            target, value = item.split("=", 1)
            section, key = (part.strip() for part in target.strip().split("."))
        except ValueError:
            raise ConfigurationError(
                f"override {item!r} must look like section.key=value"
            ) from None
        if key not in _DEFAULTS.get(section, {}):
            raise ConfigurationError(f"unknown config key {section}.{key}")
        parser.set(section, key, value.strip())

    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _DEFAULTS[section]:
                raise ConfigurationError(f"unknown config key {section}.{key}")

    sys_sec, sim, ana, out = (
        parser["system"],
        parser["simulate"],
        parser["analysis"],
        parser["output"],
    )
    try:
        indicators = [
            name.strip()
            for name in ana["indicators"].split(",")
            if name.strip()
        ]
        for name in indicators:
            parse_indicator_name(name)  # raises on unknown ids
        cfg = ExperimentConfig(
            system=sys_sec["name"].strip(),
            beta0=float(sys_sec["beta0"]),
            x0=tuple(float(v) for v in sys_sec["x0"].split(",")),
            dt=float(sim["dt"]),
            sample_every=int(sim["sample_every"]),
            sigma=float(sim["sigma"]),
            seed=int(sim["seed"]),
            t_end=float(sim["t_end"]),
            rate_min=float(sim["rate_min"]),
            rate_max=float(sim["rate_max"]),
            n_tipping=int(sim["n_tipping"]),
            n_null=int(sim["n_null"]),
            clamp=_parse_optional(sim["clamp"], float),
            t_window=_parse_optional(ana["t_window"], int),
            d_hankel=_parse_optional(ana["d_hankel"], int),
            stride=_parse_optional(ana["stride"], int),
            max_windows=int(ana["max_windows"]),
            rank=_parse_optional(ana["rank"], int),
            indicators=indicators,
            kernels=_parse_kernels(ana["kernels"]),
            outdir=out["directory"].strip(),
            workers=int(out["workers"]),
        )
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config value: {exc}") from exc
    if cfg.system not in ("saddle_node", "hopf"):
        raise ConfigurationError(f"unknown system {cfg.system!r}")
    if not cfg.indicator_names():
        raise ConfigurationError("no indicators configured")
    if cfg.n_tipping < 1 and cfg.n_null < 1:
        raise ConfigurationError("ensemble needs at least one run")
    if cfg.workers < 1:
        raise ConfigurationError("workers must be >= 1")
    return cfg


def default_config_text():
    """Render the built-in defaults as an editable config file."""
    lines = []
    for section, keys in _DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, value in keys.items():
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
