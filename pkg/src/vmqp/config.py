"""Flat typed key-value run configuration.

The config file carries one `key = value` pair per line with `#`
comments. Unknown keys and bad values are rejected with the offending
line number; silent typos in sampler configs are too costly to tolerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .inference import BridgeConfig, PriorSpec, ProposalSpec
from .kernels import KernelSpec
from .model import ParamVector


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple:
    return tuple(float(part) for part in text.split(","))


@dataclass
class RunConfig:
    """All run settings; angle-valued keys are radians, explicit in names."""

    # model
    kernel_family: str = "gaussian"
    kernel_variance: float = 1.0
    kernel_lengthscale: float = 1.0
    kernel_gradient_lengthscale: float | None = None
    kappa: float = 0.0
    nu_rad: float = 0.0
    chi: float | None = None
    # sampler
    n_iter: int = 20000
    burn_in: int = 2000
    thin: int = 10
    slack: float = 0.01
    seed: int = 0
    # fit
    phi_sweeps: int = 5
    dmh_steps: int = 1
    inner_sweeps: int = 50
    bridge_levels: int = 0
    learn_mean: bool = True
    prior_sigma2_scale: float = 1.0
    prior_lengthscale2_scale: float = 1.0
    prior_gradient2_scale: float = 1.0
    prior_kappa_scale: float = 1.0
    step_sigma2: float = 0.1
    step_lengthscale2: float = 0.1
    step_gradient2: float = 0.1
    step_kappa: float = 0.1
    step_nu: float = 0.3
    # diagnostics
    lambda_multipliers: tuple = (1.01, 2.0, 5.0, 10.0)
    sweep_seeds: int = 20
    sweep_iters: int = 2000
    sweep_burn_in: int = 500
    cd_mc_samples: int = 50
    cd_repeats: int = 50
    # split
    split_fraction: float = 0.2

    def validate(self):
        if self.n_iter <= self.burn_in or self.burn_in < 0:
            raise ConfigError("need n_iter > burn_in >= 0")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.slack <= 0:
            raise ConfigError("slack must be positive")
        if self.inner_sweeps < 1:
            raise ConfigError("inner_sweeps must be >= 1")
        if self.bridge_levels < 0:
            raise ConfigError("bridge_levels must be >= 0")
        if self.kappa < 0:
            raise ConfigError("kappa must be >= 0")
        return self

    def kernel_spec(self) -> KernelSpec:
        try:
            return KernelSpec(
                self.kernel_family,
                self.kernel_variance,
                self.kernel_lengthscale,
                self.kernel_gradient_lengthscale,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def param_vector(self) -> ParamVector:
        return ParamVector(self.kernel_spec(), self.kappa, self.nu_rad, self.chi)

    def priors(self) -> PriorSpec:
        return PriorSpec(
            self.prior_sigma2_scale,
            self.prior_lengthscale2_scale,
            self.prior_gradient2_scale,
            self.prior_kappa_scale,
        )

    def proposals(self) -> ProposalSpec:
        return ProposalSpec(
            self.step_sigma2,
            self.step_lengthscale2,
            self.step_gradient2,
            self.step_kappa,
            self.step_nu,
        )

    def bridge(self) -> BridgeConfig:
        return BridgeConfig(self.bridge_levels, self.inner_sweeps)


_PARSERS = {
    str: lambda s: s,
    float: float,
    int: int,
    bool: _parse_bool,
    tuple: _parse_float_list,
}

_OPTIONAL_FLOAT_KEYS = {"kernel_gradient_lengthscale", "chi"}


def _field_types() -> dict:
    types = {}
    for f in fields(RunConfig):
        if f.name in _OPTIONAL_FLOAT_KEYS:
            types[f.name] = float
        elif isinstance(f.default, bool):
            types[f.name] = bool
        elif isinstance(f.default, int):
            types[f.name] = int
        elif isinstance(f.default, float):
            types[f.name] = float
        elif isinstance(f.default, tuple):
            types[f.name] = tuple
        else:
            types[f.name] = str
    return types


def parse_config(path) -> RunConfig:
    """Read a config file, rejecting unknown keys with line numbers."""
    types = _field_types()
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            try:
                values[key] = _PARSERS[types[key]](text)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:  # pragma: no cover - guarded by key check
        raise ConfigError(str(exc)) from None
    if not math.isfinite(cfg.kernel_variance):
        raise ConfigError("kernel_variance must be finite")
    return cfg.validate()
