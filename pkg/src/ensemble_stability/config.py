"""Experiment configuration files (JSON or YAML) with dotted-key overrides."""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from .chain import DEFAULT_COUPLINGS, ChainSpec
from .ensemble import EnsembleSpec
from .measurement import ProtocolSpec
from .runner import ExperimentConfig

EXPERIMENT_DEFAULTS = {
    "heating": {"kind": "canonical", "mode": "random_site_random_axis"},
    "stability": {"kind": "two_peak", "mode": "nn_z"},
}


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChainModel(_Strict):
    n_spins: int
    couplings: tuple[float, float, float] = DEFAULT_COUPLINGS


class EnsembleModel(_Strict):
    kind: Optional[Literal["canonical", "two_peak"]] = None
    t1: float = 0.1
    t2: float = -0.1
    mix_weight: float = 0.5


class ProtocolModel(_Strict):
    mode: Optional[Literal["random_site_random_axis", "nn_z"]] = None
    n_measurements: int = 6
    delay_interval: tuple[float, float] = (0.0, 2.0)
    axis_mode: Literal["xyz_uniform", "sphere_uniform", "fixed"] = "xyz_uniform"
    axis: Union[Literal["x", "y", "z"], tuple[float, float, float]] = "z"


class ConfigModel(_Strict):
    chain: ChainModel
    ensemble: EnsembleModel = EnsembleModel()
    protocol: ProtocolModel = ProtocolModel()
    backend: Literal["density", "typicality"] = "density"
    outcome_mode: Literal["enumerate", "sample"] = "enumerate"
    n_protocol_draws: int = 20
    n_outcome_samples: int = 1
    n_phase_draws: int = 100
    n_bins: int = 100
    master_seed: int = 0
    output_dir: str = "results"


def apply_override(raw: dict, assignment: str) -> None:
    """Apply ``a.b.c=value`` in place; the value is parsed as YAML (numbers, lists, strings)."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {assignment!r}: {part!r} is not a section")
    node[parts[-1]] = yaml.safe_load(value)


def build_config(raw: dict, experiment: Optional[str] = None) -> ExperimentConfig:
    """Validate a raw mapping; a top-level ``n_spins`` is shorthand for ``chain.n_spins``."""
    if "n_spins" in raw:
        raw = dict(raw)
        chain = dict(raw.get("chain") or {})
        if "n_spins" in chain:
            raise ConfigError("n_spins given both at top level and under chain")
        chain["n_spins"] = raw.pop("n_spins")
        raw["chain"] = chain
    try:
        model = ConfigModel.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    defaults = EXPERIMENT_DEFAULTS.get(experiment or "stability", EXPERIMENT_DEFAULTS["stability"])
    try:
        chain = ChainSpec(model.chain.n_spins, tuple(model.chain.couplings))
        ens = model.ensemble
        ensemble = EnsembleSpec(ens.kind or defaults["kind"], ens.t1, ens.t2, ens.mix_weight)
        pr = model.protocol
        protocol = ProtocolSpec(pr.mode or defaults["mode"], pr.n_measurements, tuple(pr.delay_interval),
                                pr.axis_mode, pr.axis)
        return ExperimentConfig(
            chain, ensemble, protocol,
            backend=model.backend, outcome_mode=model.outcome_mode,
            n_protocol_draws=model.n_protocol_draws, n_outcome_samples=model.n_outcome_samples,
            n_phase_draws=model.n_phase_draws, n_bins=model.n_bins,
            master_seed=model.master_seed, output_dir=model.output_dir,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides: Sequence[str] = (), experiment: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    raw = yaml.safe_load(path.read_text()) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    for assignment in overrides:
        apply_override(raw, assignment)
    return build_config(raw, experiment)
