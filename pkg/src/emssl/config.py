"""Experiment configuration: JSON on disk, degrees and centimetres at the boundary."""

import json
from dataclasses import asdict, dataclass, field, fields

from .adaptation import AdaptConfig
from .core import EmsslConfig
from .kinematics import ChainError, KinematicChain, default6


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    repeats: int = 3
    n_goals: int = 0  # 0 -> size of the training split
    layer_dims: list = field(default_factory=lambda: [3, 1024, 512, 256, 128, 6])
    batch_sizes: list = field(default_factory=lambda: [1, 8, 64, 512, 1024])
    thread_counts: list = field(default_factory=lambda: [1, 2, 4, 6, 12])


@dataclass
class ExperimentConfig:
    chain: dict = field(default_factory=lambda: default6(90.0).to_dict())
    layer_dims: list = field(default_factory=lambda: [3, 128, 64, 6])
    n_samples: int = 25000
    n_train: int = 20000
    data_seed: int = 0
    method: str = "emssl"
    baseline_epochs: int = 0  # 0 -> same gradient-step budget as the coordinated loop
    emssl: EmsslConfig = field(default_factory=lambda: EmsslConfig(max_iterations=30))
    bench: BenchConfig = field(default_factory=BenchConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    preset: str = "desk"

    def make_chain(self):
        try:
            return KinematicChain.from_dict(self.chain)
        except (KeyError, ChainError) as exc:
            raise ConfigError(f"invalid chain spec: {exc}") from None

    def validate(self):
        chain = self.make_chain()
        if len(self.layer_dims) < 2 or self.layer_dims[0] != 3:
            raise ConfigError(f"network must take 3 inputs, got layer_dims {self.layer_dims}")
        if self.layer_dims[-1] != chain.n_joints:
            raise ConfigError(f"network outputs {self.layer_dims[-1]} joints, chain has {chain.n_joints}")
        if not 1 <= self.n_train < self.n_samples:
            raise ConfigError("need 1 <= n_train < n_samples")
        if max(self.emssl.infer_batch, self.emssl.train_batch) > self.n_train:
            raise ConfigError("batch sizes must not exceed the training set")
        if self.method not in ("emssl", "direct", "distal"):
            raise ConfigError(f"unknown method {self.method!r}")
        return self

    def baseline_epoch_budget(self):
        return self.baseline_epochs or self.emssl.max_iterations * self.emssl.epochs

    def to_dict(self):
        return asdict(self)

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _build(cls, data, where):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


def from_dict(d):
    d = dict(d)
    sub = {"emssl": EmsslConfig, "bench": BenchConfig, "adapt": AdaptConfig}
    parts = {k: _build(cls, d.pop(k, {}) or {}, k) for k, cls in sub.items()}
    return _build(ExperimentConfig, {**d, **parts}, "config").validate()


def preset(name):
    if name == "desk":
        return ExperimentConfig().validate()
    if name == "paper":
        return ExperimentConfig(
            layer_dims=[3, 1024, 512, 256, 128, 6],
            n_samples=100000,
            n_train=70000,
            emssl=EmsslConfig(max_iterations=200, eval_size=30000),
            preset="paper",
        ).validate()
    raise ConfigError(f"unknown preset {name!r}; use 'desk', 'paper' or a JSON path")


def load(spec):
    """A preset name, or a JSON file whose keys override the preset it names (default desk)."""
    if spec in ("desk", "paper"):
        return preset(spec)
    try:
        with open(spec) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {spec}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {spec} is not valid JSON: {exc}") from None
    base = preset(raw.get("preset", "desk")).to_dict()
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict) and key != "chain":
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return from_dict(base)
