"""Run configuration: nested dataclasses with a flat dotted-key view.

The flat view (``loss.lambda = 0.95``) is what config files, CLI flags,
and checkpoint snapshots use; the dataclasses are what the code reads.
"""

import json
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

ABLATIONS = (
    "no_base_embedding",
    "no_translinear",
    "no_poscnn",
    "no_pre_attention",
    "no_pos_encoding",
    "plain_ce",
)

EMBED_DIM = 1280
BASE_DIM = 128


@dataclass
class TransLinearConfig:
    d_model: int = 1280
    n_heads: int = 8
    n_layers: int = 4
    d_ff: int = 0  # 0 selects 4 * d_model
    use_pre_attention: bool = True

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ConfigError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.n_layers < 1:
            raise ConfigError("n_layers must be >= 1")

    @property
    def ff_width(self):
        return self.d_ff if self.d_ff else 4 * self.d_model


@dataclass
class PosCNNConfig:
    kernel: int = 3
    channels: int = 0  # 0 selects d_model
    pool_len: int = 1
    use_positional_encoding: bool = True

    def __post_init__(self):
        if self.kernel % 2 == 0:
            raise ConfigError("convolution kernel must be odd for same padding")


@dataclass
class ClassifierHeadConfig:
    conv_channels: int = 4
    conv_kernel: int = 3
    pooled_len: int = 64
    n_classes: int = 2

    def __post_init__(self):
        if self.n_classes != 2:
            raise ConfigError("only binary classification heads are supported")


@dataclass
class LossConfig:
    lambda_: float = 0.95
    beta: float = 1.0
    k: int = 2

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError("beta must be non-negative")


@dataclass
class OptimConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 100
    early_stop_patience: int = 0  # 0 disables early stopping


@dataclass
class DataConfig:
    max_len: int = 512
    flank: int = 16
    train_frac: float = 0.8
    test_frac: float = 0.2
    val_frac_of_train: float = 0.1


@dataclass
class RunConfig:
    model: TransLinearConfig = field(default_factory=TransLinearConfig)
    poscnn: PosCNNConfig = field(default_factory=PosCNNConfig)
    head: ClassifierHeadConfig = field(default_factory=ClassifierHeadConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    data: DataConfig = field(default_factory=DataConfig)
    alpha: float = 0.9
    seed: int = 0
    threshold: float = 0.5
    no_base_embedding: bool = False
    no_translinear: bool = False
    no_poscnn: bool = False
    no_pre_attention: bool = False
    no_pos_encoding: bool = False
    plain_ce: bool = False

    # effective hyperparameters once ablation toggles are applied
    @property
    def effective_alpha(self):
        return 1.0 if self.no_base_embedding else self.alpha

    @property
    def effective_lambda(self):
        return 1.0 if self.plain_ce else self.loss.lambda_

    @property
    def poscnn_channels(self):
        return self.poscnn.channels if self.poscnn.channels else self.model.d_model


_SECTIONS = ("model", "poscnn", "head", "loss", "optim", "data")

# flat key aliases: the published key differs from the attribute name
_KEY_TO_ATTR = {"loss.lambda": ("loss", "lambda_")}


def _flat_items(cfg):
    for section in _SECTIONS:
        sub = getattr(cfg, section)
        for f in fields(sub):
            key = f"{section}.{f.name}"
            if (section, f.name) == ("loss", "lambda_"):
                key = "loss.lambda"
            yield key, getattr(sub, f.name)
    for f in fields(cfg):
        if f.name in _SECTIONS:
            continue
        yield f.name, getattr(cfg, f.name)


def to_flat(cfg):
    return dict(sorted(_flat_items(cfg)))


def default_flat():
    return to_flat(RunConfig())


def _coerce(key, raw, default):
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "1", "yes", "on"):
            return True
        if text in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return type(default)(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {raw!r}")


def from_flat(flat):
    """Build a RunConfig from a flat mapping; unknown keys are rejected."""
    defaults = default_flat()
    merged = dict(defaults)
    for key, raw in flat.items():
        if key not in defaults:
            raise ConfigError(f"unknown configuration key {key!r}")
        merged[key] = _coerce(key, raw, defaults[key])

    def section(name, cls):
        kwargs = {}
        for f in fields(cls):
            key = f"{name}.{f.name}"
            if (name, f.name) == ("loss", "lambda_"):
                key = "loss.lambda"
            kwargs[f.name] = merged[key]
        return cls(**kwargs)

    top = {k: v for k, v in merged.items() if "." not in k}
    return RunConfig(
        model=section("model", TransLinearConfig),
        poscnn=section("poscnn", PosCNNConfig),
        head=section("head", ClassifierHeadConfig),
        loss=section("loss", LossConfig),
        optim=section("optim", OptimConfig),
        data=section("data", DataConfig),
        **top,
    )


def parse_config_file(path):
    """Read a flat ``key = value`` file; '#' starts a comment."""
    flat = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in stripped.split("=", 1))
            flat[key] = value
    return flat


def config_to_json(cfg):
    return json.dumps(to_flat(cfg), sort_keys=True, separators=(",", ":"))


def config_from_json(text):
    return from_flat(json.loads(text))


def with_ablations(cfg, names):
    """Return a copy of ``cfg`` with the named ablation toggles enabled."""
    updates = {}
    for name in names:
        if name not in ABLATIONS:
            raise ConfigError(
                f"unknown ablation {name!r}; expected one of {', '.join(ABLATIONS)}")
        updates[name] = True
    return replace(cfg, **updates)
