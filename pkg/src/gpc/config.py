"""Run configuration: every tunable of a pipeline run in one flat record.

Config files are UTF-8 ``key = value`` lines (``#`` starts a comment);
unknown keys are rejected.
"""
import dataclasses
from dataclasses import dataclass, fields

from .errors import ConfigError

CHOICES = {
    "covariance_mode": ("full", "diag"),
    "gamma_convention": ("factorial", "gamma"),
    "pca_refresh": ("epoch", "batch"),
    "split_veto": ("any", "all"),
}


@dataclass(frozen=True)
class RunConfig:
    k_init: int | None = None  # None: K^l + round-half-up(K^l / 2)
    prior_kappa: float = 1.0
    prior_nu: float | None = None  # None: d + 2
    prior_psi_scale: float = 1.0
    tau: float = 0.1
    warmup: int = 20
    epochs: int = 200
    patience: int = 15
    pca_dim: int = 128
    sigma_aug: float = 0.1
    lr: float = 0.1
    batch_labelled: int = 64
    batch_unlabelled: int = 64
    covariance_mode: str = "full"
    gamma_convention: str = "factorial"
    pca_refresh: str = "epoch"
    split_veto: str = "all"  # "all": veto only clusters made up entirely of labelled points
    replearn: bool = True
    embed_dim: int | None = None  # encoder output size, None: input size
    seed: int = 0

    def __post_init__(self):
        for key, allowed in CHOICES.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {allowed}, got {getattr(self, key)!r}")
        if self.k_init is not None and self.k_init < 1:
            raise ConfigError("k_init must be positive")
        if self.tau <= 0 or self.warmup < 1 or self.epochs < 0 or self.patience < 1:
            raise ConfigError("tau > 0, warmup >= 1, epochs >= 0 and patience >= 1 are required")
        if self.pca_dim < 1 or self.batch_labelled < 0 or self.batch_unlabelled < 0:
            raise ConfigError("pca_dim must be positive and batch sizes nonnegative")
        if self.sigma_aug < 0 or self.lr < 0 or self.prior_kappa <= 0 or self.prior_psi_scale <= 0:
            raise ConfigError("sigma_aug, lr must be >= 0; prior_kappa, prior_psi_scale > 0")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def train_config(self):
        from .replearn import TrainConfig

        return TrainConfig(
            tau=self.tau, warmup=self.warmup, epochs=self.epochs,
            batch_labelled=self.batch_labelled, batch_unlabelled=self.batch_unlabelled,
            lr=self.lr, sigma_aug=self.sigma_aug, pca_dim=self.pca_dim,
            pca_refresh=self.pca_refresh, seed=self.seed,
        )


def _field_types():
    return {f.name: f.type for f in fields(RunConfig)}


def parse_value(key, raw):
    types = _field_types()
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    t = types[key]
    raw = raw.strip()
    optional = "None" in str(t)
    if optional and raw.lower() in ("none", "auto", ""):
        return None
    try:
        if "bool" in str(t):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in str(t):
            return int(raw)
        if "float" in str(t):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = parse_value(key, raw)
    return values


def load_config(path=None, overrides=None):
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    for key, val in (overrides or {}).items():
        if key not in _field_types():
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    return RunConfig(**values)


def dump_config(cfg):
    lines = []
    for key, val in cfg.to_dict().items():
        lines.append(f"{key} = {'none' if val is None else str(val).lower() if isinstance(val, bool) else val}")
    return "\n".join(lines) + "\n"


def default_k_init(n_labelled_classes):
    """K^l + K^l / 2 rounded half up."""
    kl = int(n_labelled_classes)
    return kl + (kl + 1) // 2
