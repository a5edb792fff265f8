import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from omegaconf import DictConfig, ListConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

from oracle_kd.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass
class TaskConfig:
    vocab_size: int = 10
    feature_dim: int = 8
    min_duration: int = 3
    max_duration: int = 8
    noise: float = 0.3
    min_length: int = 2
    max_length: int = 10
    seed: int = 0


@dataclass
class DataConfig:
    train_size: int = 512
    eval_size: int = 128
    batch_size: int = 16


@dataclass
class ModelConfig:
    hidden: int = 32
    heads: int = 2
    ff_dim: int = 64
    kernel: int = 5
    strides: List[int] = field(default_factory=lambda: [1, 2, 1, 2])
    encoder_layers: int = 2
    decoder_layers: int = 2
    dropout: float = 0.0
    student_channels: int = 24
    student_separable: bool = True
    conventional_scale: int = 2
    blank_last: bool = True


@dataclass
class OptimConfig:
    name: str = 'adam'
    lr: float = 3e-3
    momentum: float = 0.9
    weight_decay: float = 0.0
    max_grad_norm: float = 1.0
    schedule: str = 'constant'
    warmup: int = 100


@dataclass
class TrainConfig:
    teacher_epochs: int = 20


@dataclass
class DistillConfig:
    kd: str = 'fitnets'
    phase1_epochs: int = 2
    phase2_epochs: int = 20
    reduction: str = 'mean'


@dataclass
class RunConfig:
    seed: int = 0
    task: TaskConfig = field(default_factory=TaskConfig)
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)


CHOICES: Dict[str, Tuple[str, ...]] = {
    'optim.name': ('sgd', 'adam'),
    'optim.schedule': ('constant', 'noam'),
    'distill.kd': ('fitnets', 'kl', 'l2'),
    'distill.reduction': ('mean', 'sum'),
}


def default_config() -> DictConfig:
    cfg = OmegaConf.structured(RunConfig)
    OmegaConf.set_struct(cfg, True)
    return cfg


def schema_keys(cfg: Optional[DictConfig] = None) -> List[str]:
    """Dotted leaf keys of the run configuration; lists count as leaves."""
    cfg = cfg if cfg is not None else default_config()

    def walk(node, prefix: str) -> Iterable[str]:
        for key in node.keys():
            value = node[key]
            dotted = f'{prefix}{key}'
            if isinstance(value, DictConfig):
                yield from walk(value, f'{dotted}.')
            else:
                yield dotted

    return list(walk(cfg, ''))


def parse_assignments(text: str, source: str = '<config>') -> Dict[str, str]:
    """Read `key=value` lines; `#` starts a comment."""
    assignments: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError(f'{source}:{number}: expected key=value, got {raw.strip()!r}')
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigurationError(f'{source}:{number}: empty key')
        if key in assignments:
            raise ConfigurationError(f'{source}:{number}: duplicate key {key}', key=key)
        assignments[key] = value
    return assignments


def build_config(assignments: Dict[str, str], require_all: bool = True) -> DictConfig:
    cfg = default_config()
    known = schema_keys(cfg)

    unknown = [k for k in assignments if k not in known]
    if unknown:
        raise ConfigurationError(f'unknown config key: {unknown[0]}', key=unknown[0])

    if require_all:
        missing = [k for k in known if k not in assignments]
        if missing:
            raise ConfigurationError(f'missing config key: {missing[0]}', key=missing[0])

    try:
        cfg = OmegaConf.merge(cfg, OmegaConf.from_dotlist([f'{k}={v}' for k, v in assignments.items()]))
    except OmegaConfBaseException as e:
        key = getattr(e, 'full_key', None)
        raise ConfigurationError(f'invalid config value for {key}: {e.msg if hasattr(e, "msg") else e}',
                                 key=key) from None

    validate(cfg)
    return cfg


def load_run_config(path: str) -> DictConfig:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f'cannot read config {path}: {e.strerror}') from None
    return build_config(parse_assignments(text, source=path))


def validate(cfg: DictConfig) -> None:
    for key, allowed in CHOICES.items():
        value = OmegaConf.select(cfg, key)
        if value not in allowed:
            raise ConfigurationError(f'{key} must be one of {", ".join(allowed)}, got {value!r}', key=key)

    task = cfg.task
    if task.min_duration < 1 or task.max_duration < task.min_duration:
        raise ConfigurationError('task durations must satisfy 1 <= min_duration <= max_duration',
                                 key='task.min_duration')
    if task.min_length < 0 or task.max_length < task.min_length:
        raise ConfigurationError('task lengths must satisfy 0 <= min_length <= max_length', key='task.min_length')
    if task.vocab_size < 1:
        raise ConfigurationError('task.vocab_size must be positive', key='task.vocab_size')

    model = cfg.model
    if model.hidden % model.heads:
        raise ConfigurationError('model.hidden must be divisible by model.heads', key='model.hidden')
    if model.hidden % 2:
        raise ConfigurationError('model.hidden must be even for sinusoidal positions', key='model.hidden')
    if not isinstance(model.strides, ListConfig) or not model.strides or any(s < 1 for s in model.strides):
        raise ConfigurationError('model.strides must be a non-empty list of positive ints', key='model.strides')


def echo(cfg: DictConfig) -> List[str]:
    """Log every resolved value, one `key=value` per line, and return them."""
    lines = []
    for key in schema_keys(cfg):
        value = OmegaConf.select(cfg, key)
        if isinstance(value, ListConfig):
            value = '[' + ','.join(str(v) for v in value) + ']'
        lines.append(f'{key}={value}')
    logger.info(f'\n{OmegaConf.to_yaml(cfg)}')
    for line in lines:
        logger.info(f'config {line}')
    return lines
