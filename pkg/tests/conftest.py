import numpy as np
import pytest
from omegaconf import OmegaConf

from oracle_kd.config import default_config
from oracle_kd.data.data_module import DataModule
from oracle_kd.data.task import TaskSpec, generate_dataset


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run end-to-end training runs')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: end-to-end training run, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_config(**overrides):
    cfg = default_config()
    small = {
        'task.vocab_size': 4,
        'task.feature_dim': 6,
        'task.min_length': 1,
        'task.max_length': 3,
        'task.min_duration': 3,
        'task.max_duration': 5,
        'data.train_size': 8,
        'data.eval_size': 4,
        'data.batch_size': 4,
        'model.hidden': 8,
        'model.heads': 2,
        'model.ff_dim': 16,
        'model.kernel': 3,
        'model.encoder_layers': 1,
        'model.decoder_layers': 1,
        'model.student_channels': 6,
        'train.teacher_epochs': 1,
        'distill.phase1_epochs': 1,
        'distill.phase2_epochs': 1,
    }
    small.update(overrides)
    return OmegaConf.merge(cfg, OmegaConf.from_dotlist([f'{k}={v}' for k, v in small.items()]))


@pytest.fixture
def tiny_cfg():
    return tiny_config()


@pytest.fixture
def tiny_samples(tiny_cfg):
    return generate_dataset(TaskSpec.from_config(tiny_cfg))


@pytest.fixture
def tiny_datamodule(tiny_cfg, tiny_samples):
    datamodule = DataModule(tiny_cfg, samples=tiny_samples)
    datamodule.setup()
    return datamodule
