import logging
import logging.config
import sys
from typing import Any, Callable, Dict, Optional

import click
import yaml
from omegaconf import DictConfig

from oracle_kd.config import echo, load_run_config
from oracle_kd.data.file_handler import write_dataset
from oracle_kd.data.task import TaskSpec, generate_dataset
from oracle_kd.errors import (
    CheckpointError, ConfigurationError, GenerationError, InfeasibleAlignmentError, OracleKDError, TrainingDivergedError,
    UsageError
)
from oracle_kd.experiment.experiment import DistillExperiment, EvalExperiment, SweepExperiment, TeacherExperiment
from oracle_kd.paths import DEFAULT_RUN_CONFIG, LOGGING_CONFIG
from oracle_kd.utils import limit_threads

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_INCOMPATIBLE = 5

TEACHER_CHOICES = ('oracle', 'oracle-wo-target', 'oracle-wo-source', 'conventional')


def setup_logging() -> None:
    with open(LOGGING_CONFIG, 'r') as f:
        config = yaml.safe_load(f.read())
    logging.config.dictConfig(config)


def exit_code(error: BaseException) -> int:
    if isinstance(error, TrainingDivergedError):
        return EXIT_DIVERGED
    if isinstance(error, (CheckpointError, OSError)):
        return EXIT_IO
    if isinstance(error, (ConfigurationError, InfeasibleAlignmentError)):
        return EXIT_INCOMPATIBLE
    if isinstance(error, (UsageError, GenerationError)):
        return EXIT_CONFIG
    return 1


def fail(error: BaseException, code: int) -> None:
    click.echo(f'error: {error}', err=True)
    sys.exit(code)


def read_config(path: str, seed: Optional[int] = None, kd: Optional[str] = None) -> DictConfig:
    """Load and echo the run config; flags override file values."""
    try:
        cfg = load_run_config(path)
        if seed is not None:
            cfg.seed = seed
        if kd is not None:
            cfg.distill.kd = kd
    except ConfigurationError as e:
        fail(e, EXIT_CONFIG)
    echo(cfg)
    return cfg


def run(action: Callable[[], Dict[str, Any]]) -> Dict[str, Any]:
    try:
        return action()
    except (OracleKDError, OSError) as e:
        fail(e, exit_code(e))


def print_summary(summary: Dict[str, Any]) -> None:
    for key, value in summary.items():
        if isinstance(value, float):
            value = f'{value:.6f}'
        click.echo(f'{key}\t{value}')


@click.group()
def cli() -> None:
    """Oracle Teacher knowledge distillation for CTC models."""
    setup_logging()


@cli.command('gen-data')
@click.option('--config', 'config_path', required=True, help='key=value run configuration')
@click.option('--out', required=True, help='dataset file to write')
def gen_data(config_path: str, out: str) -> None:
    cfg = read_config(config_path)

    def action():
        with limit_threads():
            samples = generate_dataset(TaskSpec.from_config(cfg))
            size = write_dataset(samples, out)
        return {'samples': len(samples), 'bytes': size, 'train': cfg.data.train_size, 'eval': cfg.data.eval_size}

    print_summary(run(action))


@cli.command('train-teacher')
@click.option('--kind', type=click.Choice(TEACHER_CHOICES), required=True)
@click.option('--config', 'config_path', required=True)
@click.option('--data', 'data_path', required=True)
@click.option('--out', required=True, help='checkpoint to write; the log goes to <out>.log.tsv')
@click.option('--seed', type=int, default=None, help='overrides the seed of the config')
def train_teacher(kind: str, config_path: str, data_path: str, out: str, seed: Optional[int]) -> None:
    cfg = read_config(config_path, seed=seed)
    experiment = TeacherExperiment(cfg, kind.replace('-', '_'), data_path, out)
    print_summary(run(experiment.execute))


@cli.command('distill')
@click.option('--teacher', 'teacher_path', required=True)
@click.option('--config', 'config_path', required=True)
@click.option('--data', 'data_path', required=True)
@click.option('--out', required=True)
@click.option('--kd', type=click.Choice(('fitnets', 'kl', 'l2')), default=None)
@click.option('--seed', type=int, default=None)
@click.option('--compare-baseline', is_flag=True, help='also train the no-KD student and report both CERs')
def distill(teacher_path: str, config_path: str, data_path: str, out: str, kd: Optional[str], seed: Optional[int],
            compare_baseline: bool) -> None:
    cfg = read_config(config_path, seed=seed, kd=kd)
    experiment = DistillExperiment(cfg, teacher_path, data_path, out, compare_baseline)
    print_summary(run(experiment.execute))


@cli.command('eval')
@click.option('--model', 'model_path', required=True)
@click.option('--data', 'data_path', required=True)
@click.option('--config', 'config_path', default=DEFAULT_RUN_CONFIG, show_default=True,
              help='run configuration defining the eval split')
@click.option('--export-heatmap', default=None, help='CSV of frame-wise posteriors')
@click.option('--export-attention', default=None, help='CSV of cross-attention weights (oracle kinds)')
@click.option('--sample', type=int, default=0, show_default=True, help='eval sample to export')
def evaluate(model_path: str, data_path: str, config_path: str, export_heatmap: Optional[str],
             export_attention: Optional[str], sample: int) -> None:
    cfg = read_config(config_path)
    experiment = EvalExperiment(cfg, model_path, data_path, export_heatmap, export_attention, sample)
    print_summary(run(experiment.execute))


@cli.command('sweep')
@click.option('--config', 'config_path', required=True)
@click.option('--data', 'data_path', required=True)
@click.option('--seeds', default='0,1,2', show_default=True, help='comma-separated seeds')
def sweep(config_path: str, data_path: str, seeds: str) -> None:
    try:
        seed_list = [int(s) for s in seeds.split(',') if s.strip()]
    except ValueError:
        raise click.BadParameter(f'not a list of integers: {seeds}', param_hint='--seeds')
    cfg = read_config(config_path)
    summary = run(SweepExperiment(cfg, data_path, seed_list).execute)

    columns = list(summary['mean'])
    click.echo('\t'.join(['seed'] + columns))
    for row in summary['rows']:
        click.echo('\t'.join([str(row['seed'])] + [f'{row[c]:.6f}' for c in columns]))
    click.echo('\t'.join(['mean'] + [f'{summary["mean"][c]:.6f}' for c in columns]))
    click.echo(f'ordering_holds\t{summary["ordering_holds"]}')
    click.echo(f'kd_gain\t{summary["kd_gain"]:.6f}')


def main() -> None:
    cli(prog_name='oracle_kd')


if __name__ == '__main__':
    main()
