import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from omegaconf import DictConfig

from oracle_kd.distillation.ablation import train_teacher
from oracle_kd.distillation.distiller import DistillPlan, distill, train_baseline
from oracle_kd.distillation.trainer import TrainingLog
from oracle_kd.errors import ConfigurationError, TrainingDivergedError, UsageError
from oracle_kd.evaluator import (
    Evaluator, check_compatible, is_monotone, source_sensitivity, weighted_key_positions
)
from oracle_kd.exports import export_attention, export_posterior_heatmap
from oracle_kd.experiment.base import Base
from oracle_kd.models.base import TEACHER_KINDS, CTCModel
from oracle_kd.models.factory import build_model, load_model, save_model

logger = logging.getLogger(__name__)

BLANK_SAMPLES = 50


def log_path(out: str) -> str:
    return f'{out}.log.tsv'


def final_loss(log: TrainingLog) -> float:
    return log.last.loss if log.last is not None else float('nan')


def write_partial_log(error: TrainingDivergedError, out: str) -> None:
    if error.log is not None:
        logger.warning(f'Writing the {len(error.log)} epochs logged before divergence to {log_path(out)}')
        error.log.write(log_path(out))


def check_vocab(model: CTCModel, cfg: DictConfig, path: str) -> None:
    if len(model.vocab) != cfg.task.vocab_size:
        raise ConfigurationError(
            f'{path}: model vocabulary has {len(model.vocab)} labels, task.vocab_size is {cfg.task.vocab_size}',
            key='task.vocab_size',
        )


class TeacherExperiment(Base):

    def __init__(self, cfg: DictConfig, kind: str, data_path: str, out: str):
        super().__init__(cfg, data_path)
        if kind not in TEACHER_KINDS:
            raise UsageError(f'unknown teacher kind: {kind}')
        self.kind = kind
        self.out = out

    def run_training(self) -> Dict[str, Any]:
        self.alert(title=f'Training for {self.kind} teacher started!',
                   text=f'Train size: {len(self.datamodule.train_set)}, eval size: {len(self.datamodule.eval_set)}')

        try:
            teacher, log = train_teacher(self.kind, self.cfg, self.datamodule, self.seed)
        except TrainingDivergedError as e:
            write_partial_log(e, self.out)
            raise
        save_model(teacher, self.out)
        log.write(log_path(self.out))

        report = Evaluator(teacher, self.datamodule.eval_dataset()).evaluate()
        summary = {
            'kind': self.kind,
            'parameters': teacher.params.num_parameters(),
            'train_loss': final_loss(log),
            'eval_cer': report.cer,
            'accuracy': report.accuracy,
        }
        self.alert(title='Teacher training finished!', text=str(summary))
        return summary


class DistillExperiment(Base):

    def __init__(self, cfg: DictConfig, teacher_path: str, data_path: str, out: str,
                 compare_baseline: bool = False):
        super().__init__(cfg, data_path)
        self.teacher_path = teacher_path
        self.out = out
        self.compare_baseline = compare_baseline
        self.teacher: Optional[CTCModel] = None
        self.student: Optional[CTCModel] = None
        self.plan: Optional[DistillPlan] = None

    def setup_model(self) -> None:
        logger.info(f'Loading teacher from {self.teacher_path}')
        self.teacher = load_model(self.teacher_path)
        check_vocab(self.teacher, self.cfg, self.teacher_path)
        check_compatible(self.teacher, self.datamodule.samples)
        self.plan = DistillPlan.from_config(self.cfg, self.teacher.kind, self.seed)
        self.student = build_model('student', self.cfg, self.seed)

    def run_training(self) -> Dict[str, Any]:
        self.alert(title=f'Distillation from {self.teacher.kind} teacher started!', text=str(self.plan))

        try:
            log = distill(self.plan, self.teacher, self.student, self.datamodule, self.cfg.optim)
        except TrainingDivergedError as e:
            write_partial_log(e, self.out)
            raise
        save_model(self.student, self.out)
        log.write(log_path(self.out))

        report = Evaluator(self.student, self.datamodule.eval_dataset()).evaluate()
        summary: Dict[str, Any] = {
            'teacher': self.teacher.kind,
            'kd': self.plan.kd,
            'seed': self.seed,
            'train_loss': final_loss(log),
            'eval_cer': report.cer,
            'accuracy': report.accuracy,
        }

        if self.compare_baseline:
            baseline = build_model('student', self.cfg, self.seed)
            train_baseline(baseline, self.datamodule, self.plan, self.cfg.optim)
            baseline_cer = Evaluator(baseline, self.datamodule.eval_dataset()).evaluate().cer
            summary['baseline_cer'] = baseline_cer
            summary['relative_gain'] = (baseline_cer - report.cer) / baseline_cer if baseline_cer else 0.0

        self.alert(title='Distillation finished!', text=str(summary))
        return summary


class EvalExperiment(Base):

    def __init__(self, cfg: DictConfig, model_path: str, data_path: str, heatmap: Optional[str] = None,
                 attention: Optional[str] = None, sample: int = 0):
        super().__init__(cfg, data_path)
        self.model_path = model_path
        self.heatmap = heatmap
        self.attention = attention
        self.sample = sample
        self.model: Optional[CTCModel] = None

    def setup_model(self) -> None:
        self.model = load_model(self.model_path)
        check_vocab(self.model, self.cfg, self.model_path)
        check_compatible(self.model, self.datamodule.samples)
        if self.attention and not self.model.needs_target:
            raise ConfigurationError(f'{self.model_path}: a {self.model.kind} model has no cross attention to export')

    def run_training(self) -> Dict[str, Any]:
        samples = self.datamodule.eval_dataset()
        evaluator = Evaluator(self.model, samples)
        summary: Dict[str, Any] = {'kind': self.model.kind, **evaluator.evaluate().as_dict()}
        summary['blank_fraction'] = evaluator.blank_fraction(BLANK_SAMPLES)
        if self.model.needs_target:
            summary['source_sensitivity'] = source_sensitivity(self.model, samples[:BLANK_SAMPLES])

        if self.heatmap or self.attention:
            if not 0 <= self.sample < len(samples):
                raise UsageError(f'sample {self.sample} outside the eval split of {len(samples)} samples')
            chosen = samples[self.sample]
            out = self.model.predict(chosen.x, chosen.y if self.model.needs_target else None)
            if self.heatmap:
                export_posterior_heatmap(out.grid.data, self.model.vocab, self.heatmap)
                summary['heatmap_rows'] = out.grid.shape[0]
            if self.attention:
                export_attention(out.attention, self.attention)
                summary['attention_monotone'] = is_monotone(weighted_key_positions(out.attention))
        return summary


class SweepExperiment(Base):
    """Every teacher kind, a student distilled from each and a no-KD baseline, per seed."""

    def __init__(self, cfg: DictConfig, data_path: str, seeds: Sequence[int]):
        super().__init__(cfg, data_path)
        if not seeds:
            raise UsageError('a sweep needs at least one seed')
        self.seeds = list(seeds)

    def run_seed(self, seed: int) -> Dict[str, float]:
        self.alert(title=f'Sweep seed {seed} started!')
        eval_set = self.datamodule.eval_dataset()
        row: Dict[str, float] = {'seed': seed}

        for kind in TEACHER_KINDS:
            teacher, _ = train_teacher(kind, self.cfg, self.datamodule, seed)
            evaluator = Evaluator(teacher, eval_set)
            row[f'teacher_{kind}'] = evaluator.evaluate().cer
            row[f'blank_{kind}'] = evaluator.blank_fraction(BLANK_SAMPLES)

            student = build_model('student', self.cfg, seed)
            distill(DistillPlan.from_config(self.cfg, kind, seed), teacher, student, self.datamodule, self.cfg.optim)
            row[f'student_{kind}'] = Evaluator(student, eval_set).evaluate().cer

        baseline = build_model('student', self.cfg, seed)
        train_baseline(baseline, self.datamodule, DistillPlan.from_config(self.cfg, 'oracle', seed), self.cfg.optim)
        row['student_none'] = Evaluator(baseline, eval_set).evaluate().cer
        return row

    def run_training(self) -> Dict[str, Any]:
        rows: List[Dict[str, float]] = [self.run_seed(seed) for seed in self.seeds]
        columns = [c for c in rows[0] if c != 'seed']
        means = {c: float(np.mean([r[c] for r in rows])) for c in columns}

        ordering = means['student_oracle'] <= means['student_oracle_wo_target'] <= means['student_none']
        summary = {
            'rows': rows,
            'mean': means,
            'ordering_holds': bool(ordering),
            'kd_gain': (means['student_none'] - means['student_oracle']) / means['student_none']
            if means['student_none'] else 0.0,
        }
        self.alert(title='Sweep finished!', text=f'mean: {means}')
        return summary
