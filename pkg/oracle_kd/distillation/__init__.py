from oracle_kd.distillation.ablation import make_ablation_teacher, train_teacher
from oracle_kd.distillation.distiller import DistillPlan, distill, make_strategy, train_baseline
from oracle_kd.distillation.fitnets import FitNets, Projection, fitnets_loss
from oracle_kd.distillation.frame_kl import FrameKL, frame_kl_loss
from oracle_kd.distillation.softmax_l2 import SoftmaxL2, softmax_l2_loss
from oracle_kd.distillation.strategy import KDStrategy
from oracle_kd.distillation.trainer import EpochRecord, Trainer, TrainingLog, train_ctc
